use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};

pub const DEFAULT_TRUNCATION: usize = 200;

/// A truncated stick-breaking draw `Σ π_ℓ δ_{θ_ℓ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StickBreaking<A> {
    pub weights: Vec<f64>,
    pub atoms: Vec<A>,
    pub truncation_level: usize,
    pub discount: f64,
    pub concentration: f64,
}

impl<A> StickBreaking<A> {
    /// Mass not assigned to any of the retained sticks.
    pub fn residual_mass(&self) -> f64 {
        (1.0 - self.weights.iter().sum::<f64>()).max(0.0)
    }

    /// Weights with the residual mass folded into the last atom.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let mut w = self.weights.clone();
        if let Some(last) = w.last_mut() {
            *last += self.residual_mass();
        }
        w
    }
}

pub(crate) fn check_hyper(concentration: f64, discount: f64) -> Result<()> {
    if !(0.0..1.0).contains(&discount) {
        return Err(Error::ParameterDomain(format!(
            "discount must lie in [0, 1), got {discount}"
        )));
    }
    if !(concentration > -discount) || !concentration.is_finite() {
        return Err(Error::ParameterDomain(format!(
            "concentration must exceed -discount ({}), got {concentration}",
            -discount
        )));
    }
    Ok(())
}

/// Draws `V_ℓ ~ Beta(1 - d, α + ℓ d)` and `π_ℓ = V_ℓ Π_{l<ℓ} (1 - V_l)`,
/// with atoms drawn i.i.d. from `base_sampler`.
pub fn stick_breaking_sample<A, R, F>(
    concentration: f64,
    discount: f64,
    mut base_sampler: F,
    truncation: usize,
    rng: &mut R,
) -> Result<StickBreaking<A>>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> Result<A>,
{
    check_hyper(concentration, discount)?;
    if concentration <= 0.0 && discount == 0.0 {
        return Err(Error::ParameterDomain(
            "a Dirichlet process needs a positive concentration".into(),
        ));
    }
    if truncation == 0 {
        return Err(Error::ParameterDomain("truncation level must be at least 1".into()));
    }
    let mut weights = Vec::with_capacity(truncation);
    let mut atoms = Vec::with_capacity(truncation);
    let mut remaining = 1.0;
    for ell in 1..=truncation {
        let beta = Beta::new(1.0 - discount, concentration + ell as f64 * discount)
            .map_err(|e| Error::ParameterDomain(format!("stick-breaking Beta: {e}")))?;
        let v = beta.sample(rng);
        weights.push(v * remaining);
        remaining *= 1.0 - v;
        atoms.push(base_sampler(rng)?);
    }
    Ok(StickBreaking {
        weights,
        atoms,
        truncation_level: truncation,
        discount,
        concentration,
    })
}
