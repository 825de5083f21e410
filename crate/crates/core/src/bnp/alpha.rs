use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `Γ(shape, rate)` hyperprior on the concentration parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn validate(&self) -> Result<()> {
        if self.shape > 0.0 && self.rate > 0.0 {
            Ok(())
        } else {
            Err(Error::ParameterDomain(format!(
                "Gamma prior needs positive shape and rate, got {self:?}"
            )))
        }
    }
}

/// One auxiliary-variable update of `α` given `k` clusters among `n` items
/// (Escobar & West, 1995).
pub fn resample_concentration<R: Rng + ?Sized>(
    alpha: f64,
    k: usize,
    n: usize,
    prior: &GammaPrior,
    rng: &mut R,
) -> Result<f64> {
    prior.validate()?;
    if n == 0 {
        let g = Gamma::new(prior.shape, 1.0 / prior.rate)
            .map_err(|e| Error::ParameterDomain(e.to_string()))?;
        return Ok(g.sample(rng));
    }
    let eta = Beta::new(alpha + 1.0, n as f64)
        .map_err(|e| Error::ParameterDomain(e.to_string()))?
        .sample(rng)
        .max(f64::MIN_POSITIVE);
    let rate = prior.rate - eta.ln();
    let odds = (prior.shape + k as f64 - 1.0) / (n as f64 * rate);
    let shape = if rng.random::<f64>() < odds / (1.0 + odds) {
        prior.shape + k as f64
    } else {
        prior.shape + k as f64 - 1.0
    };
    let g = Gamma::new(shape.max(f64::MIN_POSITIVE), 1.0 / rate)
        .map_err(|e| Error::ParameterDomain(e.to_string()))?;
    Ok(g.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bnp::{sequential_partition, PriorModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn prior_is_invariant_under_the_joint_chain() {
        // alternate α | k and k | α; the α marginal must stay at the prior
        let prior = GammaPrior { shape: 2.0, rate: 1.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n_items = 20;
        let mut alpha = 2.0;
        let mut acc = 0.0;
        let iters = 40_000;
        for _ in 0..iters {
            let k = sequential_partition(n_items, &PriorModel::Ddp { alpha }, &mut rng)
                .unwrap()
                .len();
            alpha = resample_concentration(alpha, k, n_items, &prior, &mut rng).unwrap();
            acc += alpha;
        }
        let mean = acc / iters as f64;
        assert!((mean - prior.mean()).abs() < 0.1, "{mean}");
    }
}
