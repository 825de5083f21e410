use std::f64::consts::PI;

use nalgebra::{Matrix5, Vector5};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::dynamics::{
    sample_mvn, ClusterParam, Measurement, MeasurementModel, SensorMode, MAX_RANGE,
};
use crate::error::{Error, Result};

const DIM: f64 = 5.0;

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Normal-inverse-Wishart base with isotropic hyperparameters:
/// `Σ ~ IW(ν, ψ I)`, `μ | Σ ~ N(μ0 1, Σ / κ0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Niw {
    pub mu0: f64,
    pub kappa0: f64,
    pub nu: f64,
    pub psi_scale: f64,
}

impl Default for Niw {
    fn default() -> Self {
        Self {
            mu0: 0.001,
            kappa0: 1e-3,
            nu: 50.0,
            psi_scale: 1.0,
        }
    }
}

impl Niw {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa0 > 0.0) {
            return Err(Error::ParameterDomain(format!(
                "NIW kappa0 must be positive for a proper base, got {}",
                self.kappa0
            )));
        }
        if !(self.nu > DIM + 1.0) {
            return Err(Error::ParameterDomain(format!(
                "NIW degrees of freedom must exceed {}, got {}",
                DIM + 1.0,
                self.nu
            )));
        }
        if !(self.psi_scale > 0.0) || !self.mu0.is_finite() {
            return Err(Error::ParameterDomain("NIW scale must be positive".into()));
        }
        Ok(())
    }

    pub fn mean_vector(&self) -> Vector5<f64> {
        Vector5::repeat(self.mu0)
    }

    /// `E[Σ] = ψ I / (ν - p - 1)`.
    pub fn expected_cov(&self) -> Matrix5<f64> {
        Matrix5::identity() * (self.psi_scale / (self.nu - DIM - 1.0))
    }

    /// Draws `Σ ~ IW(ν, ψ I)` through the Bartlett decomposition of its inverse.
    pub fn sample_cov<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Matrix5<f64>> {
        inverse_wishart(self.nu, self.psi_scale, rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ClusterParam> {
        self.validate()?;
        let cov = self.sample_cov(rng)?;
        let mean = sample_mvn(&self.mean_vector(), &(cov / self.kappa0), rng)?;
        ClusterParam::new(mean, cov)
    }

    /// Variance of one position coordinate of `x ~ f(x | θ)`, `θ ~ H`,
    /// moment-matched to a Gaussian.
    fn position_variance(&self) -> f64 {
        self.expected_cov()[(0, 0)] * (1.0 + 1.0 / self.kappa0)
    }
}

fn inverse_wishart<R: Rng + ?Sized>(nu: f64, psi_scale: f64, rng: &mut R) -> Result<Matrix5<f64>> {
    // W = L A Aᵀ Lᵀ ~ Wishart(ν, Ψ⁻¹) with L = chol(Ψ⁻¹) = I / sqrt(ψ)
    let mut a = Matrix5::<f64>::zeros();
    for i in 0..5 {
        let chi = ChiSquared::new(nu - i as f64)
            .map_err(|e| Error::ParameterDomain(format!("Wishart degrees of freedom: {e}")))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample(StandardNormal);
        }
    }
    let w = a * a.transpose() / psi_scale;
    let chol = w
        .cholesky()
        .ok_or_else(|| Error::ParameterDomain("Wishart draw is singular".into()))?;
    let cov = chol.inverse();
    Ok((cov + cov.transpose()) * 0.5)
}

/// Birth base spreading cluster means uniformly over the sensor's field of
/// view. Means of the velocity and turn-rate components are `mu0`, and the
/// cluster covariance adds kinematic spread to an inverse-Wishart draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowBase {
    pub max_range: f64,
    pub bearing_min: f64,
    pub bearing_max: f64,
    pub mu0: f64,
    pub nu: f64,
    pub psi_scale: f64,
    /// m/s
    pub sigma_v: f64,
    /// rad/s
    pub sigma_omega: f64,
}

impl Default for WindowBase {
    fn default() -> Self {
        Self {
            max_range: MAX_RANGE,
            bearing_min: -PI / 2.0,
            bearing_max: PI / 2.0,
            mu0: 0.001,
            nu: 50.0,
            psi_scale: 1.0,
            sigma_v: 15.0,
            sigma_omega: PI / 180.0,
        }
    }
}

impl WindowBase {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_range > 0.0) {
            return Err(Error::ParameterDomain("window max_range must be positive".into()));
        }
        if !(self.bearing_min < self.bearing_max)
            || self.bearing_min < -PI
            || self.bearing_max > PI
        {
            return Err(Error::ParameterDomain(format!(
                "window bearing sector [{}, {}] is not a sub-interval of [-π, π]",
                self.bearing_min, self.bearing_max
            )));
        }
        if !(self.nu > DIM + 1.0) || !(self.psi_scale > 0.0) {
            return Err(Error::ParameterDomain("window inverse-Wishart is improper".into()));
        }
        if !(self.sigma_v >= 0.0) || !(self.sigma_omega >= 0.0) {
            return Err(Error::ParameterDomain("window spreads must be nonnegative".into()));
        }
        Ok(())
    }

    fn sector_width(&self) -> f64 {
        self.bearing_max - self.bearing_min
    }

    fn area(&self) -> f64 {
        0.5 * self.sector_width() * self.max_range * self.max_range
    }

    fn expected_position_variance(&self) -> f64 {
        self.psi_scale / (self.nu - DIM - 1.0)
    }

    pub fn kinematic_spread(&self) -> Matrix5<f64> {
        let v = self.sigma_v * self.sigma_v;
        Matrix5::from_diagonal(&Vector5::new(0.0, v, 0.0, v, self.sigma_omega.powi(2)))
    }

    pub fn sample_cov<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Matrix5<f64>> {
        Ok(inverse_wishart(self.nu, self.psi_scale, rng)? + self.kinematic_spread())
    }

    pub fn mean_at(&self, x: f64, y: f64) -> Vector5<f64> {
        Vector5::new(x, self.mu0, y, self.mu0, self.mu0)
    }

    /// Log-density of the position part of the cluster mean.
    pub fn position_log_density(&self, x: f64, y: f64) -> f64 {
        let r = x.hypot(y);
        let b = y.atan2(x);
        if r < self.max_range && b >= self.bearing_min && b <= self.bearing_max {
            -self.area().ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ClusterParam> {
        self.validate()?;
        let r = self.max_range * rng.random::<f64>().sqrt();
        let b = self.bearing_min + self.sector_width() * rng.random::<f64>();
        let cov = self.sample_cov(rng)?;
        ClusterParam::new(self.mean_at(r * b.cos(), r * b.sin()), cov)
    }

    fn marginal_log_likelihood(&self, z: &Measurement, model: &MeasurementModel) -> f64 {
        let spread = self.expected_position_variance();
        let sr = (model.noise.range_var + spread).sqrt();
        let r = z.range.max(0.0);
        let range_part =
            (2.0 * r / (self.max_range * self.max_range)) * normal_cdf((self.max_range - r) / sr);
        match model.mode {
            SensorMode::RangeOnly => range_part.ln(),
            SensorMode::BearingRange => {
                let sb = (model.noise.bearing_var + spread / (r * r).max(1.0)).sqrt();
                let bearing_part = (normal_cdf((self.bearing_max - z.bearing) / sb)
                    - normal_cdf((self.bearing_min - z.bearing) / sb))
                    / self.sector_width();
                (range_part * bearing_part).ln()
            }
        }
    }
}

/// The base measure `H` over cluster parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BaseMeasure {
    Niw(Niw),
    Window(WindowBase),
}

impl Default for BaseMeasure {
    fn default() -> Self {
        BaseMeasure::Niw(Niw::default())
    }
}

impl BaseMeasure {
    pub fn validate(&self) -> Result<()> {
        match self {
            BaseMeasure::Niw(n) => n.validate(),
            BaseMeasure::Window(w) => w.validate(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ClusterParam> {
        match self {
            BaseMeasure::Niw(n) => n.sample(rng),
            BaseMeasure::Window(w) => w.sample(rng),
        }
    }

    /// Log of the prior predictive density of one measurement from a fresh
    /// cluster, `∫ R(z | θ) dH(θ)`, evaluated in closed form from the
    /// position marginal of `H` pushed through the polar change of variables.
    pub fn marginal_log_likelihood(&self, z: &Measurement, model: &MeasurementModel) -> f64 {
        match self {
            BaseMeasure::Window(w) => w.marginal_log_likelihood(z, model),
            BaseMeasure::Niw(n) => {
                let var = n.position_variance() + model.noise.range_var;
                let log_pos = |b: f64| {
                    let dx = z.range * b.cos() - n.mu0;
                    let dy = z.range * b.sin() - n.mu0;
                    -(dx * dx + dy * dy) / (2.0 * var) - (2.0 * PI * var).ln()
                };
                let log_r = z.range.max(f64::MIN_POSITIVE).ln();
                match model.mode {
                    SensorMode::BearingRange => log_pos(z.bearing) + log_r,
                    SensorMode::RangeOnly => {
                        let k = 512;
                        let h = 2.0 * PI / k as f64;
                        let terms: Vec<f64> =
                            (0..k).map(|i| log_pos(-PI + (i as f64 + 0.5) * h)).collect();
                        let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        max + (terms.iter().map(|t| (t - max).exp()).sum::<f64>() * h).ln() + log_r
                    }
                }
            }
        }
    }
}
