use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::bnp::{BaseMeasure, WindowBase};
use crate::dynamics::{
    ekf_update, predictive_log_likelihood, ClusterParam, GaussianBelief, Measurement,
    MeasurementModel, SensorMode,
};
use crate::error::Result;

/// `log p(z_1, …, z_n | θ)` by sequential linearized prediction and update.
pub fn collapsed_log_likelihood(
    belief: &GaussianBelief,
    measurements: &[Measurement],
    model: &MeasurementModel,
) -> f64 {
    let mut b = *belief;
    let mut total = 0.0;
    for (i, z) in measurements.iter().enumerate() {
        total += predictive_log_likelihood(z, &b, model);
        if !total.is_finite() {
            return f64::NEG_INFINITY;
        }
        if i + 1 < measurements.len() {
            match ekf_update(&b, z, model) {
                Ok(next) => b = next,
                Err(_) => return f64::NEG_INFINITY,
            }
        }
    }
    total
}

/// Position proposal in polar coordinates centered on the first measurement.
struct PolarProposal {
    range: f64,
    range_sd: f64,
    /// `Some((center, sd))` for a Gaussian bearing, `None` for uniform over the window sector.
    bearing: Option<(f64, f64)>,
    sector: (f64, f64),
}

impl PolarProposal {
    fn new(z: &Measurement, window: &WindowBase, model: &MeasurementModel) -> Self {
        let spread = window.psi_scale / (window.nu - 6.0);
        // widened so the proposal covers the tilted density's tails
        let range_sd = 2.0 * (model.noise.range_var + spread).sqrt();
        let bearing = match model.mode {
            SensorMode::BearingRange => Some((
                z.bearing,
                2.0 * (model.noise.bearing_var + spread / (z.range * z.range).max(1.0)).sqrt(),
            )),
            SensorMode::RangeOnly => None,
        };
        Self {
            range: z.range,
            range_sd,
            bearing,
            sector: (window.bearing_min, window.bearing_max),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let e: f64 = rng.sample(StandardNormal);
        let r = self.range + self.range_sd * e;
        let b = match self.bearing {
            Some((c, sd)) => c + sd * rng.sample::<f64, _>(StandardNormal),
            None => self.sector.0 + (self.sector.1 - self.sector.0) * rng.random::<f64>(),
        };
        (r * b.cos(), r * b.sin())
    }

    /// Log-density of the proposal at Cartesian position `(x, y)`.
    fn log_density(&self, x: f64, y: f64) -> f64 {
        let r = x.hypot(y);
        let b = y.atan2(x);
        let log_normal = |v: f64, c: f64, sd: f64| {
            -0.5 * ((v - c) / sd).powi(2) - sd.ln() - 0.5 * (2.0 * PI).ln()
        };
        let lb = match self.bearing {
            Some((c, sd)) => {
                let d = crate::dynamics::wrap_angle(b - c);
                log_normal(d, 0.0, sd)
            }
            None => -(self.sector.1 - self.sector.0).ln(),
        };
        // the polar-to-Cartesian Jacobian contributes 1/r
        log_normal(r, self.range, self.range_sd) + lb - r.ln()
    }
}

/// Independence Metropolis–Hastings over `θ` targeting
/// `H(θ) Π R(z_i | θ)`. Starts from `start` when given, otherwise from a
/// proposal draw, and returns the last accepted state.
fn tilted_chain<R: Rng + ?Sized>(
    start: Option<&ClusterParam>,
    measurements: &[Measurement],
    base: &BaseMeasure,
    model: &MeasurementModel,
    proposals: usize,
    rng: &mut R,
) -> Result<ClusterParam> {
    if measurements.is_empty() {
        return match start {
            Some(theta) if proposals == 0 => Ok(theta.clone()),
            _ => base.sample(rng),
        };
    }
    let loglik = |theta: &ClusterParam| collapsed_log_likelihood(&theta.belief(), measurements, model);
    match base {
        BaseMeasure::Niw(_) => {
            // prior proposals: the acceptance ratio is the likelihood ratio
            let mut current = match start {
                Some(theta) => theta.clone(),
                None => base.sample(rng)?,
            };
            let mut current_ll = loglik(&current);
            for _ in 0..proposals {
                let cand = base.sample(rng)?;
                let cand_ll = loglik(&cand);
                if accept(cand_ll - current_ll, current_ll, rng) {
                    current = cand;
                    current_ll = cand_ll;
                }
            }
            Ok(current)
        }
        BaseMeasure::Window(w) => {
            let q = PolarProposal::new(&measurements[0], w, model);
            // velocity, turn-rate and covariance come from the prior, so only
            // the position factor of H enters the importance weight
            let draw = |rng: &mut R| -> Result<(ClusterParam, f64)> {
                let (x, y) = q.sample(rng);
                let theta = ClusterParam::new(w.mean_at(x, y), w.sample_cov(rng)?)?;
                let lw = weight(&theta, w, &q, &loglik);
                Ok((theta, lw))
            };
            let (mut current, mut current_lw) = match start {
                Some(theta) => (theta.clone(), weight(theta, w, &q, &loglik)),
                None => draw(rng)?,
            };
            let steps = if start.is_some() { proposals } else { proposals.saturating_sub(1) };
            for _ in 0..steps {
                let (cand, cand_lw) = draw(rng)?;
                if accept(cand_lw - current_lw, current_lw, rng) {
                    current = cand;
                    current_lw = cand_lw;
                }
            }
            Ok(current)
        }
    }
}

fn weight(
    theta: &ClusterParam,
    w: &WindowBase,
    q: &PolarProposal,
    loglik: &impl Fn(&ClusterParam) -> f64,
) -> f64 {
    let (x, y) = (theta.mean[0], theta.mean[2]);
    let prior = w.position_log_density(x, y);
    if prior == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    prior + loglik(theta) - q.log_density(x, y)
}

fn accept<R: Rng + ?Sized>(log_ratio: f64, current: f64, rng: &mut R) -> bool {
    if current == f64::NEG_INFINITY {
        return true;
    }
    if log_ratio.is_nan() {
        return false;
    }
    log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio
}

/// Draws a fresh atom from the base tilted by the likelihood of
/// `measurements` (normally a single one).
pub fn sample_new_cluster_param<R: Rng + ?Sized>(
    measurements: &[Measurement],
    base: &BaseMeasure,
    model: &MeasurementModel,
    proposals: usize,
    rng: &mut R,
) -> Result<ClusterParam> {
    tilted_chain(None, measurements, base, model, proposals, rng)
}

/// Metropolis refresh of an existing atom of a cluster born at this step.
pub fn refresh_cluster_param<R: Rng + ?Sized>(
    current: &ClusterParam,
    measurements: &[Measurement],
    base: &BaseMeasure,
    model: &MeasurementModel,
    proposals: usize,
    rng: &mut R,
) -> Result<ClusterParam> {
    tilted_chain(Some(current), measurements, base, model, proposals, rng)
}
