use std::f64::consts::PI;

use nalgebra::{Matrix1, Matrix2, SMatrix, Vector1, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::gaussian::{kalman_correct, mvn_log_density, symmetrize, GaussianBelief};
use super::ObjectState;
use crate::error::{Error, Result};

/// Largest range the sensor reports, in meters.
pub const MAX_RANGE: f64 = 2000.0;

/// A bearing–range observation. In range-only mode `bearing` is NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub bearing: f64,
    pub range: f64,
}

impl Measurement {
    pub const fn new(bearing: f64, range: f64) -> Self {
        Self { bearing, range }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensorMode {
    #[default]
    BearingRange,
    RangeOnly,
}

/// Diagonal measurement-noise covariance, one variance per channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementNoise {
    /// rad²
    pub bearing_var: f64,
    /// m²
    pub range_var: f64,
}

impl Default for MeasurementNoise {
    fn default() -> Self {
        Self {
            bearing_var: (PI / 180.0).powi(2),
            range_var: 25.0,
        }
    }
}

impl MeasurementNoise {
    pub fn zero() -> Self {
        Self {
            bearing_var: 0.0,
            range_var: 0.0,
        }
    }

    pub fn trace(&self) -> f64 {
        self.bearing_var + self.range_var
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            bearing_var: self.bearing_var * factor,
            range_var: self.range_var * factor,
        }
    }

    /// Covariance in `[bearing, range]` order.
    pub fn covariance(&self) -> Matrix2<f64> {
        Matrix2::new(self.bearing_var, 0.0, 0.0, self.range_var)
    }

    fn validate(&self) -> Result<()> {
        if !(self.bearing_var >= 0.0 && self.range_var >= 0.0)
            || !self.bearing_var.is_finite()
            || !self.range_var.is_finite()
        {
            return Err(Error::ParameterDomain(format!(
                "measurement variances must be finite and nonnegative, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeasurementModel {
    #[serde(default)]
    pub mode: SensorMode,
    #[serde(default)]
    pub noise: MeasurementNoise,
}

impl MeasurementModel {
    pub fn new(mode: SensorMode, noise: MeasurementNoise) -> Self {
        Self { mode, noise }
    }

    /// Effective noise trace; the bearing channel does not count in range-only mode.
    pub fn noise_trace(&self) -> f64 {
        match self.mode {
            SensorMode::BearingRange => self.noise.trace(),
            SensorMode::RangeOnly => self.noise.range_var,
        }
    }
}

/// Wraps an angle into `(-π, π]`.
pub(crate) fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Noise-free measurement `R(x)`.
pub fn predict_measurement(state: &ObjectState, mode: SensorMode) -> Result<Measurement> {
    if state.x == 0.0 && state.y == 0.0 {
        return Err(Error::Domain("bearing is undefined at the sensor origin".into()));
    }
    let range = state.x.hypot(state.y);
    let bearing = match mode {
        SensorMode::BearingRange => state.y.atan2(state.x),
        SensorMode::RangeOnly => f64::NAN,
    };
    Ok(Measurement { bearing, range })
}

/// Draws `R(x) + w`. Bearings are wrapped into `(-π, π]` and ranges kept positive.
pub fn measure<R: Rng + ?Sized>(
    state: &ObjectState,
    model: &MeasurementModel,
    rng: &mut R,
) -> Result<Measurement> {
    model.noise.validate()?;
    let clean = predict_measurement(state, model.mode)?;
    let nb: f64 = rng.sample(StandardNormal);
    let nr: f64 = rng.sample(StandardNormal);
    let bearing = match model.mode {
        SensorMode::BearingRange => wrap_angle(clean.bearing + model.noise.bearing_var.sqrt() * nb),
        SensorMode::RangeOnly => f64::NAN,
    };
    let range = (clean.range + model.noise.range_var.sqrt() * nr).abs().max(1e-9);
    Ok(Measurement { bearing, range })
}

/// Log of `N(z; R(x), Q_w)`, with the bearing residual wrapped.
pub fn measurement_log_likelihood(
    z: &Measurement,
    state: &ObjectState,
    model: &MeasurementModel,
) -> f64 {
    let Ok(pred) = predict_measurement(state, model.mode) else {
        return f64::NEG_INFINITY;
    };
    match model.mode {
        SensorMode::BearingRange => {
            let resid = Vector2::new(wrap_angle(z.bearing - pred.bearing), z.range - pred.range);
            mvn_log_density(&resid, &Vector2::zeros(), &model.noise.covariance())
                .unwrap_or(f64::NEG_INFINITY)
        }
        SensorMode::RangeOnly => mvn_log_density(
            &Vector1::new(z.range - pred.range),
            &Vector1::zeros(),
            &Matrix1::new(model.noise.range_var),
        )
        .unwrap_or(f64::NEG_INFINITY),
    }
}

pub fn measurement_likelihood(z: &Measurement, state: &ObjectState, model: &MeasurementModel) -> f64 {
    measurement_log_likelihood(z, state, model).exp()
}

/// Log of the state density `f(x | θ) = N(x; μ, Σ)`; `-inf` if `Σ` is not PD.
pub fn emission_log_density(state: &ObjectState, theta: &super::ClusterParam) -> f64 {
    mvn_log_density(&state.to_vector(), &theta.mean, &theta.cov).unwrap_or(f64::NEG_INFINITY)
}

pub fn emission_density(state: &ObjectState, theta: &super::ClusterParam) -> f64 {
    emission_log_density(state, theta).exp()
}

/// Position implied by a bearing–range pair.
pub fn polar_to_position(z: &Measurement) -> [f64; 2] {
    [z.range * z.bearing.cos(), z.range * z.bearing.sin()]
}

fn jacobian_bearing_range(x: f64, y: f64) -> SMatrix<f64, 2, 5> {
    let r2 = x * x + y * y;
    let r = r2.sqrt();
    let mut h = SMatrix::<f64, 2, 5>::zeros();
    h[(0, 0)] = -y / r2;
    h[(0, 2)] = x / r2;
    h[(1, 0)] = x / r;
    h[(1, 2)] = y / r;
    h
}

fn jacobian_range(x: f64, y: f64) -> SMatrix<f64, 1, 5> {
    let r = x.hypot(y);
    let mut h = SMatrix::<f64, 1, 5>::zeros();
    h[(0, 0)] = x / r;
    h[(0, 2)] = y / r;
    h
}

/// Log of the linearized predictive `N(z; R(μ), J Σ Jᵀ + Q_w)` for a state
/// distributed as `belief`.
pub fn predictive_log_likelihood(
    z: &Measurement,
    belief: &GaussianBelief,
    model: &MeasurementModel,
) -> f64 {
    let mu = ObjectState::from_vector(&belief.mean);
    let Ok(pred) = predict_measurement(&mu, model.mode) else {
        return f64::NEG_INFINITY;
    };
    match model.mode {
        SensorMode::BearingRange => {
            let h = jacobian_bearing_range(mu.x, mu.y);
            let s = symmetrize(&(h * belief.cov * h.transpose() + model.noise.covariance()));
            let resid = Vector2::new(wrap_angle(z.bearing - pred.bearing), z.range - pred.range);
            mvn_log_density(&resid, &Vector2::zeros(), &s).unwrap_or(f64::NEG_INFINITY)
        }
        SensorMode::RangeOnly => {
            let h = jacobian_range(mu.x, mu.y);
            let s = h * belief.cov * h.transpose() + Matrix1::new(model.noise.range_var);
            mvn_log_density(&Vector1::new(z.range - pred.range), &Vector1::zeros(), &s)
                .unwrap_or(f64::NEG_INFINITY)
        }
    }
}

/// Extended Kalman correction of `prior` by one measurement, linearized at
/// the prior mean.
pub fn ekf_update(
    prior: &GaussianBelief,
    z: &Measurement,
    model: &MeasurementModel,
) -> Result<GaussianBelief> {
    let mu = ObjectState::from_vector(&prior.mean);
    let pred = predict_measurement(&mu, model.mode)?;
    match model.mode {
        SensorMode::BearingRange => {
            let innov = Vector2::new(wrap_angle(z.bearing - pred.bearing), z.range - pred.range);
            kalman_correct(
                prior,
                &innov,
                &jacobian_bearing_range(mu.x, mu.y),
                &model.noise.covariance(),
            )
        }
        SensorMode::RangeOnly => kalman_correct(
            prior,
            &Vector1::new(z.range - pred.range),
            &jacobian_range(mu.x, mu.y),
            &Matrix1::new(model.noise.range_var),
        ),
    }
}
