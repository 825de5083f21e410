//! Object state, cluster parameters, the coordinated-turn motion model and
//! the bearing–range sensor.

mod gaussian;
mod measurement;
mod motion;

pub use gaussian::{mvn_log_density, psd_factor, sample_mvn, GaussianBelief};
pub use measurement::{
    ekf_update, emission_density, emission_log_density, measure, measurement_likelihood,
    measurement_log_likelihood, polar_to_position, predict_measurement,
    predictive_log_likelihood, Measurement, MeasurementModel, MeasurementNoise, SensorMode,
    MAX_RANGE,
};
pub use motion::{ctm_jacobian, ctm_matrix, propagate, MotionNoise};
pub(crate) use gaussian::symmetrize;
pub(crate) use measurement::wrap_angle;

use nalgebra::{Matrix5, Vector5};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kinematic state `[x, vx, y, vy, omega]` of one object at one time step.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectState {
    pub x: f64,
    pub vx: f64,
    pub y: f64,
    pub vy: f64,
    pub omega: f64,
}

impl ObjectState {
    pub const fn new(x: f64, vx: f64, y: f64, vy: f64, omega: f64) -> Self {
        Self {
            x,
            vx,
            y,
            vy,
            omega,
        }
    }

    pub fn to_vector(&self) -> Vector5<f64> {
        Vector5::new(self.x, self.vx, self.y, self.vy, self.omega)
    }

    pub fn from_vector(v: &Vector5<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4])
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn is_finite(&self) -> bool {
        self.to_vector().iter().all(|v| v.is_finite())
    }
}

/// Cluster parameter: a Gaussian component over the state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterParam {
    pub mean: Vector5<f64>,
    pub cov: Matrix5<f64>,
}

impl ClusterParam {
    /// Builds a parameter, rejecting covariances that are not symmetric
    /// positive definite.
    pub fn new(mean: Vector5<f64>, cov: Matrix5<f64>) -> Result<Self> {
        if !mean.iter().all(|v| v.is_finite()) {
            return Err(Error::ParameterDomain("cluster mean is not finite".into()));
        }
        let asym = (cov - cov.transpose()).abs().max();
        if asym > 1e-9 * cov.abs().max().max(1.0) {
            return Err(Error::ParameterDomain(format!(
                "cluster covariance is not symmetric (max asymmetry {asym:e})"
            )));
        }
        if cov.cholesky().is_none() {
            return Err(Error::ParameterDomain(
                "cluster covariance is not positive definite".into(),
            ));
        }
        Ok(Self { mean, cov })
    }

    pub fn mean_state(&self) -> ObjectState {
        ObjectState::from_vector(&self.mean)
    }

    pub fn belief(&self) -> GaussianBelief {
        GaussianBelief {
            mean: self.mean,
            cov: self.cov,
        }
    }
}
