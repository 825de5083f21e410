use std::f64::consts::PI;

use nalgebra::{Matrix5, Vector5};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gaussian::sample_mvn;
use super::ObjectState;
use crate::error::Result;

/// Below this turn rate the CTM matrix switches to its constant-velocity limit.
const SMALL_TURN: f64 = 1e-8;

/// Coordinated-turn transition matrix for a unit time step.
pub fn ctm_matrix(omega: f64) -> Matrix5<f64> {
    let (s, c) = omega.sin_cos();
    let (a, b) = if omega.abs() < SMALL_TURN {
        (1.0, 0.0)
    } else {
        (s / omega, (1.0 - c) / omega)
    };
    #[rustfmt::skip]
    let d = Matrix5::new(
        1.0, a,   0.0, -b,  0.0,
        0.0, c,   0.0, -s,  0.0,
        0.0, b,   1.0, a,   0.0,
        0.0, s,   0.0, c,   0.0,
        0.0, 0.0, 0.0, 0.0, 1.0,
    );
    d
}

/// Jacobian of `x -> ctm_matrix(x.omega) * x`, including the turn-rate column.
pub fn ctm_jacobian(state: &Vector5<f64>) -> Matrix5<f64> {
    let (vx, vy, w) = (state[1], state[3], state[4]);
    let (s, c) = w.sin_cos();
    // derivatives of sin(w)/w and (1-cos(w))/w
    let (da, db) = if w.abs() < 1e-4 {
        (-w / 3.0, 0.5 - w * w / 8.0)
    } else {
        ((w * c - s) / (w * w), (w * s - (1.0 - c)) / (w * w))
    };
    let mut j = ctm_matrix(w);
    j[(0, 4)] = da * vx - db * vy;
    j[(1, 4)] = -s * vx - c * vy;
    j[(2, 4)] = db * vx + da * vy;
    j[(3, 4)] = c * vx - s * vy;
    j
}

/// Process-noise parameters: acceleration deviation `sigma` (m/s²) and
/// turn-rate deviation `sigma_u` (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionNoise {
    pub sigma: f64,
    pub sigma_u: f64,
}

impl Default for MotionNoise {
    fn default() -> Self {
        Self {
            sigma: 15.0,
            sigma_u: PI / 180.0,
        }
    }
}

impl MotionNoise {
    pub fn zero() -> Self {
        Self {
            sigma: 0.0,
            sigma_u: 0.0,
        }
    }

    /// The block-structured covariance `Q_u`.
    pub fn covariance(&self) -> Matrix5<f64> {
        let s2 = self.sigma * self.sigma;
        let mut q = Matrix5::zeros();
        for base in [0, 2] {
            q[(base, base)] = s2 / 4.0;
            q[(base, base + 1)] = s2 / 2.0;
            q[(base + 1, base)] = s2 / 2.0;
            q[(base + 1, base + 1)] = s2;
        }
        q[(4, 4)] = self.sigma_u * self.sigma_u;
        q
    }
}

/// Draws `D(omega) x + u` with `u ~ N(0, noise_cov)`.
pub fn propagate<R: Rng + ?Sized>(
    state: &ObjectState,
    noise_cov: &Matrix5<f64>,
    rng: &mut R,
) -> Result<ObjectState> {
    let mean = ctm_matrix(state.omega) * state.to_vector();
    let next = sample_mvn(&mean, noise_cov, rng)?;
    Ok(ObjectState::from_vector(&next))
}
