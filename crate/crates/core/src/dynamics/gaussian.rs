use nalgebra::{DMatrix, Matrix5, SMatrix, SVector, Vector5};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Mean and covariance of a Gaussian over the 5-dim state space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBelief {
    pub mean: Vector5<f64>,
    pub cov: Matrix5<f64>,
}

impl GaussianBelief {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vector5<f64>> {
        sample_mvn(&self.mean, &self.cov, rng)
    }

    /// Renormalized product `N(a, A) N(b, B)`. Only `A + B` needs to be
    /// invertible, so singular factors (such as the CTM process noise) are fine.
    pub fn product(&self, other: &GaussianBelief) -> Result<GaussianBelief> {
        let sum = self.cov + other.cov;
        let chol = sum
            .cholesky()
            .ok_or_else(|| Error::ParameterDomain("sum of covariances is singular".into()))?;
        let gain = chol.solve(&self.cov).transpose();
        let mean = self.mean + gain * (other.mean - self.mean);
        let cov = self.cov - gain * self.cov;
        Ok(GaussianBelief {
            mean,
            cov: symmetrize(&cov),
        })
    }
}

pub(crate) fn symmetrize<const D: usize>(m: &SMatrix<f64, D, D>) -> SMatrix<f64, D, D> {
    (m + m.transpose()) * 0.5
}

/// Square-root factor `L` with `L Lᵀ = cov` for a symmetric PSD matrix.
///
/// Uses an eigendecomposition so rank-deficient covariances are accepted.
pub fn psd_factor<const D: usize>(cov: &SMatrix<f64, D, D>) -> Result<SMatrix<f64, D, D>> {
    let sym = symmetrize(cov);
    let scale = sym.abs().max().max(f64::MIN_POSITIVE);
    if (cov - cov.transpose()).abs().max() > 1e-9 * scale.max(1.0) {
        return Err(Error::ParameterDomain("covariance is not symmetric".into()));
    }
    if let Some(chol) = sym.cholesky() {
        return Ok(chol.l());
    }
    let eig = DMatrix::from_iterator(D, D, sym.iter().copied()).symmetric_eigen();
    let tol = 1e-10 * scale;
    let mut factor = SMatrix::<f64, D, D>::zeros();
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if !lambda.is_finite() || lambda < -tol {
            return Err(Error::ParameterDomain(format!(
                "covariance is not positive semi-definite (eigenvalue {lambda:e})"
            )));
        }
        let root = lambda.max(0.0).sqrt();
        for r in 0..D {
            factor[(r, i)] = eig.eigenvectors[(r, i)] * root;
        }
    }
    Ok(factor)
}

pub fn sample_mvn<R: Rng + ?Sized, const D: usize>(
    mean: &SVector<f64, D>,
    cov: &SMatrix<f64, D, D>,
    rng: &mut R,
) -> Result<SVector<f64, D>> {
    let factor = psd_factor(cov)?;
    let white = SVector::<f64, D>::from_fn(|_, _| rng.sample(StandardNormal));
    Ok(mean + factor * white)
}

/// Log-density of `N(x; mean, cov)`; fails unless `cov` is positive definite.
pub fn mvn_log_density<const D: usize>(
    x: &SVector<f64, D>,
    mean: &SVector<f64, D>,
    cov: &SMatrix<f64, D, D>,
) -> Result<f64> {
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::ParameterDomain("covariance is not positive definite".into()))?;
    let diff = x - mean;
    let solved = chol.l().solve_lower_triangular(&diff).ok_or_else(|| {
        Error::ParameterDomain("covariance factor is singular".into())
    })?;
    let log_det: f64 = chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>() * 2.0;
    Ok(-0.5 * (D as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + solved.norm_squared()))
}

/// One linearized Kalman correction in Joseph form.
pub(crate) fn kalman_correct<const M: usize>(
    prior: &GaussianBelief,
    innovation: &SVector<f64, M>,
    jacobian: &SMatrix<f64, M, 5>,
    noise: &SMatrix<f64, M, M>,
) -> Result<GaussianBelief> {
    let pht = prior.cov * jacobian.transpose();
    let s = jacobian * pht + noise;
    let chol = symmetrize(&s)
        .cholesky()
        .ok_or_else(|| Error::ParameterDomain("innovation covariance is singular".into()))?;
    let gain: SMatrix<f64, 5, M> = chol.solve(&pht.transpose()).transpose();
    let mean = prior.mean + gain * innovation;
    let ikh = Matrix5::identity() - gain * jacobian;
    let cov = ikh * prior.cov * ikh.transpose() + gain * noise * gain.transpose();
    Ok(GaussianBelief {
        mean,
        cov: symmetrize(&cov),
    })
}
