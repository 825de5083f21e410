use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::TrackingConfig;
use crate::bnp::{BaseMeasure, Choice, ClusterCounts, PriorModel, SelectionMasses, WindowBase};
use crate::dynamics::{
    ekf_update, predictive_log_likelihood, GaussianBelief, Measurement, MeasurementModel,
};
use crate::error::{Error, Result};

/// Hyperparameters shared by the association and Gibbs steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub model: PriorModel,
    pub base: BaseMeasure,
    pub measurement: MeasurementModel,
    /// Metropolis proposals per atom update.
    pub proposals: usize,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            model: PriorModel::Ddp { alpha: 1.0 },
            base: BaseMeasure::Window(WindowBase::default()),
            measurement: MeasurementModel::default(),
            proposals: 10,
        }
    }
}

/// Full conditional of one object's cluster: `xi` over occupied clusters,
/// `beta` over transitioned clusters no other object occupies, and `gamma`
/// for a fresh cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsWeights {
    pub xi: Vec<(usize, f64)>,
    pub beta: Vec<(usize, f64)>,
    pub gamma: f64,
    /// Set when every likelihood underflowed and prior masses were used.
    pub prior_only: bool,
}

impl GibbsWeights {
    pub fn sum(&self) -> f64 {
        self.xi.iter().chain(&self.beta).map(|e| e.1).sum::<f64>() + self.gamma
    }

    pub fn entries(&self) -> Vec<(Choice, f64)> {
        self.xi
            .iter()
            .chain(&self.beta)
            .map(|&(l, w)| (Choice::Existing(l), w))
            .chain(std::iter::once((Choice::New, self.gamma)))
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Choice {
        let entries = self.entries();
        let u = rng.random::<f64>() * self.sum();
        let mut acc = 0.0;
        for &(c, w) in &entries {
            acc += w;
            if u < acc {
                return c;
            }
        }
        entries
            .iter()
            .rev()
            .find(|e| e.1 > 0.0)
            .map_or(Choice::New, |e| e.0)
    }
}

/// Counts seen by `target` when it is treated as the last object seated.
pub(crate) fn counts_without(config: &TrackingConfig, target: usize) -> Vec<ClusterCounts> {
    let cs = &config.cluster_state;
    let own = cs.assignments[target];
    cs.cardinalities
        .iter()
        .zip(&cs.transitioned_cardinalities)
        .zip(&cs.cluster_flags)
        .enumerate()
        .map(|(l, ((&n, &m), &flag))| ClusterCounts {
            seated: if l == own { n - 1 } else { n },
            transitioned: if flag { m } else { 0 },
        })
        .collect()
}

/// Belief over the state of cluster `slot` given its atom and the
/// measurements of its members, optionally leaving one object out.
pub(crate) fn cluster_belief(
    config: &TrackingConfig,
    slot: usize,
    measurements: &[Measurement],
    exclude: Option<usize>,
    model: &MeasurementModel,
) -> Option<GaussianBelief> {
    let mut belief = config.clusters[slot].param.belief();
    for (i, &c) in config.cluster_state.assignments.iter().enumerate() {
        if c != slot || Some(i) == exclude {
            continue;
        }
        if let Some(z) = measurements.get(i) {
            belief = ekf_update(&belief, z, model).ok()?;
        }
    }
    Some(belief)
}

/// Log-likelihood of `z` under a cluster whose state is distributed as `belief`.
pub(crate) fn cluster_log_likelihood(
    belief: Option<&GaussianBelief>,
    z: &Measurement,
    model: &MeasurementModel,
) -> f64 {
    belief.map_or(f64::NEG_INFINITY, |b| predictive_log_likelihood(z, b, model))
}

/// Multiplies prior masses by likelihoods in log space and normalizes.
pub(crate) fn combine(
    masses: &SelectionMasses,
    mut log_lik: impl FnMut(usize) -> f64,
    log_new: f64,
) -> Result<GibbsWeights> {
    let log_w = |m: f64, ll: f64| if m > 0.0 { m.ln() + ll } else { f64::NEG_INFINITY };
    let xi: Vec<(usize, f64)> =
        masses.occupied.iter().map(|&(l, m)| (l, log_w(m, log_lik(l)))).collect();
    let beta: Vec<(usize, f64)> =
        masses.unoccupied.iter().map(|&(l, m)| (l, log_w(m, log_lik(l)))).collect();
    let gamma = log_w(masses.new_cluster, log_new);
    let max = xi
        .iter()
        .chain(&beta)
        .map(|e| e.1)
        .chain(std::iter::once(gamma))
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        let p = masses.clone().normalize()?;
        return Ok(GibbsWeights {
            xi: p.occupied,
            beta: p.unoccupied,
            gamma: p.new_cluster,
            prior_only: true,
        });
    }
    let ex = |v: f64| (v - max).exp();
    let total: f64 = xi.iter().chain(&beta).map(|e| ex(e.1)).sum::<f64>() + ex(gamma);
    let scale = |v: Vec<(usize, f64)>| v.into_iter().map(|(l, w)| (l, ex(w) / total)).collect();
    Ok(GibbsWeights {
        xi: scale(xi),
        beta: scale(beta),
        gamma: ex(gamma) / total,
        prior_only: false,
    })
}

/// Full conditional of the cluster of object `target` (0-based) given every
/// other object's assignment. Objects beyond the end of `measurements` carry
/// no observation and contribute a constant likelihood.
pub fn gibbs_full_conditional(
    target: usize,
    config: &TrackingConfig,
    measurements: &[Measurement],
    hyper: &Hyper,
) -> Result<GibbsWeights> {
    if target >= config.num_objects() {
        return Err(Error::Domain(format!(
            "object {target} out of range for {} objects",
            config.num_objects()
        )));
    }
    let masses = hyper.model.masses(&counts_without(config, target))?;
    match measurements.get(target) {
        None => combine(&masses, |_| 0.0, 0.0),
        Some(z) => {
            let model = &hyper.measurement;
            combine(
                &masses,
                |l| {
                    let b = cluster_belief(config, l, measurements, Some(target), model);
                    cluster_log_likelihood(b.as_ref(), z, model)
                },
                hyper.base.marginal_log_likelihood(z, model),
            )
        }
    }
}
