use nalgebra::Matrix5;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use super::base::BaseMeasure;
use super::selection::{Choice, PriorModel};
use super::state::{ClusterCounts, ClusterState};
use crate::dynamics::{
    ctm_jacobian, ctm_matrix, sample_mvn, symmetrize, ClusterParam, GaussianBelief, MotionNoise,
    ObjectState,
};
use crate::error::{Error, Result};
use crate::inference::{Cluster, TrackingConfig};

/// Parameter transition kernel `φ`: the atom's mean follows the motion model
/// with a random-walk jitter of `sigma_phi` on the position components, and
/// its covariance is propagated through the motion Jacobian plus `Q_u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamTransition {
    pub sigma_phi: f64,
}

impl Default for ParamTransition {
    fn default() -> Self {
        Self { sigma_phi: 1.0 }
    }
}

impl ParamTransition {
    /// Deterministic part of the kernel.
    pub fn predict(&self, theta: &ClusterParam, q_u: &Matrix5<f64>) -> GaussianBelief {
        let g = ctm_jacobian(&theta.mean);
        GaussianBelief {
            mean: ctm_matrix(theta.mean[4]) * theta.mean,
            cov: symmetrize(&(g * theta.cov * g.transpose() + q_u)),
        }
    }

    pub fn apply<R: Rng + ?Sized>(
        &self,
        theta: &ClusterParam,
        q_u: &Matrix5<f64>,
        rng: &mut R,
    ) -> Result<ClusterParam> {
        if !(self.sigma_phi >= 0.0) {
            return Err(Error::ParameterDomain(format!(
                "sigma_phi must be nonnegative, got {}",
                self.sigma_phi
            )));
        }
        let mut next = self.predict(theta, q_u);
        for i in [0, 2] {
            let e: f64 = rng.sample(StandardNormal);
            next.mean[i] += self.sigma_phi * e;
        }
        ClusterParam::new(next.mean, next.cov)
    }
}

/// How many newborn objects enter at each step; each forms a new cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BirthModel {
    None,
    Poisson { mean: f64 },
    Fixed { count: usize },
}

impl Default for BirthModel {
    fn default() -> Self {
        BirthModel::Poisson { mean: 0.2 }
    }
}

impl BirthModel {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        match *self {
            BirthModel::None => Ok(0),
            BirthModel::Fixed { count } => Ok(count),
            BirthModel::Poisson { mean } if mean == 0.0 => Ok(0),
            BirthModel::Poisson { mean } => {
                let p = Poisson::new(mean)
                    .map_err(|e| Error::ParameterDomain(format!("birth rate: {e}")))?;
                Ok(p.sample(rng) as usize)
            }
        }
    }
}

/// Kernels used by the prior construction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PriorKernels {
    pub motion: MotionNoise,
    pub transition: ParamTransition,
    pub base: BaseMeasure,
}

/// Result of the survival and cluster-transition stage.
#[derive(Debug, Clone)]
pub struct Transitioned {
    /// Surviving clusters, with identifiers kept and atoms moved by `φ`.
    pub clusters: Vec<Cluster>,
    /// `v*_{l,k|k-1}` for each entry of `clusters`.
    pub cardinalities: Vec<usize>,
    /// `s_{ℓ,k|k-1}` for each previous object.
    pub survival_flags: Vec<bool>,
    /// `(previous object, slot in clusters)` for each survivor, in object order.
    pub survivors: Vec<(usize, usize)>,
}

/// Draws object survival and moves surviving clusters to step `k`.
pub fn transition_clusters<R: Rng + ?Sized>(
    prev: &TrackingConfig,
    survival_prob: f64,
    kernels: &PriorKernels,
    rng: &mut R,
) -> Result<Transitioned> {
    if !(0.0..=1.0).contains(&survival_prob) {
        return Err(Error::ParameterDomain(format!(
            "survival probability must lie in [0, 1], got {survival_prob}"
        )));
    }
    let survival_flags: Vec<bool> = prev
        .cluster_state
        .assignments
        .iter()
        .map(|_| rng.random::<f64>() < survival_prob)
        .collect();
    let mut surviving = vec![0usize; prev.clusters.len()];
    for (&c, &s) in prev.cluster_state.assignments.iter().zip(&survival_flags) {
        if s {
            surviving[c] += 1;
        }
    }
    let q_u = kernels.motion.covariance();
    let mut slot_of = vec![usize::MAX; prev.clusters.len()];
    let mut clusters = Vec::new();
    let mut cardinalities = Vec::new();
    for (l, cluster) in prev.clusters.iter().enumerate() {
        if surviving[l] == 0 {
            continue;
        }
        slot_of[l] = clusters.len();
        let param = kernels.transition.apply(&cluster.param, &q_u, rng)?;
        clusters.push(Cluster {
            id: cluster.id,
            state: param.mean_state(),
            param,
        });
        cardinalities.push(surviving[l]);
    }
    let survivors = prev
        .cluster_state
        .assignments
        .iter()
        .enumerate()
        .filter(|(i, _)| survival_flags[*i])
        .map(|(i, &c)| (i, slot_of[c]))
        .collect();
    Ok(Transitioned {
        clusters,
        cardinalities,
        survival_flags,
        survivors,
    })
}

/// One step of the dependent prior construction: survival, cluster
/// transition, sequential reseating of survivors and births.
pub fn ddp_construct_step<R: Rng + ?Sized>(
    prev: &TrackingConfig,
    survival_prob: f64,
    kernels: &PriorKernels,
    model: &PriorModel,
    births: BirthModel,
    rng: &mut R,
) -> Result<TrackingConfig> {
    prev.validate()?;
    model.validate()?;
    let q_u = kernels.motion.covariance();
    let t = transition_clusters(prev, survival_prob, kernels, rng)?;
    let n_trans = t.clusters.len();
    let mut next = TrackingConfig {
        step: prev.step + 1,
        states: Vec::new(),
        clusters: t.clusters,
        cluster_state: ClusterState {
            assignments: Vec::new(),
            cardinalities: vec![0; n_trans],
            transitioned_cardinalities: t.cardinalities,
            survival_flags: t.survival_flags,
            cluster_flags: vec![true; n_trans],
            num_clusters: 0,
        },
        next_id: prev.next_id,
    };

    for &(obj, _) in &t.survivors {
        let counts: Vec<ClusterCounts> = next
            .cluster_state
            .cardinalities
            .iter()
            .zip(&next.cluster_state.transitioned_cardinalities)
            .map(|(&n, &m)| ClusterCounts { seated: n, transitioned: m })
            .collect();
        let choice = model.masses(&counts)?.normalize()?.sample(rng);
        let x_prev = prev.states[obj];
        match choice {
            Choice::Existing(l) => {
                // F(x_prev, x) f(x | θ) is a product of two Gaussians in x
                let motion = GaussianBelief {
                    mean: ctm_matrix(x_prev.omega) * x_prev.to_vector(),
                    cov: q_u,
                };
                let x = motion.product(&next.clusters[l].param.belief())?.sample(rng)?;
                seat(&mut next, l, ObjectState::from_vector(&x));
            }
            Choice::New => spawn(&mut next, &kernels.base, rng)?,
        }
    }
    for _ in 0..births.sample(rng)? {
        spawn(&mut next, &kernels.base, rng)?;
    }

    let cs = &mut next.cluster_state;
    cs.num_clusters = cs.cardinalities.iter().filter(|&&c| c > 0).count();
    for (l, cluster) in next.clusters.iter_mut().enumerate() {
        let first = cs.assignments.iter().position(|&c| c == l);
        cluster.state = match first {
            Some(i) => next.states[i],
            None => ObjectState::from_vector(&cluster.param.belief().sample(rng)?),
        };
    }
    Ok(next)
}

fn seat(config: &mut TrackingConfig, slot: usize, state: ObjectState) {
    config.states.push(state);
    config.cluster_state.assignments.push(slot);
    config.cluster_state.cardinalities[slot] += 1;
}

fn spawn<R: Rng + ?Sized>(
    config: &mut TrackingConfig,
    base: &BaseMeasure,
    rng: &mut R,
) -> Result<()> {
    let param = base.sample(rng)?;
    let x = ObjectState::from_vector(&sample_mvn(&param.mean, &param.cov, rng)?);
    let id = config.fresh_id();
    config.clusters.push(Cluster { id, param, state: x });
    let cs = &mut config.cluster_state;
    cs.cardinalities.push(0);
    cs.transitioned_cardinalities.push(0);
    cs.cluster_flags.push(false);
    let slot = config.clusters.len() - 1;
    seat(config, slot, x);
    Ok(())
}
