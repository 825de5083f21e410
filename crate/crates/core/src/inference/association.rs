use rand::seq::SliceRandom;
use rand::Rng;

use super::birth::sample_new_cluster_param;
use super::config::{Cluster, ClusterId, TrackingConfig};
use super::sweep::BeliefCache;
use super::weights::{cluster_log_likelihood, combine, Hyper};
use crate::bnp::{Choice, ClusterCounts};
use crate::dynamics::{ekf_update, Measurement};
use crate::error::Result;

/// Running record of measurement-to-cluster assignments, one entry per step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AssignmentHistory {
    pub steps: Vec<(usize, Vec<ClusterId>)>,
}

#[derive(Debug, Clone)]
pub struct Association {
    /// Configuration whose object `i` is measurement `i`.
    pub config: TrackingConfig,
    /// Cluster of each measurement.
    pub labels: Vec<ClusterId>,
}

/// Seats the measurements one at a time, in random order, on the clusters of
/// `config` (whose objects are discarded) or on fresh clusters.
pub fn associate_measurements<R: Rng + ?Sized>(
    measurements: &[Measurement],
    config: &TrackingConfig,
    hyper: &Hyper,
    history: &mut AssignmentHistory,
    rng: &mut R,
) -> Result<Association> {
    if measurements.is_empty() {
        history.steps.push((config.step, Vec::new()));
        return Ok(Association {
            config: config.clone(),
            labels: Vec::new(),
        });
    }
    let mut work = config.clone();
    work.states.clear();
    let cs = &mut work.cluster_state;
    cs.assignments.clear();
    cs.cardinalities.iter_mut().for_each(|c| *c = 0);
    let mut cache = BeliefCache::build(&work, &[], hyper);

    let mut order: Vec<usize> = (0..measurements.len()).collect();
    order.shuffle(rng);
    let mut slot_of = vec![0usize; measurements.len()];
    for &m in &order {
        let z = &measurements[m];
        let cs = &work.cluster_state;
        let counts: Vec<ClusterCounts> = cs
            .cardinalities
            .iter()
            .zip(&cs.transitioned_cardinalities)
            .zip(&cs.cluster_flags)
            .map(|((&n, &t), &flag)| ClusterCounts {
                seated: n,
                transitioned: if flag { t } else { 0 },
            })
            .collect();
        let masses = hyper.model.masses(&counts)?;
        let weights = combine(
            &masses,
            |l| cluster_log_likelihood(cache.get(l), z, &hyper.measurement),
            hyper.base.marginal_log_likelihood(z, &hyper.measurement),
        )?;
        let slot = match weights.sample(rng) {
            Choice::Existing(l) => l,
            Choice::New => {
                let param = sample_new_cluster_param(
                    std::slice::from_ref(z),
                    &hyper.base,
                    &hyper.measurement,
                    hyper.proposals,
                    rng,
                )?;
                let id = work.fresh_id();
                let state = param.mean_state();
                cache.push(Some(param.belief()));
                work.clusters.push(Cluster { id, param, state });
                let cs = &mut work.cluster_state;
                cs.cardinalities.push(0);
                cs.transitioned_cardinalities.push(0);
                cs.cluster_flags.push(false);
                work.clusters.len() - 1
            }
        };
        work.cluster_state.cardinalities[slot] += 1;
        if let Some(b) = cache.get(slot).copied() {
            cache.set(slot, ekf_update(&b, z, &hyper.measurement).ok());
        }
        slot_of[m] = slot;
    }

    let cs = &mut work.cluster_state;
    cs.assignments = slot_of;
    cs.num_clusters = cs.cardinalities.iter().filter(|&&c| c > 0).count();
    work.states = cs.assignments.iter().map(|&c| work.clusters[c].state).collect();
    let labels: Vec<ClusterId> = cs.assignments.iter().map(|&c| work.clusters[c].id).collect();
    history.steps.push((work.step, labels.clone()));
    Ok(Association { config: work, labels })
}
