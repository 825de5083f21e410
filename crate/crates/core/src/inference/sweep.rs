use rand::Rng;

use super::birth::{refresh_cluster_param, sample_new_cluster_param};
use super::config::{Cluster, TrackingConfig};
use super::weights::{cluster_belief, cluster_log_likelihood, combine, counts_without, Hyper};
use crate::bnp::Choice;
use crate::dynamics::{ekf_update, GaussianBelief, Measurement, ObjectState};
use crate::error::{Error, Result};

/// Per-slot state beliefs given all current members, kept in step with the
/// assignments during a sweep.
pub(crate) struct BeliefCache {
    beliefs: Vec<Option<GaussianBelief>>,
}

impl BeliefCache {
    pub(crate) fn build(config: &TrackingConfig, measurements: &[Measurement], hyper: &Hyper) -> Self {
        let beliefs = (0..config.clusters.len())
            .map(|l| cluster_belief(config, l, measurements, None, &hyper.measurement))
            .collect();
        Self { beliefs }
    }

    pub(crate) fn push(&mut self, belief: Option<GaussianBelief>) {
        self.beliefs.push(belief);
    }

    pub(crate) fn get(&self, slot: usize) -> Option<&GaussianBelief> {
        self.beliefs[slot].as_ref()
    }

    pub(crate) fn set(&mut self, slot: usize, belief: Option<GaussianBelief>) {
        self.beliefs[slot] = belief;
    }

    fn absorb(&mut self, slot: usize, z: Option<&Measurement>, hyper: &Hyper) {
        if let (Some(z), Some(b)) = (z, self.beliefs[slot]) {
            self.beliefs[slot] = ekf_update(&b, z, &hyper.measurement).ok();
        }
    }
}

/// Reseats object `target` from its full conditional. Returns the slot it
/// ends up in.
pub(crate) fn reseat<R: Rng + ?Sized>(
    config: &mut TrackingConfig,
    target: usize,
    measurements: &[Measurement],
    hyper: &Hyper,
    cache: &mut BeliefCache,
    rng: &mut R,
) -> Result<usize> {
    let own = config.cluster_state.assignments[target];
    let z = measurements.get(target);
    let masses = hyper.model.masses(&counts_without(config, target))?;
    let own_without = cluster_belief(config, own, measurements, Some(target), &hyper.measurement);
    let weights = match z {
        None => combine(&masses, |_| 0.0, 0.0)?,
        Some(z) => combine(
            &masses,
            |l| {
                let b = if l == own { own_without.as_ref() } else { cache.beliefs[l].as_ref() };
                cluster_log_likelihood(b, z, &hyper.measurement)
            },
            hyper.base.marginal_log_likelihood(z, &hyper.measurement),
        )?,
    };
    let cs = &mut config.cluster_state;
    cs.cardinalities[own] -= 1;
    cache.beliefs[own] = own_without;
    let vacated = cs.cardinalities[own] == 0 && !cs.cluster_flags[own];

    let slot = match weights.sample(rng) {
        Choice::Existing(l) => l,
        Choice::New => {
            let zs: Vec<Measurement> = z.into_iter().copied().collect();
            let param = sample_new_cluster_param(
                &zs,
                &hyper.base,
                &hyper.measurement,
                hyper.proposals,
                rng,
            )?;
            if vacated {
                // the object was alone in a cluster born at this step: keep its label
                config.clusters[own].param = param;
                cache.beliefs[own] = Some(config.clusters[own].param.belief());
                own
            } else {
                let id = config.fresh_id();
                let state = param.mean_state();
                config.clusters.push(Cluster { id, param, state });
                let cs = &mut config.cluster_state;
                cs.cardinalities.push(0);
                cs.transitioned_cardinalities.push(0);
                cs.cluster_flags.push(false);
                cache.push(Some(config.clusters.last().expect("just pushed").param.belief()));
                config.clusters.len() - 1
            }
        }
    };
    let cs = &mut config.cluster_state;
    cs.assignments[target] = slot;
    cs.cardinalities[slot] += 1;
    cache.absorb(slot, z, hyper);
    Ok(slot)
}

/// One Gibbs pass: reseat every object, refresh the atoms of clusters born at
/// this step, redraw cluster states and prune empty clusters that did not
/// transition. Transitioned clusters stay available even when empty.
pub fn gibbs_sweep<R: Rng + ?Sized>(
    config: &TrackingConfig,
    measurements: &[Measurement],
    hyper: &Hyper,
    rng: &mut R,
) -> Result<TrackingConfig> {
    if measurements.len() > config.num_objects() {
        return Err(Error::LengthMismatch {
            left: measurements.len(),
            right: config.num_objects(),
        });
    }
    let mut next = config.clone();
    let mut cache = BeliefCache::build(&next, measurements, hyper);
    for target in 0..next.num_objects() {
        reseat(&mut next, target, measurements, hyper, &mut cache, rng)?;
    }
    let cs = &mut next.cluster_state;
    cs.num_clusters = cs.cardinalities.iter().filter(|&&c| c > 0).count();

    let members = members_by_slot(&next, measurements);
    for (l, zs) in members.iter().enumerate() {
        let cs = &next.cluster_state;
        if cs.cluster_flags[l] || cs.cardinalities[l] == 0 {
            continue;
        }
        next.clusters[l].param = refresh_cluster_param(
            &next.clusters[l].param,
            zs,
            &hyper.base,
            &hyper.measurement,
            hyper.proposals,
            rng,
        )?;
    }
    resample_states(&mut next, measurements, hyper, rng)?;

    let cs = &next.cluster_state;
    let keep: Vec<bool> = cs
        .cardinalities
        .iter()
        .zip(&cs.cluster_flags)
        .map(|(&n, &flag)| n > 0 || flag)
        .collect();
    next.retain_slots(&keep);
    Ok(next)
}

fn members_by_slot(config: &TrackingConfig, measurements: &[Measurement]) -> Vec<Vec<Measurement>> {
    let mut out = vec![Vec::new(); config.clusters.len()];
    for (i, &c) in config.cluster_state.assignments.iter().enumerate() {
        if let Some(z) = measurements.get(i) {
            out[c].push(*z);
        }
    }
    out
}

/// Draws each cluster state from its belief given the members' measurements
/// and copies it to the members.
pub(crate) fn resample_states<R: Rng + ?Sized>(
    config: &mut TrackingConfig,
    measurements: &[Measurement],
    hyper: &Hyper,
    rng: &mut R,
) -> Result<()> {
    for l in 0..config.clusters.len() {
        let belief = cluster_belief(config, l, measurements, None, &hyper.measurement)
            .unwrap_or_else(|| config.clusters[l].param.belief());
        config.clusters[l].state = ObjectState::from_vector(&belief.sample(rng)?);
    }
    for (i, &c) in config.cluster_state.assignments.iter().enumerate() {
        config.states[i] = config.clusters[c].state;
    }
    Ok(())
}
