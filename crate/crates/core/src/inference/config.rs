use serde::{Deserialize, Serialize};

use crate::bnp::ClusterState;
use crate::dynamics::{ClusterParam, ObjectState};
use crate::error::{Error, Result};

/// Identifier of a cluster, stable while the cluster survives. Never reused
/// within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClusterId(pub u64);

impl std::fmt::Display for ClusterId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A cluster: its atom `θ` and a representative state.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub id: ClusterId,
    pub param: ClusterParam,
    pub state: ObjectState,
}

/// Configuration of all objects and clusters at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingConfig {
    pub step: usize,
    /// One state per object, aligned with `cluster_state.assignments`.
    pub states: Vec<ObjectState>,
    /// Cluster slots, aligned with the per-cluster vectors of `cluster_state`.
    pub clusters: Vec<Cluster>,
    pub cluster_state: ClusterState,
    /// Next unused identifier.
    pub next_id: u64,
}

impl TrackingConfig {
    pub fn empty(step: usize) -> Self {
        Self {
            step,
            states: Vec::new(),
            clusters: Vec::new(),
            cluster_state: ClusterState::default(),
            next_id: 0,
        }
    }

    pub fn num_objects(&self) -> usize {
        self.states.len()
    }

    /// `θ_ℓ` for every object.
    pub fn params(&self) -> Vec<&ClusterParam> {
        self.cluster_state
            .assignments
            .iter()
            .map(|&c| &self.clusters[c].param)
            .collect()
    }

    /// Occupied cluster slots with their identifiers.
    pub fn occupied(&self) -> impl Iterator<Item = (usize, &Cluster)> {
        self.clusters
            .iter()
            .enumerate()
            .filter(|(l, _)| self.cluster_state.cardinalities[*l] > 0)
    }

    pub fn fresh_id(&mut self) -> ClusterId {
        let id = ClusterId(self.next_id);
        self.next_id += 1;
        id
    }

    pub fn validate(&self) -> Result<()> {
        self.cluster_state.validate()?;
        if self.states.len() != self.cluster_state.assignments.len() {
            return Err(Error::LengthMismatch {
                left: self.states.len(),
                right: self.cluster_state.assignments.len(),
            });
        }
        if self.clusters.len() != self.cluster_state.num_slots() {
            return Err(Error::LengthMismatch {
                left: self.clusters.len(),
                right: self.cluster_state.num_slots(),
            });
        }
        let mut ids: Vec<u64> = self.clusters.iter().map(|c| c.id.0).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("duplicate cluster identifiers".into()));
        }
        if ids.last().is_some_and(|&m| m >= self.next_id) {
            return Err(Error::Domain("cluster identifier not below next_id".into()));
        }
        Ok(())
    }

    /// Drops every empty cluster slot.
    pub fn prune_empty(&mut self) {
        let keep: Vec<bool> = self.cluster_state.cardinalities.iter().map(|&c| c > 0).collect();
        self.retain_slots(&keep);
    }

    /// Keeps only the slots flagged in `keep`, remapping assignments.
    /// Identifiers are untouched.
    pub(crate) fn retain_slots(&mut self, keep: &[bool]) {
        let mut remap = vec![usize::MAX; keep.len()];
        let mut next = 0;
        for (l, &k) in keep.iter().enumerate() {
            if k {
                remap[l] = next;
                next += 1;
            }
        }
        let cs = &mut self.cluster_state;
        retain_mask(&mut self.clusters, keep);
        retain_mask(&mut cs.cardinalities, keep);
        retain_mask(&mut cs.transitioned_cardinalities, keep);
        retain_mask(&mut cs.cluster_flags, keep);
        for a in cs.assignments.iter_mut() {
            *a = remap[*a];
        }
    }
}

fn retain_mask<T>(v: &mut Vec<T>, keep: &[bool]) {
    let mut i = 0;
    v.retain(|_| {
        i += 1;
        keep[i - 1]
    });
}
