use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seating bookkeeping of one time step. Every per-cluster vector is indexed
/// by the same cluster index; clusters created at this step carry a zero
/// transitioned cardinality and a false transition flag.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClusterState {
    /// `c_{ℓ,k}` for every seated object.
    pub assignments: Vec<usize>,
    /// `v_{l,k}`: objects currently seated at cluster `l`.
    pub cardinalities: Vec<usize>,
    /// `v*_{l,k|k-1}`: surviving objects that came with cluster `l`.
    pub transitioned_cardinalities: Vec<usize>,
    /// `s_{ℓ,k|k-1}` for each object of the previous step.
    pub survival_flags: Vec<bool>,
    /// `λ_{l,k|k-1}`.
    pub cluster_flags: Vec<bool>,
    /// `D_k`: number of occupied clusters.
    pub num_clusters: usize,
}

/// Seated count `n` and transitioned mass `m` of one cluster, as seen by
/// the next object to be seated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClusterCounts {
    pub seated: usize,
    pub transitioned: usize,
}

impl ClusterState {
    /// Builds a state from assignments alone, with no transitioned clusters.
    pub fn from_assignments(assignments: Vec<usize>, num_slots: usize) -> Result<Self> {
        let mut s = Self {
            assignments,
            cardinalities: vec![0; num_slots],
            transitioned_cardinalities: vec![0; num_slots],
            survival_flags: Vec::new(),
            cluster_flags: vec![false; num_slots],
            num_clusters: 0,
        };
        if let Some(&bad) = s.assignments.iter().find(|&&c| c >= num_slots) {
            return Err(Error::Domain(format!(
                "assignment {bad} out of range for {num_slots} clusters"
            )));
        }
        s.recount();
        Ok(s)
    }

    pub fn num_slots(&self) -> usize {
        self.cardinalities.len()
    }

    /// `D_{k|k-1}`.
    pub fn num_transitioned(&self) -> usize {
        self.cluster_flags.iter().filter(|&&f| f).count()
    }

    /// Recomputes cardinalities and `D_k` from the assignments.
    pub fn recount(&mut self) {
        self.cardinalities.iter_mut().for_each(|c| *c = 0);
        for &c in &self.assignments {
            self.cardinalities[c] += 1;
        }
        self.num_clusters = self.cardinalities.iter().filter(|&&c| c > 0).count();
    }

    /// Counts seen by object `ell` (1-based): only objects `1..ell` are seated.
    pub fn counts_before(&self, ell: usize) -> Result<Vec<ClusterCounts>> {
        if ell == 0 || ell > self.assignments.len() + 1 {
            return Err(Error::Domain(format!(
                "object index {ell} outside 1..={}",
                self.assignments.len() + 1
            )));
        }
        let mut counts: Vec<ClusterCounts> = self
            .transitioned_cardinalities
            .iter()
            .zip(&self.cluster_flags)
            .map(|(&m, &flag)| ClusterCounts {
                seated: 0,
                transitioned: if flag { m } else { 0 },
            })
            .collect();
        for &c in &self.assignments[..ell - 1] {
            counts[c].seated += 1;
        }
        Ok(counts)
    }

    pub fn validate(&self) -> Result<()> {
        let slots = self.num_slots();
        for (name, len) in [
            ("transitioned_cardinalities", self.transitioned_cardinalities.len()),
            ("cluster_flags", self.cluster_flags.len()),
        ] {
            if len != slots {
                return Err(Error::Domain(format!(
                    "{name} has {len} entries but there are {slots} clusters"
                )));
            }
        }
        let mut counted = vec![0usize; slots];
        for &c in &self.assignments {
            if c >= slots {
                return Err(Error::Domain(format!("assignment {c} out of range")));
            }
            counted[c] += 1;
        }
        if counted != self.cardinalities {
            return Err(Error::Domain(
                "cardinalities disagree with the assignments".into(),
            ));
        }
        if self.cardinalities.iter().sum::<usize>() != self.assignments.len() {
            return Err(Error::Domain("cardinalities do not sum to the object count".into()));
        }
        for (l, (&m, &flag)) in self
            .transitioned_cardinalities
            .iter()
            .zip(&self.cluster_flags)
            .enumerate()
        {
            if flag != (m >= 1) {
                return Err(Error::Domain(format!(
                    "cluster {l}: transition flag {flag} with transitioned cardinality {m}"
                )));
            }
        }
        let occupied = self.cardinalities.iter().filter(|&&c| c > 0).count();
        if occupied != self.num_clusters {
            return Err(Error::Domain(format!(
                "num_clusters is {} but {occupied} clusters are occupied",
                self.num_clusters
            )));
        }
        Ok(())
    }
}
