use rand::Rng;
use serde::{Deserialize, Serialize};

use super::state::{ClusterCounts, ClusterState};
use super::stick::check_hyper;
use crate::error::{Error, Result};

/// The prior over partitions driving the seating rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PriorModel {
    Ddp { alpha: f64 },
    Dpy { alpha: f64, discount: f64 },
}

impl PriorModel {
    pub fn alpha(&self) -> f64 {
        match *self {
            PriorModel::Ddp { alpha } | PriorModel::Dpy { alpha, .. } => alpha,
        }
    }

    pub fn discount(&self) -> f64 {
        match *self {
            PriorModel::Ddp { .. } => 0.0,
            PriorModel::Dpy { discount, .. } => discount,
        }
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        match self {
            PriorModel::Ddp { .. } => PriorModel::Ddp { alpha },
            PriorModel::Dpy { discount, .. } => PriorModel::Dpy { alpha, discount },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PriorModel::Ddp { alpha } => {
                if alpha > 0.0 && alpha.is_finite() {
                    Ok(())
                } else {
                    Err(Error::ParameterDomain(format!(
                        "concentration must be positive, got {alpha}"
                    )))
                }
            }
            PriorModel::Dpy { alpha, discount } => check_hyper(alpha, discount),
        }
    }

    /// Unnormalized seating masses for the next object.
    pub fn masses(&self, counts: &[ClusterCounts]) -> Result<SelectionMasses> {
        match *self {
            PriorModel::Ddp { alpha } => ddp_masses(counts, alpha),
            PriorModel::Dpy { alpha, discount } => dpy_masses(counts, alpha, discount),
        }
    }
}

/// Outcome of a seating draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Choice {
    Existing(usize),
    New,
}

/// Unnormalized masses of the three seating cases, keyed by cluster index.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionMasses {
    pub occupied: Vec<(usize, f64)>,
    pub unoccupied: Vec<(usize, f64)>,
    pub new_cluster: f64,
    /// `g_k` as printed; reported, not used for normalization.
    pub normalizer: f64,
    /// Set when a negative mass was clamped to zero.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionProbabilities {
    pub occupied: Vec<(usize, f64)>,
    pub unoccupied: Vec<(usize, f64)>,
    pub new_cluster: f64,
    pub normalizer: f64,
    pub clamped: bool,
}

fn printed_normalizer(counts: &[ClusterCounts], alpha: f64) -> f64 {
    let seated: usize = counts.iter().map(|c| c.seated).sum();
    let cross: usize = counts.iter().map(|c| c.seated * c.transitioned).sum();
    seated as f64 + alpha + cross as f64
}

fn ddp_masses(counts: &[ClusterCounts], alpha: f64) -> Result<SelectionMasses> {
    PriorModel::Ddp { alpha }.validate()?;
    let mut occupied = Vec::new();
    let mut unoccupied = Vec::new();
    for (l, c) in counts.iter().enumerate() {
        if c.seated > 0 {
            occupied.push((l, (c.seated + c.transitioned) as f64));
        } else if c.transitioned > 0 {
            unoccupied.push((l, c.transitioned as f64));
        }
    }
    Ok(SelectionMasses {
        occupied,
        unoccupied,
        new_cluster: alpha,
        normalizer: printed_normalizer(counts, alpha),
        clamped: false,
    })
}

fn dpy_masses(counts: &[ClusterCounts], alpha: f64, discount: f64) -> Result<SelectionMasses> {
    check_hyper(alpha, discount)?;
    let mut clamped = false;
    let mut clamp = |v: f64| {
        if v < 0.0 {
            clamped = true;
            0.0
        } else {
            v
        }
    };
    let mut occupied = Vec::new();
    let mut unoccupied = Vec::new();
    let mut used = 0usize;
    for (l, c) in counts.iter().enumerate() {
        if c.seated > 0 {
            used += 1;
            occupied.push((l, clamp((c.seated + c.transitioned) as f64 - discount)));
        } else if c.transitioned > 0 {
            unoccupied.push((l, clamp(c.transitioned as f64 - discount)));
        }
    }
    let new_cluster = clamp(alpha + discount * used as f64);
    Ok(SelectionMasses {
        occupied,
        unoccupied,
        new_cluster,
        normalizer: printed_normalizer(counts, alpha),
        clamped,
    })
}

impl SelectionMasses {
    pub fn total(&self) -> f64 {
        self.occupied.iter().map(|e| e.1).sum::<f64>()
            + self.unoccupied.iter().map(|e| e.1).sum::<f64>()
            + self.new_cluster
    }

    /// Renormalizes the concatenated mass vector.
    pub fn normalize(self) -> Result<SelectionProbabilities> {
        let total = self.total();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::DegenerateConfiguration(format!(
                "seating masses sum to {total}"
            )));
        }
        let scale = |v: Vec<(usize, f64)>| v.into_iter().map(|(l, m)| (l, m / total)).collect();
        Ok(SelectionProbabilities {
            occupied: scale(self.occupied),
            unoccupied: scale(self.unoccupied),
            new_cluster: self.new_cluster / total,
            normalizer: self.normalizer,
            clamped: self.clamped,
        })
    }
}

impl SelectionProbabilities {
    pub fn sum(&self) -> f64 {
        self.occupied.iter().map(|e| e.1).sum::<f64>()
            + self.unoccupied.iter().map(|e| e.1).sum::<f64>()
            + self.new_cluster
    }

    pub fn probability_of(&self, choice: Choice) -> f64 {
        match choice {
            Choice::New => self.new_cluster,
            Choice::Existing(l) => self
                .occupied
                .iter()
                .chain(&self.unoccupied)
                .find(|e| e.0 == l)
                .map_or(0.0, |e| e.1),
        }
    }

    /// Flattened `(choice, probability)` list: occupied, unoccupied, new.
    pub fn entries(&self) -> Vec<(Choice, f64)> {
        self.occupied
            .iter()
            .chain(&self.unoccupied)
            .map(|&(l, p)| (Choice::Existing(l), p))
            .chain(std::iter::once((Choice::New, self.new_cluster)))
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Choice {
        let u: f64 = rng.random::<f64>() * self.sum();
        let mut acc = 0.0;
        for (choice, p) in self.entries() {
            acc += p;
            if u < acc {
                return choice;
            }
        }
        // rounding left u at the very top; take the last positive entry
        self.entries()
            .into_iter()
            .rev()
            .find(|e| e.1 > 0.0)
            .map_or(Choice::New, |e| e.0)
    }
}

/// Seating probabilities of object `ell` (1-based) under the dependent DP.
pub fn ddp_selection_probabilities(
    ell: usize,
    cluster_state: &ClusterState,
    alpha: f64,
) -> Result<SelectionProbabilities> {
    let counts = cluster_state.counts_before(ell)?;
    ddp_masses(&counts, alpha)?.normalize()
}

/// Seating probabilities of object `ell` (1-based) under the dependent
/// Pitman–Yor process.
pub fn dpy_selection_probabilities(
    ell: usize,
    cluster_state: &ClusterState,
    alpha: f64,
    discount: f64,
) -> Result<SelectionProbabilities> {
    let counts = cluster_state.counts_before(ell)?;
    dpy_masses(&counts, alpha, discount)?.normalize()
}

pub fn selection_probabilities(
    ell: usize,
    cluster_state: &ClusterState,
    model: &PriorModel,
) -> Result<SelectionProbabilities> {
    match *model {
        PriorModel::Ddp { alpha } => ddp_selection_probabilities(ell, cluster_state, alpha),
        PriorModel::Dpy { alpha, discount } => {
            dpy_selection_probabilities(ell, cluster_state, alpha, discount)
        }
    }
}

/// Seats `n` items one at a time with no transitioned clusters and returns
/// the block sizes in order of creation.
pub fn sequential_partition<R: Rng + ?Sized>(
    n: usize,
    model: &PriorModel,
    rng: &mut R,
) -> Result<Vec<usize>> {
    model.validate()?;
    let (alpha, d) = (model.alpha(), model.discount());
    let mut blocks: Vec<usize> = Vec::new();
    for i in 0..n {
        // total mass of i seated items is i + α for both models
        let u = rng.random::<f64>() * (i as f64 + alpha);
        let mut acc = 0.0;
        let mut chosen = None;
        for (j, &size) in blocks.iter().enumerate() {
            acc += size as f64 - d;
            if u < acc {
                chosen = Some(j);
                break;
            }
        }
        match chosen {
            Some(j) => blocks[j] += 1,
            None => blocks.push(1),
        }
    }
    Ok(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn state_with(assignments: Vec<usize>, transitioned: Vec<usize>) -> ClusterState {
        let slots = transitioned.len();
        let mut s = ClusterState::from_assignments(assignments, slots).unwrap();
        s.cluster_flags = transitioned.iter().map(|&m| m > 0).collect();
        s.transitioned_cardinalities = transitioned;
        s.validate().unwrap();
        s
    }

    #[test]
    fn empty_scene_only_forms_new_clusters() {
        let s = ClusterState::default();
        let p = ddp_selection_probabilities(1, &s, 0.7).unwrap();
        assert_eq!(p.new_cluster, 1.0);
        assert!(p.occupied.is_empty() && p.unoccupied.is_empty());
        let q = dpy_selection_probabilities(1, &s, 0.7, 0.4).unwrap();
        assert_eq!(q.new_cluster, 1.0);
    }

    #[test]
    fn one_transitioned_occupied_cluster() {
        // object 1 already sits in the single transitioned cluster (v* = 1):
        // occupied mass 1 + 1, new-cluster mass α = 1
        let s = state_with(vec![0], vec![1]);
        let p = ddp_selection_probabilities(2, &s, 1.0).unwrap();
        assert_eq!(p.occupied.len(), 1);
        assert!((p.occupied[0].1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.new_cluster - 1.0 / 3.0).abs() < 1e-15);
        // printed g_k = (ℓ-1) + α + v* = 3
        assert_eq!(p.normalizer, 3.0);
    }

    #[test]
    fn vanishing_concentration_kills_new_clusters() {
        let s = state_with(vec![0], vec![1]);
        let p = ddp_selection_probabilities(2, &s, 1e-300).unwrap();
        assert!(p.new_cluster < 1e-299);
    }

    #[test]
    fn pitman_yor_two_seated_one_cluster() {
        // occupied mass 2 - 0.5, new mass α + d·1 = 1.5
        let s = state_with(vec![0, 0], vec![0]);
        let p = dpy_selection_probabilities(3, &s, 1.0, 0.5).unwrap();
        assert!((p.occupied[0].1 - 0.5).abs() < 1e-15);
        assert!((p.new_cluster - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unoccupied_transitioned_cluster_has_its_own_case() {
        let s = state_with(vec![], vec![2, 0]);
        let p = ddp_selection_probabilities(1, &s, 1.0).unwrap();
        assert_eq!(p.unoccupied, vec![(0, 2.0 / 3.0)]);
        assert!(p.occupied.is_empty());
    }

    #[test]
    fn invalid_hyperparameters() {
        let s = ClusterState::default();
        assert!(ddp_selection_probabilities(1, &s, 0.0).is_err());
        assert!(dpy_selection_probabilities(1, &s, 1.0, 1.0).is_err());
        assert!(dpy_selection_probabilities(1, &s, -0.5, 0.5).is_err());
    }

    #[test]
    fn negative_discounted_mass_is_clamped_and_flagged() {
        let m = dpy_masses(&[ClusterCounts { seated: 0, transitioned: 1 }], 0.5, 0.5).unwrap();
        assert!(!m.clamped);
        // α in (-d, 0) with no cluster in use leaves a negative new-cluster mass
        let m = dpy_masses(&[], -0.3, 0.4).unwrap();
        assert!(m.clamped);
        assert_eq!(m.new_cluster, 0.0);
        assert!(matches!(m.normalize(), Err(Error::DegenerateConfiguration(_))));
    }

    #[test]
    fn sampling_frequencies() {
        let s = state_with(vec![0], vec![1, 3]);
        let p = ddp_selection_probabilities(2, &s, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 200_000;
        let mut hits = std::collections::HashMap::new();
        for _ in 0..n {
            *hits.entry(p.sample(&mut rng)).or_insert(0usize) += 1;
        }
        for (choice, prob) in p.entries() {
            let freq = *hits.get(&choice).unwrap_or(&0) as f64 / n as f64;
            let se = (prob * (1.0 - prob) / n as f64).sqrt();
            assert!((freq - prob).abs() < 4.0 * se, "{choice:?}: {freq} vs {prob}");
        }
    }

    fn arb_state() -> impl Strategy<Value = (ClusterState, usize)> {
        (1usize..6, 0usize..8).prop_flat_map(|(slots, n)| {
            (
                proptest::collection::vec(0usize..slots, n),
                proptest::collection::vec(0usize..4, slots),
                1usize..=n + 1,
            )
                .prop_map(move |(a, t, ell)| {
                    let mut s = ClusterState::from_assignments(a, slots).unwrap();
                    s.cluster_flags = t.iter().map(|&m| m > 0).collect();
                    s.transitioned_cardinalities = t;
                    (s, ell)
                })
        })
    }

    proptest! {
        #[test]
        fn probabilities_are_a_distribution(
            (s, ell) in arb_state(), alpha in 0.01f64..20.0, d in 0.0f64..0.99
        ) {
            for p in [
                ddp_selection_probabilities(ell, &s, alpha).unwrap(),
                dpy_selection_probabilities(ell, &s, alpha, d).unwrap(),
            ] {
                prop_assert!((p.sum() - 1.0).abs() < 1e-12);
                prop_assert!(p.entries().iter().all(|e| e.1 >= 0.0));
            }
        }

        #[test]
        fn zero_discount_reduces_to_dp((s, ell) in arb_state(), alpha in 0.01f64..20.0) {
            let a = ddp_selection_probabilities(ell, &s, alpha).unwrap();
            let b = dpy_selection_probabilities(ell, &s, alpha, 0.0).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
