//! Stick-breaking samplers, seating rules, the dependent prior construction
//! and partition-law utilities.

mod alpha;
mod base;
mod construct;
mod eppf;
mod selection;
mod state;
mod stick;

pub use alpha::{resample_concentration, GammaPrior};
pub use base::{BaseMeasure, Niw, WindowBase};
pub use construct::{
    ddp_construct_step, transition_clusters, BirthModel, ParamTransition, PriorKernels,
    Transitioned,
};
pub use eppf::{eppf, eppf_consistency_check, integer_partitions, log_eppf, Partition};
pub use selection::{
    ddp_selection_probabilities, dpy_selection_probabilities, selection_probabilities,
    sequential_partition, Choice, PriorModel, SelectionMasses, SelectionProbabilities,
};
pub use state::{ClusterCounts, ClusterState};
pub use stick::{stick_breaking_sample, StickBreaking, DEFAULT_TRUNCATION};
