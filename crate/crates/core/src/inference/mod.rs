//! Gibbs sampling over cluster assignments and parameters, measurement
//! association and per-step state estimation.

mod association;
mod birth;
mod config;
mod sweep;
mod tracker;
mod weights;

pub use association::{associate_measurements, AssignmentHistory, Association};
pub use birth::{collapsed_log_likelihood, refresh_cluster_param, sample_new_cluster_param};
pub use config::{Cluster, ClusterId, TrackingConfig};
pub use sweep::gibbs_sweep;
pub use tracker::{run_tracker, PosteriorSummary, Tracker, TrackerConfig};
pub use weights::{gibbs_full_conditional, GibbsWeights, Hyper};
