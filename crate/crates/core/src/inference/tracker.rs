use std::collections::BTreeMap;

use nalgebra::Vector5;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::association::{associate_measurements, AssignmentHistory};
use super::config::{ClusterId, TrackingConfig};
use super::sweep::gibbs_sweep;
use super::weights::{cluster_belief, Hyper};
use crate::bnp::{
    resample_concentration, transition_clusters, ClusterState, GammaPrior, ParamTransition,
    PriorKernels,
};
use crate::dynamics::{ClusterParam, Measurement, MotionNoise, ObjectState};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    pub hyper: Hyper,
    pub motion: MotionNoise,
    pub transition: ParamTransition,
    pub survival_prob: f64,
    pub sweeps: usize,
    pub burn_in: usize,
    /// Resample the concentration after every sweep under this prior.
    pub alpha_prior: Option<GammaPrior>,
    /// Forget all clusters between steps (per-frame mixture baseline).
    pub independent: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            hyper: Hyper::default(),
            motion: MotionNoise::default(),
            transition: ParamTransition::default(),
            survival_prob: 0.95,
            sweeps: 100,
            burn_in: 20,
            alpha_prior: None,
            independent: false,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps <= self.burn_in {
            return Err(Error::ParameterDomain(format!(
                "sweeps ({}) must exceed burn_in ({})",
                self.sweeps, self.burn_in
            )));
        }
        if !(0.0..=1.0).contains(&self.survival_prob) {
            return Err(Error::ParameterDomain(format!(
                "survival probability {} outside [0, 1]",
                self.survival_prob
            )));
        }
        self.hyper.model.validate()?;
        self.hyper.base.validate()?;
        if let Some(p) = &self.alpha_prior {
            p.validate()?;
        }
        Ok(())
    }
}

/// Point estimate for one time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub step: usize,
    pub estimated_states: Vec<ObjectState>,
    pub labels: Vec<ClusterId>,
    pub cardinality: usize,
    pub samples_used: usize,
}

/// Sequential tracker holding the posterior configuration between steps.
#[derive(Debug, Clone)]
pub struct Tracker {
    pub config: TrackerConfig,
    posterior: TrackingConfig,
    history: AssignmentHistory,
    step: usize,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            posterior: TrackingConfig::empty(0),
            history: AssignmentHistory::default(),
            step: 0,
        })
    }

    pub fn posterior(&self) -> &TrackingConfig {
        &self.posterior
    }

    pub fn history(&self) -> &AssignmentHistory {
        &self.history
    }

    pub fn step<R: Rng + ?Sized>(
        &mut self,
        measurements: &[Measurement],
        rng: &mut R,
    ) -> Result<PosteriorSummary> {
        self.config.validate()?;
        let cfg = self.config;
        let prev = if cfg.independent {
            TrackingConfig {
                next_id: self.posterior.next_id,
                ..TrackingConfig::empty(self.posterior.step)
            }
        } else {
            self.posterior.clone()
        };
        let kernels = PriorKernels {
            motion: cfg.motion,
            transition: cfg.transition,
            base: cfg.hyper.base,
        };
        let t = transition_clusters(&prev, cfg.survival_prob, &kernels, rng)?;
        let n = t.clusters.len();
        let prior = TrackingConfig {
            step: self.step,
            states: Vec::new(),
            clusters: t.clusters,
            cluster_state: ClusterState {
                assignments: Vec::new(),
                cardinalities: vec![0; n],
                transitioned_cardinalities: t.cardinalities,
                survival_flags: t.survival_flags,
                cluster_flags: vec![true; n],
                num_clusters: 0,
            },
            next_id: prev.next_id,
        };

        let summary = if measurements.is_empty() {
            self.coast(prior)
        } else {
            self.update(prior, measurements, rng)?
        };
        self.step += 1;
        Ok(summary)
    }

    /// No data: transitioned clusters are carried as predictions.
    fn coast(&mut self, mut prior: TrackingConfig) -> PosteriorSummary {
        let cs = &mut prior.cluster_state;
        for (l, &m) in cs.transitioned_cardinalities.iter().enumerate() {
            cs.assignments.extend(std::iter::repeat_n(l, m));
        }
        cs.recount();
        for c in prior.clusters.iter_mut() {
            c.state = c.param.mean_state();
        }
        prior.states = cs.assignments.iter().map(|&c| prior.clusters[c].state).collect();
        self.history.steps.push((prior.step, Vec::new()));
        let summary = PosteriorSummary {
            step: prior.step,
            estimated_states: prior.clusters.iter().map(|c| c.state).collect(),
            labels: prior.clusters.iter().map(|c| c.id).collect(),
            cardinality: prior.clusters.len(),
            samples_used: 0,
        };
        self.posterior = prior;
        summary
    }

    fn update<R: Rng + ?Sized>(
        &mut self,
        prior: TrackingConfig,
        measurements: &[Measurement],
        rng: &mut R,
    ) -> Result<PosteriorSummary> {
        let cfg = self.config;
        let mut hyper = cfg.hyper;
        let assoc = associate_measurements(measurements, &prior, &hyper, &mut self.history, rng)?;
        let mut current = assoc.config;
        let mut samples: Vec<TrackingConfig> = Vec::with_capacity(cfg.sweeps - cfg.burn_in);
        let mut sums: BTreeMap<ClusterId, (Vector5<f64>, usize)> = BTreeMap::new();
        for sweep in 0..cfg.sweeps {
            current = gibbs_sweep(&current, measurements, &hyper, rng)?;
            if let Some(prior) = &cfg.alpha_prior {
                let alpha = resample_concentration(
                    hyper.model.alpha(),
                    current.cluster_state.num_clusters,
                    current.num_objects(),
                    prior,
                    rng,
                )?;
                hyper.model = hyper.model.with_alpha(alpha.max(1e-12));
            }
            if sweep < cfg.burn_in {
                continue;
            }
            for (l, c) in current.occupied() {
                let mean = cluster_belief(&current, l, measurements, None, &hyper.measurement)
                    .map_or(c.state.to_vector(), |b| b.mean);
                let e = sums.entry(c.id).or_insert((Vector5::zeros(), 0));
                e.0 += mean;
                e.1 += 1;
            }
            samples.push(current.clone());
        }
        if cfg.alpha_prior.is_some() {
            self.config.hyper.model = hyper.model;
        }

        let mut freq: BTreeMap<usize, usize> = BTreeMap::new();
        for s in &samples {
            *freq.entry(s.cluster_state.num_clusters).or_default() += 1;
        }
        // ties go to the smaller count
        let mode = freq
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(&d, _)| d)
            .unwrap_or(0);
        let mut chosen = samples
            .into_iter()
            .rev()
            .find(|s| s.cluster_state.num_clusters == mode)
            .expect("the modal count occurs in some sample");

        let mut labels = Vec::new();
        let mut estimated_states = Vec::new();
        for (_, c) in chosen.occupied() {
            let (sum, count) = sums[&c.id];
            labels.push(c.id);
            estimated_states.push(ObjectState::from_vector(&(sum / count as f64)));
        }

        // carry the chosen sample forward with atoms conditioned on their data
        chosen.prune_empty();
        for l in 0..chosen.clusters.len() {
            if let Some(b) = cluster_belief(&chosen, l, measurements, None, &hyper.measurement) {
                if let Ok(param) = ClusterParam::new(b.mean, b.cov) {
                    chosen.clusters[l].state = param.mean_state();
                    chosen.clusters[l].param = param;
                }
            }
        }
        chosen.states = chosen
            .cluster_state
            .assignments
            .iter()
            .map(|&c| chosen.clusters[c].state)
            .collect();
        let summary = PosteriorSummary {
            step: chosen.step,
            cardinality: labels.len(),
            estimated_states,
            labels,
            samples_used: cfg.sweeps - cfg.burn_in,
        };
        self.posterior = chosen;
        Ok(summary)
    }
}

/// Runs the tracker over a whole measurement stream.
pub fn run_tracker<R: Rng + ?Sized>(
    stream: &[Vec<Measurement>],
    config: &TrackerConfig,
    rng: &mut R,
) -> Result<Vec<PosteriorSummary>> {
    let mut tracker = Tracker::new(*config)?;
    stream.iter().map(|ms| tracker.step(ms, rng)).collect()
}
