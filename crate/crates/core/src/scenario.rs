//! Ground-truth trajectories and noisy measurements for synthetic scenarios.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    measure, predict_measurement, propagate, Measurement, MeasurementModel, MeasurementNoise,
    MotionNoise, ObjectState, MAX_RANGE,
};
use crate::error::{Error, Result};
use crate::tomlio;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    /// First step the object is present.
    pub birth: usize,
    /// First step the object is gone.
    pub death: usize,
    pub initial: ObjectState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrSpec {
    pub snr_db: f64,
    /// Signal power the decibel figure is relative to. Defaults to the mean
    /// squared noise-free range of the scenario.
    #[serde(default)]
    pub reference_power: Option<f64>,
}

fn default_duration() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_duration")]
    pub duration: usize,
    #[serde(default)]
    pub seed: u64,
    /// Process noise of the true trajectories.
    #[serde(default = "MotionNoise::zero")]
    pub motion: MotionNoise,
    #[serde(default)]
    pub measurement: MeasurementModel,
    /// When present, rescales the measurement noise to this SNR.
    #[serde(default)]
    pub snr: Option<SnrSpec>,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
}

impl ScenarioSpec {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let spec: ScenarioSpec = tomlio::parse(text, path)?;
        spec.validate().map_err(|e| {
            let (line, message) = match &e {
                Error::Scenario(m) => {
                    // point at the offending object table when we can tell which
                    let idx = m
                        .strip_prefix("object ")
                        .and_then(|r| r.split(':').next())
                        .and_then(|n| n.parse::<usize>().ok());
                    let line = idx.and_then(|i| nth_line_of(text, "[[objects]]", i));
                    (line, m.clone())
                }
                other => (None, other.to_string()),
            };
            Error::Config {
                path: path.to_path_buf(),
                line,
                message,
            }
        })?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, o) in self.objects.iter().enumerate() {
            if !(o.birth < o.death && o.death <= self.duration) {
                return Err(Error::Scenario(format!(
                    "object {i}: need birth < death <= duration, got {} .. {} with duration {}",
                    o.birth, o.death, self.duration
                )));
            }
            let s = &o.initial;
            if !s.is_finite() {
                return Err(Error::Scenario(format!("object {i}: initial state is not finite")));
            }
            if !(s.x > 0.0) || s.x.hypot(s.y) >= MAX_RANGE {
                return Err(Error::Scenario(format!(
                    "object {i}: initial position ({}, {}) outside the sensor window",
                    s.x, s.y
                )));
            }
        }
        if let Some(snr) = &self.snr {
            if !snr.snr_db.is_finite() || snr.reference_power.is_some_and(|p| !(p > 0.0)) {
                return Err(Error::Scenario("snr needs a finite dB value and positive reference power".into()));
            }
        }
        Ok(())
    }

    /// Noise-free trajectories, one state per live step.
    fn noise_free_ranges(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let zero = MotionNoise::zero().covariance();
        for o in &self.objects {
            let mut s = o.initial;
            for _ in o.birth..o.death {
                out.push(s.x.hypot(s.y));
                s = propagate(&s, &zero, &mut rng).unwrap_or(s);
            }
        }
        out
    }

    /// The measurement model actually used to generate data.
    pub fn effective_measurement(&self) -> Result<MeasurementModel> {
        let Some(snr) = self.snr else {
            return Ok(self.measurement);
        };
        let reference = match snr.reference_power {
            Some(p) => p,
            None => {
                let r = self.noise_free_ranges();
                if r.is_empty() {
                    return Ok(self.measurement);
                }
                r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64
            }
        };
        let noise = snr_to_measurement_noise(snr.snr_db, reference, &self.measurement)?;
        Ok(MeasurementModel::new(self.measurement.mode, noise))
    }
}

fn nth_line_of(text: &str, needle: &str, n: usize) -> Option<usize> {
    let (idx, _) = text.match_indices(needle).nth(n)?;
    Some(text[..idx].matches('\n').count() + 1)
}

/// Rescales `base` so that `10 log10(reference_power / trace) = snr_db`,
/// where the trace covers the channels the sensor reports.
pub fn snr_to_measurement_noise(
    snr_db: f64,
    reference_power: f64,
    base: &MeasurementModel,
) -> Result<MeasurementNoise> {
    if !(reference_power > 0.0) || !snr_db.is_finite() {
        return Err(Error::ParameterDomain(format!(
            "reference power must be positive, got {reference_power}"
        )));
    }
    let trace = base.noise_trace();
    if !(trace > 0.0) {
        return Err(Error::ParameterDomain("base noise trace must be positive".into()));
    }
    let target = reference_power * 10f64.powf(-snr_db / 10.0);
    Ok(base.noise.scaled(target / trace))
}

/// True states and measurements of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// `(object index, state)` for every live object, per step.
    pub states: Vec<Vec<(usize, ObjectState)>>,
    /// Unordered measurements, one per live object, per step.
    pub measurements: Vec<Vec<Measurement>>,
    pub cardinality: Vec<usize>,
    pub measurement_model: MeasurementModel,
}

impl GroundTruth {
    pub fn positions(&self, step: usize) -> Vec<[f64; 2]> {
        self.states[step].iter().map(|(_, s)| s.position()).collect()
    }

    pub fn write_states_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
        w.write_record(["step", "object_id", "x", "vx", "y", "vy", "omega"])?;
        for (k, live) in self.states.iter().enumerate() {
            for (id, s) in live {
                w.serialize((k, id, s.x, s.vx, s.y, s.vy, s.omega))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_measurements_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
        w.write_record(["step", "meas_index", "bearing", "range"])?;
        for (k, zs) in self.measurements.iter().enumerate() {
            for (m, z) in zs.iter().enumerate() {
                w.serialize((k, m, z.bearing, z.range))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Scenario(format!("{}: {other:?}", path.display())),
    }
}

/// Simulates every object over its lifetime and emits one measurement per
/// live object per step, shuffled.
pub fn generate<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> Result<GroundTruth> {
    spec.validate()?;
    let model = spec.effective_measurement()?;
    let q = spec.motion.covariance();
    let mut current: Vec<Option<ObjectState>> = vec![None; spec.objects.len()];
    let mut out = GroundTruth {
        states: Vec::with_capacity(spec.duration),
        measurements: Vec::with_capacity(spec.duration),
        cardinality: Vec::with_capacity(spec.duration),
        measurement_model: model,
    };
    for k in 0..spec.duration {
        let mut live = Vec::new();
        for (i, o) in spec.objects.iter().enumerate() {
            if k < o.birth || k >= o.death {
                current[i] = None;
                continue;
            }
            let s = match current[i] {
                None => o.initial,
                Some(prev) => propagate(&prev, &q, rng)?,
            };
            current[i] = Some(s);
            live.push((i, s));
        }
        let mut zs = live
            .iter()
            .map(|(_, s)| measure(s, &model, rng))
            .collect::<Result<Vec<_>>>()?;
        zs.shuffle(rng);
        out.cardinality.push(live.len());
        out.states.push(live);
        out.measurements.push(zs);
    }
    Ok(out)
}

/// Noise-free measurement of a state, exposed for geometry checks.
pub fn clean_measurement(state: &ObjectState, model: &MeasurementModel) -> Result<Measurement> {
    predict_measurement(state, model.mode)
}
