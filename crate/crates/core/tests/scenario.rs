use std::path::{Path, PathBuf};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ddp_track::dynamics::{MeasurementModel, MeasurementNoise, MotionNoise, ObjectState, SensorMode};
use ddp_track::scenario::{generate, snr_to_measurement_noise, ObjectSpec, ScenarioSpec};
use ddp_track::Error;

fn shipped(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn load(name: &str) -> ScenarioSpec {
    ScenarioSpec::load(&shipped(name)).unwrap()
}

fn alive(spec: &ScenarioSpec, object: usize) -> Vec<usize> {
    let truth = generate(spec, &mut ChaCha8Rng::seed_from_u64(spec.seed)).unwrap();
    (0..spec.duration)
        .filter(|&k| truth.states[k].iter().any(|(i, _)| *i == object))
        .collect()
}

#[test]
fn table1_schedule() {
    let spec = load("table1.toml");
    assert_eq!(spec.objects.len(), 10);
    assert_eq!(alive(&spec, 0), (0..100).collect::<Vec<_>>());
    assert_eq!(alive(&spec, 3), (10..60).collect::<Vec<_>>());
    let truth = generate(&spec, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(truth.cardinality[50], 8);
}

#[test]
fn close_proximity_schedule_shares_one_trajectory() {
    let spec = load("close_proximity.toml");
    let births: Vec<usize> = spec.objects.iter().map(|o| o.birth).collect();
    let deaths: Vec<usize> = spec.objects.iter().map(|o| o.death).collect();
    assert_eq!(births, [0, 5, 20, 30, 40]);
    assert_eq!(deaths, [70, 100, 100, 45, 80]);
    assert!(spec.objects.iter().all(|o| o.initial == spec.objects[0].initial));
}

#[test]
fn straight_line_measurements_follow_the_analytic_curve() {
    let spec = ScenarioSpec {
        name: "line".into(),
        duration: 30,
        seed: 0,
        motion: MotionNoise::zero(),
        measurement: MeasurementModel::new(SensorMode::BearingRange, MeasurementNoise::zero()),
        snr: None,
        objects: vec![ObjectSpec {
            birth: 0,
            death: 30,
            initial: ObjectState::new(400.0, 7.0, -300.0, 11.0, 0.0),
        }],
    };
    let truth = generate(&spec, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    for (k, zs) in truth.measurements.iter().enumerate() {
        let (x, y) = (400.0 + 7.0 * k as f64, -300.0 + 11.0 * k as f64);
        assert_eq!(zs.len(), 1);
        assert!((zs[0].bearing - y.atan2(x)).abs() < 1e-9, "step {k}");
        assert!((zs[0].range - x.hypot(y)).abs() < 1e-7, "step {k}");
    }
}

#[test]
fn snr_conversion() {
    let base = MeasurementModel::default();
    let zero = snr_to_measurement_noise(0.0, 50.0, &base).unwrap();
    assert!((zero.trace() - 50.0).abs() < 1e-9);
    let minus3 = snr_to_measurement_noise(-3.0, 50.0, &base).unwrap();
    assert!((minus3.trace() / 50.0 - 10f64.powf(0.3)).abs() < 1e-9);
    let traces: Vec<f64> = [-3.0, -5.0, -10.0]
        .iter()
        .map(|&db| snr_to_measurement_noise(db, 50.0, &base).unwrap().trace())
        .collect();
    assert!(traces.windows(2).all(|w| w[1] > w[0]));
    // relative channel weights are kept
    let ratio = base.noise.range_var / base.noise.bearing_var;
    assert!((minus3.range_var / minus3.bearing_var - ratio).abs() < 1e-6 * ratio);
    assert!(snr_to_measurement_noise(0.0, 0.0, &base).is_err());
}

#[test]
fn range_only_snr_counts_only_the_range_channel() {
    let spec = load("snr_minus3db.toml");
    let model = spec.effective_measurement().unwrap();
    assert_eq!(model.mode, SensorMode::RangeOnly);
    assert!((model.noise.range_var - 500.0 * 10f64.powf(0.3)).abs() < 1e-9);
}

#[test]
fn shipped_scenarios_stay_inside_the_window() {
    for name in [
        "table1.toml",
        "close_proximity.toml",
        "snr_minus3db.toml",
        "snr_minus5db.toml",
        "snr_minus10db.toml",
        "empty.toml",
    ] {
        let spec = load(name);
        for seed in 0..20 {
            let truth = generate(&spec, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            for (k, live) in truth.states.iter().enumerate() {
                for (i, s) in live {
                    let (b, r) = (s.y.atan2(s.x), s.x.hypot(s.y));
                    assert!(r < 2000.0, "{name} seed {seed} object {i} step {k}: range {r}");
                    assert!(b.abs() < std::f64::consts::FRAC_PI_2, "{name} object {i} step {k}: bearing {b}");
                }
            }
        }
    }
}

#[test]
fn empty_scenario_has_no_measurements() {
    let spec = load("empty.toml");
    let truth = generate(&spec, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert_eq!(truth.cardinality, vec![0; spec.duration]);
    assert!(truth.measurements.iter().all(Vec::is_empty));
}

#[test]
fn bad_schedule_points_at_the_object() {
    let text = "name = \"bad\"\nduration = 10\n\n[[objects]]\nbirth = 0\ndeath = 5\ninitial = { x = 100.0, vx = 0.0, y = 0.0, vy = 0.0, omega = 0.0 }\n\n[[objects]]\nbirth = 6\ndeath = 4\ninitial = { x = 100.0, vx = 0.0, y = 0.0, vy = 0.0, omega = 0.0 }\n";
    let err = ScenarioSpec::from_toml(text, Path::new("bad.toml")).unwrap_err();
    assert!(matches!(err, Error::Config { line: Some(9), .. }), "{err}");
    assert!(err.to_string().starts_with("bad.toml:9:"), "{err}");
}

#[test]
fn object_outside_the_window_is_rejected() {
    let text = "[[objects]]\nbirth = 0\ndeath = 5\ninitial = { x = -10.0, vx = 0.0, y = 0.0, vy = 0.0, omega = 0.0 }\n";
    let err = ScenarioSpec::from_toml(text, Path::new("w.toml")).unwrap_err();
    assert!(err.to_string().contains("sensor window"), "{err}");
    let text = "[[objects]]\nbirth = 0\ndeath = 5\ninitial = { x = 1500.0, vx = 0.0, y = 1500.0, vy = 0.0, omega = 0.0 }\n";
    assert!(ScenarioSpec::from_toml(text, Path::new("w.toml")).is_err());
}

#[test]
fn unknown_keys_are_rejected_with_a_line() {
    let text = "name = \"x\"\nduraton = 10\n";
    let err = ScenarioSpec::from_toml(text, Path::new("u.toml")).unwrap_err();
    assert!(err.to_string().starts_with("u.toml:2:"), "{err}");
}

#[test]
fn csv_exports_have_the_documented_headers() {
    let spec = load("close_proximity.toml");
    let truth = generate(&spec, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let states = dir.path().join("states.csv");
    let meas = dir.path().join("meas.csv");
    truth.write_states_csv(&states).unwrap();
    truth.write_measurements_csv(&meas).unwrap();
    let s = std::fs::read_to_string(&states).unwrap();
    let m = std::fs::read_to_string(&meas).unwrap();
    assert_eq!(s.lines().next(), Some("step,object_id,x,vx,y,vy,omega"));
    assert_eq!(m.lines().next(), Some("step,meas_index,bearing,range"));
    let total: usize = truth.cardinality.iter().sum();
    assert_eq!(s.lines().count() - 1, total);
    assert_eq!(m.lines().count() - 1, total);
}

fn arb_spec() -> impl Strategy<Value = ScenarioSpec> {
    let object = (0usize..30, 1usize..30, 100.0f64..900.0, -500.0f64..500.0, -3.0f64..3.0, -3.0f64..3.0).prop_map(
        |(birth, len, x, y, vx, vy)| ObjectSpec {
            birth,
            death: (birth + len).min(40),
            initial: ObjectState::new(x, vx, y, vy, 0.0),
        },
    );
    (proptest::collection::vec(object, 0..6), any::<u64>()).prop_map(|(objects, seed)| ScenarioSpec {
        name: "random".into(),
        duration: 40,
        seed,
        motion: MotionNoise { sigma: 0.5, sigma_u: 0.0 },
        measurement: MeasurementModel::default(),
        snr: None,
        objects: objects.into_iter().filter(|o| o.birth < o.death).collect(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generation_is_reproducible(spec in arb_spec()) {
        let a = generate(&spec, &mut ChaCha8Rng::seed_from_u64(spec.seed)).unwrap();
        let b = generate(&spec, &mut ChaCha8Rng::seed_from_u64(spec.seed)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn one_measurement_per_live_object(spec in arb_spec()) {
        let truth = generate(&spec, &mut ChaCha8Rng::seed_from_u64(spec.seed)).unwrap();
        let total: usize = truth.measurements.iter().map(Vec::len).sum();
        let lifetimes: usize = spec.objects.iter().map(|o| o.death - o.birth).sum();
        prop_assert_eq!(total, lifetimes);
        for k in 0..spec.duration {
            prop_assert_eq!(truth.measurements[k].len(), truth.cardinality[k]);
            prop_assert_eq!(truth.states[k].len(), truth.cardinality[k]);
        }
    }
}
