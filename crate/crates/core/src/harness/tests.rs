use std::path::{Path, PathBuf};

use approx::assert_relative_eq;
use proptest::prelude::*;

use super::*;
use crate::channel::{sample_channel, Geometry, RngStream};
use crate::queueing::ArrivalKind;
use crate::Channel;

fn channel(s: &Scenario, seed: u64) -> Channel {
    let geo = Geometry::from_scenario(s).unwrap();
    sample_channel(s, &geo, &mut RngStream::new(seed, 0).rng()).unwrap()
}

fn spec(policies: Vec<Policy>, slots: usize, out: PathBuf) -> ExperimentSpec {
    ExperimentSpec::new(Scenario::default(), policies, slots, vec![3], out)
}

#[test]
fn policy_names_round_trip() {
    for p in Policy::ALL {
        assert_eq!(p.name().parse::<Policy>().unwrap(), p);
        assert_eq!(p.to_string(), p.name());
    }
    assert_eq!("thruputopt-es".parse::<Policy>().unwrap(), Policy::ThroughputEs);
    assert!("XS".parse::<Policy>().is_err());
    assert!(Policy::ThroughputTs.unit_weights() && !Policy::Ts.unit_weights());
}

#[test]
fn sweep_axis_parsing_and_application() {
    assert_eq!("snr".parse::<SweepAxis>().unwrap(), SweepAxis::SnrDb);
    assert_eq!("elements".parse::<SweepAxis>().unwrap(), SweepAxis::Elements);
    assert!("power".parse::<SweepAxis>().is_err());
    let base = Scenario::default();
    let (s, bits) = SweepAxis::Elements.apply(&base, 12.0).unwrap();
    assert_eq!((s.num_elements, bits), (12, None));
    assert!(SweepAxis::Elements.apply(&base, 2.5).is_err());
    let (s, _) = SweepAxis::ArrivalScale.apply(&base, 0.5).unwrap();
    assert_eq!(s.arrival_rates, vec![1.0, 3.0]);
    let (s, bits) = SweepAxis::QuantBits.apply(&base, 3.0).unwrap();
    assert_eq!((s, bits), (base, Some(3)));
}

#[test]
fn spec_invariants() {
    let out = PathBuf::from("unused");
    assert!(spec(vec![], 1, out.clone()).validate().is_err());
    assert!(spec(vec![Policy::Ts], 0, out.clone()).validate().is_err());
    let mut s = spec(vec![Policy::Ts], 1, out);
    s.validate().unwrap();
    s.axis = SweepAxis::SnrDb;
    s.values = vec![0.0, 5.0, 5.0];
    assert!(s.validate().is_err());
    s.values = vec![0.0, 5.0];
    s.validate().unwrap();
    assert_eq!(s.points(), vec![0.0, 5.0]);
}

#[test]
fn scenario_file_round_trip() {
    let s = Scenario::default();
    let text = ScenarioFile::from_scenario(&s).to_toml().unwrap();
    assert!(text.contains("p_max_watts") && text.contains("position_m"));
    let back = ScenarioFile::parse(&text, Path::new("mem")).unwrap().to_scenario().unwrap();
    assert_eq!(back, s);
}

#[test]
fn scenario_file_rejects_unknown_and_invalid() {
    let mut text = ScenarioFile::from_scenario(&Scenario::default()).to_toml().unwrap();
    text = text.replace("p_max_watts", "p_max");
    let err = ScenarioFile::parse(&text, Path::new("bad.toml")).unwrap_err();
    assert!(err.to_string().contains("bad.toml"));

    let mut f = ScenarioFile::from_scenario(&Scenario::default());
    f.p_max_watts = -1.0;
    assert!(f.to_scenario().is_err());
}

#[test]
fn scenario_file_experiment_table() {
    let mut text = ScenarioFile::from_scenario(&Scenario::default()).to_toml().unwrap();
    text.push_str("\n[experiment]\npolicies = [\"ES\", \"ThroughputOpt-TS\"]\nslots = 7\naxis = \"snr_db\"\nvalues = [0.0, 10.0]\nfading = \"static\"\narrivals = \"deterministic\"\n");
    let f = ScenarioFile::parse(&text, Path::new("mem")).unwrap();
    let e = f.experiment.unwrap();
    assert_eq!(e.policies, Some(vec![Policy::Es, Policy::ThroughputTs]));
    assert_eq!(e.slots, Some(7));
    assert_eq!(e.axis, Some(SweepAxis::SnrDb));
    assert_eq!(e.fading, Some(Fading::Static));
    assert_eq!(e.arrivals, Some(ArrivalKind::Deterministic));
}

#[test]
fn throughput_policy_ignores_queues() {
    let s = Scenario::default();
    let chan = channel(&s, 1);
    let queues = [5.0, 0.0];
    let (sol, rec) = run_slot(Policy::ThroughputTs, &s, &chan, &queues);
    let sol = sol.unwrap();
    assert!(!rec.failed);
    // solved with unit weights, recorded with the queues
    assert_relative_eq!(sol.qwsr, sol.rates.iter().sum::<f64>(), max_relative = 1e-9);
    assert_relative_eq!(rec.qwsr, 5.0 * rec.rates[0], max_relative = 1e-12);
}

#[test]
fn zero_queues_record_zero_qwsr() {
    let s = Scenario::default();
    let chan = channel(&s, 2);
    let (_, rec) = run_slot(Policy::Ts, &s, &chan, &[0.0, 0.0]);
    assert!(!rec.failed);
    assert_eq!(rec.qwsr, 0.0);
}

#[test]
fn failed_slot_is_flagged_with_zero_rates() {
    let s = Scenario::default();
    let chan = channel(&s, 2);
    let (sol, rec) = run_slot(Policy::Ts, &s, &chan, &[f64::NAN, 1.0]);
    assert!(sol.is_none() && rec.failed);
    assert_eq!(rec.rates, vec![0.0, 0.0]);
    assert!(rec.error.contains("weights"));
}

#[test]
fn evaluate_rates_reproduces_solver_rates() {
    let s = Scenario::default();
    let chan = channel(&s, 4);
    for policy in [Policy::Ts, Policy::OmaTs, Policy::Es] {
        let sol = solve_policy(policy, &s, &chan, &[2.0, 6.0]).unwrap();
        let rates = evaluate_rates(&s, &chan, &sol, &sol.star).unwrap();
        for (a, b) in rates.iter().zip(&sol.rates) {
            assert_relative_eq!(a, b, max_relative = 1e-6, epsilon = 1e-9);
        }
    }
}

#[test]
fn queues_drain_without_arrivals() {
    let mut s = Scenario::default();
    s.arrival_rates = vec![0.0, 0.0];
    s.initial_queues = vec![10.0, 10.0];
    let cfg = TrajectoryConfig {
        policy: Policy::Ts,
        seed: 0,
        slots: 30,
        fading: Fading::Iid,
        arrivals: ArrivalKind::Poisson,
        quant_bits: None,
        axis_value: None,
    };
    let t = simulate_trajectory(&s, &cfg).unwrap();
    let first_empty = t
        .records
        .iter()
        .position(|r| r.queues.iter().all(|&q| q == 0.0))
        .expect("queues never drained");
    assert!(t.records[first_empty..].iter().all(|r| r.queues == vec![0.0, 0.0]));
    assert_eq!(t.final_queues, vec![0.0, 0.0]);
    assert!(t.metrics.is_some());
}

#[test]
fn static_fading_repeats_the_channel() {
    let s = Scenario::default();
    let mut cfg = TrajectoryConfig {
        policy: Policy::Ts,
        seed: 5,
        slots: 3,
        fading: Fading::Static,
        arrivals: ArrivalKind::Deterministic,
        quant_bits: None,
        axis_value: None,
    };
    let mut s2 = s.clone();
    s2.initial_queues = vec![4.0, 4.0];
    s2.arrival_rates = vec![0.0, 0.0];
    let t = simulate_trajectory(&s2, &cfg).unwrap();
    assert_eq!(t.records.len(), 3);
    cfg.fading = Fading::Iid;
    let u = simulate_trajectory(&s2, &cfg).unwrap();
    // slot 0 sees the same draw under both settings
    assert_eq!(t.records[0].rates, u.records[0].rates);
}

fn temp_dir(tag: &str) -> tempfile::TempDir {
    tempfile::Builder::new().prefix(tag).tempdir().unwrap()
}

#[test]
fn single_slot_writes_one_record_per_policy() {
    let dir = temp_dir("one-slot");
    let sp = spec(vec![Policy::Ts, Policy::OmaTs, Policy::ThroughputTs], 1, dir.path().to_path_buf());
    let out = simulate(&sp).unwrap();
    let records = read_records(&dir.path().join(RECORDS_FILE)).unwrap();
    assert_eq!(records.len(), 3);
    assert_eq!(out.summary.len(), 3);
    assert!(out.summary.iter().all(|r| r.tail_slope.iter().all(Option::is_none)));
    for name in [SUMMARY_FILE, TIMING_FILE, META_FILE] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join(META_FILE)).unwrap()).unwrap();
    assert_eq!(meta["spec"]["slots"], 1);
}

#[test]
fn outputs_are_reproducible_and_parse_back() {
    let (a, b) = (temp_dir("rep-a"), temp_dir("rep-b"));
    let mut sa = spec(vec![Policy::Ts, Policy::ThroughputTs], 12, a.path().to_path_buf());
    sa.seeds = vec![1, 2];
    let mut sb = sa.clone();
    sb.out_dir = b.path().to_path_buf();
    let out = simulate(&sa).unwrap();
    simulate(&sb).unwrap();
    for name in [RECORDS_FILE, SUMMARY_FILE] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between identical runs");
    }
    let records = read_records(&a.path().join(RECORDS_FILE)).unwrap();
    let emitted: Vec<SlotRecord> = out
        .trajectories
        .iter()
        .flat_map(|t| t.records.iter().cloned())
        .map(|mut r| {
            r.wall_seconds = 0.0;
            r
        })
        .collect();
    assert_eq!(records, emitted);
    assert_eq!(read_summary(&a.path().join(SUMMARY_FILE)).unwrap(), out.summary);
}

#[test]
fn sweep_emits_one_row_per_value_policy_seed() {
    let dir = temp_dir("sweep");
    let mut sp = spec(vec![Policy::Ts, Policy::OmaTs], 1, dir.path().to_path_buf());
    sp.axis = SweepAxis::SnrDb;
    sp.values = vec![0.0, 10.0];
    sp.seeds = vec![0, 1];
    let out = sweep(&sp).unwrap();
    assert_eq!(out.summary.len(), 8);
    assert!(out.summary.iter().all(|r| r.axis == SweepAxis::SnrDb && r.value.is_some()));
    assert!(simulate(&sp).is_err());
    sp.axis = SweepAxis::None;
    assert!(sweep(&sp).is_err());
}

#[test]
fn single_value_sweep_matches_simulate() {
    let (a, b) = (temp_dir("sw"), temp_dir("sim"));
    let mut sw = spec(vec![Policy::Ts], 2, a.path().to_path_buf());
    sw.axis = SweepAxis::SnrDb;
    sw.values = vec![sw.scenario.snr_db];
    let mut sim = spec(vec![Policy::Ts], 2, b.path().to_path_buf());
    sim.axis = SweepAxis::None;
    let x = sweep(&sw).unwrap();
    let y = simulate(&sim).unwrap();
    for (r, s) in x.trajectories[0].records.iter().zip(&y.trajectories[0].records) {
        assert_eq!((&r.rates, &r.queues, r.qwsr), (&s.rates, &s.queues, s.qwsr));
    }
}

#[test]
fn missing_output_directory_parent_is_reported() {
    let dir = temp_dir("io");
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let sp = spec(vec![Policy::Ts], 1, blocker.join("sub"));
    let err = simulate(&sp).unwrap_err().to_string();
    assert!(err.contains("file"), "{err}");
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), Just(0.0), 1e-300..1e300f64]
}

proptest! {
    #[test]
    fn record_rows_round_trip(
        seed in any::<u64>(),
        slot in 0usize..100_000,
        value in proptest::option::of(finite()),
        queues in proptest::collection::vec(finite(), 1..4),
        qwsr in finite(),
        failed in any::<bool>(),
        error in ".*",
        p in 0usize..Policy::ALL.len(),
    ) {
        let k = queues.len();
        let rec = SlotRecord {
            seed,
            axis_value: value,
            policy: Policy::ALL[p],
            slot,
            rates: queues.iter().map(|q| q * 0.5).collect(),
            queues,
            qwsr,
            iterations: slot % 7,
            conic_iterations: slot,
            failed,
            error,
            wall_seconds: 0.0,
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(SlotRecord::header(k)).unwrap();
        w.write_record(rec.to_row()).unwrap();
        let bytes = w.into_inner().unwrap();
        let mut r = csv::Reader::from_reader(bytes.as_slice());
        let row = r.records().next().unwrap().unwrap();
        let cells: Vec<&str> = row.iter().collect();
        prop_assert_eq!(SlotRecord::from_row(&cells, k).unwrap(), rec);
    }
}

#[test]
fn selftest_passes_on_default_scenario() {
    let checks = selftest(&Scenario::default()).unwrap();
    for c in &checks {
        assert!(c.passed, "{}: {}", c.name, c.detail);
    }
    assert!(checks.len() >= 7);
}
