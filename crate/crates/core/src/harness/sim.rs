use std::time::Instant;

use rayon::prelude::*;

use super::output::{summarize, SummaryRow};
use super::{ExperimentSpec, Fading, Policy, SweepAxis};
use crate::channel::{noise_power, sample_channel, Geometry, RngStream};
use crate::error::{Error, Result};
use crate::model::{self, DecodingOrder, Scenario, Side};
use crate::optimizer::{bcd_es, conv_ris, ms_penalty, oma, order_search, quantize_star, ts_solve, ues};
use crate::queueing::{
    sample_arrivals, stability_metrics, step_queue, ArrivalKind, ArrivalProcess, QueueState,
    StabilityMetrics,
};
use crate::{Channel, Solution};

/// Stream id of the arrival draws; channel draws use the slot index.
const ARRIVAL_STREAM: u64 = 1 << 63;

/// Queues are kept in slot-normalized units: one slot at rate `r` removes
/// `r` bits/Hz.
const SLOT: f64 = 1.0;

/// One (slot, policy) row of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub seed: u64,
    /// Sweep value, `None` outside a sweep.
    pub axis_value: Option<f64>,
    pub policy: Policy,
    pub slot: usize,
    /// Backlog at the start of the slot.
    pub queues: Vec<f64>,
    /// Served rates in bits/s/Hz.
    pub rates: Vec<f64>,
    /// `Σ Q_k R_k` with the actual queues.
    pub qwsr: f64,
    /// Outer-loop iterations.
    pub iterations: usize,
    pub conic_iterations: usize,
    pub failed: bool,
    pub error: String,
    /// Solve time; written to the timing sidecar only.
    pub wall_seconds: f64,
}

/// Solves one slot with the given weights: ES, MS and the baselines search
/// every decoding order; TS searches per period; OMA needs no order.
pub fn solve_policy(policy: Policy, scenario: &Scenario, chan: &Channel, weights: &[f64]) -> Result<Solution> {
    match policy {
        Policy::Es | Policy::ThroughputEs => order_search(scenario, chan, weights, |o| bcd_es(scenario, chan, weights, o)),
        Policy::Ms => order_search(scenario, chan, weights, |o| ms_penalty(scenario, chan, weights, o)),
        Policy::Ues => order_search(scenario, chan, weights, |o| ues(scenario, chan, weights, o)),
        Policy::ConvRis => order_search(scenario, chan, weights, |o| conv_ris(scenario, chan, weights, o)),
        Policy::Ts | Policy::ThroughputTs => ts_solve(scenario, chan, weights),
        Policy::OmaEs | Policy::OmaMs | Policy::OmaTs => oma(scenario, chan, weights, policy.protocol()),
    }
}

/// Runs `policy` for one slot. Weights are the queues (all ones for the
/// throughput policies). A failed solve is recorded and served with zero
/// rates.
pub fn run_slot(policy: Policy, scenario: &Scenario, chan: &Channel, queues: &[f64]) -> (Option<Solution>, SlotRecord) {
    let weights = if policy.unit_weights() { vec![1.0; queues.len()] } else { queues.to_vec() };
    let start = Instant::now();
    let result = solve_policy(policy, scenario, chan, &weights);
    let wall_seconds = start.elapsed().as_secs_f64();
    let mut record = SlotRecord {
        seed: 0,
        axis_value: None,
        policy,
        slot: 0,
        queues: queues.to_vec(),
        rates: vec![0.0; queues.len()],
        qwsr: 0.0,
        iterations: 0,
        conic_iterations: 0,
        failed: false,
        error: String::new(),
        wall_seconds,
    };
    match result {
        Ok(sol) => {
            record.rates = sol.rates.iter().map(|&r| if r.is_finite() { r.max(0.0) } else { 0.0 }).collect();
            record.qwsr = queues.iter().zip(&record.rates).map(|(q, r)| q * r).sum();
            record.iterations = sol.diagnostics.iterations;
            record.conic_iterations = sol.diagnostics.conic_iterations;
            (Some(sol), record)
        }
        Err(e) => {
            log::warn!("{policy} slot failed: {e}");
            record.failed = true;
            record.error = e.to_string();
            (None, record)
        }
    }
}

/// Realized rates of `sol` with its surface replaced by `star`.
pub fn evaluate_rates(scenario: &Scenario, chan: &Channel, sol: &Solution, star: &crate::Star) -> Result<Vec<f64>> {
    let noise = noise_power(scenario)?;
    if let Some(f) = &sol.oma_fractions {
        return model::oma_rates(chan, star, &sol.w, f, noise);
    }
    let gains = model::gain_matrix(chan, star, &sol.w)?;
    let active: Vec<usize> = match &sol.ts {
        // only the users of the active period are served
        Some(ts) => {
            let side = if ts.alpha_r >= ts.alpha_t { Side::Reflection } else { Side::Transmission };
            (0..chan.num_users()).filter(|&k| chan.sides[k] == side).collect()
        }
        None => (0..chan.num_users()).collect(),
    };
    let sub: Vec<Vec<f64>> = active.iter().map(|&j| active.iter().map(|&k| gains[j][k]).collect()).collect();
    let perm: Vec<usize> = sol
        .order
        .perm()
        .iter()
        .filter_map(|u| active.iter().position(|a| a == u))
        .collect();
    let sub_rates = model::rates_from_gains(&sub, &DecodingOrder::new(perm)?, noise);
    let mut rates = vec![0.0; chan.num_users()];
    for (i, &k) in active.iter().enumerate() {
        rates[k] = sub_rates[i];
    }
    Ok(rates)
}

/// Parameters of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    pub policy: Policy,
    pub seed: u64,
    pub slots: usize,
    pub fading: Fading,
    pub arrivals: ArrivalKind,
    /// Phase bits applied to each optimized surface.
    pub quant_bits: Option<u32>,
    pub axis_value: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: TrajectoryConfig,
    pub records: Vec<SlotRecord>,
    /// Backlog after the last slot.
    pub final_queues: Vec<f64>,
    /// Over the slot-start backlogs; `None` below ten slots.
    pub metrics: Option<StabilityMetrics>,
}

impl Trajectory {
    /// Backlog at the start of every slot.
    pub fn queue_path(&self) -> Vec<Vec<f64>> {
        self.records.iter().map(|r| r.queues.clone()).collect()
    }
}

fn slot_seed(base: u64, seed: u64, slot: usize) -> u64 {
    base ^ seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (slot as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Sample channel → solve → sample arrivals → update queues, per slot.
/// Draws depend only on `(seed, slot)`, so every policy sees the same
/// channels and arrivals.
pub fn simulate_trajectory(scenario: &Scenario, cfg: &TrajectoryConfig) -> Result<Trajectory> {
    scenario.validate()?;
    if cfg.slots == 0 {
        return Err(Error::invalid("the horizon must be at least one slot"));
    }
    let geo = Geometry::from_scenario(scenario)?;
    let mut queues = QueueState::new(scenario.initial_queues.clone())?;
    let mut arrivals = ArrivalProcess::new(scenario.arrival_rates.clone(), cfg.arrivals, RngStream::new(cfg.seed, ARRIVAL_STREAM))?;
    let mut fixed: Option<Channel> = None;
    let mut records = Vec::with_capacity(cfg.slots);
    for t in 0..cfg.slots {
        let chan = match (cfg.fading, &fixed) {
            (Fading::Static, Some(c)) => c.clone(),
            _ => {
                let c = sample_channel(scenario, &geo, &mut RngStream::new(cfg.seed, t as u64).rng())?;
                if cfg.fading == Fading::Static {
                    fixed = Some(c.clone());
                }
                c
            }
        };
        let mut slot_scenario = scenario.clone();
        slot_scenario.params.init_seed = slot_seed(scenario.params.init_seed, cfg.seed, t);
        let (sol, mut record) = run_slot(cfg.policy, &slot_scenario, &chan, &queues.q);
        if let (Some(bits), Some(sol)) = (cfg.quant_bits, &sol) {
            let star = quantize_star(&sol.star, Some(bits), None);
            let rates = evaluate_rates(scenario, &chan, sol, &star)?;
            record.rates = rates.iter().map(|&r| if r.is_finite() { r.max(0.0) } else { 0.0 }).collect();
            record.qwsr = queues.q.iter().zip(&record.rates).map(|(q, r)| q * r).sum();
        }
        record.seed = cfg.seed;
        record.slot = t;
        record.axis_value = cfg.axis_value;
        let a = sample_arrivals(&mut arrivals);
        queues = step_queue(&queues, &record.rates, &a, SLOT)?;
        records.push(record);
    }
    let path: Vec<Vec<f64>> = records.iter().map(|r| r.queues.clone()).collect();
    let metrics = if path.len() >= 10 { Some(stability_metrics(&path)?) } else { None };
    Ok(Trajectory {
        config: cfg.clone(),
        records,
        final_queues: queues.q,
        metrics,
    })
}

/// Trajectories and their summary rows, in (value, policy, seed) order.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trajectories: Vec<Trajectory>,
    pub summary: Vec<SummaryRow>,
}

/// Every (value, policy, seed) trajectory of `spec`, run in parallel.
fn run(spec: &ExperimentSpec) -> Result<RunOutput> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for value in spec.points() {
        let (scenario, bits) = match spec.axis {
            SweepAxis::None => (spec.scenario.clone(), None),
            axis => axis.apply(&spec.scenario, value)?,
        };
        let axis_value = (spec.axis != SweepAxis::None).then_some(value);
        for &policy in &spec.policies {
            for &seed in &spec.seeds {
                let cfg = TrajectoryConfig {
                    policy,
                    seed,
                    slots: spec.slots,
                    fading: spec.fading,
                    arrivals: spec.arrivals,
                    quant_bits: bits,
                    axis_value,
                };
                jobs.push((scenario.clone(), cfg));
            }
        }
    }
    let trajectories: Vec<Trajectory> = jobs
        .par_iter()
        .map(|(scenario, cfg)| simulate_trajectory(scenario, cfg))
        .collect::<Result<_>>()?;
    let summary = trajectories.iter().map(|t| summarize(spec.axis, t)).collect();
    Ok(RunOutput { trajectories, summary })
}

/// Multi-slot simulation of every policy and seed; writes the record,
/// summary, timing and metadata files to `spec.out_dir`.
pub fn simulate(spec: &ExperimentSpec) -> Result<RunOutput> {
    if spec.axis != SweepAxis::None {
        return Err(Error::invalid("simulate takes no sweep axis; use sweep"));
    }
    execute(spec)
}

/// One trajectory per (axis value, policy, seed) with the same outputs as
/// [`simulate`] plus the axis columns.
pub fn sweep(spec: &ExperimentSpec) -> Result<RunOutput> {
    if spec.axis == SweepAxis::None {
        return Err(Error::invalid("sweep needs an axis"));
    }
    execute(spec)
}

fn execute(spec: &ExperimentSpec) -> Result<RunOutput> {
    let started = std::time::SystemTime::now();
    let clock = Instant::now();
    let out = run(spec)?;
    super::output::write_outputs(spec, &out, started, clock.elapsed().as_secs_f64())?;
    Ok(out)
}
