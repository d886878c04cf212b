use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use qwsr_core::channel::{noise_power, sample_channel, Geometry, RngStream};
use qwsr_core::harness::{
    self, load_scenario, ExperimentEntry, ExperimentSpec, Fading, Policy, ScenarioFile, SweepAxis,
};
use qwsr_core::queueing::ArrivalKind;
use qwsr_core::Scenario;

#[derive(Parser)]
#[command(name = "qwsr", version, about = "Queue-weighted sum-rate optimization for STAR-RIS NOMA downlinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one slot and print the solution and its trace.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Slot weights; defaults to the initial queues of the scenario.
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
    },
    /// Run queue trajectories and write records, summary and metadata.
    Simulate(RunArgs),
    /// Run trajectories for every value of one scenario parameter.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// none | elements | snr_db | arrival_scale | quant_bits
        #[arg(long)]
        axis: Option<SweepAxis>,
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Check a scenario file; without one, print the default scenario.
    Validate {
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Run the built-in invariant checks.
    Selftest {
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML); the built-in default otherwise.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Comma-separated policies, e.g. ES,TS,ThroughputOpt-ES.
    #[arg(long, value_delimiter = ',')]
    policy: Option<Vec<Policy>>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seed: Option<Vec<u64>>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    slots: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// iid | static
    #[arg(long, value_parser = parse_fading)]
    fading: Option<Fading>,
    /// poisson | deterministic
    #[arg(long, value_parser = parse_arrivals)]
    arrivals: Option<ArrivalKind>,
}

fn parse_fading(s: &str) -> Result<Fading, String> {
    match s {
        "iid" => Ok(Fading::Iid),
        "static" => Ok(Fading::Static),
        _ => Err(format!("unknown fading {s:?}; expected iid or static")),
    }
}

fn parse_arrivals(s: &str) -> Result<ArrivalKind, String> {
    match s {
        "poisson" => Ok(ArrivalKind::Poisson),
        "deterministic" => Ok(ArrivalKind::Deterministic),
        _ => Err(format!("unknown arrival kind {s:?}; expected poisson or deterministic")),
    }
}

fn scenario_from(path: Option<&Path>) -> Result<(Scenario, ExperimentEntry)> {
    match path {
        Some(p) => {
            let (s, e) = load_scenario(p).with_context(|| format!("loading {}", p.display()))?;
            Ok((s, e.unwrap_or_default()))
        }
        None => Ok((Scenario::default(), ExperimentEntry::default())),
    }
}

fn build_spec(run: RunArgs, axis: Option<SweepAxis>, values: Option<Vec<f64>>) -> Result<ExperimentSpec> {
    let (scenario, file) = scenario_from(run.common.scenario.as_deref())?;
    let mut spec = ExperimentSpec::new(
        scenario,
        run.common.policy.or(file.policies).unwrap_or_else(|| vec![Policy::Es]),
        run.slots.or(file.slots).unwrap_or(100),
        run.common.seed.or(file.seeds).unwrap_or_else(|| vec![0]),
        run.out.or(file.out_dir).unwrap_or_else(|| PathBuf::from("out")),
    );
    spec.axis = axis.or(file.axis).unwrap_or(SweepAxis::None);
    spec.values = values.or(file.values).unwrap_or_default();
    spec.fading = run.fading.or(file.fading).unwrap_or_default();
    spec.arrivals = run.arrivals.or(file.arrivals).unwrap_or(ArrivalKind::Poisson);
    spec.validate()?;
    Ok(spec)
}

fn report(out: &harness::RunOutput, spec: &ExperimentSpec) {
    for row in &out.summary {
        let value = row.value.map(|v| format!("{}={v} ", spec.axis.name())).unwrap_or_default();
        let slopes: Vec<String> = row
            .tail_slope
            .iter()
            .map(|s| s.map_or("-".into(), |s| format!("{s:.4}")))
            .collect();
        println!(
            "{value}{} seed {}: mean QWSR {:.4}, avg queues {:?}, tail slopes [{}], failed slots {}",
            row.policy,
            row.seed,
            row.mean_qwsr,
            row.avg_queue.iter().map(|q| (q * 1e3).round() / 1e3).collect::<Vec<_>>(),
            slopes.join(", "),
            row.failed_slots
        );
    }
    println!("wrote {}", spec.out_dir.display());
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Solve { common, weights } => {
            let (scenario, _) = scenario_from(common.scenario.as_deref())?;
            let weights = weights.unwrap_or_else(|| scenario.initial_queues.clone());
            let geo = Geometry::from_scenario(&scenario)?;
            for seed in common.seed.unwrap_or_else(|| vec![0]) {
                let chan = sample_channel(&scenario, &geo, &mut RngStream::new(seed, 0).rng())?;
                for policy in common.policy.clone().unwrap_or_else(|| vec![Policy::Es]) {
                    let start = std::time::Instant::now();
                    let sol = harness::solve_policy(policy, &scenario, &chan, &weights)
                        .with_context(|| format!("{policy}, seed {seed}"))?;
                    println!("{policy} seed {seed} ({:.2} s)", start.elapsed().as_secs_f64());
                    println!("  QWSR       {:.6}", sol.qwsr);
                    println!("  rates      {:?}", sol.rates);
                    println!("  order      {:?}", sol.order.perm());
                    println!("  power      {:.4} W (noise {:.3e} W)", sol.total_power(), noise_power(&scenario)?);
                    if let Some(ts) = &sol.ts {
                        println!("  time split α_r {} α_t {}", ts.alpha_r, ts.alpha_t);
                    }
                    if let Some(f) = &sol.oma_fractions {
                        println!("  fractions  {f:?}");
                    }
                    let d = &sol.diagnostics;
                    println!(
                        "  rank ratio beamforming {:.2e}, surface {:.2e}; {} iterations, {} conic iterations",
                        d.max_w_rank_ratio, d.max_d_rank_ratio, d.iterations, d.conic_iterations
                    );
                    let trace: Vec<String> = sol.trace.values.iter().map(|v| format!("{v:.6}")).collect();
                    println!("  trace      {}", trace.join(" "));
                }
            }
        }
        Command::Simulate(run) => {
            let spec = build_spec(run, None, None)?;
            if spec.axis != SweepAxis::None {
                bail!("the scenario file sets a sweep axis; use the sweep command");
            }
            let out = harness::simulate(&spec)?;
            report(&out, &spec);
        }
        Command::Sweep { run, axis, values } => {
            let spec = build_spec(run, axis, values)?;
            let out = harness::sweep(&spec)?;
            report(&out, &spec);
        }
        Command::Validate { scenario } => match scenario {
            Some(p) => {
                let (s, _) = load_scenario(&p).with_context(|| format!("loading {}", p.display()))?;
                println!(
                    "{}: valid ({} users, N={}, M={}, noise {:.3e} W)",
                    p.display(),
                    s.num_users(),
                    s.num_antennas,
                    s.num_elements,
                    noise_power(&s)?
                );
            }
            None => print!("{}", ScenarioFile::from_scenario(&Scenario::default()).to_toml()?),
        },
        Command::Selftest { scenario } => {
            let (s, _) = scenario_from(scenario.as_deref())?;
            let checks = harness::selftest(&s)?;
            let failed = checks.iter().filter(|c| !c.passed).count();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if failed > 0 {
                bail!("{failed} of {} checks failed", checks.len());
            }
        }
    }
    Ok(())
}
