use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sim::solve_policy;
use super::Policy;
use crate::channel::{path_loss_db, sample_channel, Geometry, RngStream};
use crate::conic::{self, ConicProblem, HermCoeff, LinExpr, Sense, SolverOptions};
use crate::error::Result;
use crate::model::{check_fairness, Scenario};
use crate::optimizer::lower_bound_rate;
use crate::queueing::{step_queue, QueueState};
use crate::Complex;

/// Outcome of one self-test check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

/// Fast invariant suite: reference formulas, a solver oracle and one
/// optimized slot of `scenario`.
pub fn selftest(scenario: &Scenario) -> Result<Vec<Check>> {
    scenario.validate()?;
    let mut out = Vec::new();

    let pl = path_loss_db(250.0, 2.0)?;
    out.push(check("path_loss_reference", (pl - 86.78).abs() <= 0.01, format!("{pl:.4} dB at 250 m, 2 GHz")));

    let mut worst = 0.0f64;
    for q in 0..6 {
        for r in 0..6 {
            for a in 0..6 {
                let (q, r, a) = (q as f64, r as f64, a as f64);
                let next = step_queue(&QueueState::new(vec![q])?, &[r], &[a], 1.0)?.q[0];
                worst = worst.max((next - ((q - r).max(0.0) + a)).abs());
            }
        }
    }
    out.push(check("queue_recursion_grid", worst == 0.0, format!("max deviation {worst:e} over 216 cases")));

    let grid: Vec<f64> = (0..40).map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 39.0)).collect();
    let mut excess = f64::NEG_INFINITY;
    for &(st, it) in &[(0.5, 2.0), (1.0, 1.0), (3.0, 0.2)] {
        for &s in &grid {
            for &i in &grid {
                let exact = (1.0 + 1.0 / (s * i)).log2();
                excess = excess.max(lower_bound_rate(s, i, st, it)? - exact);
            }
        }
    }
    out.push(check("taylor_underestimate", excess <= 1e-12, format!("max bound − exact {excess:.3e}")));

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut err = 0.0f64;
    for n in 2..=6 {
        let a = DMatrix::from_fn(n, n, |_, _| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let c = (&a + a.adjoint()) * Complex::new(0.5, 0.0);
        let oracle = c.clone().symmetric_eigenvalues().max();
        let mut p = ConicProblem::new();
        let x = p.add_block(n);
        p.maximize(LinExpr::new().block(x, HermCoeff::dense(c)));
        p.constrain(LinExpr::new().block(x, HermCoeff::identity(1.0)), Sense::Eq, 1.0);
        let sol = conic::solve(&p, &SolverOptions::default())?;
        err = err.max(if sol.is_optimal() { (sol.primal_objective - oracle).abs() } else { f64::INFINITY });
    }
    out.push(check("conic_max_eigenvalue", err <= 1e-6, format!("max |value − λmax| {err:.3e}")));

    let geo = Geometry::from_scenario(scenario)?;
    let chan = sample_channel(scenario, &geo, &mut RngStream::new(0, 0).rng())?;
    let weights = scenario.initial_queues.clone();
    match solve_policy(Policy::Es, scenario, &chan, &weights) {
        Ok(sol) => {
            let d = &sol.diagnostics;
            out.push(check(
                "es_trace_monotone",
                sol.trace.is_nondecreasing(1e-7),
                format!("largest decrease {:.3e} over {} values", sol.trace.max_decrease(), sol.trace.values.len()),
            ));
            out.push(check(
                "es_rank_one",
                d.max_w_rank_ratio <= 1e-6 && d.max_d_rank_ratio <= 1e-4,
                format!("beamforming {:.2e}, surface {:.2e}", d.max_w_rank_ratio, d.max_d_rank_ratio),
            ));
            let power = sol.total_power();
            let fair = check_fairness(&chan, &sol.star, &sol.w, &sol.order, 1e-6)?;
            let energy = sol.star.energy_violation();
            out.push(check(
                "es_feasible",
                power <= scenario.p_max * (1.0 + 1e-6) && fair.is_empty() && energy <= 1e-6,
                format!("power {power:.4} W, {} fairness violations, energy slack {energy:.1e}", fair.len()),
            ));
            let again = solve_policy(Policy::Es, scenario, &chan, &weights)?;
            out.push(check(
                "es_deterministic",
                again.qwsr.to_bits() == sol.qwsr.to_bits(),
                format!("QWSR {} then {}", sol.qwsr, again.qwsr),
            ));
        }
        Err(e) => out.push(check("es_slot", false, e.to_string())),
    }
    Ok(out)
}
