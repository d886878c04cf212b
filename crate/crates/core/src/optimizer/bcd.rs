use super::active::active_step;
use super::instance::{Instance, Point, RateModel};
use super::passive::{passive_step, SurfaceMode};
use super::taylor::binary_penalty;
use crate::error::Result;
use crate::model::{Diagnostics, Side, Trace};

#[derive(Debug, Clone, Copy)]
pub(crate) struct BcdConfig {
    pub mode: SurfaceMode,
    /// Binary penalty factor (MS inner loop).
    pub eta: Option<f64>,
    /// Fractional-increase threshold.
    pub eps: f64,
    pub l_max: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct BcdRun {
    pub point: Point,
    pub trace: Trace<f64>,
    pub diagnostics: Diagnostics<f64>,
}

/// Objective of `point`, minus `η Σ β(1−β)` under a penalty.
pub(crate) fn penalized(inst: &Instance, gains: &[Vec<f64>], point: &Point, eta: Option<f64>) -> f64 {
    let base = inst.objective_from_gains(gains);
    match eta {
        Some(eta) => {
            let pen: f64 = Side::BOTH
                .iter()
                .map(|&s| binary_penalty(point.star.beta(s).as_slice()))
                .sum();
            base - eta * pen
        }
        None => base,
    }
}

/// Alternates precoder and surface updates from `start`.
///
/// A candidate iterate replaces the current one only when it satisfies the
/// fairness rows and does not lower the objective, so the trace is
/// monotone by construction; a start that violates fairness is replaced by
/// the first feasible candidate. A subproblem failure after a feasible
/// iterate exists ends the loop at that iterate. Under OMA the resource fractions are
/// updated as a third block.
pub(crate) fn bcd(inst: &mut Instance, start: Point, cfg: BcdConfig) -> Result<BcdRun> {
    let mut diag = Diagnostics::default();
    let mut trace = Trace::new();
    let mut point = start;
    let gains = inst.gains(&point.w, &point.star)?;
    let mut objective = if inst.is_fair(&gains) {
        penalized(inst, &gains, &point, cfg.eta)
    } else {
        f64::NEG_INFINITY
    };

    if inst.all_weights_zero() && objective.is_finite() {
        trace.push(objective);
        diag.iterations = 1;
        return Ok(BcdRun { point, trace, diagnostics: diag });
    }
    if objective.is_finite() {
        trace.push(objective);
    }

    for l in 1..=cfg.l_max {
        diag.iterations += 1;
        let prev = objective;

        let act = match active_step(inst, &point) {
            Ok(a) => a,
            Err(e) if objective.is_finite() => {
                log::warn!("stopping at iteration {l}: beamforming update failed: {e}");
                diag.rejected_steps += 1;
                break;
            }
            Err(e) => return Err(e.context(format!("iteration {l}, beamforming update"))),
        };
        diag.active_solves += 1;
        diag.conic_iterations += act.iterations;
        diag.max_w_rank_ratio = diag.max_w_rank_ratio.max(act.rank_ratio);
        let cand = Point { w: act.w, star: point.star.clone() };
        consider(inst, &mut point, &mut objective, cand, cfg.eta, &mut diag)?;

        let pas = match passive_step(inst, &point, cfg.mode, cfg.eta) {
            Ok(p) => p,
            Err(e) if objective.is_finite() => {
                log::warn!("stopping at iteration {l}: surface update failed: {e}");
                diag.rejected_steps += 1;
                trace.push(objective);
                break;
            }
            Err(e) => return Err(e.context(format!("iteration {l}, surface update"))),
        };
        diag.passive_solves += pas.solves;
        diag.conic_iterations += pas.iterations;
        diag.max_d_rank_ratio = diag.max_d_rank_ratio.max(pas.rank_ratio);
        let cand = Point { w: point.w.clone(), star: pas.star };
        consider(inst, &mut point, &mut objective, cand, cfg.eta, &mut diag)?;

        if let RateModel::Oma(_) = inst.model {
            fraction_step(inst, &point, &mut objective)?;
        }

        if !objective.is_finite() {
            continue;
        }
        trace.push(objective);
        if prev.is_finite() {
            let increase = (objective - prev) / prev.abs().max(1e-12);
            if increase <= cfg.eps {
                break;
            }
        }
    }
    Ok(BcdRun { point, trace, diagnostics: diag })
}

fn consider(
    inst: &Instance,
    point: &mut Point,
    objective: &mut f64,
    cand: Point,
    eta: Option<f64>,
    diag: &mut Diagnostics<f64>,
) -> Result<()> {
    let gains = inst.gains(&cand.w, &cand.star)?;
    let value = penalized(inst, &gains, &cand, eta);
    if inst.is_fair(&gains) && value.is_finite() && value >= *objective {
        *point = cand;
        *objective = value;
    } else {
        diag.rejected_steps += 1;
    }
    Ok(())
}

/// Maximizes the concave `Σ Q_k ϖ_k log2(1 + g_k/ϖ_k)` over the simplex
/// with the precoders and surface fixed.
fn fraction_step(inst: &mut Instance, point: &Point, objective: &mut f64) -> Result<()> {
    let RateModel::Oma(current) = inst.model.clone() else {
        return Ok(());
    };
    let gains = inst.gains(&point.w, &point.star)?;
    let g: Vec<f64> = (0..gains.len()).map(|k| gains[k][k]).collect();
    let fractions = optimal_fractions(&inst.weights, &g, &current);
    let old = inst.model.clone();
    inst.model = RateModel::Oma(fractions);
    let value = inst.objective_from_gains(&gains);
    if value >= *objective {
        *objective = value;
    } else {
        inst.model = old;
    }
    Ok(())
}

pub(crate) fn oma_utility(weights: &[f64], gains: &[f64], fractions: &[f64]) -> f64 {
    (0..weights.len())
        .map(|k| weights[k] * crate::model::oma_rate(gains[k], fractions[k], 1.0))
        .sum()
}

/// Golden-section search on `[lo, hi]` for the maximizer of a concave `f`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        }
    }
    let mid = 0.5 * (lo + hi);
    [lo, mid, hi]
        .into_iter()
        .max_by(|x, y| f(*x).total_cmp(&f(*y)))
        .unwrap_or(mid)
}

/// Resource split: golden section for two users, otherwise the better of
/// the current and the uniform split refined by pairwise golden-section
/// exchanges.
pub(crate) fn optimal_fractions(weights: &[f64], gains: &[f64], current: &[f64]) -> Vec<f64> {
    let k = weights.len();
    match k {
        0 => Vec::new(),
        1 => vec![1.0],
        2 => {
            let f = |x: f64| oma_utility(weights, gains, &[x, 1.0 - x]);
            let x = golden_max(f, 0.0, 1.0, 1e-10);
            vec![x, 1.0 - x]
        }
        _ => {
            let mut best = current.to_vec();
            let mut best_val = oma_utility(weights, gains, &best);
            let uniform = vec![1.0 / k as f64; k];
            let u_val = oma_utility(weights, gains, &uniform);
            if u_val > best_val {
                best = uniform;
                best_val = u_val;
            }
            for _ in 0..50 {
                let before = best_val;
                for a in 0..k {
                    for b in a + 1..k {
                        let pool = best[a] + best[b];
                        let f = |x: f64| {
                            let mut trial = best.clone();
                            trial[a] = x;
                            trial[b] = pool - x;
                            oma_utility(weights, gains, &trial)
                        };
                        let x = golden_max(f, 0.0, pool, 1e-12);
                        let val = f(x);
                        if val >= best_val {
                            best[a] = x;
                            best[b] = pool - x;
                            best_val = val;
                        }
                    }
                }
                if best_val - before <= 1e-12 * best_val.abs().max(1.0) {
                    break;
                }
            }
            best
        }
    }
}
