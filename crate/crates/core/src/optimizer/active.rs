use nalgebra::{DMatrix, DVector};

use super::instance::{Instance, Point, RateModel};
use super::taylor::LocalPoint;
use crate::conic::{
    self, hyperbolic_constraint, ConicProblem, ConicSolution, HermCoeff, LinExpr, Sense,
    SolveStatus, SolverOptions,
};
use crate::error::{Error, Result};
use crate::{Complex, Star};

/// Outcome of one beamforming update, in normalized units.
#[derive(Debug, Clone)]
pub(crate) struct ActiveOutcome {
    pub w: Vec<DVector<Complex>>,
    /// Value of the convex subproblem.
    pub bound: f64,
    /// Largest `λ₂/λ₁` over the nonzero beamforming blocks.
    pub rank_ratio: f64,
    pub iterations: usize,
}

/// Leading eigenpair of a Hermitian PSD matrix and the ratio `λ₂/λ₁`.
pub(crate) fn leading_eigen(m: &DMatrix<Complex>) -> (f64, DVector<Complex>, f64) {
    let eig = m.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let l1 = eig.eigenvalues[idx[0]].max(0.0);
    let l2 = idx.get(1).map_or(0.0, |&i| eig.eigenvalues[i].max(0.0));
    let ratio = if l1 > 0.0 { l2 / l1 } else { 0.0 };
    (l1, eig.eigenvectors.column(idx[0]).into_owned(), ratio)
}

pub(crate) fn solver_options(inst: &Instance) -> SolverOptions {
    SolverOptions {
        tol: inst.params.conic_tol,
        ..SolverOptions::default()
    }
}

/// Residual slack, relative to the solver tolerance, under which a run that
/// stalled short of convergence is still used.
pub(crate) const INACCURATE_FACTOR: f64 = 100.0;

/// Whether a subproblem solution is accurate enough to recover from.
/// Interior-point runs on nearly rank-deficient blocks often stall a little
/// above the tolerance after closing the gap.
pub(crate) fn usable(sol: &ConicSolution<f64>, opts: &SolverOptions) -> bool {
    let r = sol.residuals;
    sol.is_optimal()
        || (sol.status == SolveStatus::NumericalFailure
            && r.primal.max(r.dual).max(r.gap) <= INACCURATE_FACTOR * opts.tol)
}

/// Tightening of the beamforming solve. Off-rank eigenvalues of an
/// interior-point iterate scale with the barrier parameter, so the rank-one
/// check needs a smaller gap than the surface solves.
const ACTIVE_TOL_FACTOR: f64 = 1e-3;

/// Updates the precoders with the surface fixed.
pub(crate) fn active_step(inst: &Instance, point: &Point) -> Result<ActiveOutcome> {
    match &inst.model {
        RateModel::Noma => active_sdp(inst, point),
        RateModel::Oma(f) => active_oma(inst, &point.star, f),
    }
}

/// Lifted subproblem over `W_k ⪰ 0` with the rank constraint dropped.
fn active_sdp(inst: &Instance, point: &Point) -> Result<ActiveOutcome> {
    let k_users = inst.num_users();
    let gains = inst.gains(&point.w, &point.star)?;
    let local = LocalPoint::from_gains(&gains, &inst.order, 1.0)?;
    let channels: Vec<DVector<Complex>> = inst
        .effective_channels(&point.star)?
        .into_iter()
        .map(|h| h.adjoint())
        .collect();

    let mut prob = ConicProblem::new();
    let blocks: Vec<_> = (0..k_users).map(|_| prob.add_block(inst.chan.num_antennas())).collect();
    // gain(rx, tx) = Tr(W_tx c_rx c_rxᴴ)
    let gain = |rx: usize, tx: usize, scale: f64| -> LinExpr<f64> {
        if channels[rx].norm_squared() == 0.0 {
            return LinExpr::new();
        }
        LinExpr::new().block(blocks[tx], HermCoeff::rank_one(scale, channels[rx].clone()))
    };

    let mut objective = LinExpr::new();
    for k in 0..k_users {
        if inst.rate_weight(k) == 0.0 {
            continue;
        }
        let anchors: Vec<_> = local.pairs.iter().filter(|p| p.k == k && (inst.is_noma() || p.j == k)).collect();
        if anchors.iter().any(|a| gain(a.j, k, 1.0).blocks.is_empty()) {
            // no signal reaches a decoder of user k: its rate is zero
            continue;
        }
        let rate = prob.add_nonneg_var();
        objective = objective.var(rate, inst.rate_weight(k));
        for anchor in anchors {
            let j = anchor.j;
            let cut = anchor.cut;
            let link = gain(j, k, cut.s_tilde);
            let s = prob.add_nonneg_var();
            prob.add_cone(hyperbolic_constraint(LinExpr::from_var(s), link));
            // R_k + a·S + b·Σ interference ≤ log2(1+1/(S̃Ĩ)) + aS̃ + bĨ − b
            let mut row = LinExpr::from_var(rate).var(s, cut.slope_s * cut.s_tilde);
            for i in (0..k_users).filter(|&i| inst.order.position(i) > inst.order.position(k)) {
                row.add_scaled(cut.slope_i, &gain(j, i, 1.0));
            }
            let rhs = cut.value + cut.slope_s * cut.s_tilde + cut.slope_i * cut.i_tilde - cut.slope_i;
            prob.constrain(row, Sense::Le, rhs);
        }
    }
    prob.maximize(objective);

    let mut power = LinExpr::new();
    for &b in &blocks {
        power = power.block(b, HermCoeff::identity(1.0));
    }
    prob.constrain(power, Sense::Le, 1.0);
    add_fairness_rows(inst, &mut prob, |rx, tx| gain(rx, tx, 1.0));

    let mut opts = solver_options(inst);
    opts.tol *= ACTIVE_TOL_FACTOR;
    let sol = conic::solve(&prob, &opts)?;
    if !usable(&sol, &opts) {
        return Err(Error::infeasible(
            "active step",
            format!(
                "solver status {:?} with {} fairness rows and the power row",
                sol.status,
                fairness_pairs(inst).len() * k_users
            ),
        ));
    }

    let mut w = Vec::with_capacity(k_users);
    let mut rank_ratio = 0.0f64;
    for &b in &blocks {
        let (l1, u, ratio) = leading_eigen(sol.block(b));
        if l1 > 1e-9 {
            rank_ratio = rank_ratio.max(ratio);
        }
        w.push(u * Complex::new(l1.sqrt(), 0.0));
    }
    // A common scale-up raises every SINR and keeps the fairness rows, so
    // the recovered precoders always spend the whole budget.
    let total: f64 = w.iter().map(|x| x.norm_squared()).sum();
    if total > 0.0 {
        let s = Complex::new(1.0 / total.sqrt(), 0.0);
        w.iter_mut().for_each(|x| *x *= s);
    }
    Ok(ActiveOutcome {
        w,
        bound: sol.primal_objective,
        rank_ratio,
        iterations: sol.iterations,
    })
}

/// Relative size under which a fairness row is treated as `0 ≥ 0`.
const VACUOUS_ROW: f64 = 1e-6;

/// Ordered pairs `(k, j)` with `k` decoded before `j`.
pub(crate) fn fairness_pairs(inst: &Instance) -> Vec<(usize, usize)> {
    let k_users = inst.num_users();
    let mut out = Vec::new();
    for k in 0..k_users {
        for j in 0..k_users {
            if inst.order.decodes_before(k, j) {
                out.push((k, j));
            }
        }
    }
    out
}

/// `gain(i, k) − gain(i, j) ≥ 0` for every receiver `i` and `o_k < o_j`.
pub(crate) fn add_fairness_rows(
    inst: &Instance,
    prob: &mut ConicProblem<f64>,
    gain: impl Fn(usize, usize) -> LinExpr<f64>,
) {
    if !inst.is_noma() {
        return;
    }
    for (k, j) in fairness_pairs(inst) {
        for i in 0..inst.num_users() {
            let lead = gain(i, k);
            let mut row = lead.clone();
            row.add_scaled(-1.0, &gain(i, j));
            if row.blocks.is_empty() {
                continue;
            }
            // Two nearly equal gain forms leave a vacuous row that only
            // degrades the conditioning of the solve.
            let dims = &prob.block_dims;
            let size = |e: &LinExpr<f64>| -> f64 {
                let mut dense: Vec<(usize, DMatrix<Complex>)> = Vec::new();
                for (b, c) in &e.blocks {
                    let m = c.to_dense(dims[b.0]);
                    match dense.iter_mut().find(|(id, _)| *id == b.0) {
                        Some((_, acc)) => *acc += m,
                        None => dense.push((b.0, m)),
                    }
                }
                dense.iter().map(|(_, m)| m.norm_squared()).sum::<f64>().sqrt()
            };
            if size(&row) <= VACUOUS_ROW * size(&lead) {
                continue;
            }
            prob.constrain(row, Sense::Ge, 0.0);
        }
    }
}

/// Orthogonal access: matched filters with weighted water-filling of the
/// power budget over `Σ Q_k ϖ_k log2(1 + p_k g_k/ϖ_k)`.
fn active_oma(inst: &Instance, star: &Star, fractions: &[f64]) -> Result<ActiveOutcome> {
    let hs = inst.effective_channels(star)?;
    let g: Vec<f64> = hs.iter().map(|h| h.norm_squared()).collect();
    let served: Vec<usize> = (0..g.len())
        .filter(|&k| inst.rate_weight(k) > 0.0 && g[k] > 0.0)
        .collect();
    let powers_at = |nu: f64| -> Vec<f64> {
        (0..g.len())
            .map(|k| {
                if served.contains(&k) {
                    fractions[k] * (inst.weights[k] / nu - 1.0 / g[k]).max(0.0)
                } else {
                    0.0
                }
            })
            .collect()
    };
    let mut p = vec![0.0; g.len()];
    if !served.is_empty() {
        // Σ p(ν) decreases in ν; bracket the unit-budget level in log space.
        let mut hi = served.iter().map(|&k| inst.weights[k] * g[k]).fold(0.0, f64::max);
        let mut lo = hi;
        while powers_at(lo).iter().sum::<f64>() < 1.0 {
            lo *= 0.5;
            if lo < 1e-300 {
                break;
            }
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if powers_at(mid).iter().sum::<f64>() > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        p = powers_at(hi);
        let total: f64 = p.iter().sum();
        if total > 1.0 {
            p.iter_mut().for_each(|x| *x /= total);
        }
    }
    let w = hs
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let norm = h.norm();
            if norm > 0.0 && p[k] > 0.0 {
                h.adjoint() * Complex::new(p[k].sqrt() / norm, 0.0)
            } else {
                DVector::zeros(h.len())
            }
        })
        .collect::<Vec<_>>();
    let bound = served
        .iter()
        .map(|&k| inst.rate_weight(k) * (1.0 + p[k] * g[k] / fractions[k]).log2())
        .sum();
    Ok(ActiveOutcome {
        w,
        bound,
        rank_ratio: 0.0,
        iterations: 0,
    })
}
