use nalgebra::DVector;

use super::active::{add_fairness_rows, leading_eigen, solver_options, usable};
use super::instance::{Instance, Point};
use super::taylor::{LocalPoint, SrocrState};
use crate::conic::{
    self, hyperbolic_constraint, BlockId, ConicProblem, ConicSolution, HermCoeff, LinExpr, Sense,
};
use crate::error::{Error, Result};
use crate::model::Side;
use crate::{Complex, Star};

/// How the surface amplitudes enter the passive subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SurfaceMode {
    /// Amplitudes free under `β_r + β_t = 1` (ES, MS).
    Coupled,
    /// Amplitudes frozen, phases only (UES, Conv-RIS, TS periods, MS
    /// refinement).
    Fixed,
}

/// Smallest admissible SROCR step before giving up.
pub(crate) const DELTA_MIN: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct PassiveOutcome {
    pub star: Star,
    /// Subproblem value at each SROCR iterate.
    pub bounds: Vec<f64>,
    /// Largest `λ₂/λ₁` over the constrained surface blocks at exit.
    pub rank_ratio: f64,
    pub srocr: SrocrState,
    pub solves: usize,
    pub iterations: usize,
}

struct SurfaceBlock {
    side: Side,
    id: BlockId,
    /// Elements carried by the block.
    support: Vec<usize>,
    /// Whether a user sits on this side (the block then needs rank one).
    served: bool,
}

/// Updates the surface with the precoders fixed, by SROCR over the lifted
/// surface blocks. With `eta`, the binary penalty of the MS method is
/// subtracted through its linear upper bound at the current amplitudes.
pub(crate) fn passive_step(
    inst: &Instance,
    point: &Point,
    mode: SurfaceMode,
    eta: Option<f64>,
) -> Result<PassiveOutcome> {
    let k_users = inst.num_users();
    let m = inst.chan.num_elements();
    let star = &point.star;
    let gains = inst.gains(&point.w, star)?;
    let local = LocalPoint::from_gains(&gains, &inst.order, 1.0)?;

    let mut prob = ConicProblem::new();
    let mut surf: Vec<SurfaceBlock> = Vec::new();
    for side in Side::BOTH {
        let served = inst.chan.sides.contains(&side);
        let support: Vec<usize> = match mode {
            SurfaceMode::Coupled => (0..m).collect(),
            SurfaceMode::Fixed if served => (0..m).filter(|&i| star.beta(side)[i] > 0.0).collect(),
            SurfaceMode::Fixed => Vec::new(),
        };
        if support.is_empty() {
            continue;
        }
        let id = prob.add_block(support.len());
        surf.push(SurfaceBlock { side, id, support, served });
    }
    let block_of = |side: Side| surf.iter().find(|b| b.side == side);

    // Per (rx, tx): cascaded vector c with gain = Tr(D c cᴴ) on rx's side.
    let gw: Vec<DVector<Complex>> = point.w.iter().map(|w| &inst.chan.g * w).collect();
    let gain = |rx: usize, tx: usize, scale: f64| -> LinExpr<f64> {
        match block_of(inst.chan.sides[rx]) {
            Some(b) => {
                let c = DVector::from_iterator(
                    b.support.len(),
                    b.support.iter().map(|&i| inst.chan.v[rx][i] * gw[tx][i]),
                );
                if c.norm_squared() == 0.0 {
                    return LinExpr::new();
                }
                LinExpr::new().block(b.id, HermCoeff::rank_one(scale, c))
            }
            None => LinExpr::new(),
        }
    };

    let mut objective = LinExpr::new();
    for k in 0..k_users {
        if inst.rate_weight(k) == 0.0 || point.w[k].norm_squared() < 1e-14 {
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
            let mut row = LinExpr::from_var(rate).var(s, cut.slope_s * cut.s_tilde);
            let mut rhs = cut.value + cut.slope_s * cut.s_tilde;
            if inst.is_noma() {
                for i in (0..k_users).filter(|&i| inst.order.position(i) > inst.order.position(k)) {
                    row.add_scaled(cut.slope_i, &gain(j, i, 1.0));
                }
                rhs += cut.slope_i * cut.i_tilde - cut.slope_i;
            }
            prob.constrain(row, Sense::Le, rhs);
        }
    }

    if let Some(eta) = eta {
        // −η Σ_s Λ(D_s, D̃_s)
        for b in &surf {
            let anchor = star.beta(b.side);
            let mut coef = HermCoeff::zero();
            let mut constant = 0.0;
            for (local_i, &i) in b.support.iter().enumerate() {
                coef.push_entry(local_i, local_i, Complex::new(-eta * (1.0 - 2.0 * anchor[i]), 0.0));
                constant -= eta * anchor[i] * anchor[i];
            }
            objective = objective.block(b.id, coef).plus_constant(constant);
        }
    }
    prob.maximize(objective);

    match mode {
        SurfaceMode::Coupled => {
            for i in 0..m {
                let mut row = LinExpr::new();
                for b in &surf {
                    row = row.block(b.id, HermCoeff::entry(i, i, Complex::new(1.0, 0.0)));
                }
                prob.constrain(row, Sense::Eq, 1.0);
            }
        }
        SurfaceMode::Fixed => {
            for b in &surf {
                for (local_i, &i) in b.support.iter().enumerate() {
                    let row = LinExpr::new().block(b.id, HermCoeff::entry(local_i, local_i, Complex::new(1.0, 0.0)));
                    prob.constrain(row, Sense::Eq, star.beta(b.side)[i]);
                }
            }
        }
    }
    add_fairness_rows(inst, &mut prob, |rx, tx| gain(rx, tx, 1.0));

    let ranked: Vec<&SurfaceBlock> = surf.iter().filter(|b| b.served).collect();
    let opts = solver_options(inst);
    let params = &inst.params;
    let mut state = SrocrState::new(params.gamma0, params.delta0)?;
    let with_srocr = |state: &SrocrState| -> ConicProblem<f64> {
        let mut p = prob.clone();
        for (b, u) in ranked.iter().zip(&state.directions) {
            let mut coef = HermCoeff::rank_one(1.0, u.clone());
            coef.identity = -state.gamma;
            p.constrain(LinExpr::new().block(b.id, coef), Sense::Ge, 0.0);
        }
        p
    };
    if state.gamma > 0.0 {
        state.directions = ranked
            .iter()
            .map(|b| {
                let d = star.lifted_vector(b.side);
                let u = DVector::from_iterator(b.support.len(), b.support.iter().map(|&i| d[i]));
                let n = u.norm();
                if n > 0.0 { u / Complex::new(n, 0.0) } else { u }
            })
            .collect();
    }

    let mut solves = 1;
    let mut iterations = 0;
    let mut current: ConicSolution<f64> = conic::solve(&with_srocr(&state), &opts)?;
    iterations += current.iterations;
    if !usable(&current, &opts) {
        return Err(Error::infeasible(
            "passive step",
            format!("solver status {:?} at the initial relaxation level", current.status),
        ));
    }
    let mut bounds = vec![current.primal_objective];
    let mut rank_ratio;
    loop {
        let mut share = 1.0f64;
        rank_ratio = 0.0f64;
        let mut dirs = Vec::with_capacity(ranked.len());
        for b in &ranked {
            let d = current.block(b.id);
            let (l1, u, ratio) = leading_eigen(d);
            let tr = d.trace().re;
            share = share.min(if tr > 0.0 { l1 / tr } else { 1.0 });
            rank_ratio = rank_ratio.max(ratio);
            dirs.push(u);
        }
        log::debug!(
            "srocr {}: gamma {:.6} share {:.6} ratio {:.3e} bound {:.6}",
            state.iteration,
            state.gamma,
            share,
            rank_ratio,
            current.primal_objective
        );
        if rank_ratio <= params.srocr_rank_tol || state.iteration >= params.srocr_max_iter {
            break;
        }
        state.directions = dirs;
        state.advance(share);
        loop {
            let sol = conic::solve(&with_srocr(&state), &opts)?;
            solves += 1;
            iterations += sol.iterations;
            if usable(&sol, &opts) {
                current = sol;
                break;
            }
            state.backtrack(share);
            if state.delta < DELTA_MIN {
                return Err(Error::numerical(
                    "passive step",
                    format!("SROCR step underflow at gamma {:.6}", state.gamma),
                ));
            }
        }
        bounds.push(current.primal_objective);
    }

    let star = recover_star(star, &surf, &current, mode)?;
    Ok(PassiveOutcome {
        star,
        bounds,
        rank_ratio,
        srocr: state,
        solves,
        iterations,
    })
}

/// Surface from the leading eigenpair `d = √λ₁u₁` of each block (`φ = d*`).
fn recover_star(
    prev: &Star,
    surf: &[SurfaceBlock],
    sol: &ConicSolution<f64>,
    mode: SurfaceMode,
) -> Result<Star> {
    let mut beta = [prev.beta_r.clone(), prev.beta_t.clone()];
    let mut theta = [prev.theta_r.clone(), prev.theta_t.clone()];
    let mut fixed_side: Option<Side> = None;
    for b in surf {
        let s = b.side.index();
        if !b.served {
            fixed_side = Some(b.side);
            continue;
        }
        let (l1, u, _) = leading_eigen(sol.block(b.id));
        let d = u * Complex::new(l1.sqrt(), 0.0);
        for (local_i, &i) in b.support.iter().enumerate() {
            let phi = d[local_i].conj();
            theta[s][i] = phi.arg();
            if mode == SurfaceMode::Coupled {
                beta[s][i] = phi.norm_sqr().min(1.0);
            }
        }
    }
    if mode == SurfaceMode::Coupled {
        if let Some(side) = fixed_side {
            let (s, o) = (side.index(), side.opposite().index());
            let other = beta[o].clone();
            beta[s] = other.map(|b| 1.0 - b);
        }
    }
    let [beta_r, beta_t] = beta;
    let [theta_r, theta_t] = theta;
    Star::new(beta_r, beta_t, theta_r, theta_t, prev.protocol)
}
