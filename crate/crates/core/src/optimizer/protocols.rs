use nalgebra::DVector;

use super::bcd::{bcd, penalized, BcdConfig};
use super::instance::{restrict, Instance, Point, RateModel};
use super::passive::SurfaceMode;
use super::taylor::{PenaltyState, ETA_MAX};
use crate::error::{Error, Result};
use crate::model::{
    BeamformingSolution, DecodingOrder, Diagnostics, Protocol, Scenario, Side,
    Trace, TsAllocation,
};
use crate::{Channel, Complex, Solution, Star};

/// Largest number of decoding orders [`order_search`] will enumerate.
pub const ORDER_SEARCH_CAP: usize = 24;

/// Access scheme of the baseline and protocol solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    Noma,
    Oma,
}

fn config(scenario: &Scenario, mode: SurfaceMode, eta: Option<f64>, eps: f64) -> BcdConfig {
    BcdConfig {
        mode,
        eta,
        eps,
        l_max: scenario.params.l_max,
    }
}

fn model_for(access: Access, k: usize) -> RateModel {
    match access {
        Access::Noma => RateModel::Noma,
        Access::Oma => RateModel::Oma(vec![1.0 / k as f64; k]),
    }
}

/// Runs the ES loop from `star` with matched-filter precoders.
fn run_fixed_or_coupled(
    scenario: &Scenario,
    chan: &Channel,
    weights: &[f64],
    order: &DecodingOrder,
    access: Access,
    star: Star,
    mode: SurfaceMode,
    protocol: Protocol,
) -> Result<Solution> {
    let mut inst = Instance::new(scenario, chan, weights, order, model_for(access, chan.num_users()))?;
    let w = inst.matched_start(&star)?;
    let run = bcd(&mut inst, Point { w, star }, config(scenario, mode, None, scenario.params.epsilon))?;
    inst.solution(&run.point, run.trace, run.diagnostics, protocol)
}

/// ES by block coordinate descent from the seeded uniform-split start.
pub fn bcd_es(scenario: &Scenario, chan: &Channel, weights: &[f64], order: &DecodingOrder) -> Result<Solution> {
    let inst = Instance::new(scenario, chan, weights, order, RateModel::Noma)?;
    let star = inst.random_star(scenario.params.init_seed, None)?;
    run_fixed_or_coupled(scenario, chan, weights, order, Access::Noma, star, SurfaceMode::Coupled, Protocol::Es)
}

/// ES loop warm-started from another solution (its precoders, surface and
/// order).
pub fn bcd_es_from(scenario: &Scenario, chan: &Channel, weights: &[f64], start: &Solution) -> Result<Solution> {
    let mut inst = Instance::new(scenario, chan, weights, &start.order, RateModel::Noma)?;
    let mut point = inst.point_of(start);
    point.star = point.star.clone().with_protocol(Protocol::Es);
    let run = bcd(&mut inst, point, config(scenario, SurfaceMode::Coupled, None, scenario.params.epsilon))?;
    inst.solution(&run.point, run.trace, run.diagnostics, Protocol::Es)
}

/// MS by the penalty method, followed by hard rounding at 0.5 and one
/// phase-only refinement with the amplitudes frozen.
pub fn ms_penalty(scenario: &Scenario, chan: &Channel, weights: &[f64], order: &DecodingOrder) -> Result<Solution> {
    ms_with(scenario, chan, weights, order, Access::Noma)
}

fn ms_with(
    scenario: &Scenario,
    chan: &Channel,
    weights: &[f64],
    order: &DecodingOrder,
    access: Access,
) -> Result<Solution> {
    let p = &scenario.params;
    let mut inst = Instance::new(scenario, chan, weights, order, model_for(access, chan.num_users()))?;
    let star = inst.random_star(p.init_seed, None)?;
    let w = inst.matched_start(&star)?;
    let mut point = Point { w, star };
    let mut trace = Trace::new();
    let mut diag = Diagnostics::default();
    let mut penalty = PenaltyState::new(p.eta0, p.zeta)?;
    loop {
        let run = bcd(
            &mut inst,
            point,
            config(scenario, SurfaceMode::Coupled, Some(penalty.eta), p.penalty_eps1),
        )
        .map_err(|e| e.context(format!("penalty round {} (eta {:.3e})", penalty.outer, penalty.eta)))?;
        trace.append_segment(&run.trace);
        diag.merge(&run.diagnostics);
        point = run.point;
        if binary_violation(&point.star) <= p.penalty_eps2 {
            break;
        }
        penalty.grow();
        if penalty.eta > ETA_MAX {
            return Err(Error::numerical(
                "MS penalty",
                format!(
                    "penalty factor exceeded {ETA_MAX:e} with amplitudes {:.3e} from binary",
                    binary_violation(&point.star)
                ),
            ));
        }
    }

    let round = |b: &DVector<f64>| b.map(|x| if x >= 0.5 { 1.0 } else { 0.0 });
    let beta_r = round(&point.star.beta_r);
    let beta_t = beta_r.map(|x| 1.0 - x);
    point.star = Star::new(beta_r, beta_t, point.star.theta_r.clone(), point.star.theta_t.clone(), Protocol::Ms)?;
    let run = bcd(&mut inst, point, config(scenario, SurfaceMode::Fixed, None, p.epsilon))
        .map_err(|e| e.context("phase refinement after rounding"))?;
    let gains = inst.gains(&run.point.w, &run.point.star)?;
    if !inst.is_fair(&gains) {
        return Err(Error::infeasible(
            "MS rounding",
            "no fair precoder was found for the rounded amplitudes",
        ));
    }
    trace.append_segment(&run.trace);
    diag.merge(&run.diagnostics);
    inst.solution(&run.point, trace, diag, Protocol::Ms)
}

/// `max_{s,m} β − β²`.
pub fn binary_violation(star: &Star) -> f64 {
    Side::BOTH
        .iter()
        .flat_map(|&s| star.beta(s).iter().map(|&b| b - b * b).collect::<Vec<_>>())
        .fold(0.0, f64::max)
}

/// Penalized objective `Σ Q_k R_k − η Σ β(1 − β)` of a solution.
pub fn penalized_objective(
    scenario: &Scenario,
    chan: &Channel,
    weights: &[f64],
    sol: &Solution,
    eta: f64,
) -> Result<f64> {
    let inst = Instance::new(scenario, chan, weights, &sol.order, RateModel::Noma)?;
    let point = inst.point_of(sol);
    let gains = inst.gains(&point.w, &point.star)?;
    Ok(penalized(&inst, &gains, &point, Some(eta)))
}

/// Conventional RIS: the first `M/2` elements reflect, the rest transmit.
pub fn conv_ris(scenario: &Scenario, chan: &Channel, weights: &[f64], order: &DecodingOrder) -> Result<Solution> {
    let m = chan.num_elements();
    if m % 2 != 0 {
        return Err(Error::invalid(format!(
            "conventional RIS baseline needs an even element count, got {m}"
        )));
    }
    let inst = Instance::new(scenario, chan, weights, order, RateModel::Noma)?;
    let seeded = inst.random_star(scenario.params.init_seed, None)?;
    let beta_r = DVector::from_fn(m, |i, _| if i < m / 2 { 1.0 } else { 0.0 });
    let beta_t = beta_r.map(|b| 1.0 - b);
    let star = Star::new(beta_r, beta_t, seeded.theta_r, seeded.theta_t, Protocol::Es)?;
    run_fixed_or_coupled(scenario, chan, weights, order, Access::Noma, star, SurfaceMode::Fixed, Protocol::Es)
}

/// STAR with uniform energy split `β = 0.5`; only phases are optimized.
pub fn ues(scenario: &Scenario, chan: &Channel, weights: &[f64], order: &DecodingOrder) -> Result<Solution> {
    let inst = Instance::new(scenario, chan, weights, order, RateModel::Noma)?;
    let star = inst.random_star(scenario.params.init_seed, None)?;
    run_fixed_or_coupled(scenario, chan, weights, order, Access::Noma, star, SurfaceMode::Fixed, Protocol::Es)
}

/// Time switching: each side is optimized alone with the whole surface
/// pointed at it, then the time split puts all time on the better side
/// (reflection on ties).
pub fn ts_solve(scenario: &Scenario, chan: &Channel, weights: &[f64]) -> Result<Solution> {
    ts_with(scenario, chan, weights, Access::Noma)
}

fn ts_with(scenario: &Scenario, chan: &Channel, weights: &[f64], access: Access) -> Result<Solution> {
    let k_users = chan.num_users();
    if weights.len() != k_users {
        return Err(Error::Dimension {
            context: "weights",
            expected: k_users,
            found: weights.len(),
        });
    }
    let identity = DecodingOrder::identity(k_users);
    let mut periods: Vec<Option<(Vec<usize>, Solution)>> = Vec::new();
    let mut objectives = [0.0; 2];
    for side in Side::BOTH {
        let users: Vec<usize> = (0..k_users).filter(|&k| chan.sides[k] == side).collect();
        if users.is_empty() || users.iter().all(|&k| weights[k] == 0.0) {
            periods.push(None);
            continue;
        }
        let (sub, sub_w, _) = restrict(chan, weights, &identity, &users)?;
        let solve_order = |order: &DecodingOrder| -> Result<Solution> {
            let kind = if users.len() == 1 { Access::Noma } else { access };
            let inst = Instance::new(scenario, &sub, &sub_w, order, RateModel::Noma)?;
            let star = inst.random_star(scenario.params.init_seed, Some(side))?;
            run_fixed_or_coupled(scenario, &sub, &sub_w, order, kind, star, SurfaceMode::Fixed, Protocol::Ts)
        };
        let best = match access {
            Access::Noma => order_search(scenario, &sub, &sub_w, solve_order),
            Access::Oma => solve_order(&DecodingOrder::identity(users.len())),
        }
        .map_err(|e| e.context(format!("{side:?} period")))?;
        objectives[side.index()] = best.qwsr;
        periods.push(Some((users, best)));
    }

    let pick = if objectives[1] > objectives[0] { Side::Transmission } else { Side::Reflection };
    let mut trace = Trace::new();
    let mut diag = Diagnostics::default();
    for (_, sol) in periods.iter().flatten() {
        trace.append_segment(&sol.trace);
        diag.merge(&sol.diagnostics);
    }
    let n = chan.num_antennas();
    let mut w = vec![DVector::<Complex>::zeros(n); k_users];
    let mut rates = vec![0.0; k_users];
    let (star, order, fractions) = match &periods[pick.index()] {
        Some((users, sol)) => {
            let mut perm: Vec<usize> = sol.order.perm().iter().map(|&i| users[i]).collect();
            perm.extend((0..k_users).filter(|k| !users.contains(k)));
            // a lone user of the period holds the whole resource
            let sub_fractions = match access {
                Access::Oma => Some(sol.oma_fractions.clone().unwrap_or_else(|| vec![1.0; users.len()])),
                Access::Noma => None,
            };
            let fractions = sub_fractions.map(|f| {
                let mut full = vec![0.0; k_users];
                for (i, &k) in users.iter().enumerate() {
                    full[k] = f[i];
                }
                full
            });
            for (i, &k) in users.iter().enumerate() {
                w[k] = sol.w[i].clone();
                rates[k] = sol.rates[i];
            }
            (sol.star.clone(), DecodingOrder::new(perm)?, fractions)
        }
        None => {
            trace.push(0.0);
            (Star::single_side(pick, DVector::zeros(chan.num_elements())), identity, None)
        }
    };
    let alpha_r = if pick == Side::Reflection { 1.0 } else { 0.0 };
    Ok(BeamformingSolution {
        w,
        star,
        order,
        qwsr: objectives[pick.index()],
        rates,
        trace,
        ts: Some(TsAllocation {
            alpha_r,
            alpha_t: 1.0 - alpha_r,
            side_objectives: objectives,
        }),
        oma_fractions: fractions.or(match access {
            Access::Oma => Some(vec![0.0; k_users]),
            Access::Noma => None,
        }),
        diagnostics: diag,
    })
}

/// Runs `solver_fn` for every decoding order and keeps the best QWSR
/// (earliest order on ties).
pub fn order_search<F>(_scenario: &Scenario, chan: &Channel, weights: &[f64], mut solver_fn: F) -> Result<Solution>
where
    F: FnMut(&DecodingOrder) -> Result<Solution>,
{
    let k = chan.num_users();
    if weights.len() != k {
        return Err(Error::Dimension {
            context: "weights",
            expected: k,
            found: weights.len(),
        });
    }
    let count: usize = (1..=k).product();
    if count > ORDER_SEARCH_CAP {
        return Err(Error::Precondition(format!(
            "{k} users give {count} decoding orders, above the cap of {ORDER_SEARCH_CAP}; supply a fixed order"
        )));
    }
    let mut best: Option<Solution> = None;
    for order in DecodingOrder::all(k) {
        let sol = solver_fn(&order).map_err(|e| e.context(format!("decoding order {:?}", order.perm())))?;
        if best.as_ref().is_none_or(|b| sol.qwsr > b.qwsr) {
            best = Some(sol);
        }
    }
    best.ok_or_else(|| Error::invalid("no users"))
}

/// Orthogonal-access baseline under `protocol`: precoders, surface and
/// resource fractions updated in turn.
pub fn oma(scenario: &Scenario, chan: &Channel, weights: &[f64], protocol: Protocol) -> Result<Solution> {
    let k = chan.num_users();
    let identity = DecodingOrder::identity(k);
    if k == 1 {
        // a single user holds the whole resource: identical to NOMA
        let mut sol = match protocol {
            Protocol::Es => bcd_es(scenario, chan, weights, &identity)?,
            Protocol::Ms => ms_penalty(scenario, chan, weights, &identity)?,
            Protocol::Ts => ts_solve(scenario, chan, weights)?,
        };
        sol.oma_fractions = Some(vec![1.0]);
        return Ok(sol);
    }
    match protocol {
        Protocol::Es => {
            let inst = Instance::new(scenario, chan, weights, &identity, RateModel::Noma)?;
            let star = inst.random_star(scenario.params.init_seed, None)?;
            run_fixed_or_coupled(scenario, chan, weights, &identity, Access::Oma, star, SurfaceMode::Coupled, Protocol::Es)
        }
        Protocol::Ms => ms_with(scenario, chan, weights, &identity, Access::Oma),
        Protocol::Ts => ts_with(scenario, chan, weights, Access::Oma),
    }
}

/// ES from its own start and warm-started from the UES, Conv-RIS (even
/// `M`) and rounded-MS solutions; returns the best run.
pub fn es_multistart(
    scenario: &Scenario,
    chan: &Channel,
    weights: &[f64],
    order: &DecodingOrder,
) -> Result<MultiStart> {
    let es = bcd_es(scenario, chan, weights, order)?;
    let ues = ues(scenario, chan, weights, order)?;
    let conv = if chan.num_elements() % 2 == 0 {
        Some(conv_ris(scenario, chan, weights, order)?)
    } else {
        None
    };
    let ms = ms_penalty(scenario, chan, weights, order)?;
    let mut best = es.clone();
    for start in [Some(&ues), conv.as_ref(), Some(&ms)].into_iter().flatten() {
        let run = bcd_es_from(scenario, chan, weights, start)?;
        if run.qwsr > best.qwsr {
            best = run;
        }
    }
    Ok(MultiStart { best, es, ues, conv_ris: conv, ms })
}

/// Result of [`es_multistart`] with every run it compared.
#[derive(Debug, Clone)]
pub struct MultiStart {
    pub best: Solution,
    pub es: Solution,
    pub ues: Solution,
    pub conv_ris: Option<Solution>,
    pub ms: Solution,
}

/// Snaps phases to the uniform `2^b` grid and, with `amp_bits`, `β_r` to
/// the nearest of `{0} ∪ {2^{-j} : j = 0..2^{amp_bits} − 2}` with
/// `β_t = 1 − β_r`.
pub fn quantize_star(star: &Star, phase_bits: Option<u32>, amp_bits: Option<u32>) -> Star {
    let tau = std::f64::consts::TAU;
    let snap_phase = |theta: &DVector<f64>| -> DVector<f64> {
        match phase_bits {
            Some(b) => {
                let levels = 2f64.powi(b.max(1) as i32);
                let step = tau / levels;
                theta.map(|t| ((t / step).round() % levels) * step)
            }
            None => theta.clone(),
        }
    };
    let theta_r = snap_phase(&star.theta_r);
    let theta_t = snap_phase(&star.theta_t);
    let (beta_r, beta_t) = match amp_bits {
        Some(b) => {
            let mut levels = vec![0.0];
            let top = (1u64 << b.min(16)).saturating_sub(2);
            levels.extend((0..=top).map(|j| 0.5f64.powi(j as i32)));
            let snap = |x: f64| {
                levels
                    .iter()
                    .copied()
                    .min_by(|a, c| (a - x).abs().total_cmp(&(c - x).abs()))
                    .unwrap_or(x)
            };
            let br = star.beta_r.map(snap);
            let bt = br.map(|x| 1.0 - x);
            (br, bt)
        }
        None => (star.beta_r.clone(), star.beta_t.clone()),
    };
    Star::new(beta_r, beta_t, theta_r, theta_t, star.protocol).unwrap_or_else(|_| star.clone())
}
