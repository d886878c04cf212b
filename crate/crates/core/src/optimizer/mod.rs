//! Per-slot QWSR optimization: the ES block coordinate descent with its
//! beamforming and surface subproblems, the MS penalty method, the TS
//! decomposition, decoding-order search and the baselines.
//!
//! Internally every problem is normalized to unit noise and a unit power
//! budget; solutions are reported in watts.

mod active;
mod bcd;
mod instance;
mod passive;
mod protocols;
mod taylor;

pub use protocols::{
    bcd_es, bcd_es_from, binary_violation, conv_ris, es_multistart, ms_penalty, oma,
    order_search, penalized_objective, quantize_star, ts_solve, ues, Access, MultiStart,
    ORDER_SEARCH_CAP,
};
pub use taylor::{
    binary_penalty, lower_bound_rate, penalty_bound, LocalPoint, PairAnchor, PenaltyState,
    SrocrState, TaylorCut, ETA_MAX,
};

use nalgebra::DVector;

use crate::error::Result;
use crate::model::{DecodingOrder, Scenario};
use crate::{Channel, Complex, Star};
use instance::{Instance, Point, RateModel};
use passive::SurfaceMode;

/// One beamforming update with the surface fixed.
#[derive(Debug, Clone)]
pub struct ActiveStep {
    /// Precoders in watts.
    pub w: Vec<DVector<Complex>>,
    /// Anchors at the new precoders, in units of the noise power.
    pub local: LocalPoint,
    /// QWSR at the new precoders.
    pub objective: f64,
    /// Value of the convex subproblem.
    pub bound: f64,
    /// Largest `λ₂/λ₁` of the beamforming blocks.
    pub rank_ratio: f64,
}

/// One surface update with the precoders fixed.
#[derive(Debug, Clone)]
pub struct PassiveStep {
    pub star: Star,
    pub local: LocalPoint,
    pub objective: f64,
    /// Subproblem value at each SROCR iterate.
    pub bounds: Vec<f64>,
    /// Largest `λ₂/λ₁` of the surface blocks at exit.
    pub rank_ratio: f64,
    pub srocr: SrocrState,
}

/// Solves the lifted beamforming subproblem at the local point of
/// `(w_current, star)` and recovers `w_k = √λ₁ u₁`.
pub fn active_step(
    scenario: &Scenario,
    chan: &Channel,
    star: &Star,
    order: &DecodingOrder,
    weights: &[f64],
    w_current: &[DVector<Complex>],
) -> Result<ActiveStep> {
    let inst = Instance::new(scenario, chan, weights, order, RateModel::Noma)?;
    let point = normalized(&inst, w_current, star);
    let out = active::active_step(&inst, &point)?;
    let next = Point { w: out.w, star: star.clone() };
    let gains = inst.gains(&next.w, &next.star)?;
    let amp = Complex::new(inst.amplitude, 0.0);
    Ok(ActiveStep {
        local: LocalPoint::from_gains(&gains, order, 1.0)?,
        objective: inst.objective_from_gains(&gains),
        w: next.w.iter().map(|w| w * amp).collect(),
        bound: out.bound,
        rank_ratio: out.rank_ratio,
    })
}

/// SROCR surface update with free amplitudes under energy conservation.
pub fn passive_step_es(
    scenario: &Scenario,
    chan: &Channel,
    w: &[DVector<Complex>],
    star: &Star,
    order: &DecodingOrder,
    weights: &[f64],
) -> Result<PassiveStep> {
    passive_public(scenario, chan, w, star, order, weights, SurfaceMode::Coupled)
}

/// SROCR surface update of the phases only, amplitudes kept from `star`.
pub fn passive_step_fixed(
    scenario: &Scenario,
    chan: &Channel,
    w: &[DVector<Complex>],
    star: &Star,
    order: &DecodingOrder,
    weights: &[f64],
) -> Result<PassiveStep> {
    passive_public(scenario, chan, w, star, order, weights, SurfaceMode::Fixed)
}

fn passive_public(
    scenario: &Scenario,
    chan: &Channel,
    w: &[DVector<Complex>],
    star: &Star,
    order: &DecodingOrder,
    weights: &[f64],
    mode: SurfaceMode,
) -> Result<PassiveStep> {
    let inst = Instance::new(scenario, chan, weights, order, RateModel::Noma)?;
    let point = normalized(&inst, w, star);
    let out = passive::passive_step(&inst, &point, mode, None)?;
    let gains = inst.gains(&point.w, &out.star)?;
    Ok(PassiveStep {
        local: LocalPoint::from_gains(&gains, order, 1.0)?,
        objective: inst.objective_from_gains(&gains),
        star: out.star,
        bounds: out.bounds,
        rank_ratio: out.rank_ratio,
        srocr: out.srocr,
    })
}

fn normalized(inst: &Instance, w: &[DVector<Complex>], star: &Star) -> Point {
    let inv = Complex::new(1.0 / inst.amplitude, 0.0);
    Point {
        w: w.iter().map(|x| x * inv).collect(),
        star: star.clone(),
    }
}
