use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::model::DecodingOrder;

/// First-order cut of the convex function `log2(1 + 1/(S·I))` at `(s̃, ĩ)`.
///
/// The cut is affine in `(S, I)`, touches the function at the anchor and
/// lies below it everywhere on the positive orthant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorCut {
    pub s_tilde: f64,
    pub i_tilde: f64,
    /// `log2(1 + 1/(s̃ĩ))`.
    pub value: f64,
    /// `1 / (ln2 (s̃²ĩ + s̃))`.
    pub slope_s: f64,
    /// `1 / (ln2 (ĩ²s̃ + ĩ))`.
    pub slope_i: f64,
}

impl TaylorCut {
    pub fn at(s_tilde: f64, i_tilde: f64) -> Result<Self> {
        if !(s_tilde > 0.0 && i_tilde > 0.0 && s_tilde.is_finite() && i_tilde.is_finite()) {
            return Err(Error::invalid(format!(
                "Taylor anchor must be positive, got S̃={s_tilde}, Ĩ={i_tilde}"
            )));
        }
        Ok(Self {
            s_tilde,
            i_tilde,
            value: (1.0 + 1.0 / (s_tilde * i_tilde)).log2(),
            slope_s: 1.0 / (LN_2 * (s_tilde * s_tilde * i_tilde + s_tilde)),
            slope_i: 1.0 / (LN_2 * (i_tilde * i_tilde * s_tilde + i_tilde)),
        })
    }

    pub fn eval(&self, s: f64, i: f64) -> f64 {
        self.value - self.slope_s * (s - self.s_tilde) - self.slope_i * (i - self.i_tilde)
    }
}

/// Lower bound on `log2(1 + 1/(S·I))` from the cut anchored at `(s̃, ĩ)`.
pub fn lower_bound_rate(s: f64, i: f64, s_tilde: f64, i_tilde: f64) -> Result<f64> {
    Ok(TaylorCut::at(s_tilde, i_tilde)?.eval(s, i))
}

/// Anchor of one SIC pair: user `k`'s signal decoded at user `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairAnchor {
    pub k: usize,
    pub j: usize,
    pub cut: TaylorCut,
}

/// Anchors `S̃_kj = 1/g_jk`, `Ĩ_kj = Σ_{o_i > o_k} g_ji + σ²` for every pair
/// with `o_k ≤ o_j`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LocalPoint {
    pub pairs: Vec<PairAnchor>,
}

/// Gains below this floor are clamped before inverting them into `S̃`.
pub(crate) const GAIN_FLOOR: f64 = 1e-8;

impl LocalPoint {
    /// Local point of the current iterate from its gain matrix `g[rx][tx]`.
    pub fn from_gains(gains: &[Vec<f64>], order: &DecodingOrder, noise: f64) -> Result<Self> {
        let k_users = gains.len();
        let mut pairs = Vec::new();
        for k in 0..k_users {
            for j in 0..k_users {
                if order.position(j) < order.position(k) {
                    continue;
                }
                let interference: f64 = (0..k_users)
                    .filter(|&i| order.position(i) > order.position(k))
                    .map(|i| gains[j][i])
                    .sum();
                let cut = TaylorCut::at(1.0 / gains[j][k].max(GAIN_FLOOR), interference + noise)?;
                pairs.push(PairAnchor { k, j, cut });
            }
        }
        Ok(Self { pairs })
    }

    pub fn pair(&self, k: usize, j: usize) -> Option<&PairAnchor> {
        self.pairs.iter().find(|p| p.k == k && p.j == j)
    }
}

/// State of the sequential rank-one constraint relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct SrocrState {
    /// Required share `λ_max / Tr` of every surface block.
    pub gamma: f64,
    pub delta: f64,
    /// Leading eigenvector of each constrained block of the previous iterate.
    pub directions: Vec<nalgebra::DVector<crate::Complex>>,
    pub iteration: usize,
}

impl SrocrState {
    pub fn new(gamma0: f64, delta0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma0) || !(delta0 > 0.0) {
            return Err(Error::invalid(format!(
                "SROCR needs gamma in [0,1] and delta > 0, got {gamma0}, {delta0}"
            )));
        }
        Ok(Self {
            gamma: gamma0,
            delta: delta0,
            directions: Vec::new(),
            iteration: 0,
        })
    }

    /// `γ ← min(1, ρ + δ)` from the eigenvalue share `ρ` of the last iterate.
    pub fn advance(&mut self, share: f64) {
        self.gamma = (share + self.delta).min(1.0);
        self.iteration += 1;
    }

    /// Halves `δ` after an unsolvable step and retries from share `ρ`.
    pub fn backtrack(&mut self, share: f64) {
        self.delta *= 0.5;
        self.gamma = (share + self.delta).min(1.0);
    }
}

/// Penalty schedule of the MS method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyState {
    pub eta: f64,
    pub zeta: f64,
    pub outer: usize,
}

/// Penalty factor beyond which the MS method gives up.
pub const ETA_MAX: f64 = 1e8;

impl PenaltyState {
    pub fn new(eta: f64, zeta: f64) -> Result<Self> {
        if !(eta > 0.0) || !(zeta > 1.0) {
            return Err(Error::invalid(format!(
                "penalty needs eta > 0 and zeta > 1, got {eta}, {zeta}"
            )));
        }
        Ok(Self { eta, zeta, outer: 0 })
    }

    pub fn grow(&mut self) {
        self.eta *= self.zeta;
        self.outer += 1;
    }
}

/// Linearized binary penalty `Λ(D, D̃) = Σ_m β_m − 2β̃_mβ_m + β̃_m²` of one side.
pub fn penalty_bound(beta: &[f64], anchor: &[f64]) -> f64 {
    beta.iter()
        .zip(anchor)
        .map(|(&b, &a)| b - 2.0 * a * b + a * a)
        .sum()
}

/// Exact binary penalty `Σ_m β_m (1 − β_m)` of one side.
pub fn binary_penalty(beta: &[f64]) -> f64 {
    beta.iter().map(|&b| b * (1.0 - b)).sum()
}
