use nalgebra::{DVector, RowDVector};
use rand::Rng;

use crate::channel::{self, RngStream};
use crate::error::{Error, Result};
use crate::model::{
    effective_channel, fairness_violations, gain_matrix, oma_rate, rates_from_gains,
    AlgorithmParams, BeamformingSolution, DecodingOrder, Diagnostics, Protocol, Scenario, Side,
    Trace,
};
use crate::{Channel, Complex, Star};

/// Relative tolerance of the fairness rows on accepted iterates.
pub(crate) const FAIRNESS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum RateModel {
    Noma,
    /// Orthogonal access with one resource fraction per user.
    Oma(Vec<f64>),
}

/// One slot's problem in normalized units: unit noise and unit power budget.
///
/// Channels are scaled by `√(P_max/σ²)` so precoders live in the unit ball
/// and SINRs are unchanged.
#[derive(Debug, Clone)]
pub(crate) struct Instance {
    pub chan: Channel,
    pub weights: Vec<f64>,
    pub order: DecodingOrder,
    pub model: RateModel,
    pub params: AlgorithmParams,
    /// `√P_max`, converting normalized precoders to watts.
    pub amplitude: f64,
}

/// Current iterate: normalized precoders and surface.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Point {
    pub w: Vec<DVector<Complex>>,
    pub star: Star,
}

impl Instance {
    pub fn new(
        scenario: &Scenario,
        chan: &Channel,
        weights: &[f64],
        order: &DecodingOrder,
        model: RateModel,
    ) -> Result<Self> {
        let k = chan.num_users();
        if weights.len() != k {
            return Err(Error::Dimension {
                context: "weights",
                expected: k,
                found: weights.len(),
            });
        }
        if order.len() != k {
            return Err(Error::Dimension {
                context: "decoding order",
                expected: k,
                found: order.len(),
            });
        }
        if weights.iter().any(|&q| !(q >= 0.0 && q.is_finite())) {
            return Err(Error::invalid("weights must be finite and nonnegative"));
        }
        if chan.num_antennas() != scenario.num_antennas || chan.num_elements() != scenario.num_elements {
            return Err(Error::invalid("channel dimensions do not match the scenario"));
        }
        if let RateModel::Oma(f) = &model {
            if f.len() != k || f.iter().any(|&x| !(x >= 0.0)) || f.iter().sum::<f64>() > 1.0 + 1e-9 {
                return Err(Error::invalid(format!("invalid OMA fractions {f:?}")));
            }
        }
        scenario.params.validate()?;
        let noise = channel::noise_power(scenario)?;
        Ok(Self {
            chan: chan.scaled((scenario.p_max / noise).sqrt()),
            weights: weights.to_vec(),
            order: order.clone(),
            model,
            params: scenario.params.clone(),
            amplitude: scenario.p_max.sqrt(),
        })
    }

    pub fn num_users(&self) -> usize {
        self.chan.num_users()
    }

    pub fn is_noma(&self) -> bool {
        matches!(self.model, RateModel::Noma)
    }

    pub fn all_weights_zero(&self) -> bool {
        self.weights.iter().all(|&q| q == 0.0)
    }

    /// Objective weight of user `k`: `Q_k`, or `Q_k ϖ_k` under OMA where
    /// the rate variable is the per-resource spectral efficiency.
    pub fn rate_weight(&self, k: usize) -> f64 {
        match &self.model {
            RateModel::Noma => self.weights[k],
            RateModel::Oma(f) => self.weights[k] * f[k],
        }
    }

    pub fn gains(&self, w: &[DVector<Complex>], star: &Star) -> Result<Vec<Vec<f64>>> {
        gain_matrix(&self.chan, star, w)
    }

    pub fn rates(&self, gains: &[Vec<f64>]) -> Vec<f64> {
        match &self.model {
            RateModel::Noma => rates_from_gains(gains, &self.order, 1.0),
            RateModel::Oma(f) => (0..gains.len()).map(|k| oma_rate(gains[k][k], f[k], 1.0)).collect(),
        }
    }

    pub fn objective_from_gains(&self, gains: &[Vec<f64>]) -> f64 {
        self.rates(gains)
            .iter()
            .zip(&self.weights)
            .map(|(r, q)| r * q)
            .sum()
    }

    pub fn is_fair(&self, gains: &[Vec<f64>]) -> bool {
        !self.is_noma() || fairness_violations(gains, &self.order, FAIRNESS_TOL).is_empty()
    }

    pub fn effective_channels(&self, star: &Star) -> Result<Vec<RowDVector<Complex>>> {
        (0..self.num_users())
            .map(|k| effective_channel(&self.chan, star, k))
            .collect()
    }

    /// Matched-filter precoders on `star`, power split toward earlier-decoded
    /// users as `p_k ∝ ρ^{o_k}` with the largest fair `ρ ∈ (0, 1]`.
    pub fn matched_start(&self, star: &Star) -> Result<Vec<DVector<Complex>>> {
        let n = self.chan.num_antennas();
        let dirs: Vec<DVector<Complex>> = self
            .effective_channels(star)?
            .into_iter()
            .map(|h| {
                let norm = h.norm();
                if norm > 0.0 {
                    h.adjoint() / Complex::new(norm, 0.0)
                } else {
                    DVector::from_fn(n, |i, _| Complex::new(if i == 0 { 1.0 } else { 0.0 }, 0.0))
                }
            })
            .collect();
        let build = |rho: f64| -> Vec<DVector<Complex>> {
            let raw: Vec<f64> = (0..dirs.len())
                .map(|k| rho.powi(self.order.position(k) as i32))
                .collect();
            let total: f64 = raw.iter().sum();
            dirs.iter()
                .zip(&raw)
                .map(|(d, p)| d * Complex::new((p / total).sqrt(), 0.0))
                .collect()
        };
        let fair = |w: &[DVector<Complex>]| -> Result<bool> {
            let g = self.gains(w, star)?;
            Ok(fairness_violations(&g, &self.order, 0.0).is_empty())
        };
        if !self.is_noma() || fair(&build(1.0))? {
            return Ok(build(1.0));
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if fair(&build(mid))? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let w = build(lo.max(1e-6));
        if !fair(&w)? {
            return Err(Error::infeasible(
                "initialization",
                "no power split of the matched filters satisfies the fairness rows",
            ));
        }
        Ok(w)
    }

    /// Starting surface for `protocol`: uniform split (or the given side) with
    /// phases drawn from the seed.
    pub fn random_star(&self, seed: u64, period: Option<Side>) -> Result<Star> {
        let m = self.chan.num_elements();
        let mut rng = RngStream::new(seed, 0x5354_4152).rng();
        let tau = std::f64::consts::TAU;
        let theta_r = DVector::from_fn(m, |_, _| rng.random::<f64>() * tau);
        let theta_t = DVector::from_fn(m, |_, _| rng.random::<f64>() * tau);
        Ok(match period {
            Some(side) => Star::single_side(side, if side == Side::Reflection { theta_r } else { theta_t }),
            None => Star::uniform_split(theta_r, theta_t)?,
        })
    }

    /// Packs a normalized iterate into a solution in physical units.
    pub fn solution(
        &self,
        p: &Point,
        trace: Trace<f64>,
        diagnostics: Diagnostics<f64>,
        protocol: Protocol,
    ) -> Result<BeamformingSolution<f64>> {
        let gains = self.gains(&p.w, &p.star)?;
        let rates = self.rates(&gains);
        let qwsr = rates.iter().zip(&self.weights).map(|(r, q)| r * q).sum();
        let amp = Complex::new(self.amplitude, 0.0);
        Ok(BeamformingSolution {
            w: p.w.iter().map(|w| w * amp).collect(),
            star: p.star.clone().with_protocol(protocol),
            order: self.order.clone(),
            rates,
            qwsr,
            trace,
            ts: None,
            oma_fractions: match &self.model {
                RateModel::Oma(f) => Some(f.clone()),
                RateModel::Noma => None,
            },
            diagnostics,
        })
    }

    /// Normalized iterate of a solution in physical units.
    pub fn point_of(&self, sol: &BeamformingSolution<f64>) -> Point {
        let inv = Complex::new(1.0 / self.amplitude, 0.0);
        Point {
            w: sol.w.iter().map(|w| w * inv).collect(),
            star: sol.star.clone(),
        }
    }
}

/// Channel, weights and order restricted to `users` (kept in their order).
pub(crate) fn restrict(
    chan: &Channel,
    weights: &[f64],
    order: &DecodingOrder,
    users: &[usize],
) -> Result<(Channel, Vec<f64>, DecodingOrder)> {
    let sub = Channel::new(
        chan.g.clone(),
        users.iter().map(|&k| chan.v[k].clone()).collect(),
        users.iter().map(|&k| chan.sides[k]).collect(),
    )?;
    let w = users.iter().map(|&k| weights[k]).collect();
    let mut ranked: Vec<usize> = (0..users.len()).collect();
    ranked.sort_by_key(|&i| order.position(users[i]));
    Ok((sub, w, DecodingOrder::new(ranked)?))
}
