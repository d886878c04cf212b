use nalgebra::{DMatrix, DVector, RowDVector};

use super::scenario::{Protocol, Side};
use super::types::{ChannelRealization, DecodingOrder, StarConfig};
use crate::error::{Error, Result};
use crate::scalar::{Cx, Scalar};

fn check_dims<T: Scalar>(chan: &ChannelRealization<T>, star: &StarConfig<T>) -> Result<()> {
    if star.num_elements() != chan.num_elements() {
        return Err(Error::Dimension {
            context: "surface elements",
            expected: chan.num_elements(),
            found: star.num_elements(),
        });
    }
    Ok(())
}

fn check_w<T: Scalar>(chan: &ChannelRealization<T>, w: &[DVector<Cx<T>>]) -> Result<()> {
    if w.len() != chan.num_users() {
        return Err(Error::Dimension {
            context: "beamformer count",
            expected: chan.num_users(),
            found: w.len(),
        });
    }
    for wk in w {
        if wk.len() != chan.num_antennas() {
            return Err(Error::Dimension {
                context: "beamformer length",
                expected: chan.num_antennas(),
                found: wk.len(),
            });
        }
    }
    Ok(())
}

/// Effective `1 × N` channel `v_rx Θ_s G` seen by user `rx` on its side.
pub fn effective_channel<T: Scalar>(
    chan: &ChannelRealization<T>,
    star: &StarConfig<T>,
    rx: usize,
) -> Result<RowDVector<Cx<T>>> {
    check_dims(chan, star)?;
    if rx >= chan.num_users() {
        return Err(Error::invalid(format!("user {rx} out of range")));
    }
    let phi = star.coefficients(chan.sides[rx]);
    let combined = RowDVector::from_fn(chan.num_elements(), |_, m| chan.v[rx][m] * phi[m]);
    Ok(combined * &chan.g)
}

/// `|v_rx Θ_{s_rx} G w|²`.
pub fn effective_gain<T: Scalar>(
    chan: &ChannelRealization<T>,
    star: &StarConfig<T>,
    rx: usize,
    w: &DVector<Cx<T>>,
) -> Result<T> {
    if w.len() != chan.num_antennas() {
        return Err(Error::Dimension {
            context: "beamformer length",
            expected: chan.num_antennas(),
            found: w.len(),
        });
    }
    let h = effective_channel(chan, star, rx)?;
    Ok((h * w)[(0, 0)].norm_sqr())
}

/// Lifted evaluation `Tr(W H^H D H)` with `W = w w^H`, `D = d d^H` and
/// `H = diag(v_rx) G`.
pub fn lifted_gain<T: Scalar>(
    chan: &ChannelRealization<T>,
    star: &StarConfig<T>,
    rx: usize,
    w: &DVector<Cx<T>>,
) -> Result<T> {
    check_dims(chan, star)?;
    let h = chan.cascaded(rx);
    let d = star.lifted_vector(chan.sides[rx]);
    let big_d: DMatrix<Cx<T>> = &d * d.adjoint();
    let big_w: DMatrix<Cx<T>> = w * w.adjoint();
    let inner = h.adjoint() * big_d * &h;
    Ok((big_w * inner).trace().re)
}

/// Matrix of gains `g[rx][tx] = |v_rx Θ G w_tx|²`.
pub fn gain_matrix<T: Scalar>(
    chan: &ChannelRealization<T>,
    star: &StarConfig<T>,
    w: &[DVector<Cx<T>>],
) -> Result<Vec<Vec<T>>> {
    check_w(chan, w)?;
    (0..chan.num_users())
        .map(|rx| {
            let h = effective_channel(chan, star, rx)?;
            Ok(w.iter().map(|wk| (&h * wk)[(0, 0)].norm_sqr()).collect())
        })
        .collect()
}

/// SINR of user `k`'s signal decoded at user `j` (`j == k` for self-decoding).
///
/// Signals of users decoded after `k` are interference; `o_k ≤ o_j` is
/// required.
pub fn sinr<T: Scalar>(
    chan: &ChannelRealization<T>,
    star: &StarConfig<T>,
    w: &[DVector<Cx<T>>],
    order: &DecodingOrder,
    k: usize,
    j: usize,
    noise: T,
) -> Result<T> {
    check_w(chan, w)?;
    if order.len() != chan.num_users() {
        return Err(Error::Dimension {
            context: "decoding order",
            expected: chan.num_users(),
            found: order.len(),
        });
    }
    if order.position(k) > order.position(j) {
        return Err(Error::Precondition(format!(
            "user {k} (order {}) cannot be decoded at user {j} (order {})",
            order.position(k),
            order.position(j)
        )));
    }
    let gains = gain_matrix(chan, star, w)?;
    Ok(sinr_from_gains(&gains, order, k, j, noise))
}

pub(crate) fn sinr_from_gains<T: Scalar>(
    gains: &[Vec<T>],
    order: &DecodingOrder,
    k: usize,
    j: usize,
    noise: T,
) -> T {
    let interference = (0..gains.len())
        .filter(|&i| order.position(i) > order.position(k))
        .map(|i| gains[j][i])
        .fold(T::zero(), |a, b| a + b);
    gains[j][k] / (interference + noise)
}

/// Rates from a gain matrix under SIC: the minimum over every decoder that
/// must remove the signal.
pub fn rates_from_gains<T: Scalar>(gains: &[Vec<T>], order: &DecodingOrder, noise: T) -> Vec<T> {
    let k_users = gains.len();
    (0..k_users)
        .map(|k| {
            (0..k_users)
                .filter(|&j| order.position(j) >= order.position(k))
                .map(|j| (T::one() + sinr_from_gains(gains, order, k, j, noise)).log2())
                .fold(T::max_value().unwrap_or_else(|| T::lit(f64::MAX)), |a, b| a.min(b))
                .max(T::zero())
        })
        .collect()
}

/// Achievable NOMA rate per user in bits/s/Hz.
pub fn achievable_rates<T: Scalar>(
    chan: &ChannelRealization<T>,
    star: &StarConfig<T>,
    w: &[DVector<Cx<T>>],
    order: &DecodingOrder,
    noise: T,
) -> Result<Vec<T>> {
    if !(noise > T::zero()) {
        return Err(Error::invalid("noise power must be positive"));
    }
    let gains = gain_matrix(chan, star, w)?;
    if order.len() != gains.len() {
        return Err(Error::Dimension {
            context: "decoding order",
            expected: gains.len(),
            found: order.len(),
        });
    }
    Ok(rates_from_gains(&gains, order, noise))
}

/// Queue-weighted sum rate `Σ Q_k R_k`.
pub fn qwsr<T: Scalar>(queues: &[T], rates: &[T]) -> Result<T> {
    if queues.len() != rates.len() {
        return Err(Error::Dimension {
            context: "queue/rate vectors",
            expected: queues.len(),
            found: rates.len(),
        });
    }
    if let Some(q) = queues.iter().find(|&&q| !(q >= T::zero())) {
        return Err(Error::invalid(format!("queue length {q} is negative")));
    }
    Ok(queues
        .iter()
        .zip(rates)
        .fold(T::zero(), |acc, (&q, &r)| acc + q * r))
}

/// OMA rate `ϖ log2(1 + gain / (ϖ σ²))`, zero at `ϖ = 0`.
pub fn oma_rate<T: Scalar>(gain: T, fraction: T, noise: T) -> T {
    if fraction <= T::zero() {
        return T::zero();
    }
    fraction * (T::one() + gain / (fraction * noise)).log2()
}

/// OMA rates for every user with its own beamformer and resource fraction.
pub fn oma_rates<T: Scalar>(
    chan: &ChannelRealization<T>,
    star: &StarConfig<T>,
    w: &[DVector<Cx<T>>],
    fractions: &[T],
    noise: T,
) -> Result<Vec<T>> {
    if fractions.len() != chan.num_users() {
        return Err(Error::Dimension {
            context: "OMA fractions",
            expected: chan.num_users(),
            found: fractions.len(),
        });
    }
    let gains = gain_matrix(chan, star, w)?;
    Ok((0..gains.len())
        .map(|k| oma_rate(gains[k][k], fractions[k], noise))
        .collect())
}

/// One violated surface constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum StarViolation {
    EnergyConservation { element: usize, sum: f64 },
    AmplitudeRange { side: Side, element: usize, value: f64 },
    NonBinary { side: Side, element: usize, value: f64 },
    PhaseRange { side: Side, element: usize, value: f64 },
    MixedPeriod,
}

/// Reports every violated constraint of `star` under `protocol`.
pub fn validate_star<T: Scalar>(star: &StarConfig<T>, protocol: Protocol) -> Vec<StarViolation> {
    let tol = 1e-9;
    let mut out = Vec::new();
    let two_pi = std::f64::consts::TAU;
    for side in Side::BOTH {
        for (m, (&b, &th)) in star.beta(side).iter().zip(star.theta(side).iter()).enumerate() {
            let b = b.as_f64();
            let th = th.as_f64();
            if !(-tol..=1.0 + tol).contains(&b) {
                out.push(StarViolation::AmplitudeRange { side, element: m, value: b });
            }
            if protocol == Protocol::Ms && b.min(1.0 - b).abs() > tol {
                out.push(StarViolation::NonBinary { side, element: m, value: b });
            }
            if !(0.0..two_pi).contains(&th) {
                out.push(StarViolation::PhaseRange { side, element: m, value: th });
            }
        }
    }
    match protocol {
        Protocol::Es | Protocol::Ms => {
            for m in 0..star.num_elements() {
                let sum = (star.beta_r[m] + star.beta_t[m]).as_f64();
                if (sum - 1.0).abs() > tol {
                    out.push(StarViolation::EnergyConservation { element: m, sum });
                }
            }
        }
        Protocol::Ts => {
            let all = |v: &DVector<T>, x: f64| v.iter().all(|&b| (b.as_f64() - x).abs() <= tol);
            let r_period = all(&star.beta_r, 1.0) && all(&star.beta_t, 0.0);
            let t_period = all(&star.beta_r, 0.0) && all(&star.beta_t, 1.0);
            if !(r_period || t_period) {
                out.push(StarViolation::MixedPeriod);
            }
        }
    }
    out
}

/// A violated rate-fairness inequality: at receiver `rx`, the signal of the
/// earlier-decoded user `earlier` is weaker than that of `later`.
#[derive(Debug, Clone, PartialEq)]
pub struct FairnessViolation {
    pub rx: usize,
    pub earlier: usize,
    pub later: usize,
    /// Shortfall `g[rx][later] - g[rx][earlier]`.
    pub magnitude: f64,
}

/// Checks `|v_i Θ G w_k|² ≥ |v_i Θ G w_j|²` for every `o_k < o_j` and
/// every receiver `i`. `rel_tol` is relative to the largest gain.
pub fn check_fairness<T: Scalar>(
    chan: &ChannelRealization<T>,
    star: &StarConfig<T>,
    w: &[DVector<Cx<T>>],
    order: &DecodingOrder,
    rel_tol: f64,
) -> Result<Vec<FairnessViolation>> {
    let gains = gain_matrix(chan, star, w)?;
    Ok(fairness_violations(&gains, order, rel_tol))
}

pub(crate) fn fairness_violations<T: Scalar>(
    gains: &[Vec<T>],
    order: &DecodingOrder,
    rel_tol: f64,
) -> Vec<FairnessViolation> {
    let k_users = gains.len();
    let scale = gains
        .iter()
        .flatten()
        .fold(0.0f64, |a, g| a.max(g.as_f64()));
    let mut out = Vec::new();
    for k in 0..k_users {
        for j in 0..k_users {
            if !order.decodes_before(k, j) {
                continue;
            }
            for (i, row) in gains.iter().enumerate() {
                let short = row[j].as_f64() - row[k].as_f64();
                if short > rel_tol * scale {
                    out.push(FairnessViolation {
                        rx: i,
                        earlier: k,
                        later: j,
                        magnitude: short,
                    });
                }
            }
        }
    }
    out
}
