//! Queue recursion, arrivals, Lyapunov quantities and stability metrics.
//!
//! Rates and arrivals share bits/s/Hz units and are multiplied by the slot
//! length `τ` when enqueued.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::channel::RngStream;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Backlog per user at slot `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueState<T: Scalar> {
    pub q: Vec<T>,
    pub t: usize,
}

impl<T: Scalar> QueueState<T> {
    pub fn new(q: Vec<T>) -> Result<Self> {
        if q.iter().any(|&x| !(x >= T::zero() && x.is_finite())) {
            return Err(Error::invalid("queue lengths must be finite and nonnegative"));
        }
        Ok(Self { q, t: 0 })
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }
}

/// `Q_k(t+1) = [Q_k(t) − R_k τ]⁺ + A_k τ`.
pub fn step_queue<T: Scalar>(
    state: &QueueState<T>,
    rates: &[T],
    arrivals: &[T],
    tau: T,
) -> Result<QueueState<T>> {
    let k = state.len();
    for (name, v) in [("rates", rates), ("arrivals", arrivals)] {
        if v.len() != k {
            return Err(Error::Dimension {
                context: if name == "rates" { "queue rates" } else { "queue arrivals" },
                expected: k,
                found: v.len(),
            });
        }
        if v.iter().any(|&x| !(x >= T::zero() && x.is_finite())) {
            return Err(Error::invalid(format!("{name} must be finite and nonnegative")));
        }
    }
    if !(tau > T::zero()) {
        return Err(Error::invalid("slot length must be positive"));
    }
    let q = (0..k)
        .map(|i| (state.q[i] - rates[i] * tau).max(T::zero()) + arrivals[i] * tau)
        .collect();
    Ok(QueueState { q, t: state.t + 1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalKind {
    Poisson,
    Deterministic,
}

/// Per-slot arrivals with mean `λ_k` (bits/s/Hz).
#[derive(Debug, Clone)]
pub struct ArrivalProcess {
    pub rates: Vec<f64>,
    pub kind: ArrivalKind,
    rng: ChaCha8Rng,
}

impl ArrivalProcess {
    pub fn new(rates: Vec<f64>, kind: ArrivalKind, stream: RngStream) -> Result<Self> {
        if rates.iter().any(|&l| !(l >= 0.0 && l.is_finite())) {
            return Err(Error::invalid("arrival rates must be finite and nonnegative"));
        }
        Ok(Self {
            rates,
            kind,
            rng: stream.rng(),
        })
    }
}

/// Draws one slot of arrivals: `Poisson(λ_k)` or exactly `λ_k`.
pub fn sample_arrivals(process: &mut ArrivalProcess) -> Vec<f64> {
    match process.kind {
        ArrivalKind::Deterministic => process.rates.clone(),
        ArrivalKind::Poisson => {
            let rng = &mut process.rng;
            process
                .rates
                .iter()
                .map(|&l| {
                    if l == 0.0 {
                        0.0
                    } else {
                        Poisson::new(l).expect("positive finite mean").sample(rng)
                    }
                })
                .collect()
        }
    }
}

/// `L = Σ Q_k²`.
pub fn lyapunov<T: Scalar>(state: &QueueState<T>) -> T {
    state.q.iter().fold(T::zero(), |a, &q| a + q * q)
}

/// Weights of the per-slot objective that minimizes the drift bound: the
/// queue lengths themselves.
pub fn drift_weights<T: Scalar>(state: &QueueState<T>) -> Vec<T> {
    state.q.clone()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityMetrics {
    /// `(1/T) Σ_t Q_k(t)` per user.
    pub time_avg_len: Vec<f64>,
    /// Least-squares slope of `Q_k(t)` over the second half of the run, per slot.
    pub tail_slope: Vec<f64>,
}

/// Least-squares slope of `ys` against `0, 1, 2, …`.
pub fn ls_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let mx = (n - 1.0) / 2.0;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &y) in ys.iter().enumerate() {
        let dx = i as f64 - mx;
        sxy += dx * (y - my);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Metrics of a trajectory `traj[t][k]`; needs at least 10 slots.
pub fn stability_metrics(traj: &[Vec<f64>]) -> Result<StabilityMetrics> {
    if traj.len() < 10 {
        return Err(Error::invalid(format!(
            "trajectory has {} slots; at least 10 are required",
            traj.len()
        )));
    }
    let k = traj[0].len();
    if traj.iter().any(|row| row.len() != k) {
        return Err(Error::invalid("trajectory rows have different lengths"));
    }
    let t = traj.len();
    let start = t / 2;
    let mut time_avg_len = Vec::with_capacity(k);
    let mut tail_slope = Vec::with_capacity(k);
    for u in 0..k {
        let col: Vec<f64> = traj.iter().map(|r| r[u]).collect();
        time_avg_len.push(col.iter().sum::<f64>() / t as f64);
        tail_slope.push(ls_slope(&col[start..]));
    }
    Ok(StabilityMetrics {
        time_avg_len,
        tail_slope,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    use super::*;

    fn st(q: &[f64]) -> QueueState<f64> {
        QueueState::new(q.to_vec()).unwrap()
    }

    #[test]
    fn recursion_examples() {
        assert_eq!(step_queue(&st(&[0.0]), &[5.0], &[0.0], 1.0).unwrap().q, vec![0.0]);
        assert_eq!(step_queue(&st(&[10.0]), &[4.0], &[3.0], 1.0).unwrap().q, vec![9.0]);
        assert_eq!(step_queue(&st(&[2.0]), &[5.0], &[1.0], 1.0).unwrap().q, vec![1.0]);
        assert!(step_queue(&st(&[2.0]), &[-1.0], &[1.0], 1.0).is_err());
        assert!(step_queue(&st(&[2.0]), &[1.0], &[-1.0], 1.0).is_err());
        assert!(QueueState::new(vec![-1.0]).is_err());
        assert_eq!(step_queue(&st(&[2.0]), &[1.0], &[1.0], 1.0).unwrap().t, 1);
    }

    #[test]
    fn recursion_exhaustive_small_grid() {
        for q in 0..8 {
            for r in 0..8 {
                for a in 0..8 {
                    for tau in [1.0, 0.5] {
                        let (qf, rf, af) = (q as f64, r as f64, a as f64);
                        let got = step_queue(&st(&[qf]), &[rf], &[af], tau).unwrap().q[0];
                        let expected = f64::max(qf - rf * tau, 0.0) + af * tau;
                        assert_eq!(got, expected);
                    }
                }
            }
        }
    }

    #[test]
    fn arrivals() {
        let mut p = ArrivalProcess::new(vec![0.0, 2.0], ArrivalKind::Poisson, RngStream::new(1, 0))
            .unwrap();
        let n = 100_000;
        let mut sum = [0.0; 2];
        for _ in 0..n {
            let a = sample_arrivals(&mut p);
            assert_eq!(a[0], 0.0);
            assert!(a[1] >= 0.0);
            sum[1] += a[1];
        }
        assert!((sum[1] / n as f64 / 2.0 - 1.0).abs() < 0.02);
        let mut d =
            ArrivalProcess::new(vec![6.0], ArrivalKind::Deterministic, RngStream::new(1, 0)).unwrap();
        for _ in 0..10 {
            assert_eq!(sample_arrivals(&mut d), vec![6.0]);
        }
        assert!(ArrivalProcess::new(vec![-1.0], ArrivalKind::Poisson, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn lyapunov_and_weights() {
        assert_eq!(lyapunov(&st(&[0.0, 0.0])), 0.0);
        assert_eq!(drift_weights(&st(&[0.0, 0.0])), vec![0.0, 0.0]);
        assert_eq!(lyapunov(&st(&[3.0, 4.0])), 25.0);
        assert_eq!(drift_weights(&st(&[3.0, 4.5])), vec![3.0, 4.5]);
    }

    #[test]
    fn stability_examples() {
        let constant: Vec<Vec<f64>> = (0..50).map(|_| vec![4.0]).collect();
        let m = stability_metrics(&constant).unwrap();
        assert_eq!(m.time_avg_len, vec![4.0]);
        assert_eq!(m.tail_slope, vec![0.0]);
        let ramp: Vec<Vec<f64>> = (0..50).map(|t| vec![t as f64]).collect();
        assert_relative_eq!(stability_metrics(&ramp).unwrap().tail_slope[0], 1.0, epsilon = 1e-12);
        assert!(stability_metrics(&ramp[..9]).is_err());
    }

    #[test]
    fn bounded_noise_has_flat_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let t = 2000;
        let traj: Vec<Vec<f64>> = (0..t).map(|_| vec![5.0 + rng.random::<f64>() - 0.5]).collect();
        let slope = stability_metrics(&traj).unwrap().tail_slope[0];
        // Standard error of the slope for uniform noise (σ² = 1/12) over n points.
        let n = (t / 2) as f64;
        let se = ((1.0 / 12.0) / (n * (n * n - 1.0) / 12.0)).sqrt();
        assert!(slope.abs() <= 3.0 * se, "{slope} vs {se}");
    }

    proptest! {
        #[test]
        fn step_preserves_nonnegativity(
            q in 0.0f64..100.0, r in 0.0f64..100.0, a in 0.0f64..100.0, tau in 0.001f64..2.0
        ) {
            let next = step_queue(&st(&[q]), &[r], &[a], tau).unwrap();
            prop_assert!(next.q[0] >= a * tau);
        }

        #[test]
        fn drain_bound(q0 in 0.0f64..200.0, delta in 0.1f64..5.0, a in 0.0f64..10.0,
                       tau in 0.1f64..1.0) {
            let r = a + delta;
            let bound = (q0 / (delta * tau)).ceil() as usize;
            let mut s = st(&[q0]);
            let mut drained = q0 == 0.0;
            for _ in 0..=bound {
                if s.q[0] - r * tau <= 0.0 {
                    drained = true;
                    break;
                }
                s = step_queue(&s, &[r], &[a], tau).unwrap();
            }
            prop_assert!(drained);
        }
    }
}
