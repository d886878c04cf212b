use nalgebra::{DMatrix, DVector, RowDVector};

use super::scenario::{Protocol, Side};
use crate::error::{Error, Result};
use crate::scalar::{cis, wrap_phase, Cx, Scalar};

/// One slot's BS→surface matrix and surface→user rows, path loss included.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T: Scalar> {
    /// `M × N` BS→surface channel.
    pub g: DMatrix<Cx<T>>,
    /// `1 × M` surface→user channel per user.
    pub v: Vec<RowDVector<Cx<T>>>,
    /// Half-space of each user (copied from the scenario).
    pub sides: Vec<Side>,
}

impl<T: Scalar> ChannelRealization<T> {
    pub fn new(g: DMatrix<Cx<T>>, v: Vec<RowDVector<Cx<T>>>, sides: Vec<Side>) -> Result<Self> {
        let m = g.nrows();
        if v.len() != sides.len() {
            return Err(Error::Dimension {
                context: "channel sides",
                expected: v.len(),
                found: sides.len(),
            });
        }
        for row in &v {
            if row.len() != m {
                return Err(Error::Dimension {
                    context: "surface→user channel",
                    expected: m,
                    found: row.len(),
                });
            }
        }
        let finite = |z: &Cx<T>| z.re.is_finite() && z.im.is_finite();
        if !g.iter().all(finite) || !v.iter().all(|r| r.iter().all(finite)) {
            return Err(Error::invalid("channel entries must be finite"));
        }
        Ok(Self { g, v, sides })
    }

    pub fn num_antennas(&self) -> usize {
        self.g.ncols()
    }

    pub fn num_elements(&self) -> usize {
        self.g.nrows()
    }

    pub fn num_users(&self) -> usize {
        self.v.len()
    }

    /// Cascaded channel `diag(v_k) G`.
    pub fn cascaded(&self, k: usize) -> DMatrix<Cx<T>> {
        let mut h = self.g.clone();
        for (m, mut row) in h.row_iter_mut().enumerate() {
            row *= self.v[k][m];
        }
        h
    }

    /// Multiplies every entry by `factor` (used to normalize to unit noise).
    pub fn scaled(&self, factor: T) -> Self {
        let f = Cx::new(factor, T::zero());
        Self {
            g: self.g.clone(),
            v: self.v.iter().map(|r| r * f).collect(),
            sides: self.sides.clone(),
        }
    }

    pub fn map_scalar<U: Scalar>(&self) -> ChannelRealization<U> {
        let conv = |z: &Cx<T>| Cx::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64()));
        ChannelRealization {
            g: self.g.map(|z| conv(&z)),
            v: self.v.iter().map(|r| r.map(|z| conv(&z))).collect(),
            sides: self.sides.clone(),
        }
    }
}

/// Per-element amplitudes and phases of both half-spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct StarConfig<T: Scalar> {
    pub beta_r: DVector<T>,
    pub beta_t: DVector<T>,
    pub theta_r: DVector<T>,
    pub theta_t: DVector<T>,
    pub protocol: Protocol,
}

/// Amplitude tolerance before a value is treated as out of `[0, 1]`.
pub const AMPLITUDE_SLACK: f64 = 1e-9;

impl<T: Scalar> StarConfig<T> {
    /// Builds a configuration, wrapping phases into `[0, 2π)` and clamping
    /// amplitudes. Under ES/MS the pair `(β_r, β_t)` is renormalized to sum
    /// to one.
    pub fn new(
        beta_r: DVector<T>,
        beta_t: DVector<T>,
        theta_r: DVector<T>,
        theta_t: DVector<T>,
        protocol: Protocol,
    ) -> Result<Self> {
        let m = beta_r.len();
        for (name, len) in [
            ("beta_t", beta_t.len()),
            ("theta_r", theta_r.len()),
            ("theta_t", theta_t.len()),
        ] {
            if len != m {
                return Err(Error::invalid(format!("{name} has length {len}, expected {m}")));
            }
        }
        let slack = T::lit(AMPLITUDE_SLACK);
        let clamp = |b: T| -> Result<T> {
            if !b.is_finite() || b < -slack || b > T::one() + slack {
                return Err(Error::invalid(format!("amplitude {b} outside [0,1]")));
            }
            Ok(b.max(T::zero()).min(T::one()))
        };
        let mut br = DVector::zeros(m);
        let mut bt = DVector::zeros(m);
        for i in 0..m {
            br[i] = clamp(beta_r[i])?;
            bt[i] = clamp(beta_t[i])?;
            if protocol != Protocol::Ts {
                let s = br[i] + bt[i];
                if s > T::zero() {
                    br[i] /= s;
                    bt[i] /= s;
                } else {
                    br[i] = T::lit(0.5);
                    bt[i] = T::lit(0.5);
                }
            }
        }
        Ok(Self {
            beta_r: br,
            beta_t: bt,
            theta_r: theta_r.map(wrap_phase),
            theta_t: theta_t.map(wrap_phase),
            protocol,
        })
    }

    /// Uniform split `β_r = β_t = 0.5` with the given phases.
    pub fn uniform_split(theta_r: DVector<T>, theta_t: DVector<T>) -> Result<Self> {
        let m = theta_r.len();
        let half = DVector::from_element(m, T::lit(0.5));
        Self::new(half.clone(), half, theta_r, theta_t, Protocol::Es)
    }

    /// Whole surface on one side (a TS period).
    pub fn single_side(side: Side, theta: DVector<T>) -> Self {
        let m = theta.len();
        let (br, bt) = match side {
            Side::Reflection => (DVector::from_element(m, T::one()), DVector::zeros(m)),
            Side::Transmission => (DVector::zeros(m), DVector::from_element(m, T::one())),
        };
        let theta = theta.map(wrap_phase);
        Self {
            beta_r: br,
            beta_t: bt,
            theta_r: theta.clone(),
            theta_t: theta,
            protocol: Protocol::Ts,
        }
    }

    pub fn num_elements(&self) -> usize {
        self.beta_r.len()
    }

    pub fn beta(&self, side: Side) -> &DVector<T> {
        match side {
            Side::Reflection => &self.beta_r,
            Side::Transmission => &self.beta_t,
        }
    }

    pub fn theta(&self, side: Side) -> &DVector<T> {
        match side {
            Side::Reflection => &self.theta_r,
            Side::Transmission => &self.theta_t,
        }
    }

    /// Diagonal of `Θ_s`: entries `sqrt(β_m) e^{jθ_m}`.
    pub fn coefficients(&self, side: Side) -> DVector<Cx<T>> {
        let beta = self.beta(side);
        let theta = self.theta(side);
        DVector::from_fn(beta.len(), |m, _| cis(theta[m]) * beta[m].max(T::zero()).sqrt())
    }

    /// Lifted vector `d_s` with `Θ_s = diag(d_s^H)`.
    pub fn lifted_vector(&self, side: Side) -> DVector<Cx<T>> {
        self.coefficients(side).map(|z| z.conj())
    }

    /// Largest deviation from energy conservation.
    pub fn energy_violation(&self) -> T {
        (0..self.num_elements())
            .map(|m| (self.beta_r[m] + self.beta_t[m] - T::one()).abs())
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn with_protocol(mut self, protocol: Protocol) -> Self {
        self.protocol = protocol;
        self
    }
}

/// SIC decoding order: `perm[p]` is the user decoded at position `p`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DecodingOrder {
    perm: Vec<usize>,
    pos: Vec<usize>,
}

impl DecodingOrder {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let k = perm.len();
        let mut pos = vec![usize::MAX; k];
        for (p, &u) in perm.iter().enumerate() {
            if u >= k || pos[u] != usize::MAX {
                return Err(Error::invalid(format!("{perm:?} is not a permutation")));
            }
            pos[u] = p;
        }
        Ok(Self { perm, pos })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            perm: (0..k).collect(),
            pos: (0..k).collect(),
        }
    }

    /// Decoding position `o_k` of user `k`; smaller decodes earlier.
    pub fn position(&self, k: usize) -> usize {
        self.pos[k]
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn decodes_before(&self, k: usize, j: usize) -> bool {
        self.pos[k] < self.pos[j]
    }

    /// Every permutation of `0..k` in lexicographic order.
    pub fn all(k: usize) -> Vec<DecodingOrder> {
        let mut out = Vec::new();
        let mut perm: Vec<usize> = (0..k).collect();
        loop {
            out.push(DecodingOrder::new(perm.clone()).expect("permutation"));
            // next lexicographic permutation
            let Some(i) = (1..perm.len()).rev().find(|&i| perm[i - 1] < perm[i]) else {
                break;
            };
            let j = (i..perm.len()).rev().find(|&j| perm[j] > perm[i - 1]).unwrap();
            perm.swap(i - 1, j);
            perm[i..].reverse();
        }
        out
    }
}

/// Objective values per iteration, split into monotone segments.
///
/// A new segment starts whenever the objective itself changes definition
/// (a penalty factor update, a hard rounding step, or a TS side switch).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace<T: Scalar> {
    pub values: Vec<T>,
    pub segment_starts: Vec<usize>,
}

impl<T: Scalar> Trace<T> {
    pub fn new() -> Self {
        Self {
            values: Vec::new(),
            segment_starts: vec![0],
        }
    }

    pub fn push(&mut self, v: T) {
        self.values.push(v);
    }

    pub fn new_segment(&mut self) {
        let at = self.values.len();
        if self.segment_starts.last() != Some(&at) {
            self.segment_starts.push(at);
        }
    }

    pub fn append_segment(&mut self, other: &Trace<T>) {
        for (i, &start) in other.segment_starts.iter().enumerate() {
            let end = other
                .segment_starts
                .get(i + 1)
                .copied()
                .unwrap_or(other.values.len());
            if start >= end {
                continue;
            }
            self.new_segment();
            self.values.extend_from_slice(&other.values[start..end]);
        }
    }

    pub fn segments(&self) -> impl Iterator<Item = &[T]> {
        let n = self.values.len();
        let starts = self.segment_starts.clone();
        (0..starts.len()).filter_map(move |i| {
            let s = starts[i];
            let e = starts.get(i + 1).copied().unwrap_or(n);
            (s < e).then(|| &self.values[s..e])
        })
    }

    /// Largest drop between consecutive values within a segment.
    pub fn max_decrease(&self) -> T {
        self.segments()
            .flat_map(|seg| seg.windows(2).map(|w| w[0] - w[1]))
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn is_nondecreasing(&self, tol: T) -> bool {
        self.max_decrease() <= tol
    }

    pub fn last(&self) -> Option<T> {
        self.values.last().copied()
    }
}

/// Rank and solver statistics collected while optimizing.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics<T: Scalar> {
    /// Largest `λ₂/λ₁` over every beamforming block solved.
    pub max_w_rank_ratio: T,
    /// Largest `λ₂/λ₁` over every surface block at SROCR exit.
    pub max_d_rank_ratio: T,
    pub active_solves: usize,
    pub passive_solves: usize,
    pub conic_iterations: usize,
    /// Iterations of the outer loop (BCD or penalty).
    pub iterations: usize,
    /// Recovered iterates rejected because they did not improve the objective.
    pub rejected_steps: usize,
}

impl<T: Scalar> Default for Diagnostics<T> {
    fn default() -> Self {
        Self {
            max_w_rank_ratio: T::zero(),
            max_d_rank_ratio: T::zero(),
            active_solves: 0,
            passive_solves: 0,
            conic_iterations: 0,
            iterations: 0,
            rejected_steps: 0,
        }
    }
}

impl<T: Scalar> Diagnostics<T> {
    pub fn merge(&mut self, other: &Diagnostics<T>) {
        self.max_w_rank_ratio = self.max_w_rank_ratio.max(other.max_w_rank_ratio);
        self.max_d_rank_ratio = self.max_d_rank_ratio.max(other.max_d_rank_ratio);
        self.active_solves += other.active_solves;
        self.passive_solves += other.passive_solves;
        self.conic_iterations += other.conic_iterations;
        self.iterations += other.iterations;
        self.rejected_steps += other.rejected_steps;
    }
}

/// Time split of the TS protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct TsAllocation<T: Scalar> {
    pub alpha_r: T,
    pub alpha_t: T,
    /// Weighted objective of the reflection-only and transmission-only periods.
    pub side_objectives: [T; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSolution<T: Scalar> {
    /// Precoder per user (unnormalized, watts).
    pub w: Vec<DVector<Cx<T>>>,
    pub star: StarConfig<T>,
    pub order: DecodingOrder,
    /// Rate per user in bits/s/Hz.
    pub rates: Vec<T>,
    pub qwsr: T,
    pub trace: Trace<T>,
    pub ts: Option<TsAllocation<T>>,
    /// OMA resource fractions, for OMA baselines.
    pub oma_fractions: Option<Vec<T>>,
    pub diagnostics: Diagnostics<T>,
}

impl<T: Scalar> BeamformingSolution<T> {
    pub fn total_power(&self) -> T {
        self.w.iter().map(|w| w.norm_squared()).fold(T::zero(), |a, b| a + b)
    }
}
