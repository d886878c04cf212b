use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::{Cx, Scalar};

/// Index of a scalar variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VarId(pub usize);

/// Index of a Hermitian PSD block variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BlockId(pub usize);

/// Hermitian coefficient matrix kept in structured form:
/// `dense + Σ s·c cᴴ + sparse entries + α·I`.
///
/// The interior-point method exploits the structure when assembling its
/// Newton system, so rank-one and sparse terms should not be densified.
#[derive(Debug, Clone, PartialEq)]
pub struct HermCoeff<T: Scalar> {
    pub dense: Option<DMatrix<Cx<T>>>,
    pub rank_one: Vec<(T, DVector<Cx<T>>)>,
    /// Entries `(p, q, v)` with `p ≤ q`; the `(q, p)` entry is `conj(v)`.
    /// Diagonal values are real (imaginary parts ignored).
    pub entries: Vec<(usize, usize, Cx<T>)>,
    pub identity: T,
}

impl<T: Scalar> Default for HermCoeff<T> {
    fn default() -> Self {
        Self {
            dense: None,
            rank_one: Vec::new(),
            entries: Vec::new(),
            identity: T::zero(),
        }
    }
}

impl<T: Scalar> HermCoeff<T> {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Dense coefficient, symmetrized as `(A + Aᴴ)/2`.
    pub fn dense(a: DMatrix<Cx<T>>) -> Self {
        let herm = (&a + a.adjoint()) * Cx::new(T::lit(0.5), T::zero());
        let asym = (&a - &herm).norm().as_f64();
        if asym > 1e-8 * (1.0 + a.norm().as_f64()) {
            log::warn!("coefficient matrix asymmetric by {asym:.3e}; symmetrized");
        }
        Self {
            dense: Some(herm),
            ..Self::default()
        }
    }

    /// Real symmetric dense coefficient.
    pub fn real_dense(a: &DMatrix<T>) -> Self {
        Self::dense(a.map(|x| Cx::new(x, T::zero())))
    }

    /// `s · c cᴴ`.
    pub fn rank_one(s: T, c: DVector<Cx<T>>) -> Self {
        Self {
            rank_one: vec![(s, c)],
            ..Self::default()
        }
    }

    /// Hermitian pair of entries at `(p, q)` and `(q, p)`.
    pub fn entry(p: usize, q: usize, v: Cx<T>) -> Self {
        let mut out = Self::default();
        out.push_entry(p, q, v);
        out
    }

    pub fn identity(alpha: T) -> Self {
        Self {
            identity: alpha,
            ..Self::default()
        }
    }

    pub fn push_entry(&mut self, p: usize, q: usize, v: Cx<T>) {
        if p == q {
            self.entries.push((p, p, Cx::new(v.re, T::zero())));
        } else if p < q {
            self.entries.push((p, q, v));
        } else {
            self.entries.push((q, p, v.conj()));
        }
    }

    pub fn push_rank_one(&mut self, s: T, c: DVector<Cx<T>>) {
        self.rank_one.push((s, c));
    }

    /// In-place `self += k · other`.
    pub fn add_scaled(&mut self, k: T, other: &HermCoeff<T>) {
        let kc = Cx::new(k, T::zero());
        if let Some(d) = &other.dense {
            match &mut self.dense {
                Some(mine) => *mine += d * kc,
                None => self.dense = Some(d * kc),
            }
        }
        for (s, c) in &other.rank_one {
            self.rank_one.push((k * *s, c.clone()));
        }
        for &(p, q, v) in &other.entries {
            self.entries.push((p, q, v * kc));
        }
        self.identity += k * other.identity;
    }

    pub fn scaled(&self, k: T) -> Self {
        let mut out = Self::default();
        out.add_scaled(k, self);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.dense.is_none()
            && self.rank_one.is_empty()
            && self.entries.is_empty()
            && self.identity == T::zero()
    }

    /// Checks every term against the block dimension `n`.
    pub fn check_dim(&self, n: usize) -> Result<()> {
        if let Some(d) = &self.dense {
            if d.nrows() != n || d.ncols() != n {
                return Err(Error::Dimension {
                    context: "dense block coefficient",
                    expected: n,
                    found: d.nrows().max(d.ncols()),
                });
            }
        }
        for (_, c) in &self.rank_one {
            if c.len() != n {
                return Err(Error::Dimension {
                    context: "rank-one block coefficient",
                    expected: n,
                    found: c.len(),
                });
            }
        }
        for &(p, q, _) in &self.entries {
            if q >= n || p >= n {
                return Err(Error::Dimension {
                    context: "sparse block coefficient",
                    expected: n,
                    found: q.max(p) + 1,
                });
            }
        }
        Ok(())
    }

    pub fn to_dense(&self, n: usize) -> DMatrix<Cx<T>> {
        let mut out = self.dense.clone().unwrap_or_else(|| DMatrix::zeros(n, n));
        self.accumulate_into(T::one(), &mut out);
        out
    }

    /// `out += k · (everything except the dense part)`; the dense part is
    /// added as well when present.
    pub(crate) fn add_to(&self, k: T, out: &mut DMatrix<Cx<T>>) {
        if let Some(d) = &self.dense {
            *out += d * Cx::new(k, T::zero());
        }
        self.accumulate_into(k, out);
    }

    fn accumulate_into(&self, k: T, out: &mut DMatrix<Cx<T>>) {
        for (s, c) in &self.rank_one {
            let f = Cx::new(k * *s, T::zero());
            for q in 0..c.len() {
                let cq = c[q].conj() * f;
                for p in 0..c.len() {
                    out[(p, q)] += c[p] * cq;
                }
            }
        }
        let kc = Cx::new(k, T::zero());
        for &(p, q, v) in &self.entries {
            out[(p, q)] += v * kc;
            if p != q {
                out[(q, p)] += v.conj() * kc;
            }
        }
        if self.identity != T::zero() {
            for i in 0..out.nrows() {
                out[(i, i)] += Cx::new(k * self.identity, T::zero());
            }
        }
    }

    /// `Tr(A G)` for an arbitrary (not necessarily Hermitian) `G`.
    pub(crate) fn trace_with(&self, g: &DMatrix<Cx<T>>) -> Cx<T> {
        let mut acc = Cx::new(T::zero(), T::zero());
        if let Some(d) = &self.dense {
            for p in 0..d.nrows() {
                for q in 0..d.ncols() {
                    acc += d[(p, q)] * g[(q, p)];
                }
            }
        }
        for (s, c) in &self.rank_one {
            let gc = g * c;
            acc += c.dotc(&gc) * Cx::new(*s, T::zero());
        }
        for &(p, q, v) in &self.entries {
            if p == q {
                acc += v * g[(p, p)];
            } else {
                acc += v * g[(q, p)] + v.conj() * g[(p, q)];
            }
        }
        if self.identity != T::zero() {
            acc += g.trace() * Cx::new(self.identity, T::zero());
        }
        acc
    }

    /// `Re Tr(A X)`.
    pub fn inner(&self, x: &DMatrix<Cx<T>>) -> T {
        self.trace_with(x).re
    }

    pub fn frobenius_norm(&self, n: usize) -> T {
        self.to_dense(n).norm()
    }
}

/// Affine expression over scalar variables and block variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinExpr<T: Scalar> {
    pub scalars: Vec<(VarId, T)>,
    pub blocks: Vec<(BlockId, HermCoeff<T>)>,
    pub constant: T,
}

impl<T: Scalar> Default for LinExpr<T> {
    fn default() -> Self {
        Self {
            scalars: Vec::new(),
            blocks: Vec::new(),
            constant: T::zero(),
        }
    }
}

impl<T: Scalar> LinExpr<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant_expr(c: T) -> Self {
        Self {
            constant: c,
            ..Self::default()
        }
    }

    pub fn from_var(v: VarId) -> Self {
        Self::new().var(v, T::one())
    }

    pub fn var(mut self, v: VarId, coef: T) -> Self {
        self.scalars.push((v, coef));
        self
    }

    pub fn block(mut self, b: BlockId, coef: HermCoeff<T>) -> Self {
        self.blocks.push((b, coef));
        self
    }

    pub fn plus_constant(mut self, c: T) -> Self {
        self.constant += c;
        self
    }

    pub fn add_scaled(&mut self, k: T, other: &LinExpr<T>) {
        for &(v, c) in &other.scalars {
            self.scalars.push((v, k * c));
        }
        for (b, c) in &other.blocks {
            self.blocks.push((*b, c.scaled(k)));
        }
        self.constant += k * other.constant;
    }

    /// Evaluates the expression at given scalar and block values.
    pub fn evaluate(&self, scalars: &[T], blocks: &[DMatrix<Cx<T>>]) -> T {
        let mut acc = self.constant;
        for &(v, c) in &self.scalars {
            acc += c * scalars[v.0];
        }
        for (b, c) in &self.blocks {
            acc += c.inner(&blocks[b.0]);
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Le,
    Ge,
}

/// `expr (sense) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<T: Scalar> {
    pub expr: LinExpr<T>,
    pub sense: Sense,
    pub rhs: T,
}

/// Rotated second-order cone `u·v ≥ ‖z‖²`, `u, v ≥ 0`, over affine
/// expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedCone<T: Scalar> {
    pub u: LinExpr<T>,
    pub v: LinExpr<T>,
    pub z: Vec<LinExpr<T>>,
}

impl<T: Scalar> RotatedCone<T> {
    /// Whether the cone holds at given values, within `tol`.
    pub fn is_satisfied(&self, scalars: &[T], blocks: &[DMatrix<Cx<T>>], tol: T) -> bool {
        let u = self.u.evaluate(scalars, blocks);
        let v = self.v.evaluate(scalars, blocks);
        let z2 = self
            .z
            .iter()
            .map(|z| z.evaluate(scalars, blocks).powi(2))
            .fold(T::zero(), |a, b| a + b);
        u >= -tol && v >= -tol && u * v >= z2 - tol
    }
}

/// Encodes `s · trace_form ≥ 1` as the rotated cone `(s, trace_form, 1)`.
pub fn hyperbolic_constraint<T: Scalar>(s: LinExpr<T>, trace_form: LinExpr<T>) -> RotatedCone<T> {
    RotatedCone {
        u: s,
        v: trace_form,
        z: vec![LinExpr::constant_expr(T::one())],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarVar<T: Scalar> {
    pub lower: Option<T>,
    pub upper: Option<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
}

/// Linear objective over scalar variables and Hermitian PSD blocks, with
/// trace-linear constraints and rotated second-order cones.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem<T: Scalar> {
    pub vars: Vec<ScalarVar<T>>,
    pub block_dims: Vec<usize>,
    pub sense: ObjectiveSense,
    pub objective: LinExpr<T>,
    pub constraints: Vec<Constraint<T>>,
    pub cones: Vec<RotatedCone<T>>,
}

impl<T: Scalar> Default for ConicProblem<T> {
    fn default() -> Self {
        Self {
            vars: Vec::new(),
            block_dims: Vec::new(),
            sense: ObjectiveSense::Minimize,
            objective: LinExpr::new(),
            constraints: Vec::new(),
            cones: Vec::new(),
        }
    }
}

impl<T: Scalar> ConicProblem<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, lower: Option<T>, upper: Option<T>) -> VarId {
        self.vars.push(ScalarVar { lower, upper });
        VarId(self.vars.len() - 1)
    }

    pub fn add_nonneg_var(&mut self) -> VarId {
        self.add_var(Some(T::zero()), None)
    }

    pub fn add_free_var(&mut self) -> VarId {
        self.add_var(None, None)
    }

    pub fn add_block(&mut self, dim: usize) -> BlockId {
        self.block_dims.push(dim);
        BlockId(self.block_dims.len() - 1)
    }

    pub fn minimize(&mut self, expr: LinExpr<T>) {
        self.sense = ObjectiveSense::Minimize;
        self.objective = expr;
    }

    pub fn maximize(&mut self, expr: LinExpr<T>) {
        self.sense = ObjectiveSense::Maximize;
        self.objective = expr;
    }

    /// Adds `expr (sense) rhs` and returns its index (for dual lookup).
    pub fn constrain(&mut self, expr: LinExpr<T>, sense: Sense, rhs: T) -> usize {
        self.constraints.push(Constraint { expr, sense, rhs });
        self.constraints.len() - 1
    }

    pub fn add_cone(&mut self, cone: RotatedCone<T>) {
        self.cones.push(cone);
    }

    fn check_expr(&self, e: &LinExpr<T>) -> Result<()> {
        for &(v, c) in &e.scalars {
            if v.0 >= self.vars.len() {
                return Err(Error::invalid(format!("unknown variable {}", v.0)));
            }
            if !c.is_finite() {
                return Err(Error::invalid("non-finite scalar coefficient"));
            }
        }
        for (b, c) in &e.blocks {
            let n = *self
                .block_dims
                .get(b.0)
                .ok_or_else(|| Error::invalid(format!("unknown block {}", b.0)))?;
            c.check_dim(n)?;
        }
        if !e.constant.is_finite() {
            return Err(Error::invalid("non-finite constant"));
        }
        Ok(())
    }

    /// Verifies every index and dimension.
    pub fn validate(&self) -> Result<()> {
        if self.block_dims.iter().any(|&n| n == 0) {
            return Err(Error::invalid("PSD blocks must have dimension at least 1"));
        }
        for v in &self.vars {
            if let (Some(l), Some(u)) = (v.lower, v.upper) {
                if l > u {
                    return Err(Error::invalid(format!("variable bounds [{l}, {u}] are empty")));
                }
            }
        }
        self.check_expr(&self.objective)?;
        for c in &self.constraints {
            self.check_expr(&c.expr)?;
            if !c.rhs.is_finite() {
                return Err(Error::invalid("non-finite right-hand side"));
            }
        }
        for cone in &self.cones {
            if cone.z.is_empty() {
                return Err(Error::invalid("rotated cone needs at least one z component"));
            }
            self.check_expr(&cone.u)?;
            self.check_expr(&cone.v)?;
            for z in &cone.z {
                self.check_expr(z)?;
            }
        }
        Ok(())
    }
}
