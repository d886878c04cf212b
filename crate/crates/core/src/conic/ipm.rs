//! Infeasible primal-dual path-following method with the HKM search
//! direction and Mehrotra predictor-corrector steps.

use nalgebra::{DMatrix, DVector};

use super::problem::HermCoeff;
use super::standard::StandardForm;
use crate::scalar::{Cx, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// No primal point satisfies the constraints.
    Infeasible,
    /// The objective is unbounded (dual infeasible).
    Unbounded,
    /// Iteration cap, stalled steps, or a lost factorization.
    NumericalFailure,
}

/// Relative residuals of the final iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals<T> {
    pub primal: T,
    pub dual: T,
    pub gap: T,
}

#[derive(Debug, Clone)]
pub(crate) struct RawSolution<T: Scalar> {
    pub status: SolveStatus,
    pub x: DVector<T>,
    pub xb: Vec<DMatrix<Cx<T>>>,
    pub y: DVector<T>,
    pub pobj: T,
    pub dobj: T,
    pub residuals: Residuals<T>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target for the relative primal, dual and gap residuals.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 200,
        }
    }
}

type CMat<T> = DMatrix<Cx<T>>;

/// Iterations without halving the worst residual before the run is
/// declared stalled.
const STALL_WINDOW: usize = 20;

fn cx<T: Scalar>(x: T) -> Cx<T> {
    Cx::new(x, T::zero())
}

fn herm<T: Scalar>(m: &CMat<T>) -> CMat<T> {
    (m + m.adjoint()) * cx(T::lit(0.5))
}

fn inner<T: Scalar>(a: &CMat<T>, b: &CMat<T>) -> T {
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |acc, (x, y)| acc + (x.conj() * y).re)
}

/// Whether the Cholesky factorization of `m` succeeds. The complex square
/// root never fails, so each pivot is checked for a positive real part.
fn is_pd<T: Scalar>(m: CMat<T>) -> bool {
    match m.cholesky() {
        Some(c) => c.l_dirty().diagonal().iter().all(|d| d.re > T::zero() && d.im.abs() < d.re),
        None => false,
    }
}

/// Largest `α ≤ bound` keeping `x + α dx` in the PSD cone, given
/// `l_inv = L⁻¹` for the Cholesky factor of `x`.
/// Returns `bound` as soon as `x + bound·dx` factors, which skips the
/// eigenvalue computation for steps the caller would clip anyway.
fn max_step_psd<T: Scalar>(x: &CMat<T>, l_inv: &CMat<T>, dx: &CMat<T>, bound: T) -> T {
    if bound < T::max_value().unwrap() && is_pd(herm(&(x + dx * cx(bound)))) {
        return bound;
    }
    let m = herm(&T::cmul(&T::cmul(l_inv, dx), &l_inv.adjoint()));
    let lmin = m
        .symmetric_eigenvalues()
        .iter()
        .fold(T::max_value().unwrap(), |a, &b| a.min(b));
    if lmin >= T::zero() {
        bound
    } else {
        (-T::one() / lmin).min(bound)
    }
}

/// `L⁻¹` for the Cholesky factor `L` of a positive definite `x`.
fn chol_inv<T: Scalar>(x: &CMat<T>) -> Option<CMat<T>> {
    let l = x.clone().cholesky()?.l();
    let n = x.nrows();
    l.solve_lower_triangular(&CMat::<T>::identity(n, n))
}

fn max_step_lp<T: Scalar>(x: &DVector<T>, dx: &DVector<T>) -> T {
    let mut a = T::max_value().unwrap();
    for i in 0..x.len() {
        if dx[i] < T::zero() {
            a = a.min(-x[i] / dx[i]);
        }
    }
    a
}

/// Per-iteration data for one block: products against every rank-one
/// term of every row touching it.
struct BlockCache<T: Scalar> {
    zi: CMat<T>,
    /// Inverse Cholesky factors of `X` and `Z`.
    lx_inv: CMat<T>,
    lz_inv: CMat<T>,
    /// Per touching row: `Z⁻¹ (D + αI) X` when the row has a dense or identity part.
    g: Vec<Option<CMat<T>>>,
    /// Per touching row, per rank-one term: `(X c, Z⁻¹ c)`.
    vecs: Vec<Vec<(DVector<Cx<T>>, DVector<Cx<T>>)>>,
}

/// Elementary terms `v e_p e_qᴴ` of the sparse part.
fn elementary<T: Scalar>(a: &HermCoeff<T>) -> Vec<(usize, usize, Cx<T>)> {
    let mut out = Vec::with_capacity(2 * a.entries.len());
    for &(p, q, v) in &a.entries {
        out.push((p, q, v));
        if p != q {
            out.push((q, p, v.conj()));
        }
    }
    out
}

struct Scaled<T: Scalar> {
    sf: StandardForm<T>,
    /// `A_lp` as a dense `m × n_lp` matrix.
    a_lp: DMatrix<T>,
    /// Per block: `(row, index into row.blocks)`.
    by_block: Vec<Vec<(usize, usize)>>,
    elem: Vec<Vec<Vec<(usize, usize, Cx<T>)>>>,
    c_dense: Vec<CMat<T>>,
    row_scale: DVector<T>,
    obj_scale: T,
}

fn prepare<T: Scalar>(mut sf: StandardForm<T>) -> Scaled<T> {
    let m = sf.rows.len();
    let mut row_scale = DVector::from_element(m, T::one());
    for (i, row) in sf.rows.iter_mut().enumerate() {
        let mut n2 = row.lp.iter().fold(T::zero(), |a, (_, c)| a + *c * *c);
        for (b, coef) in &row.blocks {
            n2 += coef.frobenius_norm(sf.block_dims[*b]).powi(2);
        }
        let norm = n2.sqrt();
        if norm > T::zero() {
            let s = T::one() / norm;
            row_scale[i] = s;
            for (_, c) in row.lp.iter_mut() {
                *c *= s;
            }
            for (_, coef) in row.blocks.iter_mut() {
                *coef = coef.scaled(s);
            }
            row.b *= s;
        }
    }
    let c_dense: Vec<CMat<T>> = sf
        .c_blocks
        .iter()
        .zip(&sf.block_dims)
        .map(|(c, &n)| c.to_dense(n))
        .collect();
    let mut cn2 = sf.c_lp.norm_squared();
    for c in &c_dense {
        cn2 += c.norm_squared();
    }
    let obj_scale = cn2.sqrt().max(T::one());
    let inv = T::one() / obj_scale;
    sf.c_lp *= inv;
    let c_dense = c_dense.into_iter().map(|c| c * cx(inv)).collect();

    let mut a_lp = DMatrix::zeros(m, sf.n_lp);
    let mut by_block = vec![Vec::new(); sf.block_dims.len()];
    for (i, row) in sf.rows.iter().enumerate() {
        for &(j, c) in &row.lp {
            a_lp[(i, j)] += c;
        }
        for (k, (b, _)) in row.blocks.iter().enumerate() {
            by_block[*b].push((i, k));
        }
    }
    let elem = by_block
        .iter()
        .map(|list| {
            list.iter()
                .map(|&(i, k)| elementary(&sf.rows[i].blocks[k].1))
                .collect()
        })
        .collect();
    Scaled {
        sf,
        a_lp,
        by_block,
        elem,
        c_dense,
        row_scale,
        obj_scale,
    }
}

#[derive(Clone)]
struct Iterate<T: Scalar> {
    x: DVector<T>,
    xb: Vec<CMat<T>>,
    y: DVector<T>,
    z: DVector<T>,
    zb: Vec<CMat<T>>,
}

impl<T: Scalar> Scaled<T> {
    fn m(&self) -> usize {
        self.sf.rows.len()
    }

    /// `A(X)` with the block part given by arbitrary matrices `K` (real part of traces).
    fn apply_a(&self, x: &DVector<T>, kb: &[CMat<T>]) -> DVector<T> {
        let mut out = &self.a_lp * x;
        for (b, list) in self.by_block.iter().enumerate() {
            for &(i, k) in list {
                out[i] += self.sf.rows[i].blocks[k].1.inner(&kb[b]);
            }
        }
        out
    }

    /// `Aᵀ y` as (lp part, dense block parts).
    fn apply_at(&self, y: &DVector<T>) -> (DVector<T>, Vec<CMat<T>>) {
        let lp = self.a_lp.tr_mul(y);
        let blocks = self
            .by_block
            .iter()
            .enumerate()
            .map(|(b, list)| {
                let n = self.sf.block_dims[b];
                let mut acc = DMatrix::zeros(n, n);
                for &(i, k) in list {
                    if y[i] != T::zero() {
                        self.sf.rows[i].blocks[k].1.add_to(y[i], &mut acc);
                    }
                }
                acc
            })
            .collect();
        (lp, blocks)
    }

    fn b(&self) -> DVector<T> {
        DVector::from_iterator(self.m(), self.sf.rows.iter().map(|r| r.b))
    }

    fn initial_point(&self) -> Iterate<T> {
        let b = self.b();
        let bmax = b.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        let ten = T::lit(10.0);
        let xb = self
            .sf
            .block_dims
            .iter()
            .map(|&n| {
                let nf = T::lit(n as f64);
                let xi = ten.max(nf.sqrt()).max(nf * (T::one() + bmax) / T::lit(2.0));
                DMatrix::from_diagonal_element(n, n, cx(xi))
            })
            .collect();
        let zb = self
            .sf
            .block_dims
            .iter()
            .zip(&self.c_dense)
            .map(|(&n, c)| {
                let nf = T::lit(n as f64);
                let eta = ten.max(nf.sqrt()).max(c.norm() + T::one());
                DMatrix::from_diagonal_element(n, n, cx(eta))
            })
            .collect();
        let xi_lp = ten.max((T::one() + bmax) / T::lit(2.0));
        Iterate {
            x: DVector::from_element(self.sf.n_lp, xi_lp),
            xb,
            y: DVector::zeros(self.m()),
            z: DVector::from_element(self.sf.n_lp, ten),
            zb,
        }
    }

    fn caches(&self, it: &Iterate<T>) -> Option<Vec<BlockCache<T>>> {
        let mut out = Vec::with_capacity(self.by_block.len());
        for (b, list) in self.by_block.iter().enumerate() {
            let x = &it.xb[b];
            let lx_inv = chol_inv(x)?;
            let lz_inv = chol_inv(&it.zb[b])?;
            let zi = T::cmul(&lz_inv.adjoint(), &lz_inv);
            let mut zix: Option<CMat<T>> = None;
            let mut g = Vec::with_capacity(list.len());
            let mut vecs = Vec::with_capacity(list.len());
            for &(i, k) in list {
                let a = &self.sf.rows[i].blocks[k].1;
                let gi = if a.dense.is_some() || a.identity != T::zero() {
                    let mut acc = match &a.dense {
                        Some(d) => T::cmul(&zi, &T::cmul(d, x)),
                        None => DMatrix::zeros(x.nrows(), x.ncols()),
                    };
                    if a.identity != T::zero() {
                        let p = zix.get_or_insert_with(|| T::cmul(&zi, x));
                        acc += &*p * cx(a.identity);
                    }
                    Some(acc)
                } else {
                    None
                };
                g.push(gi);
                vecs.push(a.rank_one.iter().map(|(_, c)| (x * c, &zi * c)).collect());
            }
            out.push(BlockCache { zi, lx_inv, lz_inv, g, vecs });
        }
        Some(out)
    }

    fn schur(&self, it: &Iterate<T>, caches: &[BlockCache<T>]) -> DMatrix<T> {
        let m = self.m();
        let mut d = it.x.clone();
        for j in 0..d.len() {
            d[j] /= it.z[j];
        }
        let mut scaled = self.a_lp.clone();
        for j in 0..d.len() {
            let mut col = scaled.column_mut(j);
            col *= d[j];
        }
        let mut mat = &scaled * self.a_lp.transpose();
        debug_assert_eq!(mat.nrows(), m);

        for (b, list) in self.by_block.iter().enumerate() {
            let cache = &caches[b];
            let x = &it.xb[b];
            let zi = &cache.zi;
            for (ia, &(i, ki)) in list.iter().enumerate() {
                let ai = &self.sf.rows[i].blocks[ki].1;
                for (ja, &(j, kj)) in list.iter().enumerate().skip(ia) {
                    let aj = &self.sf.rows[j].blocks[kj].1;
                    let mut v = T::zero();
                    if let Some(gi) = &cache.g[ia] {
                        v += aj.trace_with(gi).re;
                    }
                    if let Some(gj) = &cache.g[ja] {
                        v += structured_trace(ai, gj);
                    }
                    v += structured_pair(
                        ai,
                        &cache.vecs[ia],
                        &self.elem[b][ia],
                        aj,
                        &cache.vecs[ja],
                        &self.elem[b][ja],
                        x,
                        zi,
                    );
                    mat[(i, j)] += v;
                    if i != j {
                        mat[(j, i)] += v;
                    }
                }
            }
        }
        mat
    }
}

/// `Re Tr(S G)` with `S` the rank-one and sparse part of `a`.
fn structured_trace<T: Scalar>(a: &HermCoeff<T>, g: &CMat<T>) -> T {
    let s = HermCoeff {
        dense: None,
        rank_one: a.rank_one.clone(),
        entries: a.entries.clone(),
        identity: T::zero(),
    };
    s.trace_with(g).re
}

/// `Re Tr(S_i X S_j Z⁻¹)` over the rank-one and sparse parts.
#[allow(clippy::too_many_arguments)]
fn structured_pair<T: Scalar>(
    ai: &HermCoeff<T>,
    vi: &[(DVector<Cx<T>>, DVector<Cx<T>>)],
    ei: &[(usize, usize, Cx<T>)],
    aj: &HermCoeff<T>,
    vj: &[(DVector<Cx<T>>, DVector<Cx<T>>)],
    ej: &[(usize, usize, Cx<T>)],
    x: &CMat<T>,
    zi: &CMat<T>,
) -> T {
    let mut acc = Cx::new(T::zero(), T::zero());
    for ((s, c), (xc, zc)) in ai.rank_one.iter().zip(vi) {
        for ((t, d), (xd, _)) in aj.rank_one.iter().zip(vj) {
            acc += c.dotc(xd) * d.dotc(zc) * cx(*s * *t);
        }
        for &(p, q, v) in ej {
            acc += v * xc[p].conj() * zc[q] * cx(*s);
        }
    }
    for &(p, q, v) in ei {
        for ((t, _), (xd, zd)) in aj.rank_one.iter().zip(vj) {
            acc += v * xd[q] * zd[p].conj() * cx(*t);
        }
        for &(r, s, w) in ej {
            acc += v * w * x[(q, r)] * zi[(s, p)];
        }
    }
    acc.re
}

struct Direction<T: Scalar> {
    dx: DVector<T>,
    dxb: Vec<CMat<T>>,
    dy: DVector<T>,
    dz: DVector<T>,
    dzb: Vec<CMat<T>>,
}

pub(crate) fn solve<T: Scalar>(sf: StandardForm<T>, opts: &SolverOptions) -> RawSolution<T> {
    let s = prepare(sf);
    let tol = T::lit(opts.tol);
    let b = s.b();
    let b_norm = b.norm();
    let c_norm = {
        let mut n2 = s.sf.c_lp.norm_squared();
        for c in &s.c_dense {
            n2 += c.norm_squared();
        }
        n2.sqrt()
    };
    let nu = T::lit((s.sf.n_lp + s.sf.block_dims.iter().sum::<usize>()) as f64);
    let mut it = s.initial_point();
    let mut status = SolveStatus::NumericalFailure;
    let mut residuals = Residuals {
        primal: T::max_value().unwrap(),
        dual: T::max_value().unwrap(),
        gap: T::max_value().unwrap(),
    };
    let mut iterations = 0;
    let mut stalls = 0;
    // Most accurate iterate so far, returned when the run ends without converging.
    let mut best: Option<(T, Iterate<T>, Residuals<T>)> = None;
    // Residual level that last counted as progress, and when.
    let mut progress = (T::max_value().unwrap(), 0usize);

    for iter in 0..=opts.max_iter {
        iterations = iter;
        let ax = s.apply_a(&it.x, &it.xb);
        let rp = &b - &ax;
        let (aty_lp, aty_b) = s.apply_at(&it.y);
        let rd_lp = &s.sf.c_lp - &aty_lp - &it.z;
        let rd_b: Vec<CMat<T>> = (0..it.xb.len())
            .map(|k| herm(&(&s.c_dense[k] - &aty_b[k] - &it.zb[k])))
            .collect();
        let pobj = s.sf.c_lp.dot(&it.x)
            + (0..it.xb.len()).fold(T::zero(), |a, k| a + inner(&s.c_dense[k], &it.xb[k]));
        let dobj = b.dot(&it.y);
        let xz = it.x.dot(&it.z)
            + (0..it.xb.len()).fold(T::zero(), |a, k| a + inner(&it.xb[k], &it.zb[k]));
        let mu = xz / nu;
        let rd_norm = (rd_lp.norm_squared()
            + rd_b.iter().fold(T::zero(), |a, m| a + m.norm_squared()))
        .sqrt();
        let denom = T::one() + pobj.abs() + dobj.abs();
        residuals = Residuals {
            primal: rp.norm() / (T::one() + b_norm),
            dual: rd_norm / (T::one() + c_norm),
            gap: (pobj - dobj).abs().max(xz.abs()) / denom,
        };
        log::trace!(
            "ipm {iter}: pobj {:e} dobj {:e} pinf {:e} dinf {:e} gap {:e}",
            pobj.as_f64(),
            dobj.as_f64(),
            residuals.primal.as_f64(),
            residuals.dual.as_f64(),
            residuals.gap.as_f64()
        );
        if residuals.primal <= tol && residuals.dual <= tol && residuals.gap <= tol {
            status = SolveStatus::Optimal;
            break;
        }
        let worst = residuals.primal.max(residuals.dual).max(residuals.gap);
        if best.as_ref().is_none_or(|(w, _, _)| worst < *w) {
            best = Some((worst, it.clone(), residuals));
        }
        if worst < T::lit(0.5) * progress.0 {
            progress = (worst, iter);
        } else if iter - progress.1 >= STALL_WINDOW {
            break;
        }
        // Divergence certificates.
        let big = T::lit(1e8);
        if dobj > big {
            let cert = (aty_lp.clone() + &it.z).norm_squared()
                + (0..it.xb.len()).fold(T::zero(), |a, k| {
                    a + (&aty_b[k] + &it.zb[k]).norm_squared()
                });
            if cert.sqrt() / dobj < T::lit(1e-8) {
                status = SolveStatus::Infeasible;
                break;
            }
        }
        if -pobj > big && (ax.norm() / (-pobj)) < T::lit(1e-8) {
            status = SolveStatus::Unbounded;
            break;
        }
        if iter == opts.max_iter {
            break;
        }

        let Some(caches) = s.caches(&it) else {
            break;
        };
        let mut mat = s.schur(&it, &caches);
        let chol = match mat.clone().cholesky() {
            Some(c) => c,
            None => {
                let dmax = mat.diagonal().iter().fold(T::zero(), |a, &v| a.max(v.abs()));
                for i in 0..mat.nrows() {
                    mat[(i, i)] += T::lit(1e-12) * (dmax + T::one());
                }
                match mat.cholesky() {
                    Some(c) => c,
                    None => break,
                }
            }
        };

        let direction = |sigma_mu: T, corr: Option<&Direction<T>>| -> Direction<T> {
            // second-order term dX·dZ of the predictor, shared by both uses
            let cross: Option<Vec<CMat<T>>> =
                corr.map(|c| (0..it.xb.len()).map(|k| T::cmul(&c.dxb[k], &c.dzb[k])).collect());
            let mut kb = Vec::with_capacity(it.xb.len());
            for k in 0..it.xb.len() {
                let zi = &caches[k].zi;
                let mut inner_m = T::cmul(&it.xb[k], &rd_b[k]);
                if let Some(c) = &cross {
                    inner_m += &c[k];
                }
                kb.push(zi * cx(sigma_mu) - &it.xb[k] - T::cmul(&inner_m, zi));
            }
            let mut k_lp = DVector::zeros(it.x.len());
            for j in 0..it.x.len() {
                let mut num = it.x[j] * rd_lp[j];
                if let Some(c) = corr {
                    num += c.dx[j] * c.dz[j];
                }
                k_lp[j] = sigma_mu / it.z[j] - it.x[j] - num / it.z[j];
            }
            let rhs = &rp - s.apply_a(&k_lp, &kb);
            let dy = chol.solve(&rhs);
            let (at_lp, at_b) = s.apply_at(&dy);
            let dz = &rd_lp - at_lp;
            let dzb: Vec<CMat<T>> = (0..it.xb.len()).map(|k| &rd_b[k] - &at_b[k]).collect();
            let mut dxb = Vec::with_capacity(it.xb.len());
            for k in 0..it.xb.len() {
                let zi = &caches[k].zi;
                let mut inner_m = T::cmul(&it.xb[k], &dzb[k]);
                if let Some(c) = &cross {
                    inner_m += &c[k];
                }
                dxb.push(herm(&(zi * cx(sigma_mu) - &it.xb[k] - T::cmul(&inner_m, zi))));
            }
            let mut dx = DVector::zeros(it.x.len());
            for j in 0..it.x.len() {
                let mut num = it.x[j] * dz[j];
                if let Some(c) = corr {
                    num += c.dx[j] * c.dz[j];
                }
                dx[j] = sigma_mu / it.z[j] - it.x[j] - num / it.z[j];
            }
            Direction {
                dx,
                dxb,
                dy,
                dz,
                dzb,
            }
        };

        // Step lengths, clipped at `cap`.
        let steps = |d: &Direction<T>, cap: T| -> Option<(T, T)> {
            let mut ap = max_step_lp(&it.x, &d.dx).min(cap);
            let mut ad = max_step_lp(&it.z, &d.dz).min(cap);
            for k in 0..it.xb.len() {
                ap = max_step_psd(&it.xb[k], &caches[k].lx_inv, &d.dxb[k], ap);
                ad = max_step_psd(&it.zb[k], &caches[k].lz_inv, &d.dzb[k], ad);
            }
            Some((ap, ad))
        };

        let pred = direction(T::zero(), None);
        let Some((ap1, ad1)) = steps(&pred, T::one()) else {
            break;
        };
        let mut xz_aff = T::zero();
        for j in 0..it.x.len() {
            xz_aff += (it.x[j] + ap1 * pred.dx[j]) * (it.z[j] + ad1 * pred.dz[j]);
        }
        for k in 0..it.xb.len() {
            let xa = &it.xb[k] + &pred.dxb[k] * cx(ap1);
            let za = &it.zb[k] + &pred.dzb[k] * cx(ad1);
            xz_aff += inner(&xa, &za);
        }
        let ratio = (xz_aff / xz).max(T::zero()).min(T::one());
        let expon = T::one().max(T::lit(3.0) * ap1.min(ad1).powi(2));
        let sigma = ratio.powf(expon).min(T::one());
        let corr = direction(sigma * mu, Some(&pred));
        let gamma = T::lit(0.9) + T::lit(0.09) * ap1.min(ad1);
        let Some((ap, ad)) = steps(&corr, T::one() / gamma) else {
            break;
        };
        let ap = (gamma * ap).min(T::one());
        let ad = (gamma * ad).min(T::one());
        if ap < T::lit(1e-10) && ad < T::lit(1e-10) {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
        it.x += &corr.dx * ap;
        it.z += &corr.dz * ad;
        it.y += &corr.dy * ad;
        for k in 0..it.xb.len() {
            it.xb[k] = herm(&(&it.xb[k] + &corr.dxb[k] * cx(ap)));
            it.zb[k] = herm(&(&it.zb[k] + &corr.dzb[k] * cx(ad)));
        }
    }

    if status == SolveStatus::NumericalFailure {
        if let Some((_, b_it, b_res)) = best {
            it = b_it;
            residuals = b_res;
        }
    }

    // Undo row and objective scaling.
    let os = s.obj_scale;
    let y = DVector::from_fn(it.y.len(), |i, _| it.y[i] * s.row_scale[i] * os);
    let pobj = (s.sf.c_lp.dot(&it.x)
        + (0..it.xb.len()).fold(T::zero(), |a, k| a + inner(&s.c_dense[k], &it.xb[k])))
        * os;
    let dobj = b.dot(&it.y) * os;
    RawSolution {
        status,
        x: it.x,
        xb: it.xb,
        y,
        pobj,
        dobj,
        residuals,
        iterations,
    }
}
