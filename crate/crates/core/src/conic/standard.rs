//! Lowering of [`ConicProblem`] into the primal standard form
//! `min ⟨C, X⟩ s.t. ⟨A_i, X⟩ = b_i, X ∈ R₊ⁿ × Π Hⁿᵇ₊`.

use std::collections::BTreeMap;

use nalgebra::DVector;

use super::problem::{ConicProblem, HermCoeff, LinExpr, ObjectiveSense, Sense};
use crate::scalar::{Cx, Scalar};

#[derive(Debug, Clone)]
pub(crate) struct Row<T: Scalar> {
    pub lp: Vec<(usize, T)>,
    /// At most one coefficient per block.
    pub blocks: Vec<(usize, HermCoeff<T>)>,
    pub b: T,
}

/// `x_user = base + Σ coef · x_lp`.
#[derive(Debug, Clone)]
pub(crate) struct VarMap<T: Scalar> {
    pub base: T,
    pub terms: Vec<(usize, T)>,
}

#[derive(Debug, Clone)]
pub(crate) struct StandardForm<T: Scalar> {
    pub n_lp: usize,
    pub block_dims: Vec<usize>,
    pub c_lp: DVector<T>,
    pub c_blocks: Vec<HermCoeff<T>>,
    pub rows: Vec<Row<T>>,
    /// Constant added to `⟨C, X⟩` to get the (sign-adjusted) objective.
    pub obj_offset: T,
    /// `+1` for minimization, `-1` for maximization.
    pub obj_sign: T,
    pub var_maps: Vec<VarMap<T>>,
    /// Standard-form row of each user constraint.
    pub constraint_rows: Vec<usize>,
    pub n_user_blocks: usize,
}

struct Lowered<T: Scalar> {
    lp: BTreeMap<usize, T>,
    blocks: BTreeMap<usize, HermCoeff<T>>,
    constant: T,
}

impl<T: Scalar> Lowered<T> {
    fn new() -> Self {
        Self {
            lp: BTreeMap::new(),
            blocks: BTreeMap::new(),
            constant: T::zero(),
        }
    }

    fn add_lp(&mut self, j: usize, c: T) {
        *self.lp.entry(j).or_insert(T::zero()) += c;
    }

    fn add_block(&mut self, b: usize, k: T, coef: &HermCoeff<T>) {
        self.blocks.entry(b).or_default().add_scaled(k, coef);
    }

    fn into_row(self, b: T) -> Row<T> {
        Row {
            lp: self.lp.into_iter().filter(|(_, c)| *c != T::zero()).collect(),
            blocks: self.blocks.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
            b,
        }
    }
}

impl<T: Scalar> StandardForm<T> {
    fn new_lp(&mut self) -> usize {
        self.n_lp += 1;
        self.n_lp - 1
    }

    fn lower(&self, e: &LinExpr<T>, k: T, out: &mut Lowered<T>) {
        out.constant += k * e.constant;
        for &(v, c) in &e.scalars {
            let map = &self.var_maps[v.0];
            out.constant += k * c * map.base;
            for &(j, t) in &map.terms {
                out.add_lp(j, k * c * t);
            }
        }
        for (b, coef) in &e.blocks {
            out.add_block(b.0, k, coef);
        }
    }

    pub fn build(p: &ConicProblem<T>) -> Self {
        let mut sf = StandardForm {
            n_lp: 0,
            block_dims: p.block_dims.clone(),
            c_lp: DVector::zeros(0),
            c_blocks: Vec::new(),
            rows: Vec::new(),
            obj_offset: T::zero(),
            obj_sign: match p.sense {
                ObjectiveSense::Minimize => T::one(),
                ObjectiveSense::Maximize => -T::one(),
            },
            var_maps: Vec::new(),
            constraint_rows: Vec::new(),
            n_user_blocks: p.block_dims.len(),
        };

        let mut bound_rows = Vec::new();
        for v in &p.vars {
            let map = match (v.lower, v.upper) {
                (Some(l), Some(u)) if l == u => VarMap {
                    base: l,
                    terms: vec![],
                },
                (Some(l), Some(u)) => {
                    let x = sf.new_lp();
                    let s = sf.new_lp();
                    bound_rows.push(Row {
                        lp: vec![(x, T::one()), (s, T::one())],
                        blocks: vec![],
                        b: u - l,
                    });
                    VarMap {
                        base: l,
                        terms: vec![(x, T::one())],
                    }
                }
                (Some(l), None) => VarMap {
                    base: l,
                    terms: vec![(sf.new_lp(), T::one())],
                },
                (None, Some(u)) => VarMap {
                    base: u,
                    terms: vec![(sf.new_lp(), -T::one())],
                },
                (None, None) => {
                    let a = sf.new_lp();
                    let b = sf.new_lp();
                    VarMap {
                        base: T::zero(),
                        terms: vec![(a, T::one()), (b, -T::one())],
                    }
                }
            };
            sf.var_maps.push(map);
        }
        sf.rows.extend(bound_rows);

        for c in &p.constraints {
            let mut low = Lowered::new();
            sf.lower(&c.expr, T::one(), &mut low);
            match c.sense {
                Sense::Eq => {}
                Sense::Ge => {
                    let s = sf.new_lp();
                    low.add_lp(s, -T::one());
                }
                Sense::Le => {
                    let s = sf.new_lp();
                    low.add_lp(s, T::one());
                }
            }
            let rhs = c.rhs - low.constant;
            sf.constraint_rows.push(sf.rows.len());
            sf.rows.push(low.into_row(rhs));
        }

        for cone in &p.cones {
            let dim = cone.z.len() + 1;
            let blk = sf.block_dims.len();
            sf.block_dims.push(dim);
            let half = Cx::new(T::lit(0.5), T::zero());
            // Y(0,0) = u, Y(j,j) = v, Re Y(0,j) = z_j, remaining off-diagonals 0.
            let pin = |sf: &mut Self, coef: HermCoeff<T>, expr: Option<&LinExpr<T>>| {
                let mut low = Lowered::new();
                low.add_block(blk, T::one(), &coef);
                if let Some(e) = expr {
                    sf.lower(e, -T::one(), &mut low);
                }
                let rhs = -low.constant;
                sf.rows.push(low.into_row(rhs));
            };
            pin(&mut sf, HermCoeff::entry(0, 0, Cx::new(T::one(), T::zero())), Some(&cone.u));
            for j in 1..dim {
                pin(&mut sf, HermCoeff::entry(j, j, Cx::new(T::one(), T::zero())), Some(&cone.v));
                pin(&mut sf, HermCoeff::entry(0, j, half), Some(&cone.z[j - 1]));
                for l in j + 1..dim {
                    pin(&mut sf, HermCoeff::entry(j, l, half), None);
                    pin(&mut sf, HermCoeff::entry(j, l, Cx::new(T::zero(), T::lit(0.5))), None);
                }
            }
        }

        let mut obj = Lowered::new();
        sf.lower(&p.objective, sf.obj_sign, &mut obj);
        sf.obj_offset = obj.constant;
        sf.c_lp = DVector::zeros(sf.n_lp);
        for (j, c) in obj.lp {
            sf.c_lp[j] += c;
        }
        sf.c_blocks = vec![HermCoeff::zero(); sf.block_dims.len()];
        for (b, c) in obj.blocks {
            sf.c_blocks[b] = c;
        }
        sf
    }
}
