//! Embedded interior-point solver for linear objectives over scalar
//! variables and complex Hermitian PSD blocks.
//!
//! Problems are stated with [`ConicProblem`]: bounded scalar variables,
//! PSD blocks, trace-linear constraints of any sense and rotated
//! second-order cones. [`solve`] lowers the problem to a primal standard
//! form (cones become small arrow-shaped PSD blocks) and runs an
//! infeasible-start HKM path-following method.
//!
//! Block coefficients are kept structured (dense, rank-one, sparse and
//! identity parts) so the Newton system costs little more than the
//! factorizations of the blocks themselves.

mod io;
mod ipm;
mod problem;
mod standard;

pub use io::{dump_problem, parse_problem, read_problem, write_problem};
pub use ipm::{Residuals, SolveStatus, SolverOptions};
pub use problem::{
    hyperbolic_constraint, BlockId, ConicProblem, Constraint, HermCoeff, LinExpr,
    ObjectiveSense, RotatedCone, ScalarVar, Sense, VarId,
};

use nalgebra::DMatrix;

use crate::error::Result;
use crate::scalar::{Cx, Scalar};
use standard::StandardForm;

#[derive(Debug, Clone)]
pub struct ConicSolution<T: Scalar> {
    pub status: SolveStatus,
    pub scalars: Vec<T>,
    pub blocks: Vec<DMatrix<Cx<T>>>,
    /// Multiplier of each constraint, for the minimization form
    /// `Z = C − Σ yᵢ Aᵢ` (objective negated when maximizing).
    pub duals: Vec<T>,
    /// Objective at the returned point, in the problem's own sense.
    pub primal_objective: T,
    /// Dual bound in the problem's own sense: below the primal value when
    /// minimizing, above it when maximizing.
    pub dual_objective: T,
    pub residuals: Residuals<T>,
    pub iterations: usize,
}

impl<T: Scalar> ConicSolution<T> {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, v: VarId) -> T {
        self.scalars[v.0]
    }

    pub fn block(&self, b: BlockId) -> &DMatrix<Cx<T>> {
        &self.blocks[b.0]
    }
}

/// Solves `problem`. Malformed input is an error; numerical outcomes
/// (infeasible, unbounded, stalled) are reported through the status.
pub fn solve<T: Scalar>(problem: &ConicProblem<T>, opts: &SolverOptions) -> Result<ConicSolution<T>> {
    problem.validate()?;
    let sf = StandardForm::build(problem);
    let var_maps = sf.var_maps.clone();
    let constraint_rows = sf.constraint_rows.clone();
    let n_user_blocks = sf.n_user_blocks;
    let sign = sf.obj_sign;
    let offset = sf.obj_offset;
    let raw = ipm::solve(sf, opts);

    let scalars = var_maps
        .iter()
        .map(|m| m.terms.iter().fold(m.base, |a, &(j, c)| a + c * raw.x[j]))
        .collect();
    let duals = constraint_rows.iter().map(|&r| raw.y[r]).collect();
    let mut blocks = raw.xb;
    blocks.truncate(n_user_blocks);
    Ok(ConicSolution {
        status: raw.status,
        scalars,
        blocks,
        duals,
        primal_objective: sign * (raw.pobj + offset),
        dual_objective: sign * (raw.dobj + offset),
        residuals: raw.residuals,
        iterations: raw.iterations,
    })
}

#[cfg(test)]
mod tests;
