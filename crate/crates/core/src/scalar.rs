//! Scalar abstraction shared by every numeric module.
//!
//! All math is written against [`Scalar`], which is implemented for `f32` and
//! `f64`. The interior-point tolerances used by the optimizer assume double
//! precision; `f32` is supported for the closed-form evaluation paths.

use std::fmt::{Debug, Display};

use nalgebra::{Complex, DMatrix, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar type: `f32` or `f64`.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Display + Debug + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite literal")
    }

    /// Converts to `f64` (lossless for both supported types).
    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the concrete type.
    fn eps() -> Self;

    /// Dense complex product `a b`.
    fn cmul(a: &DMatrix<Complex<Self>>, b: &DMatrix<Complex<Self>>) -> DMatrix<Complex<Self>> {
        a * b
    }
}

impl Scalar for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }

    fn cmul(a: &DMatrix<Complex<f32>>, b: &DMatrix<Complex<f32>>) -> DMatrix<Complex<f32>> {
        let (m, k, n) = gemm_dims(a, b);
        let mut c = DMatrix::<Complex<f32>>::zeros(m, n);
        // SAFETY: `Complex<f32>` is `repr(C)` with the layout of `[f32; 2]`;
        // the strides describe the column-major storage of each matrix.
        unsafe {
            matrixmultiply::cgemm(
                matrixmultiply::CGemmOption::Standard,
                matrixmultiply::CGemmOption::Standard,
                m,
                k,
                n,
                [1.0, 0.0],
                a.as_ptr().cast(),
                1,
                m as isize,
                b.as_ptr().cast(),
                1,
                k as isize,
                [0.0, 0.0],
                c.as_mut_ptr().cast(),
                1,
                m as isize,
            );
        }
        c
    }
}

impl Scalar for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }

    fn cmul(a: &DMatrix<Complex<f64>>, b: &DMatrix<Complex<f64>>) -> DMatrix<Complex<f64>> {
        let (m, k, n) = gemm_dims(a, b);
        if m * k * n <= SMALL_GEMM {
            return a * b;
        }
        let mut c = DMatrix::<Complex<f64>>::zeros(m, n);
        // SAFETY: as for `f32`.
        unsafe {
            matrixmultiply::zgemm(
                matrixmultiply::CGemmOption::Standard,
                matrixmultiply::CGemmOption::Standard,
                m,
                k,
                n,
                [1.0, 0.0],
                a.as_ptr().cast(),
                1,
                m as isize,
                b.as_ptr().cast(),
                1,
                k as isize,
                [0.0, 0.0],
                c.as_mut_ptr().cast(),
                1,
                m as isize,
            );
        }
        c
    }
}

/// Products below this many multiply-adds skip the packed kernel, whose
/// setup dominates at tiny sizes.
const SMALL_GEMM: usize = 512;

fn gemm_dims<T>(a: &DMatrix<T>, b: &DMatrix<T>) -> (usize, usize, usize) {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions of a product");
    (a.nrows(), a.ncols(), b.ncols())
}

/// Complex number over a [`Scalar`].
pub type Cx<T> = Complex<T>;

/// Builds a complex number from its real part.
#[inline]
pub fn re<T: Scalar>(x: T) -> Cx<T> {
    Complex::new(x, T::zero())
}

/// `e^{j phase}`.
#[inline]
pub fn cis<T: Scalar>(phase: T) -> Cx<T> {
    Complex::new(phase.cos(), phase.sin())
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase<T: Scalar>(phase: T) -> T {
    let two_pi = T::two_pi();
    let mut p = phase % two_pi;
    if p < T::zero() {
        p += two_pi;
    }
    if p >= two_pi {
        p -= two_pi;
    }
    p
}
