//! Floating-point abstraction used throughout the crate.
//!
//! Every image, tensor, and metric is generic over a [`Scalar`] so the same
//! code runs in `f32` (fast training, compact checkpoints) or `f64`
//! (high-precision metric evaluation). The trait also carries a dense
//! matrix-multiply hook so the neural engine can dispatch to the tuned
//! `matrixmultiply` kernels for either width.

use num_traits::{Float, NumAssign};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar the crate's numerics are written against.
///
/// Implemented for `f32` and `f64`. The conversion helpers are total: they
/// truncate precision rather than fail, which is the desired behaviour when
/// moving constants such as metric coefficients into the working type.
pub trait Scalar:
    Float + NumAssign + Sum + Debug + Display + Default + Copy + Send + Sync + 'static
{
    /// Lossy conversion from `f64` (identity for `f64`).
    fn of(v: f64) -> Self;

    /// Conversion from a count or index.
    fn of_usize(v: usize) -> Self;

    /// Widening (or identity) conversion to `f64`.
    fn as_f64(self) -> f64;

    /// Narrowing (or identity) conversion to `f32`.
    fn as_f32(self) -> f32;

    /// Lossy conversion from `f32` (identity for `f32`).
    fn of_f32(v: f32) -> Self;

    /// General matrix multiply: `C ← α·op(A)·op(B) + β·C`.
    ///
    /// `A` is logically `m×k`, `B` is `k×n`, `C` is `m×n`; the row/column
    /// strides describe the in-memory layout of each operand, so transposed
    /// views cost nothing. Callers must guarantee the strides keep every
    /// access inside the corresponding slice.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        rsa: isize,
        csa: isize,
        b: &[Self],
        rsb: isize,
        csb: isize,
        beta: Self,
        c: &mut [Self],
        rsc: isize,
        csc: isize,
    );
}

/// Upper bound (inclusive) on the flat index touched by an `r×s` stride walk,
/// or `None` for an empty matrix.
fn max_flat_index(rows: usize, cols: usize, rs: isize, cs: isize) -> Option<usize> {
    if rows == 0 || cols == 0 {
        return None;
    }
    let corner = |i: usize, j: usize| i as isize * rs + j as isize * cs;
    let all = [
        corner(0, 0),
        corner(rows - 1, 0),
        corner(0, cols - 1),
        corner(rows - 1, cols - 1),
    ];
    Some(*all.iter().max().expect("non-empty") as usize)
}

macro_rules! impl_scalar {
    ($t:ty, $kernel:path) => {
        impl Scalar for $t {
            #[inline(always)]
            fn of(v: f64) -> Self {
                v as $t
            }

            #[inline(always)]
            fn of_usize(v: usize) -> Self {
                v as $t
            }

            #[inline(always)]
            fn as_f64(self) -> f64 {
                self as f64
            }

            #[inline(always)]
            fn as_f32(self) -> f32 {
                self as f32
            }

            #[inline(always)]
            fn of_f32(v: f32) -> Self {
                v as $t
            }

            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                alpha: Self,
                a: &[Self],
                rsa: isize,
                csa: isize,
                b: &[Self],
                rsb: isize,
                csb: isize,
                beta: Self,
                c: &mut [Self],
                rsc: isize,
                csc: isize,
            ) {
                if m == 0 || n == 0 {
                    return;
                }
                if k == 0 {
                    for i in 0..m {
                        for j in 0..n {
                            let idx = (i as isize * rsc + j as isize * csc) as usize;
                            c[idx] = beta * c[idx];
                        }
                    }
                    return;
                }
                let amax = max_flat_index(m, k, rsa, csa).expect("checked non-empty");
                let bmax = max_flat_index(k, n, rsb, csb).expect("checked non-empty");
                let cmax = max_flat_index(m, n, rsc, csc).expect("checked non-empty");
                assert!(amax < a.len(), "gemm: A stride walk escapes its slice");
                assert!(bmax < b.len(), "gemm: B stride walk escapes its slice");
                assert!(cmax < c.len(), "gemm: C stride walk escapes its slice");
                // Safety: the assertions above bound every strided access.
                unsafe {
                    $kernel(
                        m,
                        k,
                        n,
                        alpha,
                        a.as_ptr(),
                        rsa,
                        csa,
                        b.as_ptr(),
                        rsb,
                        csb,
                        beta,
                        c.as_mut_ptr(),
                        rsc,
                        csc,
                    );
                }
            }
        }
    };
}

impl_scalar!(f32, matrixmultiply::sgemm);
impl_scalar!(f64, matrixmultiply::dgemm);

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(m: usize, k: usize, n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                c[i * n + j] = (0..k).map(|p| a[i * k + p] * b[p * n + j]).sum();
            }
        }
        c
    }

    #[test]
    fn gemm_matches_naive_row_major() {
        let (m, k, n) = (3, 4, 5);
        let a: Vec<f64> = (0..m * k).map(|i| (i as f64) * 0.3 - 1.0).collect();
        let b: Vec<f64> = (0..k * n).map(|i| (i as f64) * -0.7 + 2.0).collect();
        let want = naive(m, k, n, &a, &b);
        let mut c = vec![0.0; m * n];
        f64::gemm(
            m, k, n, 1.0, &a, k as isize, 1, &b, n as isize, 1, 0.0, &mut c, n as isize, 1,
        );
        for (x, y) in c.iter().zip(&want) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn gemm_transposed_view_matches_naive() {
        // Multiply Aᵀ·B by feeding A with swapped strides.
        let (m, k, n) = (4, 3, 2);
        // A stored k×m row-major, used as m×k via strides (1, m).
        let a_store: Vec<f64> = (0..k * m).map(|i| i as f64 * 0.5 - 2.0).collect();
        let a_logical: Vec<f64> = {
            let mut v = vec![0.0; m * k];
            for i in 0..m {
                for p in 0..k {
                    v[i * k + p] = a_store[p * m + i];
                }
            }
            v
        };
        let b: Vec<f64> = (0..k * n).map(|i| (i as f64).cos()).collect();
        let want = naive(m, k, n, &a_logical, &b);
        let mut c = vec![0.0; m * n];
        f64::gemm(
            m, k, n, 1.0, &a_store, 1, m as isize, &b, n as isize, 1, 0.0, &mut c, n as isize, 1,
        );
        for (x, y) in c.iter().zip(&want) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn gemm_f32_accumulates_with_beta() {
        let a = [1.0f32, 2.0];
        let b = [3.0f32, 4.0];
        // 1×1 result: alpha·(1·3 + 2·4) + beta·10 = 11 + 5 = 16.
        let mut c = [10.0f32];
        f32::gemm(1, 2, 1, 1.0, &a, 2, 1, &b, 1, 1, 0.5, &mut c, 1, 1);
        assert!((c[0] - 16.0).abs() < 1e-6);
    }
}
