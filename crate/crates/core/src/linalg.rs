//! Eigendecomposition of general (nonsymmetric) real matrices.
//!
//! nalgebra provides Schur triangularization but no eigenvector extraction
//! for general matrices. The matrix is promoted to complex, Schur reduces it
//! to upper-triangular `T` with unitary `Q`, and each eigenvector is obtained
//! by back-substitution on `(T - lambda I) y = 0` restricted to the leading
//! block, then mapped back through `Q`.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

/// Complex double-precision scalar.
pub type C64 = Complex<f64>;

/// Hard cap on Schur QR iterations; generous for any rank used here.
const SCHUR_MAX_ITER: usize = 200_000;

/// Promote a real matrix to complex entries.
pub fn complexify(a: &DMatrix<f64>) -> DMatrix<C64> {
    a.map(|x| C64::new(x, 0.0))
}

/// Eigenvalues and unit-norm right eigenvectors of a square real matrix.
///
/// Returns `(lambda, v)` with `a * v[:, i] = lambda[i] * v[:, i]`;
/// eigenvalues of real matrices occur in conjugate pairs up to roundoff.
pub fn eig_real(a: &DMatrix<f64>) -> Result<(Vec<C64>, DMatrix<C64>)> {
    if !a.is_square() {
        return Err(Error::validation(format!(
            "eigendecomposition requires a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    if n == 0 {
        return Err(Error::validation("eigendecomposition of empty matrix"));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::numerical("matrix contains non-finite entries"));
    }

    let schur = nalgebra::linalg::Schur::try_new(complexify(a), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::numerical("Schur iteration did not converge"))?;
    let (q, t) = schur.unpack();

    let eigenvalues: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();

    // Scale floor for near-singular shifted diagonals, as in LAPACK's trevc.
    let t_norm = t.iter().map(|x| x.norm()).fold(0.0_f64, f64::max);
    let smin = (f64::EPSILON * t_norm).max(f64::MIN_POSITIVE);

    let mut vectors = DMatrix::<C64>::zeros(n, n);
    let mut y = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        let lambda = eigenvalues[i];
        y[i] = C64::new(1.0, 0.0);
        for j in (0..i).rev() {
            let mut s = C64::new(0.0, 0.0);
            for k in (j + 1)..=i {
                s += t[(j, k)] * y[k];
            }
            let mut d = t[(j, j)] - lambda;
            if d.norm() < smin {
                d = C64::new(smin, 0.0);
            }
            y[j] = -s / d;
            // Rescale early to avoid overflow in long substitution chains.
            let mag = y[j].norm();
            if mag > 1e200 {
                for item in y.iter_mut().take(i + 1) {
                    *item /= mag;
                }
            }
        }

        let mut col = vectors.column_mut(i);
        for r in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..=i {
                acc += q[(r, k)] * y[k];
            }
            col[r] = acc;
        }
        let norm = col.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            col /= C64::new(norm, 0.0);
        }
        y[..=i].fill(C64::new(0.0, 0.0));
    }

    Ok((eigenvalues, vectors))
}
