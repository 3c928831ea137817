use nalgebra::{Complex, DMatrix, Schur};

use super::OracleError;

/// Largest matrix the dense eigensolver accepts.
pub const MAX_DIMENSION: usize = 64;

const MAX_SWEEPS: usize = 10_000;

/// All eigenvalues of a real square matrix, via Hessenberg reduction and
/// shifted QR (real Schur form). Sorted by decreasing real part, then
/// decreasing imaginary part.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>, OracleError> {
    let (r, c) = m.shape();
    if r != c {
        return Err(OracleError::NotSquare { rows: r, cols: c });
    }
    if r > MAX_DIMENSION {
        return Err(OracleError::TooLarge(r));
    }
    if r == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(OracleError::NonFinite);
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, MAX_SWEEPS).ok_or(OracleError::NoConvergence(r))?;
    let mut eig: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(eig)
}

/// `min_{‖v‖=1} ‖(M − λI)v‖`, the smallest singular value of `M − λI`.
pub fn eigen_residual(m: &DMatrix<f64>, lambda: Complex<f64>) -> f64 {
    let n = m.nrows();
    let shifted = DMatrix::from_fn(n, n, |i, j| {
        let v = Complex::new(m[(i, j)], 0.0);
        if i == j {
            v - lambda
        } else {
            v
        }
    });
    shifted.singular_values().min()
}
