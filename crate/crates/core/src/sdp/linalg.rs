//! Dense kernels for the interior-point iteration.

use nalgebra::DMatrix;
#[cfg(test)]
use nalgebra::DVector;

const BLOCK: usize = 96;

/// Lower Cholesky factor of a symmetric positive definite matrix, computed in
/// place (the strict upper triangle is zeroed). Blocked right-looking variant
/// so the trailing updates run as matrix products.
///
/// Returns the column at which a nonpositive pivot appeared on failure.
pub fn cholesky_in_place(a: &mut DMatrix<f64>) -> Result<(), usize> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut k = 0;
    while k < n {
        let kb = BLOCK.min(n - k);
        factor_diagonal(a, k, kb)?;
        let rest = n - k - kb;
        if rest > 0 {
            solve_panel(a, k, kb);
            let panel = a.view((k + kb, k), (rest, kb)).clone_owned();
            let mut trailing = a.view_mut((k + kb, k + kb), (rest, rest));
            trailing.gemm(-1.0, &panel, &panel.transpose(), 1.0);
        }
        k += kb;
    }
    for j in 1..n {
        for i in 0..j {
            a[(i, j)] = 0.0;
        }
    }
    Ok(())
}

fn factor_diagonal(a: &mut DMatrix<f64>, k: usize, kb: usize) -> Result<(), usize> {
    for j in k..k + kb {
        let mut d = a[(j, j)];
        for p in k..j {
            d -= a[(j, p)] * a[(j, p)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(j);
        }
        let d = d.sqrt();
        a[(j, j)] = d;
        for i in j + 1..k + kb {
            let mut s = a[(i, j)];
            for p in k..j {
                s -= a[(i, p)] * a[(j, p)];
            }
            a[(i, j)] = s / d;
        }
    }
    Ok(())
}

// Rows below the diagonal block: B := B L_kk^{-T}.
fn solve_panel(a: &mut DMatrix<f64>, k: usize, kb: usize) {
    let n = a.nrows();
    for j in k..k + kb {
        let d = a[(j, j)];
        for p in k..j {
            let l = a[(j, p)];
            if l != 0.0 {
                for i in k + kb..n {
                    let v = a[(i, p)];
                    a[(i, j)] -= v * l;
                }
            }
        }
        for i in k + kb..n {
            a[(i, j)] /= d;
        }
    }
}

#[cfg(test)]
/// Solves `L Lᵀ x = b` in place given the lower factor `L`.
pub fn cholesky_solve(l: &DMatrix<f64>, b: &mut DVector<f64>) {
    forward(l, b.as_mut_slice());
    backward(l, b.as_mut_slice());
}

/// `L x = b` in place.
pub fn forward(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = l.nrows();
    for j in 0..n {
        let x = b[j] / l[(j, j)];
        b[j] = x;
        if x != 0.0 {
            let col = l.column(j);
            for i in j + 1..n {
                b[i] -= col[i] * x;
            }
        }
    }
}

/// `Lᵀ x = b` in place.
pub fn backward(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = l.nrows();
    for j in (0..n).rev() {
        let col = l.column(j);
        let mut s = b[j];
        for i in j + 1..n {
            s -= col[i] * b[i];
        }
        b[j] = s / l[(j, j)];
    }
}

/// Symmetric positive definite inverse via Cholesky, or `None` if not PD.
pub fn spd_inverse(a: &DMatrix<f64>) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
    let mut l = a.clone();
    cholesky_in_place(&mut l).ok()?;
    let n = a.nrows();
    let mut inv = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        forward(&l, &mut e);
        backward(&l, &mut e);
        inv.column_mut(j).copy_from_slice(&e);
    }
    symmetrize(&mut inv);
    Some((l, inv))
}

pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// Largest `α ≥ 0` (capped at `f64::INFINITY`) with `X + α dX ⪰ 0`, given the
/// lower Cholesky factor `L` of `X`.
pub fn max_step(l: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let n = l.nrows();
    if n == 1 {
        let x = l[(0, 0)] * l[(0, 0)];
        return if dx[(0, 0)] < 0.0 { -x / dx[(0, 0)] } else { f64::INFINITY };
    }
    // W = L^{-1} dX L^{-T}.
    let mut w = dx.clone();
    for j in 0..n {
        forward(l, w.column_mut(j).as_mut_slice());
    }
    w.transpose_mut();
    for j in 0..n {
        forward(l, w.column_mut(j).as_mut_slice());
    }
    symmetrize(&mut w);
    let lmin = w.symmetric_eigenvalues().min();
    if lmin < 0.0 {
        -1.0 / lmin
    } else {
        f64::INFINITY
    }
}

/// Frobenius inner product `⟨A, B⟩`.
pub fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &b * b.transpose() + DMatrix::identity(n, n) * (n as f64 * 0.1)
    }

    #[test]
    fn blocked_cholesky_matches_reference() {
        for n in [1, 5, 95, 96, 97, 250] {
            let a = random_spd(n, n as u64);
            let mut l = a.clone();
            cholesky_in_place(&mut l).unwrap();
            let err = (&l * l.transpose() - &a).amax();
            assert!(err < 1e-10 * a.amax(), "n={n} err={err}");
            let reference = a.clone().cholesky().unwrap().l();
            assert!((l - reference).amax() < 1e-9);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(cholesky_in_place(&mut a), Err(1));
    }

    #[test]
    fn solves_and_inverse() {
        let a = random_spd(40, 7);
        let (l, inv) = spd_inverse(&a).unwrap();
        assert!((&a * &inv - DMatrix::identity(40, 40)).amax() < 1e-10);
        let b = DVector::from_fn(40, |i, _| i as f64);
        let mut x = b.clone();
        cholesky_solve(&l, &mut x);
        assert!((&a * x - b).amax() < 1e-9);
    }

    #[test]
    fn step_to_boundary() {
        let x = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let (l, _) = spd_inverse(&x).unwrap();
        let dx = DMatrix::from_diagonal(&DVector::from_vec(vec![-2.0, 1.0]));
        assert!((max_step(&l, &dx) - 0.5).abs() < 1e-14);
        assert_eq!(max_step(&l, &DMatrix::identity(2, 2)), f64::INFINITY);
        let one = DMatrix::from_element(1, 1, 4.0);
        let (l1, _) = spd_inverse(&one).unwrap();
        assert_eq!(max_step(&l1, &DMatrix::from_element(1, 1, -8.0)), 0.5);
    }
}
