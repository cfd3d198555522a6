//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Floor applied to eigenvalues before taking matrix powers of a PSD matrix.
pub const EIGEN_FLOOR: f64 = 1e-14;

/// Relative singular-value cutoff for pseudo-inverses.
pub const PINV_RTOL: f64 = 1e-12;

/// Returns `(m + m') / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Frobenius norm of the antisymmetric part of `m`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    ((m - m.transpose()) * 0.5).norm()
}

/// Symmetric eigen-decomposition with eigenvalues sorted in descending order.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let n = eig.eigenvalues.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let vals = DVector::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Largest eigenvalue of a symmetric matrix.
pub fn sym_max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `S^p` for a symmetric PSD matrix, with eigenvalues floored at [`EIGEN_FLOOR`].
pub fn sym_power(s: &DMatrix<f64>, p: f64) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(s);
    let scaled = DVector::from_iterator(vals.len(), vals.iter().map(|&v| v.max(EIGEN_FLOOR).powf(p)));
    let out = &vecs * DMatrix::from_diagonal(&scaled) * vecs.transpose();
    symmetrize(&out)
}

/// Condition number of a symmetric PSD matrix (infinite when singular).
pub fn sym_condition(s: &DMatrix<f64>) -> f64 {
    let (vals, _) = sym_eigen(s);
    let hi = vals[0];
    let lo = vals[vals.len() - 1];
    if lo <= 0.0 || hi <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Spectral radius of a square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        0 => 0.0,
        1 => m[(0, 0)].abs(),
        _ => m
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max),
    }
}

/// Moore-Penrose pseudo-inverse with relative cutoff [`PINV_RTOL`].
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = PINV_RTOL * smax;
    let u = svd.u.expect("svd computed with u");
    let vt = svd.v_t.expect("svd computed with v_t");
    let k = svd.singular_values.len();
    let mut out = DMatrix::zeros(m.ncols(), m.nrows());
    for i in 0..k {
        let s = svd.singular_values[i];
        if s > cutoff && s > 0.0 {
            out += vt.row(i).transpose() * u.column(i).transpose() / s;
        }
    }
    out
}

/// Inverse of a square matrix, failing with a descriptive error when singular.
pub fn inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::NumericalFailure(format!("{what} is singular")))
}

/// Integer matrix power by repeated squaring.
pub fn mat_pow(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let mut result = DMatrix::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        base = &base * &base;
        e >>= 1;
    }
    result
}

/// Solves `V = F V F' + S` by the doubling iteration.
///
/// Fails with `NonConvergent` when `rho(F) >= 1 - 1e-10`.
pub fn lyapunov(f: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if f.nrows() != f.ncols() || s.nrows() != f.nrows() || s.ncols() != f.nrows() {
        return Err(Error::Validation("lyapunov: shape mismatch".into()));
    }
    let rho = spectral_radius(f);
    if !rho.is_finite() || rho >= 1.0 - 1e-10 {
        return Err(Error::NonConvergent(format!(
            "transition spectral radius {rho:.12} is not below one"
        )));
    }
    let mut v = symmetrize(s);
    let mut a = f.clone();
    let scale = s.norm().max(f64::MIN_POSITIVE);
    for _ in 0..200 {
        let inc = &a * &v * a.transpose();
        v += &inc;
        a = &a * &a;
        if inc.norm() <= 1e-17 * scale.max(v.norm()) || a.norm() < 1e-300 {
            let v = symmetrize(&v);
            let resid = (&v - f * &v * f.transpose() - s).norm();
            if resid > 1e-10 * scale.max(v.norm() * 1e-6) {
                return Err(Error::NumericalFailure(format!(
                    "lyapunov residual {resid:.3e} too large"
                )));
            }
            return Ok(v);
        }
        if !v.iter().all(|x| x.is_finite()) {
            break;
        }
    }
    Err(Error::NumericalFailure("lyapunov doubling stalled".into()))
}

/// Flips the sign of `v` so that its first entry with magnitude above `tol` is positive.
pub fn sign_normalize(v: &mut DVector<f64>, tol: f64) {
    if let Some(x) = v.iter().find(|x| x.abs() > tol) {
        if *x < 0.0 {
            v.neg_mut();
        }
    }
}

/// Builds a dense matrix from row slices.
pub fn from_rows(rows: &[&[f64]]) -> DMatrix<f64> {
    let nr = rows.len();
    let nc = if nr == 0 { 0 } else { rows[0].len() };
    DMatrix::from_fn(nr, nc, |i, j| rows[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lyapunov_scalar() {
        let v = lyapunov(&DMatrix::from_element(1, 1, 0.9), &DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert!((v[(0, 0)] - 1.0 / 0.19).abs() < 1e-12);
    }

    #[test]
    fn lyapunov_zero_transition() {
        let s = from_rows(&[&[2.0, 0.5], &[0.5, 1.0]]);
        let v = lyapunov(&DMatrix::zeros(2, 2), &s).unwrap();
        assert!((v - s).norm() < 1e-15);
    }

    #[test]
    fn lyapunov_diagonal() {
        let f = DMatrix::from_diagonal(&DVector::from_vec(vec![0.95, 0.5]));
        let v = lyapunov(&f, &DMatrix::identity(2, 2)).unwrap();
        assert!((v[(0, 0)] - 1.0 / (1.0 - 0.9025)).abs() < 1e-10);
        assert!((v[(1, 1)] - 4.0 / 3.0).abs() < 1e-12);
        assert!(v[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn lyapunov_rejects_unit_root() {
        let r = lyapunov(&DMatrix::from_element(1, 1, 1.0), &DMatrix::from_element(1, 1, 1.0));
        assert!(matches!(r, Err(Error::NonConvergent(_))));
    }

    #[test]
    fn pinv_of_rank_one() {
        let m = from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let p = pinv(&m);
        assert!((&m * &p * &m - &m).norm() < 1e-12);
        assert!((p[(0, 0)] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn sqrt_roundtrip() {
        let s = from_rows(&[&[4.0, 1.0], &[1.0, 3.0]]);
        let h = sym_power(&s, 0.5);
        assert!((&h * &h - &s).norm() < 1e-12);
        let hi = sym_power(&s, -0.5);
        assert!((&hi * &s * &hi - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn spectral_radius_rotation() {
        let m = from_rows(&[&[0.0, -0.5], &[0.5, 0.0]]);
        assert!((spectral_radius(&m) - 0.5).abs() < 1e-12);
    }
}
