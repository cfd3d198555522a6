//! Derivative-free box-constrained minimization and a finite-difference Newton root finder.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::pinv;

/// Settings for [`nelder_mead_box`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    /// Stop when the simplex diameter falls below this.
    pub xtol: f64,
    /// Iteration cap per restart.
    pub max_iter: usize,
    /// Number of restarts from the incumbent with a fresh simplex.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { xtol: 1e-10, max_iter: 5_000, restarts: 2 }
    }
}

fn clamp(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lower[i], upper[i]);
    }
}

fn nm_pass<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    step: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &NelderMeadOptions,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut base = x0.to_vec();
    clamp(&mut base, lower, upper);
    let fb = f(&base);
    simplex.push((base.clone(), fb));
    for i in 0..n {
        let mut v = base.clone();
        v[i] += step[i];
        if v[i] > upper[i] {
            v[i] = base[i] - step[i];
        }
        clamp(&mut v, lower, upper);
        let fv = f(&v);
        simplex.push((v, fv));
    }
    let diameter = |s: &[(Vec<f64>, f64)]| {
        s.iter()
            .skip(1)
            .map(|(v, _)| v.iter().zip(&s[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    };
    for _ in 0..opts.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if diameter(&simplex) < opts.xtol {
            break;
        }
        let worst = simplex[n].clone();
        let mut centroid = vec![0.0; n];
        for (v, _) in simplex.iter().take(n) {
            for i in 0..n {
                centroid[i] += v[i] / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = (0..n).map(|i| centroid[i] + t * (worst.0[i] - centroid[i])).collect();
            clamp(&mut p, lower, upper);
            p
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let x = along(-0.5);
            let fx = f(&x);
            (x, fx)
        } else {
            let x = along(0.5);
            let fx = f(&x);
            (x, fx)
        };
        if fc < worst.1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for item in simplex.iter_mut().skip(1) {
            let mut v: Vec<f64> = (0..n).map(|i| best[i] + 0.5 * (item.0[i] - best[i])).collect();
            clamp(&mut v, lower, upper);
            let fv = f(&v);
            *item = (v, fv);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Minimizes `f` over the box `[lower, upper]` by Nelder-Mead with projection,
/// restarting from the incumbent with a shrunken simplex.
pub fn nelder_mead_box<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &NelderMeadOptions,
) -> (Vec<f64>, f64) {
    let (mut x, mut fx) = nm_pass(&mut f, x0, step, lower, upper, opts);
    let mut s: Vec<f64> = step.to_vec();
    for _ in 0..opts.restarts {
        for v in s.iter_mut() {
            *v *= 0.1;
        }
        let (x2, f2) = nm_pass(&mut f, &x, &s, lower, upper, opts);
        if f2 <= fx {
            x = x2;
            fx = f2;
        }
    }
    (x, fx)
}

/// Outcome of [`newton_fd`].
#[derive(Debug, Clone, PartialEq)]
pub struct RootResult {
    /// Root estimate.
    pub x: DVector<f64>,
    /// Infinity norm of the residual at `x`.
    pub residual: f64,
    /// Residual after each iteration.
    pub trace: Vec<f64>,
}

/// Finite-difference Jacobian of `f` at `x`.
pub fn fd_jacobian<F: FnMut(&DVector<f64>) -> Result<DVector<f64>>>(
    f: &mut F,
    x: &DVector<f64>,
    fx: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let n = x.len();
    let mut jac = DMatrix::zeros(fx.len(), n);
    for j in 0..n {
        let h = 1e-7 * x[j].abs().max(1.0);
        let mut xp = x.clone();
        xp[j] += h;
        let mut xm = x.clone();
        xm[j] -= h;
        let fp = f(&xp)?;
        let fm = f(&xm)?;
        jac.set_column(j, &((fp - fm) / (2.0 * h)));
    }
    Ok(jac)
}

/// Damped Newton iteration with a central-difference Jacobian and backtracking.
pub fn newton_fd<F: FnMut(&DVector<f64>) -> Result<DVector<f64>>>(
    mut f: F,
    x0: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<RootResult> {
    let mut x = x0.clone();
    let mut fx = f(&x)?;
    let mut trace = vec![fx.amax()];
    for _ in 0..max_iter {
        if fx.amax() < tol {
            return Ok(RootResult { residual: fx.amax(), x, trace });
        }
        let jac = fd_jacobian(&mut f, &x, &fx)?;
        let dx = match jac.clone().lu().solve(&fx) {
            Some(d) if d.iter().all(|v| v.is_finite()) => d,
            _ => pinv(&jac) * &fx,
        };
        let norm0 = fx.norm();
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let xn = &x - &dx * t;
            if let Ok(fnew) = f(&xn) {
                if fnew.iter().all(|v| v.is_finite()) && fnew.norm() < (1.0 - 1e-4 * t) * norm0 {
                    x = xn;
                    fx = fnew;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        trace.push(fx.amax());
        if !accepted {
            break;
        }
    }
    let residual = fx.amax();
    if residual < tol {
        Ok(RootResult { x, residual, trace })
    } else {
        Err(Error::NoConvergence { residual, trace })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nelder_mead_quadratic_in_box() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 0.2).powi(2);
        let (x, _) = nelder_mead_box(f, &[0.9, 0.9], &[0.1, 0.1], &[-1.0, 0.0], &[1.0, 1.0], &Default::default());
        assert!((x[0] - 0.3).abs() < 1e-8);
        assert_eq!(x[1], 0.0);
    }

    #[test]
    fn newton_solves_nonlinear_system() {
        let f = |x: &DVector<f64>| -> Result<DVector<f64>> {
            Ok(DVector::from_vec(vec![x[0] * x[0] + x[1] - 2.0, x[0] - x[1]]))
        };
        let r = newton_fd(f, &DVector::from_vec(vec![2.0, 0.0]), 1e-12, 50).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-10 && (r.x[1] - 1.0).abs() < 1e-10);
    }
}
