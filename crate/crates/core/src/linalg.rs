//! Linear solvers for the implicit diffusion stage.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Solves `(I − c·Δʰ) x = rhs` on a 1D grid by Thomas elimination.
///
/// The mirror-ghost stencil doubles the inner off-diagonal in the first and
/// last rows, so the matrix is not symmetric but stays strictly diagonally
/// dominant for every `c ≥ 0`.
pub fn solve_shifted_1d(n: usize, h: f64, c: f64, rhs: &[f64], out: &mut [f64]) {
    debug_assert!(n >= 3 && rhs.len() == n && out.len() == n);
    let r = c / (h * h);
    let diag = 1.0 + 2.0 * r;
    // upper[i]: coefficient of x[i+1] in row i; lower[i]: of x[i-1].
    let upper = |i: usize| if i == 0 { -2.0 * r } else { -r };
    let lower = |i: usize| if i + 1 == n { -2.0 * r } else { -r };

    let mut cprime = vec![0.0; n];
    let mut m = diag;
    cprime[0] = upper(0) / m;
    out[0] = rhs[0] / m;
    for i in 1..n {
        m = diag - lower(i) * cprime[i - 1];
        if i + 1 < n {
            cprime[i] = upper(i) / m;
        }
        out[i] = (rhs[i] - lower(i) * out[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        out[i] -= cprime[i] * out[i + 1];
    }
}

/// Conjugate gradients for a symmetric positive (semi-)definite operator.
///
/// Stops once `‖r‖₂ ≤ tol·‖rhs‖₂`. `x` holds the initial guess on entry.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    rhs: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<usize> {
    let n = rhs.len();
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let target = tol * dot(rhs, rhs).sqrt_or_zero();
    let mut rr = dot(&r, &r);
    if rr.sqrt_or_zero() <= target {
        return Ok(0);
    }
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    for iter in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::LinearSolve {
                iterations: iter,
                residual: rr.sqrt_or_zero(),
            });
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt_or_zero() <= target {
            return Ok(iter);
        }
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    Err(Error::LinearSolve {
        iterations: max_iter,
        residual: rr.sqrt_or_zero(),
    })
}

/// Solves `(I − c·Δʰ) x = rhs` on any grid: Thomas elimination in 1D, CG on
/// the weight-symmetrized system `W(I − cΔʰ)` in 2D.
///
/// The trapezoid integral of `x` equals that of `rhs` exactly in exact
/// arithmetic; the rounding defect is removed by a uniform shift so that
/// mass does not drift over many steps.
pub fn solve_shifted(
    grid: &Grid,
    c: f64,
    rhs: &[f64],
    out: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<usize> {
    let iterations = if grid.dim() == 1 {
        solve_shifted_1d(grid.len(), grid.spacing(0), c, rhs, out);
        0
    } else {
        let w = grid.weights();
        let wrhs: Vec<f64> = rhs.iter().zip(&w).map(|(b, w)| w * b).collect();
        out.copy_from_slice(rhs);
        conjugate_gradient(
            |x, y| {
                grid.laplacian_into(x, y);
                for i in 0..x.len() {
                    y[i] = w[i] * (x[i] - c * y[i]);
                }
            },
            &wrhs,
            out,
            tol,
            max_iter,
        )?
    };
    let shift = (grid.integrate(rhs) - grid.integrate(out)) / grid.volume();
    out.iter_mut().for_each(|x| *x += shift);
    Ok(iterations)
}

/// Solves `−Δʰ z = f` for a weighted-mean-zero `f`, returning the
/// weighted-mean-zero solution.
pub fn inverse_neg_laplacian(grid: &Grid, f: &[f64], tol: f64) -> Result<Vec<f64>> {
    let vol = grid.volume();
    let fbar = grid.integrate(f) / vol;
    if grid.dim() == 1 {
        return Ok(inverse_neg_laplacian_1d(grid, f, fbar));
    }
    let w = grid.weights();
    let wrhs: Vec<f64> = f.iter().zip(&w).map(|(v, w)| w * (v - fbar)).collect();
    let mut z = vec![0.0; f.len()];
    conjugate_gradient(
        |x, y| {
            grid.laplacian_into(x, y);
            for i in 0..x.len() {
                y[i] *= -w[i];
            }
        },
        &wrhs,
        &mut z,
        tol,
        50 * f.len() + 100,
    )?;
    let zbar = grid.integrate(&z) / vol;
    z.iter_mut().for_each(|v| *v -= zbar);
    Ok(z)
}

/// Marches the fluxes `(z_{i+1} − z_i)/h` from the left boundary: the mirror
/// row gives the first flux, every interior row the next one.
fn inverse_neg_laplacian_1d(grid: &Grid, f: &[f64], fbar: f64) -> Vec<f64> {
    let n = f.len();
    let h = grid.spacing(0);
    let mut z = vec![0.0; n];
    let mut flux = -0.5 * h * (f[0] - fbar);
    for i in 1..n {
        z[i] = z[i - 1] + h * flux;
        flux -= h * (f[i] - fbar);
    }
    let zbar = grid.integrate(&z) / grid.volume();
    z.iter_mut().for_each(|v| *v -= zbar);
    z
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

trait SqrtOrZero {
    fn sqrt_or_zero(self) -> f64;
}

impl SqrtOrZero for f64 {
    fn sqrt_or_zero(self) -> f64 {
        if self > 0.0 {
            libm::sqrt(self)
        } else {
            0.0
        }
    }
}
