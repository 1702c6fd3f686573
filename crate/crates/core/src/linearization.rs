//! Linear analysis around homogeneous states of model 4.
//!
//! For a constant activation `a` the linearization splits over Neumann modes
//! into 2×2 matrices. For the Hill activation we evaluate, mode by mode, the
//! residual of the degeneracy condition of the linearized nonlocal stationary
//! operator `L` around `u*(λ)`, and scan a parameter for sign changes.

use alloc::vec::Vec;

use crate::equilibrium::solve_equilibrium;
use crate::error::{positive, Error, Result};
use crate::kinetics::Model4Params;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeSpectrum {
    Real(f64, f64),
    Complex { re: f64, im: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    /// One eigenvalue is zero to `1e-12·(Dμ + δ + a)`. At μ = 0 this is the
    /// conserved direction `z + τw = const`.
    Neutral,
    Unstable,
    /// Complex pair (never happens for the constant-a matrices).
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeEigenpair {
    pub mode: usize,
    pub mu: f64,
    pub matrix: [[f64; 2]; 2],
    pub eigenvalues: ModeSpectrum,
    pub stability: Stability,
}

/// `M(μ) = [[−Dμ − δ, a], [δ/τ, −(μ + a)/τ]]` with its eigenvalues.
pub fn constant_a_mode(
    a: f64,
    diffusion: f64,
    tau: f64,
    delta: f64,
    mu: f64,
    mode: usize,
) -> ModeEigenpair {
    let m00 = -diffusion * mu - delta;
    let m11 = -(mu + a) / tau;
    let matrix = [[m00, a], [delta / tau, m11]];
    let trace = m00 + m11;
    // det = μ(Dμ + Da + δ)/τ, written without cancellation
    let det = mu * (diffusion * mu + diffusion * a + delta) / tau;
    // (m00 − m11)² + 4·m01·m10, nonnegative whenever aδ/τ ≥ 0
    let gap = m00 - m11;
    let disc = gap * gap + 4.0 * a * delta / tau;
    let scale = diffusion * mu + delta + a;
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);

    let (eigenvalues, stability) = if disc >= 0.0 {
        let root = libm::sqrt(disc);
        // larger-magnitude root first, then det / it to avoid cancellation
        let big = if trace <= 0.0 {
            0.5 * (trace - root)
        } else {
            0.5 * (trace + root)
        };
        let small = if big != 0.0 {
            det / big
        } else {
            0.5 * (trace + root)
        };
        let (hi, lo) = if small >= big {
            (small, big)
        } else {
            (big, small)
        };
        let stability = if hi.abs() <= tol || lo.abs() <= tol {
            Stability::Neutral
        } else if hi < 0.0 {
            Stability::Stable
        } else {
            Stability::Unstable
        };
        (ModeSpectrum::Real(hi, lo), stability)
    } else {
        (
            ModeSpectrum::Complex {
                re: 0.5 * trace,
                im: 0.5 * libm::sqrt(-disc),
            },
            Stability::Complex,
        )
    };
    ModeEigenpair {
        mode,
        mu,
        matrix,
        eigenvalues,
        stability,
    }
}

/// Residual of the degeneracy condition of `L` on Neumann mode `j`:
///
/// ```text
/// Dμⱼ + δ + D·a(u*) + D·a′(u*)·u* − a′(u*)(λ − ξu*)/τ + [j = 1]·a(u*)ξ/τ
/// ```
///
/// where `ξ = 1 − τD`. Mode 1 (constant eigenfunction, `μ₁ = 0`) picks up
/// the nonlocal term; for `j ≥ 2` the eigenfunction has zero mean and the
/// term drops. Zero residual means `L` is singular on that mode.
pub fn degeneracy_residual(p: &Model4Params, lambda: f64, mode: usize, mu: f64) -> Result<f64> {
    if mode == 0 {
        return Err(Error::InvalidParameter {
            name: "j",
            value: 0.0,
            reason: "mode index is 1-based",
        });
    }
    let eq = solve_equilibrium(p, lambda)?;
    let u = eq.u_star;
    let a = p.activation_unchecked(u);
    let slope = p.activation_slope_unchecked(u);
    let d = p.diffusion;
    let xi = p.xi();
    let mut r = d * mu + p.delta + d * a + d * slope * u - slope * (lambda - xi * u) / p.tau;
    if mode == 1 {
        r += a * xi / p.tau;
    }
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanParameter {
    Diffusion,
    Lambda,
    Delta,
}

impl ScanParameter {
    pub fn name(&self) -> &'static str {
        match self {
            ScanParameter::Diffusion => "D",
            ScanParameter::Lambda => "lambda",
            ScanParameter::Delta => "delta",
        }
    }
}

/// A sign change of the degeneracy residual, refined by bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegeneracyReport {
    pub mode: usize,
    /// Refined bracket; residual signs at the ends differ.
    pub bracket: (f64, f64),
    pub root: f64,
    /// Residual at `root`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub parameter: ScanParameter,
    pub mode: usize,
    /// Every sample point with its residual or the error it produced.
    pub samples: Vec<(f64, Result<f64>)>,
    pub roots: Vec<DegeneracyReport>,
}

/// Relative bracket width at which root refinement stops.
pub const SCAN_RELATIVE_WIDTH: f64 = 1e-8;

fn with_parameter(
    p: &Model4Params,
    lambda: f64,
    which: ScanParameter,
    value: f64,
) -> (Model4Params, f64) {
    let mut q = *p;
    let mut l = lambda;
    match which {
        ScanParameter::Diffusion => q.diffusion = value,
        ScanParameter::Lambda => l = value,
        ScanParameter::Delta => q.delta = value,
    }
    (q, l)
}

/// Residual at a scan parameter value.
pub fn residual_at(
    p: &Model4Params,
    lambda: f64,
    mode: usize,
    mu: f64,
    which: ScanParameter,
    value: f64,
) -> Result<f64> {
    let (q, l) = with_parameter(p, lambda, which, value);
    degeneracy_residual(&q, l, mode, mu)
}

/// Evaluates the mode-`j` residual on `samples` equispaced values of the
/// chosen parameter in `range`, brackets every sign change between adjacent
/// successful samples and bisects each to [`SCAN_RELATIVE_WIDTH`].
pub fn scan_degeneracy(
    p: &Model4Params,
    lambda: f64,
    mode: usize,
    mu: f64,
    which: ScanParameter,
    range: (f64, f64),
    samples: usize,
) -> Result<ScanReport> {
    positive("range start", range.0)?;
    positive("range end", range.1)?;
    if range.1 <= range.0 {
        return Err(Error::InvalidParameter {
            name: "range",
            value: range.1,
            reason: "end must exceed start",
        });
    }
    if samples < 2 {
        return Err(Error::InvalidParameter {
            name: "samples",
            value: samples as f64,
            reason: "need at least 2",
        });
    }
    let eval = |x: f64| residual_at(p, lambda, mode, mu, which, x);
    let points: Vec<(f64, Result<f64>)> = (0..samples)
        .map(|i| {
            let x = if i + 1 == samples {
                range.1
            } else {
                range.0 + (range.1 - range.0) * i as f64 / (samples - 1) as f64
            };
            (x, eval(x))
        })
        .collect();

    let mut roots = Vec::new();
    for pair in points.windows(2) {
        let (x0, r0) = (&pair[0].0, &pair[0].1);
        let (x1, r1) = (&pair[1].0, &pair[1].1);
        let (Ok(f0), Ok(f1)) = (r0, r1) else { continue };
        if *f0 == 0.0 {
            roots.push(DegeneracyReport {
                mode,
                bracket: (*x0, *x0),
                root: *x0,
                residual: 0.0,
            });
            continue;
        }
        if f0.signum() == f1.signum() || *f1 == 0.0 {
            continue;
        }
        if let Some(r) = bisect(&eval, *x0, *x1, *f0, mode) {
            roots.push(r);
        }
    }
    if let Some((x, Ok(f))) = points.last() {
        if *f == 0.0 {
            roots.push(DegeneracyReport {
                mode,
                bracket: (*x, *x),
                root: *x,
                residual: 0.0,
            });
        }
    }
    Ok(ScanReport {
        parameter: which,
        mode,
        samples: points,
        roots,
    })
}

fn bisect(
    eval: &impl Fn(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    f_lo: f64,
    mode: usize,
) -> Option<DegeneracyReport> {
    let positive_left = f_lo > 0.0;
    for _ in 0..200 {
        if hi - lo <= SCAN_RELATIVE_WIDTH * 0.5 * (lo.abs() + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = eval(mid).ok()?;
        if fm == 0.0 {
            return Some(DegeneracyReport {
                mode,
                bracket: (mid, mid),
                root: mid,
                residual: 0.0,
            });
        }
        if (fm > 0.0) == positive_left {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let residual = eval(root).ok()?;
    Some(DegeneracyReport {
        mode,
        bracket: (lo, hi),
        root,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_mode_has_conserved_direction() {
        let m = constant_a_mode(1.5, 2.0, 0.5, 0.7, 0.0, 1);
        let ModeSpectrum::Real(hi, lo) = m.eigenvalues else {
            panic!()
        };
        assert_eq!(hi, 0.0);
        assert_relative_eq!(lo, -(0.7 + 1.5 / 0.5), max_relative = 1e-15);
        assert_eq!(m.stability, Stability::Neutral);
        // (1, τ)·M(0) = 0: u + τv is conserved
        let row = [
            m.matrix[0][0] + 0.5 * m.matrix[1][0],
            m.matrix[0][1] + 0.5 * m.matrix[1][1],
        ];
        assert!(row[0].abs() < 1e-15 && row[1].abs() < 1e-15);
    }

    #[test]
    fn eigenvalues_satisfy_characteristic_polynomial() {
        for mu in [0.0, 0.3, 9.87, 400.0] {
            let m = constant_a_mode(0.8, 3.0, 1.7, 0.4, mu, 2);
            let ModeSpectrum::Real(hi, lo) = m.eigenvalues else {
                panic!()
            };
            let tr = m.matrix[0][0] + m.matrix[1][1];
            let det = m.matrix[0][0] * m.matrix[1][1] - m.matrix[0][1] * m.matrix[1][0];
            let scale = tr * tr + det.abs();
            for ev in [hi, lo] {
                assert!((ev * ev - tr * ev + det).abs() <= 1e-12 * scale);
            }
            assert_relative_eq!(
                det,
                mu * (3.0 * mu + 3.0 * 0.8 + 0.4) / 1.7,
                max_relative = 1e-12,
                epsilon = 1e-300
            );
        }
    }

    #[test]
    fn flat_activation_never_degenerates() {
        let p = Model4Params::new(0.2, 3.0, 1.0, 0.0, 1.0, 0.4, 0.9).unwrap();
        for j in 1..20 {
            let mu = ((j - 1) as f64 * core::f64::consts::PI).powi(2);
            let r = degeneracy_residual(&p, 5.0, j, mu).unwrap();
            assert!(r > 0.0);
            if j >= 2 {
                let a = p.a0();
                assert_relative_eq!(
                    r,
                    p.diffusion * mu + p.delta + p.diffusion * a,
                    max_relative = 1e-12
                );
            }
        }
        let scan = scan_degeneracy(
            &p,
            5.0,
            2,
            9.87,
            ScanParameter::Diffusion,
            (1e-3, 10.0),
            200,
        )
        .unwrap();
        assert!(scan.roots.is_empty());
    }

    #[test]
    fn residual_grows_with_diffusion() {
        let p = Model4Params::new(1.0, 1.0, 1.0, 9.0, 1.3, 0.5, 1.5).unwrap();
        let r = |d: f64| residual_at(&p, 1.15, 2, 9.87, ScanParameter::Diffusion, d).unwrap();
        assert!(r(1e3) > r(1e2) && r(1e2) > r(10.0));
        assert!(r(1e4) > 1e4);
    }

    #[test]
    fn scan_finds_diffusion_threshold() {
        let p = Model4Params::new(1.0, 1.0, 1.0, 9.0, 1.3, 0.5, 1.5).unwrap();
        let mu = core::f64::consts::PI.powi(2);
        let scan =
            scan_degeneracy(&p, 1.15, 2, mu, ScanParameter::Diffusion, (1e-3, 0.1), 50).unwrap();
        assert_eq!(scan.roots.len(), 1);
        let root = scan.roots[0];
        assert!(root.bracket.1 - root.bracket.0 <= 1e-8 * root.root);
        assert!(root.residual.abs() <= 1e-6 * (root.root * mu + p.delta));
        let f = |d: f64| residual_at(&p, 1.15, 2, mu, ScanParameter::Diffusion, d).unwrap();
        assert!(f(root.bracket.0) * f(root.bracket.1) <= 0.0);
    }

    #[test]
    fn scan_records_failures_and_continues() {
        // bistable region in λ: some samples fail, the scan still completes
        let p = Model4Params::new(0.5, 1.0, 1.0, 1.0, 1.0, 0.01, 1.0).unwrap();
        let scan =
            scan_degeneracy(&p, 1.0, 2, 9.87, ScanParameter::Lambda, (0.5, 6.0), 30).unwrap();
        assert!(scan.samples.iter().any(|(_, r)| r.is_err()));
        assert!(scan.samples.iter().any(|(_, r)| r.is_ok()));
    }

    #[test]
    fn scan_validates_input() {
        let p = Model4Params::default();
        assert!(scan_degeneracy(&p, 1.0, 2, 1.0, ScanParameter::Delta, (1.0, 0.5), 10).is_err());
        assert!(scan_degeneracy(&p, 1.0, 2, 1.0, ScanParameter::Delta, (0.5, 1.0), 1).is_err());
        assert!(degeneracy_residual(&p, 1.0, 0, 0.0).is_err());
    }
}
