//! Spatially homogeneous states of model 4.
//!
//! On the line `u + τv = λ` the steady-state condition `f(u, v) = 0` is
//! equivalent to `A(u) = B(u)` with
//!
//! ```text
//! A(u) = τδ/b + γ + k₀ + λτδ / (b(u − λ)),    B(u) = γkᵐ / (kᵐ + uᵐ).
//! ```
//!
//! `Φ = A − B` starts at `Φ(0) = k₀` and tends to `−∞` as `u → λ⁻`.

use alloc::vec::Vec;

use crate::error::{positive, Error, Result};
use crate::kinetics::Model4Params;

/// Points of the sign-change audit on (0, λ).
pub const AUDIT_POINTS: usize = 10_000;
/// Upper end of the search interval, relative to λ; keeps A finite.
pub const POLE_OFFSET: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousEquilibrium {
    pub lambda: f64,
    pub u_star: f64,
    pub v_star: f64,
    /// f(u*, v*).
    pub residual: f64,
}

/// One bisection bracket `[lower, upper]` with Φ at both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketStep {
    pub lower: f64,
    pub upper: f64,
    pub phi_lower: f64,
    pub phi_upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSolve {
    pub equilibrium: HomogeneousEquilibrium,
    pub trace: Vec<BracketStep>,
    pub newton_iterations: usize,
}

fn check_rates(p: &Model4Params) -> Result<()> {
    p.validate()?;
    positive("b", p.b)?;
    Ok(())
}

/// A(u); undefined at the pole u = λ.
pub fn curve_a(p: &Model4Params, lambda: f64, u: f64) -> Result<f64> {
    check_rates(p)?;
    positive("lambda", lambda)?;
    if u < 0.0 || u > lambda {
        return Err(Error::InvalidParameter {
            name: "u",
            value: u,
            reason: "must lie in [0, lambda)",
        });
    }
    if u == lambda {
        return Err(Error::Pole { at: u });
    }
    Ok(curve_a_unchecked(p, lambda, u))
}

fn curve_a_unchecked(p: &Model4Params, lambda: f64, u: f64) -> f64 {
    let td = p.tau * p.delta / p.b;
    td + p.gamma + p.k0 + lambda * td / (u - lambda)
}

/// B(u) = γ(1 − Hill(u)).
pub fn curve_b(p: &Model4Params, u: f64) -> f64 {
    // hill(u) = (a(u)/b − k₀)/γ, but evaluate directly to avoid 0/0 at γ = 0
    let s = u.max(0.0) / p.k;
    let q = if p.hill_exponent == 2.0 {
        s * s
    } else {
        libm::pow(s, p.hill_exponent)
    };
    if q.is_infinite() {
        0.0
    } else {
        p.gamma / (1.0 + q)
    }
}

fn phi(p: &Model4Params, lambda: f64, u: f64) -> f64 {
    curve_a_unchecked(p, lambda, u) - curve_b(p, u)
}

/// `f(u, (λ − u)/τ)`, the smooth form of the balance used for the Newton
/// polish; same roots as Φ on (0, λ).
fn line_reaction(p: &Model4Params, lambda: f64, u: f64) -> f64 {
    p.reduced_rate(lambda, u)
}

fn line_reaction_slope(p: &Model4Params, lambda: f64, u: f64) -> f64 {
    p.activation_slope_unchecked(u) * (lambda - u) / p.tau
        - p.activation_unchecked(u) / p.tau
        - p.delta
}

/// Number of strict sign changes of Φ on `n` equispaced points of
/// `[0, λ(1 − POLE_OFFSET)]`.
pub fn count_sign_changes(p: &Model4Params, lambda: f64, n: usize) -> usize {
    let hi = lambda * (1.0 - POLE_OFFSET);
    let mut last = 0.0f64;
    let mut changes = 0;
    for i in 0..n {
        let u = hi * i as f64 / (n - 1) as f64;
        let s = phi(p, lambda, u);
        if s == 0.0 || s.is_nan() {
            continue;
        }
        if last != 0.0 && (s > 0.0) != (last > 0.0) {
            changes += 1;
        }
        last = s;
    }
    changes
}

pub fn solve_equilibrium(p: &Model4Params, lambda: f64) -> Result<HomogeneousEquilibrium> {
    solve_equilibrium_traced(p, lambda).map(|s| s.equilibrium)
}

/// Unique root of Φ on (0, λ): bisection down to a relative bracket width of
/// 1e-6, then Newton on `f(u, (λ − u)/τ)` safeguarded by the bracket.
///
/// The root is only accepted if Φ changes sign exactly once on the
/// [`AUDIT_POINTS`]-point audit grid.
pub fn solve_equilibrium_traced(p: &Model4Params, lambda: f64) -> Result<EquilibriumSolve> {
    check_rates(p)?;
    positive("lambda", lambda)?;
    match count_sign_changes(p, lambda, AUDIT_POINTS) {
        0 => return Err(Error::NoSignChange),
        1 => {}
        n => return Err(Error::MultipleRoots { sign_changes: n }),
    }

    let mut lo = 0.0;
    let mut hi = lambda * (1.0 - POLE_OFFSET);
    let mut phi_lo = phi(p, lambda, lo);
    let mut phi_hi = phi(p, lambda, hi);
    if !(phi_lo > 0.0 && phi_hi < 0.0) {
        return Err(Error::NoSignChange);
    }
    let mut trace = Vec::new();
    trace.push(BracketStep {
        lower: lo,
        upper: hi,
        phi_lower: phi_lo,
        phi_upper: phi_hi,
    });
    while hi - lo > 1e-6 * lambda {
        let mid = 0.5 * (lo + hi);
        let pm = phi(p, lambda, mid);
        if pm == 0.0 {
            lo = mid;
            hi = mid;
            phi_lo = pm;
            phi_hi = pm;
        } else if pm > 0.0 {
            lo = mid;
            phi_lo = pm;
        } else {
            hi = mid;
            phi_hi = pm;
        }
        trace.push(BracketStep {
            lower: lo,
            upper: hi,
            phi_lower: phi_lo,
            phi_upper: phi_hi,
        });
    }

    // Newton polish; the line reaction is positive left of the root.
    let mut u = 0.5 * (lo + hi);
    let mut newton_iterations = 0;
    for _ in 0..50 {
        let r = line_reaction(p, lambda, u);
        if r == 0.0 {
            break;
        }
        if r > 0.0 {
            lo = lo.max(u);
        } else {
            hi = hi.min(u);
        }
        let slope = line_reaction_slope(p, lambda, u);
        let mut next = u - r / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        newton_iterations += 1;
        if (next - u).abs() <= 4.0 * f64::EPSILON * u.abs().max(f64::MIN_POSITIVE) {
            u = next;
            break;
        }
        u = next;
    }

    let v = (lambda - u) / p.tau;
    let equilibrium = HomogeneousEquilibrium {
        lambda,
        u_star: u,
        v_star: v,
        residual: p.reaction_unchecked(u, v),
    };
    Ok(EquilibriumSolve {
        equilibrium,
        trace,
        newton_iterations,
    })
}

/// u* = aλ / (a + τδ) for a constant activation a.
pub fn constant_a_equilibrium(a: f64, tau: f64, delta: f64, lambda: f64) -> f64 {
    a * lambda / (a + tau * delta)
}

/// Trajectory of the reduced ODE `U′ = −δU + a(U)(λ − U)/τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeTrajectory {
    pub lambda: f64,
    pub tau: f64,
    pub times: Vec<f64>,
    pub u: Vec<f64>,
    /// G(U(t)), the primitive of the right side; nondecreasing in t.
    pub g: Vec<f64>,
}

impl OdeTrajectory {
    /// V = (λ − U)/τ at sample `i`.
    pub fn v(&self, i: usize) -> f64 {
        (self.lambda - self.u[i]) / self.tau
    }

    pub fn final_u(&self) -> f64 {
        *self
            .u
            .last()
            .expect("trajectory has at least the initial point")
    }
}

/// Maximum number of step halvings before giving up.
pub const MAX_HALVINGS: u32 = 20;

/// Classical RK4 on the reduced ODE with fixed step `dt` (shortened so that
/// it divides `t_end`). A step leaving `[0, λ]` by more than `1e-9·max(1, λ)`
/// is redone as two half steps, recursively up to [`MAX_HALVINGS`] times.
pub fn integrate_homogeneous_ode(
    p: &Model4Params,
    lambda: f64,
    u0: f64,
    t_end: f64,
    dt: f64,
) -> Result<OdeTrajectory> {
    p.validate()?;
    positive("lambda", lambda)?;
    positive("dt", dt)?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "t_end",
            value: t_end,
            reason: "must be >= 0",
        });
    }
    if !(0.0..=lambda).contains(&u0) {
        return Err(Error::InvalidParameter {
            name: "U0",
            value: u0,
            reason: "must lie in [0, lambda]",
        });
    }
    let steps = libm::ceil(t_end / dt - 1e-9).max(0.0) as usize;
    let h = if steps == 0 {
        0.0
    } else {
        t_end / steps as f64
    };
    let tol = 1e-9 * lambda.max(1.0);

    let mut traj = OdeTrajectory {
        lambda,
        tau: p.tau,
        times: Vec::with_capacity(steps + 1),
        u: Vec::with_capacity(steps + 1),
        g: Vec::with_capacity(steps + 1),
    };
    let mut u = u0;
    traj.times.push(0.0);
    traj.u.push(u);
    traj.g.push(p.reduced_primitive(lambda, u)?);
    for i in 1..=steps {
        u = guarded_step(p, lambda, u, h, tol, MAX_HALVINGS).ok_or(Error::OdeLeftInterval {
            t: i as f64 * h,
            value: u,
        })?;
        traj.times.push(i as f64 * h);
        traj.u.push(u);
        traj.g.push(p.reduced_primitive(lambda, u.max(0.0))?);
    }
    Ok(traj)
}

fn guarded_step(
    p: &Model4Params,
    lambda: f64,
    u: f64,
    h: f64,
    tol: f64,
    halvings: u32,
) -> Option<f64> {
    let next = rk4(p, lambda, u, h);
    if next >= -tol && next <= lambda + tol && next.is_finite() {
        return Some(next);
    }
    if halvings == 0 {
        return None;
    }
    let mid = guarded_step(p, lambda, u, 0.5 * h, tol, halvings - 1)?;
    guarded_step(p, lambda, mid, 0.5 * h, tol, halvings - 1)
}

fn rk4(p: &Model4Params, lambda: f64, u: f64, h: f64) -> f64 {
    let f = |x: f64| p.reduced_rate(lambda, x);
    let k1 = f(u);
    let k2 = f(u + 0.5 * h * k1);
    let k3 = f(u + 0.5 * h * k2);
    let k4 = f(u + h * k3);
    u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}
