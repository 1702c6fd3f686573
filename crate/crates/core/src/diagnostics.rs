//! Measurements along a run: conserved quantities, deviation norms,
//! Lyapunov functionals with their energy-identity residuals, variational
//! functionals, sufficient-condition checks, decay rates and ω-limit checks.
//!
//! Lyapunov functionals and their identities use unnormalized integrals.
//! Means, deviation norms and the pairing `(w − w̄, u + τv − λ)` are
//! normalized by `|Ω|`. Time derivatives are centered differences over
//! stored frames, so nothing here depends on solver internals.

use alloc::vec;
use alloc::vec::Vec;

use crate::equilibrium::solve_equilibrium;
use crate::error::{nonnegative, positive, Error, Result};
use crate::grid::{Field, Grid};
use crate::kinetics::{Model1Params, Model2Params, Model4Params, ModelParams};
use crate::linalg::inverse_neg_laplacian;
use crate::solver::{run_with_stepper, RunFailure, SimState, Stepper};

/// Tolerance of the `(−Δʰ)⁻¹` solve in the model-4 energy.
const ENERGY_SOLVE_TOL: f64 = 1e-14;

// ---------------------------------------------------------------------------
// Condition checks
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mu2Source {
    /// Second Neumann eigenvalue of the continuum domain.
    Continuum,
    /// Second eigenvalue of the discrete Laplacian on the grid.
    Discrete,
    /// Supplied directly by the caller.
    Given,
}

/// The second Neumann eigenvalue used by a check, with its origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mu2 {
    pub value: f64,
    pub source: Mu2Source,
}

impl Mu2 {
    pub fn continuum(grid: &Grid) -> Self {
        Self {
            value: grid.neumann_eigenvalue(2),
            source: Mu2Source::Continuum,
        }
    }

    pub fn discrete(grid: &Grid) -> Self {
        Self {
            value: grid.discrete_eigenvalue(2),
            source: Mu2Source::Discrete,
        }
    }

    pub fn given(value: f64) -> Self {
        Self {
            value,
            source: Mu2Source::Given,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaSource {
    /// From [`sufficient_sigma`].
    Sufficient,
    /// Supplied by the user.
    Override,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sigma {
    pub value: f64,
    pub source: SigmaSource,
}

impl Sigma {
    pub fn sufficient(p: &Model4Params, mu2: Mu2, c4: f64) -> Result<Self> {
        Ok(Self {
            value: sufficient_sigma(p, mu2, c4)?,
            source: SigmaSource::Sufficient,
        })
    }

    pub fn overridden(value: f64) -> Self {
        Self {
            value,
            source: SigmaSource::Override,
        }
    }
}

/// One evaluated inequality `lhs < rhs` (strict) or `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub strict: bool,
    pub satisfied: bool,
    pub mu2: Mu2,
    pub sigma: Option<Sigma>,
    pub c4: Option<f64>,
}

impl ConditionReport {
    fn new(name: &'static str, lhs: f64, rhs: f64, strict: bool, mu2: Mu2) -> Self {
        let satisfied = if strict { lhs < rhs } else { lhs <= rhs };
        Self {
            name,
            lhs,
            rhs,
            strict,
            satisfied,
            mu2,
            sigma: None,
            c4: None,
        }
    }
}

/// `2|ξ|a₁ < τ³(μ₂D + δ)` and the variant `2ξ²a₁ < τ³(μ₂D + δ)`, in that
/// order.
pub fn check_technical(p: &Model4Params, mu2: Mu2) -> Result<[ConditionReport; 2]> {
    p.validate()?;
    positive("mu2", mu2.value)?;
    let xi = p.xi();
    let rhs = p.tau * p.tau * p.tau * (mu2.value * p.diffusion + p.delta);
    Ok([
        ConditionReport::new("technical", 2.0 * xi.abs() * p.a1(), rhs, true, mu2),
        ConditionReport::new("technical-squared", 2.0 * xi * xi * p.a1(), rhs, true, mu2),
    ])
}

/// `a₁(1 + 1/(2τ)) + (4/D)(μ₂⁻¹·α·C₄·λ)² ≤ (Dμ₂ + δ)/2` with `α` the
/// supremum of `a′`.
pub fn check_if(p: &Model4Params, lambda: f64, mu2: Mu2, c4: f64) -> Result<ConditionReport> {
    p.validate()?;
    positive("lambda", lambda)?;
    positive("mu2", mu2.value)?;
    positive("C4", c4)?;
    let growth = p.slope_sup() * c4 * lambda / mu2.value;
    let lhs = p.a1() * (1.0 + 0.5 / p.tau) + 4.0 / p.diffusion * growth * growth;
    let rhs = 0.5 * (p.diffusion * mu2.value + p.delta);
    let mut report = ConditionReport::new("if", lhs, rhs, false, mu2);
    report.c4 = Some(c4);
    Ok(report)
}

/// A σ for which `σ(1 + λ²/D) ≤ Dμ₂ + δ` implies [`check_if`].
///
/// With `A = α·C₄/μ₂`, take `σ = max(2a₁(1 + 1/(2τ)), 8A²)`. Then
/// `a₁(1 + 1/(2τ)) ≤ σ/2` and `(4/D)A²λ² ≤ σλ²/(2D)`, so the left side of
/// the `if` condition is at most `σ(1 + λ²/D)/2 ≤ (Dμ₂ + δ)/2`.
pub fn sufficient_sigma(p: &Model4Params, mu2: Mu2, c4: f64) -> Result<f64> {
    p.validate()?;
    positive("mu2", mu2.value)?;
    positive("C4", c4)?;
    let growth = p.slope_sup() * c4 / mu2.value;
    Ok((2.0 * p.a1() * (1.0 + 0.5 / p.tau)).max(8.0 * growth * growth))
}

/// `σ(1 + λ²/D) ≤ Dμ₂ + δ`.
pub fn check_sigma(
    p: &Model4Params,
    lambda: f64,
    mu2: Mu2,
    sigma: Sigma,
) -> Result<ConditionReport> {
    p.validate()?;
    positive("lambda", lambda)?;
    positive("mu2", mu2.value)?;
    nonnegative("sigma", sigma.value)?;
    let lhs = sigma.value * (1.0 + lambda * lambda / p.diffusion);
    let rhs = p.diffusion * mu2.value + p.delta;
    let mut report = ConditionReport::new("sigma", lhs, rhs, false, mu2);
    report.sigma = Some(sigma);
    Ok(report)
}

/// All four reports: both technical variants, `if`, and the σ condition
/// (with `sigma` or, if absent, [`sufficient_sigma`]).
pub fn check_all(
    p: &Model4Params,
    lambda: f64,
    mu2: Mu2,
    c4: f64,
    sigma: Option<f64>,
) -> Result<Vec<ConditionReport>> {
    let [a, b] = check_technical(p, mu2)?;
    let sigma = match sigma {
        Some(s) => Sigma::overridden(s),
        None => Sigma::sufficient(p, mu2, c4)?,
    };
    let mut s = check_sigma(p, lambda, mu2, sigma)?;
    s.c4 = Some(c4);
    Ok(vec![a, b, check_if(p, lambda, mu2, c4)?, s])
}

// ---------------------------------------------------------------------------
// Functionals
// ---------------------------------------------------------------------------

fn weighted_sum(grid: &Grid, f: impl Fn(usize) -> f64) -> f64 {
    (0..grid.len()).map(|i| grid.weight(i) * f(i)).sum()
}

/// `ξ∫((D/2)|∇u|² − Q(u)) + (τk/2)‖w‖₂²`.
pub fn lyapunov_model1(grid: &Grid, u: &Field, w: &Field, p: &Model1Params) -> Result<f64> {
    grid.check(u)?;
    grid.check(w)?;
    let uv = u.values();
    let wv = w.values();
    Ok(p.xi()
        * (0.5 * p.diffusion * grid.grad_sq_integral(uv)
            - weighted_sum(grid, |i| p.q_primitive(uv[i])))
        + 0.5 * p.tau * p.coupling * grid.dot(wv, wv))
}

/// `∫((α + D)/2)|∇w|² + (k/2)w² + (ξD/2)|∇z|² − ξG(z)` with `k = α₁`.
pub fn lyapunov_model2(grid: &Grid, z: &Field, w: &Field, p: &Model2Params) -> Result<f64> {
    grid.check(z)?;
    grid.check(w)?;
    let zv = z.values();
    let wv = w.values();
    let xi = p.xi();
    Ok(0.5 * (p.alpha() + p.diffusion) * grid.grad_sq_integral(wv)
        + 0.5 * p.coupling() * grid.dot(wv, wv)
        + 0.5 * xi * p.diffusion * grid.grad_sq_integral(zv)
        - xi * weighted_sum(grid, |i| p.g_primitive_unchecked(zv[i])))
}

/// Normalized `H⁻¹` energy `½((−Δ)⁻¹ψ, ψ)` of `ψ = u + τv − mean(u + τv)`.
///
/// Since `ψ_t = Δw`, it obeys `dE/dt + (w − w̄, ψ) = 0` for every model.
pub fn mass_energy(grid: &Grid, u: &Field, v: &Field, tau: f64) -> Result<f64> {
    let psi = mass_deviation(grid, u, v, tau)?;
    let phi = inverse_neg_laplacian(grid, &psi, ENERGY_SOLVE_TOL)?;
    Ok(0.5 * grid.dot(&phi, &psi) / grid.volume())
}

fn mass_deviation(grid: &Grid, u: &Field, v: &Field, tau: f64) -> Result<Vec<f64>> {
    grid.check(u)?;
    grid.check(v)?;
    let total: Vec<f64> = u
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, b)| a + tau * b)
        .collect();
    let mean = grid.integrate(&total) / grid.volume();
    Ok(total.into_iter().map(|x| x - mean).collect())
}

/// `(w − w̄, u + τv − λ)`, normalized, with `λ = mean(u + τv)`. For the
/// transform `w = Du + v` this equals `(w − w̄, τw + ξu − λ)`.
pub fn pairing_integrand(
    grid: &Grid,
    u: &Field,
    v: &Field,
    diffusion: f64,
    tau: f64,
) -> Result<f64> {
    let psi = mass_deviation(grid, u, v, tau)?;
    let w = u.combine(diffusion, v, 1.0);
    let dev = grid.deviation(&w);
    Ok(grid.dot(dev.values(), &psi) / grid.volume())
}

/// `∫(D/2)|∇v|² − Q(v) − (k/τ)λv + (kξ/(2τ|Ω|))(∫v)²`.
///
/// The nonlocal term carries a plus sign so that critical points solve
/// `−DΔu = q(u) + (k/τ)(λ − ξū)`.
pub fn j_lambda_model1(grid: &Grid, v: &Field, p: &Model1Params, lambda: f64) -> Result<f64> {
    grid.check(v)?;
    let vv = v.values();
    let total = grid.integrate(vv);
    let k = p.coupling;
    Ok(0.5 * p.diffusion * grid.grad_sq_integral(vv)
        - weighted_sum(grid, |i| p.q_primitive(vv[i]))
        - k / p.tau * lambda * total
        + k * p.xi() / (2.0 * p.tau * grid.volume()) * total * total)
}

/// `∫(D/2)|∇z|² − G(z) − kλz + (kξ/(2|Ω|))(∫z)²` with `k = α₁`.
pub fn j_lambda_model2(grid: &Grid, z: &Field, p: &Model2Params, lambda: f64) -> Result<f64> {
    grid.check(z)?;
    let zv = z.values();
    let total = grid.integrate(zv);
    let k = p.coupling();
    Ok(0.5 * p.diffusion * grid.grad_sq_integral(zv)
        - weighted_sum(grid, |i| p.g_primitive_unchecked(zv[i]))
        - k * lambda * total
        + k * p.xi() / (2.0 * grid.volume()) * total * total)
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

/// One row of the diagnostics table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// mean(u + τv).
    pub lambda: f64,
    pub u_mean: f64,
    pub v_mean: f64,
    pub w_mean: f64,
    pub u_dev_l2: f64,
    pub u_dev_linf: f64,
    pub v_dev_linf: f64,
    pub w_dev_l2: f64,
    /// Model 1 and 2: their Lyapunov functional. Model 4: [`mass_energy`].
    pub lyapunov: f64,
    /// `|dL/dt + dissipation|` by finite differences across frames.
    pub identity_residual: f64,
    /// `max(‖u − u*‖∞, ‖v − v*‖∞)` for model 4; NaN otherwise.
    pub eq_distance: f64,
    pub v_l2: f64,
    pub pairing_integrand: f64,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 14] = [
        "t",
        "lambda",
        "u_mean",
        "v_mean",
        "w_mean",
        "u_dev_l2",
        "u_dev_linf",
        "v_dev_linf",
        "w_dev_l2",
        "lyapunov",
        "identity_residual",
        "eq_distance",
        "v_l2",
        "pairing_integrand",
    ];

    pub fn values(&self) -> [f64; 14] {
        [
            self.t,
            self.lambda,
            self.u_mean,
            self.v_mean,
            self.w_mean,
            self.u_dev_l2,
            self.u_dev_linf,
            self.v_dev_linf,
            self.w_dev_l2,
            self.lyapunov,
            self.identity_residual,
            self.eq_distance,
            self.v_l2,
            self.pairing_integrand,
        ]
    }
}

/// Evaluates per-frame quantities for one run.
#[derive(Debug, Clone)]
pub struct Monitor<'a> {
    grid: &'a Grid,
    params: ModelParams,
    lambda: f64,
    equilibrium: Option<(f64, f64)>,
}

impl<'a> Monitor<'a> {
    /// `lambda` is the conserved mean of `u + τv`. For model 4 the
    /// homogeneous equilibrium is solved once; if that fails the distance
    /// column is NaN.
    pub fn new(grid: &'a Grid, params: ModelParams, lambda: f64) -> Result<Self> {
        params.validate()?;
        positive("lambda", lambda)?;
        let equilibrium = match params {
            ModelParams::Model4(p) => solve_equilibrium(&p, lambda)
                .ok()
                .map(|e| (e.u_star, e.v_star)),
            _ => None,
        };
        Ok(Self {
            grid,
            params,
            lambda,
            equilibrium,
        })
    }

    pub fn for_state(grid: &'a Grid, params: ModelParams, state: &SimState) -> Result<Self> {
        Self::new(grid, params, state.lambda(grid, params.tau()))
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `(u*, v*)` for model 4 when it could be computed.
    pub fn equilibrium(&self) -> Option<(f64, f64)> {
        self.equilibrium
    }

    fn w(&self, s: &SimState) -> Field {
        s.u.combine(self.params.diffusion(), &s.v, 1.0)
    }

    pub fn lyapunov(&self, s: &SimState) -> Result<f64> {
        match &self.params {
            ModelParams::Model1(p) => lyapunov_model1(self.grid, &s.u, &self.w(s), p),
            ModelParams::Model2(p) => {
                let z = s.u.combine(1.0, &s.v, 1.0);
                lyapunov_model2(self.grid, &z, &self.w(s), p)
            }
            ModelParams::Model4(p) => mass_energy(self.grid, &s.u, &s.v, p.tau),
        }
    }

    /// Dissipation terms that need no time derivative.
    fn instantaneous_dissipation(&self, s: &SimState) -> Result<f64> {
        let grid = self.grid;
        match &self.params {
            ModelParams::Model1(p) => Ok(p.coupling * grid.grad_sq_integral(self.w(s).values())),
            ModelParams::Model2(p) => {
                let w = self.w(s);
                let mut lap = vec![0.0; grid.len()];
                grid.laplacian_into(w.values(), &mut lap);
                let alpha = p.alpha();
                Ok(alpha * p.diffusion * grid.dot(&lap, &lap)
                    + alpha * p.coupling() * grid.grad_sq_integral(w.values()))
            }
            ModelParams::Model4(p) => pairing_integrand(grid, &s.u, &s.v, p.diffusion, p.tau),
        }
    }

    /// Dissipation terms built from the difference quotient `(b − a)/(t_b − t_a)`.
    fn rate_dissipation(&self, a: &SimState, b: &SimState) -> f64 {
        let dt = b.t - a.t;
        let rate = |x: &Field, y: &Field| -> Vec<f64> {
            x.values()
                .iter()
                .zip(y.values())
                .map(|(p, q)| (q - p) / dt)
                .collect()
        };
        let grid = self.grid;
        match &self.params {
            ModelParams::Model1(p) => {
                let ut = rate(&a.u, &b.u);
                p.xi() * grid.dot(&ut, &ut)
            }
            ModelParams::Model2(p) => {
                let za = a.u.combine(1.0, &a.v, 1.0);
                let zb = b.u.combine(1.0, &b.v, 1.0);
                let zt = rate(&za, &zb);
                let wt = rate(&self.w(a), &self.w(b));
                p.xi() * grid.dot(&zt, &zt) + grid.dot(&wt, &wt)
            }
            ModelParams::Model4(_) => 0.0,
        }
    }

    /// `|dL/dt + dissipation|` at `cur`, with derivatives from `(next − prev)`.
    /// Passing `cur` as `prev` or `next` gives a one-sided difference.
    pub fn identity_residual(
        &self,
        prev: &SimState,
        cur: &SimState,
        next: &SimState,
    ) -> Result<f64> {
        if next.t <= prev.t {
            return Err(Error::InsufficientRecords {
                needed: 2,
                found: 1,
            });
        }
        let dl = (self.lyapunov(next)? - self.lyapunov(prev)?) / (next.t - prev.t);
        Ok((dl + self.instantaneous_dissipation(cur)? + self.rate_dissipation(prev, next)).abs())
    }

    /// All columns of `s` except the identity residual, which is supplied.
    pub fn record(&self, s: &SimState, identity_residual: f64) -> Result<DiagnosticsRecord> {
        let grid = self.grid;
        let tau = self.params.tau();
        let w = self.w(s);
        let u_dev = grid.deviation(&s.u);
        let v_dev = grid.deviation(&s.v);
        let eq_distance = match self.equilibrium {
            Some((us, vs)) => {
                let du =
                    s.u.values()
                        .iter()
                        .fold(0.0f64, |m, x| m.max((x - us).abs()));
                let dv =
                    s.v.values()
                        .iter()
                        .fold(0.0f64, |m, x| m.max((x - vs).abs()));
                du.max(dv)
            }
            None => f64::NAN,
        };
        Ok(DiagnosticsRecord {
            t: s.t,
            lambda: s.lambda(grid, tau),
            u_mean: grid.mean(&s.u),
            v_mean: grid.mean(&s.v),
            w_mean: grid.mean(&w),
            u_dev_l2: grid.l2_norm(&u_dev),
            u_dev_linf: grid.linf_norm(&u_dev),
            v_dev_linf: grid.linf_norm(&v_dev),
            w_dev_l2: grid.l2_norm(&grid.deviation(&w)),
            lyapunov: self.lyapunov(s)?,
            identity_residual,
            eq_distance,
            v_l2: grid.l2_norm(&s.v),
            pairing_integrand: pairing_integrand(grid, &s.u, &s.v, self.params.diffusion(), tau)?,
        })
    }
}

/// Centered identity residuals `(t, residual)` at every interior frame.
pub fn identity_residuals(monitor: &Monitor<'_>, frames: &[SimState]) -> Result<Vec<(f64, f64)>> {
    if frames.len() < 3 {
        return Err(Error::InsufficientRecords {
            needed: 3,
            found: frames.len(),
        });
    }
    frames
        .windows(3)
        .map(|w| Ok((w[1].t, monitor.identity_residual(&w[0], &w[1], &w[2])?)))
        .collect()
}

/// Largest centered identity residual over the frames.
pub fn max_identity_residual(monitor: &Monitor<'_>, frames: &[SimState]) -> Result<f64> {
    Ok(identity_residuals(monitor, frames)?
        .into_iter()
        .fold(0.0, |m, (_, r)| m.max(r)))
}

/// Turns a stream of frames into records with one frame of lag, so that
/// interior residuals are centered. The first and last records use
/// one-sided differences.
#[derive(Debug)]
pub struct Recorder<'a> {
    monitor: Monitor<'a>,
    prev: Option<SimState>,
    cur: Option<SimState>,
}

impl<'a> Recorder<'a> {
    pub fn new(monitor: Monitor<'a>) -> Self {
        Self {
            monitor,
            prev: None,
            cur: None,
        }
    }

    pub fn monitor(&self) -> &Monitor<'a> {
        &self.monitor
    }

    /// Accepts the next frame and returns the record of the previous one.
    pub fn push(&mut self, state: &SimState) -> Result<Option<DiagnosticsRecord>> {
        let out = match &self.cur {
            Some(cur) => {
                let prev = self.prev.as_ref().unwrap_or(cur);
                let r = self.monitor.identity_residual(prev, cur, state)?;
                Some(self.monitor.record(cur, r)?)
            }
            None => None,
        };
        self.prev = self.cur.take();
        self.cur = Some(state.clone());
        Ok(out)
    }

    /// Record of the last frame, if any.
    pub fn finish(self) -> Result<Option<DiagnosticsRecord>> {
        match (self.prev, self.cur) {
            (Some(prev), Some(cur)) => {
                let r = self.monitor.identity_residual(&prev, &cur, &cur)?;
                Ok(Some(self.monitor.record(&cur, r)?))
            }
            (None, Some(cur)) => Ok(Some(self.monitor.record(&cur, f64::NAN)?)),
            _ => Ok(None),
        }
    }
}

/// Result of [`run_with_diagnostics`].
#[derive(Debug)]
pub struct DiagnosedRun {
    pub outcome: core::result::Result<SimState, RunFailure>,
    pub records: Vec<DiagnosticsRecord>,
    /// First error raised while evaluating diagnostics; the run itself
    /// continues regardless.
    pub diagnostics_error: Option<Error>,
}

/// Runs the stepper and records diagnostics for every emitted frame.
/// `on_frame` sees each frame and `on_record` each finished record.
pub fn run_with_diagnostics(
    stepper: &Stepper<'_>,
    monitor: Monitor<'_>,
    ic: (Field, Field),
    mut on_frame: impl FnMut(&SimState),
    mut on_record: impl FnMut(&DiagnosticsRecord),
) -> DiagnosedRun {
    let mut recorder = Recorder::new(monitor);
    let mut records = Vec::new();
    let mut diagnostics_error = None;
    let outcome = run_with_stepper(stepper, ic, |s| {
        on_frame(s);
        if diagnostics_error.is_some() {
            return;
        }
        match recorder.push(s) {
            Ok(Some(r)) => {
                on_record(&r);
                records.push(r);
            }
            Ok(None) => {}
            Err(e) => diagnostics_error = Some(e),
        }
    });
    if diagnostics_error.is_none() {
        match recorder.finish() {
            Ok(Some(r)) => {
                on_record(&r);
                records.push(r);
            }
            Ok(None) => {}
            Err(e) => diagnostics_error = Some(e),
        }
    }
    DiagnosedRun {
        outcome,
        records,
        diagnostics_error,
    }
}

// ---------------------------------------------------------------------------
// Post-processing
// ---------------------------------------------------------------------------

/// Norm columns usable for decay-rate fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormColumn {
    UDevL2,
    UDevLinf,
    VDevLinf,
    WDevL2,
}

impl NormColumn {
    pub fn get(self, r: &DiagnosticsRecord) -> f64 {
        match self {
            NormColumn::UDevL2 => r.u_dev_l2,
            NormColumn::UDevLinf => r.u_dev_linf,
            NormColumn::VDevLinf => r.v_dev_linf,
            NormColumn::WDevL2 => r.w_dev_l2,
        }
    }
}

/// Which records enter a decay fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayWindow {
    /// Fraction of eligible records, taken from the end.
    pub fraction: f64,
    /// Records below `relative_floor · max(column)` are ignored.
    pub relative_floor: f64,
    /// Records below `absolute_floor · max(1, |ū|)` are ignored.
    pub absolute_floor: f64,
    /// Minimum number of eligible records for a fit.
    pub min_points: usize,
}

impl Default for DecayWindow {
    fn default() -> Self {
        Self {
            fraction: 0.5,
            relative_floor: 1e-9,
            absolute_floor: 1e-12,
            min_points: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEstimate {
    /// `−d log‖·‖/dt`; `+∞` when `converged`.
    pub rate: f64,
    /// Too few records above the round-off floor to fit.
    pub converged: bool,
    pub points: usize,
}

pub fn estimate_decay_rate(
    records: &[DiagnosticsRecord],
    column: NormColumn,
) -> Result<DecayEstimate> {
    estimate_decay_rate_with(records, column, DecayWindow::default())
}

/// Least-squares slope of `log‖·‖` against `t` over the trailing
/// `window.fraction` of the records whose value is above the floors.
pub fn estimate_decay_rate_with(
    records: &[DiagnosticsRecord],
    column: NormColumn,
    window: DecayWindow,
) -> Result<DecayEstimate> {
    if records.len() < window.min_points {
        return Err(Error::InsufficientRecords {
            needed: window.min_points,
            found: records.len(),
        });
    }
    let peak = records.iter().map(|r| column.get(r)).fold(0.0f64, f64::max);
    let eligible: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| {
            let x = column.get(r);
            x > window.relative_floor * peak && x > window.absolute_floor * r.u_mean.abs().max(1.0)
        })
        .map(|r| (r.t, libm::log(column.get(r))))
        .collect();
    if eligible.len() < window.min_points {
        return Ok(DecayEstimate {
            rate: f64::INFINITY,
            converged: true,
            points: eligible.len(),
        });
    }
    let take = (libm::ceil(window.fraction * eligible.len() as f64) as usize)
        .max(window.min_points)
        .min(eligible.len());
    let tail = &eligible[eligible.len() - take..];
    let n = tail.len() as f64;
    let (mt, my) = tail
        .iter()
        .fold((0.0, 0.0), |(a, b), (t, y)| (a + t / n, b + y / n));
    let (sxy, sxx) = tail.iter().fold((0.0, 0.0), |(a, b), (t, y)| {
        (a + (t - mt) * (y - my), b + (t - mt) * (t - mt))
    });
    if sxx == 0.0 {
        return Err(Error::InsufficientRecords {
            needed: 2,
            found: 1,
        });
    }
    Ok(DecayEstimate {
        rate: -sxy / sxx,
        converged: false,
        points: tail.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaLimitReport {
    pub lambda: f64,
    /// `|ū + τv̄ − λ| / λ`.
    pub mass_defect: f64,
    /// `mass_defect ≤ tol`.
    pub in_f_lambda: bool,
    /// `max(‖u − ū‖∞, ‖v − v̄‖∞)`.
    pub inhomogeneity: f64,
    /// `|ū − u*|` and `|v̄ − v*|` for model 4; NaN otherwise.
    pub u_distance: f64,
    pub v_distance: f64,
    /// Both distances and the inhomogeneity are within `tol`.
    pub at_equilibrium: bool,
    pub tol: f64,
}

/// Checks `ū + τv̄ = λ` and reports the distance to `(u*(λ), v*(λ))`.
pub fn omega_limit_check(
    grid: &Grid,
    state: &SimState,
    params: &ModelParams,
    lambda: f64,
    tol: f64,
) -> Result<OmegaLimitReport> {
    params.validate()?;
    positive("lambda", lambda)?;
    positive("tol", tol)?;
    let tau = params.tau();
    let um = grid.mean(&state.u);
    let vm = grid.mean(&state.v);
    let mass_defect = (um + tau * vm - lambda).abs() / lambda;
    let inhomogeneity = grid
        .linf_norm(&grid.deviation(&state.u))
        .max(grid.linf_norm(&grid.deviation(&state.v)));
    let (u_distance, v_distance) = match params {
        ModelParams::Model4(p) => match solve_equilibrium(p, lambda) {
            Ok(e) => ((um - e.u_star).abs(), (vm - e.v_star).abs()),
            Err(_) => (f64::NAN, f64::NAN),
        },
        _ => (f64::NAN, f64::NAN),
    };
    Ok(OmegaLimitReport {
        lambda,
        mass_defect,
        in_f_lambda: mass_defect <= tol,
        inhomogeneity,
        u_distance,
        v_distance,
        at_equilibrium: u_distance <= tol && v_distance <= tol && inhomogeneity <= tol,
        tol,
    })
}

/// Running trapezoid integral of the `pairing_integrand` column.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingMonitor {
    /// Cumulative value at each record time.
    pub cumulative: Vec<f64>,
    pub supremum: f64,
}

impl PairingMonitor {
    pub fn last(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

pub fn pairing_estimate_monitor(records: &[DiagnosticsRecord]) -> PairingMonitor {
    let mut cumulative = Vec::with_capacity(records.len());
    let mut acc = 0.0;
    let mut supremum = 0.0f64;
    for (i, r) in records.iter().enumerate() {
        if i > 0 {
            let p = &records[i - 1];
            acc += 0.5 * (r.t - p.t) * (r.pairing_integrand + p.pairing_integrand);
        }
        supremum = supremum.max(acc);
        cumulative.push(acc);
    }
    PairingMonitor {
        cumulative,
        supremum,
    }
}

/// `sup ‖v‖₂ / λ` over records with `t ≥ t_from`.
pub fn v_bound_constant(records: &[DiagnosticsRecord], t_from: f64) -> Option<f64> {
    records
        .iter()
        .filter(|r| r.t >= t_from)
        .map(|r| r.v_l2 / r.lambda)
        .fold(None, |m, x| Some(m.map_or(x, |m: f64| m.max(x))))
}
