//! Mass-conservative IMEX time stepping.
//!
//! Diffusion is implicit (backward Euler or Crank–Nicolson) and the reaction
//! is explicit. With backward Euler (θ = 1) one step reads
//!
//! ```text
//! (I − θ·dt·D·Δʰ) uⁿ⁺¹ = (I + (1−θ)·dt·D·Δʰ) uⁿ + dt·f(uⁿ, vⁿ)
//! (I − θ·dt/τ·Δʰ) vⁿ⁺¹ = (I + (1−θ)·dt/τ·Δʰ) vⁿ − dt/τ·f(uⁿ, vⁿ)
//! ```
//!
//! With Crank–Nicolson (θ = 1/2) `f(uⁿ, vⁿ)` is replaced by the average of
//! its values at the old level and at a predictor for the new level.
//!
//! The same `f` enters both equations with opposite signs and the weighted
//! Laplacian has zero column sums, so `∫(u + τv)` is preserved up to the
//! accuracy of the linear solves. Negative values trigger step halving; the
//! fields are never clipped.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{positive, Error, Result};
use crate::grid::{Field, Grid};
use crate::kinetics::ModelParams;
use crate::linalg::solve_shifted;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// θ = 1.
    ImexBackwardEuler,
    /// θ = 1/2 with a Heun corrector for the reaction.
    ImexCrankNicolson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// Emit a frame every `stride` steps (and always at the end).
    pub stride: usize,
    /// Maximum depth of step halving after a positivity failure.
    pub retry_limit: u32,
    /// Relative residual tolerance of the 2D conjugate-gradient solves.
    pub linear_tol: f64,
    pub max_linear_iter: usize,
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            scheme: Scheme::ImexBackwardEuler,
            stride: 1,
            retry_limit: 10,
            linear_tol: 1e-13,
            max_linear_iter: 20_000,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    /// `0.5 · 0.25 · min(h²/(2D), h²τ/2)` over the finest axis.
    pub fn default_dt(grid: &Grid, params: &ModelParams) -> f64 {
        let h = (0..grid.dim())
            .map(|a| grid.spacing(a))
            .fold(f64::INFINITY, f64::min);
        let h2 = h * h;
        0.5 * 0.25 * (h2 / (2.0 * params.diffusion())).min(h2 * params.tau() / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        positive("dt", self.dt)?;
        positive("t_end", self.t_end)?;
        positive("linear_tol", self.linear_tol)?;
        if self.stride == 0 {
            return Err(Error::InvalidParameter {
                name: "stride",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        Ok(())
    }

    /// Number of steps and the step actually used: `dt` is shortened so that
    /// an integer number of steps reaches `t_end`.
    pub fn schedule(&self) -> (usize, f64) {
        let n = libm::ceil(self.t_end / self.dt - 1e-9).max(1.0) as usize;
        (n, self.t_end / n as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u: Field,
    pub v: Field,
}

impl SimState {
    pub fn new(grid: &Grid, t: f64, u: Field, v: Field) -> Result<Self> {
        grid.check(&u)?;
        grid.check(&v)?;
        Ok(Self { t, u, v })
    }

    /// λ = mean(u + τv).
    pub fn lambda(&self, grid: &Grid, tau: f64) -> f64 {
        (grid.integrate(self.u.values()) + tau * grid.integrate(self.v.values())) / grid.volume()
    }

    fn min_value(&self) -> f64 {
        self.u.min().min(self.v.min())
    }

    fn scale(&self) -> f64 {
        let m = |f: &Field| f.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        1f64.max(m(&self.u)).max(m(&self.v))
    }
}

/// w = D·u + v.
pub fn transform_w(state: &SimState, diffusion: f64) -> Field {
    state.u.combine(diffusion, &state.v, 1.0)
}

/// z = u + v.
pub fn transform_z(state: &SimState) -> Field {
    state.u.combine(1.0, &state.v, 1.0)
}

/// Extra source terms `(s_u, s_v)` added to `u_t` and `v_t`; used for
/// manufactured-solution verification.
pub trait Forcing {
    fn source(&self, t: f64, x: f64, y: f64) -> (f64, f64);
}

/// Advances a [`SimState`] by one configured step.
pub struct Stepper<'a> {
    grid: &'a Grid,
    params: ModelParams,
    cfg: SolverConfig,
    forcing: Option<&'a dyn Forcing>,
}

impl<'a> Stepper<'a> {
    pub fn new(grid: &'a Grid, params: ModelParams, cfg: SolverConfig) -> Result<Self> {
        params.validate()?;
        cfg.validate()?;
        Ok(Self {
            grid,
            params,
            cfg,
            forcing: None,
        })
    }

    pub fn with_forcing(mut self, forcing: &'a dyn Forcing) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// One step of size `cfg.dt`.
    pub fn step(&self, state: &SimState) -> Result<SimState> {
        self.step_by(state, self.cfg.dt)
    }

    /// One step of size `dt`; on a positivity failure it is redone as two
    /// half steps, recursively up to `cfg.retry_limit` levels.
    pub fn step_by(&self, state: &SimState, dt: f64) -> Result<SimState> {
        self.guarded(state, dt, self.cfg.retry_limit)
    }

    fn guarded(&self, state: &SimState, dt: f64, retries: u32) -> Result<SimState> {
        let next = self.advance(state, dt)?;
        let floor = -1e-9 * state.scale();
        let min = next.min_value();
        if min >= floor && next.u.is_finite() && next.v.is_finite() {
            return Ok(next);
        }
        if retries == 0 {
            return Err(Error::StepFailure {
                t: state.t,
                dt,
                min_value: min,
            });
        }
        let half = self.guarded(state, 0.5 * dt, retries - 1)?;
        self.guarded(&half, 0.5 * dt, retries - 1)
    }

    /// Single unguarded IMEX step.
    ///
    /// Backward Euler uses the reaction at the old level. Crank–Nicolson adds
    /// a Heun corrector: a predictor step supplies `f` at the new level and
    /// the step is redone with the average, which makes it second order.
    pub fn advance(&self, state: &SimState, dt: f64) -> Result<SimState> {
        let (mut src_u, mut src_v) = self.sources(state, state.t);
        if self.cfg.scheme == Scheme::ImexBackwardEuler {
            return self.implicit_update(state, dt, 1.0, &src_u, &src_v);
        }
        let predictor = self.implicit_update(state, dt, 0.5, &src_u, &src_v)?;
        let (end_u, end_v) = self.sources(&predictor, state.t + dt);
        for i in 0..src_u.len() {
            src_u[i] = 0.5 * (src_u[i] + end_u[i]);
            src_v[i] = 0.5 * (src_v[i] + end_v[i]);
        }
        self.implicit_update(state, dt, 0.5, &src_u, &src_v)
    }

    /// Explicit right-hand sides `(f + s_u, −f/τ + s_v)` at every node.
    fn sources(&self, state: &SimState, t: f64) -> (Vec<f64>, Vec<f64>) {
        let grid = self.grid;
        let tau = self.params.tau();
        let u = state.u.values();
        let v = state.v.values();
        let mut src_u = Vec::with_capacity(grid.len());
        let mut src_v = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let f = self.params.reaction(u[i], v[i]);
            let (su, sv) = match self.forcing {
                Some(src) => {
                    let (x, y) = grid.coords(i);
                    src.source(t, x, y)
                }
                None => (0.0, 0.0),
            };
            src_u.push(f + su);
            src_v.push(sv - f / tau);
        }
        (src_u, src_v)
    }

    fn implicit_update(
        &self,
        state: &SimState,
        dt: f64,
        theta: f64,
        src_u: &[f64],
        src_v: &[f64],
    ) -> Result<SimState> {
        let grid = self.grid;
        let n = grid.len();
        let d = self.params.diffusion();
        let tau = self.params.tau();
        let u = state.u.values();
        let v = state.v.values();

        let mut rhs_u: Vec<f64> = u.iter().zip(src_u).map(|(x, s)| x + dt * s).collect();
        let mut rhs_v: Vec<f64> = v.iter().zip(src_v).map(|(x, s)| x + dt * s).collect();
        if theta < 1.0 {
            let mut lap = vec![0.0; n];
            grid.laplacian_into(u, &mut lap);
            let cu = (1.0 - theta) * dt * d;
            rhs_u.iter_mut().zip(&lap).for_each(|(r, l)| *r += cu * l);
            grid.laplacian_into(v, &mut lap);
            let cv = (1.0 - theta) * dt / tau;
            rhs_v.iter_mut().zip(&lap).for_each(|(r, l)| *r += cv * l);
        }

        let mut next_u = vec![0.0; n];
        let mut next_v = vec![0.0; n];
        let (tol, iters) = (self.cfg.linear_tol, self.cfg.max_linear_iter);
        solve_shifted(grid, theta * dt * d, &rhs_u, &mut next_u, tol, iters)?;
        solve_shifted(grid, theta * dt / tau, &rhs_v, &mut next_v, tol, iters)?;
        Ok(SimState {
            t: state.t + dt,
            u: Field::from_vec(next_u),
            v: Field::from_vec(next_v),
        })
    }
}

/// Convenience wrapper: one step of `cfg.dt` from `state`.
pub fn step(
    grid: &Grid,
    state: &SimState,
    params: &ModelParams,
    cfg: &SolverConfig,
) -> Result<SimState> {
    Stepper::new(grid, *params, *cfg)?.step(state)
}

/// A run that stopped early, with the last state that passed every check.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub last_good: SimState,
    pub error: Error,
}

/// Checks that initial data are on the grid, nonnegative and not both
/// identically zero.
pub fn validate_initial(grid: &Grid, u0: &Field, v0: &Field) -> Result<()> {
    grid.check(u0)?;
    grid.check(v0)?;
    if !u0.is_finite() || !v0.is_finite() {
        return Err(Error::NonFinite {
            what: "initial data",
        });
    }
    let min = u0.min().min(v0.min());
    if min < 0.0 {
        return Err(Error::InvalidParameter {
            name: "initial data",
            value: min,
            reason: "must be nonnegative",
        });
    }
    if u0.values().iter().chain(v0.values()).all(|&x| x == 0.0) {
        return Err(Error::InvalidParameter {
            name: "initial data",
            value: 0.0,
            reason: "must not vanish identically",
        });
    }
    Ok(())
}

/// Integrates from `t = 0` to `cfg.t_end`, calling `sink` with the initial
/// state, every `cfg.stride` steps, and at the final step.
pub fn run_with_stepper(
    stepper: &Stepper<'_>,
    ic: (Field, Field),
    mut sink: impl FnMut(&SimState),
) -> core::result::Result<SimState, RunFailure> {
    let grid = stepper.grid;
    let cfg = stepper.cfg;
    let mut state = SimState {
        t: 0.0,
        u: ic.0,
        v: ic.1,
    };
    if let Err(error) = validate_initial(grid, &state.u, &state.v) {
        return Err(RunFailure {
            last_good: state,
            error,
        });
    }
    let (steps, dt) = cfg.schedule();
    sink(&state);
    for i in 1..=steps {
        match stepper.step_by(&state, dt) {
            Ok(mut next) => {
                next.t = i as f64 * dt;
                state = next;
            }
            Err(error) => {
                return Err(RunFailure {
                    last_good: state,
                    error,
                })
            }
        }
        if i % cfg.stride == 0 || i == steps {
            sink(&state);
        }
    }
    Ok(state)
}

/// [`run_with_stepper`] with a fresh, unforced stepper.
pub fn run(
    grid: &Grid,
    ic: (Field, Field),
    params: &ModelParams,
    cfg: &SolverConfig,
    sink: impl FnMut(&SimState),
) -> core::result::Result<SimState, RunFailure> {
    let stepper = match Stepper::new(grid, *params, *cfg) {
        Ok(s) => s,
        Err(error) => {
            return Err(RunFailure {
                last_good: SimState {
                    t: 0.0,
                    u: ic.0,
                    v: ic.1,
                },
                error,
            })
        }
    };
    run_with_stepper(&stepper, ic, sink)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::solve_equilibrium;
    use crate::kinetics::Model4Params;
    use core::f64::consts::PI;

    fn model4() -> Model4Params {
        Model4Params::new(4.0, 1.0, 1.0, 1.0, 1.0, 0.1, 1.0).unwrap()
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let g = Grid::line(1.0, 33).unwrap();
        let p = model4();
        let eq = solve_equilibrium(&p, 1.0).unwrap();
        let s0 = SimState::new(
            &g,
            0.0,
            Field::constant(&g, eq.u_star),
            Field::constant(&g, eq.v_star),
        )
        .unwrap();
        for scheme in [Scheme::ImexBackwardEuler, Scheme::ImexCrankNicolson] {
            let cfg = SolverConfig::new(0.01, 1.0).with_scheme(scheme);
            let s1 = step(&g, &s0, &ModelParams::Model4(p), &cfg).unwrap();
            for (a, b) in s1.u.values().iter().zip(s0.u.values()) {
                assert!((a - b).abs() <= 1e-12);
            }
            for (a, b) in s1.v.values().iter().zip(s0.v.values()) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn transforms() {
        let g = Grid::line(1.0, 5).unwrap();
        let p = Model4Params {
            tau: 0.3,
            ..model4()
        };
        let s = SimState::new(
            &g,
            0.0,
            Field::from_fn(&g, |x, _| 1.0 + x),
            Field::from_fn(&g, |x, _| 2.0 - x * x),
        )
        .unwrap();
        let w = transform_w(&s, p.diffusion);
        let z = transform_z(&s);
        for i in 0..g.len() {
            let (u, v) = (s.u.values()[i], s.v.values()[i]);
            assert_eq!(z.values()[i], u + v);
            let lhs = p.tau * w.values()[i] + p.xi() * u;
            assert!((lhs - (u + p.tau * v)).abs() < 1e-14);
        }
    }

    #[test]
    fn run_emits_on_stride_and_at_end() {
        let g = Grid::line(1.0, 17).unwrap();
        let p = ModelParams::Model4(model4());
        let cfg = SolverConfig::new(0.1, 1.05).with_stride(4);
        let mut times = Vec::new();
        let ic = (
            Field::constant(&g, 0.3),
            Field::from_fn(&g, |x, _| 0.5 + 0.1 * libm::cos(PI * x)),
        );
        run(&g, ic, &p, &cfg, |s| times.push(s.t)).unwrap();
        // 11 steps of 1.05/11
        assert_eq!(times.len(), 1 + 2 + 1);
        assert_eq!(times[0], 0.0);
        assert!((times.last().unwrap() - 1.05).abs() < 1e-12);
    }

    #[test]
    fn initial_data_checks() {
        let g = Grid::line(1.0, 5).unwrap();
        let p = ModelParams::Model4(model4());
        let cfg = SolverConfig::new(0.1, 1.0);
        let zero = || Field::constant(&g, 0.0);
        let e = run(&g, (zero(), zero()), &p, &cfg, |_| {}).unwrap_err();
        assert!(matches!(
            e.error,
            Error::InvalidParameter {
                name: "initial data",
                ..
            }
        ));
        let neg = Field::new(&g, vec![0.1, -0.1, 0.1, 0.1, 0.1]).unwrap();
        assert!(run(&g, (neg, zero()), &p, &cfg, |_| {}).is_err());
    }

    #[test]
    fn negative_overshoot_is_retried_then_fails() {
        // huge explicit reaction step drives v negative
        let g = Grid::line(1.0, 9).unwrap();
        let p = ModelParams::Model4(Model4Params::new(1.0, 0.1, 5.0, 1.0, 1.0, 1.0, 1.0).unwrap());
        let s = SimState::new(&g, 0.0, Field::constant(&g, 0.0), Field::constant(&g, 1.0)).unwrap();
        let mut cfg = SolverConfig::new(1.0, 1.0);
        cfg.retry_limit = 0;
        assert!(matches!(
            step(&g, &s, &p, &cfg),
            Err(Error::StepFailure { .. })
        ));
        cfg.retry_limit = 12;
        let next = step(&g, &s, &p, &cfg).unwrap();
        assert!(next.u.min() >= -1e-9 && next.v.min() >= -1e-9);
        let lam0 = s.lambda(&g, 0.1);
        assert!((next.lambda(&g, 0.1) - lam0).abs() <= 1e-13 * lam0);
    }

    #[test]
    fn default_dt_formula() {
        let g = Grid::line(1.0, 11).unwrap();
        let p = ModelParams::Model4(model4());
        let dt = SolverConfig::default_dt(&g, &p);
        assert!((dt - 0.125 * (0.01 / 8.0)).abs() < 1e-18);
    }
}
