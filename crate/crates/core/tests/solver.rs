//! Time-stepping accuracy, conservation and positivity.

use std::f64::consts::PI;

use polarsim_core::solver::{run, Forcing, Scheme, SimState, SolverConfig, Stepper};
use polarsim_core::{Field, Grid, Model1Params, Model2Params, Model4Params, ModelParams};

fn model4() -> Model4Params {
    Model4Params::new(4.0, 1.0, 1.0, 1.0, 1.0, 0.1, 1.0).unwrap()
}

/// Manufactured `u = 1 + ½cos(πx)e^{−t}`, `v = 1 + 0.3cos(πx)(1 + t)` on [0, 1].
/// `cos(πx)` is an exact eigenvector of the discrete Laplacian, so `mu` is
/// its discrete eigenvalue and the only error left is from time stepping.
struct Manufactured {
    p: Model4Params,
    mu: f64,
}

impl Manufactured {
    fn exact(&self, t: f64, x: f64) -> (f64, f64) {
        let c = (PI * x).cos();
        (1.0 + 0.5 * c * (-t).exp(), 1.0 + 0.3 * c * (1.0 + t))
    }
}

impl Forcing for Manufactured {
    fn source(&self, t: f64, x: f64, _y: f64) -> (f64, f64) {
        let c = (PI * x).cos();
        let (u, v) = self.exact(t, x);
        let ut = -0.5 * c * (-t).exp();
        let vt = 0.3 * c;
        let lap_u = -self.mu * 0.5 * c * (-t).exp();
        let lap_v = -self.mu * 0.3 * c * (1.0 + t);
        let f = self.p.reaction_unchecked(u, v);
        (
            ut - self.p.diffusion * lap_u - f,
            vt - (lap_v - f) / self.p.tau,
        )
    }
}

fn manufactured_error(scheme: Scheme, dt: f64) -> f64 {
    let g = Grid::line(1.0, 101).unwrap();
    let m = Manufactured {
        p: Model4Params {
            diffusion: 0.5,
            tau: 2.0,
            ..model4()
        },
        mu: g.discrete_eigenvalue(2),
    };
    let cfg = SolverConfig::new(dt, 0.5).with_scheme(scheme);
    let stepper = Stepper::new(&g, ModelParams::Model4(m.p), cfg)
        .unwrap()
        .with_forcing(&m);
    let ic = (
        Field::from_fn(&g, |x, _| m.exact(0.0, x).0),
        Field::from_fn(&g, |x, _| m.exact(0.0, x).1),
    );
    let end = polarsim_core::solver::run_with_stepper(&stepper, ic, |_| {}).unwrap();
    (0..g.len())
        .map(|i| {
            let (x, _) = g.coords(i);
            let (u, v) = m.exact(0.5, x);
            (end.u.values()[i] - u)
                .abs()
                .max((end.v.values()[i] - v).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn backward_euler_is_first_order() {
    let ratio = manufactured_error(Scheme::ImexBackwardEuler, 0.01)
        / manufactured_error(Scheme::ImexBackwardEuler, 0.005);
    assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
}

#[test]
fn crank_nicolson_is_second_order() {
    let ratio = manufactured_error(Scheme::ImexCrankNicolson, 0.02)
        / manufactured_error(Scheme::ImexCrankNicolson, 0.01);
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn mass_and_sign_are_preserved_for_every_model() {
    let g = Grid::line(2.0, 65).unwrap();
    let models = [
        ModelParams::Model4(model4()),
        ModelParams::Model1(Model1Params::new(0.5, 1.0, 1.5, 0.7, 0.8).unwrap()),
        ModelParams::Model2(Model2Params::new(0.2, 2.0, 1.3, 0.6).unwrap()),
    ];
    for p in models {
        for scheme in [Scheme::ImexBackwardEuler, Scheme::ImexCrankNicolson] {
            let cfg = SolverConfig::new(1e-3, 2.0)
                .with_scheme(scheme)
                .with_stride(50);
            let ic = (
                Field::from_fn(&g, |x, _| 0.5 + 0.5 * (PI * x).cos().powi(2)),
                Field::from_fn(&g, |x, _| if x < 0.5 { 1.0 } else { 0.0 }),
            );
            let lam0 =
                (g.integrate(ic.0.values()) + p.tau() * g.integrate(ic.1.values())) / g.volume();
            let mut worst: f64 = 0.0;
            run(&g, ic, &p, &cfg, |s: &SimState| {
                worst = worst.max((s.lambda(&g, p.tau()) - lam0).abs() / lam0);
                assert!(s.u.min() >= -1e-12 && s.v.min() >= -1e-12);
            })
            .unwrap();
            assert!(worst <= 1e-12, "{} {:?}: {worst}", p.name(), scheme);
        }
    }
}

#[test]
fn two_dimensional_run_reduces_to_one_dimensional() {
    let p = ModelParams::Model4(model4());
    let cfg = SolverConfig::new(1e-3, 0.2).with_scheme(Scheme::ImexCrankNicolson);
    let g1 = Grid::line(1.0, 21).unwrap();
    let g2 = Grid::rect(1.0, 0.5, 21, 6).unwrap();
    let u0 = |x: f64| 0.4 + 0.2 * (PI * x).cos();
    let v0 = |x: f64| 0.6 - 0.1 * (2.0 * PI * x).cos();
    let a = run(
        &g1,
        (
            Field::from_fn(&g1, |x, _| u0(x)),
            Field::from_fn(&g1, |x, _| v0(x)),
        ),
        &p,
        &cfg,
        |_| {},
    )
    .unwrap();
    let b = run(
        &g2,
        (
            Field::from_fn(&g2, |x, _| u0(x)),
            Field::from_fn(&g2, |x, _| v0(x)),
        ),
        &p,
        &cfg,
        |_| {},
    )
    .unwrap();
    for j in 0..6 {
        for i in 0..21 {
            assert!((a.u.values()[i] - b.u.values()[i + 21 * j]).abs() < 1e-9);
            assert!((a.v.values()[i] - b.v.values()[i + 21 * j]).abs() < 1e-9);
        }
    }
}

#[test]
fn heat_limit_decays_at_discrete_rate() {
    let p = Model4Params {
        b: 0.0,
        delta: 0.0,
        diffusion: 0.7,
        ..model4()
    };
    let g = Grid::line(1.0, 33).unwrap();
    let dt = 1e-4;
    let cfg = SolverConfig::new(dt, 0.5).with_scheme(Scheme::ImexCrankNicolson);
    let ic = (
        Field::from_fn(&g, |x, _| 1.0 + 0.1 * (PI * x).cos()),
        Field::constant(&g, 1.0),
    );
    let end = run(&g, ic, &ModelParams::Model4(p), &cfg, |_| {}).unwrap();
    let mu = g.discrete_eigenvalue(2);
    let want = 0.1 * (-p.diffusion * mu * 0.5).exp();
    let got = g.l2_norm(&g.deviation(&end.u))
        / g.l2_norm(&g.deviation(&Field::from_fn(&g, |x, _| (PI * x).cos())));
    assert!((got - want).abs() <= 1e-6 * want, "{got} vs {want}");
}
