//! The analysis commands: `equilibrium`, `ode`, `check` and `scan`.

use std::io::Write;

use polarsim_core::diagnostics::Mu2;
use polarsim_core::equilibrium::{
    constant_a_equilibrium, count_sign_changes, integrate_homogeneous_ode, solve_equilibrium_traced,
};
use polarsim_core::linearization::{scan_degeneracy, ScanParameter};
use polarsim_core::ModelParams;

use crate::config::ScenarioConfig;
use crate::simulate::conditions;
use crate::table::{self, describe_params};
use crate::CliError;

/// Samples used to count sign changes of the equilibrium function.
const SIGN_CHANGE_SAMPLES: usize = 10_000;

fn header(cfg: &ScenarioConfig, params: &ModelParams) -> Vec<(String, String)> {
    vec![
        ("config_hash".to_string(), cfg.hash()),
        ("model".to_string(), params.name().to_string()),
        ("params".to_string(), describe_params(params)),
    ]
}

/// The mass from `override_lambda`, else `[initial] lambda`; must be positive.
pub fn resolve_lambda(cfg: &ScenarioConfig, override_lambda: Option<f64>) -> Result<f64, CliError> {
    let lambda = override_lambda.or(cfg.initial.lambda).ok_or_else(|| {
        CliError::config("`lambda` is required (use --lambda or [initial] lambda)")
    })?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(CliError::config(format!(
            "`lambda` must be positive, got {lambda}"
        )));
    }
    Ok(lambda)
}

/// Prints u*, v*, the residual, the bracketing trace and, for `γ = 0`, the
/// closed-form constant-activation value.
pub fn equilibrium(
    cfg: &ScenarioConfig,
    lambda: f64,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let p = cfg.model.model4()?;
    let solve = solve_equilibrium_traced(&p, lambda).map_err(CliError::config)?;
    let e = solve.equilibrium;
    table::write_header(
        out,
        "polarsim equilibrium",
        &header(cfg, &ModelParams::Model4(p)),
    )?;
    writeln!(out, "lambda = {:.17e}", e.lambda)?;
    writeln!(out, "u_star = {:.17e}", e.u_star)?;
    writeln!(out, "v_star = {:.17e}", e.v_star)?;
    writeln!(out, "residual = {:.17e}", e.residual)?;
    writeln!(out, "newton_iterations = {}", solve.newton_iterations)?;
    writeln!(
        out,
        "sign_changes = {}",
        count_sign_changes(&p, lambda, SIGN_CHANGE_SAMPLES)
    )?;
    if p.gamma == 0.0 {
        let closed = constant_a_equilibrium(p.a0(), p.tau, p.delta, lambda);
        writeln!(out, "constant_a_u_star = {closed:.17e}")?;
        writeln!(
            out,
            "constant_a_difference = {:.17e}",
            (e.u_star - closed).abs()
        )?;
    }
    writeln!(out, "# trace: lower upper phi_lower phi_upper")?;
    for b in &solve.trace {
        writeln!(
            out,
            "{:.17e} {:.17e} {:.17e} {:.17e}",
            b.lower, b.upper, b.phi_lower, b.phi_upper
        )?;
    }
    Ok(())
}

/// Integrates the spatially homogeneous ODE and prints `t U V G`.
pub fn ode(
    cfg: &ScenarioConfig,
    lambda: f64,
    u0: f64,
    t_end: f64,
    dt: f64,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let p = cfg.model.model4()?;
    let traj = integrate_homogeneous_ode(&p, lambda, u0, t_end, dt).map_err(CliError::config)?;
    table::write_header(out, "polarsim ode", &header(cfg, &ModelParams::Model4(p)))?;
    writeln!(out, "# lambda = {lambda:.17e}")?;
    writeln!(out, "# t U V G")?;
    for i in 0..traj.times.len() {
        writeln!(
            out,
            "{:.17e} {:.17e} {:.17e} {:.17e}",
            traj.times[i],
            traj.u[i],
            traj.v(i),
            traj.g[i]
        )?;
    }
    Ok(())
}

/// Prints the condition reports for the configured model, grid and mass.
pub fn check(cfg: &ScenarioConfig, lambda: f64, out: &mut impl Write) -> Result<(), CliError> {
    let params = cfg.model.params()?;
    let grid = cfg.grid.grid()?;
    let d = &cfg.diagnostics;
    let mu2 = d.mu2.resolve(&grid);
    let reports = conditions(&params, lambda, mu2, d.c4, d.sigma)?;
    let mut lines = header(cfg, &params);
    lines.push(("grid".to_string(), crate::snapshot::grid_descriptor(&grid)));
    table::write_header(out, "polarsim check", &lines)?;
    writeln!(out, "# lambda = {lambda:.17e}")?;
    table::write_conditions(out, &reports)?;
    Ok(())
}

pub fn parse_scan_parameter(name: &str) -> Result<ScanParameter, CliError> {
    match name {
        "D" => Ok(ScanParameter::Diffusion),
        "lambda" => Ok(ScanParameter::Lambda),
        "delta" => Ok(ScanParameter::Delta),
        _ => Err(CliError::config(format!(
            "scan parameter must be one of D, lambda, delta; got `{name}`"
        ))),
    }
}

/// Scan settings: mode `j`, scanned parameter, range and sample count.
#[derive(Debug, Clone, Copy)]
pub struct ScanSpec {
    pub mode: usize,
    pub parameter: ScanParameter,
    pub range: (f64, f64),
    pub samples: usize,
}

/// Eigenvalue used for mode `j` under the configured μ₂ convention.
pub fn mode_eigenvalue(cfg: &ScenarioConfig, mode: usize) -> Result<f64, CliError> {
    if mode == 0 {
        return Err(CliError::config("mode index is 1-based"));
    }
    let grid = cfg.grid.grid()?;
    match cfg.diagnostics.mu2.resolve(&grid) {
        Mu2 {
            source: polarsim_core::diagnostics::Mu2Source::Discrete,
            ..
        } => {
            if mode > grid.len() {
                return Err(CliError::config(format!(
                    "mode {mode} exceeds the grid size {}",
                    grid.len()
                )));
            }
            Ok(grid.discrete_eigenvalue(mode))
        }
        _ => Ok(grid.neumann_eigenvalue(mode)),
    }
}

/// Prints the sampled degeneracy residuals and every refined root.
pub fn scan(
    cfg: &ScenarioConfig,
    lambda: f64,
    spec: ScanSpec,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let p = cfg.model.model4()?;
    let mu = mode_eigenvalue(cfg, spec.mode)?;
    let report = scan_degeneracy(
        &p,
        lambda,
        spec.mode,
        mu,
        spec.parameter,
        spec.range,
        spec.samples,
    )
    .map_err(CliError::config)?;
    table::write_header(out, "polarsim scan", &header(cfg, &ModelParams::Model4(p)))?;
    writeln!(out, "# lambda = {lambda:.17e}")?;
    writeln!(out, "# mode = {} mu = {mu:.17e}", spec.mode)?;
    writeln!(out, "# parameter = {}", spec.parameter.name())?;
    writeln!(out, "# value residual")?;
    for (x, r) in &report.samples {
        match r {
            Ok(r) => writeln!(out, "{x:.17e} {r:.17e}")?,
            Err(e) => writeln!(out, "{x:.17e} nan # {e}")?,
        }
    }
    writeln!(out, "# roots: {}", report.roots.len())?;
    writeln!(out, "# root residual bracket_lower bracket_upper")?;
    for r in &report.roots {
        writeln!(
            out,
            "{:.17e} {:.17e} {:.17e} {:.17e}",
            r.root, r.residual, r.bracket.0, r.bracket.1
        )?;
    }
    Ok(())
}
