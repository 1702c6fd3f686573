//! Scenario files.
//!
//! A scenario is a TOML document with the sections `[model]`, `[grid]`,
//! `[solver]`, `[initial]`, `[diagnostics]` and `[output]`. Unknown keys are
//! rejected. See the README for the full schema and defaults.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use polarsim_core::diagnostics::{Mu2, NormColumn};
use polarsim_core::equilibrium::solve_equilibrium;
use polarsim_core::solver::{Scheme, SolverConfig};
use polarsim_core::{Field, Grid, Model1Params, Model2Params, Model4Params, ModelParams};

use crate::expr::Expression;
use crate::snapshot;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "model1")]
    Model1,
    #[serde(rename = "model2")]
    Model2,
    #[serde(rename = "model4")]
    Model4,
    #[serde(rename = "model4-general-m")]
    Model4GeneralM,
}

/// Model parameters. Which keys are required depends on `kind`:
///
/// * model1: `D`, `tau`, `a`, `b`, `k`;
/// * model2: `D`, `tau`, `alpha1`, `alpha2`;
/// * model4: `D`, `tau`, `b`, `gamma`, `k`, `k0`, `delta`;
/// * model4-general-m: as model4 plus `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    #[serde(rename = "D")]
    pub diffusion: f64,
    pub tau: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha2: Option<f64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = Model4Params::default();
        Self {
            kind: ModelKind::Model4,
            diffusion: p.diffusion,
            tau: p.tau,
            a: None,
            b: Some(p.b),
            gamma: Some(p.gamma),
            k: Some(p.k),
            k0: Some(p.k0),
            delta: Some(p.delta),
            m: None,
            alpha1: None,
            alpha2: None,
        }
    }
}

impl ModelSection {
    fn field(&self, name: &str) -> Option<f64> {
        match name {
            "D" => Some(self.diffusion),
            "tau" => Some(self.tau),
            "a" => self.a,
            "b" => self.b,
            "gamma" => self.gamma,
            "k" => self.k,
            "k0" => self.k0,
            "delta" => self.delta,
            "m" => self.m,
            "alpha1" => self.alpha1,
            "alpha2" => self.alpha2,
            _ => None,
        }
    }

    /// Sets a parameter by its scenario-file key.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), CliError> {
        let slot = match name {
            "D" => {
                self.diffusion = value;
                return Ok(());
            }
            "tau" => {
                self.tau = value;
                return Ok(());
            }
            "a" => &mut self.a,
            "b" => &mut self.b,
            "gamma" => &mut self.gamma,
            "k" => &mut self.k,
            "k0" => &mut self.k0,
            "delta" => &mut self.delta,
            "m" => &mut self.m,
            "alpha1" => &mut self.alpha1,
            "alpha2" => &mut self.alpha2,
            _ => {
                return Err(CliError::config(format!(
                    "unknown model parameter `{name}`"
                )))
            }
        };
        *slot = Some(value);
        Ok(())
    }

    fn required(&self, kind: ModelKind) -> &'static [&'static str] {
        match kind {
            ModelKind::Model1 => &["a", "b", "k"],
            ModelKind::Model2 => &["alpha1", "alpha2"],
            ModelKind::Model4 => &["b", "gamma", "k", "k0", "delta"],
            ModelKind::Model4GeneralM => &["b", "gamma", "k", "k0", "delta", "m"],
        }
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        let required = self.required(self.kind);
        for name in [
            "a", "b", "gamma", "k", "k0", "delta", "m", "alpha1", "alpha2",
        ] {
            let present = self.field(name).is_some();
            if required.contains(&name) && !present {
                return Err(CliError::config(format!(
                    "[model] field `{name}` is required for this model"
                )));
            }
            if !required.contains(&name) && present {
                return Err(CliError::config(format!(
                    "[model] field `{name}` is not used by this model"
                )));
            }
        }
        let get = |name: &str| self.field(name).unwrap_or(f64::NAN);
        let invalid = |e: polarsim_core::Error| CliError::config(format!("[model] {e}"));
        let params = match self.kind {
            ModelKind::Model1 => ModelParams::Model1(
                Model1Params::new(self.diffusion, self.tau, get("a"), get("b"), get("k"))
                    .map_err(invalid)?,
            ),
            ModelKind::Model2 => ModelParams::Model2(
                Model2Params::new(self.diffusion, self.tau, get("alpha1"), get("alpha2"))
                    .map_err(invalid)?,
            ),
            ModelKind::Model4 | ModelKind::Model4GeneralM => {
                let mut p = Model4Params::new(
                    self.diffusion,
                    self.tau,
                    get("b"),
                    get("gamma"),
                    get("k"),
                    get("k0"),
                    get("delta"),
                )
                .map_err(invalid)?;
                if self.kind == ModelKind::Model4GeneralM {
                    p = p.with_hill_exponent(get("m")).map_err(invalid)?;
                }
                ModelParams::Model4(p)
            }
        };
        Ok(params)
    }

    pub fn model4(&self) -> Result<Model4Params, CliError> {
        match self.params()? {
            ModelParams::Model4(p) => Ok(p),
            other => Err(CliError::config(format!(
                "this command needs model4, got {}",
                other.name()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "L")]
    pub length: f64,
    pub n: usize,
    #[serde(rename = "Ly", default, skip_serializing_if = "Option::is_none")]
    pub length_y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            length: 1.0,
            n: 256,
            length_y: None,
            ny: None,
        }
    }
}

impl GridSection {
    pub fn grid(&self) -> Result<Grid, CliError> {
        let g = match (self.length_y, self.ny) {
            (None, None) => Grid::line(self.length, self.n),
            (Some(ly), Some(ny)) => Grid::rect(self.length, ly, self.n, ny),
            _ => {
                return Err(CliError::config(
                    "[grid] `Ly` and `ny` must be given together",
                ))
            }
        };
        g.map_err(|e| CliError::config(format!("[grid] {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemeName {
    #[serde(rename = "be")]
    BackwardEuler,
    #[serde(rename = "cn")]
    CrankNicolson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    /// Omitted: `0.5 · 0.25 · min(h²/(2D), h²τ/2)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_end: f64,
    pub scheme: SchemeName,
    /// Record every `stride` steps.
    pub stride: usize,
    pub retry_limit: u32,
    pub linear_tol: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            dt: None,
            t_end: 200.0,
            scheme: SchemeName::BackwardEuler,
            stride: 1,
            retry_limit: 10,
            linear_tol: 1e-13,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialKind {
    #[serde(rename = "expression")]
    Expression,
    #[serde(rename = "file")]
    File,
    /// Homogeneous model-4 equilibrium times `1 + amplitude·(random cosine sum)`.
    #[serde(rename = "perturbation")]
    Perturbation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub kind: InitialKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<String>,
    /// Mass used for `u_star`, `v_star` and perturbations; model 4 only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            kind: InitialKind::Expression,
            u: None,
            v: None,
            lambda: None,
            file: None,
            amplitude: None,
            modes: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mu2Mode {
    #[serde(rename = "continuum")]
    Continuum,
    #[serde(rename = "discrete")]
    Discrete,
}

impl Mu2Mode {
    pub fn resolve(self, grid: &Grid) -> Mu2 {
        match self {
            Mu2Mode::Continuum => Mu2::continuum(grid),
            Mu2Mode::Discrete => Mu2::discrete(grid),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecayColumn {
    #[serde(rename = "u_dev_l2")]
    UDevL2,
    #[serde(rename = "u_dev_linf")]
    UDevLinf,
    #[serde(rename = "v_dev_linf")]
    VDevLinf,
    #[serde(rename = "w_dev_l2")]
    WDevL2,
}

impl DecayColumn {
    pub fn column(self) -> NormColumn {
        match self {
            DecayColumn::UDevL2 => NormColumn::UDevL2,
            DecayColumn::UDevLinf => NormColumn::UDevLinf,
            DecayColumn::VDevLinf => NormColumn::VDevLinf,
            DecayColumn::WDevL2 => NormColumn::WDevL2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsSection {
    pub c4: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub mu2: Mu2Mode,
    /// Write a snapshot every this many records; 0 disables.
    pub snapshot_every: usize,
    pub decay_column: DecayColumn,
    /// Fraction of eligible records (from the end) used in the decay fit.
    pub decay_fraction: f64,
    pub omega_tol: f64,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            c4: 1.0,
            sigma: None,
            mu2: Mu2Mode::Continuum,
            snapshot_every: 0,
            decay_column: DecayColumn::UDevLinf,
            decay_fraction: 0.5,
            omega_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub seed: u64,
    pub binary_snapshots: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(e.message()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Canonical TOML rendering; hashed for provenance.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Applies a `key=value` override. Model keys go to `[model]`; `lambda`,
    /// `dt`, `t_end`, `L` and `n` to their sections.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), CliError> {
        match name {
            "lambda" => self.initial.lambda = Some(value),
            "dt" => self.solver.dt = Some(value),
            "t_end" => self.solver.t_end = value,
            "L" => self.grid.length = value,
            "n" => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(CliError::config(format!(
                        "`n` must be a nonnegative integer, got {value}"
                    )));
                }
                self.grid.n = value as usize;
            }
            _ => self.model.set(name, value)?,
        }
        Ok(())
    }
}

/// A validated scenario ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub params: ModelParams,
    pub grid: Grid,
    pub solver: SolverConfig,
    pub initial: (Field, Field),
    pub hash: String,
}

impl Scenario {
    /// Validates `config`; relative IC file paths are resolved against
    /// `base_dir`.
    // `!(x > 0.0)` also rejects NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn build(config: ScenarioConfig, base_dir: &Path) -> Result<Self, CliError> {
        let params = config.model.params()?;
        if config.model.kind == ModelKind::Model4GeneralM && config.model.m == Some(2.0) {
            return Err(CliError::config("[model] use kind = \"model4\" for m = 2"));
        }
        let grid = config.grid.grid()?;
        let s = &config.solver;
        let dt =
            s.dt.unwrap_or_else(|| SolverConfig::default_dt(&grid, &params));
        let mut solver = SolverConfig::new(dt, s.t_end);
        solver.scheme = match s.scheme {
            SchemeName::BackwardEuler => Scheme::ImexBackwardEuler,
            SchemeName::CrankNicolson => Scheme::ImexCrankNicolson,
        };
        solver.stride = s.stride;
        solver.retry_limit = s.retry_limit;
        solver.linear_tol = s.linear_tol;
        solver
            .validate()
            .map_err(|e| CliError::config(format!("[solver] {e}")))?;
        let d = &config.diagnostics;
        if !(d.c4 > 0.0) {
            return Err(CliError::config(format!(
                "[diagnostics] `c4` must be positive, got {}",
                d.c4
            )));
        }
        if let Some(sigma) = d.sigma {
            if !(sigma > 0.0) {
                return Err(CliError::config(format!(
                    "[diagnostics] `sigma` must be positive, got {sigma}"
                )));
            }
        }
        if !(d.decay_fraction > 0.0 && d.decay_fraction <= 1.0) {
            return Err(CliError::config(
                "[diagnostics] `decay_fraction` must be in (0, 1]",
            ));
        }
        if !(d.omega_tol > 0.0) {
            return Err(CliError::config(
                "[diagnostics] `omega_tol` must be positive",
            ));
        }
        let initial = initial_fields(&config, &params, &grid, base_dir)?;
        polarsim_core::solver::validate_initial(&grid, &initial.0, &initial.1)
            .map_err(|e| CliError::config(format!("[initial] {e}")))?;
        let hash = config.hash();
        Ok(Self {
            config,
            params,
            grid,
            solver,
            initial,
            hash,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let config = ScenarioConfig::load(path)?;
        Self::build(config, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn mu2(&self) -> Mu2 {
        self.config.diagnostics.mu2.resolve(&self.grid)
    }
}

#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn initial_fields(
    config: &ScenarioConfig,
    params: &ModelParams,
    grid: &Grid,
    base_dir: &Path,
) -> Result<(Field, Field), CliError> {
    let ic = &config.initial;
    let star = match (params, ic.lambda) {
        (ModelParams::Model4(p), Some(lambda)) => {
            let e = solve_equilibrium(p, lambda)
                .map_err(|e| CliError::config(format!("[initial] lambda = {lambda}: {e}")))?;
            Some((lambda, e.u_star, e.v_star))
        }
        (_, Some(lambda)) if !(lambda > 0.0) => {
            return Err(CliError::config(format!(
                "[initial] `lambda` must be positive, got {lambda}"
            )))
        }
        _ => None,
    };
    match ic.kind {
        InitialKind::Expression => {
            let (Some(u), Some(v)) = (&ic.u, &ic.v) else {
                return Err(CliError::config(
                    "[initial] expression initial data need `u` and `v`",
                ));
            };
            let eval = |src: &str| -> Result<Field, CliError> {
                let mut e = Expression::parse(src)?;
                e.set("L", grid.length(0));
                e.set(
                    "lambda",
                    star.map_or(ic.lambda.unwrap_or(f64::NAN), |s| s.0),
                );
                e.set("u_star", star.map_or(f64::NAN, |s| s.1));
                e.set("v_star", star.map_or(f64::NAN, |s| s.2));
                let mut values = Vec::with_capacity(grid.len());
                for i in 0..grid.len() {
                    let (x, y) = grid.coords(i);
                    e.set("x", x);
                    e.set("y", y);
                    values.push(e.eval()?);
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(CliError::config(format!(
                        "[initial] `{src}` is not finite on the grid (u_star and v_star need model4 and `lambda`)"
                    )));
                }
                Field::new(grid, values).map_err(CliError::config)
            };
            Ok((eval(u)?, eval(v)?))
        }
        InitialKind::File => {
            let Some(file) = &ic.file else {
                return Err(CliError::config("[initial] file initial data need `file`"));
            };
            let path = if file.is_absolute() {
                file.clone()
            } else {
                base_dir.join(file)
            };
            let bytes = fs::read(&path)
                .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            let snap = if bytes.starts_with(b"PSNAP") {
                snapshot::read_binary(&bytes[..])?
            } else {
                snapshot::read_text(&bytes[..])?
            };
            if snap.grid != *grid {
                return Err(CliError::config(format!(
                    "{}: snapshot grid does not match [grid]",
                    path.display()
                )));
            }
            Ok((snap.u, snap.v))
        }
        InitialKind::Perturbation => {
            let Some((_, us, vs)) = star else {
                return Err(CliError::config(
                    "[initial] perturbation initial data need model4 and `lambda`",
                ));
            };
            let amp = ic.amplitude.unwrap_or(0.1);
            let modes = ic.modes.unwrap_or(4).max(1);
            if !(0.0..1.0).contains(&amp) {
                return Err(CliError::config("[initial] `amplitude` must be in [0, 1)"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(config.output.seed);
            let coeffs: Vec<(f64, f64)> = (0..modes)
                .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let (lx, ly) = (grid.length(0), grid.length(1));
            let shape = |x: f64, y: f64| -> f64 {
                let s: f64 = coeffs
                    .iter()
                    .enumerate()
                    .map(|(j, (cx, cy))| {
                        let j = (j + 1) as f64;
                        let ang = std::f64::consts::PI * j;
                        let ycos = if grid.dim() == 2 {
                            cy * (ang * y / ly).cos()
                        } else {
                            0.0
                        };
                        cx * (ang * x / lx).cos() + ycos
                    })
                    .sum();
                s / (modes as f64 * if grid.dim() == 2 { 2.0 } else { 1.0 })
            };
            Ok((
                Field::from_fn(grid, |x, y| us * (1.0 + amp * shape(x, y))),
                Field::constant(grid, vs),
            ))
        }
    }
}
