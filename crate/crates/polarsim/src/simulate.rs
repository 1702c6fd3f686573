//! The `simulate` command: one scenario, all output files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use polarsim_core::diagnostics::{
    check_all, estimate_decay_rate_with, pairing_estimate_monitor, omega_limit_check,
    run_with_diagnostics, v_bound_constant, ConditionReport, DecayEstimate, DecayWindow,
    DiagnosticsRecord, Monitor, Mu2, OmegaLimitReport,
};
use polarsim_core::solver::{SimState, Stepper};
use polarsim_core::ModelParams;

use crate::config::Scenario;
use crate::snapshot;
use crate::table;
use crate::CliError;

/// Headline numbers of a finished (or failed) run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    /// `None` on success, otherwise the failure message.
    pub failure: Option<String>,
    pub t_final: f64,
    pub records: usize,
    pub lambda0: f64,
    /// Largest `|λ(t) − λ(0)| / λ(0)` over the records.
    pub max_mass_defect: f64,
    pub decay: Option<DecayEstimate>,
    pub omega: Option<OmegaLimitReport>,
    pub final_u_dev_linf: f64,
    pub final_w_dev_l2: f64,
    /// `sup ‖v‖₂/λ` over `t ≥ 1`.
    pub v_bound: Option<f64>,
    pub pairing_cumulative: f64,
    pub pairing_sup: f64,
    /// Largest identity residual over interior records.
    pub max_identity_residual: f64,
    /// Record pairs where the Lyapunov column rose by more than `1e−8·|L|`
    /// (models 1 and 2 only).
    pub lyapunov_increases: usize,
    pub conditions: Vec<ConditionReport>,
}

impl RunSummary {
    pub fn write(&self, out: &mut impl Write) -> std::io::Result<()> {
        let kv = |out: &mut dyn Write, k: &str, v: String| writeln!(out, "{k} = {v}");
        kv(
            out,
            "status",
            self.failure
                .as_ref()
                .map_or("completed".to_string(), |m| format!("failed: {m}")),
        )?;
        kv(out, "t_final", format!("{:.17e}", self.t_final))?;
        kv(out, "records", self.records.to_string())?;
        kv(out, "lambda0", format!("{:.17e}", self.lambda0))?;
        kv(
            out,
            "max_mass_defect",
            format!("{:.17e}", self.max_mass_defect),
        )?;
        match &self.decay {
            Some(d) => {
                kv(out, "decay_rate", format!("{:.17e}", d.rate))?;
                kv(out, "decay_converged", d.converged.to_string())?;
                kv(out, "decay_points", d.points.to_string())?;
            }
            None => kv(out, "decay_rate", "unavailable".to_string())?,
        }
        if let Some(o) = &self.omega {
            kv(
                out,
                "omega_in_f_lambda",
                if o.in_f_lambda { "pass" } else { "fail" }.to_string(),
            )?;
            kv(out, "omega_mass_defect", format!("{:.17e}", o.mass_defect))?;
            kv(
                out,
                "omega_inhomogeneity",
                format!("{:.17e}", o.inhomogeneity),
            )?;
            kv(out, "omega_u_distance", format!("{:.17e}", o.u_distance))?;
            kv(out, "omega_v_distance", format!("{:.17e}", o.v_distance))?;
            kv(out, "omega_at_equilibrium", o.at_equilibrium.to_string())?;
            kv(out, "omega_tol", o.tol.to_string())?;
        }
        kv(
            out,
            "final_u_dev_linf",
            format!("{:.17e}", self.final_u_dev_linf),
        )?;
        kv(
            out,
            "final_w_dev_l2",
            format!("{:.17e}", self.final_w_dev_l2),
        )?;
        kv(
            out,
            "v_bound_constant",
            self.v_bound
                .map_or("unavailable".to_string(), |c| format!("{c:.17e}")),
        )?;
        kv(
            out,
            "pairing_cumulative",
            format!("{:.17e}", self.pairing_cumulative),
        )?;
        kv(out, "pairing_sup", format!("{:.17e}", self.pairing_sup))?;
        kv(
            out,
            "max_identity_residual",
            format!("{:.17e}", self.max_identity_residual),
        )?;
        kv(
            out,
            "lyapunov_increases",
            self.lyapunov_increases.to_string(),
        )?;
        for c in &self.conditions {
            kv(
                out,
                &format!("condition_{}", c.name),
                if c.satisfied { "satisfied" } else { "violated" }.to_string(),
            )?;
        }
        Ok(())
    }
}

/// Condition reports for `params` at mass `lambda`: the model-4 checks, or
/// the sign conditions on ξ (and α) for models 1 and 2.
pub fn conditions(
    params: &ModelParams,
    lambda: f64,
    mu2: Mu2,
    c4: f64,
    sigma: Option<f64>,
) -> Result<Vec<ConditionReport>, CliError> {
    let sign = |name: &'static str, value: f64| ConditionReport {
        name,
        lhs: 0.0,
        rhs: value,
        strict: true,
        satisfied: 0.0 < value,
        mu2,
        sigma: None,
        c4: None,
    };
    match params {
        ModelParams::Model4(p) => check_all(p, lambda, mu2, c4, sigma).map_err(CliError::config),
        ModelParams::Model1(p) => Ok(vec![sign("xi-positive", p.xi())]),
        ModelParams::Model2(p) => Ok(vec![
            sign("xi-positive", p.xi()),
            sign("alpha-positive", p.alpha()),
        ]),
    }
}

fn write_snapshot(dir: &Path, name: &str, s: &Scenario, state: &SimState) -> std::io::Result<()> {
    let mut f = BufWriter::new(File::create(dir.join(format!("{name}.txt")))?);
    snapshot::write_text(&mut f, &s.grid, state, s.params.diffusion(), &s.hash)?;
    f.flush()?;
    if s.config.output.binary_snapshots {
        let mut f = BufWriter::new(File::create(dir.join(format!("{name}.bin")))?);
        snapshot::write_binary(&mut f, &s.grid, state, &s.hash)?;
        f.flush()?;
    }
    Ok(())
}

/// Runs `s`, writing `diagnostics.txt`, `conditions.txt`, `summary.txt`,
/// `final.txt` (or `last_good.txt` on failure) and optional periodic
/// snapshots under `out`. Outputs written before a failure are kept.
pub fn simulate(s: &Scenario, out: &Path) -> Result<RunSummary, CliError> {
    fs::create_dir_all(out)?;
    let d = &s.config.diagnostics;
    let header = table::provenance(s);
    let tau = s.params.tau();
    let ic_state = SimState {
        t: 0.0,
        u: s.initial.0.clone(),
        v: s.initial.1.clone(),
    };
    let lambda0 = ic_state.lambda(&s.grid, tau);

    let reports = conditions(&s.params, lambda0, s.mu2(), d.c4, d.sigma)?;
    let mut f = BufWriter::new(File::create(out.join("conditions.txt"))?);
    table::write_header(&mut f, "polarsim conditions", &header)?;
    writeln!(f, "# lambda = {lambda0:.17e}")?;
    table::write_conditions(&mut f, &reports)?;
    f.flush()?;

    let snap_dir = out.join("snapshots");
    if d.snapshot_every > 0 {
        fs::create_dir_all(&snap_dir)?;
    }

    let monitor = Monitor::new(&s.grid, s.params, lambda0).map_err(CliError::config)?;
    let stepper = Stepper::new(&s.grid, s.params, s.solver).map_err(CliError::config)?;
    let mut table_out = BufWriter::new(File::create(out.join("diagnostics.txt"))?);
    table::write_header(&mut table_out, "polarsim diagnostics", &header)?;
    table::write_record_columns(&mut table_out)?;

    let mut snap_error: Option<std::io::Error> = None;
    let mut table_error: Option<std::io::Error> = None;
    let mut frame = 0usize;
    let run = run_with_diagnostics(
        &stepper,
        monitor,
        s.initial.clone(),
        |state| {
            if d.snapshot_every > 0
                && frame.is_multiple_of(d.snapshot_every)
                && snap_error.is_none()
            {
                if let Err(e) = write_snapshot(&snap_dir, &format!("snap_{frame:06}"), s, state) {
                    snap_error = Some(e);
                }
            }
            frame += 1;
        },
        |r| {
            if table_error.is_none() {
                if let Err(e) = table::write_record(&mut table_out, r) {
                    table_error = Some(e);
                }
            }
        },
    );
    table_out.flush()?;
    if let Some(e) = snap_error.or(table_error) {
        return Err(e.into());
    }

    let (last, mut failure) = match &run.outcome {
        Ok(state) => (state.clone(), None),
        Err(f) => (f.last_good.clone(), Some(f.error.to_string())),
    };
    if failure.is_none() {
        failure = run
            .diagnostics_error
            .as_ref()
            .map(|e| format!("diagnostics: {e}"));
    }
    write_snapshot(
        out,
        if run.outcome.is_ok() {
            "final"
        } else {
            "last_good"
        },
        s,
        &last,
    )?;

    let summary = summarize(s, &run.records, &last, lambda0, reports, failure);
    let mut f = BufWriter::new(File::create(out.join("summary.txt"))?);
    table::write_header(&mut f, "polarsim summary", &header)?;
    summary.write(&mut f)?;
    f.flush()?;

    match &summary.failure {
        Some(m) => Err(CliError::runtime(m)),
        None => Ok(summary),
    }
}

fn summarize(
    s: &Scenario,
    records: &[DiagnosticsRecord],
    last: &SimState,
    lambda0: f64,
    conditions: Vec<ConditionReport>,
    failure: Option<String>,
) -> RunSummary {
    let d = &s.config.diagnostics;
    let window = DecayWindow {
        fraction: d.decay_fraction,
        ..DecayWindow::default()
    };
    let decay = estimate_decay_rate_with(records, d.decay_column.column(), window).ok();
    let omega = omega_limit_check(&s.grid, last, &s.params, lambda0, d.omega_tol).ok();
    let pairing = pairing_estimate_monitor(records);
    let interior = if records.len() > 2 {
        &records[1..records.len() - 1]
    } else {
        &[][..]
    };
    let lyapunov_increases = match s.params {
        ModelParams::Model4(_) => 0,
        _ => records
            .windows(2)
            .filter(|w| w[1].lyapunov > w[0].lyapunov + 1e-8 * w[0].lyapunov.abs())
            .count(),
    };
    let final_record = records.last();
    RunSummary {
        failure,
        t_final: last.t,
        records: records.len(),
        lambda0,
        max_mass_defect: records
            .iter()
            .map(|r| (r.lambda - lambda0).abs() / lambda0)
            .fold(0.0, f64::max),
        decay,
        omega,
        final_u_dev_linf: final_record.map_or(f64::NAN, |r| r.u_dev_linf),
        final_w_dev_l2: final_record.map_or(f64::NAN, |r| r.w_dev_l2),
        v_bound: v_bound_constant(records, 1.0),
        pairing_cumulative: pairing.last(),
        pairing_sup: pairing.supremum,
        max_identity_residual: interior
            .iter()
            .map(|r| r.identity_residual)
            .fold(0.0, f64::max),
        lyapunov_increases,
        conditions,
    }
}
