//! Parameter sweeps: one scenario per value, run concurrently.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::config::{Scenario, ScenarioConfig};
use crate::simulate::{simulate, RunSummary};
use crate::table;
use crate::CliError;

/// Environment variable capping the number of worker threads.
pub const THREADS_VAR: &str = "POLARSIM_THREADS";

/// Outcome of one sweep point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub outcome: Result<RunSummary, String>,
}

/// Worker count from [`THREADS_VAR`]; `None` means the rayon default.
pub fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(0) | Err(_) => Err(CliError::config(format!(
                "{THREADS_VAR} must be a positive integer, got `{s}`"
            ))),
            Ok(n) => Ok(Some(n)),
        },
    }
}

fn run_point(
    template: &ScenarioConfig,
    base_dir: &Path,
    name: &str,
    value: f64,
    dir: &Path,
) -> Result<RunSummary, String> {
    let mut cfg = template.clone();
    cfg.set(name, value).map_err(|e| e.to_string())?;
    let scenario = Scenario::build(cfg, base_dir).map_err(|e| e.to_string())?;
    simulate(&scenario, dir).map_err(|e| e.to_string())
}

/// Runs `template` with `name` set to each of `values`. Values are sorted
/// first; run `i` writes to `out/run_NNN`. Failed runs are recorded and
/// the sweep continues. Writes `out/sweep_summary.txt`.
pub fn sweep(
    template: &ScenarioConfig,
    base_dir: &Path,
    name: &str,
    values: &[f64],
    out: &Path,
    threads: Option<usize>,
) -> Result<Vec<SweepRow>, CliError> {
    if values.is_empty() {
        return Err(CliError::config("sweep needs at least one value"));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(CliError::config(format!("sweep value {v} is not finite")));
    }
    // Reject unknown parameter names before starting any run.
    template.clone().set(name, values[0])?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    fs::create_dir_all(out)?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(CliError::runtime)?;
    let rows: Vec<SweepRow> = pool.install(|| {
        sorted
            .par_iter()
            .enumerate()
            .map(|(index, &value)| {
                let dir = out.join(format!("run_{index:03}"));
                SweepRow {
                    index,
                    value,
                    outcome: run_point(template, base_dir, name, value, &dir),
                }
            })
            .collect()
    });

    let mut f = BufWriter::new(File::create(out.join("sweep_summary.txt"))?);
    let lines = vec![
        ("config_hash".to_string(), template.hash()),
        ("parameter".to_string(), name.to_string()),
    ];
    table::write_header(&mut f, "polarsim sweep", &lines)?;
    write_rows(&mut f, &rows)?;
    f.flush()?;
    Ok(rows)
}

pub fn write_rows(out: &mut impl Write, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(out, "# index value status decay_rate decay_converged final_u_dev_linf max_mass_defect omega_in_f_lambda")?;
    for r in rows {
        match &r.outcome {
            Ok(s) => {
                let (rate, converged) =
                    s.decay.map_or((f64::NAN, false), |d| (d.rate, d.converged));
                let omega = s
                    .omega
                    .map_or("n/a", |o| if o.in_f_lambda { "pass" } else { "fail" });
                writeln!(
                    out,
                    "{:03} {:.17e} ok {rate:.17e} {converged} {:.17e} {:.17e} {omega}",
                    r.index, r.value, s.final_u_dev_linf, s.max_mass_defect
                )?;
            }
            Err(e) => writeln!(
                out,
                "{:03} {:.17e} failed nan false nan nan n/a # {}",
                r.index,
                r.value,
                e.replace('\n', " ")
            )?,
        }
    }
    Ok(())
}
