//! Plain-text tables with `#` provenance headers.

use std::io::{self, Write};

use polarsim_core::diagnostics::{ConditionReport, DiagnosticsRecord, Mu2Source, SigmaSource};
use polarsim_core::ModelParams;

use crate::config::Scenario;
use crate::snapshot::grid_descriptor;

/// `key = value` lines identifying the run that produced a file.
pub fn provenance(s: &Scenario) -> Vec<(String, String)> {
    let cfg = &s.config;
    let mut lines = vec![
        ("config_hash".to_string(), s.hash.clone()),
        ("model".to_string(), s.params.name().to_string()),
        ("params".to_string(), describe_params(&s.params)),
        ("grid".to_string(), grid_descriptor(&s.grid)),
        (
            "solver".to_string(),
            format!(
                "scheme={:?} dt={} t_end={} stride={} retry_limit={} linear_tol={}",
                s.solver.scheme,
                s.solver.dt,
                s.solver.t_end,
                s.solver.stride,
                s.solver.retry_limit,
                s.solver.linear_tol
            ),
        ),
        ("seed".to_string(), cfg.output.seed.to_string()),
    ];
    let mu2 = s.mu2();
    lines.push((
        "mu2".to_string(),
        format!("{} ({})", mu2.value, mu2_name(mu2.source)),
    ));
    lines.push(("c4".to_string(), cfg.diagnostics.c4.to_string()));
    match cfg.diagnostics.sigma {
        Some(sigma) => lines.push(("sigma".to_string(), format!("{sigma} (override)"))),
        None => lines.push(("sigma".to_string(), "sufficient_sigma".to_string())),
    }
    lines
}

pub fn describe_params(p: &ModelParams) -> String {
    match p {
        ModelParams::Model1(p) => format!(
            "D={} tau={} a={} b={} k={}",
            p.diffusion, p.tau, p.strength, p.offset, p.coupling
        ),
        ModelParams::Model2(p) => {
            format!(
                "D={} tau={} alpha1={} alpha2={} k=alpha1",
                p.diffusion, p.tau, p.exchange, p.saturation
            )
        }
        ModelParams::Model4(p) => format!(
            "D={} tau={} b={} gamma={} k={} k0={} delta={} m={}",
            p.diffusion, p.tau, p.b, p.gamma, p.k, p.k0, p.delta, p.hill_exponent
        ),
    }
}

pub fn mu2_name(source: Mu2Source) -> &'static str {
    match source {
        Mu2Source::Continuum => "continuum",
        Mu2Source::Discrete => "discrete",
        Mu2Source::Given => "given",
    }
}

pub fn write_header(
    out: &mut impl Write,
    title: &str,
    lines: &[(String, String)],
) -> io::Result<()> {
    writeln!(out, "# {title}")?;
    for (k, v) in lines {
        writeln!(out, "# {k} = {v}")?;
    }
    Ok(())
}

pub fn write_record_columns(out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "# columns = {}", DiagnosticsRecord::COLUMNS.join(" "))
}

pub fn write_record(out: &mut impl Write, r: &DiagnosticsRecord) -> io::Result<()> {
    let row: Vec<String> = r.values().iter().map(|x| format!("{x:.17e}")).collect();
    writeln!(out, "{}", row.join(" "))
}

/// Parses rows written by [`write_record`]; header lines are skipped.
pub fn read_records(text: &str) -> Result<Vec<DiagnosticsRecord>, String> {
    let mut out = Vec::new();
    for line in text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
    {
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| format!("bad value `{s}`: {e}"))
            })
            .collect::<Result<_, _>>()?;
        if v.len() != DiagnosticsRecord::COLUMNS.len() {
            return Err(format!("row has {} columns", v.len()));
        }
        out.push(DiagnosticsRecord {
            t: v[0],
            lambda: v[1],
            u_mean: v[2],
            v_mean: v[3],
            w_mean: v[4],
            u_dev_l2: v[5],
            u_dev_linf: v[6],
            v_dev_linf: v[7],
            w_dev_l2: v[8],
            lyapunov: v[9],
            identity_residual: v[10],
            eq_distance: v[11],
            v_l2: v[12],
            pairing_integrand: v[13],
        });
    }
    Ok(out)
}

pub fn write_conditions(out: &mut impl Write, reports: &[ConditionReport]) -> io::Result<()> {
    writeln!(
        out,
        "# columns = condition lhs relation rhs satisfied mu2 mu2_source sigma sigma_source c4"
    )?;
    for r in reports {
        let relation = if r.strict { "<" } else { "<=" };
        let (sigma, sigma_source) = match r.sigma {
            Some(s) => (
                format!("{:.17e}", s.value),
                match s.source {
                    SigmaSource::Sufficient => "sufficient",
                    SigmaSource::Override => "override",
                },
            ),
            None => ("-".to_string(), "-"),
        };
        let c4 = r.c4.map_or("-".to_string(), |c| c.to_string());
        writeln!(
            out,
            "{} {:.17e} {} {:.17e} {} {:.17e} {} {} {} {}",
            r.name,
            r.lhs,
            relation,
            r.rhs,
            if r.satisfied { "yes" } else { "no" },
            r.mu2.value,
            mu2_name(r.mu2.source),
            sigma,
            sigma_source,
            c4
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_round_trip_bit_for_bit() {
        let r = DiagnosticsRecord {
            t: 0.1,
            lambda: 1.0 / 3.0,
            u_mean: 2.0f64.sqrt(),
            v_mean: 1e-300,
            w_mean: -0.0,
            u_dev_l2: 1.234e-17,
            u_dev_linf: 5.0,
            v_dev_linf: 6.0,
            w_dev_l2: 7.0,
            lyapunov: -8.5,
            identity_residual: 9.0,
            eq_distance: f64::NAN,
            v_l2: 11.0,
            pairing_integrand: 12.0,
        };
        let mut buf = Vec::new();
        write_record_columns(&mut buf).unwrap();
        write_record(&mut buf, &r).unwrap();
        let back = read_records(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.len(), 1);
        for (a, b) in back[0].values().iter().zip(r.values()) {
            assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
    }
}
