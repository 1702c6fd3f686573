use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use polarsim::commands::{self, ScanSpec};
use polarsim::config::Mu2Mode;
use polarsim::sweep;
use polarsim::{simulate, CliError, Scenario, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "polarsim",
    version,
    about = "Mass-conserved reaction-diffusion laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mu2Arg {
    Continuum,
    Discrete,
}

#[derive(Args)]
struct Common {
    /// Scenario file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (simulate, sweep) or file (other commands; default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `[output] seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// First nonzero Neumann eigenvalue used by condition checks.
    #[arg(long, value_enum)]
    mu2: Option<Mu2Arg>,
    #[arg(long)]
    c4: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Override `key=value`; repeatable. Keys: model parameters, lambda, dt, t_end, L, n.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write diagnostics, snapshots and a summary.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Homogeneous equilibrium at mass lambda (model 4).
    Equilibrium {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Spatially homogeneous ODE trajectory (model 4).
    Ode {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        u0: f64,
        #[arg(long, default_value_t = 50.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-2)]
        dt: f64,
    },
    /// Condition reports at mass lambda on the configured grid.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Degeneracy residual scan of one mode over D, lambda or delta (model 4).
    Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda: Option<f64>,
        /// 1-based mode index.
        #[arg(long, default_value_t = 2)]
        mode: usize,
        /// One of D, lambda, delta.
        #[arg(long)]
        parameter: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Run the scenario once per value of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to vary (same keys as --param).
        #[arg(long)]
        vary: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
}

fn load(common: &Common) -> Result<ScenarioConfig, CliError> {
    let mut cfg = ScenarioConfig::load(&common.config)?;
    for p in &common.params {
        let (key, value) = p
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--param expects KEY=VALUE, got `{p}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("--param {key}: `{value}` is not a number")))?;
        cfg.set(key.trim(), value)?;
    }
    if let Some(seed) = common.seed {
        cfg.output.seed = seed;
    }
    if let Some(m) = common.mu2 {
        cfg.diagnostics.mu2 = match m {
            Mu2Arg::Continuum => Mu2Mode::Continuum,
            Mu2Arg::Discrete => Mu2Mode::Discrete,
        };
    }
    if let Some(c4) = common.c4 {
        cfg.diagnostics.c4 = c4;
    }
    if common.sigma.is_some() {
        cfg.diagnostics.sigma = common.sigma;
    }
    Ok(cfg)
}

fn base_dir(common: &Common) -> &Path {
    common.config.parent().unwrap_or(Path::new("."))
}

fn out_dir(common: &Common, cfg: &ScenarioConfig) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("polarsim_out"))
}

fn with_output(
    common: &Common,
    body: impl FnOnce(&mut dyn Write) -> Result<(), CliError>,
) -> Result<(), CliError> {
    match &common.out {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path)?);
            body(&mut f)?;
            f.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { common } => {
            let cfg = load(&common)?;
            let out = out_dir(&common, &cfg);
            let scenario = Scenario::build(cfg, base_dir(&common))?;
            let summary = simulate(&scenario, &out)?;
            summary.write(&mut io::stdout().lock())?;
        }
        Command::Equilibrium { common, lambda } => {
            let cfg = load(&common)?;
            let lambda = commands::resolve_lambda(&cfg, lambda)?;
            with_output(&common, |w| {
                commands::equilibrium(&cfg, lambda, &mut &mut *w)
            })?;
        }
        Command::Ode {
            common,
            lambda,
            u0,
            t_end,
            dt,
        } => {
            let cfg = load(&common)?;
            let lambda = commands::resolve_lambda(&cfg, lambda)?;
            with_output(&common, |w| {
                commands::ode(&cfg, lambda, u0, t_end, dt, &mut &mut *w)
            })?;
        }
        Command::Check { common, lambda } => {
            let cfg = load(&common)?;
            let lambda = commands::resolve_lambda(&cfg, lambda)?;
            with_output(&common, |w| commands::check(&cfg, lambda, &mut &mut *w))?;
        }
        Command::Scan {
            common,
            lambda,
            mode,
            parameter,
            from,
            to,
            samples,
        } => {
            let cfg = load(&common)?;
            let lambda = commands::resolve_lambda(&cfg, lambda)?;
            let spec = ScanSpec {
                mode,
                parameter: commands::parse_scan_parameter(&parameter)?,
                range: (from, to),
                samples,
            };
            with_output(&common, |w| {
                commands::scan(&cfg, lambda, spec, &mut &mut *w)
            })?;
        }
        Command::Sweep {
            common,
            vary,
            values,
        } => {
            let cfg = load(&common)?;
            let out = out_dir(&common, &cfg);
            let rows = sweep::sweep(
                &cfg,
                base_dir(&common),
                &vary,
                &values,
                &out,
                sweep::thread_cap()?,
            )?;
            sweep::write_rows(&mut io::stdout().lock(), &rows)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("polarsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
