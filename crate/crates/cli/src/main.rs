use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dpleak::curve::{self, Metric};
use dpleak::files::{read_mechanism, read_source};
use dpleak::{report, CliError, Result};

#[derive(Parser)]
#[command(name = "dpleak", version, about = "Optimal DP and mutual-information leakage of source sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Dp,
    It,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum LogBase {
    E,
    #[value(name = "2")]
    Two,
}

#[derive(Subcommand)]
enum Command {
    /// Class of the source set
    Classify { source: PathBuf },
    /// Leakage-distortion curve as CSV
    Curve {
        source: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        metric: MetricArg,
        #[arg(long, default_value_t = 0.005)]
        dmin: f64,
        #[arg(long, default_value_t = 1.0)]
        dmax: f64,
        #[arg(long, default_value_t = 0.005)]
        step: f64,
        #[arg(long = "log-base", value_enum, default_value = "e")]
        log_base: LogBase,
        /// Saddle-gap tolerance of the IT solver (nats)
        #[arg(long, default_value_t = dpleak_core::it::DEFAULT_TOL)]
        tol: f64,
        /// Output file; stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Thresholds D(1..M)
    Thresholds { source: PathBuf },
    /// Optimal DP leakage and mechanism at one distortion
    DpOpt {
        source: PathBuf,
        #[arg(long)]
        distortion: f64,
        /// Also write the mechanism JSON here
        #[arg(long)]
        mechanism_out: Option<PathBuf>,
    },
    /// Optimal mutual-information leakage at one distortion
    ItOpt {
        source: PathBuf,
        #[arg(long)]
        distortion: f64,
        #[arg(long, default_value_t = dpleak_core::it::DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        mechanism_out: Option<PathBuf>,
    },
    /// Leakage, validity and staircase shape of a mechanism
    Verify {
        mechanism: PathBuf,
        source: PathBuf,
        #[arg(long)]
        distortion: f64,
    },
    /// Brute-force DP leakage on a grid of mechanisms (M <= 3)
    Oracle {
        source: PathBuf,
        #[arg(long)]
        grid: f64,
        #[arg(long)]
        distortion: f64,
    },
}

fn write_mechanism(path: &Option<PathBuf>, q: &dpleak_core::Mechanism) -> Result<()> {
    if let Some(p) = path {
        fs::write(p, dpleak::files::mechanism_json(q) + "\n")?;
    }
    Ok(())
}

fn write_curve(out: &Option<PathBuf>, rows: &[curve::CurveRow], base: f64) -> Result<()> {
    match out {
        None => curve::write_csv(rows, base, io::stdout().lock()),
        Some(path) => {
            let result = fs::File::create(path).map_err(CliError::from).and_then(|f| curve::write_csv(rows, base, f));
            if result.is_err() {
                let _ = fs::remove_file(path);
            }
            result
        }
    }
}

fn remove_stale(out: &Option<PathBuf>) {
    if let Some(path) = out.as_deref().filter(|p| Path::exists(p)) {
        let _ = fs::remove_file(path);
    }
}

fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Classify { source } => report::classify_report(&read_source(&source)?),
        Command::Thresholds { source } => report::thresholds_report(&read_source(&source)?),
        Command::Curve { source, metric, dmin, dmax, step, log_base, tol, out } => {
            let s = read_source(&source)?;
            let points = curve::grid(dmin, dmax, step)?;
            let metric = match metric {
                MetricArg::Dp => Metric::Dp,
                MetricArg::It => Metric::It,
                MetricArg::Both => Metric::Both,
            };
            let base = match log_base {
                LogBase::E => std::f64::consts::E,
                LogBase::Two => 2.0,
            };
            match curve::compute(&s, &points, metric, tol) {
                Ok(rows) => write_curve(&out, &rows, base)?,
                Err(e) => {
                    remove_stale(&out);
                    return Err(e);
                }
            }
            Ok(String::new())
        }
        Command::DpOpt { source, distortion, mechanism_out } => {
            let (text, q) = report::dp_report(&read_source(&source)?, distortion)?;
            if let Some(q) = &q {
                write_mechanism(&mechanism_out, q)?;
            }
            Ok(text)
        }
        Command::ItOpt { source, distortion, tol, mechanism_out } => {
            let (text, q) = report::it_report(&read_source(&source)?, distortion, tol)?;
            write_mechanism(&mechanism_out, &q)?;
            Ok(text)
        }
        Command::Verify { mechanism, source, distortion } => {
            report::verify_report(&read_mechanism(&mechanism)?, &read_source(&source)?, distortion)
        }
        Command::Oracle { source, grid, distortion } => {
            report::oracle_report(&read_source(&source)?, distortion, grid)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(text) => {
            let _ = io::stdout().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
