use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use christoffel_core::christoffel::{christoffel_eval_with, EvalOptions, Precision};
use christoffel_core::constructions::{bound_rhs, certify};
use christoffel_core::geometry::measure;
use christoffel_core::harness::{emit, resolve_body, run_experiment, Format, Params, RunContext, EXPERIMENTS};
use christoffel_core::quadrature::{moment_table_csv, MC_DEFAULT_SEED};
use christoffel_core::{Error, Result};

#[derive(Parser)]
#[command(name = "christoffel", version, about = "Christoffel functions of convex bodies")]
struct Cli {
    #[arg(long, value_enum, global = true, default_value = "double")]
    precision: PrecisionArg,
    /// Seed for randomized experiment grids.
    #[arg(long, global = true, default_value_t = MC_DEFAULT_SEED)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Double,
    Extended,
}

#[derive(Clone, Copy, ValueEnum)]
enum RowFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct Target {
    /// Preset (`disc`, `square`, `lpball:1.5`, `halfball3`, `sharp2d:d,l1,l2`, `sharpnd:d,v,dim`) or JSON file.
    #[arg(long, alias = "body-file")]
    body: String,
    /// Comma-separated coordinates; sharpness presets default to their extremal point.
    #[arg(long, allow_hyphen_values = true)]
    point: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate lambda_n(D, x).
    Eval {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: RowFormat,
        /// Evaluate on the John-normalized image of the body.
        #[arg(long)]
        john: bool,
        /// Also write the moment table up to degree 2n to this CSV file.
        #[arg(long)]
        dump_moments: Option<PathBuf>,
    },
    /// Exit distance, chords and section volume at a point.
    Measure {
        #[command(flatten)]
        target: Target,
        /// Direction (comma-separated); defaults to the nearest boundary direction.
        #[arg(long, allow_hyphen_values = true)]
        dir: Option<String>,
    },
    /// Right-hand side of the upper bound at a point.
    Bound {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        dir: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
    },
    /// Box map and needle-polynomial certificate at a point.
    Certify {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        n: usize,
    },
    /// Run a named experiment and write its report.
    Experiment {
        /// Experiment name; `list` prints the registry.
        name: String,
        #[arg(long = "param")]
        params: Vec<String>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Output formats (csv, json, svg); may be repeated.
        #[arg(long, default_values = ["json"])]
        format: Vec<String>,
    },
}

fn parse_point(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::ParameterOutOfRange(format!("cannot parse coordinate `{t}`"))))
        .collect()
}

fn resolve(target: &Target) -> Result<(christoffel_core::geometry::ConvexBody, Vec<f64>)> {
    let r = resolve_body(&target.body)?;
    let x = match (&target.point, r.point) {
        (Some(p), _) => parse_point(p)?,
        (None, Some(p)) => p,
        (None, None) => return Err(Error::ParameterOutOfRange("--point is required for this body".into())),
    };
    Ok((r.body, x))
}

fn print(v: &serde_json::Value) {
    use std::io::Write;
    // A closed pipe downstream is not an error worth reporting.
    let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(v).expect("json values serialize"));
}

fn run(cli: Cli) -> Result<()> {
    let precision = match cli.precision {
        PrecisionArg::Double => Precision::Double,
        PrecisionArg::Extended => Precision::Extended,
    };
    match cli.command {
        Command::Eval { target, n, format, john, dump_moments } => {
            let (body, x) = resolve(&target)?;
            if let Some(path) = dump_moments {
                std::fs::write(path, moment_table_csv(&body, 2 * n)?)?;
            }
            let v = christoffel_eval_with(&body, n, &x, EvalOptions { precision, john })?;
            for w in &v.diagnostics.warnings {
                eprintln!("warning: {w}");
            }
            match format {
                RowFormat::Json => print(&json!({
                    "lambda": v.lambda,
                    "n": n,
                    "x": v.x,
                    "basis_size": v.diagnostics.basis_size,
                    "condition": v.diagnostics.condition,
                    "method": v.diagnostics.method,
                    "exterior": v.diagnostics.exterior,
                    "warnings": v.diagnostics.warnings,
                })),
                RowFormat::Csv => {
                    let xs = v.x.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";");
                    println!("lambda,n,x,basis_size,condition");
                    println!("{:e},{n},{xs},{},{:e}", v.lambda, v.diagnostics.basis_size, v.diagnostics.condition);
                }
            }
        }
        Command::Measure { target, dir } => {
            let (body, x) = resolve(&target)?;
            let u = dir.as_deref().map(parse_point).transpose()?;
            print(&serde_json::to_value(measure(&body, &x, u.as_deref())?)?);
        }
        Command::Bound { target, n, dir, sigma } => {
            let (body, x) = resolve(&target)?;
            let u = dir.as_deref().map(parse_point).transpose()?;
            let m = measure(&body, &x, u.as_deref())?;
            let rhs = bound_rhs(&m, n, sigma)?;
            print(&json!({ "n": n, "sigma": sigma, "rhs": rhs, "measurement": m }));
        }
        Command::Certify { target, n } => {
            let (body, x) = resolve(&target)?;
            let (m, cert) = certify(&body, &x, n)?;
            print(&json!({ "measurement": m, "certificate": cert }));
        }
        Command::Experiment { name, params, out, format } => {
            if name == "list" {
                for e in EXPERIMENTS {
                    println!("{:<20} {}  [{}]", e.name, e.about, e.keys.join(", "));
                }
                return Ok(());
            }
            let formats = format.iter().map(|f| f.parse::<Format>()).collect::<Result<Vec<_>>>()?;
            let report = run_experiment(&name, &Params::parse(&params)?, &RunContext { precision, seed: cli.seed })?;
            for f in formats {
                for path in emit(&report, f, &out)? {
                    println!("{}", path.display());
                }
            }
            let s = &report.summary;
            eprintln!(
                "{}: {} records, ratio in [{:.4e}, {:.4e}], {:.1}s",
                report.name,
                report.records.len(),
                s.ratio_min,
                s.ratio_max,
                report.runtime_secs
            );
            for fit in &s.fits {
                eprintln!("  {}: slope {:.4} ± {:.4}", fit.slice, fit.slope, fit.stderr);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_invariant_violation() {
                ExitCode::from(2)
            } else if e.is_numerical_failure() {
                ExitCode::from(3)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
