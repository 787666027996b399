//! The `setlab` command line.
//!
//! Exit codes: 0 success, 1 a verification check failed, 2 configuration or
//! search error, 3 training diverged.

pub mod suite;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::approx::{emit_contour_grid, find_collision, ContourTarget, PhiSpec, SearchBudget};
use crate::error::{Error, Result};
use crate::nnet::{self, Checkpoint, TrainConfig};
use crate::sets::SetInput;
use crate::sumdec::{self, LatentVec, VarSizeCodec};

pub use suite::{run_suite, CheckRecord, Status, Suite, SuiteReport, Summary, REPORT_SCHEMA};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

pub const SEARCH_FAILURE_SCHEMA: &str = "setlab.search_failure/v1";

#[derive(Debug, Parser)]
#[command(
    name = "setlab",
    version,
    about = "Sum-decomposition, Janossy pooling and latent bottleneck certificates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ContourFn {
    Max,
    LseMax,
    FStar,
    Model,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a suite of invariant checks and write a JSON report.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace every check's tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Search for a collision certificate of an encoder.
    Collide {
        #[arg(long)]
        phi: PathBuf,
        #[arg(long = "m", short = 'm')]
        m: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Quasi-random starts per search round.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate a two-element set function on a grid over [-1, 1]^2.
    Contours {
        #[arg(long = "fn", value_enum)]
        function: ContourFn,
        /// Sharpness of the smooth maximum.
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Checkpoint for `--fn model`.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long = "m", short = 'm', default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 201)]
        resolution: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train a Deep Sets model from a JSON config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Encode multisets (CSV rows) into power-sum latents.
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Use the variable-size codec with this capacity.
        #[arg(long)]
        m_max: Option<usize>,
        #[arg(long, default_value_t = 2.0)]
        filler: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Decode power-sum latents (CSV rows) back into sorted multisets.
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Use the variable-size codec with this capacity.
        #[arg(long)]
        m_max: Option<usize>,
        #[arg(long, default_value_t = 2.0)]
        filler: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Divergence(_) => EXIT_DIVERGED,
        _ => EXIT_CONFIG,
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("setlab: {e}");
            exit_code(&e)
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_path(path)?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::config(format!("bad number {s:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn write_rows(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_path(path)?;
    for r in rows {
        if r.is_empty() {
            w.write_record([""])?;
        } else {
            w.write_record(r.iter().map(|v| fmt_float(*v)))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Verify {
            suite,
            seed,
            out,
            tol,
        } => {
            let report = run_suite(suite, seed, tol);
            for c in &report.checks {
                let status = match c.status {
                    Status::Pass => "pass",
                    Status::Fail => "FAIL",
                    Status::Skip => "skip",
                };
                println!(
                    "{status:4}  {:<34} residual {:.3e}  tolerance {:.1e}",
                    c.name, c.residual, c.tolerance
                );
            }
            println!(
                "{} passed, {} failed, {} skipped",
                report.summary.passed, report.summary.failed, report.summary.skipped
            );
            if let Some(path) = out {
                write_json(&path, &report)?;
            }
            Ok(if report.all_passed() {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            })
        }
        Command::Collide {
            phi,
            m,
            tol,
            budget,
            out,
            seed,
        } => {
            let spec = PhiSpec::from_json(&fs::read_to_string(&phi)?)?;
            let budget = budget.map(SearchBudget::with_starts).unwrap_or_default();
            match find_collision(&spec, m, tol, &budget, seed) {
                Ok(cert) => {
                    cert.verify(&spec)?;
                    write_json(&out, &cert)?;
                    println!(
                        "certified: residual {:.3e}, z* = {:?}",
                        cert.phi_residual, cert.z_star
                    );
                    Ok(EXIT_OK)
                }
                Err(Error::SearchExhausted {
                    best_residual,
                    trace,
                }) => {
                    let failure = serde_json::json!({
                        "schema": SEARCH_FAILURE_SCHEMA,
                        "M": m,
                        "seed": seed,
                        "best_residual": best_residual,
                        "search_trace": trace,
                    });
                    write_json(&out, &failure)?;
                    eprintln!("setlab: search exhausted, best residual {best_residual:.3e}");
                    Ok(EXIT_CONFIG)
                }
                Err(e) => Err(e),
            }
        }
        Command::Contours {
            function,
            a,
            model,
            m,
            resolution,
            out,
            seed: _,
        } => {
            let checkpoint = match (function, &model) {
                (ContourFn::Model, Some(p)) => {
                    Some(Checkpoint::from_json(&fs::read_to_string(p)?)?)
                }
                (ContourFn::Model, None) => return Err(Error::config("--fn model needs --model")),
                _ => None,
            };
            let target = match function {
                ContourFn::Max => ContourTarget::Max,
                ContourFn::LseMax => ContourTarget::LseMax(a),
                ContourFn::FStar => ContourTarget::FStar,
                ContourFn::Model => {
                    ContourTarget::Model(&checkpoint.as_ref().expect("loaded above").model)
                }
            };
            let grid = emit_contour_grid(&target, m, resolution)?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            grid.write_csv(fs::File::create(&out)?)?;
            Ok(EXIT_OK)
        }
        Command::Train { config, out, seed } => {
            let mut cfg: TrainConfig = serde_json::from_str(&fs::read_to_string(&config)?)
                .map_err(|e| Error::config(format!("{}: {e}", config.display())))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let (model, metrics) = nnet::train(&cfg)?;
            fs::create_dir_all(&out)?;
            let checkpoint = Checkpoint::new(model, &cfg);
            write_json(&out.join("phi.json"), &checkpoint.model.export_phi())?;
            write_json(&out.join("metrics.json"), &metrics)?;
            write_json(&out.join("checkpoint.json"), &checkpoint)?;
            println!(
                "trained: final loss {:.3e}, grid max error {:.3}, checkpoint {}",
                metrics.final_loss,
                metrics.grid_max_error,
                checkpoint.hash()
            );
            Ok(EXIT_OK)
        }
        Command::Encode {
            input,
            out,
            m_max,
            filler,
            seed: _,
        } => {
            let rows = read_rows(&input)?;
            let encoded = match m_max {
                Some(cap) => {
                    let codec = VarSizeCodec::with_filler(cap, filler)?;
                    rows.iter()
                        .map(|r| sumdec::varsize_encode(r, &codec).map(|l| l.coords().to_vec()))
                        .collect::<Result<Vec<_>>>()?
                }
                None => rows
                    .into_iter()
                    .map(|r| {
                        sumdec::power_sum_encode(&SetInput::new(r)?).map(|l| l.coords().to_vec())
                    })
                    .collect::<Result<Vec<_>>>()?,
            };
            write_rows(&out, &encoded)?;
            Ok(EXIT_OK)
        }
        Command::Decode {
            input,
            out,
            m_max,
            filler,
            seed: _,
        } => {
            let rows = read_rows(&input)?;
            let codec = m_max
                .map(|cap| VarSizeCodec::with_filler(cap, filler))
                .transpose()?;
            let decoded = rows
                .into_iter()
                .map(|r| {
                    let m = r.len();
                    let latent = LatentVec::new(r)?;
                    let point = match &codec {
                        Some(c) => sumdec::varsize_decode(&latent, c)?,
                        None => sumdec::power_sum_decode(&latent, m)?,
                    };
                    Ok(point.into_coords())
                })
                .collect::<Result<Vec<_>>>()?;
            write_rows(&out, &decoded)?;
            Ok(EXIT_OK)
        }
    }
}
