//! Scans over temperature and cluster size for dephasing-probe thermometry.
//!
//! Each command evaluates a [`RunConfig`] on its β grid, one β point per
//! worker, and assembles the rows in grid order. The same config and seed
//! always produce the same bytes of CSV; timings only enter the metadata.

pub mod config;
pub mod error;
pub mod output;
pub mod pool;
pub mod scan;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thermoprobe_core::fit::log_log_fit;

pub use config::{Format, Model, RunConfig};
pub use error::CliError;
pub use output::Rows;
use output::{FidRow, LocalFiRow, QfiRow, ScalingRow};
use scan::{Needs, PointResult, Scan};

/// Fewest cluster sizes a scaling fit accepts.
pub const MIN_SCALING_POINTS: usize = 4;

/// Optimal QFI below this fraction of the largest one at the same β counts
/// as zero (a single spin at zero field, up to rounding) and stays out of
/// the log-log fit.
pub const SCALING_ZERO: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    /// Optimal probe QFI per (β, n).
    QfiScan,
    /// Fisher information of reading out the cluster, with the QFI ratio.
    LocalFiScan,
    /// Optimal QFI against cluster size, with a log-log slope per β.
    Scaling,
    /// Free induction decay traces and decay times.
    Fid,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::QfiScan => "qfi-scan",
            Command::LocalFiScan => "local-fi-scan",
            Command::Scaling => "scaling",
            Command::Fid => "fid",
        }
    }

    fn needs(self) -> Needs {
        match self {
            Command::QfiScan | Command::Scaling => Needs {
                qfi: true,
                ..Needs::default()
            },
            Command::LocalFiScan => Needs {
                qfi: true,
                local_fi: true,
                ..Needs::default()
            },
            Command::Fid => Needs {
                fid: true,
                ..Needs::default()
            },
        }
    }

    fn check(self, config: &RunConfig) -> Result<(), CliError> {
        let model = config.model;
        let unsupported = |what: &str| Err(CliError::Config(format!("{} does not support {what} (model {})", self.name(), model.name())));
        match self {
            Command::LocalFiScan if matches!(model, Model::Mft | Model::Hte) => unsupported("a cluster readout"),
            Command::Fid if matches!(model, Model::Mft | Model::Hte) => unsupported("FID traces"),
            Command::Scaling if model == Model::Cw => unsupported("cluster sizes"),
            Command::Scaling if config.radii.len() < MIN_SCALING_POINTS => Err(CliError::Config(format!(
                "scaling needs at least {MIN_SCALING_POINTS} radii, got {}",
                config.radii.len()
            ))),
            _ => Ok(()),
        }
    }
}

/// Settings that change how a run executes but not what it computes.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Directory holding per-point sampler checkpoints.
    pub resume: Option<PathBuf>,
    /// Escalate under-sampling warnings to an error.
    pub strict: bool,
    /// Worker count; `None` reads `THREADS` or uses the available parallelism.
    pub threads: Option<usize>,
}

/// A finished dataset with its metadata.
#[derive(Clone, Debug)]
pub struct Report {
    pub command: Command,
    pub rows: Rows,
    pub metadata: Value,
    pub points: Vec<PointResult>,
    pub undersampled: usize,
}

/// Hex SHA-256 of the canonical config.
pub fn config_hash(config: &RunConfig) -> String {
    let digest = Sha256::digest(config.canonical_json().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn prepare_checkpoints(dir: &Path, command: Command, hash: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    let stamp = dir.join("run.sha256");
    let expected = format!("{} {hash}\n", command.name());
    match std::fs::read_to_string(&stamp) {
        Ok(found) if found == expected => Ok(()),
        Ok(_) => Err(CliError::Config(format!(
            "checkpoint directory {} belongs to a different run",
            dir.display()
        ))),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(std::fs::write(stamp, expected)?),
        Err(e) => Err(e.into()),
    }
}

/// Evaluates a command without writing anything but checkpoints.
pub fn run(command: Command, config: &RunConfig, options: &RunOptions) -> Result<Report, CliError> {
    let start = Instant::now();
    config.validate()?;
    command.check(config)?;
    let hash = config_hash(config);
    let checkpoints = match (&options.resume, config.model) {
        (Some(dir), Model::Mc) => {
            prepare_checkpoints(dir, command, &hash)?;
            Some(dir.clone())
        }
        _ => None,
    };
    let scan = Scan::new(config, command.needs(), checkpoints)?;
    if command == Command::LocalFiScan && config.model == Model::Mc {
        if let Some(c) = scan.lattice.as_ref().unwrap().1.iter().find(|c| c.len() > config.sampler.marginal_cap) {
            return Err(CliError::Config(format!(
                "cluster of {} spins exceeds the marginal cap {}",
                c.len(),
                config.sampler.marginal_cap
            )));
        }
    }
    let ratios = config.beta_ratios()?;
    let threads = match options.threads {
        Some(t) => t,
        None => pool::thread_count()?,
    };
    let points = pool::run_ordered(ratios.len(), threads, |k| scan.evaluate(k, ratios[k]))?;

    let mut warnings = scan.notes.clone();
    warnings.extend(points.iter().flat_map(|p| p.warnings.iter().cloned()));
    let mut extra = serde_json::Map::new();
    let rows = match command {
        Command::QfiScan => Rows::Qfi(qfi_rows(&points)),
        Command::LocalFiScan => Rows::LocalFi(local_fi_rows(&points)),
        Command::Scaling => {
            let (rows, fits) = scaling(&points, &mut warnings)?;
            extra.insert("fits".into(), fits);
            Rows::Scaling(rows)
        }
        Command::Fid => {
            let (rows, decay) = fid(&points);
            extra.insert("decay_times".into(), decay);
            Rows::Fid(rows)
        }
    };
    let undersampled = points.iter().flat_map(|p| &p.clusters).filter(|c| c.undersampled).count();

    let mut metadata = json!({
        "command": command.name(),
        "model": config.model.name(),
        "config": serde_json::to_value(config)?,
        "config_sha256": hash,
        "versions": {
            "thermoprobe": env!("CARGO_PKG_VERSION"),
            "thermoprobe_core": thermoprobe_core::VERSION,
        },
        "beta_c": config.beta_c(),
        "threads": threads,
        "seeds": points.iter().filter_map(|p| p.seed.map(|(seed, stream)| json!({
            "beta_over_beta_c": p.beta_ratio,
            "seed": seed,
            "stream": stream,
        }))).collect::<Vec<_>>(),
        "runtimes": {
            "total_seconds": start.elapsed().as_secs_f64(),
            "points": points.iter().map(|p| json!({
                "beta_over_beta_c": p.beta_ratio,
                "seconds": p.seconds,
            })).collect::<Vec<_>>(),
        },
        "undersampled": undersampled,
        "warnings": warnings,
    });
    metadata.as_object_mut().unwrap().extend(extra);
    Ok(Report {
        command,
        rows,
        metadata,
        points,
        undersampled,
    })
}

/// Runs, writes the outputs, then applies `--strict`.
pub fn execute(command: Command, config: &RunConfig, options: &RunOptions) -> Result<Report, CliError> {
    let report = run(command, config, options)?;
    output::emit(&report.rows, &report.metadata, config.format, config.out.as_deref())?;
    if options.strict && report.undersampled > 0 {
        return Err(CliError::Undersampled(report.undersampled));
    }
    Ok(report)
}

fn qfi_rows(points: &[PointResult]) -> Vec<QfiRow> {
    let mut rows = Vec::new();
    for p in points {
        for c in &p.clusters {
            let q = c.qfi.as_ref().expect("qfi requested");
            rows.push(QfiRow {
                beta_over_beta_c: p.beta_ratio,
                n: c.n,
                t_opt: q.t_opt,
                beta2_f_opt: q.scaled_opt(p.beta),
                stderr: p.beta * p.beta * q.qfi_opt_err,
            });
        }
    }
    rows
}

fn local_fi_rows(points: &[PointResult]) -> Vec<LocalFiRow> {
    let mut rows = Vec::new();
    for p in points {
        for c in &p.clusters {
            let fi = c.local_fi.expect("local FI requested");
            let ratio = c.ratio.expect("ratio requested");
            rows.push(LocalFiRow {
                beta_over_beta_c: p.beta_ratio,
                n: c.n,
                f_lc: fi.value,
                stderr: fi.std_error,
                ratio: ratio.value,
                ratio_stderr: ratio.std_error,
            });
        }
    }
    rows
}

fn scaling(points: &[PointResult], warnings: &mut Vec<String>) -> Result<(Vec<ScalingRow>, Value), CliError> {
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for p in points {
        let (mut sizes, mut values, mut dropped) = (Vec::new(), Vec::new(), Vec::new());
        let largest = p.clusters.iter().map(|c| c.qfi.as_ref().map_or(0.0, |q| q.qfi_opt)).fold(0.0, f64::max);
        for c in &p.clusters {
            let q = c.qfi.as_ref().expect("qfi requested");
            rows.push(ScalingRow {
                beta_over_beta_c: p.beta_ratio,
                n: c.n,
                f_opt: q.qfi_opt,
                stderr: q.qfi_opt_err,
            });
            if q.qfi_opt > SCALING_ZERO * largest {
                sizes.push(c.n as f64);
                values.push(q.qfi_opt);
            } else {
                dropped.push(c.n);
            }
        }
        if !dropped.is_empty() {
            warnings.push(format!(
                "β/β_c = {}: F_opt vanishes for n = {dropped:?}, left out of the log-log fit",
                p.beta_ratio
            ));
        }
        let fit = log_log_fit(&sizes, &values, MIN_SCALING_POINTS)?;
        fits.push(json!({
            "beta_over_beta_c": p.beta_ratio,
            "slope": fit.slope,
            "slope_error": fit.slope_error,
            "intercept": fit.intercept,
            "points": fit.points,
            "dropped": dropped,
        }));
    }
    Ok((rows, Value::Array(fits)))
}

fn fid(points: &[PointResult]) -> (Vec<FidRow>, Value) {
    let mut rows = Vec::new();
    let mut decay = Vec::new();
    for p in points {
        for c in &p.clusters {
            let f = c.fid.as_ref().expect("fid requested");
            for k in 0..f.times.len() {
                rows.push(FidRow {
                    beta_over_beta_c: p.beta_ratio,
                    n: c.n,
                    t: f.times[k],
                    fid: f.fid[k],
                    abs_r: f.abs_r[k],
                });
            }
            decay.push(json!({
                "beta_over_beta_c": p.beta_ratio,
                "n": c.n,
                "decay_time": f.decay_time,
                "infinite": f.decay_time.is_none(),
            }));
        }
    }
    (rows, Value::Array(decay))
}
