//! Config-driven experiments with seeded, worker-count-independent results.

mod config;
mod experiments;
mod table;

use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};

pub use config::{CalibrationMode, ExperimentConfig, ExperimentKind};
pub use experiments::{draw_block, CALIBRATION_BLOCK, LIMIT_BLOCK};
pub use table::{read_table, write_table, Cell, Format, Metadata, Table};

/// Overrides the worker count of [`run_experiment`].
pub const WORKERS_ENV: &str = "ISING_INFER_WORKERS";

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOutput {
    pub metadata: Metadata,
    /// One row per replication or grid point.
    pub records: Table,
    /// Empirical figures next to their theoretical predictions.
    pub summary: Table,
}

pub fn metadata(cfg: &ExperimentConfig) -> Metadata {
    Metadata {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: cfg.experiment.name().into(),
        config_sha256: cfg.hash(),
    }
}

fn workers() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(Error::config(
                WORKERS_ENV,
                format!("`{v}` is not a positive integer"),
            )),
        },
        Err(_) => Ok(None),
    }
}

/// Runs `cfg`. Output is a function of the config alone.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let run = || -> Result<ExperimentOutput> {
        let (records, summary) = match cfg.experiment {
            ExperimentKind::EstimatorLaw => experiments::estimator_law(cfg)?,
            ExperimentKind::PowerCurve => experiments::power_curve(cfg)?,
            ExperimentKind::LimitLawDensity => experiments::limit_law_density(cfg)?,
            ExperimentKind::NormalizerCheck => experiments::normalizer_check(cfg)?,
            ExperimentKind::SpectrumReport => experiments::spectrum_report(cfg)?,
        };
        Ok(ExperimentOutput {
            metadata: metadata(cfg),
            records,
            summary,
        })
    };
    match workers()? {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::config(WORKERS_ENV, e.to_string()))?
            .install(run),
        None => run(),
    }
}

/// Writes `<output_path>.records.<ext>` and `<output_path>.summary.<ext>`.
/// Nothing is written if either table is empty.
pub fn emit(
    out: &ExperimentOutput,
    cfg: &ExperimentConfig,
    format: Format,
) -> Result<Vec<PathBuf>> {
    if out.records.is_empty() || out.summary.is_empty() {
        return Err(Error::param("no records to emit"));
    }
    let mut paths = Vec::new();
    for (suffix, table) in [("records", &out.records), ("summary", &out.summary)] {
        let p = table::with_suffix(&cfg.output_path, suffix, format);
        write_table(table, &out.metadata, &p, format)?;
        paths.push(p);
    }
    Ok(paths)
}
