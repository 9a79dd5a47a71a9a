use serde::{Deserialize, Serialize};

use super::config::{ActivationPair, SweepConfig};
use super::pair::{run_pair, CellSpec, Replicate};
use crate::seed::CellSeeds;
use crate::theory::{cce_theory, gen_error_asymptotic};
use crate::{Error, Execution, Result};

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
}

/// Sample mean and `sd / sqrt(m)`; the error is NaN with fewer than two values.
pub fn mean_stderr(values: &[f64]) -> Stat {
    let m = values.len() as f64;
    if values.is_empty() {
        return Stat {
            mean: f64::NAN,
            stderr: f64::NAN,
        };
    }
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return Stat { mean, stderr: f64::NAN };
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    Stat {
        mean,
        stderr: (var / m).sqrt(),
    }
}

/// One aggregated grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Grid value (`alpha` or `gamma`).
    pub alpha: f64,
    /// `None` for label-noise sweeps.
    pub snr: Option<f64>,
    pub n: usize,
    pub cce_ab: Stat,
    pub cce_ba: Stat,
    pub gen_err_a: Stat,
    pub gen_err_b: Stat,
    pub cce_theory: Option<f64>,
    pub gen_err_theory: Option<f64>,
    pub n_replicates: usize,
    pub failures: usize,
    /// Label-noise rate (classification sweeps only).
    pub p: Option<f64>,
    /// `n / parameter count` (classification sweeps only).
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    /// JSON echo of the resolved configuration.
    pub config: serde_json::Value,
    pub version: String,
    pub generated_at_unix: u64,
    /// First failure message per failed cell, in cell order.
    pub failure_messages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub metadata: SweepMetadata,
}

impl SweepMetadata {
    pub fn new<C: Serialize>(config: &C) -> Self {
        SweepMetadata {
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            version: format!("repalign {}", env!("CARGO_PKG_VERSION")),
            generated_at_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            failure_messages: Vec::new(),
        }
    }
}

/// Aggregates the successful replicates of one grid point.
pub fn aggregate(reps: &[Replicate]) -> (Stat, Stat, Stat, Stat) {
    let col = |f: fn(&Replicate) -> f64| mean_stderr(&reps.iter().map(f).collect::<Vec<_>>());
    (col(|r| r.cce_ab), col(|r| r.cce_ba), col(|r| r.gen_err_a), col(|r| r.gen_err_b))
}

pub fn run_sweep(config: &SweepConfig, exec: Execution) -> Result<SweepResult> {
    config.validate()?;
    let cells: Vec<(usize, usize, usize)> = (0..config.alphas.len())
        .flat_map(|a| (0..config.snrs.len()).flat_map(move |s| (0..config.ensembles).map(move |r| (a, s, r))))
        .collect();

    let outcomes = exec.map_slice(&cells, |&(ai, si, rep)| {
        let x = config.alphas[ai];
        let snr = config.snrs[si];
        let spec = CellSpec {
            d: config.d,
            k: config.k,
            n: config.n_for(x),
            snr,
            sigma_w2: config.sigma_w2,
            pair: config.activation_pair,
            solver: config.solver,
            n_test: config.n_test,
            n_cce: config.n_cce,
            train: config.train,
            same_dataset: config.same_dataset,
        };
        let seeds = CellSeeds::new(config.master_seed, &[ai as u64, si as u64, rep as u64]);
        run_pair(&spec, &seeds).map_err(|e| Error::Cell {
            cell: format!("alpha={x} snr={snr} replicate={rep}"),
            source: Box::new(e),
        })
    });

    let failed = outcomes.iter().filter(|o| o.is_err()).count();
    if failed as f64 > config.max_failure_fraction * cells.len() as f64 {
        return Err(Error::SweepFailed {
            failed,
            total: cells.len(),
        });
    }

    let mut metadata = SweepMetadata::new(config);
    metadata.failure_messages = outcomes
        .iter()
        .filter_map(|o| o.as_ref().err().map(|e| e.to_string()))
        .collect();

    let per_point = config.ensembles;
    let mut rows = Vec::with_capacity(config.alphas.len() * config.snrs.len());
    for (block, chunk) in outcomes.chunks(per_point).enumerate() {
        let (ai, si) = (block / config.snrs.len(), block % config.snrs.len());
        let (x, snr) = (config.alphas[ai], config.snrs[si]);
        let reps: Vec<Replicate> = chunk.iter().filter_map(|o| o.as_ref().ok().copied()).collect();
        let (cce_ab, cce_ba, gen_err_a, gen_err_b) = aggregate(&reps);
        let linear = config.activation_pair == ActivationPair::LinearLinear;
        let (cce_th, gen_th) = if linear {
            let sigma_eps2 = if snr == 0.0 { config.sigma_w2 } else { config.sigma_w2 / snr };
            let sigma_w2 = if snr == 0.0 { 0.0 } else { config.sigma_w2 };
            let gen = match gen_error_asymptotic(x, sigma_w2, sigma_eps2) {
                Ok(v) => v,
                Err(Error::Divergent { .. }) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            (Some(cce_theory(x, snr)?), Some(gen))
        } else {
            (None, None)
        };
        rows.push(SweepRow {
            alpha: x,
            snr: Some(snr),
            n: config.n_for(x),
            cce_ab,
            cce_ba,
            gen_err_a,
            gen_err_b,
            cce_theory: cce_th,
            gen_err_theory: gen_th,
            n_replicates: reps.len(),
            failures: chunk.len() - reps.len(),
            p: None,
            gamma: None,
        });
    }
    Ok(SweepResult { rows, metadata })
}
