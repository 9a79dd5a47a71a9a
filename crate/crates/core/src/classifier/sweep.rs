use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::fcnn::{param_count, FcnnNet, TrainSchedule};
use super::idx::{load_idx, LabeledImages};
use super::noise::{inject_label_noise, NoiseSpec};
use crate::experiments::{aggregate, Replicate, SweepMetadata, SweepResult, SweepRow};
use crate::metrics::{cce_between_with, MIN_CCE_POINTS};
use crate::seed::{derive, CellSeeds, Stream};
use crate::{Error, Execution, Result};

/// Environment variable naming the directory with the MNIST IDX files.
pub const MNIST_DIR_ENV: &str = "REPALIGN_MNIST_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelNoiseConfig {
    pub k: usize,
    /// Training-subset sizes; each pair of networks uses two disjoint subsets.
    pub n_grid: Vec<usize>,
    pub p_list: Vec<f64>,
    pub replicates: usize,
    pub master_seed: u64,
    pub schedule: TrainSchedule,
    /// Test images used for the error rate (leading slice of the test set).
    pub n_test: usize,
    /// Test images used for the CCE (seeded subsample of the evaluated ones).
    pub n_cce: usize,
    pub max_failure_fraction: f64,
}

impl Default for LabelNoiseConfig {
    fn default() -> Self {
        LabelNoiseConfig::fig5_mnist()
    }
}

impl LabelNoiseConfig {
    pub fn fig5_mnist() -> Self {
        LabelNoiseConfig {
            k: 64,
            n_grid: vec![256, 1024, 4096, 16384],
            p_list: vec![0.0, 0.2, 0.4],
            replicates: 3,
            master_seed: 0,
            schedule: TrainSchedule::default(),
            n_test: 10_000,
            n_cce: 2000,
            max_failure_fraction: 0.1,
        }
    }

    /// Pipeline liveness check.
    pub fn smoke() -> Self {
        LabelNoiseConfig {
            n_grid: vec![256, 2048],
            p_list: vec![0.0, 0.2],
            replicates: 2,
            schedule: TrainSchedule {
                epochs: 50,
                ..TrainSchedule::default()
            },
            ..LabelNoiseConfig::fig5_mnist()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "fig5-mnist" => Ok(LabelNoiseConfig::fig5_mnist()),
            "smoke" => Ok(LabelNoiseConfig::smoke()),
            other => Err(Error::Config(format!(
                "unknown preset '{other}' (expected fig5-mnist or smoke)"
            ))),
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: LabelNoiseConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.k == 0 {
            return fail("k must be >= 1".into());
        }
        if self.n_grid.is_empty() || self.p_list.is_empty() {
            return fail("n_grid and p_list must be non-empty".into());
        }
        if self.n_grid.contains(&0) {
            return fail("n_grid values must be >= 1".into());
        }
        if let Some(p) = self.p_list.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return fail(format!("label-noise rates must lie in [0, 1], got {p}"));
        }
        if self.replicates < 2 {
            return fail(format!("replicates must be >= 2, got {}", self.replicates));
        }
        if self.n_cce < MIN_CCE_POINTS || self.n_cce > self.n_test {
            return fail(format!(
                "n_cce must lie in [{MIN_CCE_POINTS}, n_test = {}], got {}",
                self.n_test, self.n_cce
            ));
        }
        if !(0.0..=1.0).contains(&self.max_failure_fraction) {
            return fail("max_failure_fraction must lie in [0, 1]".into());
        }
        self.schedule.validate()
    }

    fn check_data(&self, train: &LabeledImages, test: &LabeledImages) -> Result<()> {
        let largest = self.n_grid.iter().copied().max().unwrap_or(0);
        if 2 * largest > train.len() {
            return Err(Error::Config(format!(
                "largest n = {largest} needs {} training images, only {} available",
                2 * largest,
                train.len()
            )));
        }
        if self.n_test > test.len() {
            return Err(Error::Config(format!(
                "n_test = {} exceeds the {} available test images",
                self.n_test,
                test.len()
            )));
        }
        if train.input_dim() != test.input_dim() {
            return Err(Error::Shape(format!(
                "train images have {} pixels, test images {}",
                train.input_dim(),
                test.input_dim()
            )));
        }
        Ok(())
    }
}

/// Loads the four standard MNIST IDX files from `dir` as `(train, test)`.
pub fn load_mnist_dir(dir: &Path) -> Result<(LabeledImages, LabeledImages)> {
    let find = |stem: &str| {
        let candidates = [format!("{stem}-idx{}-ubyte", if stem.contains("images") { 3 } else { 1 }), {
            let (a, b) = stem.split_once('-').unwrap_or((stem, ""));
            format!("{a}-{b}.idx{}-ubyte", if stem.contains("images") { 3 } else { 1 })
        }];
        candidates
            .iter()
            .map(|c| dir.join(c))
            .find(|p| p.exists())
            .unwrap_or_else(|| dir.join(&candidates[0]))
    };
    let train = load_idx(&find("train-images"), &find("train-labels"))?;
    let test = load_idx(&find("t10k-images"), &find("t10k-labels"))?;
    Ok((train, test))
}

/// Trains pairs of classifiers from a shared initialization on disjoint
/// subsets with independent label noise, and compares their hidden layers on
/// clean test images.
///
/// For a given `(n, replicate)` the initialization, the subsets, the noise
/// draws and the SGD shuffles are shared across noise rates, so rows at
/// different `p` differ only through the rate.
pub fn run_label_noise_sweep(
    config: &LabelNoiseConfig,
    train: &LabeledImages,
    test: &LabeledImages,
    exec: Execution,
) -> Result<SweepResult> {
    config.validate()?;
    config.check_data(train, test)?;
    let test = test.select(&(0..config.n_test).collect::<Vec<_>>());
    let cells: Vec<(usize, usize, usize)> = (0..config.n_grid.len())
        .flat_map(|n| (0..config.p_list.len()).flat_map(move |p| (0..config.replicates).map(move |r| (n, p, r))))
        .collect();

    let outcomes = exec.map_slice(&cells, |&(ni, pi, rep)| {
        let (n, p) = (config.n_grid[ni], config.p_list[pi]);
        run_cell(config, train, &test, n, p, CellSeeds::new(config.master_seed, &[ni as u64, rep as u64])).map_err(
            |e| Error::Cell {
                cell: format!("n={n} p={p} replicate={rep}"),
                source: Box::new(e),
            },
        )
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

    let params = param_count(train.input_dim(), config.k) as f64;
    let rows = outcomes
        .chunks(config.replicates)
        .enumerate()
        .map(|(block, chunk)| {
            let (ni, pi) = (block / config.p_list.len(), block % config.p_list.len());
            let n = config.n_grid[ni];
            let reps: Vec<Replicate> = chunk.iter().filter_map(|o| o.as_ref().ok().copied()).collect();
            let (cce_ab, cce_ba, gen_err_a, gen_err_b) = aggregate(&reps);
            let gamma = n as f64 / params;
            SweepRow {
                alpha: gamma,
                snr: None,
                n,
                cce_ab,
                cce_ba,
                gen_err_a,
                gen_err_b,
                cce_theory: None,
                gen_err_theory: None,
                n_replicates: reps.len(),
                failures: chunk.len() - reps.len(),
                p: Some(config.p_list[pi]),
                gamma: Some(gamma),
            }
        })
        .collect();
    Ok(SweepResult { rows, metadata })
}

fn run_cell(
    config: &LabelNoiseConfig,
    train: &LabeledImages,
    test: &LabeledImages,
    n: usize,
    p: f64,
    seeds: CellSeeds,
) -> Result<Replicate> {
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut crate::seed::rng(seeds.stream(Stream::Split)));
    let subset = |range: std::ops::Range<usize>, noise: Stream| -> Result<LabeledImages> {
        let mut data = train.select(&order[range]);
        data.labels = inject_label_noise(
            &data.labels,
            &NoiseSpec {
                p,
                seed: seeds.stream(noise),
            },
        )?;
        Ok(data)
    };
    let data_a = subset(0..n, Stream::NoiseA)?;
    let data_b = subset(n..2 * n, Stream::NoiseB)?;

    let init = FcnnNet::init(train.input_dim(), config.k, seeds.stream(Stream::InitA))?;
    let shuffle = seeds.stream(Stream::Shuffle);
    let mut net_a = init.clone();
    let mut net_b = init;
    net_a.train_sgd(&data_a, &config.schedule, derive(shuffle, &[0]))?;
    net_b.train_sgd(&data_b, &config.schedule, derive(shuffle, &[1]))?;

    let err_a = 1.0 - net_a.accuracy(test)?;
    let err_b = 1.0 - net_b.accuracy(test)?;
    let score = cce_between_with(
        &net_a.penultimate_points(&test.images)?,
        &net_b.penultimate_points(&test.images)?,
        Some(config.n_cce),
        seeds.stream(Stream::Subsample),
        Execution::Sequential,
    )?;
    Ok(Replicate {
        cce_ab: score.cce_ab,
        cce_ba: score.cce_ba,
        ii_ab: score.ii_ab,
        ii_ba: score.ii_ba,
        gen_err_a: err_a,
        gen_err_b: err_b,
        steps_a: config.schedule.epochs,
        steps_b: config.schedule.epochs,
        converged: true,
    })
}
