use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::network::{Activation, LearningRate, TrainConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Closed-form global minimum (linear students only).
    Oracle,
    /// Full-batch gradient descent.
    Gd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivationPair {
    LinearLinear,
    ReluRelu,
    /// One linear and one ReLU student trained on the same dataset.
    LinearRelu,
}

impl ActivationPair {
    pub fn activations(self) -> (Activation, Activation) {
        match self {
            ActivationPair::LinearLinear => (Activation::Linear, Activation::Linear),
            ActivationPair::ReluRelu => (Activation::Relu, Activation::Relu),
            ActivationPair::LinearRelu => (Activation::Linear, Activation::Relu),
        }
    }

    pub fn shares_dataset(self) -> bool {
        self == ActivationPair::LinearRelu
    }
}

impl fmt::Display for ActivationPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActivationPair::LinearLinear => "linear-linear",
            ActivationPair::ReluRelu => "relu-relu",
            ActivationPair::LinearRelu => "linear-relu",
        })
    }
}

/// Meaning of the grid values in [`SweepConfig::alphas`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// `n / d`
    Alpha,
    /// `n / (d k)`
    Gamma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub d: usize,
    pub k: usize,
    /// Sample-size grid, interpreted through [`SweepConfig::axis`].
    pub alphas: Vec<f64>,
    pub snrs: Vec<f64>,
    pub ensembles: usize,
    pub n_test: usize,
    pub n_cce: usize,
    pub master_seed: u64,
    pub solver: Solver,
    pub activation_pair: ActivationPair,
    /// Defaults to `alpha` for linear-linear sweeps and `gamma` otherwise.
    pub axis: Option<Axis>,
    pub sigma_w2: f64,
    pub train: TrainConfig,
    /// Debug control: both students see the same dataset.
    pub same_dataset: bool,
    /// Largest tolerated fraction of failed cells.
    pub max_failure_fraction: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig::fig1()
    }
}

impl SweepConfig {
    /// Linear students, oracle solver, theory overlay.
    pub fn fig1() -> Self {
        SweepConfig {
            d: 200,
            k: 100,
            alphas: vec![0.5, 0.8, 1.0, 1.25, 2.0, 4.0],
            snrs: vec![0.1, 1.0, 5.0],
            ensembles: 20,
            n_test: 10_000,
            n_cce: 2000,
            master_seed: 0,
            solver: Solver::Oracle,
            activation_pair: ActivationPair::LinearLinear,
            axis: None,
            sigma_w2: 1.0,
            train: TrainConfig::default(),
            same_dataset: false,
            max_failure_fraction: 0.1,
        }
    }

    /// ReLU students trained by gradient descent on independent datasets.
    pub fn fig2() -> Self {
        SweepConfig {
            k: 20,
            alphas: vec![0.25, 0.5, 1.0, 2.0],
            snrs: vec![1.0, 5.0],
            ensembles: 4,
            solver: Solver::Gd,
            activation_pair: ActivationPair::ReluRelu,
            train: relu_train_config(),
            ..SweepConfig::fig1()
        }
    }

    /// One linear and one ReLU student on shared datasets at SNR 5.
    pub fn fig3() -> Self {
        SweepConfig {
            alphas: vec![0.025, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0],
            snrs: vec![5.0],
            ensembles: 10,
            activation_pair: ActivationPair::LinearRelu,
            ..SweepConfig::fig2()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "fig1" => Ok(SweepConfig::fig1()),
            "fig2" => Ok(SweepConfig::fig2()),
            "fig3" => Ok(SweepConfig::fig3()),
            other => Err(Error::Config(format!(
                "unknown preset '{other}' (expected fig1, fig2 or fig3)"
            ))),
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: SweepConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn axis(&self) -> Axis {
        self.axis.unwrap_or(match self.activation_pair {
            ActivationPair::LinearLinear => Axis::Alpha,
            _ => Axis::Gamma,
        })
    }

    /// Training-set size for a grid value.
    pub fn n_for(&self, x: f64) -> usize {
        let scale = match self.axis() {
            Axis::Alpha => self.d as f64,
            Axis::Gamma => (self.d * self.k) as f64,
        };
        ((x * scale).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.d == 0 || self.k == 0 {
            return fail(format!("d and k must be >= 1 (d = {}, k = {})", self.d, self.k));
        }
        if self.alphas.is_empty() || self.snrs.is_empty() {
            return fail("sample-size and SNR grids must be non-empty".into());
        }
        if self.alphas.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return fail("sample-size grid values must be positive".into());
        }
        if self.snrs.iter().any(|s| s.is_nan() || *s < 0.0) {
            return fail("SNR values must be non-negative".into());
        }
        if self.ensembles < 2 {
            return fail(format!("ensembles must be >= 2, got {}", self.ensembles));
        }
        if self.n_cce > self.n_test {
            return fail(format!("n_cce ({}) exceeds n_test ({})", self.n_cce, self.n_test));
        }
        if self.n_cce < crate::metrics::MIN_CCE_POINTS {
            return fail(format!("n_cce must be >= 9, got {}", self.n_cce));
        }
        if !(self.sigma_w2 > 0.0 && self.sigma_w2.is_finite()) {
            return fail("sigma_w2 must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.max_failure_fraction) {
            return fail("max_failure_fraction must lie in [0, 1]".into());
        }
        self.train.validate()
    }
}

/// Gradient-descent settings for ReLU students: a smaller step than the
/// linear default (curvature grows with the weight norm) and a fixed budget.
pub fn relu_train_config() -> TrainConfig {
    TrainConfig {
        init_scale: 1e-3,
        learning_rate: LearningRate::Auto { scale: 0.02 },
        max_steps: 5000,
        rel_tol: 1e-8,
        patience: 100,
        loss_floor: 1e-20,
        trace_every: 100,
    }
}
