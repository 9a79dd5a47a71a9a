//! Two-layer students `y = W2 phi(W1 x)` trained by full-batch gradient
//! descent on the mean squared error.

use std::collections::VecDeque;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::linalg::{norm, standard_normal_matrix, standard_normal_vector, top_eigenvalue_of_gram};
use crate::metrics::PointSet;
use crate::teacher::{RegressionDataset, Teacher};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Relu,
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Linear => "linear",
            Activation::Relu => "relu",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Activation::Linear),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::Config(format!("unknown activation '{other}'"))),
        }
    }
}

/// `W1` is `k x d`, `W2` is `1 x k` (stored as a `k`-vector).
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerNet {
    pub w1: Array2<f64>,
    pub w2: Array1<f64>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub w1: Array2<f64>,
    pub w2: Array1<f64>,
}

impl Gradient {
    pub fn norm(&self) -> f64 {
        (self.w1.iter().map(|v| v * v).sum::<f64>() + self.w2.dot(&self.w2)).sqrt()
    }
}

/// Small random initialization: every weight i.i.d. `N(0, init_scale^2)`.
pub fn init_small(d: usize, k: usize, activation: Activation, init_scale: f64, seed: u64) -> Result<TwoLayerNet> {
    if d == 0 || k == 0 {
        return Err(Error::InvalidInput(format!("network dimensions must be >= 1 (d = {d}, k = {k})")));
    }
    if !(init_scale > 0.0 && init_scale.is_finite()) {
        return Err(Error::InvalidInput(format!("init_scale must be positive, got {init_scale}")));
    }
    let mut rng = seed::rng(seed);
    let w1 = standard_normal_matrix(&mut rng, k, d, init_scale);
    let w2 = standard_normal_vector(&mut rng, k, init_scale);
    Ok(TwoLayerNet { w1, w2, activation })
}

impl TwoLayerNet {
    pub fn new(w1: Array2<f64>, w2: Array1<f64>, activation: Activation) -> Result<Self> {
        if w1.nrows() != w2.len() {
            return Err(Error::Shape(format!(
                "W1 has {} rows but W2 has {} entries",
                w1.nrows(),
                w2.len()
            )));
        }
        if w1.iter().chain(w2.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite weight".into()));
        }
        Ok(TwoLayerNet { w1, w2, activation })
    }

    pub fn zeros(d: usize, k: usize, activation: Activation) -> Self {
        TwoLayerNet {
            w1: Array2::zeros((k, d)),
            w2: Array1::zeros(k),
            activation,
        }
    }

    /// Linear net realising `w_total` through a rank-one first layer
    /// `W1 = r w_total^T`, `W2 = r^T`, with `r` a seeded random unit vector.
    pub fn rank_one(w_total: &Array1<f64>, k: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("k must be >= 1".into()));
        }
        let mut rng = seed::rng(seed);
        let mut r = standard_normal_vector(&mut rng, k, 1.0);
        let nr = norm(&r);
        r /= nr;
        let w1 = r
            .view()
            .insert_axis(Axis(1))
            .dot(&w_total.view().insert_axis(Axis(0)));
        TwoLayerNet::new(w1, r, Activation::Linear)
    }

    pub fn d(&self) -> usize {
        self.w1.ncols()
    }

    pub fn k(&self) -> usize {
        self.w1.nrows()
    }

    /// `W2 W1` as a `d`-vector. Only meaningful for the linear activation.
    pub fn total_map(&self) -> Array1<f64> {
        self.w1.t().dot(&self.w2)
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.d() {
            return Err(Error::Shape(format!(
                "inputs have {} columns, network expects {}",
                x.ncols(),
                self.d()
            )));
        }
        Ok(())
    }

    /// Hidden representation, one row per input.
    pub fn hidden(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        let mut h = x.dot(&self.w1.t());
        if self.activation == Activation::Relu {
            h.mapv_inplace(|v| v.max(0.0));
        }
        Ok(h)
    }

    pub fn hidden_points(&self, x: &Array2<f64>) -> Result<PointSet> {
        PointSet::new(self.hidden(x)?)
    }

    pub fn forward(&self, x: &Array2<f64>) -> Result<Array1<f64>> {
        self.check_input(x)?;
        Ok(match self.activation {
            Activation::Linear => x.dot(&self.total_map()),
            Activation::Relu => self.hidden(x)?.dot(&self.w2),
        })
    }

    fn check_data(&self, data: &RegressionDataset) -> Result<()> {
        self.check_input(&data.x)?;
        if data.y.len() != data.x.nrows() {
            return Err(Error::Shape(format!(
                "{} targets for {} inputs",
                data.y.len(),
                data.x.nrows()
            )));
        }
        Ok(())
    }

    /// Mean squared error `(1/n) ||y_hat - y||^2`.
    pub fn loss(&self, data: &RegressionDataset) -> Result<f64> {
        self.check_data(data)?;
        let r = self.forward(&data.x)? - &data.y;
        Ok(r.dot(&r) / data.n() as f64)
    }

    /// Loss and its gradient with respect to `W1` and `W2`.
    pub fn loss_and_gradient(&self, data: &RegressionDataset) -> Result<(f64, Gradient)> {
        self.check_data(data)?;
        let n = data.n() as f64;
        let x = &data.x;
        match self.activation {
            Activation::Linear => {
                let r = x.dot(&self.total_map()) - &data.y;
                let loss = r.dot(&r) / n;
                // dL/dW_tot = (2/n) r^T X
                let g = x.t().dot(&r) * (2.0 / n);
                let w1 = self
                    .w2
                    .view()
                    .insert_axis(Axis(1))
                    .dot(&g.view().insert_axis(Axis(0)));
                let w2 = self.w1.dot(&g);
                Ok((loss, Gradient { w1, w2 }))
            }
            Activation::Relu => {
                let pre = x.dot(&self.w1.t());
                let act = pre.mapv(|v| v.max(0.0));
                let r = act.dot(&self.w2) - &data.y;
                let loss = r.dot(&r) / n;
                let w2 = act.t().dot(&r) * (2.0 / n);
                let mut delta = Array2::zeros(pre.raw_dim());
                Zip::from(delta.rows_mut())
                    .and(pre.rows())
                    .and(&r)
                    .for_each(|mut drow, prow, &ri| {
                        let s = 2.0 * ri / n;
                        Zip::from(&mut drow).and(&prow).and(&self.w2).for_each(|dv, &p, &w| {
                            // subgradient 0 at the kink
                            *dv = if p > 0.0 { s * w } else { 0.0 };
                        });
                    });
                let w1 = delta.t().dot(x);
                Ok((loss, Gradient { w1, w2 }))
            }
        }
    }

    pub fn analytic_gradient(&self, data: &RegressionDataset) -> Result<Gradient> {
        Ok(self.loss_and_gradient(data)?.1)
    }

    fn step(&mut self, g: &Gradient, lr: f64) {
        self.w1.scaled_add(-lr, &g.w1);
        self.w2.scaled_add(-lr, &g.w2);
    }

    /// Full-batch gradient descent, in place.
    pub fn train_full_batch(&mut self, data: &RegressionDataset, cfg: &TrainConfig) -> Result<TrainReport> {
        cfg.validate()?;
        self.check_data(data)?;
        let lr = cfg.learning_rate.resolve(&data.x);
        let mut history: VecDeque<f64> = VecDeque::with_capacity(cfg.patience + 1);
        let mut trace = Vec::new();
        let mut converged = false;
        let mut steps = 0;
        let mut loss = f64::NAN;
        while steps < cfg.max_steps {
            let (l, g) = self.loss_and_gradient(data)?;
            loss = l;
            if !loss.is_finite() || loss > DIVERGENCE_LOSS {
                return Err(Error::TrainingDiverged { step: steps, loss });
            }
            if steps % cfg.trace_every == 0 {
                trace.push(loss);
            }
            history.push_back(loss);
            if history.len() > cfg.patience + 1 {
                history.pop_front();
            }
            if loss <= cfg.loss_floor {
                converged = true;
                break;
            }
            if history.len() == cfg.patience + 1 {
                let old = history[0];
                if (old - loss).abs() <= cfg.rel_tol * old.abs() {
                    converged = true;
                    break;
                }
            }
            self.step(&g, lr);
            steps += 1;
        }
        if !converged {
            loss = self.loss(data)?;
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { step: steps, loss });
            }
        }
        if trace.last() != Some(&loss) {
            trace.push(loss);
        }
        Ok(TrainReport {
            final_loss: loss,
            steps,
            converged,
            loss_trace: trace,
            learning_rate: lr,
        })
    }

    /// CSV checkpoint: a header line `twolayer,<activation>,<k>,<d>`, then the
    /// `k` rows of `W1`, then `W2` on one line.
    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        let mut s = format!("twolayer,{},{},{}\n", self.activation, self.k(), self.d());
        for row in self.w1.rows() {
            s.push_str(&join(row.iter()));
            s.push('\n');
        }
        s.push_str(&join(self.w2.iter()));
        s.push('\n');
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(s.as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let lines: Vec<String> = std::io::BufReader::new(file)
            .lines()
            .collect::<std::io::Result<_>>()
            .map_err(|e| Error::io(path, e))?;
        let bad = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let header: Vec<&str> = lines.first().map(|l| l.split(',').collect()).unwrap_or_default();
        if header.len() != 4 || header[0] != "twolayer" {
            return Err(bad(1, "expected header 'twolayer,<activation>,<k>,<d>'".into()));
        }
        let activation: Activation = header[1].parse()?;
        let k: usize = header[2].parse().map_err(|_| bad(1, "bad k".into()))?;
        let d: usize = header[3].parse().map_err(|_| bad(1, "bad d".into()))?;
        if lines.len() < k + 2 {
            return Err(bad(lines.len(), format!("expected {} lines", k + 2)));
        }
        let parse_row = |i: usize, len: usize| -> Result<Vec<f64>> {
            let vals: Vec<f64> = lines[i]
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(i + 1, e.to_string()))?;
            if vals.len() != len {
                return Err(bad(i + 1, format!("expected {len} values, found {}", vals.len())));
            }
            Ok(vals)
        };
        let mut w1 = Vec::with_capacity(k * d);
        for i in 0..k {
            w1.extend(parse_row(i + 1, d)?);
        }
        let w2 = parse_row(k + 1, k)?;
        TwoLayerNet::new(
            Array2::from_shape_vec((k, d), w1).expect("shape checked"),
            Array1::from(w2),
            activation,
        )
    }
}

fn join<'a>(it: impl Iterator<Item = &'a f64>) -> String {
    it.map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

const DIVERGENCE_LOSS: f64 = 1e100;

/// Step size for gradient descent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearningRate {
    Fixed(f64),
    /// `scale / lambda_max`, with `lambda_max = (2/n) lambda_max(X^T X)` the
    /// curvature of the loss along the top input direction.
    Auto { scale: f64 },
}

impl LearningRate {
    pub fn resolve(&self, x: &Array2<f64>) -> f64 {
        match *self {
            LearningRate::Fixed(lr) => lr,
            LearningRate::Auto { scale } => {
                let n = x.nrows() as f64;
                let top = top_eigenvalue_of_gram(x.view(), 200) * 2.0 / n;
                if top > 0.0 {
                    scale / top
                } else {
                    scale
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub init_scale: f64,
    pub learning_rate: LearningRate,
    pub max_steps: usize,
    /// Stop when the loss changed by less than `rel_tol` (relative) over
    /// `patience` steps.
    pub rel_tol: f64,
    pub patience: usize,
    /// Stop once the loss is at or below this value (interpolating fits).
    pub loss_floor: f64,
    /// Record every `trace_every`-th loss in the report.
    pub trace_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            init_scale: 1e-3,
            learning_rate: LearningRate::Auto { scale: 0.05 },
            max_steps: 500_000,
            rel_tol: 1e-8,
            patience: 100,
            loss_floor: 1e-20,
            trace_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let lr_ok = match self.learning_rate {
            LearningRate::Fixed(v) => v > 0.0 && v.is_finite(),
            LearningRate::Auto { scale } => scale > 0.0 && scale.is_finite(),
        };
        if !(self.init_scale > 0.0 && lr_ok && self.max_steps > 0 && self.rel_tol > 0.0 && self.patience > 0)
            || self.trace_every == 0
            || !(self.loss_floor >= 0.0)
        {
            return Err(Error::Config(format!("invalid training configuration: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub final_loss: f64,
    pub steps: usize,
    pub converged: bool,
    pub loss_trace: Vec<f64>,
    pub learning_rate: f64,
}

/// Test error against noiseless targets plus the label-noise variance.
pub fn empirical_gen_error(net: &TwoLayerNet, teacher: &Teacher, x_test: &Array2<f64>) -> Result<f64> {
    if net.d() != teacher.d() {
        return Err(Error::Shape(format!(
            "network input dimension {} differs from teacher dimension {}",
            net.d(),
            teacher.d()
        )));
    }
    let clean = teacher.clean_targets(x_test)?;
    let pred = net.forward(x_test)?;
    let r = pred - clean;
    Ok(r.dot(&r) / x_test.nrows() as f64 + teacher.config.sigma_eps2)
}
