//! One-hidden-layer ReLU classifier trained with minibatch SGD on softmax
//! cross-entropy.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::idx::{LabeledImages, N_CLASSES};
use crate::linalg::standard_normal_matrix;
use crate::metrics::PointSet;
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FcnnNet {
    /// `k × input_dim`
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    /// `10 × k`
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcnnGradient {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSchedule {
    pub l0: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        TrainSchedule {
            l0: 0.1,
            batch_size: 128,
            epochs: 400,
        }
    }
}

impl TrainSchedule {
    /// `l0 / sqrt(1 + floor(epoch / 50))`, constant within each block of 50 epochs.
    pub fn rate(&self, epoch: usize) -> f64 {
        self.l0 / (1.0 + (epoch / 50) as f64).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l0 > 0.0 && self.l0.is_finite()) {
            return Err(Error::Config(format!("l0 must be positive, got {}", self.l0)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdReport {
    pub final_loss: f64,
    pub final_accuracy: f64,
    pub epochs: usize,
    /// Mean minibatch loss of every epoch.
    pub epoch_losses: Vec<f64>,
}

impl FcnnNet {
    pub fn zeros(input_dim: usize, k: usize) -> Self {
        FcnnNet {
            w1: Array2::zeros((k, input_dim)),
            b1: Array1::zeros(k),
            w2: Array2::zeros((N_CLASSES, k)),
            b2: Array1::zeros(N_CLASSES),
        }
    }

    /// He-normal first layer, `N(0, 1/k)` second layer, zero biases.
    pub fn init(input_dim: usize, k: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || k == 0 {
            return Err(Error::InvalidInput(format!(
                "network dimensions must be >= 1 (input = {input_dim}, k = {k})"
            )));
        }
        let mut rng = seed::rng(seed);
        Ok(FcnnNet {
            w1: standard_normal_matrix(&mut rng, k, input_dim, (2.0 / input_dim as f64).sqrt()),
            b1: Array1::zeros(k),
            w2: standard_normal_matrix(&mut rng, N_CLASSES, k, (1.0 / k as f64).sqrt()),
            b2: Array1::zeros(N_CLASSES),
        })
    }

    pub fn k(&self) -> usize {
        self.w1.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.w1.ncols()
    }

    /// Total trainable parameter count, biases included.
    pub fn n_params(&self) -> usize {
        param_count(self.input_dim(), self.k())
    }

    fn check(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "inputs have {} columns, network expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn pre_activation(&self, x: &ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.w1.t()) + &self.b1
    }

    /// Hidden-layer post-activations, one row per image.
    pub fn penultimate(&self, images: &Array2<f64>) -> Result<Array2<f64>> {
        let x = images.view();
        self.check(&x)?;
        Ok(self.pre_activation(&x).mapv(|v| v.max(0.0)))
    }

    pub fn penultimate_points(&self, images: &Array2<f64>) -> Result<PointSet> {
        PointSet::new(self.penultimate(images)?)
    }

    pub fn logits(&self, images: &Array2<f64>) -> Result<Array2<f64>> {
        let h = self.penultimate(images)?;
        Ok(h.dot(&self.w2.t()) + &self.b2)
    }

    pub fn predict(&self, images: &Array2<f64>) -> Result<Vec<u8>> {
        let z = self.logits(images)?;
        Ok(z.rows()
            .into_iter()
            .map(|r| {
                let mut best = 0;
                for c in 1..r.len() {
                    if r[c] > r[best] {
                        best = c;
                    }
                }
                best as u8
            })
            .collect())
    }

    pub fn accuracy(&self, data: &LabeledImages) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::InvalidInput("accuracy of an empty set".into()));
        }
        let pred = self.predict(&data.images)?;
        let hits = pred.iter().zip(&data.labels).filter(|(a, b)| a == b).count();
        Ok(hits as f64 / data.len() as f64)
    }

    pub fn loss(&self, data: &LabeledImages) -> Result<f64> {
        let x = data.images.view();
        self.check(&x)?;
        let (loss, _) = self.forward_backward(&x, &data.labels, false);
        Ok(loss)
    }

    pub fn loss_and_gradient(&self, data: &LabeledImages) -> Result<(f64, FcnnGradient)> {
        let x = data.images.view();
        self.check(&x)?;
        let (loss, g) = self.forward_backward(&x, &data.labels, true);
        Ok((loss, g.expect("gradient requested")))
    }

    /// Mean softmax cross-entropy and, optionally, its gradient.
    fn forward_backward(&self, x: &ArrayView2<f64>, labels: &[u8], grad: bool) -> (f64, Option<FcnnGradient>) {
        let n = x.nrows() as f64;
        let a = self.pre_activation(x);
        let h = a.mapv(|v| v.max(0.0));
        let mut z = h.dot(&self.w2.t()) + &self.b2;
        let mut loss = 0.0;
        for (mut row, &y) in z.rows_mut().into_iter().zip(labels) {
            let m = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            row.mapv_inplace(|v| (v - m).exp());
            let s = row.sum();
            loss += s.ln() - row[y as usize].ln();
            row /= s;
            // row now holds softmax probabilities; subtract the one-hot target
            row[y as usize] -= 1.0;
        }
        loss /= n;
        if !grad {
            return (loss, None);
        }
        let dz = z / n;
        let gw2 = dz.t().dot(&h);
        let gb2 = dz.sum_axis(Axis(0));
        let mut dh = dz.dot(&self.w2);
        dh.zip_mut_with(&a, |g, &av| {
            if av <= 0.0 {
                *g = 0.0;
            }
        });
        let gw1 = dh.t().dot(x);
        let gb1 = dh.sum_axis(Axis(0));
        (
            loss,
            Some(FcnnGradient {
                w1: gw1,
                b1: gb1,
                w2: gw2,
                b2: gb2,
            }),
        )
    }

    fn step(&mut self, g: &FcnnGradient, lr: f64) {
        self.w1.scaled_add(-lr, &g.w1);
        self.b1.scaled_add(-lr, &g.b1);
        self.w2.scaled_add(-lr, &g.w2);
        self.b2.scaled_add(-lr, &g.b2);
    }

    /// Minibatch SGD over seeded shuffles; the last batch of an epoch may be short.
    pub fn train_sgd(&mut self, data: &LabeledImages, schedule: &TrainSchedule, seed: u64) -> Result<SgdReport> {
        schedule.validate()?;
        if data.is_empty() {
            return Err(Error::InvalidInput("cannot train on an empty set".into()));
        }
        self.check(&data.images.view())?;
        let mut rng = seed::rng(seed);
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut epoch_losses = Vec::with_capacity(schedule.epochs);
        let mut step = 0;
        for epoch in 0..schedule.epochs {
            let lr = schedule.rate(epoch);
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for batch in order.chunks(schedule.batch_size) {
                let x = data.images.select(Axis(0), batch);
                let y: Vec<u8> = batch.iter().map(|&i| data.labels[i]).collect();
                let (loss, g) = self.forward_backward(&x.view(), &y, true);
                if !loss.is_finite() {
                    return Err(Error::TrainingDiverged { step, loss });
                }
                self.step(&g.expect("gradient requested"), lr);
                total += loss * batch.len() as f64;
                step += 1;
            }
            epoch_losses.push(total / data.len() as f64);
        }
        let final_loss = self.loss(data)?;
        if !final_loss.is_finite() {
            return Err(Error::TrainingDiverged { step, loss: final_loss });
        }
        Ok(SgdReport {
            final_loss,
            final_accuracy: self.accuracy(data)?,
            epochs: schedule.epochs,
            epoch_losses,
        })
    }
}

/// `input_dim·k + k + 10·k + 10`.
pub fn param_count(input_dim: usize, k: usize) -> usize {
    input_dim * k + k + N_CLASSES * k + N_CLASSES
}
