//! Noisy linear teacher `y = w* . x + eps` with Gaussian inputs `x ~ N(0, I/d)`.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::linalg::{standard_normal_matrix, standard_normal_vector};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeacherConfig {
    pub d: usize,
    pub sigma_w2: f64,
    pub sigma_eps2: f64,
}

impl TeacherConfig {
    pub fn new(d: usize, sigma_w2: f64, sigma_eps2: f64) -> Result<Self> {
        let c = TeacherConfig { d, sigma_w2, sigma_eps2 };
        c.validate()?;
        Ok(c)
    }

    /// Teacher with unit weight variance and noise variance `1 / snr`
    /// (`snr = inf` gives a noiseless teacher).
    pub fn from_snr(d: usize, sigma_w2: f64, snr: f64) -> Result<Self> {
        if snr.is_nan() || snr < 0.0 {
            return Err(Error::Domain(format!("SNR must be non-negative, got {snr}")));
        }
        if snr == 0.0 {
            // no signal: keep the noise at the weight scale so the config stays valid
            return TeacherConfig::new(d, 0.0, if sigma_w2 > 0.0 { sigma_w2 } else { 1.0 });
        }
        let eps = if snr.is_infinite() { 0.0 } else { sigma_w2 / snr };
        TeacherConfig::new(d, sigma_w2, eps)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Config("teacher input dimension must be >= 1".into()));
        }
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !ok(self.sigma_w2) || !ok(self.sigma_eps2) {
            return Err(Error::Config(format!(
                "variances must be finite and non-negative (sigma_w2 = {}, sigma_eps2 = {})",
                self.sigma_w2, self.sigma_eps2
            )));
        }
        if self.sigma_w2 == 0.0 && self.sigma_eps2 == 0.0 {
            return Err(Error::Config("sigma_w2 and sigma_eps2 cannot both be zero".into()));
        }
        Ok(())
    }
}

/// `sigma_w2 / sigma_eps2`; [`Error::InfiniteSnr`] for a noiseless teacher.
pub fn snr(config: &TeacherConfig) -> Result<f64> {
    if config.sigma_eps2 == 0.0 {
        return Err(Error::InfiniteSnr);
    }
    Ok(config.sigma_w2 / config.sigma_eps2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Teacher {
    pub w_star: Array1<f64>,
    pub config: TeacherConfig,
}

pub fn sample_teacher(config: TeacherConfig, seed: u64) -> Result<Teacher> {
    config.validate()?;
    let mut rng = seed::rng(seed);
    let w_star = standard_normal_vector(&mut rng, config.d, config.sigma_w2.sqrt());
    Ok(Teacher { w_star, config })
}

impl Teacher {
    pub fn d(&self) -> usize {
        self.config.d
    }

    /// `w* . x_i` for every row.
    pub fn clean_targets(&self, x: &Array2<f64>) -> Result<Array1<f64>> {
        if x.ncols() != self.d() {
            return Err(Error::Shape(format!(
                "inputs have {} columns, teacher expects {}",
                x.ncols(),
                self.d()
            )));
        }
        Ok(x.dot(&self.w_star))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
}

impl RegressionDataset {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// CSV with columns `x_1..x_d,y`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: csv::Error| match e.into_kind() {
            csv::ErrorKind::Io(e) => Error::io(path, e),
            other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
        };
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        let header = (1..=self.d()).map(|j| format!("x_{j}")).chain(["y".into()]);
        w.write_record(header).map_err(io)?;
        for (row, y) in self.x.rows().into_iter().zip(self.y.iter()) {
            w.write_record(row.iter().chain([y]).map(|v| v.to_string())).map_err(io)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// `n` inputs drawn i.i.d. from `N(0, I_d / d)`.
pub fn sample_inputs(d: usize, n: usize, seed: u64) -> Array2<f64> {
    let mut rng = seed::rng(seed);
    standard_normal_matrix(&mut rng, n, d, 1.0 / (d as f64).sqrt())
}

pub fn sample_dataset(teacher: &Teacher, n: usize, seed: u64) -> Result<RegressionDataset> {
    if n < 1 {
        return Err(Error::InvalidInput("dataset size must be >= 1".into()));
    }
    let d = teacher.d();
    let mut rng = seed::rng(seed);
    let x = standard_normal_matrix(&mut rng, n, d, 1.0 / (d as f64).sqrt());
    let noise = standard_normal_vector(&mut rng, n, teacher.config.sigma_eps2.sqrt());
    let y = x.dot(&teacher.w_star) + noise;
    Ok(RegressionDataset { x, y })
}
