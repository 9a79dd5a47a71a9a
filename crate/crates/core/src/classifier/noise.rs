use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::idx::N_CLASSES;
use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub p: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Config(format!("label-noise rate must lie in [0, 1], got {}", self.p)));
        }
        Ok(())
    }
}

/// Replaces each label, with probability `p`, by a class drawn uniformly
/// from all ten (the draw may return the original label).
pub fn inject_label_noise(labels: &[u8], spec: &NoiseSpec) -> Result<Vec<u8>> {
    spec.validate()?;
    let mut rng = seed::rng(spec.seed);
    Ok(labels
        .iter()
        .map(|&l| {
            let flip = rng.random::<f64>() < spec.p;
            let draw = rng.random_range(0..N_CLASSES as u8);
            if flip {
                draw
            } else {
                l
            }
        })
        .collect())
}
