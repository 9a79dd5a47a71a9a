use ndarray::{Array1, Array2};

use super::alignment::Spectrum;
use crate::linalg::{gram, sym_eigen};
use crate::teacher::RegressionDataset;
use crate::{Error, Result};

/// Eigenvalues below `RANK_TOL * lambda_max` count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Global minimum reached by gradient flow from small initialization.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    /// Coordinates of the learned map in the eigenbasis of `X^T X`.
    pub v: Array1<f64>,
    /// Eigenvectors of `X^T X` as columns, eigenvalues descending.
    pub basis: Array2<f64>,
    /// All `d` eigenvalues, descending.
    pub eigenvalues: Array1<f64>,
    pub spectrum: Spectrum,
}

impl OracleSolution {
    /// `W_tot = v V^T` as a `d`-vector.
    pub fn total_map(&self) -> Array1<f64> {
        self.basis.dot(&self.v)
    }

    pub fn rank(&self) -> usize {
        self.spectrum.rank()
    }

    /// Projects a `d`-vector on the learned (non-null) eigendirections and
    /// returns its coordinates there.
    pub fn learned_coordinates(&self, w: &Array1<f64>) -> Array1<f64> {
        let r = self.rank();
        self.basis.slice(ndarray::s![.., ..r]).t().dot(w)
    }

    /// Component of `w` orthogonal to the row space of `X`.
    pub fn null_component(&self, w: &Array1<f64>) -> Array1<f64> {
        let r = self.rank();
        let null = self.basis.slice(ndarray::s![.., r..]);
        null.dot(&null.t().dot(w))
    }
}

/// Minimum-norm least-squares map: `v_i = (y X V)_i / lambda_i` on directions
/// with non-negligible eigenvalue, zero elsewhere.
pub fn v_star_oracle(data: &RegressionDataset) -> Result<OracleSolution> {
    if data.y.len() != data.n() {
        return Err(Error::Shape(format!("{} targets for {} inputs", data.y.len(), data.n())));
    }
    let g = gram(data.x.view());
    let eig = sym_eigen(g.view());
    let top = eig.values.first().copied().unwrap_or(0.0);
    if !(top > 0.0) {
        return Err(Error::Degenerate("data matrix is identically zero".into()));
    }
    let cutoff = RANK_TOL * top;
    let rank = eig.values.iter().take_while(|&&l| l > cutoff).count();
    let proj = eig.vectors.t().dot(&data.x.t().dot(&data.y));
    let v = Array1::from_iter((0..data.d()).map(|i| if i < rank { proj[i] / eig.values[i] } else { 0.0 }));
    let spectrum = Spectrum::new(eig.values.iter().take(rank).copied().collect(), data.d())?;
    Ok(OracleSolution {
        v,
        basis: eig.vectors,
        eigenvalues: eig.values,
        spectrum,
    })
}
