use ndarray::{Array2, ArrayView1, Axis};

use crate::{Error, Result};

/// `N` points in a `D`-dimensional representation space, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Array2<f64>,
}

impl PointSet {
    pub fn new(points: Array2<f64>) -> Result<Self> {
        let (n, d) = points.dim();
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput(format!("point set must be non-empty, got {n}x{d}")));
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite coordinate at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        let points = if points.is_standard_layout() {
            points
        } else {
            points.as_standard_layout().into_owned()
        };
        Ok(PointSet { points })
    }

    /// Points on a line.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        let arr = Array2::from_shape_vec((values.len(), 1), values.to_vec())
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        PointSet::new(arr)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn into_array(self) -> Array2<f64> {
        self.points
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    /// Row `i` as a contiguous slice.
    #[inline]
    pub(crate) fn row_slice(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.points.as_slice().expect("standard layout")[i * d..(i + 1) * d]
    }

    /// The rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> PointSet {
        PointSet {
            points: self.points.select(Axis(0), indices),
        }
    }

    /// Squared Euclidean distance between rows `i` and `j`.
    #[inline]
    pub fn sq_dist(&self, i: usize, j: usize) -> f64 {
        sq_dist(self.row_slice(i), self.row_slice(j))
    }
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        let t = a[0] - b[0];
        return t * t;
    }
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            let t = a[4 * c + l] - b[4 * c + l];
            acc[l] += t * t;
        }
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        let t = a[k] - b[k];
        tail += t * t;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
