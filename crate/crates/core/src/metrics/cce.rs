use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::points::PointSet;
use super::ranks::{information_imbalance_from_ranks, mutual_neighbor_ranks, ConditionalRanks};
use crate::{seed, Error, Execution, Result};

/// Smallest point count for which the estimator has at least three bins.
pub const MIN_CCE_POINTS: usize = 9;

/// Number of histogram bins, `floor(sqrt(n_points))`.
pub fn n_bins(n_points: usize) -> usize {
    let mut m = (n_points as f64).sqrt().floor() as usize;
    // guard against sqrt rounding on perfect squares
    while (m + 1) * (m + 1) <= n_points {
        m += 1;
    }
    while m * m > n_points {
        m -= 1;
    }
    m
}

/// Histogram estimate of the conditional copula entropy (in nats).
///
/// The rank support `[1, n_points - 1]` is cut into `M = floor(sqrt(n_points))`
/// equal-width bins (last bin right-closed) and the estimate is
/// `log M + sum_i p_i log p_i`, clamped to `[0, log M]`.
pub fn cce_estimate(cond: &ConditionalRanks, n_points: usize) -> Result<f64> {
    if n_points < MIN_CCE_POINTS {
        return Err(Error::TooFewPoints {
            got: n_points,
            min: MIN_CCE_POINTS,
        });
    }
    if cond.is_empty() {
        return Err(Error::InvalidInput("no conditional ranks".into()));
    }
    let max_rank = (n_points - 1) as u32;
    if let Some(&bad) = cond.values().iter().find(|&&r| r < 1 || r > max_rank) {
        return Err(Error::InvalidInput(format!(
            "conditional rank {bad} outside [1, {max_rank}]"
        )));
    }
    let m = n_bins(n_points);
    let width = (n_points - 2) as f64 / m as f64;
    let mut counts = vec![0u64; m];
    for &r in cond.values() {
        let b = (((r - 1) as f64) / width).floor() as usize;
        counts[b.min(m - 1)] += 1;
    }
    let total = cond.len() as f64;
    let neg_entropy: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            p * p.ln()
        })
        .sum();
    let log_m = (m as f64).ln();
    Ok((log_m + neg_entropy).clamp(0.0, log_m))
}

/// CCE of two jointly Gaussian scalars with correlation `rho`:
/// `-0.5 ln(1 - rho^2) - 0.5 rho^2`.
pub fn cce_gaussian_closed_form(rho: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) {
        return Err(Error::Domain(format!("correlation must satisfy |rho| < 1, got {rho}")));
    }
    let r2 = rho * rho;
    Ok(-0.5 * (-r2).ln_1p() - 0.5 * r2)
}

/// Lower bound on the Information Imbalance implied by a CCE value,
/// `2 exp(-cce - 1)`.
pub fn ii_lower_bound(cce: f64) -> Result<f64> {
    if cce.is_nan() || cce < 0.0 {
        return Err(Error::Domain(format!("CCE must be non-negative, got {cce}")));
    }
    Ok(2.0 * (-cce - 1.0).exp())
}

/// Both-direction alignment between two representations of the same inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentScore {
    pub cce_ab: f64,
    pub cce_ba: f64,
    pub ii_ab: f64,
    pub ii_ba: f64,
    pub n_points: usize,
    pub n_bins: usize,
}

pub fn cce_between(a: &PointSet, b: &PointSet, subsample: Option<usize>, seed: u64) -> Result<AlignmentScore> {
    cce_between_with(a, b, subsample, seed, Execution::default())
}

/// CCE and Information Imbalance in both directions.
///
/// With `subsample = Some(m)` the same `m` rows (seeded, without replacement)
/// are drawn from both representations first.
pub fn cce_between_with(
    a: &PointSet,
    b: &PointSet,
    subsample: Option<usize>,
    seed: u64,
    exec: Execution,
) -> Result<AlignmentScore> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "representations have different point counts: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let owned;
    let (a, b) = match subsample {
        Some(m) if m < MIN_CCE_POINTS || m > a.len() => {
            return Err(Error::InvalidInput(format!(
                "subsample {m} outside [{MIN_CCE_POINTS}, {}]",
                a.len()
            )))
        }
        Some(m) if m < a.len() => {
            let mut rng = seed::rng(seed);
            let mut idx = index::sample(&mut rng, a.len(), m).into_vec();
            idx.sort_unstable();
            owned = (a.select(&idx), b.select(&idx));
            (&owned.0, &owned.1)
        }
        _ => (a, b),
    };
    let n = a.len();
    if n < MIN_CCE_POINTS {
        return Err(Error::TooFewPoints {
            got: n,
            min: MIN_CCE_POINTS,
        });
    }
    let (ab, ba) = mutual_neighbor_ranks(a, b, exec)?;
    Ok(AlignmentScore {
        cce_ab: cce_estimate(&ab, n)?,
        cce_ba: cce_estimate(&ba, n)?,
        ii_ab: information_imbalance_from_ranks(&ab),
        ii_ba: information_imbalance_from_ranks(&ba),
        n_points: n,
        n_bins: n_bins(n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bin_count() {
        assert_eq!(n_bins(9), 3);
        assert_eq!(n_bins(401), 20);
        assert_eq!(n_bins(10_000), 100);
        assert_eq!(n_bins(2000), 44);
    }

    #[test]
    fn delta_distribution_saturates() {
        let cond = ConditionalRanks::new(vec![1; 401]);
        assert_abs_diff_eq!(cce_estimate(&cond, 401).unwrap(), 20f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(20f64.ln(), 2.9957, epsilon = 1e-4);
    }

    #[test]
    fn uniform_over_bins_is_zero() {
        // n_points = 401: M = 20 bins of width 19.95 over [1, 400].
        let n = 401;
        let width = (n - 2) as f64 / 20.0;
        let vals: Vec<u32> = (0..20)
            .flat_map(|b| {
                let r = 1 + (b as f64 * width).ceil() as u32;
                std::iter::repeat_n(r, 5)
            })
            .collect();
        assert_eq!(cce_estimate(&ConditionalRanks::new(vals), n).unwrap(), 0.0);
    }

    #[test]
    fn out_of_range_ranks() {
        let err = cce_estimate(&ConditionalRanks::new(vec![0, 1, 2]), 10).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        let err = cce_estimate(&ConditionalRanks::new(vec![10]), 10).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        assert!(cce_estimate(&ConditionalRanks::new(vec![1]), 8).is_err());
    }

    #[test]
    fn last_bin_is_right_closed() {
        // n = 9: M = 3, width 7/3 over [1, 8]; rank 8 sits in bin 2.
        let all_top = cce_estimate(&ConditionalRanks::new(vec![8; 9]), 9).unwrap();
        assert_abs_diff_eq!(all_top, 3f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn gaussian_closed_form_values() {
        assert_eq!(cce_gaussian_closed_form(0.0).unwrap(), 0.0);
        // -0.5 ln(0.36) - 0.32
        assert_abs_diff_eq!(cce_gaussian_closed_form(0.8).unwrap(), 0.190_825_623_766, epsilon = 1e-11);
        assert_eq!(
            cce_gaussian_closed_form(-0.8).unwrap(),
            cce_gaussian_closed_form(0.8).unwrap()
        );
        assert!(matches!(cce_gaussian_closed_form(1.0), Err(Error::Domain(_))));
        assert!(cce_gaussian_closed_form(f64::NAN).is_err());
    }

    #[test]
    fn imbalance_bound_values() {
        assert_abs_diff_eq!(ii_lower_bound(0.0).unwrap(), 2.0 / std::f64::consts::E, epsilon = 1e-15);
        assert_abs_diff_eq!(ii_lower_bound(0.19083).unwrap(), 0.607_937_730_355, epsilon = 1e-11);
        assert_eq!(ii_lower_bound(1e6).unwrap(), 0.0);
        assert!(matches!(ii_lower_bound(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn self_alignment_is_maximal() {
        let p = PointSet::from_scalars(&(0..50).map(|i| (i as f64 * 0.37).sin()).collect::<Vec<_>>()).unwrap();
        let s = cce_between(&p, &p, None, 0).unwrap();
        assert_eq!(s.n_bins, 7);
        assert_eq!(s.cce_ab, 7f64.ln());
        assert_eq!(s.cce_ba, 7f64.ln());
        assert_abs_diff_eq!(s.ii_ab, 2.0 / 49.0, epsilon = 1e-15);
    }

    #[test]
    fn subsample_bounds() {
        let p = PointSet::from_scalars(&(0..20).map(|i| i as f64).collect::<Vec<_>>()).unwrap();
        assert!(cce_between(&p, &p, Some(8), 0).is_err());
        assert!(cce_between(&p, &p, Some(21), 0).is_err());
        assert_eq!(cce_between(&p, &p, Some(9), 0).unwrap().n_points, 9);
    }
}
