use serde::{Deserialize, Serialize};

use super::mp::{mp_bulk_integral, mp_bulk_inverse_moment};
use crate::metrics::cce_gaussian_closed_form;
use crate::{Error, Result};

/// Non-zero eigenvalues of `X^T X`, descending, with the ambient dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    d: usize,
}

impl Spectrum {
    pub fn new(mut eigenvalues: Vec<f64>, d: usize) -> Result<Self> {
        if eigenvalues.len() > d {
            return Err(Error::Domain(format!(
                "{} eigenvalues exceed ambient dimension {d}",
                eigenvalues.len()
            )));
        }
        if eigenvalues.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Domain("eigenvalues must be finite and non-negative".into()));
        }
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        Ok(Spectrum { eigenvalues, d })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    fn positive(&self) -> Result<&[f64]> {
        if let Some(z) = self.eigenvalues.iter().find(|&&v| v <= 0.0) {
            return Err(Error::Domain(format!("zero eigenvalue ({z}) in the non-zero spectrum")));
        }
        Ok(&self.eigenvalues)
    }
}

fn check_snr(alpha: f64, snr: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must be positive and finite, got {alpha}")));
    }
    if snr.is_nan() || snr < 0.0 {
        return Err(Error::Domain(format!("SNR must be non-negative, got {snr}")));
    }
    Ok(())
}

/// Asymptotic correlation between the first-layer directions of two linear
/// students trained on independent datasets.
///
/// `snr = f64::INFINITY` is accepted and gives the noiseless limits
/// (1 above the threshold, `alpha` below).
pub fn rho_star(alpha: f64, snr: f64) -> Result<f64> {
    check_snr(alpha, snr)?;
    if alpha == 1.0 || snr == 0.0 {
        return Ok(0.0);
    }
    if snr.is_infinite() {
        return Ok(if alpha > 1.0 { 1.0 } else { alpha });
    }
    Ok(if alpha > 1.0 {
        snr / (snr + 1.0 / (alpha - 1.0))
    } else {
        alpha * snr / (snr + 1.0 / (1.0 - alpha))
    })
}

/// Theoretical CCE between the two students' hidden representations.
pub fn cce_theory(alpha: f64, snr: f64) -> Result<f64> {
    let rho = rho_star(alpha, snr)?;
    if rho >= 1.0 {
        return Ok(f64::INFINITY);
    }
    cce_gaussian_closed_form(rho)
}

/// Finite-size correlation from two empirical spectra of equal rank `R`:
/// `R s_w / sqrt(sum_a(s_w + s_e/l) * sum_b(s_w + s_e/l))`.
pub fn rho_finite(spec_a: &Spectrum, spec_b: &Spectrum, sigma_w2: f64, sigma_eps2: f64) -> Result<f64> {
    let (la, lb) = (spec_a.positive()?, spec_b.positive()?);
    if la.len() != lb.len() {
        return Err(Error::Domain(format!(
            "spectra have different ranks: {} vs {}",
            la.len(),
            lb.len()
        )));
    }
    if la.is_empty() {
        return Err(Error::Domain("empty spectrum".into()));
    }
    let side = |l: &[f64]| l.iter().map(|&v| sigma_w2 + sigma_eps2 / v).sum::<f64>();
    let r = la.len() as f64;
    Ok(r * sigma_w2 / (side(la) * side(lb)).sqrt())
}

/// Exact finite-size generalization error at the global minimum,
/// `s_w + s_e - (1/d) sum_i (s_w - s_e / l_i)` over the non-zero spectrum.
pub fn gen_error_finite(spec: &Spectrum, sigma_w2: f64, sigma_eps2: f64) -> Result<f64> {
    let l = spec.positive()?;
    let learned: f64 = l.iter().map(|&v| sigma_w2 - sigma_eps2 / v).sum();
    Ok(sigma_w2 + sigma_eps2 - learned / spec.d() as f64)
}

/// Large-`d` generalization error with the Marchenko-Pastur spectrum.
///
/// Directions in the point mass at zero are never learned and keep their
/// full `sigma_w2` contribution. Returns [`Error::Divergent`] at `alpha = 1`.
pub fn gen_error_asymptotic(alpha: f64, sigma_w2: f64, sigma_eps2: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must be positive and finite, got {alpha}")));
    }
    if alpha == 1.0 {
        return Err(Error::Divergent { alpha });
    }
    let mass = mp_bulk_integral(alpha, |_| 1.0)?;
    let learned = if sigma_eps2 == 0.0 {
        sigma_w2 * mass
    } else {
        sigma_w2 * mass - sigma_eps2 * mp_bulk_inverse_moment(alpha)?
    };
    Ok(sigma_w2 + sigma_eps2 - learned)
}

/// Theory overlay for one `(alpha, snr)` grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryPoint {
    pub alpha: f64,
    pub snr: f64,
    pub rho_star: f64,
    pub cce: f64,
    /// `+inf` at the interpolation threshold.
    pub gen_error: f64,
    pub sigma_w2: f64,
    pub sigma_eps2: f64,
}

/// Evaluates the theory at `(alpha, snr)` with `sigma_eps2 = sigma_w2 / snr`.
pub fn theory_point(alpha: f64, snr: f64, sigma_w2: f64) -> Result<TheoryPoint> {
    if !(sigma_w2 > 0.0 && sigma_w2.is_finite()) {
        return Err(Error::Domain(format!("sigma_w2 must be positive, got {sigma_w2}")));
    }
    let rho = rho_star(alpha, snr)?;
    let sigma_eps2 = if snr.is_infinite() { 0.0 } else { sigma_w2 / snr };
    let gen_error = match gen_error_asymptotic(alpha, sigma_w2, sigma_eps2) {
        Ok(v) => v,
        Err(Error::Divergent { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    Ok(TheoryPoint {
        alpha,
        snr,
        rho_star: rho,
        cce: cce_theory(alpha, snr)?,
        gen_error,
        sigma_w2,
        sigma_eps2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rho_star_values() {
        assert_abs_diff_eq!(rho_star(2.0, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rho_star(0.5, 1.0).unwrap(), 1.0 / 6.0, epsilon = 1e-15);
        for a in [0.3, 1.0, 4.0] {
            assert_eq!(rho_star(a, 0.0).unwrap(), 0.0);
        }
        assert_eq!(rho_star(1.0, 100.0).unwrap(), 0.0);
        assert_eq!(rho_star(3.0, f64::INFINITY).unwrap(), 1.0);
        assert_eq!(rho_star(0.4, f64::INFINITY).unwrap(), 0.4);
        assert!(rho_star(-1.0, 1.0).is_err());
        assert!(rho_star(1.0, -1.0).is_err());
    }

    #[test]
    fn cce_theory_values() {
        assert_eq!(cce_theory(1.0, 7.0).unwrap(), 0.0);
        assert_abs_diff_eq!(cce_theory(2.0, 1.0).unwrap(), 0.018_841_036_226, epsilon = 1e-11);
        assert_abs_diff_eq!(cce_theory(2.0, 5.0).unwrap(), 0.245_589_610_607, epsilon = 1e-11);
    }

    #[test]
    fn rho_finite_collapses() {
        let a = Spectrum::new(vec![3.0, 1.0, 0.5], 5).unwrap();
        let b = Spectrum::new(vec![2.0, 2.0, 0.1], 5).unwrap();
        assert_eq!(rho_finite(&a, &b, 1.0, 0.0).unwrap(), 1.0);
        let flat = Spectrum::new(vec![0.8; 4], 4).unwrap();
        assert_abs_diff_eq!(
            rho_finite(&flat, &flat, 1.0, 0.3).unwrap(),
            1.0 / (1.0 + 0.3 / 0.8),
            epsilon = 1e-15
        );
        let zero = Spectrum::new(vec![1.0, 0.0, 1.0], 3).unwrap();
        assert!(matches!(rho_finite(&zero, &a, 1.0, 1.0), Err(Error::Domain(_))));
        let short = Spectrum::new(vec![1.0], 3).unwrap();
        assert!(rho_finite(&short, &a, 1.0, 1.0).is_err());
    }

    #[test]
    fn gen_error_finite_collapses() {
        let unit = Spectrum::new(vec![1.0; 6], 6).unwrap();
        assert_abs_diff_eq!(gen_error_finite(&unit, 1.7, 0.3).unwrap(), 0.6, epsilon = 1e-14);
        let full = Spectrum::new(vec![4.0, 2.0, 1.0], 3).unwrap();
        assert_abs_diff_eq!(gen_error_finite(&full, 1.0, 0.0).unwrap(), 0.0, epsilon = 1e-15);
        let partial = Spectrum::new(vec![4.0, 2.0], 4).unwrap();
        assert_abs_diff_eq!(gen_error_finite(&partial, 1.0, 0.0).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn gen_error_asymptotic_closed_forms() {
        // alpha > 1: s_e * alpha / (alpha - 1); alpha < 1: (1 - alpha) s_w + s_e / (1 - alpha)
        assert_abs_diff_eq!(gen_error_asymptotic(2.0, 1.0, 0.2).unwrap(), 0.4, epsilon = 1e-6);
        assert_abs_diff_eq!(gen_error_asymptotic(0.5, 1.0, 0.2).unwrap(), 0.9, epsilon = 1e-6);
        assert_abs_diff_eq!(gen_error_asymptotic(3.0, 1.0, 0.0).unwrap(), 0.0, epsilon = 1e-9);
        assert!(matches!(gen_error_asymptotic(1.0, 1.0, 0.2), Err(Error::Divergent { .. })));
    }

    #[test]
    fn theory_point_at_threshold() {
        let p = theory_point(1.0, 1.0, 1.0).unwrap();
        assert_eq!(p.cce, 0.0);
        assert!(p.gen_error.is_infinite());
        let p = theory_point(2.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(p.rho_star, 0.5, epsilon = 1e-15);
    }
}
