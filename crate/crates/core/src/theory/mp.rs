//! Marchenko-Pastur law for the spectrum of `X^T X` with `X` an `n x d`
//! matrix of i.i.d. `N(0, 1/d)` entries and `alpha = n / d`.

use std::f64::consts::PI;

use super::quadrature::integrate;
use crate::{Error, Result};

const QUAD_TOL: f64 = 1e-10;
const QUAD_PANELS: usize = 2000;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must be positive and finite, got {alpha}")));
    }
    Ok(())
}

/// Support `[lambda_-, lambda_+]` of the continuous bulk.
pub fn mp_edges(alpha: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    let s = alpha.sqrt();
    Ok(((1.0 - s) * (1.0 - s), (1.0 + s) * (1.0 + s)))
}

/// Density of the continuous bulk (the point mass at zero is excluded).
pub fn mp_density(lambda: f64, alpha: f64) -> Result<f64> {
    let (lo, hi) = mp_edges(alpha)?;
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::Domain(format!("eigenvalue must be non-negative, got {lambda}")));
    }
    if lambda <= lo || lambda >= hi || lambda == 0.0 {
        return Ok(0.0);
    }
    Ok(((hi - lambda) * (lambda - lo)).sqrt() / (2.0 * PI * lambda))
}

/// Point mass at zero, `max(1 - alpha, 0)`.
pub fn mp_zero_mass(alpha: f64) -> f64 {
    (1.0 - alpha).max(0.0)
}

/// `int g(lambda) f(lambda) d lambda` over the bulk.
///
/// Substituting `lambda = c - h cos(theta)` with `c, h` the centre and
/// half-width of the support turns the square-root edges into a smooth
/// `sin^2(theta)` factor.
pub fn mp_bulk_integral<G: Fn(f64) -> f64>(alpha: f64, g: G) -> Result<f64> {
    let (lo, hi) = mp_edges(alpha)?;
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let integrand = |theta: f64| {
        let lambda = c - h * theta.cos();
        if lambda <= 0.0 {
            return 0.0;
        }
        let s = theta.sin();
        h * h * s * s / (2.0 * PI * lambda) * g(lambda)
    };
    Ok(integrate(integrand, 0.0, PI, QUAD_TOL, QUAD_PANELS).value)
}

/// Mass of the continuous bulk (`min(alpha, 1)` analytically).
pub fn mp_bulk_mass(alpha: f64) -> Result<f64> {
    mp_bulk_integral(alpha, |_| 1.0)
}

/// `int f(lambda) / lambda` over the bulk; infinite at `alpha = 1`.
pub fn mp_bulk_inverse_moment(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha == 1.0 {
        return Ok(f64::INFINITY);
    }
    mp_bulk_integral(alpha, |l| 1.0 / l)
}

/// Cumulative distribution including the point mass at zero.
pub fn mp_cdf(lambda: f64, alpha: f64) -> Result<f64> {
    let (lo, hi) = mp_edges(alpha)?;
    if lambda < 0.0 {
        return Ok(0.0);
    }
    let zero = mp_zero_mass(alpha);
    if lambda <= lo {
        return Ok(zero);
    }
    if lambda >= hi {
        return Ok(zero + mp_bulk_mass(alpha)?);
    }
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let theta_max = ((c - lambda) / h).clamp(-1.0, 1.0).acos();
    let integrand = |theta: f64| {
        let l = c - h * theta.cos();
        if l <= 0.0 {
            return 0.0;
        }
        let s = theta.sin();
        h * h * s * s / (2.0 * PI * l)
    };
    Ok(zero + integrate(integrand, 0.0, theta_max, QUAD_TOL, QUAD_PANELS).value)
}
