//! Closed-form and quadrature predictions for linear students at the global
//! minimum of the training loss.

mod alignment;
mod oracle;
pub mod mp;
pub mod quadrature;

pub use alignment::{
    cce_theory, gen_error_asymptotic, gen_error_finite, rho_finite, rho_star, theory_point, Spectrum,
    TheoryPoint,
};
pub use mp::{mp_bulk_integral, mp_bulk_inverse_moment, mp_bulk_mass, mp_cdf, mp_density, mp_edges, mp_zero_mass};
pub use oracle::{v_star_oracle, OracleSolution, RANK_TOL};
