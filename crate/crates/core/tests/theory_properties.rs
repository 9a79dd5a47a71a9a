use approx::assert_relative_eq;
use ndarray::Array1;
use proptest::prelude::*;
use repalign::linalg::{gram, norm, sym_eigen};
use repalign::network::{empirical_gen_error, TwoLayerNet};
use repalign::teacher::{sample_dataset, sample_inputs, sample_teacher, TeacherConfig};
use repalign::theory::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mass_is_conserved(alpha in 0.05f64..6.0) {
        let total = mp_bulk_mass(alpha).unwrap() + mp_zero_mass(alpha);
        prop_assert!((total - 1.0).abs() < 1e-6, "alpha {alpha}: {total}");
    }

    #[test]
    fn inverse_moment_closed_forms(alpha in 0.05f64..6.0) {
        prop_assume!((alpha - 1.0).abs() > 0.05);
        let expected = if alpha > 1.0 { 1.0 / (alpha - 1.0) } else { alpha / (1.0 - alpha) };
        let got = mp_bulk_inverse_moment(alpha).unwrap();
        prop_assert!((got - expected).abs() < 1e-6 * expected.max(1.0), "alpha {alpha}: {got} vs {expected}");
    }

    #[test]
    fn gen_error_closed_forms(alpha in 0.05f64..6.0, sw in 0.1f64..3.0, se in 0.01f64..3.0) {
        prop_assume!((alpha - 1.0).abs() > 0.05);
        let expected = if alpha > 1.0 {
            se * alpha / (alpha - 1.0)
        } else {
            (1.0 - alpha) * sw + se / (1.0 - alpha)
        };
        let got = gen_error_asymptotic(alpha, sw, se).unwrap();
        prop_assert!((got - expected).abs() < 1e-6 * expected, "{got} vs {expected}");
        prop_assert!(got >= se);
    }

    #[test]
    fn rho_star_is_a_correlation(alpha in 0.01f64..10.0, snr in 0.0f64..100.0) {
        let r = rho_star(alpha, snr).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert!(cce_theory(alpha, snr).unwrap() >= 0.0);
    }
}

#[test]
fn mp_density_integrates_against_cdf() {
    for alpha in [0.3, 1.0, 2.5] {
        let (lo, hi) = mp_edges(alpha).unwrap();
        assert_relative_eq!(mp_cdf(hi, alpha).unwrap(), 1.0, epsilon = 1e-6);
        assert_relative_eq!(mp_cdf(lo * 0.5, alpha).unwrap(), mp_zero_mass(alpha), epsilon = 1e-12);
    }
}

/// Minimum-norm fits of two independent datasets of one teacher.
fn oracle_pair(d: usize, alpha: f64, snr: f64, seed: u64) -> (f64, f64, f64, f64, f64) {
    let cfg = TeacherConfig::from_snr(d, 1.0, snr).unwrap();
    let t = sample_teacher(cfg, seed).unwrap();
    let n = (alpha * d as f64).round() as usize;
    let a = v_star_oracle(&sample_dataset(&t, n, seed + 1000).unwrap()).unwrap();
    let b = v_star_oracle(&sample_dataset(&t, n, seed + 2000).unwrap()).unwrap();
    let (va, vb) = (a.total_map(), b.total_map());
    let cos = va.dot(&vb) / (norm(&va) * norm(&vb));
    let rf = rho_finite(&a.spectrum, &b.spectrum, cfg.sigma_w2, cfg.sigma_eps2).unwrap();
    let ge = gen_error_finite(&a.spectrum, cfg.sigma_w2, cfg.sigma_eps2).unwrap();
    let xt = sample_inputs(d, 4000, seed + 3000);
    let net = TwoLayerNet::new(va.clone().insert_axis(ndarray::Axis(0)), Array1::ones(1), repalign::network::Activation::Linear).unwrap();
    let emp = empirical_gen_error(&net, &t, &xt).unwrap();
    (cos, rf, ge, emp, rho_star(alpha, snr).unwrap())
}

#[test]
fn oracle_cosines_follow_finite_size_and_asymptotic_correlation() {
    for (alpha, snr) in [(0.5, 5.0), (2.0, 1.0), (4.0, 5.0)] {
        let runs: Vec<_> = (0..20).map(|s| oracle_pair(300, alpha, snr, s)).collect();
        let m = runs.len() as f64;
        let cos = runs.iter().map(|r| r.0).sum::<f64>() / m;
        // below the threshold the two row spaces overlap in a fraction alpha
        let overlap = alpha.min(1.0);
        let rf = overlap * runs.iter().map(|r| r.1).sum::<f64>() / m;
        let rs = runs[0].4;
        assert!((cos - rf).abs() < 0.03, "alpha {alpha} snr {snr}: cos {cos} vs finite {rf}");
        assert!((rf - rs).abs() < 0.03, "alpha {alpha} snr {snr}: finite {rf} vs asymptotic {rs}");
    }
}

#[test]
fn oracle_gen_error_matches_finite_formula() {
    // alpha = 2, SNR = 5: mean empirical error within 3 standard errors of the
    // same-spectrum prediction
    let runs: Vec<_> = (0..20).map(|s| oracle_pair(200, 2.0, 5.0, 50 + s)).collect();
    let diffs: Vec<f64> = runs.iter().map(|r| r.3 - r.2).collect();
    let m = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / m;
    let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
    assert!(mean.abs() <= 3.0 * sd / m.sqrt(), "mean diff {mean}, stderr {}", sd / m.sqrt());
}

#[test]
fn finite_formula_has_exact_limits() {
    let spec = Spectrum::new(vec![2.0, 1.0, 0.5], 3).unwrap();
    assert_relative_eq!(gen_error_finite(&spec, 1.0, 0.0).unwrap(), 0.0, epsilon = 1e-15);
    let half = Spectrum::new(vec![2.0], 2).unwrap();
    assert_relative_eq!(gen_error_finite(&half, 1.0, 0.0).unwrap(), 0.5, epsilon = 1e-15);
    assert_relative_eq!(rho_finite(&spec, &spec, 1.0, 0.0).unwrap(), 1.0, epsilon = 1e-15);
}

#[test]
fn oracle_spectrum_is_the_gram_spectrum() {
    let cfg = TeacherConfig::new(20, 1.0, 0.1).unwrap();
    let t = sample_teacher(cfg, 3).unwrap();
    let data = sample_dataset(&t, 50, 4).unwrap();
    let sol = v_star_oracle(&data).unwrap();
    let eig = sym_eigen(gram(data.x.view()).view());
    for (a, b) in sol.spectrum.eigenvalues().iter().zip(eig.values.iter()) {
        assert_relative_eq!(*a, *b, max_relative = 1e-10);
    }
    assert_eq!(sol.rank(), 20);
}
