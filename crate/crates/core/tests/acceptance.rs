//! Acceptance criteria. Each test prints one `ACCEPTANCE PASS|FAIL` line.
//!
//! Run with `cargo test -p repalign --test acceptance -- --nocapture`; the
//! MNIST criterion needs `--ignored` and `REPALIGN_MNIST_DIR`.

use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use repalign::classifier::{load_mnist_dir, run_label_noise_sweep, LabelNoiseConfig, MNIST_DIR_ENV};
use repalign::experiments::{run_pair, run_sweep, solve_network, ActivationPair, CellSpec, Solver, SweepConfig, SweepRow};
use repalign::linalg::standard_normal_matrix;
use repalign::metrics::*;
use repalign::network::{init_small, Activation, TrainConfig};
use repalign::seed::{self, CellSeeds, Stream};
use repalign::teacher::{sample_dataset, sample_teacher, TeacherConfig};
use repalign::theory::*;
use repalign::Execution;

/// Writes straight to stdout so the verdict shows without `--nocapture`.
fn report(name: &str, started: Instant, failures: &[String]) {
    let secs = started.elapsed().as_secs_f64();
    let mut line = if failures.is_empty() {
        format!("ACCEPTANCE PASS {name} ({secs:.1}s)\n")
    } else {
        format!("ACCEPTANCE FAIL {name} ({secs:.1}s)\n")
    };
    for f in failures {
        line.push_str(&format!("    {f}\n"));
    }
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(failures.is_empty(), "{name}: {failures:#?}");
}

fn check(failures: &mut Vec<String>, ok: bool, msg: impl FnOnce() -> String) {
    if !ok {
        failures.push(msg());
    }
}

#[test]
fn theory_closed_forms() {
    let t = Instant::now();
    let mut f = Vec::new();
    for (name, got, want) in [
        ("rho_star(2, 1)", rho_star(2.0, 1.0).unwrap(), 0.5),
        ("rho_star(0.5, 1)", rho_star(0.5, 1.0).unwrap(), 1.0 / 6.0),
        ("cce_theory(2, 1)", cce_theory(2.0, 1.0).unwrap(), 0.018841),
        ("cce_theory(2, 5)", cce_theory(2.0, 5.0).unwrap(), 0.24562),
    ] {
        check(&mut f, (got - want).abs() <= 1e-4, || format!("{name} = {got}, expected {want}"));
    }
    check(&mut f, t.elapsed().as_secs_f64() < 1.0, || "runtime above 1 s".into());
    report("theory closed forms", t, &f);
}

#[test]
fn marchenko_pastur_identities() {
    let t = Instant::now();
    let mut f = Vec::new();
    for alpha in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let total = mp_bulk_mass(alpha).unwrap() + mp_zero_mass(alpha);
        check(&mut f, (total - 1.0).abs() <= 1e-6, || format!("alpha {alpha}: total mass {total}"));
    }
    let inv = mp_bulk_inverse_moment(2.0).unwrap();
    check(&mut f, (inv - 1.0).abs() <= 1e-3, || format!("inverse moment at alpha 2: {inv}"));
    check(&mut f, t.elapsed().as_secs_f64() < 5.0, || "runtime above 5 s".into());
    report("Marchenko-Pastur identities", t, &f);
}

fn gaussian_pair(rho: f64, n: usize, s: u64) -> (PointSet, PointSet) {
    let mut rng = seed::rng(s);
    let (mut a, mut b) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let x: f64 = StandardNormal.sample(&mut rng);
        let z: f64 = StandardNormal.sample(&mut rng);
        a.push(x);
        b.push(rho * x + (1.0 - rho * rho).sqrt() * z);
    }
    (PointSet::from_scalars(&a).unwrap(), PointSet::from_scalars(&b).unwrap())
}

#[test]
fn estimator_matches_closed_form() {
    let t = Instant::now();
    let mut f = Vec::new();
    for rho in [0.3, 0.6, 0.9] {
        let est: Vec<f64> = (0..10)
            .map(|s| {
                let (a, b) = gaussian_pair(rho, 10_000, 77 + s);
                cce_between(&a, &b, None, 0).unwrap().cce_ab
            })
            .collect();
        let mean = est.iter().sum::<f64>() / 10.0;
        let truth = cce_gaussian_closed_form(rho).unwrap();
        println!("    rho {rho}: mean estimate {mean:.4}, closed form {truth:.4}");
        check(&mut f, (mean - truth).abs() <= 0.03, || format!("rho {rho}: {mean} vs {truth}"));
    }
    check(&mut f, t.elapsed().as_secs_f64() < 60.0, || "runtime above 1 min".into());
    report("estimator vs closed form", t, &f);
}

fn linear_sweep() -> &'static (Vec<SweepRow>, f64) {
    static RESULT: OnceLock<(Vec<SweepRow>, f64)> = OnceLock::new();
    RESULT.get_or_init(|| {
        let t = Instant::now();
        let res = run_sweep(&SweepConfig::fig1(), Execution::default()).unwrap();
        (res.rows, t.elapsed().as_secs_f64())
    })
}

fn row(rows: &[SweepRow], x: f64, snr: f64) -> &SweepRow {
    rows.iter().find(|r| r.alpha == x && r.snr == Some(snr)).unwrap()
}

#[test]
fn linear_sweep_alignment_matches_theory() {
    let t = Instant::now();
    let (rows, secs) = linear_sweep();
    let mut f = Vec::new();
    for r in rows {
        let theory = r.cce_theory.unwrap();
        for (dir, s) in [("a->b", r.cce_ab), ("b->a", r.cce_ba)] {
            println!(
                "    alpha {} snr {} {dir}: {:.4} +- {:.4} (theory {:.4})",
                r.alpha,
                r.snr.unwrap(),
                s.mean,
                s.stderr,
                theory
            );
            if r.alpha == 1.0 {
                check(&mut f, s.mean <= 0.02, || format!("alpha 1 snr {:?} {dir}: {}", r.snr, s.mean));
            } else {
                let tol = (3.0 * s.stderr).max(0.05);
                check(&mut f, (s.mean - theory).abs() <= tol, || {
                    format!("alpha {} snr {:?} {dir}: {} vs {theory}", r.alpha, r.snr, s.mean)
                });
            }
        }
    }
    check(&mut f, *secs < 600.0, || format!("sweep took {secs:.0} s"));
    report("linear sweep alignment vs theory", t, &f);
}

#[test]
fn linear_sweep_error_matches_theory() {
    let t = Instant::now();
    let (rows, _) = linear_sweep();
    let mut f = Vec::new();
    for r in rows.iter().filter(|r| r.alpha != 1.0) {
        let theory = r.gen_err_theory.unwrap();
        let s = r.gen_err_a;
        let tol = (3.0 * s.stderr).max(0.05 * theory);
        println!("    alpha {} snr {}: {:.4} +- {:.4} (theory {:.4})", r.alpha, r.snr.unwrap(), s.mean, s.stderr, theory);
        check(&mut f, (s.mean - theory).abs() <= tol, || {
            format!("alpha {} snr {:?}: {} vs {theory}", r.alpha, r.snr, s.mean)
        });
    }
    let snrs = [0.1, 1.0, 5.0];
    for snr in snrs {
        let peak = row(rows, 1.0, snr).gen_err_a.mean;
        for nb in [0.8, 1.25] {
            let other = row(rows, nb, snr).gen_err_a.mean;
            check(&mut f, peak >= 5.0 * other, || format!("snr {snr}: error at 1 ({peak}) vs at {nb} ({other})"));
        }
    }
    let closed = [(2.0, gen_error_asymptotic(2.0, 1.0, 0.2).unwrap(), 0.4), (0.5, gen_error_asymptotic(0.5, 1.0, 0.2).unwrap(), 0.9)];
    for (alpha, got, want) in closed {
        check(&mut f, (got - want).abs() < 1e-6, || format!("asymptotic error at {alpha}: {got}"));
    }
    report("linear sweep generalization vs theory", t, &f);
}

#[test]
fn gd_matches_oracle() {
    let t = Instant::now();
    let mut f = Vec::new();
    let train = TrainConfig {
        rel_tol: 1e-12,
        max_steps: 1_000_000,
        ..TrainConfig::default()
    };
    for alpha in [0.5, 2.0] {
        for s in 0..5u64 {
            let spec = |solver| CellSpec {
                d: 200,
                k: 100,
                n: (alpha * 200.0) as usize,
                snr: 5.0,
                sigma_w2: 1.0,
                pair: ActivationPair::LinearLinear,
                solver,
                n_test: 10_000,
                n_cce: 2000,
                train,
                same_dataset: false,
            };
            let seeds = CellSeeds::new(2024, &[s]);
            let gd = run_pair(&spec(Solver::Gd), &seeds).unwrap();
            let or = run_pair(&spec(Solver::Oracle), &seeds).unwrap();
            check(&mut f, (gd.cce_ab - or.cce_ab).abs() <= 0.05, || {
                format!("alpha {alpha} seed {s}: GD CCE {} vs oracle {}", gd.cce_ab, or.cce_ab)
            });

            let cfg = TeacherConfig::from_snr(200, 1.0, 5.0).unwrap();
            let teacher = sample_teacher(cfg, seeds.stream(Stream::Teacher)).unwrap();
            let data = sample_dataset(&teacher, spec(Solver::Gd).n, seeds.stream(Stream::DatasetA)).unwrap();
            let oracle = v_star_oracle(&data).unwrap();
            let (net, _, _) = solve_network(Activation::Linear, Solver::Gd, 100, &data, &train, seeds.stream(Stream::InitA)).unwrap();
            let got = oracle.learned_coordinates(&net.total_map());
            let want = oracle.learned_coordinates(&oracle.total_map());
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..got.len() {
                if oracle.eigenvalues[i] > 1e-6 {
                    num += (got[i] - want[i]).powi(2);
                    den += want[i].powi(2);
                }
            }
            let rel = (num / den).sqrt();
            check(&mut f, rel <= 1e-3, || format!("alpha {alpha} seed {s}: relative W_tot error {rel}"));
        }
    }
    report("GD/oracle equivalence", t, &f);
}

fn relu_sweep_rows() -> Vec<SweepRow> {
    run_sweep(&SweepConfig::fig2(), Execution::default()).unwrap().rows
}

#[test]
fn relu_sweep_qualitative() {
    let t = Instant::now();
    let rows = relu_sweep_rows();
    let mut f = Vec::new();
    let gammas = [0.25, 0.5, 1.0, 2.0];
    for r in &rows {
        println!(
            "    gamma {} snr {}: error {:.3} +- {:.3}, cce {:.4} +- {:.4} / {:.4} +- {:.4}",
            r.alpha,
            r.snr.unwrap(),
            r.gen_err_a.mean,
            r.gen_err_a.stderr,
            r.cce_ab.mean,
            r.cce_ab.stderr,
            r.cce_ba.mean,
            r.cce_ba.stderr
        );
    }
    let cce = |r: &SweepRow| 0.5 * (r.cce_ab.mean + r.cce_ba.mean);
    let cce_se = |r: &SweepRow| 0.5 * (r.cce_ab.stderr.powi(2) + r.cce_ba.stderr.powi(2)).sqrt();
    let err = |r: &SweepRow| 0.5 * (r.gen_err_a.mean + r.gen_err_b.mean);
    for snr in [1.0, 5.0] {
        let at_one = row(&rows, 1.0, snr);
        for g in gammas.iter().filter(|&&g| g != 1.0) {
            let other = row(&rows, *g, snr);
            check(&mut f, err(at_one) > err(other), || {
                format!("(a) snr {snr}: error at 1 ({}) not above gamma {g} ({})", err(at_one), err(other))
            });
            check(&mut f, cce(at_one) < cce(other), || {
                format!("(b) snr {snr}: CCE at 1 ({}) not below gamma {g} ({})", cce(at_one), cce(other))
            });
        }
        check(&mut f, cce(at_one) > 0.02, || format!("(d) snr {snr}: CCE at 1 is {}", cce(at_one)));
    }
    for g in [0.25, 2.0] {
        let (hi, lo) = (row(&rows, g, 5.0), row(&rows, g, 1.0));
        let gap = cce(hi) - cce(lo);
        let se = (cce_se(hi).powi(2) + cce_se(lo).powi(2)).sqrt();
        check(&mut f, gap > 2.0 * se, || format!("(c) gamma {g}: CCE gap {gap} vs 2 stderr {}", 2.0 * se));
    }
    report("ReLU sweep qualitative", t, &f);
}

#[test]
fn cross_activation_sweep_qualitative() {
    let t = Instant::now();
    let rows = run_sweep(&SweepConfig::fig3(), Execution::default()).unwrap().rows;
    let mut f = Vec::new();
    for r in &rows {
        println!(
            "    gamma {}: linear error {:.3}, relu error {:.3}, cce lin->relu {:.4}, relu->lin {:.4}",
            r.alpha, r.gen_err_a.mean, r.gen_err_b.mean, r.cce_ab.mean, r.cce_ba.mean
        );
    }
    for r in &rows {
        if r.alpha == 0.05 {
            check(&mut f, r.gen_err_a.mean > r.gen_err_b.mean, || format!("no linear spike at 0.05: {r:?}"));
            check(&mut f, r.cce_ab.mean <= 0.02 && r.cce_ba.mean <= 0.02, || {
                format!("CCE at 0.05: {} / {}", r.cce_ab.mean, r.cce_ba.mean)
            });
        } else {
            check(&mut f, r.gen_err_a.mean <= r.gen_err_b.mean, || {
                format!("gamma {}: linear error {} above relu {}", r.alpha, r.gen_err_a.mean, r.gen_err_b.mean)
            });
        }
    }
    let i = rows.iter().position(|r| r.alpha == 1.0).unwrap();
    for dir in [0, 1] {
        let c = |r: &SweepRow| if dir == 0 { r.cce_ab.mean } else { r.cce_ba.mean };
        check(&mut f, c(&rows[i]) < c(&rows[i - 1]) && c(&rows[i]) < c(&rows[i + 1]), || {
            format!("direction {dir}: no local CCE minimum at gamma 1 ({} {} {})", c(&rows[i - 1]), c(&rows[i]), c(&rows[i + 1]))
        });
    }
    report("cross-activation sweep qualitative", t, &f);
}

#[test]
fn metrics_property_suite() {
    let t = Instant::now();
    let mut f = Vec::new();
    let pts = |n, d, s| PointSet::new(standard_normal_matrix(&mut seed::rng(s), n, d, 1.0)).unwrap();

    // invariance under global scale and orthogonal transforms
    for s in 0..5 {
        let a = pts(500, 6, s);
        let b = pts(500, 3, s + 50);
        let g = standard_normal_matrix(&mut seed::rng(s + 99), 6, 6, 1.0);
        let q = nalgebra::DMatrix::from_fn(6, 6, |i, j| g[[i, j]]).qr().q();
        let u = Array2::from_shape_fn((6, 6), |(i, j)| q[(i, j)]);
        let a2 = PointSet::new(a.as_array().dot(&u) * 0.37).unwrap();
        let same_table = pairwise_rank_table(&a).unwrap() == pairwise_rank_table(&a2).unwrap();
        check(&mut f, same_table, || format!("seed {s}: rank table changed under isometry"));
        let same_score = cce_between(&a, &b, None, 0).unwrap() == cce_between(&a2, &b, None, 0).unwrap();
        check(&mut f, same_score, || format!("seed {s}: scores changed under isometry"));
    }

    // brute-force reference at N <= 8
    for s in 0..200u64 {
        let n = 3 + (s % 6) as usize;
        let round = |p: PointSet| PointSet::new(p.as_array().mapv(|v| (v * 2.0).round())).unwrap();
        let (a, b) = (round(pts(n, 2, s)), round(pts(n, 2, s + 1000)));
        let rank = |p: &PointSet, i: usize, j: usize| {
            1 + (0..n)
                .filter(|&m| m != i && m != j)
                .filter(|&m| p.sq_dist(i, m) < p.sq_dist(i, j) || (p.sq_dist(i, m) == p.sq_dist(i, j) && m < j))
                .count() as u32
        };
        let expected: Vec<u32> = (0..n)
            .map(|i| {
                let nn = (0..n).find(|&j| j != i && rank(&a, i, j) == 1).unwrap();
                rank(&b, i, nn)
            })
            .collect();
        let (ta, tb) = (pairwise_rank_table(&a).unwrap(), pairwise_rank_table(&b).unwrap());
        let got = conditional_ranks(&ta, &tb).unwrap();
        check(&mut f, got.values() == &expected[..], || format!("seed {s}: {:?} vs {expected:?}", got.values()));
        let ii = expected.iter().map(|&r| r as f64).sum::<f64>() * 2.0 / (n * (n - 1)) as f64;
        check(&mut f, information_imbalance(&ta, &tb).unwrap() == ii, || format!("seed {s}: II mismatch"));
    }

    // information imbalance bound with 10% slack
    for rho in [0.3, 0.6, 0.9] {
        let (a, b) = gaussian_pair(rho, 10_000, 5);
        let sc = cce_between(&a, &b, None, 0).unwrap();
        let bound = ii_lower_bound(sc.cce_ab).unwrap();
        check(&mut f, sc.ii_ab >= 0.9 * bound, || format!("rho {rho}: II {} below bound {bound}", sc.ii_ab));
    }

    // gradients against central finite differences
    let cfg = TeacherConfig::new(6, 1.0, 0.3).unwrap();
    let data = sample_dataset(&sample_teacher(cfg, 1).unwrap(), 9, 2).unwrap();
    for act in [Activation::Linear, Activation::Relu] {
        let net = init_small(6, 4, act, 0.7, 3).unwrap();
        let g = net.analytic_gradient(&data).unwrap();
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        let n1 = net.w1.len();
        for idx in 0..n1 + net.w2.len() {
            let at = (idx / 6, idx % 6);
            let bump = |delta: f64| {
                let mut m = net.clone();
                if idx < n1 {
                    m.w1[at] += delta;
                } else {
                    m.w2[idx - n1] += delta;
                }
                m.loss(&data).unwrap()
            };
            let fd = (bump(h) - bump(-h)) / (2.0 * h);
            let an = if idx < n1 { g.w1[at] } else { g.w2[idx - n1] };
            worst = worst.max((fd - an).abs() / fd.abs().max(an.abs()).max(1e-8));
        }
        check(&mut f, worst <= 1e-5, || format!("{act}: worst relative gradient error {worst}"));
    }
    check(&mut f, t.elapsed().as_secs_f64() < 60.0, || "runtime above 1 min".into());
    report("metrics property suite", t, &f);
}

/// Desk-scale MNIST label-noise sweep (slow; needs the IDX files).
#[test]
#[ignore = "extended: needs REPALIGN_MNIST_DIR and up to two hours"]
fn mnist_label_noise_qualitative() {
    let t = Instant::now();
    let dir = std::env::var(MNIST_DIR_ENV).expect("set REPALIGN_MNIST_DIR");
    let (train, test) = load_mnist_dir(std::path::Path::new(&dir)).unwrap();
    let cfg = LabelNoiseConfig::fig5_mnist();
    let rows = run_label_noise_sweep(&cfg, &train, &test, Execution::default()).unwrap().rows;
    let mut f = Vec::new();
    let cce = |r: &SweepRow| 0.5 * (r.cce_ab.mean + r.cce_ba.mean);
    let cce_se = |r: &SweepRow| 0.5 * (r.cce_ab.stderr.powi(2) + r.cce_ba.stderr.powi(2)).sqrt();
    let at = |n: usize, p: f64| rows.iter().find(|r| r.n == n && r.p == Some(p)).unwrap();
    for r in &rows {
        println!("    n {} p {:?}: cce {:.4}, test error {:.4}", r.n, r.p, cce(r), r.gen_err_a.mean);
    }
    let n_max = *cfg.n_grid.iter().max().unwrap();
    let (clean, noisy) = (at(n_max, 0.0), at(n_max, 0.4));
    let gap = cce(clean) - cce(noisy);
    let se = (cce_se(clean).powi(2) + cce_se(noisy).powi(2)).sqrt();
    check(&mut f, gap > 2.0 * se, || format!("CCE p=0 vs p=0.4 at n={n_max}: gap {gap}, 2 stderr {}", 2.0 * se));
    for &p in &cfg.p_list {
        let curve: Vec<f64> = cfg.n_grid.iter().map(|&n| cce(at(n, p))).collect();
        let min = curve.iter().cloned().fold(f64::INFINITY, f64::min);
        let interior = curve[1..curve.len() - 1].contains(&min);
        check(&mut f, interior, || format!("p {p}: CCE minimum not interior: {curve:?}"));
    }
    for &n in &cfg.n_grid {
        for w in cfg.p_list.windows(2) {
            let (a, b) = (at(n, w[0]), at(n, w[1]));
            let se = (a.gen_err_a.stderr.powi(2) + b.gen_err_a.stderr.powi(2)).sqrt();
            check(&mut f, b.gen_err_a.mean + 2.0 * se >= a.gen_err_a.mean, || {
                format!("n {n}: test error decreases from p={} to p={}", w[0], w[1])
            });
        }
    }
    check(&mut f, t.elapsed().as_secs_f64() <= 7200.0, || "runtime above 2 h".into());
    report("MNIST label-noise qualitative", t, &f);
}

