//! End-to-end acceptance checks. Each test prints one `[PASS]` or `[FAIL]`
//! line before asserting, so `cargo test --test acceptance -- --nocapture`
//! gives a readable summary.

use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rmt_cvm::chebyshev::{chebyshev_t, clipping_gap, traces};
use rmt_cvm::ensembles::{sample_haar_unitary, sample_wigner, EnsembleParams, SeedSpec};
use rmt_cvm::limitlaw::constants;
use rmt_cvm::montecarlo::{
    cue_covariance_reports, mean, mesoscopic_limit_check, power_trace_mean_reports, power_trace_samples,
    reproduce_figures, run_replica_map, trace_samples, trace_square_target, verify_trace_moments, FigureCase,
    FigureConfig, MomentReport,
};
use rmt_cvm::smoothing::quadrature::QuadratureRule;
use rmt_cvm::smoothing::{
    d_coefficient, poisson_kernel, smooth_indicator, IndicatorMethod, KernelSign, MesoscopicScale,
};
use rmt_cvm::spectral::{eigenphases, eigenvalues, Spectrum};
use rmt_cvm::statistics::{
    cue_cvm_exact, cue_cvm_series, cvm_exact, cvm_quadrature, mcvm_quadrature, mcvm_series, power_traces,
};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn verdict(criterion: u32, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {criterion}: {detail}");
}

fn worst_z(reports: &[MomentReport]) -> &MomentReport {
    reports
        .iter()
        .max_by(|a, b| a.z.abs().total_cmp(&b.z.abs()))
        .expect("non-empty report list")
}

#[test]
fn criterion_01_exact_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut cvm_worst = 0.0f64;
    for case in 0..20u64 {
        let n = rng.random_range(1..=128usize);
        let spread = if case % 4 == 0 { 1.4 } else { 1.0 };
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(-spread..spread)).collect();
        let s = Spectrum::new(values).unwrap();
        cvm_worst = cvm_worst.max((cvm_exact(&s).value - cvm_quadrature(&s).value).abs());
    }

    let p = EnsembleParams::goe(200).unwrap();
    let scale = MesoscopicScale::new(0.2, 200).unwrap();
    let mut mcvm_excess = f64::NEG_INFINITY;
    for i in 0..10 {
        let s = eigenvalues(&sample_wigner(&p, SeedSpec::new(102, i)).unwrap()).unwrap();
        let c = s.clipped();
        let series = mcvm_series(&scale, &traces(&c, scale.n_omega() + 2).unwrap()).unwrap();
        let quad = mcvm_quadrature(&scale, &c).unwrap();
        let tol = series.truncation_bound.unwrap().max(1e-6);
        mcvm_excess = mcvm_excess.max((series.value - quad.value).abs() - tol);
    }

    let j = 10_000;
    let mut cue_worst = 0.0f64;
    for i in 0..100 {
        let u = eigenphases(&sample_haar_unitary(8, SeedSpec::new(103, i)).unwrap()).unwrap();
        let series = cue_cvm_series(&power_traces(&u, j).unwrap()).value;
        cue_worst = cue_worst.max((series - cue_cvm_exact(&u).value).abs());
    }
    let cue_tol = 4.0 / j as f64 + 1e-8;

    let pass = cvm_worst <= 1e-9 && mcvm_excess <= 0.0 && cue_worst <= cue_tol;
    verdict(
        1,
        pass,
        &format!(
            "cvm max diff {cvm_worst:.2e} (tol 1e-9); mcvm max excess over tolerance {mcvm_excess:.2e}; \
             cue max diff {cue_worst:.2e} (tol {cue_tol:.2e})"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_02_cue_expectation() {
    let (n, j, replicas) = (10usize, 200usize, 100_000u64);
    let values = run_replica_map(replicas, 201, |seed| {
        let u = eigenphases(&sample_haar_unitary(n, seed)?)?;
        Ok(cue_cvm_series(&power_traces(&u, j)?).value)
    })
    .unwrap();
    let m = mean(&values);
    let var = values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (values.len() as f64 - 1.0);
    let se = (var / values.len() as f64).sqrt();
    let nf = n as f64;
    let target = 4.0 / (nf * nf) * (nf.ln() + EULER_GAMMA + 1.0);
    let tol = 3.0 * se + 4.0 / j as f64 + 10.0 / nf.powi(3);
    let pass = (m - target).abs() <= tol;
    verdict(2, pass, &format!("mean {m:.6} target {target:.6} se {se:.2e} tol {tol:.2e}"));
    assert!(pass);
}

/// `|Tr U^j|^2` for `j = 1..=16`, Haar `N = 8`, shared by criteria 3 and 4.
fn haar_power_samples() -> &'static Vec<Vec<f64>> {
    static SAMPLES: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    SAMPLES.get_or_init(|| power_trace_samples(8, 16, 100_000, 301).unwrap())
}

#[test]
fn criterion_03_cue_covariance_table() {
    let reports = cue_covariance_reports(haar_power_samples(), 8);
    let has = |label: &str| reports.iter().any(|r| r.name.contains(label));
    let covers_cases = has("(j+k<=N)") && has("(j+k>N)") && has("(j or k>N)");
    let named = ["cov j=2 k=2 ", "cov j=4 k=5 ", "cov j=10 k=12 "]
        .iter()
        .all(|prefix| reports.iter().any(|r| r.name.starts_with(prefix)));
    let w = worst_z(&reports);
    let pass = covers_cases && named && reports.iter().all(|r| r.z.abs() <= 5.0);
    verdict(
        3,
        pass,
        &format!("{} pairs, all three cases: {covers_cases}, worst |z| {:.2} at {}", reports.len(), w.z.abs(), w.name),
    );
    assert!(pass);
}

#[test]
fn criterion_04_power_trace_moments() {
    let reports = power_trace_mean_reports(haar_power_samples(), 8);
    let targets_ok = reports
        .iter()
        .enumerate()
        .all(|(i, r)| r.target == (i as f64 + 1.0).min(8.0));
    let w = worst_z(&reports);
    let pass = reports.len() == 16 && targets_ok && reports.iter().all(|r| r.z.abs() <= 5.0);
    verdict(4, pass, &format!("j=1..16, worst |z| {:.2} at {}", w.z.abs(), w.name));
    assert!(pass);
}

#[test]
fn criterion_05_trace_clt_targets() {
    let mut all = Vec::new();
    for (label, p, seed) in [
        ("goe", EnsembleParams::goe(400).unwrap(), 501),
        ("rademacher", EnsembleParams::rademacher(400).unwrap(), 502),
    ] {
        for r in verify_trace_moments(&p, 10_000, seed, 4).unwrap() {
            if r.name.starts_with("E g_") || r.name.starts_with("Var g_") {
                all.push(MomentReport {
                    name: format!("{label} {}", r.name),
                    ..r
                });
            }
        }
    }
    let w = worst_z(&all);
    let pass = all.len() == 16 && all.iter().all(|r| r.z.abs() <= 3.0);
    verdict(5, pass, &format!("{} checks, worst |z| {:.2} at {}", all.len(), w.z.abs(), w.name));
    for r in &all {
        println!("    {} estimate {:.4} target {:.4} z {:.2}", r.name, r.estimate, r.target, r.z);
    }
    assert!(pass);
}

#[test]
fn criterion_06_second_moment_leading_term() {
    let p = EnsembleParams::goe(200).unwrap();
    let samples = trace_samples(&p, 20_000, 601, 8).unwrap();
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for k in [1usize, 2, 3, 5, 8] {
        let sq: Vec<f64> = samples.iter().map(|t| t[k - 1] * t[k - 1]).collect();
        let est = mean(&sq);
        let target = trace_square_target(&p, k);
        let rel = (est - target).abs() / target;
        worst = worst.max(rel);
        lines.push(format!("k={k} rel {rel:.3}"));
    }
    let pass = worst <= 0.15;
    verdict(6, pass, &format!("worst relative error {worst:.3} (tol 0.15): {}", lines.join(", ")));
    assert!(pass);
}

#[test]
fn criterion_07_constants_collapse() {
    let mut worst = 0.0f64;
    for beta in [1u32, 2] {
        let b = beta as f64;
        let c = constants(beta, 3.0 - b, 0.0).unwrap();
        let a = c.a;
        for v in [a.z2, a.z4, a.z6, a.z2_sq, a.z1z3, a.z2z4] {
            worst = worst.max(v.abs());
        }
        worst = worst.max((a.z1_sq - 1.0 / (2.0 * b * PI * PI)).abs());
        let b_target = -(LN_2 - 0.5) / (b * PI * PI) + (2.0 - b) * (1.0 / 48.0 - 1.0 / (8.0 * PI * PI));
        worst = worst.max((c.b - b_target).abs());
    }
    let pass = worst <= 1e-12;
    verdict(7, pass, &format!("max deviation {worst:.2e} over beta in {{1, 2}}"));
    assert!(pass);
}

#[test]
fn criterion_08_figure_reproduction() {
    let mut pass = true;
    let mut parts = Vec::new();
    for (case, seed) in [(FigureCase::Gaussian, 801), (FigureCase::Rademacher, 802)] {
        let report = reproduce_figures(&FigureConfig::new(case, 400, 6000, seed)).unwrap();
        pass &= report.ks.pass && report.control_ks.pass;
        parts.push(format!(
            "{case:?}: ks {:.4} (tol {}), control {:.4} (tol {})",
            report.ks.distance, report.ks.threshold, report.control_ks.distance, report.control_ks.threshold
        ));
    }
    verdict(8, pass, &parts.join("; "));
    assert!(pass);
}

#[test]
fn criterion_09_mesoscopic_limit() {
    let p = EnsembleParams::goe(400).unwrap();
    let check = mesoscopic_limit_check(&p, 0.2, 2000, 100_000, 300, 901, 0.08).unwrap();
    let shifted_mean = mean(&check.shifted);
    let limit_mean = mean(&check.limit);
    verdict(
        9,
        check.ks.pass,
        &format!(
            "ks {:.4} (tol 0.08); shift {:.4}; sample means {shifted_mean:.4} vs limit {limit_mean:.4}",
            check.ks.distance, check.shift
        ),
    );
    assert!(check.ks.pass);
}

/// Double-double three-term recurrence, so the oracle's own rounding is
/// negligible next to the 1e-12 tolerance.
fn recurrence_dd(k: usize, x: f64) -> f64 {
    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }
    if k == 0 {
        return 1.0;
    }
    let (mut prev, mut cur) = ((1.0f64, 0.0f64), (x, 0.0f64));
    let two_x = 2.0 * x;
    for _ in 1..k {
        let p = two_x * cur.0;
        let e = two_x.mul_add(cur.0, -p) + two_x * cur.1;
        let (s, t) = two_sum(p, -prev.0);
        let lo = t + e - prev.1;
        let hi = s + lo;
        prev = cur;
        cur = (hi, lo - (hi - s));
    }
    cur.0 + cur.1
}

#[test]
fn criterion_10_property_checks() {
    let mut failures = Vec::new();

    // Kernel normalization: (1/2pi) int (P^+ + P^-)(x, y) (1 - y^2)^{-1/2} dy = 1,
    // integrated in the angle variable y = cos(phi).
    let rule = QuadratureRule::composite_gauss_legendre(0.0, PI, 256, 16);
    for omega in [0.5, 0.2, 0.05] {
        let scale = MesoscopicScale::from_omega(omega, 400).unwrap();
        for x in [-0.9, -0.2, 0.0, 0.6] {
            let m = rule.integrate(|phi| {
                let y = phi.cos();
                poisson_kernel(&scale, x, y, KernelSign::Plus).unwrap()
                    + poisson_kernel(&scale, x, y, KernelSign::Minus).unwrap()
            }) / (2.0 * PI);
            if (m - 1.0).abs() > 1e-8 {
                failures.push(format!("kernel mass {m} at omega={omega} x={x}"));
            }
        }
    }

    // chi is monotone in t.
    let scale = MesoscopicScale::new(0.2, 400).unwrap();
    for x in [-0.95, -0.3, 0.0, 0.4, 0.99] {
        let mut prev = -1.0;
        for i in 0..=200 {
            let t = -0.999 + 1.998 * i as f64 / 200.0;
            let v = smooth_indicator(&scale, t, x, IndicatorMethod::ClosedForm).unwrap();
            if v < prev - 1e-12 || !(-1e-12..=1.0 + 1e-12).contains(&v) {
                failures.push(format!("chi not monotone at x={x} t={t}"));
                break;
            }
            prev = v;
        }
    }

    // d-coefficient cross integrals against the semicircle, t = cos(phi).
    let mut d_worst = 0.0f64;
    for j in 1..=12usize {
        for k in 1..=12usize {
            let got = rule.integrate(|phi| {
                let t = phi.cos();
                d_coefficient(j, t).unwrap() * d_coefficient(k, t).unwrap() * 2.0 / PI * phi.sin().powi(2)
            });
            let delta = |c: bool| if c { 1.0 } else { 0.0 };
            let target = 2.0 / (PI * PI * (j * k) as f64)
                * (delta(j == k) - 0.5 * delta(j + 2 == k || k + 2 == j) + 0.5 * delta(j + k == 2));
            d_worst = d_worst.max((got - target).abs());
        }
    }
    if d_worst > 1e-10 {
        failures.push(format!("d cross integral off by {d_worst:e}"));
    }

    // Chebyshev evaluation against the recurrence, degrees up to 10^3.
    let mut cheb_worst = 0.0f64;
    for k in [2usize, 17, 100, 333, 999, 1000] {
        for i in 0..=1000 {
            let x = -1.0 + 2.0 * i as f64 / 1000.0;
            cheb_worst = cheb_worst.max((chebyshev_t(k, x).unwrap() - recurrence_dd(k, x)).abs());
        }
    }
    if cheb_worst > 1e-12 {
        failures.push(format!("chebyshev recurrence gap {cheb_worst:e}"));
    }

    // Clipping diagnostic: zero inside the support, small at N = 400.
    let inside = Spectrum::new(vec![-0.9, 0.1, 0.5]).unwrap();
    if clipping_gap(&inside, 20).unwrap() != 0.0 {
        failures.push("clipping gap nonzero for an in-support spectrum".into());
    }
    let p = EnsembleParams::goe(400).unwrap();
    let mut gaps: Vec<f64> = (0..50)
        .map(|i| clipping_gap(&eigenvalues(&sample_wigner(&p, SeedSpec::new(1001, i)).unwrap()).unwrap(), 20).unwrap())
        .collect();
    gaps.sort_by(f64::total_cmp);
    let gap_bound = 10.0 * 400.0 * 400.0f64.powf(-5.0 / 3.0);
    if gaps[25] > gap_bound {
        failures.push(format!("median clipping gap {} above {gap_bound}", gaps[25]));
    }

    // Determinism across thread counts.
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            run_replica_map(24, 1002, |seed| {
                let s = eigenvalues(&sample_wigner(&EnsembleParams::goe(60)?, seed)?)?;
                Ok(cvm_exact(&s).value)
            })
            .unwrap()
        })
    };
    let (one, four) = (run(1), run(4));
    if one.iter().zip(&four).any(|(a, b)| a.to_bits() != b.to_bits()) {
        failures.push("results differ between 1 and 4 threads".into());
    }

    let pass = failures.is_empty();
    let detail = if pass {
        format!("kernel mass, chi monotone, d identity ({d_worst:.1e}), chebyshev ({cheb_worst:.1e}), clipping, threads")
    } else {
        failures.join("; ")
    };
    verdict(10, pass, &detail);
    assert!(pass);
}
