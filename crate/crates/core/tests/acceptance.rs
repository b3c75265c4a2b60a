//! Acceptance criteria. Each test prints one `[PASS]` or `[FAIL]` line with
//! the measured quantity and wall time, then asserts.

use std::sync::Arc;
use std::time::{Duration, Instant};

use wfmgf::master::{
    build_rate_implicit, build_rate_implicit_k, build_rate_wf, diffusion_limit_residuals, diffusion_to_generations,
    transition_matrix, Arithmetic,
};
use wfmgf::montecarlo::{simulate, McConfig};
use wfmgf::spectral2::{EigenTable2, SpectralSolution2};
use wfmgf::spectral_k::{EigenTableK, SpectralSolutionK};
use wfmgf::{graded_enumerate, Hp, MultiIndex, Scalar};

const PS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
const TS: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 5.0];

fn report(id: u32, what: &str, ok: bool, detail: String, elapsed: Duration, limit: Duration) {
    let pass = ok && elapsed < limit;
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] C{id} {what}: {detail} ({:.3} s, limit {} s)", elapsed.as_secs_f64(), limit.as_secs());
    assert!(ok, "C{id} {what}: {detail}");
    assert!(elapsed < limit, "C{id} {what}: took {elapsed:?}, limit {limit:?}");
}

fn mi(v: &[u32]) -> MultiIndex {
    MultiIndex::from(v.to_vec())
}

#[test]
fn c01_low_order_coefficients_and_moments() {
    let start = Instant::now();
    let table = Arc::new(EigenTable2::<f64>::build(10).unwrap());
    let mut worst = 0.0f64;
    for p in PS {
        let s = SpectralSolution2::solve(p, table.clone()).unwrap();
        let q = p * p - p;
        let c3 = (p * p * p - 1.5 * p * p + 0.5 * p) / 6.0;
        let expected = [1.0, p, q / 2.0, c3];
        for (c, e) in s.coefficients().iter().zip(expected) {
            worst = worst.max((c - e).abs());
        }
        for t in TS {
            let m2 = p + q * (-t).exp();
            let m3 = p + 1.5 * q * (-t).exp() + 6.0 * c3 * (-3.0 * t).exp();
            worst = worst.max((s.moment(2, t) - m2).abs()).max((s.moment(3, t) - m3).abs());
        }
    }
    report(
        1,
        "c_0..c_3 and m_2, m_3",
        worst < 1e-12,
        format!("max error {worst:.2e} (tol 1e-12)"),
        start.elapsed(),
        Duration::from_secs(1),
    );
}

#[test]
fn c02_heterozygosity() {
    let start = Instant::now();
    let table = Arc::new(EigenTable2::<f64>::build(10).unwrap());
    let mut worst = 0.0f64;
    for p in PS {
        let s = SpectralSolution2::solve(p, table.clone()).unwrap();
        for t in TS {
            let h = 2.0 * (s.moment(1, t) - s.moment(2, t));
            worst = worst.max((h - 2.0 * p * (1.0 - p) * (-t).exp()).abs());
        }
    }
    report(
        2,
        "heterozygosity 2(m_1 - m_2)",
        worst < 1e-12,
        format!("max error {worst:.2e} (tol 1e-12)"),
        start.elapsed(),
        Duration::from_secs(1),
    );
}

#[test]
fn c03_eventual_absorption() {
    let start = Instant::now();
    let table = Arc::new(EigenTable2::<Hp>::build(60).unwrap());
    let mut worst = 0.0f64;
    for p in PS {
        let s = SpectralSolution2::solve(Hp::from_f64(p), table.clone()).unwrap();
        let fix = s.fixation_probability(50.0, 60).value.to_f64();
        let ext = s.extinction_probability(50.0, 60).unwrap().value.to_f64();
        worst = worst.max((fix - p).abs()).max((ext - (1.0 - p)).abs());
    }
    report(
        3,
        "fixation/extinction at t = 50",
        worst < 1e-9,
        format!("max error {worst:.2e} (tol 1e-9)"),
        start.elapsed(),
        Duration::from_secs(1),
    );
}

#[test]
fn c04_eigenfunction_residuals() {
    let start = Instant::now();
    let table = EigenTable2::<f64>::build(40).unwrap();
    let mut two = 0.0f64;
    for k in 0..=10 {
        two = two.max(table.verify_eigenfunction(k, 40).unwrap());
    }
    let mut multi = 0.0f64;
    for dim in [2, 3] {
        let table = EigenTableK::<f64>::build(dim, 8).unwrap();
        for alpha in graded_enumerate(dim, 4) {
            multi = multi.max(table.verify_eigenfunction(&alpha, 8).unwrap());
        }
    }
    let ok = two < 1e-12 && multi < 1e-12;
    report(
        4,
        "eigenfunction residuals",
        ok,
        format!("two-allele {two:.2e}, multi-allele {multi:.2e} (tol 1e-12)"),
        start.elapsed(),
        Duration::from_secs(10),
    );
}

#[test]
fn c05_implicit_scheme_reproduces_moments() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for two_n in [4u32, 8, 16] {
        let b = build_rate_implicit(two_n, Arithmetic::Exact).unwrap();
        let table = Arc::new(EigenTable2::<Hp>::build(two_n as usize).unwrap());
        let sols: Vec<_> = (1..two_n)
            .map(|i| SpectralSolution2::solve(Hp::ratio(i as i64, two_n as i64), table.clone()).unwrap())
            .collect();
        for t in [0.1, 0.5, 1.0, 2.0] {
            let p = transition_matrix(&b, t).unwrap();
            for (s, i) in sols.iter().zip(1..) {
                for n in 0..=two_n {
                    let d = p.moment(i, &mi(&[n])) - s.moment(n as usize, t).to_f64();
                    worst = worst.max(d.abs());
                }
            }
        }
    }
    report(
        5,
        "master scheme a vs spectral moments",
        worst < 1e-7,
        format!("max |Δm_n| {worst:.2e} (tol 1e-7)"),
        start.elapsed(),
        Duration::from_secs(30),
    );
}

#[test]
fn c06_wright_fisher_heterozygosity_order() {
    let start = Instant::now();
    let mut errors = Vec::new();
    for two_n in [32u32, 64, 128] {
        let b = build_rate_wf(two_n).unwrap();
        let mut worst = 0.0f64;
        for t in [0.1, 0.5, 1.0, 2.0] {
            let p = transition_matrix(&b, diffusion_to_generations(t, two_n)).unwrap();
            for i in 1..two_n as usize {
                let x = i as f64 / two_n as f64;
                let h = 2.0 * (p.moment(i, &mi(&[1])) - p.moment(i, &mi(&[2])));
                worst = worst.max((h - 2.0 * x * (1.0 - x) * (-t).exp()).abs());
            }
        }
        errors.push(worst);
    }
    let ratios = [errors[0] / errors[1], errors[1] / errors[2]];
    let ok = ratios.iter().all(|r| (1.7..=2.3).contains(r));
    report(
        6,
        "scheme b heterozygosity error halves per doubling",
        ok,
        format!("errors {:.2e} {:.2e} {:.2e}, ratios {ratios:.3?} (want [1.7, 2.3])", errors[0], errors[1], errors[2]),
        start.elapsed(),
        Duration::from_secs(120),
    );
}

#[test]
fn c07_central_moment_limits() {
    let start = Instant::now();
    let a = diffusion_limit_residuals(&build_rate_implicit(16, Arithmetic::Exact).unwrap(), 4);
    let a_worst = a.iter().map(|r| r.max_residual).fold(0.0, f64::max);
    let ak = diffusion_limit_residuals(&build_rate_implicit_k(2, 8, Arithmetic::Exact).unwrap(), 3);
    let ak_worst = ak.iter().map(|r| r.max_residual).fold(0.0, f64::max);
    let b32 = diffusion_limit_residuals(&build_rate_wf(32).unwrap(), 4);
    let b64 = diffusion_limit_residuals(&build_rate_wf(64).unwrap(), 4);
    // The first central moment is exactly zero for the binomial kernel;
    // the ratio is taken where the residual is a genuine O(1/N²) term.
    let first = b32[0].max_residual.max(b64[0].max_residual);
    let ratios: Vec<f64> = [2usize, 3].iter().map(|&d| b32[d].max_residual / b64[d].max_residual).collect();
    let ok = a_worst < 1e-8 && ak_worst < 1e-8 && first < 1e-12 && ratios.iter().all(|r| (3.0..=5.0).contains(r));
    report(
        7,
        "diffusion-limit central moments",
        ok,
        format!(
            "scheme a {a_worst:.2e}, K=2 {ak_worst:.2e} (tol 1e-8); scheme b n=1 {first:.2e}, n=3,4 ratios {ratios:.3?} (want [3, 5])"
        ),
        start.elapsed(),
        Duration::from_secs(60),
    );
}

#[test]
fn c08_mean_absorption_time() {
    let start = Instant::now();
    let table = Arc::new(EigenTable2::<Hp>::build(400).unwrap());
    let mut worst = 0.0f64;
    for p in [0.1, 0.3, 0.5] {
        let s = SpectralSolution2::solve(Hp::from_f64(p), table.clone()).unwrap();
        let v = s.mean_absorption_time(400).unwrap().value.to_f64();
        let oracle = -2.0 * (p * p.ln() + (1.0 - p) * (1.0 - p).ln());
        worst = worst.max((v - oracle).abs());
    }
    report(
        8,
        "mean absorption time, kmax = 400",
        worst < 1e-3,
        format!("max error {worst:.2e} (tol 1e-3)"),
        start.elapsed(),
        Duration::from_secs(5),
    );
}

/// Five-point central difference of `f` at `t`.
fn derivative(f: impl Fn(f64) -> f64, t: f64) -> f64 {
    let h = 1e-3;
    (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
}

#[test]
fn c09_multi_allele_consistency() {
    let start = Instant::now();
    let two = SpectralSolution2::solve(0.3, Arc::new(EigenTable2::<f64>::build(6).unwrap())).unwrap();
    let multi = SpectralSolutionK::solve(vec![0.3, 0.2], Arc::new(EigenTableK::<f64>::build(2, 6).unwrap())).unwrap();
    let mut marginal = 0.0f64;
    for n in 0..=6u32 {
        for t in TS {
            let d = multi.moment(&mi(&[n, 0]), t).unwrap() - two.moment(n as usize, t);
            marginal = marginal.max(d.abs());
        }
    }
    let mut ode = 0.0f64;
    for p in [vec![0.35], vec![0.3, 0.2], vec![0.2, 0.3, 0.1]] {
        let dim = p.len();
        let s = SpectralSolutionK::solve(p, Arc::new(EigenTableK::<f64>::build(dim, 5).unwrap())).unwrap();
        for beta in graded_enumerate(dim, 5) {
            let k = beta.degree() as f64;
            for t in [0.1, 0.5, 1.0, 2.0] {
                let lhs = derivative(|t| s.moment(&beta, t).unwrap(), t);
                let mut rhs = -k * (k - 1.0) / 2.0 * s.moment(&beta, t).unwrap();
                for (u, &b) in beta.components().iter().enumerate() {
                    if b >= 2 {
                        let lower = beta.subtract_unit(u).unwrap();
                        rhs += (b * (b - 1)) as f64 / 2.0 * s.moment(&lower, t).unwrap();
                    }
                }
                ode = ode.max((lhs - rhs).abs());
            }
        }
    }
    let ok = marginal < 1e-10 && ode < 1e-6;
    report(
        9,
        "multi-allele marginals and moment ODE",
        ok,
        format!("marginal {marginal:.2e} (tol 1e-10), ODE residual {ode:.2e} (tol 1e-6)"),
        start.elapsed(),
        Duration::from_secs(30),
    );
}

#[test]
fn c10_monte_carlo_agreement() {
    let start = Instant::now();
    let p = 0.5;
    let cfg = McConfig { two_n: 200, i0: vec![100], generations: 200, replicates: 100_000, seed: 20240501 };
    let samples = simulate(&cfg, &[50, 100, 200]).unwrap();
    let spectral = SpectralSolution2::solve(Hp::from_f64(p), Arc::new(EigenTable2::<Hp>::build(80).unwrap())).unwrap();
    let m2 = samples.moments(&[mi(&[2])]).unwrap();
    let het = samples.heterozygosity();
    let fix = samples.fixation().unwrap();
    let mut ok = true;
    let mut worst_z = 0.0f64;
    for ((m, h), f) in m2.iter().zip(&het).zip(&fix) {
        let t = m.t;
        let checks = [
            (m.mean, m.std_error, spectral.moment(2, t).to_f64()),
            (h.mean, h.std_error, spectral.heterozygosity(t).to_f64()),
            (f.fixed_fraction, f.fixed_std_error, spectral.fixation_probability(t, 80).value.to_f64()),
        ];
        for (emp, se, exact) in checks {
            ok &= (emp - exact).abs() <= 4.0 * se + 0.01;
            worst_z = worst_z.max((emp - exact).abs() / (4.0 * se + 0.01));
        }
    }
    report(
        10,
        "Monte Carlo vs spectral (m_2, heterozygosity, fixation)",
        ok,
        format!("worst |Δ| / (4 SE + 0.01) = {worst_z:.3} (want ≤ 1)"),
        start.elapsed(),
        Duration::from_secs(120),
    );
}
