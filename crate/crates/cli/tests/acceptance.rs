//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fail.

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use gaussian_tours::catalogue::{exact_value, published};
use gaussian_tours::correlation::{mu1_open, orthant_probability_gamma};
use gaussian_tours::monte_carlo::{
    estimate_correlated_product, estimate_orthant_probability, estimate_sign_expectation, estimate_tour,
    estimate_tour_with, Estimate,
};
use gaussian_tours::quadrature::{
    mu22_quadrature, mu23_at_rho, nu23_quadrature, nu33_quadrature, QuadratureConfig, SeriesParams,
};
use gaussian_tours::report::{at_large_targets, mu23_report, RunConfig};
use gaussian_tours::special::{bessel_i_scaled_seq, elliptic_e_modulus, elliptic_k_modulus};
use gaussian_tours::{Execution, Topology, TourSpec};

const SEED_A: u64 = 20_240_601;
const SEED_B: u64 = 7_777;

/// Decimals as printed next to each closed form.
#[allow(clippy::approx_constant)]
const PRINTED: [(usize, usize, Topology, f64); 15] = [
    (1, 1, Topology::Open, 1.128379),
    (1, 2, Topology::Open, 1.435991),
    (1, 3, Topology::Open, 1.778095),
    (1, 4, Topology::Open, 2.215483),
    (1, 2, Topology::Closed, 2.0),
    (1, 3, Topology::Closed, 1.692568),
    (1, 4, Topology::Closed, 2.530818),
    (2, 1, Topology::Open, 1.772453),
    (2, 2, Topology::Open, 3.341223),
    (2, 2, Topology::Closed, 4.0),
    (3, 1, Topology::Open, 2.256758),
    (3, 2, Topology::Open, 5.307973),
    (3, 3, Topology::Open, 12.442385),
    (3, 4, Topology::Open, 29.174181),
    (3, 2, Topology::Closed, 6.0),
];

fn spec(d: usize, n: usize, t: Topology) -> TourSpec {
    TourSpec::new(d, n, t).unwrap()
}

/// Within 5e-7 of the printed decimal, or equal to it after truncating to
/// the six printed places.
fn matches_printed(value: f64, printed: f64) -> (bool, bool) {
    let rounded = (value - printed).abs() < 5e-7;
    let truncated = ((value * 1e6).floor() - (printed * 1e6).round()).abs() < 0.5;
    (rounded, truncated)
}

fn within(a: f64, ea: f64, b: f64, eb: f64) -> bool {
    (a - b).abs() < 3.0 * ea.hypot(eb)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1_catalogue() -> Outcome {
    let mut by_rounding = 0;
    let mut by_truncation = 0;
    let mut bad = Vec::new();
    let mut worst: f64 = 0.0;
    for (d, n, t, printed) in PRINTED {
        let e = exact_value(&spec(d, n, t)).expect("catalogued");
        worst = worst.max((e.value - printed).abs());
        match matches_printed(e.value, printed) {
            (true, _) => by_rounding += 1,
            (false, true) => by_truncation += 1,
            _ => bad.push(format!("{} = {}", e.spec, e.value)),
        }
    }
    let count_ok = published().len() == PRINTED.len();
    outcome(
        bad.is_empty() && count_ok,
        format!(
            "{} entries: {by_rounding} within 5e-7, {by_truncation} equal after truncation to 6 places; max |v - printed| = {worst:.1e}{}",
            published().len(),
            if bad.is_empty() { String::new() } else { format!("; mismatched {bad:?}") }
        ),
    )
}

fn c2_dual_derivation() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 2..=4 {
        let a = mu1_open(n).unwrap();
        let b = exact_value(&TourSpec::open(1, n).unwrap()).unwrap().value;
        worst = worst.max((a - b).abs());
    }
    outcome(worst < 1e-10, format!("max |mu1_open - closed form| over n = 2..4: {worst:.1e}"))
}

fn c3_orthant() -> Outcome {
    let og = orthant_probability_gamma();
    let dp = (og.probability - 1.0 / 120.0).abs();
    let dg = (og.gamma - 2.0 / 15.0).abs();
    let g = estimate_sign_expectation(10_000_000, SEED_A).unwrap();
    let p = estimate_orthant_probability(10_000_000, SEED_A).unwrap();
    let g_ok = (g.value - 2.0 / 15.0).abs() < 3.0 * g.stderr;
    let p_ok = (p.value - 1.0 / 120.0).abs() < 3.0 * p.stderr;
    outcome(
        dp < 1e-14 && dg < 1e-14 && g_ok && p_ok,
        format!(
            "algebraic |dP| = {dp:.1e}, |dgamma| = {dg:.1e}; simulated gamma = {:.5} +/- {:.1e}, P = {:.6} +/- {:.1e}",
            g.value, g.stderr, p.value, p.stderr
        ),
    )
}

fn c4_mu22() -> Outcome {
    let ell = 4.0 * elliptic_e_modulus(0.5).unwrap() - 1.5 * elliptic_k_modulus(0.5).unwrap();
    let (r, t) = matches_printed(ell, 3.341223);
    let q = mu22_quadrature(&QuadratureConfig::default().with_tol(1e-8)).unwrap();
    let mc = estimate_tour(&TourSpec::open(2, 2).unwrap(), 1_000_000, SEED_A).unwrap();
    let e_ell = 1e-12 * ell;
    let pairs = [
        within(ell, e_ell, q.value, q.error),
        within(ell, e_ell, mc.value, mc.stderr),
        within(q.value, q.error, mc.value, mc.stderr),
    ];
    outcome(
        (r || t) && pairs.iter().all(|&x| x),
        format!(
            "elliptic {ell:.10}, quadrature {:.10} +/- {:.1e}, MC {:.5} +/- {:.1e}; pairwise {pairs:?}",
            q.value, q.error, mc.value, mc.stderr
        ),
    )
}

fn c5_triangles() -> Outcome {
    let cfg = QuadratureConfig::default();
    let a = nu23_quadrature(&cfg).unwrap();
    let b = nu33_quadrature(&cfg).unwrap();
    let ma = estimate_tour(&TourSpec::closed(2, 3).unwrap(), 10_000_000, SEED_A).unwrap();
    let mb = estimate_tour(&TourSpec::closed(3, 3).unwrap(), 10_000_000, SEED_A).unwrap();
    let ok = (a.value - 6.359).abs() < 0.002
        && (b.value - 12.708).abs() < 0.002
        && within(a.value, a.error, ma.value, ma.stderr)
        && within(b.value, b.error, mb.value, mb.stderr);
    outcome(
        ok,
        format!(
            "nu(2,3) = {:.9} (MC {:.4} +/- {:.1e}), nu(3,3) = {:.9} (MC {:.4} +/- {:.1e})",
            a.value, ma.value, ma.stderr, b.value, mb.value, mb.stderr
        ),
    )
}

fn c6_mu23() -> Outcome {
    let cfg = RunConfig {
        samples: 10_000_000,
        ..RunConfig::default()
    };
    let report = mu23_report(&cfg).unwrap();
    let fit = report.extrapolation.clone().unwrap();
    let u = fit.uncertainty.unwrap_or(f64::INFINITY);
    let direct = estimate_correlated_product(-0.5, 10_000_000, SEED_A).unwrap();
    let consistent = (fit.value - direct.value).abs() < 3.0 * u.hypot(direct.stderr);
    let f0 = estimate_correlated_product(0.0, 10_000_000, SEED_A).unwrap();
    let f0_ok = (f0.value - PI.powf(1.5)).abs() < 3.0 * f0.stderr;
    let near0 = mu23_at_rho(&SeriesParams::new(-1e-6).unwrap(), &QuadratureConfig::default()).unwrap();
    let ok = (fit.value - 6.25).abs() < 0.05 && u < 0.05 && consistent && f0_ok;
    outcome(
        ok,
        format!(
            "extrapolated {:.6} +/- {u:.1e}; direct MC at rho=-1/2 {:.5} +/- {:.1e}; F(0) MC {:.5} +/- {:.1e} vs pi^1.5 = {:.5} (series at rho=-1e-6: {:.8}); sweep agreement {}",
            fit.value,
            direct.value,
            direct.stderr,
            f0.value,
            f0.stderr,
            PI.powf(1.5),
            near0.value,
            report.sweep.iter().all(|r| r.agree)
        ),
    )
}

fn oracle_failures(specs: &[TourSpec], seed: u64) -> Vec<(TourSpec, Estimate, f64)> {
    specs
        .iter()
        .filter_map(|s| {
            let exact = exact_value(s).unwrap().value;
            let e = estimate_tour(s, 1_000_000, seed).unwrap();
            ((e.value - exact).abs() >= 3.0 * e.stderr).then_some((*s, e, exact))
        })
        .collect()
}

fn c7_oracles() -> Outcome {
    let mut specs: Vec<TourSpec> = published().iter().map(|e| e.spec).collect();
    specs.extend([TourSpec::closed(4, 2).unwrap(), TourSpec::closed(5, 2).unwrap()]);
    let first = oracle_failures(&specs, SEED_A);
    let retry: Vec<TourSpec> = first.iter().map(|f| f.0).collect();
    let second = oracle_failures(&retry, SEED_B);
    let names: Vec<String> = first.iter().map(|f| f.0.to_string()).collect();
    outcome(
        first.len() <= 1 && second.is_empty(),
        format!(
            "{} values at 1e6 samples; marginal failures with first seed: {names:?}; still failing with second seed: {}",
            specs.len(),
            second.len()
        ),
    )
}

fn c8_new_values() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for s in at_large_targets() {
        let a = estimate_tour(&s, 100_000_000, SEED_A).unwrap();
        let b = estimate_tour(&s, 100_000_000, SEED_B).unwrap();
        let rel = a.stderr.max(b.stderr) / a.value;
        let agree = within(a.value, a.stderr, b.value, b.stderr);
        ok &= rel < 0.005 && agree;
        parts.push(format!(
            "{s} = {:.4} +/- {:.1e} / {:.4} +/- {:.1e}",
            a.value, a.stderr, b.value, b.stderr
        ));
    }
    outcome(ok, parts.join("; "))
}

fn run_cli(args: &[&str], threads: &str) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_gtours"))
        .args(args)
        .env("GTOURS_THREADS", threads)
        .output()
        .expect("run gtours");
    out.stdout
}

fn c9_determinism() -> Outcome {
    let commands: [&[&str]; 4] = [
        &["verify", "mu:2,2", "--format", "json"],
        &["verify", "nu:2,3", "--format", "json", "--samples", "300000"],
        &["estimate", "nu:3,4", "--format", "json", "--samples", "500000", "--seed", "99"],
        &["mu23", "--format", "json", "--rho-grid", "-0.45,-0.48", "--samples", "200000", "--tol", "1e-6"],
    ];
    let mut same = true;
    for args in commands {
        let base = run_cli(args, "1");
        same &= !base.is_empty();
        for threads in ["1", "2", "5"] {
            same &= run_cli(args, threads) == base;
        }
    }
    let s = TourSpec::open(3, 4).unwrap();
    let a = estimate_tour_with(&s, 300_000, 5, Execution::Sequential).unwrap();
    let b = estimate_tour_with(&s, 300_000, 5, Execution::Parallel).unwrap();
    same &= a == b;
    outcome(same, "4 commands x worker counts {1, 1, 2, 5} byte-identical; sequential == parallel estimate".into())
}

fn c10_special() -> Outcome {
    let mut legendre: f64 = 0.0;
    for i in 1..40 {
        let xi = i as f64 / 40.0;
        let xp = (1.0 - xi * xi).sqrt();
        let (k, e) = (elliptic_k_modulus(xi).unwrap(), elliptic_e_modulus(xi).unwrap());
        let (kp, ep) = (elliptic_k_modulus(xp).unwrap(), elliptic_e_modulus(xp).unwrap());
        legendre = legendre.max((e * kp + ep * k - k * kp - FRAC_PI_2).abs());
    }
    let mut gen: f64 = 0.0;
    for x in [0.0f64, 0.1, 1.0, 7.5, 30.0, 98.0, 250.0] {
        let i = bessel_i_scaled_seq(x, 60 + 10 * x.sqrt() as usize).unwrap();
        gen = gen.max((i[0] + 2.0 * i[1..].iter().sum::<f64>() - 1.0).abs());
    }
    outcome(
        legendre < 1e-10 && gen < 1e-10,
        format!("max Legendre residual {legendre:.1e} over 39 moduli; max generating-function residual {gen:.1e}"),
    )
}

fn main() -> ExitCode {
    type Check = fn() -> Outcome;
    let criteria: [(u32, &str, Duration, Check); 10] = [
        (1, "catalogue fidelity", Duration::from_secs(1), c1_catalogue),
        (2, "dual-derivation identity", Duration::from_secs(1), c2_dual_derivation),
        (3, "orthant probability and gamma", Duration::from_secs(30), c3_orthant),
        (4, "mu(2,2) triple agreement", Duration::from_secs(60), c4_mu22),
        (5, "singular triple integrals", Duration::from_secs(300), c5_triangles),
        (6, "mu(2,3) limit", Duration::from_secs(600), c6_mu23),
        (7, "Monte Carlo oracle suite", Duration::from_secs(300), c7_oracles),
        (8, "new values at 1e8 samples", Duration::from_secs(1800), c8_new_values),
        (9, "determinism", Duration::from_secs(600), c9_determinism),
        (10, "special-function identities", Duration::from_secs(1), c10_special),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let t = Instant::now();
        let o = check();
        let took = t.elapsed();
        let pass = o.pass && took <= budget;
        failed += usize::from(!pass);
        println!(
            "criterion {id:>2} {name}: {} [{:.2}s of {}s] {}",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs(),
            o.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
