//! Seeded Monte Carlo estimates of tour products and related expectations.
//!
//! # Random streams
//!
//! Samples are grouped into fixed blocks of [`BLOCK_SIZE`]. Block `j` draws
//! from ChaCha8 keyed by `seed` (expanded with `SeedableRng::seed_from_u64`)
//! on stream `j`, so every block has its own counter-based substream and the
//! numbers a block sees do not depend on which worker runs it. Standard
//! normal variates come from the ziggurat sampler `rand_distr::StandardNormal`
//! (rand_distr 0.5); changing either generator changes every reported digit.
//!
//! # Reduction
//!
//! Each block accumulates its own mean and central moments; blocks are
//! merged by pairwise tree reduction in block order. The result is therefore
//! bit-identical for any number of workers, and with or without the
//! `parallel` feature.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{map_indexed, tree_reduce, Execution};
use crate::tour::{Topology, TourSpec};

/// Samples per substream block.
pub const BLOCK_SIZE: usize = 4096;
/// Tours with `n * d` above this accumulate the product as a sum of logs.
pub const LOG_SPACE_THRESHOLD: usize = 512;
/// Sample kurtosis above which a warning is attached to an estimate.
pub const KURTOSIS_WARNING: f64 = 50.0;
/// Eigenvalues of the step covariance below this are treated as zero.
pub const EIGEN_FLOOR: f64 = 1e-10;

pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const DEFAULT_SAMPLES_AT_LARGE: usize = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DirectTour,
    CorrelatedSteps,
    SignExpectation,
    OrthantIndicator,
}

/// What an estimate estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Quantity {
    Tour(TourSpec),
    /// `F(rho) = E(|z1||z2||z3|)` with complex step covariance `Ψ(rho)`.
    CorrelatedProduct { rho: f64 },
    /// `E sgn((r2-r1)(r3-r2)(r4-r3)(r5-r4))`.
    SignExpectation,
    /// `P{r1 < r2 < r3 < r4 < r5}`.
    OrthantProbability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Sample standard deviation over `sqrt(samples)`.
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
    pub quantity: Quantity,
    pub method: Method,
    /// `m4 / m2²` of the sampled values.
    pub kurtosis: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Running count, mean and central moments up to order four.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        let n1 = self.n as f64;
        self.n += 1;
        let n = self.n as f64;
        let delta = x - self.mean;
        let dn = delta / n;
        let dn2 = dn * dn;
        let t1 = delta * dn * n1;
        self.mean += dn;
        self.m4 += t1 * dn2 * (n * n - 3.0 * n + 3.0) + 6.0 * dn2 * self.m2 - 4.0 * dn * self.m3;
        self.m3 += t1 * dn * (n - 2.0) - 3.0 * dn * self.m2;
        self.m2 += t1;
    }

    /// Combines two disjoint sample sets.
    pub fn merge(a: Moments, b: Moments) -> Moments {
        if a.n == 0 {
            return b;
        }
        if b.n == 0 {
            return a;
        }
        let (na, nb) = (a.n as f64, b.n as f64);
        let n = na + nb;
        let delta = b.mean - a.mean;
        let d2 = delta * delta;
        let mean = a.mean + delta * nb / n;
        let m2 = a.m2 + b.m2 + d2 * na * nb / n;
        let m3 = a.m3 + b.m3 + d2 * delta * na * nb * (na - nb) / (n * n)
            + 3.0 * delta * (na * b.m2 - nb * a.m2) / n;
        let m4 = a.m4
            + b.m4
            + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * b.m2 + nb * nb * a.m2) / (n * n)
            + 4.0 * delta * (na * b.m3 - nb * a.m3) / n;
        Moments {
            n: a.n + b.n,
            mean,
            m2,
            m3,
            m4,
        }
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.m2 / (self.n as f64 - 1.0)
    }

    pub fn stderr(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }

    pub fn kurtosis(&self) -> f64 {
        if self.m2 == 0.0 {
            return 0.0;
        }
        self.n as f64 * self.m4 / (self.m2 * self.m2)
    }
}

fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

/// Runs `sample` `samples` times over per-block substreams and reduces.
/// `make_scratch` builds per-block working memory.
fn run_blocks<S, M, F>(samples: usize, seed: u64, exec: Execution, make_scratch: M, sample: F) -> Result<Moments>
where
    M: Fn() -> S + Sync + Send,
    F: Fn(&mut ChaCha8Rng, &mut S) -> Result<f64> + Sync + Send,
{
    if samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "Monte Carlo needs at least 2 samples, got {samples}"
        )));
    }
    let blocks = samples.div_ceil(BLOCK_SIZE);
    let parts = map_indexed(blocks, exec, |j| {
        let mut rng = block_rng(seed, j);
        let mut scratch = make_scratch();
        let count = BLOCK_SIZE.min(samples - j * BLOCK_SIZE);
        let mut m = Moments::default();
        for _ in 0..count {
            m.push(sample(&mut rng, &mut scratch)?);
        }
        Ok(m)
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(tree_reduce(parts, Moments::merge).unwrap_or_default())
}

fn finish(m: Moments, seed: u64, quantity: Quantity, method: Method) -> Estimate {
    let kurtosis = m.kurtosis();
    let warning = (kurtosis > KURTOSIS_WARNING).then(|| {
        format!("sample kurtosis {kurtosis:.1} exceeds {KURTOSIS_WARNING}; 3-sigma intervals are approximate")
    });
    Estimate {
        value: m.mean,
        stderr: m.stderr(),
        samples: m.n as usize,
        seed,
        quantity,
        method,
        kurtosis,
        warning,
    }
}

/// Direct simulation of `E(Π |r_{i+1} - r_i|)` over the tour's points.
pub fn estimate_tour(spec: &TourSpec, samples: usize, seed: u64) -> Result<Estimate> {
    estimate_tour_with(spec, samples, seed, Execution::Auto)
}

pub fn estimate_tour_with(spec: &TourSpec, samples: usize, seed: u64, exec: Execution) -> Result<Estimate> {
    let spec = TourSpec::new(spec.d, spec.n, spec.topology)?;
    let (d, n, m) = (spec.d, spec.n, spec.points());
    let log_space = n * d > LOG_SPACE_THRESHOLD;
    let moments = run_blocks(
        samples,
        seed,
        exec,
        || vec![0.0f64; m * d],
        |rng, pts| {
            for v in pts.iter_mut() {
                *v = StandardNormal.sample(rng);
            }
            let step = |i: usize| {
                let j = match spec.topology {
                    Topology::Open => i + 1,
                    Topology::Closed => (i + 1) % m,
                };
                let (p, q) = (&pts[i * d..(i + 1) * d], &pts[j * d..(j + 1) * d]);
                p.iter().zip(q).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
            };
            if log_space {
                let v = (0..n).map(|i| step(i).ln()).sum::<f64>().exp();
                if v.is_infinite() {
                    return Err(Error::Overflow);
                }
                Ok(v)
            } else {
                Ok((0..n).map(step).product())
            }
        },
    )?;
    Ok(finish(moments, seed, Quantity::Tour(spec), Method::DirectTour))
}

/// Factor `L` with `L Lᵀ = Ψ(rho)/2`, the covariance of the real (and of the
/// imaginary) parts of three consecutive complex steps.
///
/// Uses a symmetric eigendecomposition so semidefinite covariances work.
pub fn correlated_step_factor(rho: f64) -> Result<Matrix3<f64>> {
    if !rho.is_finite() {
        return Err(Error::InvalidArgument(format!("rho must be finite, got {rho}")));
    }
    let half_psi = 2.0 * Matrix3::new(1.0, rho, 0.0, rho, 1.0, rho, 0.0, rho, 1.0);
    let eig = SymmetricEigen::new(half_psi);
    let min = eig.eigenvalues.min();
    if min < -EIGEN_FLOOR {
        return Err(Error::InvalidCovariance { min_eigenvalue: min });
    }
    let roots = eig
        .eigenvalues
        .map(|l| if l < EIGEN_FLOOR { 0.0 } else { l.sqrt() });
    Ok(eig.eigenvectors * Matrix3::from_diagonal(&roots))
}

/// `F(rho) = E(|z1||z2||z3|)` for complex Gaussian steps with covariance
/// `Ψ(rho)`; at `rho = -1/2` this is `mu(2,3)`.
pub fn estimate_correlated_product(rho: f64, samples: usize, seed: u64) -> Result<Estimate> {
    estimate_correlated_product_with(rho, samples, seed, Execution::Auto)
}

pub fn estimate_correlated_product_with(rho: f64, samples: usize, seed: u64, exec: Execution) -> Result<Estimate> {
    let l = correlated_step_factor(rho)?;
    let moments = run_blocks(
        samples,
        seed,
        exec,
        || (),
        |rng, _| {
            let mut draw = || Vector3::from_fn(|_, _| StandardNormal.sample(&mut *rng));
            let re = l * draw();
            let im = l * draw();
            Ok((0..3).map(|k| re[k].hypot(im[k])).product())
        },
    )?;
    Ok(finish(
        moments,
        seed,
        Quantity::CorrelatedProduct { rho },
        Method::CorrelatedSteps,
    ))
}

fn increments(rng: &mut ChaCha8Rng) -> [f64; 4] {
    let r: [f64; 5] = std::array::from_fn(|_| StandardNormal.sample(&mut *rng));
    std::array::from_fn(|i| r[i + 1] - r[i])
}

/// `gamma = E sgn((r2-r1)(r3-r2)(r4-r3)(r5-r4))` with `sgn(0) = 1`.
pub fn estimate_sign_expectation(samples: usize, seed: u64) -> Result<Estimate> {
    estimate_sign_expectation_with(samples, seed, Execution::Auto)
}

pub fn estimate_sign_expectation_with(samples: usize, seed: u64, exec: Execution) -> Result<Estimate> {
    let moments = run_blocks(samples, seed, exec, || (), |rng, _| {
        let p: f64 = increments(rng).iter().product();
        Ok(if p >= 0.0 { 1.0 } else { -1.0 })
    })?;
    Ok(finish(moments, seed, Quantity::SignExpectation, Method::SignExpectation))
}

/// `P{all four consecutive increments > 0}`.
pub fn estimate_orthant_probability(samples: usize, seed: u64) -> Result<Estimate> {
    estimate_orthant_probability_with(samples, seed, Execution::Auto)
}

pub fn estimate_orthant_probability_with(samples: usize, seed: u64, exec: Execution) -> Result<Estimate> {
    let moments = run_blocks(samples, seed, exec, || (), |rng, _| {
        Ok(if increments(rng).iter().all(|&x| x > 0.0) { 1.0 } else { 0.0 })
    })?;
    Ok(finish(
        moments,
        seed,
        Quantity::OrthantProbability,
        Method::OrthantIndicator,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn merge_matches_sequential_push() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37 % 101) as f64).sqrt() - 3.0).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        let m = Moments::merge(a, b);
        assert_eq!(m.n, all.n);
        for (x, y) in [(m.mean, all.mean), (m.m2, all.m2), (m.m3, all.m3), (m.m4, all.m4)] {
            assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn moments_of_known_sample() {
        let mut m = Moments::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            m.push(x);
        }
        assert_eq!(m.mean, 2.5);
        assert!((m.variance() - 5.0 / 3.0).abs() < 1e-15);
        // Σ(x-2.5)^4 = 2(1.5^4 + 0.5^4) = 10.25, m2 = 5
        assert!((m.kurtosis() - 4.0 * 10.25 / 25.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_tiny_sample_counts() {
        let spec = TourSpec::open(2, 2).unwrap();
        assert!(estimate_tour(&spec, 1, 0).is_err());
        assert!(estimate_sign_expectation(0, 0).is_err());
    }

    #[test]
    fn deterministic_across_execution_modes() {
        let spec = TourSpec::closed(3, 4).unwrap();
        let a = estimate_tour_with(&spec, 50_000, 9, Execution::Sequential).unwrap();
        let b = estimate_tour_with(&spec, 50_000, 9, Execution::Parallel).unwrap();
        let c = crate::par::with_threads(3, || estimate_tour_with(&spec, 50_000, 9, Execution::Parallel).unwrap());
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.stderr.to_bits(), c.stderr.to_bits());
        assert_eq!(a, c);
    }

    #[test]
    fn different_seeds_differ() {
        let spec = TourSpec::open(2, 3).unwrap();
        let a = estimate_tour(&spec, 10_000, 1).unwrap();
        let b = estimate_tour(&spec, 10_000, 2).unwrap();
        assert_ne!(a.value, b.value);
    }

    #[test]
    fn closed_two_step_is_second_moment() {
        let e = estimate_tour(&TourSpec::closed(1, 2).unwrap(), 200_000, 3).unwrap();
        assert!((e.value - 2.0).abs() < 4.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn log_space_agrees_with_direct_product() {
        // n*d = 600 forces the log-space path; the value is finite.
        let e = estimate_tour(&TourSpec::open(300, 2).unwrap(), 2_000, 5).unwrap();
        let want = crate::catalogue::exact_value(&TourSpec::closed(300, 2).unwrap()).unwrap().value;
        // mu(d,2) ~ 2d for large d; just check the magnitude.
        assert!((e.value / want - 1.0).abs() < 0.05);
    }

    #[test]
    fn factor_reproduces_covariance() {
        for &rho in &[0.0, -0.35, -0.5, -std::f64::consts::FRAC_1_SQRT_2] {
            let l = correlated_step_factor(rho).unwrap();
            let want = 2.0 * Matrix3::new(1.0, rho, 0.0, rho, 1.0, rho, 0.0, rho, 1.0);
            assert!((l * l.transpose() - want).abs().max() < 1e-9);
        }
        assert!(matches!(
            correlated_step_factor(-0.9),
            Err(Error::InvalidCovariance { .. })
        ));
    }

    #[test]
    fn kurtosis_warning_is_attached() {
        let e = estimate_tour(&TourSpec::open(1, 6).unwrap(), 200_000, 11).unwrap();
        assert!(e.kurtosis > KURTOSIS_WARNING);
        assert!(e.warning.is_some());
        let e = estimate_tour(&TourSpec::open(3, 1).unwrap(), 20_000, 11).unwrap();
        assert!(e.warning.is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn merge_is_associative_enough(xs in proptest::collection::vec(-50.0f64..50.0, 3..60), cut in 1usize..58) {
            let cut = cut.min(xs.len() - 1);
            let mut all = Moments::default();
            xs.iter().for_each(|&x| all.push(x));
            let mut a = Moments::default();
            let mut b = Moments::default();
            xs[..cut].iter().for_each(|&x| a.push(x));
            xs[cut..].iter().for_each(|&x| b.push(x));
            let m = Moments::merge(a, b);
            prop_assert!((m.mean - all.mean).abs() < 1e-9);
            prop_assert!((m.m2 - all.m2).abs() < 1e-7 * all.m2.max(1.0));
            prop_assert!((m.m4 - all.m4).abs() < 1e-6 * all.m4.max(1.0));
        }

        #[test]
        fn worker_count_never_changes_bits(seed in any::<u64>(), threads in 1usize..5) {
            let spec = TourSpec::open(2, 3).unwrap();
            let a = estimate_tour_with(&spec, 9_000, seed, Execution::Sequential).unwrap();
            let b = crate::par::with_threads(threads, || estimate_tour_with(&spec, 9_000, seed, Execution::Parallel).unwrap());
            prop_assert_eq!(a, b);
        }
    }
}
