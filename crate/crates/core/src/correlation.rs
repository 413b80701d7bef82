//! One-dimensional machinery: correlations between consecutive tour steps,
//! partial correlations, the orthant identity for the sign expectation, and
//! the arcsine formulas for `mu(1, n)`, `n <= 4`.
//!
//! All step indices are **1-based**: `rho(1, 2)` is the correlation between
//! the first step `r2 - r1` and the second step `r3 - r2`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::gaussian_step_mean;

/// Correlation matrix of the steps `r_{i+1} - r_i` of a one-dimensional
/// Gaussian tour: 1 on the diagonal, -1/2 between neighbours, 0 elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCorrelationStructure {
    n: usize,
    rho: Vec<f64>,
}

/// A partial correlation together with the (1-based) steps conditioned on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialCorrelation {
    pub value: f64,
    pub conditioning_set: Vec<usize>,
}

/// Orthant probability `P{all four consecutive increments > 0}` and the sign
/// expectation `gamma` recovered from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrthantGamma {
    pub probability: f64,
    pub gamma: f64,
}

/// Correlation structure for an `n`-step tour.
pub fn step_correlations(n: usize) -> Result<StepCorrelationStructure> {
    if n < 1 {
        return Err(Error::domain("step_correlations needs n >= 1"));
    }
    let mut rho = vec![0.0; n * n];
    for i in 0..n {
        rho[i * n + i] = 1.0;
        if i + 1 < n {
            rho[i * n + i + 1] = -0.5;
            rho[(i + 1) * n + i] = -0.5;
        }
    }
    Ok(StepCorrelationStructure { n, rho })
}

impl StepCorrelationStructure {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `rho_ij`, 1-based. Panics when an index is out of range.
    pub fn rho(&self, i: usize, j: usize) -> f64 {
        assert!(
            (1..=self.n).contains(&i) && (1..=self.n).contains(&j),
            "step index out of range 1..={}: ({i}, {j})",
            self.n
        );
        self.rho[(i - 1) * self.n + (j - 1)]
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.rho)
    }

    fn check_indices(&self, idx: &[usize]) -> Result<()> {
        for (a, &i) in idx.iter().enumerate() {
            if !(1..=self.n).contains(&i) {
                return Err(Error::domain(format!(
                    "step index {i} outside 1..={}",
                    self.n
                )));
            }
            if idx[..a].contains(&i) {
                return Err(Error::domain(format!("step indices must be distinct: {idx:?}")));
            }
        }
        Ok(())
    }

    fn partial_1_value(&self, i: usize, j: usize, k: usize) -> Result<f64> {
        let (rik, rjk) = (self.rho(i, k), self.rho(j, k));
        if rik.abs() >= 1.0 || rjk.abs() >= 1.0 {
            return Err(Error::Degenerate {
                pair: if rik.abs() >= 1.0 {
                    format!("{i}{k}")
                } else {
                    format!("{j}{k}")
                },
            });
        }
        Ok((self.rho(i, j) - rik * rjk) / ((1.0 - rik * rik) * (1.0 - rjk * rjk)).sqrt())
    }

    fn partial_2_value(&self, i: usize, j: usize, k: usize, l: usize) -> Result<f64> {
        let rij = self.partial_1_value(i, j, k)?;
        let ril = self.partial_1_value(i, l, k)?;
        let rjl = self.partial_1_value(j, l, k)?;
        let denom = (1.0 - ril * ril) * (1.0 - rjl * rjl);
        if denom <= 0.0 {
            return Err(Error::Degenerate {
                pair: format!("{i}{l}.{k} or {j}{l}.{k}"),
            });
        }
        Ok((rij - ril * rjl) / denom.sqrt())
    }
}

/// First-order partial correlation
///
/// ```text
/// rho_{ij.k} = (rho_ij - rho_ik rho_jk) / sqrt((1 - rho_ik²)(1 - rho_jk²))
/// ```
pub fn partial_correlation_1(
    s: &StepCorrelationStructure,
    i: usize,
    j: usize,
    k: usize,
) -> Result<PartialCorrelation> {
    s.check_indices(&[i, j, k])?;
    Ok(PartialCorrelation {
        value: s.partial_1_value(i, j, k)?,
        conditioning_set: vec![k],
    })
}

/// Second-order partial correlation, built from first-order ones:
///
/// ```text
/// rho_{ij.kl} = (rho_{ij.k} - rho_{il.k} rho_{jl.k}) / sqrt((1 - rho_{il.k}²)(1 - rho_{jl.k}²))
/// ```
pub fn partial_correlation_2(
    s: &StepCorrelationStructure,
    i: usize,
    j: usize,
    k: usize,
    l: usize,
) -> Result<PartialCorrelation> {
    s.check_indices(&[i, j, k, l])?;
    Ok(PartialCorrelation {
        value: s.partial_2_value(i, j, k, l)?,
        conditioning_set: vec![k, l],
    })
}

/// Determinant `R_n` of the correlation matrix. For the tour structure this
/// is `(n + 1) / 2^n`.
pub fn gram_determinant(s: &StepCorrelationStructure) -> f64 {
    s.to_matrix().determinant()
}

/// Probability that five ordered Gaussian points are increasing, `1/5!`, and
/// the sign expectation `gamma` solved from
///
/// ```text
/// P = 1/16 + (1/(8π)) Σ_{i<j} arcsin(rho_ij) + gamma/16
/// ```
pub fn orthant_probability_gamma() -> OrthantGamma {
    let s = step_correlations(4).expect("n = 4 is valid");
    // Increments all positive <=> the five exchangeable points are sorted.
    let probability = 1.0 / (1..=5).map(|k| k as f64).product::<f64>();
    let mut arcsin_sum = 0.0;
    for i in 1..=4 {
        for j in (i + 1)..=4 {
            arcsin_sum += s.rho(i, j).asin();
        }
    }
    let gamma = 16.0 * (probability - 1.0 / 16.0 - arcsin_sum / (8.0 * PI));
    OrthantGamma { probability, gamma }
}

/// `mu(1, n)` from the arcsine / partial-correlation formulas.
///
/// Only `n <= 4` is supported; beyond that no closed formula is available.
pub fn mu1_open(n: usize) -> Result<f64> {
    match n {
        0 => Err(Error::domain("mu1_open needs n >= 1")),
        1 => gaussian_step_mean(1),
        2 => Ok(abs_product_2(&step_correlations(2)?)),
        3 => abs_product_3(&step_correlations(3)?),
        4 => abs_product_4(&step_correlations(4)?, orthant_probability_gamma().gamma),
        _ => Err(Error::Unsupported(format!(
            "no correlation formula for mu(1,{n}); only n <= 4"
        ))),
    }
}

// Every step has variance 2, so E|X_1 ... X_n| carries a factor 2^{n/2} over
// the unit-variance formulas.

fn abs_product_2(s: &StepCorrelationStructure) -> f64 {
    let r12 = s.rho(1, 2);
    4.0 / PI * (gram_determinant(s).sqrt() + r12 * r12.asin())
}

fn abs_product_3(s: &StepCorrelationStructure) -> Result<f64> {
    let r = |i, j| s.rho(i, j);
    let p = |i, j, k| s.partial_1_value(i, j, k);
    let bracket = gram_determinant(s).sqrt()
        + (r(1, 2) + r(1, 3) * r(2, 3)) * p(1, 2, 3)?.asin()
        + (r(1, 3) + r(1, 2) * r(2, 3)) * p(1, 3, 2)?.asin()
        + (r(2, 3) + r(1, 2) * r(1, 3)) * p(2, 3, 1)?.asin();
    Ok(8.0 / PI.powf(1.5) * bracket)
}

fn abs_product_4(s: &StepCorrelationStructure, gamma: f64) -> Result<f64> {
    let r = |i, j| s.rho(i, j);
    let p = |i, j, k, l| s.partial_2_value(i, j, k, l);
    let c = |i, j| (1.0 - r(i, j) * r(i, j)).sqrt();

    let bracket = gram_determinant(s).sqrt()
        + c(1, 2) * (r(3, 4) + r(1, 3) * r(1, 4) + r(2, 3) * r(2, 4)) * p(3, 4, 1, 2)?.asin()
        + c(1, 3) * (r(2, 4) + r(1, 2) * r(1, 4) + r(2, 3) * r(3, 4)) * p(2, 4, 1, 3)?.asin()
        + c(1, 4) * (r(2, 3) + r(1, 2) * r(1, 3) + r(2, 4) * r(3, 4)) * p(2, 3, 1, 4)?.asin()
        + c(2, 3) * (r(1, 4) + r(1, 2) * r(2, 4) + r(1, 3) * r(3, 4)) * p(1, 4, 2, 3)?.asin()
        + c(2, 4) * (r(1, 3) + r(1, 2) * r(2, 3) + r(1, 4) * r(3, 4)) * p(1, 3, 2, 4)?.asin()
        + c(3, 4) * (r(1, 2) + r(1, 3) * r(2, 3) + r(1, 4) * r(2, 4)) * p(1, 2, 3, 4)?.asin();
    let pairing = r(1, 2) * r(3, 4) + r(1, 3) * r(2, 4) + r(1, 4) * r(2, 3);
    Ok(16.0 / (PI * PI) * bracket + 4.0 * pairing * gamma)
}
