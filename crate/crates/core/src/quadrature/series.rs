//! Joint density of the lengths of three consecutive correlated planar
//! steps, as a series of products of modified Bessel functions:
//!
//! ```text
//! f(a,b,c) = 8Δ abc exp(-φ11 a² - φ22 b² - φ33 c²)
//!            Σ_k ε_k (-1)^k I_k(2ab|φ12|) I_k(2bc|φ23|) I_k(2ac|φ13|)
//! ```
//!
//! with `ε_0 = 1`, `ε_k = 2` for `k >= 1`. The Bessel factors are used in
//! scaled form and their `e^x` factors are folded into the Gaussian
//! exponent, so nothing overflows for large lengths.

use serde::{Deserialize, Serialize};

use super::covariance::{ComplexCovariance, RHO_SINGULAR};
use crate::error::{Error, Result};
use crate::special::bessel_i_scaled_into;

/// Correlation parameter and truncation controls for the Bessel series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesParams {
    /// Correlation between neighbouring steps, `-1/sqrt(2) < rho < 0`.
    pub rho: f64,
    /// Highest Bessel order summed.
    pub k_max: usize,
    /// Terms below `term_tol * |partial sum|` count as converged.
    pub term_tol: f64,
}

pub const DEFAULT_K_MAX: usize = 80;
pub const DEFAULT_TERM_TOL: f64 = 1e-14;

impl SeriesParams {
    pub fn new(rho: f64) -> Result<Self> {
        let p = SeriesParams {
            rho,
            k_max: DEFAULT_K_MAX,
            term_tol: DEFAULT_TERM_TOL,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_rho(self, rho: f64) -> Result<Self> {
        let p = SeriesParams { rho, ..self };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > -RHO_SINGULAR && self.rho < 0.0) {
            return Err(Error::domain(format!(
                "series parameter rho must lie in (-1/sqrt(2), 0), got {}",
                self.rho
            )));
        }
        if self.term_tol.is_nan() || self.term_tol <= 0.0 {
            return Err(Error::domain("term_tol must be positive"));
        }
        Ok(())
    }
}

// Consecutive terms that must fall under the threshold, and consecutive
// growing terms that signal divergence.
const SETTLED_RUN: usize = 3;
const GROWTH_RUN: usize = 5;

/// Precomputed coefficients of `f(a, b, c)` for one `rho`.
#[derive(Debug, Clone)]
pub struct ThreeStepDensity {
    params: SeriesParams,
    cov: ComplexCovariance,
    prefactor: f64,
    phi_min: f64,
}

impl ThreeStepDensity {
    pub fn new(params: SeriesParams) -> Result<Self> {
        params.validate()?;
        let cov = ComplexCovariance::new(params.rho)?;
        Ok(ThreeStepDensity {
            params,
            prefactor: 8.0 * cov.delta,
            phi_min: cov.phi_min_eigenvalue(),
            cov,
        })
    }

    pub fn params(&self) -> &SeriesParams {
        &self.params
    }

    pub fn covariance(&self) -> &ComplexCovariance {
        &self.cov
    }

    pub(crate) fn arg_ab(&self, a: f64, b: f64) -> f64 {
        2.0 * a * b * self.cov.phi[(0, 1)].abs()
    }

    pub(crate) fn arg_bc(&self, b: f64, c: f64) -> f64 {
        2.0 * b * c * self.cov.phi[(1, 2)].abs()
    }

    pub(crate) fn arg_ac(&self, a: f64, c: f64) -> f64 {
        2.0 * a * c * self.cov.phi[(0, 2)].abs()
    }

    /// Rigorous upper bound `8Δ abc exp(-λ_min(Φ) (a² + b² + c²))` on the
    /// density, from `z^H Φ z >= λ_min |z|²`.
    pub fn upper_bound(&self, a: f64, b: f64, c: f64) -> f64 {
        self.prefactor * a * b * c * (-self.phi_min * (a * a + b * b + c * c)).exp()
    }

    /// `sup_c c^power · upper_bound(a, b, c)`, attained at
    /// `c² = (1 + power) / (2 λ_min)`.
    pub(crate) fn slice_bound(&self, a: f64, b: f64, power: i32) -> f64 {
        let c = ((1 + power) as f64 / (2.0 * self.phi_min)).sqrt();
        c.powi(power) * self.upper_bound(a, b, c)
    }

    /// `f(a, b, c)`.
    pub fn density(&self, a: f64, b: f64, c: f64) -> Result<f64> {
        if a < 0.0 || b < 0.0 || c < 0.0 || a.is_nan() || b.is_nan() || c.is_nan() {
            return Err(Error::domain("step lengths must be non-negative"));
        }
        let len = self.params.k_max + 1;
        let mut ix = vec![0.0; len];
        let mut iy = vec![0.0; len];
        let mut iz = vec![0.0; len];
        bessel_i_scaled_into(self.arg_ab(a, b), &mut ix)?;
        bessel_i_scaled_into(self.arg_bc(b, c), &mut iy)?;
        bessel_i_scaled_into(self.arg_ac(a, c), &mut iz)?;
        self.density_with(a, b, c, &ix, &iy, &iz)
    }

    /// `f(a, b, c)` from precomputed scaled Bessel sequences of the three
    /// arguments (each of length `k_max + 1`).
    pub(crate) fn density_with(
        &self,
        a: f64,
        b: f64,
        c: f64,
        ix: &[f64],
        iy: &[f64],
        iz: &[f64],
    ) -> Result<f64> {
        if a == 0.0 || b == 0.0 || c == 0.0 {
            return Ok(0.0);
        }
        let phi = &self.cov.phi;
        let exponent = -phi[(0, 0)] * a * a - phi[(1, 1)] * b * b - phi[(2, 2)] * c * c
            + self.arg_ab(a, b)
            + self.arg_bc(b, c)
            + self.arg_ac(a, c);
        let sum = self.sum_series(ix, iy, iz)?;
        Ok(self.prefactor * a * b * c * exponent.exp() * sum)
    }

    /// `Σ_k ε_k (-1)^k Ĩ_k(X) Ĩ_k(Y) Ĩ_k(Z)` with the stopping rule: three
    /// consecutive terms below `term_tol * |S|` or below the round-off floor
    /// `ε_mach * Σ|t_k|` of the cancelling sum.
    fn sum_series(&self, ix: &[f64], iy: &[f64], iz: &[f64]) -> Result<f64> {
        let mut sum = 0.0;
        let mut abs_sum = 0.0;
        let mut settled = 0;
        let mut growing = 0;
        let mut prev = f64::INFINITY;
        for k in 0..=self.params.k_max {
            let eps = if k == 0 { 1.0 } else { 2.0 };
            let mag = eps * ix[k] * iy[k] * iz[k];
            let term = if k % 2 == 0 { mag } else { -mag };
            sum += term;
            abs_sum += mag;

            if mag == 0.0 {
                return Ok(sum);
            }
            let threshold = (self.params.term_tol * sum.abs()).max(f64::EPSILON * abs_sum);
            if mag <= threshold {
                settled += 1;
                if settled >= SETTLED_RUN {
                    return Ok(sum);
                }
            } else {
                settled = 0;
            }
            if mag > prev {
                growing += 1;
                if growing >= GROWTH_RUN {
                    return Err(Error::SeriesDivergence {
                        rho: self.params.rho,
                        k,
                    });
                }
            } else {
                growing = 0;
            }
            prev = mag;
        }
        Err(Error::SeriesDivergence {
            rho: self.params.rho,
            k: self.params.k_max,
        })
    }
}

/// Truncated-series joint density `f(a, b, c)` of three consecutive planar
/// step lengths at step correlation `p.rho`.
pub fn joint_density_3step(a: f64, b: f64, c: f64, p: &SeriesParams) -> Result<f64> {
    ThreeStepDensity::new(*p)?.density(a, b, c)
}
