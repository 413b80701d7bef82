//! Deterministic evaluation of the integral-defined tour products.
//!
//! * `mu(2,2)` from the two-step amplitude density,
//! * `nu(2,3)` and `nu(3,3)` from triple integrals over the side lengths of
//!   the random triangle,
//! * `F(rho) = E(|z1||z2||z3|)` for three planar steps with neighbour
//!   correlation `rho`, by integrating the Bessel-series density, and its
//!   extrapolation to the tour configuration `rho = -1/2`, which is `mu(2,3)`.
//!
//! Iterated integrals are evaluated with nested adaptive Gauss-Kronrod rules.
//! The outermost interval is cut into fixed panels that may run in parallel;
//! their results are summed in panel order.

pub mod covariance;
pub mod extrapolate;
pub mod gk;
pub mod series;

use std::cell::Cell;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};
use crate::special::bessel_i_scaled_into;

pub use covariance::{ComplexCovariance, TwoStepCovariance};
pub use extrapolate::{
    extrapolate_to_limit, mu23_extrapolated, ExtrapolationFit, ExtrapolationScheme, Mu23Extrapolation,
    DEFAULT_RHO_GRID,
};
pub use gk::{integrate, integrate_nested, QuadOutcome, Tolerance};
pub use series::{joint_density_3step, SeriesParams, ThreeStepDensity, DEFAULT_K_MAX, DEFAULT_TERM_TOL};

/// Controls for every deterministic integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Target relative tolerance of the final result.
    pub tol: f64,
    /// Upper limit replacing infinity in each radial direction.
    pub truncation_radius: f64,
    /// Maximum number of panels per one-dimensional adaptive integration.
    pub max_subdivisions: usize,
    #[serde(skip)]
    pub execution: Execution,
}

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_TRUNCATION_RADIUS: f64 = 14.0;
pub const DEFAULT_MAX_SUBDIVISIONS: usize = 200;
/// Fixed number of outer panels; independent of the worker count.
const OUTER_PANELS: usize = 8;

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            tol: DEFAULT_TOL,
            truncation_radius: DEFAULT_TRUNCATION_RADIUS,
            max_subdivisions: DEFAULT_MAX_SUBDIVISIONS,
            execution: Execution::Auto,
        }
    }
}

impl QuadratureConfig {
    pub fn with_tol(self, tol: f64) -> Self {
        QuadratureConfig { tol, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidArgument(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.truncation_radius.is_nan() || self.truncation_radius <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "truncation radius must be > 0, got {}",
                self.truncation_radius
            )));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::InvalidArgument("max_subdivisions must be >= 1".into()));
        }
        Ok(())
    }
}

/// Outcome of one deterministic integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadReport {
    pub quantity: String,
    pub value: f64,
    /// Estimated absolute error, including the propagated error of inner
    /// integrals.
    pub error: f64,
    pub evals: usize,
    pub config: QuadratureConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<SeriesParams>,
}

/// Per-level tolerances for an iterated integral whose result is roughly
/// `scale`. Inner levels are ten times tighter; absolute floors keep far-tail
/// slices from chasing relative accuracy on negligible values.
#[derive(Debug, Clone, Copy)]
struct NestedTol {
    outer: Tolerance,
    middle: Tolerance,
    inner: Tolerance,
}

impl NestedTol {
    fn new(cfg: &QuadratureConfig, scale: f64) -> Self {
        let r = cfg.truncation_radius;
        let t = cfg.tol;
        NestedTol {
            outer: Tolerance {
                abs: 0.1 * t * scale / OUTER_PANELS as f64,
                rel: t,
            },
            middle: Tolerance {
                abs: 0.1 * t * scale / r,
                rel: 0.1 * t,
            },
            inner: Tolerance {
                abs: 0.1 * t * scale / (r * r),
                rel: 0.1 * t,
            },
        }
    }
}

/// Integrates `panel(lo, hi, evals)` over fixed outer panels of
/// `[0, truncation_radius]` and sums them in order.
fn over_outer_panels<P>(cfg: &QuadratureConfig, panel: P) -> Result<(f64, f64, usize)>
where
    P: Fn(f64, f64, &Cell<usize>) -> Result<QuadOutcome> + Sync + Send,
{
    cfg.validate()?;
    let r = cfg.truncation_radius;
    let width = r / OUTER_PANELS as f64;
    let parts = map_indexed(OUTER_PANELS, cfg.execution, |i| {
        let evals = Cell::new(0);
        let lo = i as f64 * width;
        let hi = if i + 1 == OUTER_PANELS { r } else { lo + width };
        panel(lo, hi, &evals).map(|o| (o, evals.get()))
    });
    let mut value = 0.0;
    let mut error = 0.0;
    let mut evals = 0;
    for part in parts {
        let (o, e) = part?;
        value += o.value;
        error += o.error;
        evals += e + o.evals;
    }
    Ok((value, error, evals))
}

fn bump(counter: &Cell<usize>, by: usize) {
    counter.set(counter.get() + by);
}

/// `mu(2,2) = ∫∫ ab · 4Δ ab exp(-φ11 a² - φ22 b²) I_0(2ab|φ12|) db da`.
pub fn mu22_quadrature(cfg: &QuadratureConfig) -> Result<QuadReport> {
    let cov = TwoStepCovariance::new();
    let tol = NestedTol::new(cfg, 3.0);
    let r = cfg.truncation_radius;
    let (value, error, evals) = over_outer_panels(cfg, |lo, hi, evals| {
        integrate_nested(
            |a| {
                let inner = integrate(|b| Ok(a * b * cov.density(a, b)), 0.0, r, tol.middle, cfg.max_subdivisions)?;
                bump(evals, inner.evals);
                Ok((inner.value, inner.error))
            },
            lo,
            hi,
            tol.outer,
            cfg.max_subdivisions,
        )
    })?;
    Ok(QuadReport {
        quantity: "mu(2,2)".into(),
        value,
        error,
        evals,
        config: *cfg,
        series: None,
    })
}

/// Integrand of the ν(2,3) triple integral after `z = x - y cos t`, which
/// absorbs the inverse square root of `(-x+y+z)(x+y-z) = y² sin² t`.
fn nu23_integrand(x: f64, y: f64, t: f64) -> f64 {
    let z = x - y * t.cos();
    let damp = (-(x * x + y * y + z * z) / 6.0).exp();
    x * x * y * y * z * z * damp / ((x + y + z) * (x - y + z)).sqrt()
}

/// `nu(2,3) = 4/(3π) ∫_0^∞ ∫_0^x ∫_{x-y}^{x+y} x²y²z² exp(-(x²+y²+z²)/6)
/// / sqrt((x+y+z)(-x+y+z)(x-y+z)(x+y-z)) dz dy dx`.
///
/// The innermost `z` integral runs over `t ∈ (0, π)` with `z = x - y cos t`,
/// which leaves a bounded integrand.
pub fn nu23_quadrature(cfg: &QuadratureConfig) -> Result<QuadReport> {
    let pref = 4.0 / (3.0 * PI);
    let tol = NestedTol::new(cfg, 6.0 / pref);
    let (value, error, evals) = over_outer_panels(cfg, |lo, hi, evals| {
        integrate_nested(
            |x| {
                let mid = integrate_nested(
                    |y| {
                        let inner = integrate(|t| Ok(nu23_integrand(x, y, t)), 0.0, PI, tol.inner, cfg.max_subdivisions)?;
                        bump(evals, inner.evals);
                        Ok((inner.value, inner.error))
                    },
                    0.0,
                    x,
                    tol.middle,
                    cfg.max_subdivisions,
                )?;
                bump(evals, mid.evals);
                Ok((mid.value, mid.error))
            },
            lo,
            hi,
            tol.outer,
            cfg.max_subdivisions,
        )
    })?;
    Ok(QuadReport {
        quantity: "nu(2,3)".into(),
        value: pref * value,
        error: pref * error,
        evals,
        config: *cfg,
        series: None,
    })
}

/// `nu(3,3) = 2√3/(9π) ∫_0^∞ ∫_0^x ∫_{x-y}^{x+y} x²y²z² exp(-(x²+y²+z²)/6) dz dy dx`.
pub fn nu33_quadrature(cfg: &QuadratureConfig) -> Result<QuadReport> {
    let pref = 2.0 * 3f64.sqrt() / (9.0 * PI);
    let tol = NestedTol::new(cfg, 12.0 / pref);
    let (value, error, evals) = over_outer_panels(cfg, |lo, hi, evals| {
        integrate_nested(
            |x| {
                let mid = integrate_nested(
                    |y| {
                        let inner = integrate(
                            |z| Ok(x * x * y * y * z * z * (-(x * x + y * y + z * z) / 6.0).exp()),
                            x - y,
                            x + y,
                            tol.inner,
                            cfg.max_subdivisions,
                        )?;
                        bump(evals, inner.evals);
                        Ok((inner.value, inner.error))
                    },
                    0.0,
                    x,
                    tol.middle,
                    cfg.max_subdivisions,
                )?;
                bump(evals, mid.evals);
                Ok((mid.value, mid.error))
            },
            lo,
            hi,
            tol.outer,
            cfg.max_subdivisions,
        )
    })?;
    Ok(QuadReport {
        quantity: "nu(3,3)".into(),
        value: pref * value,
        error: pref * error,
        evals,
        config: *cfg,
        series: None,
    })
}

/// `F(rho) = ∫∫∫ abc f(a,b,c) dc db da`, the expected product of the three
/// step lengths when neighbouring complex steps have covariance `Ψ(rho)`.
///
/// Points where the rigorous bound on `abc f` is negligible are skipped
/// without summing the series.
pub fn mu23_at_rho(p: &SeriesParams, cfg: &QuadratureConfig) -> Result<QuadReport> {
    let (value, error, evals) = three_step_moment(p, cfg, 1, PI.powf(1.5))?;
    Ok(QuadReport {
        quantity: format!("F({})", p.rho),
        value,
        error,
        evals,
        config: *cfg,
        series: Some(*p),
    })
}

/// `∫∫∫ f(a,b,c) dc db da`, which is 1 up to truncation and series error.
pub fn three_step_mass(p: &SeriesParams, cfg: &QuadratureConfig) -> Result<QuadReport> {
    let (value, error, evals) = three_step_moment(p, cfg, 0, 1.0)?;
    Ok(QuadReport {
        quantity: format!("mass({})", p.rho),
        value,
        error,
        evals,
        config: *cfg,
        series: Some(*p),
    })
}

/// `∫∫∫ (abc)^power f(a,b,c)` over the truncated cube.
fn three_step_moment(p: &SeriesParams, cfg: &QuadratureConfig, power: i32, scale: f64) -> Result<(f64, f64, usize)> {
    let density = ThreeStepDensity::new(*p)?;
    let tol = NestedTol::new(cfg, scale);
    let r = cfg.truncation_radius;
    let negligible = 1e-3 * tol.inner.abs / r;
    let len = p.k_max + 1;

    over_outer_panels(cfg, |lo, hi, evals| {
        let mut ix = vec![0.0; len];
        let mut iy = vec![0.0; len];
        let mut iz = vec![0.0; len];
        integrate_nested(
            |a| {
                let mid = integrate_nested(
                    |b| {
                        if (a * b).powi(power) * density.slice_bound(a, b, power) * r < negligible {
                            return Ok((0.0, 0.0));
                        }
                        bessel_i_scaled_into(density.arg_ab(a, b), &mut ix)?;
                        let inner = integrate(
                            |c| {
                                let weight = (a * b * c).powi(power);
                                if weight * density.upper_bound(a, b, c) < negligible {
                                    return Ok(0.0);
                                }
                                bessel_i_scaled_into(density.arg_bc(b, c), &mut iy)?;
                                bessel_i_scaled_into(density.arg_ac(a, c), &mut iz)?;
                                Ok(weight * density.density_with(a, b, c, &ix, &iy, &iz)?)
                            },
                            0.0,
                            r,
                            tol.inner,
                            cfg.max_subdivisions,
                        )?;
                        bump(evals, inner.evals);
                        Ok((inner.value, inner.error))
                    },
                    0.0,
                    r,
                    tol.middle,
                    cfg.max_subdivisions,
                )?;
                bump(evals, mid.evals);
                Ok((mid.value, mid.error))
            },
            lo,
            hi,
            tol.outer,
            cfg.max_subdivisions,
        )
    })
}
