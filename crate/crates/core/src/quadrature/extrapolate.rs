//! Polynomial extrapolation of `F(rho)` to the tour configuration
//! `rho = -1/2`.
//!
//! `F` is sampled on a grid approaching `-1/2` from the right, least-squares
//! polynomials in `s = rho + 1/2` of increasing degree are fitted, and the
//! highest-degree intercept is reported with the change from the next lower
//! degree as its uncertainty.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::series::SeriesParams;
use super::{mu23_at_rho, QuadReport, QuadratureConfig};
use crate::error::{Error, Result};

/// Limit point of the extrapolation.
pub const RHO_LIMIT: f64 = -0.5;

pub const DEFAULT_RHO_GRID: [f64; 5] = [-0.40, -0.43, -0.45, -0.47, -0.48];

/// Relative spacing below which two grid points count as coincident.
const MIN_RELATIVE_GAP: f64 = 1e-6;
/// Largest accepted condition number of the scaled Vandermonde matrix.
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationScheme {
    /// Highest polynomial degree fitted (capped at `points - 1`).
    pub max_degree: usize,
}

impl Default for ExtrapolationScheme {
    fn default() -> Self {
        ExtrapolationScheme { max_degree: 3 }
    }
}

/// Intercepts at `s = 0` for each fitted degree and the reported value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationFit {
    /// `(degree, intercept)` for degrees `0..=top`.
    pub intercepts: Vec<(usize, f64)>,
    pub value: f64,
    /// `None` when only one point was supplied.
    pub uncertainty: Option<f64>,
    pub degenerate: bool,
}

/// Fits `values` against `s` and extrapolates to `s = 0`.
pub fn extrapolate_to_limit(s: &[f64], values: &[f64], scheme: ExtrapolationScheme) -> Result<ExtrapolationFit> {
    if s.len() != values.len() || s.is_empty() {
        return Err(Error::InvalidArgument(
            "extrapolation needs matching, non-empty abscissae and values".into(),
        ));
    }
    if s.len() == 1 {
        return Ok(ExtrapolationFit {
            intercepts: vec![(0, values[0])],
            value: values[0],
            uncertainty: None,
            degenerate: true,
        });
    }

    let span = s.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if span == 0.0 {
        return Err(Error::IllConditionedFit("all grid points sit at the limit".into()));
    }
    let mut sorted = s.to_vec();
    sorted.sort_by(f64::total_cmp);
    let range = sorted[sorted.len() - 1] - sorted[0];
    if sorted.windows(2).any(|w| w[1] - w[0] <= MIN_RELATIVE_GAP * span) || range == 0.0 {
        return Err(Error::IllConditionedFit(format!(
            "grid points closer than {MIN_RELATIVE_GAP:e} relative to the grid span"
        )));
    }

    let top = scheme.max_degree.min(s.len() - 1);
    let mut intercepts = Vec::with_capacity(top + 1);
    for degree in 0..=top {
        intercepts.push((degree, fit_intercept(s, values, degree, span)?));
    }
    let value = intercepts[top].1;
    let uncertainty = if top >= 1 {
        Some((value - intercepts[top - 1].1).abs())
    } else {
        None
    };
    Ok(ExtrapolationFit {
        intercepts,
        value,
        uncertainty,
        degenerate: top < 1,
    })
}

/// Least-squares polynomial of `degree` in `s / span`; returns its value at 0.
fn fit_intercept(s: &[f64], values: &[f64], degree: usize, span: f64) -> Result<f64> {
    let m = s.len();
    let vander = DMatrix::from_fn(m, degree + 1, |i, j| (s[i] / span).powi(j as i32));
    let svd = vander.svd(true, true);
    let sv = &svd.singular_values;
    let (max, min) = sv.iter().fold((0.0f64, f64::INFINITY), |(hi, lo), &v| (hi.max(v), lo.min(v)));
    if min == 0.0 || max / min > MAX_CONDITION {
        return Err(Error::IllConditionedFit(format!(
            "degree {degree} Vandermonde condition number {:e}",
            max / min
        )));
    }
    let rhs = DVector::from_column_slice(values);
    let coef = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::IllConditionedFit(e.to_string()))?;
    Ok(coef[0])
}

/// `F(rho)` on the grid plus the extrapolated limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mu23Extrapolation {
    pub points: Vec<QuadReport>,
    pub scheme: ExtrapolationScheme,
    pub fit: ExtrapolationFit,
}

/// Evaluates `F` on `rho_grid` (strictly decreasing, all above `-1/2`) and
/// extrapolates to `rho = -1/2`.
pub fn mu23_extrapolated(
    rho_grid: &[f64],
    p_template: &SeriesParams,
    cfg: &QuadratureConfig,
    scheme: ExtrapolationScheme,
) -> Result<Mu23Extrapolation> {
    validate_grid(rho_grid)?;
    let mut points = Vec::with_capacity(rho_grid.len());
    for &rho in rho_grid {
        let p = p_template.with_rho(rho)?;
        points.push(mu23_at_rho(&p, cfg)?);
    }
    let s: Vec<f64> = rho_grid.iter().map(|r| r - RHO_LIMIT).collect();
    let values: Vec<f64> = points.iter().map(|p| p.value).collect();
    let fit = extrapolate_to_limit(&s, &values, scheme)?;
    Ok(Mu23Extrapolation { points, scheme, fit })
}

pub fn validate_grid(rho_grid: &[f64]) -> Result<()> {
    if rho_grid.is_empty() {
        return Err(Error::InvalidArgument("empty rho grid".into()));
    }
    if let Some(&r) = rho_grid.iter().find(|&&r| !(r > RHO_LIMIT && r < 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "grid point {r} outside (-1/2, 0)"
        )));
    }
    if rho_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "rho grid must be strictly decreasing toward -1/2".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cubic_exactly() {
        let s = [0.1, 0.07, 0.05, 0.03, 0.02];
        let f = |x: f64| 6.25 + 0.4 * x - 3.0 * x * x + 11.0 * x * x * x;
        let v: Vec<f64> = s.iter().map(|&x| f(x)).collect();
        let fit = extrapolate_to_limit(&s, &v, ExtrapolationScheme::default()).unwrap();
        assert!((fit.value - 6.25).abs() < 1e-10);
        assert_eq!(fit.intercepts.len(), 4);
        assert!(fit.uncertainty.unwrap() > 0.0);
        assert!(!fit.degenerate);
    }

    #[test]
    fn uncertainty_is_gap_between_top_two_degrees() {
        let s = [0.1, 0.07, 0.05, 0.03, 0.02];
        let v: Vec<f64> = s.iter().map(|&x: &f64| (x * 3.0).exp()).collect();
        let fit = extrapolate_to_limit(&s, &v, ExtrapolationScheme::default()).unwrap();
        let (d3, d2) = (fit.intercepts[3].1, fit.intercepts[2].1);
        assert_eq!(fit.uncertainty.unwrap(), (d3 - d2).abs());
        assert!((fit.value - 1.0).abs() < 1e-4);
    }

    #[test]
    fn single_point_is_degenerate() {
        let fit = extrapolate_to_limit(&[0.02], &[6.2], ExtrapolationScheme::default()).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.value, 6.2);
        assert!(fit.uncertainty.is_none());
    }

    #[test]
    fn two_points_fit_a_line() {
        let fit = extrapolate_to_limit(&[0.1, 0.05], &[2.0, 1.5], ExtrapolationScheme::default()).unwrap();
        assert!((fit.value - 1.0).abs() < 1e-12);
        assert!((fit.uncertainty.unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn clustered_points_are_rejected() {
        let r = extrapolate_to_limit(
            &[0.1, 0.1 + 1e-9, 0.05],
            &[1.0, 1.0, 1.0],
            ExtrapolationScheme::default(),
        );
        assert!(matches!(r, Err(Error::IllConditionedFit(_))));
    }

    #[test]
    fn grid_validation() {
        assert!(validate_grid(&[-0.4, -0.45]).is_ok());
        assert!(validate_grid(&[-0.45, -0.4]).is_err());
        assert!(validate_grid(&[-0.4, -0.5]).is_err());
        assert!(validate_grid(&[0.1]).is_err());
        assert!(validate_grid(&[]).is_err());
    }
}
