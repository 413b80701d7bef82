//! Cross-engine runs and their serializable reports.
//!
//! A [`RunReport`] lists every engine that produced a value for one quantity,
//! the pairwise agreement checks between them and the full configuration
//! used. Reports contain nothing that depends on the worker count, so a rerun
//! with the same configuration serializes to identical bytes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalogue::{self, exact_value, Expr};
use crate::correlation::mu1_open;
use crate::error::{Error, Result};
use crate::monte_carlo::{
    estimate_correlated_product_with, estimate_tour_with, Estimate, BLOCK_SIZE, DEFAULT_SAMPLES,
    DEFAULT_SAMPLES_AT_LARGE, KURTOSIS_WARNING, LOG_SPACE_THRESHOLD,
};
use crate::quadrature::extrapolate::{extrapolate_to_limit, validate_grid, RHO_LIMIT};
use crate::quadrature::{
    mu22_quadrature, mu23_at_rho, nu23_quadrature, nu33_quadrature, ExtrapolationFit, ExtrapolationScheme,
    QuadReport, QuadratureConfig, SeriesParams, DEFAULT_K_MAX, DEFAULT_RHO_GRID, DEFAULT_TERM_TOL,
};
use crate::tour::{Topology, TourSpec};

/// Relative rounding error attributed to evaluating a non-integer closed form.
pub const EXACT_REL_ERROR: f64 = 1e-12;
/// Agreement threshold in combined standard errors.
pub const AGREEMENT_SIGMAS: f64 = 3.0;
pub const DEFAULT_SEED: u64 = 20_240_601;
/// Largest grid point accepted by [`mu23_report`].
pub const RHO_GRID_MAX: f64 = -0.3;

/// Targets no closed form or quadrature covers; `estimate` defaults to
/// [`DEFAULT_SAMPLES_AT_LARGE`] for them.
pub fn at_large_targets() -> [TourSpec; 3] {
    [
        TourSpec { d: 2, n: 4, topology: Topology::Open },
        TourSpec { d: 2, n: 4, topology: Topology::Closed },
        TourSpec { d: 3, n: 4, topology: Topology::Closed },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    ClosedForm,
    CorrelationEngine,
    Quadrature,
    SeriesExtrapolation,
    SeriesDirect,
    MonteCarlo,
    CorrelatedMonteCarlo,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::ClosedForm => "closed_form",
            Engine::CorrelationEngine => "correlation_engine",
            Engine::Quadrature => "quadrature",
            Engine::SeriesExtrapolation => "series_extrapolation",
            Engine::SeriesDirect => "series_direct",
            Engine::MonteCarlo => "monte_carlo",
            Engine::CorrelatedMonteCarlo => "correlated_monte_carlo",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Verify,
    Estimate,
    Mu23,
}

/// One engine's value for the quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineResult {
    pub engine: Engine,
    pub method: String,
    pub value: f64,
    /// Standard error or error estimate; `None` when unbounded.
    pub error: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evals: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kurtosis: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl EngineResult {
    fn from_estimate(engine: Engine, e: &Estimate) -> Self {
        let method = match engine {
            Engine::CorrelatedMonteCarlo => "correlated complex steps",
            _ => "direct tour simulation",
        };
        EngineResult {
            engine,
            method: method.into(),
            value: e.value,
            error: Some(e.stderr),
            samples: Some(e.samples),
            evals: None,
            kurtosis: Some(e.kurtosis),
            warning: e.warning.clone(),
        }
    }

    fn from_quad(engine: Engine, method: &str, q: &QuadReport) -> Self {
        EngineResult {
            engine,
            method: method.into(),
            value: q.value,
            error: Some(q.error),
            samples: None,
            evals: Some(q.evals),
            kurtosis: None,
            warning: None,
        }
    }

    fn exact(engine: Engine, method: String, value: f64, error: f64) -> Self {
        EngineResult {
            engine,
            method,
            value,
            error: Some(error),
            samples: None,
            evals: None,
            kurtosis: None,
            warning: None,
        }
    }
}

/// `|v1 - v2| < 3 sqrt(e1² + e2²)` for one engine pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub first: Engine,
    pub second: Engine,
    pub difference: f64,
    /// `3 * combined error`; `None` when either error is unbounded.
    pub threshold: Option<f64>,
    pub agree: bool,
}

impl Agreement {
    pub fn between(a: &EngineResult, b: &EngineResult) -> Self {
        let difference = (a.value - b.value).abs();
        let threshold = match (a.error, b.error) {
            (Some(x), Some(y)) => Some(AGREEMENT_SIGMAS * x.hypot(y)),
            _ => None,
        };
        Agreement {
            first: a.engine,
            second: b.engine,
            difference,
            threshold,
            agree: threshold.is_none_or(|t| difference < t),
        }
    }
}

fn all_pairs(engines: &[EngineResult]) -> Vec<Agreement> {
    let mut out = Vec::new();
    for (i, a) in engines.iter().enumerate() {
        for b in &engines[i + 1..] {
            out.push(Agreement::between(a, b));
        }
    }
    out
}

/// `F(rho)` at one grid point from the series and from correlated sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub rho: f64,
    pub series_value: f64,
    pub series_error: f64,
    pub series_evals: usize,
    pub mc_value: f64,
    pub mc_stderr: f64,
    pub agree: bool,
}

/// Every knob that influences a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub samples: usize,
    pub seed: u64,
    pub quadrature: QuadratureConfig,
    pub k_max: usize,
    pub term_tol: f64,
    pub rho_grid: Vec<f64>,
    pub extrapolation: ExtrapolationScheme,
    pub rng: String,
    pub normal_sampler: String,
    pub block_size: usize,
    pub log_space_threshold: usize,
    pub kurtosis_warning: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            quadrature: QuadratureConfig::default(),
            k_max: DEFAULT_K_MAX,
            term_tol: DEFAULT_TERM_TOL,
            rho_grid: DEFAULT_RHO_GRID.to_vec(),
            extrapolation: ExtrapolationScheme::default(),
            rng: "ChaCha8, seed_from_u64(seed), stream = block index".into(),
            normal_sampler: "ziggurat (rand_distr 0.5 StandardNormal)".into(),
            block_size: BLOCK_SIZE,
            log_space_threshold: LOG_SPACE_THRESHOLD,
            kurtosis_warning: KURTOSIS_WARNING,
        }
    }
}

impl RunConfig {
    pub fn series_params(&self, rho: f64) -> Result<SeriesParams> {
        let p = SeriesParams {
            rho,
            k_max: self.k_max,
            term_tol: self.term_tol,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: Command,
    pub quantity: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<TourSpec>,
    pub engines: Vec<EngineResult>,
    pub agreements: Vec<Agreement>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extrapolation: Option<ExtrapolationFit>,
    pub config: RunConfig,
    /// Seconds since the Unix epoch; only set on request so reports stay
    /// reproducible by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl RunReport {
    /// `true` when every engine pair and every sweep point agrees.
    pub fn all_agree(&self) -> bool {
        self.agreements.iter().all(|a| a.agree) && self.sweep.iter().all(|r| r.agree)
    }

    /// The value the report stands behind: the first engine listed.
    pub fn best(&self) -> Option<&EngineResult> {
        self.engines.first()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// The sweep when there is one, otherwise one row per engine.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.sweep.is_empty() {
            w.write_record(["quantity", "engine", "value", "error", "samples"])?;
            for e in &self.engines {
                w.write_record([
                    self.quantity.clone(),
                    e.engine.to_string(),
                    e.value.to_string(),
                    e.error.map(|x| x.to_string()).unwrap_or_default(),
                    e.samples.map(|x| x.to_string()).unwrap_or_default(),
                ])?;
            }
        } else {
            for row in &self.sweep {
                w.serialize(row)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
    }
}

fn fmt_error(e: Option<f64>) -> String {
    e.map_or_else(|| "unbounded".into(), |x| format!("{x:.3e}"))
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cmd = match self.command {
            Command::Verify => "verify",
            Command::Estimate => "estimate",
            Command::Mu23 => "mu23",
        };
        writeln!(f, "{} [{cmd}]", self.quantity)?;
        for e in &self.engines {
            write!(f, "  {:<24}{:>20.10}  +/- {:<10}", e.engine.name(), e.value, fmt_error(e.error))?;
            if let Some(n) = e.samples {
                write!(f, "  n={n}")?;
            }
            writeln!(f, "  {}", e.method)?;
            if let Some(w) = &e.warning {
                writeln!(f, "    warning: {w}")?;
            }
        }
        if !self.sweep.is_empty() {
            writeln!(f, "  {:>8}  {:>16}  {:>10}  {:>16}  {:>10}", "rho", "series", "error", "mc", "stderr")?;
            for r in &self.sweep {
                writeln!(
                    f,
                    "  {:>8}  {:>16.10}  {:>10.2e}  {:>16.10}  {:>10.2e}  {}",
                    r.rho,
                    r.series_value,
                    r.series_error,
                    r.mc_value,
                    r.mc_stderr,
                    if r.agree { "ok" } else { "DISAGREE" }
                )?;
            }
        }
        if let Some(fit) = &self.extrapolation {
            let parts: Vec<String> = fit.intercepts.iter().map(|(d, v)| format!("deg{d}={v:.8}")).collect();
            writeln!(f, "  extrapolation: {}", parts.join(" "))?;
        }
        for a in &self.agreements {
            writeln!(
                f,
                "  {} vs {}: |diff| = {:.3e}, 3 sigma = {}  {}",
                a.first,
                a.second,
                a.difference,
                fmt_error(a.threshold),
                if a.agree { "ok" } else { "DISAGREE" }
            )?;
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        let c = &self.config;
        writeln!(
            f,
            "  config: samples={} seed={} tol={:e} radius={} max_subdivisions={} k_max={} term_tol={:e} rho_grid={:?} max_degree={}",
            c.samples,
            c.seed,
            c.quadrature.tol,
            c.quadrature.truncation_radius,
            c.quadrature.max_subdivisions,
            c.k_max,
            c.term_tol,
            c.rho_grid,
            c.extrapolation.max_degree
        )?;
        if let Some(t) = self.timestamp {
            writeln!(f, "  timestamp: {t}")?;
        }
        Ok(())
    }
}

fn is_integer_arithmetic(e: &Expr) -> bool {
    match e {
        Expr::Int(_) => true,
        Expr::Neg(x) => is_integer_arithmetic(x),
        Expr::Add(v) | Expr::Mul(v) => v.iter().all(is_integer_arithmetic),
        _ => false,
    }
}

fn closed_form_result(spec: &TourSpec) -> Option<EngineResult> {
    exact_value(spec).map(|e| {
        let err = if is_integer_arithmetic(&e.expression) {
            0.0
        } else {
            EXACT_REL_ERROR * e.value.abs()
        };
        EngineResult::exact(Engine::ClosedForm, e.expression.to_string(), e.value, err)
    })
}

fn correlation_result(spec: &TourSpec) -> Result<Option<EngineResult>> {
    if spec.d != 1 || spec.topology != Topology::Open || spec.n > 4 {
        return Ok(None);
    }
    let v = mu1_open(spec.n).map_err(|e| e.in_engine(Engine::CorrelationEngine.name()))?;
    Ok(Some(EngineResult::exact(
        Engine::CorrelationEngine,
        "arcsine and partial-correlation formulas".into(),
        v,
        EXACT_REL_ERROR * v.abs(),
    )))
}

fn quadrature_result(spec: &TourSpec, cfg: &RunConfig) -> Result<Option<EngineResult>> {
    let q = &cfg.quadrature;
    let wrap = |e: Error| e.in_engine(Engine::Quadrature.name());
    let r = match (spec.d, spec.n, spec.topology) {
        (2, 2, Topology::Open) => {
            EngineResult::from_quad(Engine::Quadrature, "two-step Bessel density", &mu22_quadrature(q).map_err(wrap)?)
        }
        (2, 3, Topology::Closed) => {
            EngineResult::from_quad(Engine::Quadrature, "triangle side-length integral", &nu23_quadrature(q).map_err(wrap)?)
        }
        (3, 3, Topology::Closed) => {
            EngineResult::from_quad(Engine::Quadrature, "triangle side-length integral", &nu33_quadrature(q).map_err(wrap)?)
        }
        _ => return Ok(None),
    };
    Ok(Some(r))
}

fn is_mu23(spec: &TourSpec) -> bool {
    *spec == TourSpec { d: 2, n: 3, topology: Topology::Open }
}

struct Mu23Parts {
    engines: Vec<EngineResult>,
    sweep: Vec<SweepRow>,
    fit: ExtrapolationFit,
    notes: Vec<String>,
}

/// Series on the grid, correlated sampling on the grid, the extrapolated
/// limit and the direct evaluations at `rho = -1/2`.
fn mu23_parts(cfg: &RunConfig, with_sweep_mc: bool) -> Result<Mu23Parts> {
    validate_grid(&cfg.rho_grid)?;
    if let Some(&r) = cfg.rho_grid.iter().find(|&&r| r > RHO_GRID_MAX) {
        return Err(Error::InvalidArgument(format!("grid point {r} above {RHO_GRID_MAX}")));
    }
    let q = &cfg.quadrature;
    let series_err = |e: Error| e.in_engine(Engine::SeriesExtrapolation.name());
    let mc_err = |e: Error| e.in_engine(Engine::CorrelatedMonteCarlo.name());
    let mut notes = Vec::new();

    let mut sweep = Vec::with_capacity(cfg.rho_grid.len());
    let mut points = Vec::with_capacity(cfg.rho_grid.len());
    for &rho in &cfg.rho_grid {
        let p = cfg.series_params(rho).map_err(series_err)?;
        let s = mu23_at_rho(&p, q).map_err(series_err)?;
        if with_sweep_mc {
            let m = estimate_correlated_product_with(rho, cfg.samples, cfg.seed, q.execution).map_err(mc_err)?;
            sweep.push(SweepRow {
                rho,
                series_value: s.value,
                series_error: s.error,
                series_evals: s.evals,
                mc_value: m.value,
                mc_stderr: m.stderr,
                agree: (s.value - m.value).abs() < AGREEMENT_SIGMAS * s.error.hypot(m.stderr),
            });
        }
        points.push(s);
    }
    let s: Vec<f64> = cfg.rho_grid.iter().map(|r| r - RHO_LIMIT).collect();
    let values: Vec<f64> = points.iter().map(|p| p.value).collect();
    let fit = extrapolate_to_limit(&s, &values, cfg.extrapolation).map_err(series_err)?;
    if fit.degenerate {
        notes.push(format!(
            "degenerate fit: {} grid point(s), the extrapolation uncertainty is unbounded",
            cfg.rho_grid.len()
        ));
    }

    let mut engines = vec![EngineResult {
        engine: Engine::SeriesExtrapolation,
        method: format!(
            "degree {} polynomial in rho + 1/2 over {} grid points",
            fit.intercepts.last().map_or(0, |x| x.0),
            cfg.rho_grid.len()
        ),
        value: fit.value,
        error: fit.uncertainty,
        samples: None,
        evals: Some(points.iter().map(|p| p.evals).sum()),
        kurtosis: None,
        warning: fit.degenerate.then(|| "degenerate fit".to_string()),
    }];

    match cfg.series_params(RHO_LIMIT).and_then(|p| mu23_at_rho(&p, q)) {
        Ok(d) => engines.push(EngineResult::from_quad(
            Engine::SeriesDirect,
            "Bessel series summed at rho = -1/2",
            &d,
        )),
        Err(e) => notes.push(format!("series at rho = -1/2 unavailable: {e}")),
    }

    let m = estimate_correlated_product_with(RHO_LIMIT, cfg.samples, cfg.seed, q.execution).map_err(mc_err)?;
    engines.push(EngineResult::from_estimate(Engine::CorrelatedMonteCarlo, &m));
    Ok(Mu23Parts {
        engines,
        sweep,
        fit,
        notes,
    })
}

fn tour_mc(spec: &TourSpec, cfg: &RunConfig) -> Result<EngineResult> {
    let e = estimate_tour_with(spec, cfg.samples, cfg.seed, cfg.quadrature.execution)
        .map_err(|e| e.in_engine(Engine::MonteCarlo.name()))?;
    Ok(EngineResult::from_estimate(Engine::MonteCarlo, &e))
}

/// Runs every engine that applies to `spec` and cross-checks them.
pub fn verify(spec: &TourSpec, cfg: &RunConfig) -> Result<RunReport> {
    let mut engines = Vec::new();
    let mut notes = Vec::new();
    let mut extrapolation = None;
    if let Some(e) = closed_form_result(spec) {
        engines.push(e);
    }
    if let Some(e) = correlation_result(spec)? {
        engines.push(e);
    }
    if let Some(e) = quadrature_result(spec, cfg)? {
        engines.push(e);
    }
    if is_mu23(spec) {
        let parts = mu23_parts(cfg, false)?;
        engines.extend(parts.engines);
        notes.extend(parts.notes);
        extrapolation = Some(parts.fit);
    }
    engines.push(tour_mc(spec, cfg)?);
    if engines.len() == 1 {
        notes.push("single engine: no exact, correlation or quadrature value applies".into());
    }
    Ok(RunReport {
        command: Command::Verify,
        quantity: spec.to_string(),
        spec: Some(*spec),
        agreements: all_pairs(&engines),
        engines,
        notes,
        sweep: Vec::new(),
        extrapolation,
        config: cfg.clone(),
        timestamp: None,
    })
}

/// Quantities covered by `verify all`: every published value plus the
/// integral-defined ones.
pub fn verify_targets() -> Vec<TourSpec> {
    let mut v: Vec<TourSpec> = catalogue::published().iter().map(|e| e.spec).collect();
    v.extend([
        TourSpec { d: 2, n: 3, topology: Topology::Open },
        TourSpec { d: 2, n: 3, topology: Topology::Closed },
        TourSpec { d: 3, n: 3, topology: Topology::Closed },
    ]);
    v
}

pub fn verify_all(cfg: &RunConfig) -> Result<Vec<RunReport>> {
    verify_targets().iter().map(|s| verify(s, cfg)).collect()
}

/// Sample count `estimate` uses when none is given.
pub fn default_estimate_samples(spec: &TourSpec) -> usize {
    if at_large_targets().contains(spec) {
        DEFAULT_SAMPLES_AT_LARGE
    } else {
        DEFAULT_SAMPLES
    }
}

/// Best available value: exact if catalogued, else quadrature (or the
/// series extrapolation for `mu(2,3)`), else Monte Carlo.
pub fn estimate(spec: &TourSpec, cfg: &RunConfig) -> Result<RunReport> {
    let mut notes = Vec::new();
    let mut extrapolation = None;
    let engine = if let Some(e) = exact_value(spec) {
        if e.provenance == catalogue::Provenance::SecondMoment {
            notes.push("nu(d,2) = E|r2 - r1|^2 = 2d".into());
        }
        closed_form_result(spec).expect("catalogued")
    } else if let Some(r) = quadrature_result(spec, cfg)? {
        r
    } else if is_mu23(spec) {
        let parts = mu23_parts(cfg, false)?;
        notes.extend(parts.notes);
        extrapolation = Some(parts.fit);
        parts.engines.into_iter().next().expect("extrapolation engine")
    } else {
        tour_mc(spec, cfg)?
    };
    Ok(RunReport {
        command: Command::Estimate,
        quantity: spec.to_string(),
        spec: Some(*spec),
        engines: vec![engine],
        agreements: Vec::new(),
        notes,
        sweep: Vec::new(),
        extrapolation,
        config: cfg.clone(),
        timestamp: None,
    })
}

/// `F(rho)` on the configured grid from the series and correlated sampling,
/// the extrapolated limit, and direct evaluations of `mu(2,3)`.
pub fn mu23_report(cfg: &RunConfig) -> Result<RunReport> {
    let spec = TourSpec { d: 2, n: 3, topology: Topology::Open };
    let parts = mu23_parts(cfg, true)?;
    let mut engines = parts.engines;
    engines.push(tour_mc(&spec, cfg)?);
    Ok(RunReport {
        command: Command::Mu23,
        quantity: spec.to_string(),
        spec: Some(spec),
        agreements: all_pairs(&engines),
        engines,
        notes: parts.notes,
        sweep: parts.sweep,
        extrapolation: Some(parts.fit),
        config: cfg.clone(),
        timestamp: None,
    })
}
