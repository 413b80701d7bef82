use std::fs;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gaussian_tours::catalogue::{table_rows, CatalogueRow};
use gaussian_tours::par::configure_threads;
use gaussian_tours::quadrature::{QuadratureConfig, DEFAULT_K_MAX, DEFAULT_TERM_TOL, DEFAULT_TOL};
use gaussian_tours::report::{default_estimate_samples, estimate, mu23_report, verify, verify_targets, DEFAULT_SEED};
use gaussian_tours::{RunConfig, RunReport, TourSpec};

/// Expected step-length products of tours over Gaussian random points.
#[derive(Parser, Debug)]
#[command(name = "gtours", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Debug)]
struct Global {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Monte Carlo samples [default: 1000000; 100000000 for estimate on mu(2,4), nu(2,4), nu(3,4)].
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED, global = true)]
    seed: u64,
    /// Relative tolerance of every deterministic integral.
    #[arg(long, default_value_t = DEFAULT_TOL, global = true)]
    tol: f64,
    /// Cutoff replacing infinity in the radial integrals.
    #[arg(long, default_value_t = 14.0, global = true)]
    radius: f64,
    #[arg(long, default_value_t = 200, global = true)]
    max_subdivisions: usize,
    /// Comma-separated rho values, strictly decreasing toward -1/2.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, global = true)]
    rho_grid: Option<Vec<f64>>,
    /// Highest Bessel order in the three-step series.
    #[arg(long, default_value_t = DEFAULT_K_MAX, global = true)]
    k_max: usize,
    #[arg(long, default_value_t = DEFAULT_TERM_TOL, global = true)]
    term_tol: f64,
    /// Highest polynomial degree of the extrapolation.
    #[arg(long, default_value_t = 3, global = true)]
    max_degree: usize,
    /// Write output to FILE instead of stdout.
    #[arg(long, value_name = "FILE", global = true)]
    out: Option<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "GTOURS_THREADS", global = true)]
    threads: Option<usize>,
    /// Embed the current Unix time in reports.
    #[arg(long, global = true)]
    timestamp: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Print every exactly known value.
    Table,
    /// Cross-check all engines on a quantity, or on every known one with `all`.
    Verify {
        /// `mu:D,N`, `nu(D,N)`, `D,N,open|closed` or `all`.
        target: String,
    },
    /// Best available value for a quantity.
    Estimate { spec: TourSpec },
    /// F(rho) sweep, extrapolation to rho = -1/2 and direct mu(2,3) estimates.
    Mu23,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Text,
    Json,
    Csv,
}

fn run_config(g: &Global, samples: usize) -> RunConfig {
    let mut cfg = RunConfig {
        samples,
        seed: g.seed,
        quadrature: QuadratureConfig {
            tol: g.tol,
            truncation_radius: g.radius,
            max_subdivisions: g.max_subdivisions,
            ..QuadratureConfig::default()
        },
        k_max: g.k_max,
        term_tol: g.term_tol,
        ..RunConfig::default()
    };
    cfg.extrapolation.max_degree = g.max_degree;
    if let Some(grid) = &g.rho_grid {
        cfg.rho_grid = grid.clone();
    }
    cfg
}

fn render_table(format: Format) -> Result<String, String> {
    let rows = table_rows();
    match format {
        Format::Text => {
            let mut s = format!("{:<10}{:>14}  {:<16}expression\n", "quantity", "value", "provenance");
            for r in &rows {
                s += &format!("{:<10}{:>14.6}  {:<16}{}\n", r.quantity, r.value, provenance(r), r.expression);
            }
            Ok(s)
        }
        Format::Json => serde_json::to_string_pretty(&rows).map(|s| s + "\n").map_err(|e| e.to_string()),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r).map_err(|e| e.to_string())?;
            }
            let bytes = w.into_inner().map_err(|e| e.to_string())?;
            String::from_utf8(bytes).map_err(|e| e.to_string())
        }
    }
}

fn provenance(r: &CatalogueRow) -> String {
    serde_json::to_value(r.provenance)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn render_reports(reports: &[RunReport], format: Format, many: bool) -> Result<String, String> {
    match format {
        Format::Text => Ok(reports.iter().map(|r| format!("{r}\n")).collect()),
        Format::Json if many => serde_json::to_string_pretty(reports).map(|s| s + "\n").map_err(|e| e.to_string()),
        Format::Json => reports[0].to_json().map(|s| s + "\n").map_err(|e| e.to_string()),
        Format::Csv => {
            let mut out = String::new();
            for (i, r) in reports.iter().enumerate() {
                let csv = r.to_csv().map_err(|e| e.to_string())?;
                let body = if i == 0 { &csv[..] } else { csv.split_once('\n').map_or("", |x| x.1) };
                out += body;
            }
            Ok(out)
        }
    }
}

fn emit(g: &Global, text: &str) -> Result<(), String> {
    match &g.out {
        Some(path) => fs::write(path, text).map_err(|e| format!("cannot write {path}: {e}")),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool, String> {
    let g = &cli.global;
    if let Some(t) = g.threads {
        if t == 0 {
            return Err("--threads must be at least 1".into());
        }
        configure_threads(t);
    }
    let stamp = g
        .timestamp
        .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
    let samples = g.samples.unwrap_or(gaussian_tours::monte_carlo::DEFAULT_SAMPLES);

    let (reports, many) = match &cli.command {
        Cmd::Table => {
            emit(g, &render_table(g.format)?)?;
            return Ok(true);
        }
        Cmd::Verify { target } => {
            let cfg = run_config(g, samples);
            if target.eq_ignore_ascii_case("all") {
                let mut v = Vec::new();
                for spec in verify_targets() {
                    v.push(verify(&spec, &cfg).map_err(|e| e.to_string())?);
                }
                (v, true)
            } else {
                let spec: TourSpec = target.parse().map_err(|e: gaussian_tours::Error| e.to_string())?;
                (vec![verify(&spec, &cfg).map_err(|e| e.to_string())?], false)
            }
        }
        Cmd::Estimate { spec } => {
            let cfg = run_config(g, g.samples.unwrap_or_else(|| default_estimate_samples(spec)));
            (vec![estimate(spec, &cfg).map_err(|e| e.to_string())?], false)
        }
        Cmd::Mu23 => (vec![mu23_report(&run_config(g, samples)).map_err(|e| e.to_string())?], false),
    };
    let reports: Vec<RunReport> = reports
        .into_iter()
        .map(|r| RunReport { timestamp: stamp, ..r })
        .collect();
    emit(g, &render_reports(&reports, g.format, many)?)?;
    Ok(reports.iter().all(RunReport::all_agree))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("gtours: at least one engine pair disagrees");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("gtours: {e}");
            ExitCode::from(2)
        }
    }
}
