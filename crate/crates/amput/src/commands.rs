//! Subcommand implementations shared by the binary and the test suites.
//!
//! Every runner returns the exact stdout payload plus a machine-readable
//! list of failed invariant checks; the binary maps errors to exit code 2
//! and a nonempty failure list to exit code 1. All output is deterministic
//! for fixed inputs, independent of `AMPUT_THREADS`.

use std::fs;
use std::path::Path;

use amput_core::boundary::{estimate_maturity_limit, BoundaryCurve};
use amput_core::lattice::{
    extract_boundary, price_american, price_american_with, LatticeScheme, LatticeSpec,
    PricingConfig,
};
use amput_core::pde::{reference_price, solve_vi_with, SolveOptions};
use amput_core::premium::{premium_quadrature, PremiumInput, DEFAULT_RESOLUTION};
use amput_core::study::{
    assemble_stopping_study, convergence_report_from_prices, run_boundary_asymptotics,
    stopping_row, validate_schedule, Regime, StoppingRow,
};
use amput_core::MarketModel;
use serde::Serialize;

use crate::formats;
use crate::parallel::{parallel_map, thread_cap};

/// Default half-width of the finite-difference domain in `sigma sqrt(T)`
/// units.
pub const DEFAULT_WIDTH: f64 = 8.0;

/// Reference certification tolerance relative to the strike.
pub const REFERENCE_TOL_REL: f64 = 2e-6;

/// Outcome of a subcommand: stdout payload and failed run checks.
#[derive(Debug)]
pub struct RunOutput {
    /// JSON document to print on stdout.
    pub stdout: String,
    /// Failed invariant checks (empty means exit code 0).
    pub failures: Vec<String>,
}

fn read_model(path: &Path) -> Result<MarketModel, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    formats::parse_model_json(&text)
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
        }
    }
    fs::write(path, contents).map_err(|e| format!("{}: {e}", path.display()))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON rendering");
    s.push('\n');
    s
}

/// Parses a `--schedule` list such as `"128,256,512"`.
pub fn parse_schedule(text: &str) -> Result<Vec<usize>, String> {
    let mut schedule = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        schedule.push(part.parse::<usize>().map_err(|e| format!("schedule entry {part:?}: {e}"))?);
    }
    if schedule.is_empty() {
        return Err("schedule is empty".into());
    }
    Ok(schedule)
}

/// Default convergence schedule: `128 * 2^k`, `k = 0..=7`.
pub fn default_converge_schedule() -> Vec<usize> {
    (0..8).map(|k| 128usize << k).collect()
}

/// Default stopping schedule: `2^7..=2^13`.
pub fn default_stopping_schedule() -> Vec<usize> {
    (7..=13).map(|k| 1usize << k).collect()
}

// ---------------------------------------------------------------------------
// price
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct PriceJson {
    price: f64,
    n: usize,
    scheme: &'static str,
    h: f64,
}

/// `price`: backward induction at `n` periods, optional boundary export.
pub fn run_price(
    model_path: &Path,
    n: usize,
    scheme: LatticeScheme,
    boundary_out: Option<&Path>,
) -> Result<RunOutput, String> {
    let model = read_model(model_path)?;
    let spec = LatticeSpec { n, scheme, walk_bound: 1.0 };
    let config = PricingConfig { retain_flags: boundary_out.is_some(), retain_layers: false };
    let result = price_american_with(&model, &spec, config).map_err(|e| e.to_string())?;
    if let Some(path) = boundary_out {
        let steps = extract_boundary(&model, &spec, &result).map_err(|e| e.to_string())?;
        write_file(path, &formats::render_lattice_boundary_csv(&steps))?;
    }
    let label = match scheme {
        LatticeScheme::PaperWalk => "paper",
        LatticeScheme::RiskNeutral => "rn",
    };
    let doc = PriceJson { price: result.price, n, scheme: label, h: spec.step_years(&model) };
    Ok(RunOutput { stdout: to_json(&doc), failures: Vec::new() })
}

// ---------------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct OracleJson {
    price: f64,
    m: usize,
    nt: usize,
    dx: f64,
    dt: f64,
    max_complementarity_residual: f64,
    psor_sweeps: usize,
    boundary_layers: usize,
}

/// `oracle`: variational-inequality solve with optional boundary/surface
/// exports.
pub fn run_oracle(
    model_path: &Path,
    m: usize,
    nt: usize,
    surface_out: Option<&Path>,
    boundary_out: Option<&Path>,
) -> Result<RunOutput, String> {
    let model = read_model(model_path)?;
    let options = SolveOptions { store_surface: surface_out.is_some(), ..Default::default() };
    let sol = solve_vi_with(&model, m, nt, DEFAULT_WIDTH, options).map_err(|e| e.to_string())?;
    if let Some(path) = boundary_out {
        write_file(path, &formats::render_pde_boundary_csv(&sol))?;
    }
    if let Some(path) = surface_out {
        write_file(path, &formats::render_surface_csv(&sol)?)?;
    }
    let doc = OracleJson {
        price: sol.price_at_spot(),
        m,
        nt,
        dx: sol.dx(),
        dt: sol.dt(),
        max_complementarity_residual: sol.max_complementarity_residual,
        psor_sweeps: sol.psor_sweeps,
        boundary_layers: sol.boundary_samples().count(),
    };
    Ok(RunOutput { stdout: to_json(&doc), failures: Vec::new() })
}

// ---------------------------------------------------------------------------
// premium
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct PremiumJson {
    premium: f64,
    european: f64,
    implied_american: f64,
    certified_reference: f64,
    gap: f64,
}

/// `premium`: early-exercise premium from an oracle boundary CSV, checked
/// against the certified reference price.
pub fn run_premium(
    model_path: &Path,
    boundary_path: &Path,
    resolution: Option<usize>,
) -> Result<RunOutput, String> {
    let model = read_model(model_path)?;
    let resolution = resolution.unwrap_or(DEFAULT_RESOLUTION);

    // Degenerate contract: every quantity is identically zero and the
    // boundary file carries no samples.
    if model.k() == 0.0 {
        let doc = PremiumJson {
            premium: 0.0,
            european: 0.0,
            implied_american: 0.0,
            certified_reference: 0.0,
            gap: 0.0,
        };
        return Ok(RunOutput { stdout: to_json(&doc), failures: Vec::new() });
    }

    let text = fs::read_to_string(boundary_path)
        .map_err(|e| format!("{}: {e}", boundary_path.display()))?;
    let samples = formats::parse_boundary_csv(&text)?;
    let b0 = estimate_maturity_limit(&samples, Regime::of(&model), model.t());
    let curve = BoundaryCurve::from_samples(samples, b0).map_err(|e| e.to_string())?;

    let input = PremiumInput { model: &model, boundary: &curve, resolution };
    let premium =
        premium_quadrature(&input, model.t(), model.s0().ln()).map_err(|e| e.to_string())?;
    let european = model.european_put(model.t()).map_err(|e| e.to_string())?;
    let reference =
        reference_price(&model, REFERENCE_TOL_REL * model.k()).map_err(|e| e.to_string())?;
    let implied = european + premium;
    let doc = PremiumJson {
        premium,
        european,
        implied_american: implied,
        certified_reference: reference.price,
        gap: implied - reference.price,
    };
    Ok(RunOutput { stdout: to_json(&doc), failures: Vec::new() })
}

// ---------------------------------------------------------------------------
// study converge
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct ConvergeSummaryJson {
    reference: f64,
    reference_gap: f64,
    slope_loglog: Option<f64>,
    upper_c: f64,
    lower_c: f64,
    degenerate: bool,
    files: Vec<String>,
    failures: Vec<String>,
}

/// `study converge`: schedule pricing, envelope fits, report emission.
pub fn run_study_converge(
    model_path: &Path,
    out_dir: &Path,
    schedule: Option<&str>,
) -> Result<RunOutput, String> {
    let model = read_model(model_path)?;
    let schedule = match schedule {
        Some(text) => parse_schedule(text)?,
        None => default_converge_schedule(),
    };
    validate_schedule(&schedule).map_err(|e| e.to_string())?;
    let tol = REFERENCE_TOL_REL * model.k();
    let reference = reference_price(&model, tol.max(1e-9)).map_err(|e| e.to_string())?;

    let threads = thread_cap();
    let priced: Vec<Result<(usize, f64), String>> = parallel_map(&schedule, threads, |&n| {
        let spec = LatticeSpec::paper_walk(n);
        price_american(&model, &spec).map(|r| (n, r.price)).map_err(|e| e.to_string())
    });
    let mut prices = Vec::with_capacity(priced.len());
    for item in priced {
        prices.push(item?);
    }
    let report =
        convergence_report_from_prices(&model, &prices, reference).map_err(|e| e.to_string())?;

    fs::create_dir_all(out_dir).map_err(|e| format!("{}: {e}", out_dir.display()))?;
    let csv_path = out_dir.join("convergence.csv");
    let json_path = out_dir.join("convergence.json");
    let svg_path = out_dir.join("convergence.svg");
    formats::emit_report(&report, formats::ReportFormat::Csv, &csv_path)?;
    formats::emit_report(&report, formats::ReportFormat::Json, &json_path)?;
    formats::emit_report(&report, formats::ReportFormat::Svg, &svg_path)?;

    let mut failures = Vec::new();
    envelope_prefix_check(&report, &mut failures);

    let doc = ConvergeSummaryJson {
        reference: report.reference.price,
        reference_gap: report.reference.gap,
        slope_loglog: report.fits.slope_loglog,
        upper_c: report.fits.upper_c,
        lower_c: report.fits.lower_c,
        degenerate: report.fits.degenerate,
        files: vec![
            csv_path.display().to_string(),
            json_path.display().to_string(),
            svg_path.display().to_string(),
        ],
        failures: failures.clone(),
    };
    Ok(RunOutput { stdout: to_json(&doc), failures })
}

/// Envelope validity: constants fitted on the first half of the schedule
/// must not be exceeded by more than 1.5x on the second half.
fn envelope_prefix_check(report: &amput_core::study::ConvergenceReport, failures: &mut Vec<String>) {
    let rows = &report.rows;
    if report.fits.degenerate || rows.len() < 4 {
        return;
    }
    let split = rows.len() / 2;
    let alpha = report.fits.alpha;
    let alpha_bar = report.fits.alpha_bar;
    let upper = |r: &amput_core::study::ConvergenceRow| {
        r.error.max(0.0) * r.n as f64 / r.lnn.powf(alpha)
    };
    let lower = |r: &amput_core::study::ConvergenceRow| {
        (-r.error).max(0.0) * r.n as f64 / r.lnn.powf(alpha_bar)
    };
    let prefix_upper = rows[..split].iter().map(&upper).fold(0.0f64, f64::max);
    let prefix_lower = rows[..split].iter().map(&lower).fold(0.0f64, f64::max);
    for r in &rows[split..] {
        if upper(r) > 1.5 * prefix_upper {
            failures.push(format!(
                "upper envelope exceeded at n={}: {} > 1.5 * {}",
                r.n,
                upper(r),
                prefix_upper
            ));
        }
        if lower(r) > 1.5 * prefix_lower {
            failures.push(format!(
                "lower envelope exceeded at n={}: {} > 1.5 * {}",
                r.n,
                lower(r),
                prefix_lower
            ));
        }
    }
}

// ---------------------------------------------------------------------------
// study stopping
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct StoppingSummaryJson {
    regime: &'static str,
    beta: f64,
    tail_quotient_ratio: Option<f64>,
    gap_quotient_ratio: Option<f64>,
    files: Vec<String>,
    failures: Vec<String>,
}

/// Grid used for the internal oracle boundary of `study stopping`.
const STOPPING_ORACLE_GRID: (usize, usize) = (2000, 2000);

/// `study stopping`: stopping-rule values, gaps, and tail bounds across the
/// schedule.
pub fn run_study_stopping(
    model_path: &Path,
    out_dir: &Path,
    schedule: Option<&str>,
) -> Result<RunOutput, String> {
    let model = read_model(model_path)?;
    let schedule = match schedule {
        Some(text) => parse_schedule(text)?,
        None => default_stopping_schedule(),
    };
    validate_schedule(&schedule).map_err(|e| e.to_string())?;
    let (m, nt) = STOPPING_ORACLE_GRID;
    let sol = solve_vi_with(&model, m, nt, DEFAULT_WIDTH, SolveOptions::default())
        .map_err(|e| e.to_string())?;
    let curve = BoundaryCurve::from_pde(&sol).map_err(|e| format!("missing boundary: {e}"))?;

    let threads = thread_cap();
    let computed: Vec<Result<StoppingRow, String>> =
        parallel_map(&schedule, threads, |&n| {
            stopping_row(&model, n, &curve).map_err(|e| e.to_string())
        });
    let mut rows = Vec::with_capacity(computed.len());
    for item in computed {
        rows.push(item?);
    }
    let study = assemble_stopping_study(&model, rows);

    fs::create_dir_all(out_dir).map_err(|e| format!("{}: {e}", out_dir.display()))?;
    let csv_path = out_dir.join("stopping.csv");
    let json_path = out_dir.join("stopping.json");
    write_file(&csv_path, &formats::render_stopping_csv(&study.rows))?;
    write_file(&json_path, &formats::render_stopping_json(&study))?;

    let mut failures = Vec::new();
    if !study.checks.gaps_nonnegative {
        failures.push("stopping value exceeded the lattice price".into());
    }
    // Non-finite ratios (a vanished quotient) count as unbounded.
    let bounded = |r: f64| r.is_finite() && r <= 10.0;
    if !bounded(study.checks.tail_quotient_ratio) {
        failures.push(format!(
            "tail expectation / |ln h|^beta band ratio {} > 10",
            study.checks.tail_quotient_ratio
        ));
    }
    if !bounded(study.checks.gap_quotient_ratio) {
        failures.push(format!(
            "gap * n / (ln n)^beta band ratio {} > 10",
            study.checks.gap_quotient_ratio
        ));
    }

    let doc = StoppingSummaryJson {
        regime: study.regime.label(),
        beta: study.beta,
        tail_quotient_ratio: study.checks.tail_quotient_ratio.is_finite().then_some(study.checks.tail_quotient_ratio),
        gap_quotient_ratio: study.checks.gap_quotient_ratio.is_finite().then_some(study.checks.gap_quotient_ratio),
        files: vec![csv_path.display().to_string(), json_path.display().to_string()],
        failures: failures.clone(),
    };
    Ok(RunOutput { stdout: to_json(&doc), failures })
}

// ---------------------------------------------------------------------------
// study boundary
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct BoundarySummaryJson {
    regime: &'static str,
    exponent: f64,
    c_bound: f64,
    c_bound_half_window: f64,
    maturity_limit_stock: f64,
    files: Vec<String>,
    failures: Vec<String>,
}

/// Grid used for `study boundary`.
const BOUNDARY_GRID: (usize, usize) = (4000, 4000);

/// `study boundary`: near-maturity asymptotics of the oracle boundary.
pub fn run_study_boundary(model_path: &Path, out_dir: &Path) -> Result<RunOutput, String> {
    let model = read_model(model_path)?;
    let (m, nt) = BOUNDARY_GRID;
    let sol = solve_vi_with(&model, m, nt, DEFAULT_WIDTH, SolveOptions::default())
        .map_err(|e| e.to_string())?;
    let fit = run_boundary_asymptotics(&model, &sol).map_err(|e| e.to_string())?;

    fs::create_dir_all(out_dir).map_err(|e| format!("{}: {e}", out_dir.display()))?;
    let csv_path = out_dir.join("boundary.csv");
    let json_path = out_dir.join("boundary_fit.json");
    write_file(&csv_path, &formats::render_pde_boundary_csv(&sol))?;
    write_file(&json_path, &formats::render_boundary_fit_json(&fit))?;

    let mut failures = Vec::new();
    let samples: Vec<(f64, f64)> = sol.boundary_samples().collect();
    for w in samples.windows(2) {
        if w[1].1 > w[0].1 + sol.dx() {
            failures.push(format!(
                "boundary not monotone at time_to_maturity {}: {} -> {}",
                w[1].0, w[0].1, w[1].1
            ));
            break;
        }
    }
    let band = match fit.regime {
        Regime::DividendAtMostRate => (0.40, 0.62),
        Regime::DividendAboveRate => (0.42, 0.60),
    };
    if !(band.0..=band.1).contains(&fit.exponent) {
        failures.push(format!(
            "asymptotics exponent {} outside [{}, {}]",
            fit.exponent, band.0, band.1
        ));
    }
    if fit.c_bound > 2.0 * fit.c_bound_half_window {
        failures.push(format!(
            "envelope constant unstable under window halving: {} vs {}",
            fit.c_bound, fit.c_bound_half_window
        ));
    }

    let doc = BoundarySummaryJson {
        regime: fit.regime.label(),
        exponent: fit.exponent,
        c_bound: fit.c_bound,
        c_bound_half_window: fit.c_bound_half_window,
        maturity_limit_stock: fit.maturity_limit.exp(),
        files: vec![csv_path.display().to_string(), json_path.display().to_string()],
        failures: failures.clone(),
    };
    Ok(RunOutput { stdout: to_json(&doc), failures })
}
