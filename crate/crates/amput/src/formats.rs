//! On-disk formats: the flat JSON model file, CSV report tables with
//! 17-significant-digit floats (lossless f64 round trips), JSON report
//! mirrors, and the log-log SVG plot.

use std::fmt::Write as _;

use amput_core::lattice::BoundaryStep;
use amput_core::pde::ReferencePrice;
use amput_core::study::{
    BoundaryFit, ConvergenceReport, ConvergenceRow, Regime, StoppingRow, StoppingStudy,
};
use amput_core::{MarketModel, PdeSolution};
use serde::{Deserialize, Serialize};

/// Formats a float with 17 significant digits (round-trips bit-exactly).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Flat JSON representation of a market model:
/// `{"r":…,"d":…,"sigma":…,"s0":…,"k":…,"t":…}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModelFile {
    pub r: f64,
    pub d: f64,
    pub sigma: f64,
    pub s0: f64,
    pub k: f64,
    pub t: f64,
}

impl ModelFile {
    /// Validates into a [`MarketModel`].
    pub fn to_model(self) -> Result<MarketModel, String> {
        MarketModel::new(self.r, self.d, self.sigma, self.s0, self.k, self.t)
            .map_err(|e| e.to_string())
    }

    /// Snapshot of an existing model.
    pub fn from_model(m: &MarketModel) -> Self {
        Self { r: m.r(), d: m.d(), sigma: m.sigma(), s0: m.s0(), k: m.k(), t: m.t() }
    }
}

/// Parses a model JSON document.
pub fn parse_model_json(text: &str) -> Result<MarketModel, String> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| format!("model JSON: {e}"))?;
    file.to_model()
}

/// Renders a model as flat JSON.
pub fn render_model_json(model: &MarketModel) -> String {
    let mut s = serde_json::to_string_pretty(&ModelFile::from_model(model)).expect("model JSON");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// CSV tables
// ---------------------------------------------------------------------------

/// Convergence rows: `n,price,error,lnn`.
pub fn render_convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("n,price,error,lnn\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.n, fmt_f64(r.price), fmt_f64(r.error), fmt_f64(r.lnn));
    }
    out
}

/// Parses a convergence CSV produced by [`render_convergence_csv`].
pub fn parse_convergence_csv(text: &str) -> Result<Vec<ConvergenceRow>, String> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 {
            if line != "n,price,error,lnn" {
                return Err(format!("unexpected header {line:?}"));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let mut field = |name: &str| {
            parts.next().ok_or_else(|| format!("line {}: missing {name}", idx + 1))
        };
        let n: usize = field("n")?.parse().map_err(|e| format!("line {}: {e}", idx + 1))?;
        let price: f64 = field("price")?.parse().map_err(|e| format!("line {}: {e}", idx + 1))?;
        let error: f64 = field("error")?.parse().map_err(|e| format!("line {}: {e}", idx + 1))?;
        let lnn: f64 = field("lnn")?.parse().map_err(|e| format!("line {}: {e}", idx + 1))?;
        rows.push(ConvergenceRow { n, price, error, lnn });
    }
    Ok(rows)
}

/// Stopping rows: `n,h,value_tau,gap_to_lattice,tail_expectation,lnh_beta`.
pub fn render_stopping_csv(rows: &[StoppingRow]) -> String {
    let mut out = String::from("n,h,value_tau,gap_to_lattice,tail_expectation,lnh_beta\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n,
            fmt_f64(r.h),
            fmt_f64(r.value_tau),
            fmt_f64(r.gap_to_lattice),
            fmt_f64(r.tail_expectation),
            fmt_f64(r.lnh_beta)
        );
    }
    out
}

/// Oracle boundary curve: `time_to_maturity,btilde_log,b_stock`.
pub fn render_pde_boundary_csv(sol: &PdeSolution) -> String {
    let mut out = String::from("time_to_maturity,btilde_log,b_stock\n");
    for (t, b) in sol.boundary_samples() {
        let _ = writeln!(out, "{},{},{}", fmt_f64(t), fmt_f64(b), fmt_f64(b.exp()));
    }
    out
}

/// Parses `(time_to_maturity, btilde_log)` pairs from an oracle boundary CSV.
pub fn parse_boundary_csv(text: &str) -> Result<Vec<(f64, f64)>, String> {
    let mut samples = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 {
            if line != "time_to_maturity,btilde_log,b_stock" {
                return Err(format!("unexpected header {line:?}"));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let t: f64 = parts
            .next()
            .ok_or_else(|| format!("line {}: missing time", idx + 1))?
            .parse()
            .map_err(|e| format!("line {}: {e}", idx + 1))?;
        let b: f64 = parts
            .next()
            .ok_or_else(|| format!("line {}: missing btilde", idx + 1))?
            .parse()
            .map_err(|e| format!("line {}: {e}", idx + 1))?;
        samples.push((t, b));
    }
    Ok(samples)
}

/// Lattice boundary export: `step,t_years,x_walk,stock_price`, resolved
/// steps only.
pub fn render_lattice_boundary_csv(steps: &[BoundaryStep]) -> String {
    let mut out = String::from("step,t_years,x_walk,stock_price\n");
    for s in steps {
        if let (Some(x), Some(stock)) = (s.x_walk, s.stock) {
            let _ = writeln!(out, "{},{},{},{}", s.step, fmt_f64(s.t_years), fmt_f64(x), fmt_f64(stock));
        }
    }
    out
}

/// Value surface export: `time_to_maturity,x,value` per stored grid point.
pub fn render_surface_csv(sol: &PdeSolution) -> Result<String, String> {
    let mut out = String::from("time_to_maturity,x,value\n");
    for l in 0..=sol.time_layers() {
        let t = l as f64 * sol.dt();
        for i in 0..=sol.space_points() {
            let x = sol.x_at(i);
            let v = sol.value_at(t, x).map_err(|e| e.to_string())?;
            let _ = writeln!(out, "{},{},{}", fmt_f64(t), fmt_f64(x), fmt_f64(v));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// JSON mirrors
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct ReferenceJson {
    price: f64,
    lattice_estimate: f64,
    pde_estimate: f64,
    gap: f64,
    tol: f64,
}

impl From<ReferencePrice> for ReferenceJson {
    fn from(r: ReferencePrice) -> Self {
        Self {
            price: r.price,
            lattice_estimate: r.lattice_estimate,
            pde_estimate: r.pde_estimate,
            gap: r.gap,
            tol: r.tol,
        }
    }
}

#[derive(Debug, Serialize)]
struct ConvergenceRowJson {
    n: usize,
    price: f64,
    error: f64,
    lnn: f64,
}

#[derive(Debug, Serialize)]
struct FitsJson {
    regime: &'static str,
    alpha: f64,
    alpha_bar: f64,
    slope_loglog: Option<f64>,
    excluded_from_slope: Vec<usize>,
    upper_c: f64,
    lower_c: f64,
    degenerate: bool,
}

#[derive(Debug, Serialize)]
struct ConvergenceJson {
    rows: Vec<ConvergenceRowJson>,
    reference: ReferenceJson,
    fits: FitsJson,
}

/// Renders a convergence report as JSON.
pub fn render_convergence_json(report: &ConvergenceReport) -> String {
    let doc = ConvergenceJson {
        rows: report
            .rows
            .iter()
            .map(|r| ConvergenceRowJson { n: r.n, price: r.price, error: r.error, lnn: r.lnn })
            .collect(),
        reference: report.reference.into(),
        fits: FitsJson {
            regime: report.fits.regime.label(),
            alpha: report.fits.alpha,
            alpha_bar: report.fits.alpha_bar,
            slope_loglog: report.fits.slope_loglog,
            excluded_from_slope: report.fits.excluded_from_slope.clone(),
            upper_c: report.fits.upper_c,
            lower_c: report.fits.lower_c,
            degenerate: report.fits.degenerate,
        },
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("convergence JSON");
    s.push('\n');
    s
}

#[derive(Debug, Serialize)]
struct StoppingRowJson {
    n: usize,
    h: f64,
    value_tau: f64,
    gap_to_lattice: f64,
    tail_expectation: f64,
    lnh_beta: f64,
}

#[derive(Debug, Serialize)]
struct StoppingChecksJson {
    gaps_nonnegative: bool,
    /// `null` when a quotient vanished (ratio unbounded).
    tail_quotient_ratio: Option<f64>,
    gap_quotient_ratio: Option<f64>,
}

#[derive(Debug, Serialize)]
struct StoppingJson {
    rows: Vec<StoppingRowJson>,
    regime: &'static str,
    beta: f64,
    checks: StoppingChecksJson,
}

fn finite_or_none(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Renders a stopping study as JSON.
pub fn render_stopping_json(study: &StoppingStudy) -> String {
    let doc = StoppingJson {
        rows: study
            .rows
            .iter()
            .map(|r| StoppingRowJson {
                n: r.n,
                h: r.h,
                value_tau: r.value_tau,
                gap_to_lattice: r.gap_to_lattice,
                tail_expectation: r.tail_expectation,
                lnh_beta: r.lnh_beta,
            })
            .collect(),
        regime: study.regime.label(),
        beta: study.beta,
        checks: StoppingChecksJson {
            gaps_nonnegative: study.checks.gaps_nonnegative,
            tail_quotient_ratio: finite_or_none(study.checks.tail_quotient_ratio),
            gap_quotient_ratio: finite_or_none(study.checks.gap_quotient_ratio),
        },
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("stopping JSON");
    s.push('\n');
    s
}

#[derive(Debug, Serialize)]
struct BoundaryFitJson {
    regime: &'static str,
    exponent: f64,
    c_bound: f64,
    c_bound_half_window: f64,
    maturity_limit_log: f64,
    maturity_limit_stock: f64,
    window: [f64; 2],
    samples_used: usize,
}

/// Renders a boundary-asymptotics fit as JSON.
pub fn render_boundary_fit_json(fit: &BoundaryFit) -> String {
    let doc = BoundaryFitJson {
        regime: fit.regime.label(),
        exponent: fit.exponent,
        c_bound: fit.c_bound,
        c_bound_half_window: fit.c_bound_half_window,
        maturity_limit_log: fit.maturity_limit,
        maturity_limit_stock: fit.maturity_limit.exp(),
        window: [fit.window.0, fit.window.1],
        samples_used: fit.samples_used,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("boundary JSON");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

/// Named, coloured point series for the SVG plot.
type Series<'a> = (&'a str, &'a str, Vec<(f64, f64)>);

/// Renders the log-log error plot: `|error|` against `n` plus the two
/// fitted envelope curves, one polyline per nonempty series.
pub fn render_convergence_svg(report: &ConvergenceReport) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const MARGIN: f64 = 56.0;

    let mut series: Vec<Series<'_>> = Vec::new();
    let data: Vec<(f64, f64)> = report
        .rows
        .iter()
        .filter(|r| r.error.abs() > 0.0)
        .map(|r| (r.n as f64, r.error.abs()))
        .collect();
    series.push(("abs-error", "#1f77b4", data));
    let envelope = |c: f64, e: f64| -> Vec<(f64, f64)> {
        if c <= 0.0 {
            return Vec::new();
        }
        report
            .rows
            .iter()
            .map(|r| (r.n as f64, c * r.lnn.powf(e) / r.n as f64))
            .collect()
    };
    series.push(("upper-envelope", "#d62728", envelope(report.fits.upper_c, report.fits.alpha)));
    series.push(("lower-envelope", "#2ca02c", envelope(report.fits.lower_c, report.fits.alpha_bar)));

    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for (_, _, pts) in &series {
        for &(x, y) in pts {
            xs.push(x.log10());
            ys.push(y.log10());
        }
    }
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(svg, "  <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"24\" font-family=\"monospace\" font-size=\"14\">lattice error vs n (log-log), regime {}</text>",
        MARGIN,
        report.fits.regime.label()
    );
    if !xs.is_empty() {
        let (x_lo, x_hi) = bounds(&xs);
        let (y_lo, y_hi) = bounds(&ys);
        let sx = |x: f64| MARGIN + (x - x_lo) / (x_hi - x_lo).max(1e-12) * (W - 2.0 * MARGIN);
        let sy = |y: f64| H - MARGIN - (y - y_lo) / (y_hi - y_lo).max(1e-12) * (H - 2.0 * MARGIN);
        // Axes.
        let _ = writeln!(
            svg,
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            MARGIN,
            H - MARGIN,
            W - MARGIN,
            H - MARGIN
        );
        let _ = writeln!(
            svg,
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            MARGIN,
            MARGIN,
            MARGIN,
            H - MARGIN
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\">log10 n</text>",
            W / 2.0,
            H - MARGIN / 3.0
        );
        let _ = writeln!(
            svg,
            "  <text x=\"12\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" transform=\"rotate(-90 12 {})\">log10 |error|</text>",
            H / 2.0,
            H / 2.0
        );
        for (name, color, pts) in &series {
            if pts.len() < 2 {
                continue;
            }
            let path: Vec<String> = pts
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x.log10()), sy(y.log10())))
                .collect();
            let _ = writeln!(
                svg,
                "  <polyline id=\"{name}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
                path.join(" ")
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(vals: &[f64]) -> (f64, f64) {
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Regime helper shared by report renderers.
pub fn regime_label(regime: Regime) -> &'static str {
    regime.label()
}

/// Report output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Svg,
}

/// Renders a convergence report in the requested format and writes it to
/// `path`. I/O failures are surfaced verbatim.
pub fn emit_report(
    report: &ConvergenceReport,
    format: ReportFormat,
    path: &std::path::Path,
) -> Result<(), String> {
    let body = match format {
        ReportFormat::Csv => render_convergence_csv(&report.rows),
        ReportFormat::Json => render_convergence_json(report),
        ReportFormat::Svg => render_convergence_svg(report),
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
        }
    }
    std::fs::write(path, body).map_err(|e| format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_json_round_trip() {
        let m = MarketModel::new(0.05, 0.03, 0.2, 100.0, 100.0, 1.0).unwrap();
        let text = render_model_json(&m);
        let back = parse_model_json(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn model_json_rejects_bad_parameters() {
        assert!(parse_model_json(r#"{"r":0.0,"d":0.0,"sigma":0.2,"s0":100,"k":100,"t":1}"#).is_err());
        assert!(parse_model_json("not json").is_err());
    }

    #[test]
    fn convergence_csv_round_trips_bit_exactly() {
        let rows = vec![
            ConvergenceRow { n: 128, price: 6.972_898_807_123_456, error: -8.43e-3, lnn: 128f64.ln() },
            ConvergenceRow { n: 256, price: 1.0 / 3.0, error: f64::MIN_POSITIVE, lnn: 256f64.ln() },
        ];
        let text = render_convergence_csv(&rows);
        let back = parse_convergence_csv(&text).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(back.iter()) {
            assert_eq!(a.n, b.n);
            assert_eq!(a.price.to_bits(), b.price.to_bits());
            assert_eq!(a.error.to_bits(), b.error.to_bits());
            assert_eq!(a.lnn.to_bits(), b.lnn.to_bits());
        }
    }

    #[test]
    fn empty_reports_render_header_only() {
        assert_eq!(render_convergence_csv(&[]), "n,price,error,lnn\n");
        assert_eq!(
            render_stopping_csv(&[]),
            "n,h,value_tau,gap_to_lattice,tail_expectation,lnh_beta\n"
        );
    }

    #[test]
    fn boundary_csv_parses_own_output() {
        let text = "time_to_maturity,btilde_log,b_stock\n1e0,4.5e0,9e1\n2e0,4.4e0,8.1e1\n";
        let samples = parse_boundary_csv(text).unwrap();
        assert_eq!(samples, vec![(1.0, 4.5), (2.0, 4.4)]);
        assert!(parse_boundary_csv("bad,header\n").is_err());
    }

    #[test]
    fn svg_renders_one_polyline_per_series() {
        use amput_core::pde::ReferencePrice;
        use amput_core::study::{fit_envelopes, ConvergenceReport};

        // Oscillating errors make both envelopes nonzero: three series.
        let reference =
            ReferencePrice { price: 5.0, lattice_estimate: 5.0, pde_estimate: 5.0, gap: 0.0, tol: 2e-4 };
        let rows: Vec<ConvergenceRow> = [128usize, 256, 512, 1024]
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                let error = sign * 0.4 / n as f64;
                ConvergenceRow { n, price: 5.0 + error, error, lnn: (n as f64).ln() }
            })
            .collect();
        let fits = fit_envelopes(&rows, Regime::DividendAboveRate, 2e-4 / 1e4);
        let report = ConvergenceReport { rows, reference, fits };
        let svg = render_convergence_svg(&report);
        assert_eq!(svg.matches("<polyline").count(), 3, "{svg}");
        assert!(svg.contains("</svg>"));

        // A degenerate report still renders a valid document with no series.
        let zero_rows: Vec<ConvergenceRow> = [128usize, 256]
            .iter()
            .map(|&n| ConvergenceRow { n, price: 0.0, error: 0.0, lnn: (n as f64).ln() })
            .collect();
        let fits = fit_envelopes(&zero_rows, Regime::DividendAboveRate, 2e-4);
        let report = ConvergenceReport { rows: zero_rows, reference, fits };
        let svg = render_convergence_svg(&report);
        assert_eq!(svg.matches("<polyline").count(), 0);
        assert!(svg.contains("</svg>"));
    }
}
