//! Convergence experiments for the walk approximation, stopping-rule
//! studies, and exercise-boundary asymptotics fits.
//!
//! The approximation error obeys envelopes of the form
//! `-C (ln n)^{alpha_bar} / n <= P(n) - P <= C (ln n)^{alpha} / n`
//! with exponents switching on the dividend/rate regime: `alpha_bar =
//! alpha = 1` when `d > r`, and `alpha_bar = 3/2`, `alpha = 5/4` when
//! `d <= r`. The log exponents are fixed by the regime, not estimated:
//! desk-scale data cannot resolve them, so only the envelope constants are
//! fitted and the raw log-log slope is reported as a sanity check on the
//! `1/n` rate.

use alloc::vec::Vec;
use core::fmt;

use crate::boundary::{estimate_maturity_limit, psi, BoundaryCurve, BoundaryError};
use crate::lattice::{price_american, stopping_rule_value, LatticeError, LatticeSpec};
use crate::math::linear_fit;
use crate::model::MarketModel;
use crate::pde::{reference_price, PdeError, PdeSolution, ReferencePrice};

/// Dividend/rate regime selecting the log exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `d <= r`.
    DividendAtMostRate,
    /// `d > r`.
    DividendAboveRate,
}

impl Regime {
    /// Regime of a model: exact comparison `d > r`.
    #[inline]
    pub fn of(model: &MarketModel) -> Self {
        if model.d() > model.r() {
            Regime::DividendAboveRate
        } else {
            Regime::DividendAtMostRate
        }
    }

    /// Upper-envelope log exponent `alpha`.
    #[inline]
    pub fn alpha(self) -> f64 {
        match self {
            Regime::DividendAtMostRate => 1.25,
            Regime::DividendAboveRate => 1.0,
        }
    }

    /// Lower-envelope log exponent `alpha_bar`.
    #[inline]
    pub fn alpha_bar(self) -> f64 {
        match self {
            Regime::DividendAtMostRate => 1.5,
            Regime::DividendAboveRate => 1.0,
        }
    }

    /// Stopping-rule tail exponent `beta`.
    #[inline]
    pub fn beta(self) -> f64 {
        match self {
            Regime::DividendAtMostRate => 1.5,
            Regime::DividendAboveRate => 1.0,
        }
    }

    /// Short label for reports.
    pub fn label(self) -> &'static str {
        match self {
            Regime::DividendAtMostRate => "d<=r",
            Regime::DividendAboveRate => "d>r",
        }
    }
}

/// Errors from the study drivers.
#[derive(Debug, Clone, PartialEq)]
pub enum StudyError {
    /// Schedule violates the supported range or ordering.
    InvalidSchedule { reason: &'static str },
    /// Boundary-asymptotics window has too few resolved layers.
    WindowTooSmall { found: usize, needed: usize },
    /// Propagated lattice error.
    Lattice(LatticeError),
    /// Propagated solver/certification error.
    Pde(PdeError),
    /// Propagated boundary error.
    Boundary(BoundaryError),
}

impl fmt::Display for StudyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StudyError::InvalidSchedule { reason } => write!(f, "invalid schedule: {reason}"),
            StudyError::WindowTooSmall { found, needed } => {
                write!(f, "boundary window has {found} resolved layers, needs {needed}")
            }
            StudyError::Lattice(e) => write!(f, "lattice error: {e}"),
            StudyError::Pde(e) => write!(f, "solver error: {e}"),
            StudyError::Boundary(e) => write!(f, "boundary error: {e}"),
        }
    }
}

impl From<LatticeError> for StudyError {
    fn from(e: LatticeError) -> Self {
        StudyError::Lattice(e)
    }
}

impl From<PdeError> for StudyError {
    fn from(e: PdeError) -> Self {
        StudyError::Pde(e)
    }
}

impl From<BoundaryError> for StudyError {
    fn from(e: BoundaryError) -> Self {
        StudyError::Boundary(e)
    }
}

/// One row of a convergence report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    /// Period count.
    pub n: usize,
    /// Lattice price `P(n)`.
    pub price: f64,
    /// `P(n) - P_ref`.
    pub error: f64,
    /// `ln n`.
    pub lnn: f64,
}

/// Fitted envelope data.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeFits {
    /// Regime used for the exponents.
    pub regime: Regime,
    /// Upper-envelope log exponent.
    pub alpha: f64,
    /// Lower-envelope log exponent.
    pub alpha_bar: f64,
    /// OLS slope of `ln |error|` against `ln n` over usable rows; `None`
    /// when fewer than two rows clear the reference-noise floor or the
    /// report is degenerate.
    pub slope_loglog: Option<f64>,
    /// `n` values excluded from the slope fit (error at reference-noise
    /// level).
    pub excluded_from_slope: Vec<usize>,
    /// `max_n (error)^+ n / (ln n)^alpha`.
    pub upper_c: f64,
    /// `max_n (-error)^+ n / (ln n)^alpha_bar`.
    pub lower_c: f64,
    /// All errors vanished identically (degenerate contract); fits skipped.
    pub degenerate: bool,
}

/// Convergence report: rows, certified reference, and fitted envelopes.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// Per-`n` rows, ascending in `n`.
    pub rows: Vec<ConvergenceRow>,
    /// Certified reference price.
    pub reference: ReferencePrice,
    /// Fitted envelope data.
    pub fits: EnvelopeFits,
}

/// Validates a period schedule: nonempty, strictly increasing, with
/// `64 <= n <= 2^15`.
pub fn validate_schedule(schedule: &[usize]) -> Result<(), StudyError> {
    if schedule.is_empty() {
        return Err(StudyError::InvalidSchedule { reason: "schedule is empty" });
    }
    let mut prev = 0usize;
    for &n in schedule {
        if n <= prev {
            return Err(StudyError::InvalidSchedule { reason: "schedule must be strictly increasing" });
        }
        prev = n;
    }
    if schedule[0] < 64 {
        return Err(StudyError::InvalidSchedule { reason: "smallest n must be >= 64" });
    }
    if *schedule.last().unwrap() > (1 << 15) {
        return Err(StudyError::InvalidSchedule { reason: "largest n must be <= 2^15" });
    }
    Ok(())
}

/// Runs the convergence study: prices the walk at every `n` in the
/// schedule, certifies a reference, and fits the error envelopes.
///
/// The schedule must be strictly increasing with `64 <= n <= 2^15`; the
/// reference must certify at `tol` or the run aborts.
pub fn run_convergence(
    model: &MarketModel,
    schedule: &[usize],
    tol: f64,
) -> Result<ConvergenceReport, StudyError> {
    validate_schedule(schedule)?;
    let reference = reference_price(model, tol)?;
    let mut prices = Vec::with_capacity(schedule.len());
    for &n in schedule {
        let spec = LatticeSpec::paper_walk(n);
        prices.push((n, price_american(model, &spec)?.price));
    }
    convergence_report_from_prices(model, &prices, reference)
}

/// Assembles a convergence report from precomputed `(n, price)` pairs and a
/// certified reference. Used by parallel drivers; [`run_convergence`] is
/// the sequential form.
pub fn convergence_report_from_prices(
    model: &MarketModel,
    prices: &[(usize, f64)],
    reference: ReferencePrice,
) -> Result<ConvergenceReport, StudyError> {
    let schedule: Vec<usize> = prices.iter().map(|&(n, _)| n).collect();
    validate_schedule(&schedule)?;
    let rows: Vec<ConvergenceRow> = prices
        .iter()
        .map(|&(n, price)| ConvergenceRow {
            n,
            price,
            error: price - reference.price,
            lnn: libm::log(n as f64),
        })
        .collect();
    let fits = fit_envelopes(&rows, Regime::of(model), reference.tol);
    Ok(ConvergenceReport { rows, reference, fits })
}

/// Fits slope and envelope constants for rows in a given regime.
pub fn fit_envelopes(rows: &[ConvergenceRow], regime: Regime, tol: f64) -> EnvelopeFits {
    let alpha = regime.alpha();
    let alpha_bar = regime.alpha_bar();
    let degenerate = rows.iter().all(|r| r.error == 0.0);
    if degenerate {
        return EnvelopeFits {
            regime,
            alpha,
            alpha_bar,
            slope_loglog: None,
            excluded_from_slope: rows.iter().map(|r| r.n).collect(),
            upper_c: 0.0,
            lower_c: 0.0,
            degenerate,
        };
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = Vec::new();
    for row in rows {
        if libm::fabs(row.error) > 10.0 * tol {
            xs.push(row.lnn);
            ys.push(libm::log(libm::fabs(row.error)));
        } else {
            excluded.push(row.n);
        }
    }
    let slope = linear_fit(&xs, &ys).map(|(s, _)| s);
    let mut upper_c: f64 = 0.0;
    let mut lower_c: f64 = 0.0;
    for row in rows {
        let n = row.n as f64;
        upper_c = upper_c.max(row.error.max(0.0) * n / libm::pow(row.lnn, alpha));
        lower_c = lower_c.max((-row.error).max(0.0) * n / libm::pow(row.lnn, alpha_bar));
    }
    EnvelopeFits {
        regime,
        alpha,
        alpha_bar,
        slope_loglog: slope,
        excluded_from_slope: excluded,
        upper_c,
        lower_c,
        degenerate,
    }
}

/// One row of a stopping-rule study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingRow {
    /// Period count.
    pub n: usize,
    /// Step `h = T/n`.
    pub h: f64,
    /// Stopping-rule value.
    pub value_tau: f64,
    /// `P(n) - value_tau` (nonnegative: the rule is one admissible
    /// stopping time).
    pub gap_to_lattice: f64,
    /// `E[(T - tau - h)^{-1/2} 1{tau <= T - 2h}]`.
    pub tail_expectation: f64,
    /// `|ln h|^beta`.
    pub lnh_beta: f64,
}

/// Boundedness checks attached to a stopping study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingChecks {
    /// Every gap is nonnegative (up to `1e-12 K`).
    pub gaps_nonnegative: bool,
    /// `max/min` of `tail_expectation / |ln h|^beta` across rows.
    pub tail_quotient_ratio: f64,
    /// `max/min` of `gap * n / (ln n)^beta` across rows.
    pub gap_quotient_ratio: f64,
}

/// Stopping-rule study over a schedule of period counts.
#[derive(Debug, Clone)]
pub struct StoppingStudy {
    /// Per-`n` rows, ascending in `n`.
    pub rows: Vec<StoppingRow>,
    /// Regime used for `beta`.
    pub regime: Regime,
    /// Tail exponent `beta`.
    pub beta: f64,
    /// Boundedness checks.
    pub checks: StoppingChecks,
}

/// Runs the stopping-rule study against an oracle boundary.
pub fn run_stopping_study(
    model: &MarketModel,
    schedule: &[usize],
    boundary: &BoundaryCurve,
) -> Result<StoppingStudy, StudyError> {
    validate_schedule(schedule)?;
    let mut rows = Vec::with_capacity(schedule.len());
    for &n in schedule {
        rows.push(stopping_row(model, n, boundary)?);
    }
    Ok(assemble_stopping_study(model, rows))
}

/// Computes a single stopping-study row. Exposed for parallel drivers.
pub fn stopping_row(
    model: &MarketModel,
    n: usize,
    boundary: &BoundaryCurve,
) -> Result<StoppingRow, StudyError> {
    let spec = LatticeSpec::paper_walk(n);
    let sv = stopping_rule_value(model, &spec, boundary)?;
    let price = price_american(model, &spec)?.price;
    let h = spec.step_years(model);
    let regime = Regime::of(model);
    Ok(StoppingRow {
        n,
        h,
        value_tau: sv.value,
        gap_to_lattice: price - sv.value,
        tail_expectation: sv.tail_expectation,
        lnh_beta: libm::pow(libm::fabs(libm::log(h)), regime.beta()),
    })
}

/// Assembles rows (already ascending in `n`) into a study with checks.
pub fn assemble_stopping_study(model: &MarketModel, rows: Vec<StoppingRow>) -> StoppingStudy {
    let regime = Regime::of(model);
    let beta = regime.beta();
    let gaps_nonnegative = rows.iter().all(|r| r.gap_to_lattice >= -1e-12 * model.k());
    let tail_quotient_ratio = band_ratio(rows.iter().map(|r| r.tail_expectation / r.lnh_beta));
    let gap_quotient_ratio = band_ratio(
        rows.iter()
            .map(|r| r.gap_to_lattice * r.n as f64 / libm::pow(libm::log(r.n as f64), beta)),
    );
    StoppingStudy {
        rows,
        regime,
        beta,
        checks: StoppingChecks { gaps_nonnegative, tail_quotient_ratio, gap_quotient_ratio },
    }
}

/// `max/min` over strictly positive values; infinity when any value is
/// nonpositive, NaN-safe.
fn band_ratio<I: Iterator<Item = f64>>(values: I) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for v in values {
        if v.is_nan() || v <= 0.0 {
            return f64::INFINITY;
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == f64::INFINITY {
        return f64::INFINITY;
    }
    hi / lo
}

/// Near-maturity boundary-asymptotics fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFit {
    /// Regime used for the comparison scale.
    pub regime: Regime,
    /// OLS exponent of `ln(btilde(0) - btilde(t))` against `ln t`.
    pub exponent: f64,
    /// `max` over the window of `(btilde(0) - btilde(t)) / psi(t)` with the
    /// regime scale `psi`.
    pub c_bound: f64,
    /// Same constant computed on the window with its upper end halved.
    pub c_bound_half_window: f64,
    /// Extrapolated maturity limit `btilde(0+)`.
    pub maturity_limit: f64,
    /// Window of times to maturity used.
    pub window: (f64, f64),
    /// Number of layers entering the fit.
    pub samples_used: usize,
}

/// Fits the near-maturity boundary asymptotics on the window
/// `[dt, 0.1 T]` of a solved surface. Requires at least 10 resolvable
/// layers in the window.
pub fn run_boundary_asymptotics(
    model: &MarketModel,
    sol: &PdeSolution,
) -> Result<BoundaryFit, StudyError> {
    let regime = Regime::of(model);
    let t_hi = 0.1 * model.t();
    let all: Vec<(f64, f64)> = sol.boundary_samples().collect();
    if all.is_empty() {
        return Err(StudyError::WindowTooSmall { found: 0, needed: 10 });
    }
    let b0 = estimate_maturity_limit(&all, regime, model.t());

    let mut ln_t = Vec::new();
    let mut ln_gap = Vec::new();
    let mut c_full: f64 = 0.0;
    let mut c_half: f64 = 0.0;
    let mut t_lo = f64::INFINITY;
    for &(t, b) in all.iter().filter(|&&(t, _)| t <= t_hi) {
        let gap = b0 - b;
        if gap <= 0.0 {
            continue;
        }
        t_lo = t_lo.min(t);
        ln_t.push(libm::log(t));
        ln_gap.push(libm::log(gap));
        let c = gap / psi(t, regime);
        c_full = c_full.max(c);
        if t <= 0.5 * t_hi {
            c_half = c_half.max(c);
        }
    }
    if ln_t.len() < 10 {
        return Err(StudyError::WindowTooSmall { found: ln_t.len(), needed: 10 });
    }
    let (exponent, _) = linear_fit(&ln_t, &ln_gap)
        .ok_or(StudyError::WindowTooSmall { found: ln_t.len(), needed: 10 })?;
    Ok(BoundaryFit {
        regime,
        exponent,
        c_bound: c_full,
        c_bound_half_window: c_half,
        maturity_limit: b0,
        window: (t_lo, t_hi),
        samples_used: ln_t.len(),
    })
}
