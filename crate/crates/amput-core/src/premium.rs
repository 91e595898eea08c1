//! Early-exercise premium as a time integral of the discounted generator of
//! the payoff over the exercise region.
//!
//! The premium at time-to-maturity `t` and log-price `x` is
//!
//! ```text
//! premium(t, x) = int_0^t e^{-r (t-s)} E[(rK - d e^Z) 1{Z <= btilde(s)}] ds,
//! Z ~ Normal(x + mu (t-s), sigma^2 (t-s)),
//! ```
//!
//! where the inner expectation is the Gaussian convolution of
//! `-(A - r) phi = rK - d e^y` against the exercise indicator and reduces
//! in closed form to two normal-cdf terms. The boundary curve comes from
//! the finite-difference oracle, keeping this check independent of the
//! lattice under test. American value = European value + premium.

use core::fmt;

use crate::boundary::BoundaryCurve;
use crate::math::{normal_cdf, GaussLegendre};
use crate::model::MarketModel;

/// Points per quadrature panel.
const PANEL_POINTS: usize = 32;

/// Default number of panels for the time integral.
pub const DEFAULT_RESOLUTION: usize = 64;

/// Premium evaluation errors.
#[derive(Debug, Clone, PartialEq)]
pub enum PremiumError {
    /// Fewer panels than the supported floor of 8.
    ResolutionTooLow { resolution: usize },
    /// The boundary curve does not cover the integration interval.
    BoundaryTooShort { needed: f64, covered: f64 },
}

impl fmt::Display for PremiumError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PremiumError::ResolutionTooLow { resolution } => {
                write!(f, "quadrature resolution {resolution} below the minimum of 8 panels")
            }
            PremiumError::BoundaryTooShort { needed, covered } => {
                write!(f, "boundary covers [0, {covered}] but [0, {needed}] is required")
            }
        }
    }
}

/// Inputs to the premium quadrature.
#[derive(Debug, Clone, Copy)]
pub struct PremiumInput<'a> {
    /// Market and contract parameters.
    pub model: &'a MarketModel,
    /// Exercise boundary `btilde` over time to maturity.
    pub boundary: &'a BoundaryCurve,
    /// Number of Gauss-Legendre panels for the time integral.
    pub resolution: usize,
}

/// Generator of the payoff, `(A - r) phi`, at log-price `x`.
///
/// Below the strike `phi = K - e^x` is smooth and the terms collapse to
/// `d e^x - r K`; above the strike `phi = 0`. At `x = ln K` the left limit
/// `dK - rK` is returned.
pub fn generator_on_payoff(model: &MarketModel, x: f64) -> f64 {
    if model.k() == 0.0 {
        return 0.0;
    }
    let ln_k = libm::log(model.k());
    if x > ln_k {
        0.0
    } else if x == ln_k {
        (model.d() - model.r()) * model.k()
    } else {
        model.d() * libm::exp(x) - model.r() * model.k()
    }
}

/// Boundary hazard coefficient `gamma(t) = -(A - r) phi(btilde(t))
/// = rK - d e^{btilde(t)}`.
///
/// Nonnegative for a consistent boundary; a negative result signals a
/// boundary above `ln(rK/d)` and is returned unclamped.
pub fn gamma_of_t(model: &MarketModel, boundary: &BoundaryCurve, t: f64) -> f64 {
    model.r() * model.k() - model.d() * libm::exp(boundary.btilde(t))
}

/// Early-exercise premium at time-to-maturity `eval_ttm` and log-price `x`
/// by composite Gauss-Legendre quadrature of the closed-form convolution.
pub fn premium_quadrature(
    input: &PremiumInput<'_>,
    eval_ttm: f64,
    x: f64,
) -> Result<f64, PremiumError> {
    if input.resolution < 8 {
        return Err(PremiumError::ResolutionTooLow { resolution: input.resolution });
    }
    let model = input.model;
    if model.k() == 0.0 || eval_ttm <= 0.0 {
        return Ok(0.0);
    }
    let covered = input.boundary.t_max();
    if covered < eval_ttm * (1.0 - 1e-9) {
        return Err(PremiumError::BoundaryTooShort { needed: eval_ttm, covered });
    }

    let r = model.r();
    let d = model.d();
    let k = model.k();
    let mu = model.mu();
    let sigma = model.sigma();
    let rule = GaussLegendre::new(PANEL_POINTS);
    let integrand = |s: f64| {
        let theta = eval_ttm - s;
        let vol = sigma * libm::sqrt(theta);
        let b = input.boundary.btilde(s);
        let z1 = (b - x - mu * theta) / vol;
        let z2 = z1 - vol;
        let rebate = r * k * normal_cdf(z1);
        let carry = d * libm::exp(x + (mu + 0.5 * sigma * sigma) * theta) * normal_cdf(z2);
        libm::exp(-r * theta) * (rebate - carry)
    };
    Ok(rule.integrate_composite(0.0, eval_ttm, input.resolution, integrand))
}
