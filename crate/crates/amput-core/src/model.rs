//! Market/contract parameters, payoff transforms, and the closed-form
//! European put used as the analytic baseline.
//!
//! The stock follows `S_t = S0 * exp((r - d - sigma^2/2) t + sigma B_t)`
//! under the pricing measure. Two payoff coordinates are used throughout
//! the crate:
//!
//! * log-price `y`: `phi(y) = (K - e^y)^+`, and
//! * walk coordinate `x` (centred at `ln S0`, scaled by `sigma`):
//!   `g(x) = (K - S0 e^{sigma x})^+ = phi(ln S0 + sigma x)`.

use core::fmt;

use crate::math::normal_cdf;

/// Market and contract parameters with validated invariants.
///
/// `r > 0`, `sigma > 0`, `t > 0`, `s0 > 0`, `k >= 0`, `d >= 0`. A zero
/// strike is admitted as a degenerate contract whose price is identically
/// zero. The drifts `mu = r - d - sigma^2/2` and `mu0 = mu/sigma` are pure
/// functions of the stored fields and are recomputed on demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketModel {
    r: f64,
    d: f64,
    sigma: f64,
    s0: f64,
    k: f64,
    t: f64,
}

/// Validation and domain errors for [`MarketModel`] operations.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// A constructor argument violates a model invariant.
    InvalidParameter { name: &'static str, value: f64 },
    /// `european_put` requires a strictly positive time to maturity.
    NonPositiveRemaining { remaining: f64 },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::InvalidParameter { name, value } => {
                write!(f, "invalid model parameter {name} = {value}")
            }
            ModelError::NonPositiveRemaining { remaining } => {
                write!(f, "time to maturity must be > 0, got {remaining}")
            }
        }
    }
}

fn require(ok: bool, name: &'static str, value: f64) -> Result<(), ModelError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter { name, value })
    }
}

impl MarketModel {
    /// Builds a validated model from rate `r`, dividend yield `d`,
    /// volatility `sigma`, spot `s0`, strike `k`, and maturity `t` (years).
    pub fn new(r: f64, d: f64, sigma: f64, s0: f64, k: f64, t: f64) -> Result<Self, ModelError> {
        require(r > 0.0, "r", r)?;
        require(d >= 0.0, "d", d)?;
        require(sigma > 0.0, "sigma", sigma)?;
        require(s0 > 0.0, "s0", s0)?;
        require(k >= 0.0, "k", k)?;
        require(t > 0.0, "t", t)?;
        Ok(Self { r, d, sigma, s0, k, t })
    }

    /// Interest rate (1/year).
    #[inline]
    pub fn r(&self) -> f64 {
        self.r
    }

    /// Dividend yield (1/year).
    #[inline]
    pub fn d(&self) -> f64 {
        self.d
    }

    /// Volatility (1/sqrt(year)).
    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Spot price.
    #[inline]
    pub fn s0(&self) -> f64 {
        self.s0
    }

    /// Strike.
    #[inline]
    pub fn k(&self) -> f64 {
        self.k
    }

    /// Maturity (years).
    #[inline]
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Log-price drift `mu = r - d - sigma^2/2`.
    #[inline]
    pub fn mu(&self) -> f64 {
        self.r - self.d - 0.5 * self.sigma * self.sigma
    }

    /// Walk-coordinate drift `mu0 = mu / sigma`.
    #[inline]
    pub fn mu0(&self) -> f64 {
        self.mu() / self.sigma
    }

    /// Put payoff in the walk coordinate: `g(x) = (K - S0 e^{sigma x})^+`.
    ///
    /// Total function; exact up to floating arithmetic.
    #[inline]
    pub fn payoff_g(&self, x: f64) -> f64 {
        (self.k - self.s0 * libm::exp(self.sigma * x)).max(0.0)
    }

    /// Put payoff in the log-price coordinate: `phi(y) = (K - e^y)^+`.
    #[inline]
    pub fn payoff_phi(&self, y: f64) -> f64 {
        (self.k - libm::exp(y)).max(0.0)
    }

    /// Closed-form European put value with `remaining` years to maturity.
    ///
    /// Rejects `remaining <= 0`; the `remaining -> 0` limit is `(K - S0)^+`.
    pub fn european_put(&self, remaining: f64) -> Result<f64, ModelError> {
        self.european_put_for_spot(self.s0, remaining)
    }

    /// European put for an arbitrary spot, same contract terms.
    ///
    /// Used for far-field boundary values of the finite-difference solver,
    /// where the relevant spot is a grid point rather than `s0`.
    pub fn european_put_for_spot(&self, spot: f64, remaining: f64) -> Result<f64, ModelError> {
        if remaining.is_nan() || remaining <= 0.0 {
            return Err(ModelError::NonPositiveRemaining { remaining });
        }
        require(spot > 0.0, "spot", spot)?;
        if self.k == 0.0 {
            return Ok(0.0);
        }
        let vol = self.sigma * libm::sqrt(remaining);
        let d1 = (libm::log(spot / self.k) + (self.r - self.d + 0.5 * self.sigma * self.sigma) * remaining) / vol;
        let d2 = d1 - vol;
        let value = self.k * libm::exp(-self.r * remaining) * normal_cdf(-d2)
            - spot * libm::exp(-self.d * remaining) * normal_cdf(-d1);
        // The closed form can round to a tiny negative number deep out of
        // the money; the put value is nonnegative.
        Ok(value.max(0.0))
    }
}
