//! Sampled exercise-boundary curves in log-price / time-to-maturity
//! coordinates, with the coordinate change used by the walk.
//!
//! A curve stores samples `(t, btilde(t))` with `t` the time to maturity,
//! plus the extrapolated maturity limit `btilde(0+)`. The boundary of the
//! American put is strictly decreasing in time to maturity and satisfies
//! `btilde(t) <= ln K`.

use alloc::vec::Vec;
use core::fmt;

use crate::model::MarketModel;
use crate::pde::PdeSolution;
use crate::study::Regime;

/// Piecewise-linear exercise boundary `btilde` over time to maturity.
#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    /// `(time_to_maturity, btilde)`, strictly increasing in time.
    samples: Vec<(f64, f64)>,
    /// Extrapolated limit `btilde(0+)` at maturity.
    b0: f64,
}

/// Errors building or evaluating a boundary curve.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryError {
    /// No samples supplied / no resolved boundary layers.
    Empty,
    /// Sample times must be finite, positive and strictly increasing.
    NotSorted,
    /// A sample value is not finite.
    NotFinite,
}

impl fmt::Display for BoundaryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryError::Empty => write!(f, "boundary curve has no samples"),
            BoundaryError::NotSorted => {
                write!(f, "boundary samples must be strictly increasing in time to maturity")
            }
            BoundaryError::NotFinite => write!(f, "boundary samples must be finite"),
        }
    }
}

impl BoundaryCurve {
    /// Builds a curve from `(time_to_maturity, btilde)` samples and an
    /// explicit maturity limit `b0 = btilde(0+)`.
    pub fn from_samples(samples: Vec<(f64, f64)>, b0: f64) -> Result<Self, BoundaryError> {
        if samples.is_empty() {
            return Err(BoundaryError::Empty);
        }
        if !b0.is_finite() {
            return Err(BoundaryError::NotFinite);
        }
        let mut prev = 0.0;
        for &(t, b) in &samples {
            if !(t.is_finite() && b.is_finite()) {
                return Err(BoundaryError::NotFinite);
            }
            if t <= prev {
                return Err(BoundaryError::NotSorted);
            }
            prev = t;
        }
        Ok(Self { samples, b0 })
    }

    /// Builds a curve from the resolved layers of a finite-difference
    /// solution, extrapolating the maturity limit with the
    /// regime-appropriate near-maturity shape.
    pub fn from_pde(sol: &PdeSolution) -> Result<Self, BoundaryError> {
        let samples: Vec<(f64, f64)> = sol
            .boundary_samples()
            .filter(|&(t, _)| t > 0.0)
            .collect();
        if samples.is_empty() {
            return Err(BoundaryError::Empty);
        }
        let regime = Regime::of(sol.model());
        let b0 = estimate_maturity_limit(&samples, regime, sol.model().t());
        Self::from_samples(samples, b0)
    }

    /// Maturity limit `btilde(0+)`.
    #[inline]
    pub fn maturity_limit(&self) -> f64 {
        self.b0
    }

    /// Largest sampled time to maturity.
    #[inline]
    pub fn t_max(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    /// Sampled points, ascending in time to maturity.
    #[inline]
    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    /// Boundary value at time to maturity `t`, by linear interpolation.
    ///
    /// Below the first sample the curve interpolates towards `(0, b0)`;
    /// beyond the last sample it is extended with the last value.
    pub fn btilde(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.b0;
        }
        let (t0, b_first) = self.samples[0];
        if t <= t0 {
            return self.b0 + (b_first - self.b0) * t / t0;
        }
        let last = self.samples.len() - 1;
        if t >= self.samples[last].0 {
            return self.samples[last].1;
        }
        // Binary search for the bracketing segment.
        let mut lo = 0;
        let mut hi = last;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.samples[mid].0 <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (ta, ba) = self.samples[lo];
        let (tb, bb) = self.samples[hi];
        ba + (bb - ba) * (t - ta) / (tb - ta)
    }

    /// Boundary in walk coordinates at calendar time `t`:
    /// `hat_b(t) = (btilde(T - t) - mu t - ln S0) / sigma`.
    pub fn hat_b(&self, model: &MarketModel, t_calendar: f64) -> f64 {
        let ttm = (model.t() - t_calendar).max(0.0);
        (self.btilde(ttm) - model.mu() * t_calendar - libm::log(model.s0())) / model.sigma()
    }
}

/// Extrapolates the maturity limit `btilde(0+)` from the smallest-time
/// samples, using the near-maturity shape `btilde(t) ~ b0 - c psi(t)` with
/// `psi(t) = sqrt(t |ln t|)` when `d <= r` and `psi(t) = sqrt(t)` when
/// `d > r`.
pub fn estimate_maturity_limit(samples: &[(f64, f64)], regime: Regime, t_maturity: f64) -> f64 {
    // Fit close to the singularity, where the asymptotic shape holds; keep
    // at least 10 samples so coarse solves still extrapolate.
    let cutoff = 0.005 * t_maturity;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(t, b) in samples.iter() {
        if t > cutoff && xs.len() >= 10 {
            break;
        }
        xs.push(psi(t, regime));
        ys.push(b);
        if xs.len() >= 48 {
            break;
        }
    }
    match crate::math::linear_fit(&xs, &ys) {
        Some((_, intercept)) => intercept,
        None => samples[0].1,
    }
}

/// Regime-appropriate near-maturity scale.
pub fn psi(t: f64, regime: Regime) -> f64 {
    match regime {
        Regime::DividendAtMostRate => libm::sqrt(t * libm::fabs(libm::log(t))),
        Regime::DividendAboveRate => libm::sqrt(t),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_bad_samples() {
        assert_eq!(BoundaryCurve::from_samples(vec![], 0.0).unwrap_err(), BoundaryError::Empty);
        assert_eq!(
            BoundaryCurve::from_samples(vec![(0.2, 1.0), (0.1, 1.0)], 0.0).unwrap_err(),
            BoundaryError::NotSorted
        );
        assert_eq!(
            BoundaryCurve::from_samples(vec![(0.1, f64::NAN)], 0.0).unwrap_err(),
            BoundaryError::NotFinite
        );
    }

    #[test]
    fn interpolates_linearly_and_extends() {
        let curve =
            BoundaryCurve::from_samples(vec![(0.2, 4.0), (0.4, 3.0), (0.8, 2.0)], 5.0).unwrap();
        assert_eq!(curve.btilde(0.0), 5.0);
        assert!((curve.btilde(0.1) - 4.5).abs() < 1e-15);
        assert_eq!(curve.btilde(0.2), 4.0);
        assert!((curve.btilde(0.3) - 3.5).abs() < 1e-15);
        assert!((curve.btilde(0.6) - 2.5).abs() < 1e-15);
        assert_eq!(curve.btilde(1.5), 2.0);
    }

    #[test]
    fn walk_coordinate_change_matches_formula() {
        let model = MarketModel::new(0.05, 0.03, 0.2, 100.0, 100.0, 1.0).unwrap();
        let curve = BoundaryCurve::from_samples(vec![(0.5, 4.4), (1.0, 4.3)], 4.6).unwrap();
        let t = 0.25;
        let want = (curve.btilde(model.t() - t) - model.mu() * t - libm::log(model.s0()))
            / model.sigma();
        assert_eq!(curve.hat_b(&model, t), want);
    }

    #[test]
    fn maturity_limit_extrapolation_recovers_synthetic_shape() {
        // Samples generated from b0 - c sqrt(t |ln t|) must return b0.
        let b0 = 4.605;
        let c = 0.9;
        let samples: Vec<(f64, f64)> = (1..40)
            .map(|i| {
                let t = 1e-4 * i as f64;
                (t, b0 - c * libm::sqrt(t * libm::fabs(libm::log(t))))
            })
            .collect();
        let got = estimate_maturity_limit(&samples, Regime::DividendAtMostRate, 1.0);
        assert!((got - b0).abs() < 1e-6, "got {got}");
    }
}
