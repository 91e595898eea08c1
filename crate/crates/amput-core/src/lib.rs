//! Pricing of the American put under Black-Scholes dynamics with a continuous
//! dividend yield.
//!
//! The crate is organised around two independent pricing routes plus the
//! analysis machinery that compares them:
//!
//! * [`lattice`] — backward induction for the binomial random-walk
//!   approximation `P(n)` of the put price, exercise-boundary extraction,
//!   the one-step discrete generator, and exact evaluation of a
//!   barrier-style stopping rule on the walk.
//! * [`pde`] — a Crank-Nicolson finite-difference solver for the parabolic
//!   variational inequality satisfied by the value function, used as the
//!   independent reference (certified prices, boundary curve, smooth-fit
//!   diagnostics).
//! * [`premium`] — the early-exercise premium as a time integral of the
//!   discounted generator of the payoff over the exercise region.
//! * [`study`] — convergence-rate experiments, stopping-rule studies and
//!   boundary asymptotics fits.
//!
//! The crate is `no_std` (with `alloc`); all floating-point special
//! functions come from `libm` so results are bit-reproducible across
//! platforms. File formats, the CLI, and parallel drivers live in the
//! companion `amput` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod boundary;
pub mod lattice;
pub mod math;
pub mod model;
pub mod pde;
pub mod premium;
pub mod study;

pub use boundary::BoundaryCurve;
pub use lattice::{LatticeResult, LatticeScheme, LatticeSpec};
pub use math::normal_cdf;
pub use model::MarketModel;
pub use pde::PdeSolution;
pub use study::{ConvergenceReport, Regime, StoppingStudy};
