//! Finite-difference reference solver for the parabolic variational
//! inequality satisfied by the American put value function
//! `max[-dU/dt + (A - r)U, phi - U] = 0`, `U(0, .) = phi`,
//! in the log-price coordinate with `A = (sigma^2/2) d^2/dx^2 + mu d/dx`
//! and `t` the time to maturity.
//!
//! Discretisation: uniform grid in `x` with the strike on a node,
//! Crank-Nicolson in time with a Rannacher start (the first four steps are
//! taken as halved backward-Euler substeps to damp the payoff-kink
//! oscillation). The per-step linear complementarity problem is solved by
//! a direct Brennan-Schwartz sweep — exact here because the exercise
//! region is a half-line per layer — or by projected SOR. Dirichlet data:
//! `U = phi` at the lower edge (deep in the exercise region) and the
//! European tail value at the upper edge.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::model::{MarketModel, ModelError};

/// Residual target for the per-layer complementarity solve, relative to K.
pub const LCP_TOLERANCE_REL: f64 = 1e-10;

/// Boundary localisation threshold on `U - phi`, relative to K.
pub const CONTACT_TOLERANCE_REL: f64 = 1e-10;

/// Per-layer LCP solver choice.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LcpSolver {
    /// Direct double-sweep solve; exact when the contact set is a lower
    /// interval.
    #[default]
    BrennanSchwartz,
    /// Projected successive over-relaxation.
    Psor {
        /// Relaxation factor.
        omega: f64,
    },
}

/// Options for [`solve_vi_with`].
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Retain the full value surface (needed by [`PdeSolution::value_at`]).
    pub store_surface: bool,
    /// LCP solver.
    pub solver: LcpSolver,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { store_surface: false, solver: LcpSolver::BrennanSchwartz }
    }
}

/// Errors from the finite-difference solver.
#[derive(Debug, Clone, PartialEq)]
pub enum PdeError {
    /// Grid parameters below the supported resolution.
    InvalidGrid { reason: &'static str },
    /// Projected SOR failed to reach the residual target.
    NonConvergence { layer: usize, iterations: usize },
    /// The requested point lies outside the grid.
    OutOfDomain { t: f64, x: f64 },
    /// `value_at` needs the surface, which was not stored.
    SurfaceNotStored,
    /// Dual-oracle certification failed: both estimates and their gap.
    CertificationFailed { lattice_estimate: f64, pde_estimate: f64, gap: f64, tol: f64 },
    /// Tolerance below the supported floor.
    InvalidTolerance { tol: f64, floor: f64 },
    /// Propagated model error.
    Model(ModelError),
}

impl fmt::Display for PdeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PdeError::InvalidGrid { reason } => write!(f, "invalid grid: {reason}"),
            PdeError::NonConvergence { layer, iterations } => {
                write!(f, "relaxation did not converge at layer {layer} after {iterations} sweeps")
            }
            PdeError::OutOfDomain { t, x } => write!(f, "point (t={t}, x={x}) outside the grid"),
            PdeError::SurfaceNotStored => write!(f, "value surface was not stored; re-solve with store_surface"),
            PdeError::CertificationFailed { lattice_estimate, pde_estimate, gap, tol } => write!(
                f,
                "reference certification failed: lattice {lattice_estimate} vs pde {pde_estimate}, gap {gap} > tol {tol}"
            ),
            PdeError::InvalidTolerance { tol, floor } => {
                write!(f, "tolerance {tol} below floor {floor}")
            }
            PdeError::Model(e) => write!(f, "model error: {e}"),
        }
    }
}

impl From<ModelError> for PdeError {
    fn from(e: ModelError) -> Self {
        PdeError::Model(e)
    }
}

/// Near-boundary data recorded per layer for smooth-fit diagnostics.
#[derive(Debug, Clone, Copy)]
struct SmoothFitSample {
    btilde: f64,
    /// Values at the first two continuation nodes.
    u: [f64; 2],
}

/// Finite-difference solution of the variational inequality.
#[derive(Debug, Clone)]
pub struct PdeSolution {
    model: MarketModel,
    m: usize,
    n_t: usize,
    x_min: f64,
    dx: f64,
    dt: f64,
    btilde: Vec<Option<f64>>,
    smooth_fit: Vec<Option<SmoothFitSample>>,
    final_layer: Vec<f64>,
    surface: Option<Vec<Vec<f64>>>,
    /// Largest complementarity violation observed over all substeps and
    /// interior nodes, in currency units.
    pub max_complementarity_residual: f64,
    /// Total projected-SOR sweeps (0 for the direct solver).
    pub psor_sweeps: usize,
    /// LCP residual target used, in currency units.
    pub lcp_tolerance: f64,
}

impl PdeSolution {
    /// Model the surface was solved for.
    #[inline]
    pub fn model(&self) -> &MarketModel {
        &self.model
    }

    /// Space step.
    #[inline]
    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Time step.
    #[inline]
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of space intervals.
    #[inline]
    pub fn space_points(&self) -> usize {
        self.m
    }

    /// Number of time layers (excluding the initial one).
    #[inline]
    pub fn time_layers(&self) -> usize {
        self.n_t
    }

    /// Lower edge of the grid.
    #[inline]
    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    /// Grid coordinate of node `i`.
    #[inline]
    pub fn x_at(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    /// Boundary location at layer `l` (time to maturity `l * dt`), if the
    /// layer has a resolved boundary.
    #[inline]
    pub fn btilde_at_layer(&self, l: usize) -> Option<f64> {
        self.btilde.get(l).copied().flatten()
    }

    /// Resolved `(time_to_maturity, btilde)` samples, ascending in time.
    pub fn boundary_samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.btilde
            .iter()
            .enumerate()
            .filter_map(move |(l, b)| b.map(|b| (l as f64 * self.dt, b)))
    }

    /// Value layer at maturity distance `T` (the priced layer).
    #[inline]
    pub fn final_layer(&self) -> &[f64] {
        &self.final_layer
    }

    /// Price readout `U(T, ln S0)`, interpolated along the final layer.
    pub fn price_at_spot(&self) -> f64 {
        let x = libm::log(self.model.s0());
        interp_layer(&self.final_layer, self.x_min, self.dx, x)
    }

    /// Bilinear interpolation on the stored surface; exact at grid points.
    ///
    /// `t` is the time to maturity. Requires the surface to have been
    /// stored and the point to lie inside the grid.
    pub fn value_at(&self, t: f64, x: f64) -> Result<f64, PdeError> {
        let surface = self.surface.as_ref().ok_or(PdeError::SurfaceNotStored)?;
        let t_max = self.n_t as f64 * self.dt;
        let x_max = self.x_at(self.m);
        if !(0.0..=t_max * (1.0 + 1e-12)).contains(&t) || x < self.x_min || x > x_max {
            return Err(PdeError::OutOfDomain { t, x });
        }
        let (l0, wt) = locate(t, self.dt, self.n_t);
        let (i0, wx) = locate(x - self.x_min, self.dx, self.m);
        let lower = &surface[l0];
        let upper = &surface[l0 + 1];
        let v00 = lower[i0];
        let v01 = lower[i0 + 1];
        let v10 = upper[i0];
        let v11 = upper[i0 + 1];
        Ok((1.0 - wt) * ((1.0 - wx) * v00 + wx * v01) + wt * ((1.0 - wx) * v10 + wx * v11))
    }

    /// Maximum relative deviation of the continuation-side space slope from
    /// `phi'(btilde) = -e^{btilde}` over layers with time to maturity in
    /// `[t_lo, t_hi]`.
    ///
    /// The slope is the first-order difference over the first two
    /// continuation nodes, so the deviation shrinks like the space step.
    /// Layers without a resolved boundary contribute nothing; with no
    /// boundary anywhere (e.g. a zero strike) the deviation is zero.
    pub fn smooth_fit_check(&self, t_lo: f64, t_hi: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for (l, sample) in self.smooth_fit.iter().enumerate() {
            let t = l as f64 * self.dt;
            if t < t_lo || t > t_hi {
                continue;
            }
            if let Some(s) = sample {
                let slope = (s.u[1] - s.u[0]) / self.dx;
                let target = -libm::exp(s.btilde);
                let dev = libm::fabs(slope - target) / libm::exp(s.btilde);
                worst = worst.max(dev);
            }
        }
        worst
    }
}

/// Fractional grid location with snapping at nodes.
fn locate(offset: f64, step: f64, max_index: usize) -> (usize, f64) {
    let raw = offset / step;
    let mut idx = libm::floor(raw) as isize;
    if idx < 0 {
        idx = 0;
    }
    let mut i = idx as usize;
    if i >= max_index {
        i = max_index - 1;
    }
    let mut w = raw - i as f64;
    // Snap to exact nodes so grid points reproduce stored values bit-for-bit.
    if w.abs() < 1e-9 {
        w = 0.0;
    } else if (w - 1.0).abs() < 1e-9 {
        w = 1.0;
    }
    (i, w)
}

/// Linear interpolation along one stored layer.
fn interp_layer(layer: &[f64], x_min: f64, dx: f64, x: f64) -> f64 {
    let (i, w) = locate(x - x_min, dx, layer.len() - 1);
    (1.0 - w) * layer[i] + w * layer[i + 1]
}

/// Solves the variational inequality on an `m x n_t` grid spanning
/// `width * sigma * sqrt(T)` beyond the strike and spot on both sides.
///
/// `m >= 200`, `n_t >= 200`, `width >= 5`. See [`solve_vi_with`] for
/// solver options.
pub fn solve_vi(
    model: &MarketModel,
    m: usize,
    n_t: usize,
    width: f64,
) -> Result<PdeSolution, PdeError> {
    solve_vi_with(model, m, n_t, width, SolveOptions::default())
}

/// [`solve_vi`] with explicit solver options.
pub fn solve_vi_with(
    model: &MarketModel,
    m: usize,
    n_t: usize,
    width: f64,
    options: SolveOptions,
) -> Result<PdeSolution, PdeError> {
    if m < 200 {
        return Err(PdeError::InvalidGrid { reason: "m must be >= 200" });
    }
    if n_t < 200 {
        return Err(PdeError::InvalidGrid { reason: "n_t must be >= 200" });
    }
    if width.is_nan() || width < 5.0 {
        return Err(PdeError::InvalidGrid { reason: "width must be >= 5 sigma sqrt(T)" });
    }

    let dt = model.t() / n_t as f64;

    // Degenerate contract: the value surface is identically zero.
    if model.k() == 0.0 {
        let half = width * model.sigma() * libm::sqrt(model.t());
        let x_min = libm::log(model.s0()) - half;
        let dx = 2.0 * half / m as f64;
        return Ok(PdeSolution {
            model: *model,
            m,
            n_t,
            x_min,
            dx,
            dt,
            btilde: vec![None; n_t + 1],
            smooth_fit: vec![None; n_t + 1],
            final_layer: vec![0.0; m + 1],
            surface: options.store_surface.then(|| vec![vec![0.0; m + 1]; n_t + 1]),
            max_complementarity_residual: 0.0,
            psor_sweeps: 0,
            lcp_tolerance: 0.0,
        });
    }

    let ln_k = libm::log(model.k());
    let ln_s0 = libm::log(model.s0());
    let pad = width * model.sigma() * libm::sqrt(model.t());
    let lo = ln_s0.min(ln_k) - pad;
    let hi = ln_s0.max(ln_k) + pad;
    let dx = (hi - lo) / m as f64;
    // Shift the grid so the payoff kink sits exactly on a node.
    let i_k = libm::round((ln_k - lo) / dx) as usize;
    let x_min = ln_k - i_k as f64 * dx;

    let sigma2 = model.sigma() * model.sigma();
    let alpha = 0.5 * sigma2 / (dx * dx);
    let beta = 0.5 * model.mu() / dx;
    // Rows of the generator `L = A - r`.
    let l_lo = alpha - beta;
    let l_dg = -2.0 * alpha - model.r();
    let l_up = alpha + beta;
    // Implicit matrix `T = I - (dt/2) L`; backward-Euler substeps of size
    // dt/2 share the same matrix.
    let t_lo = -0.5 * dt * l_lo;
    let t_dg = 1.0 - 0.5 * dt * l_dg;
    let t_up = -0.5 * dt * l_up;

    let lcp_tol = LCP_TOLERANCE_REL * model.k();
    let contact_tol = CONTACT_TOLERANCE_REL * model.k();

    let phi: Vec<f64> = (0..=m).map(|i| (model.k() - libm::exp(x_min + i as f64 * dx)).max(0.0)).collect();
    let x_max = x_min + m as f64 * dx;
    let spot_max = libm::exp(x_max);

    let mut u = phi.clone();
    let mut btilde = Vec::with_capacity(n_t + 1);
    let mut smooth_fit = Vec::with_capacity(n_t + 1);
    // The initial layer coincides with the obstacle; the boundary is
    // undefined at zero time to maturity.
    btilde.push(None);
    smooth_fit.push(None);
    let mut surface = options.store_surface.then(|| {
        let mut s = Vec::with_capacity(n_t + 1);
        s.push(u.clone());
        s
    });

    let mut rhs = vec![0.0f64; m + 1];
    let mut bhat = vec![0.0f64; m + 1];
    let mut dhat = vec![0.0f64; m + 1];
    let mut max_residual: f64 = 0.0;
    let mut psor_sweeps = 0usize;

    for layer in 0..n_t {
        let rannacher = layer < 4;
        let substeps = if rannacher { 2 } else { 1 };
        for sub in 0..substeps {
            let t_new = if rannacher {
                (layer as f64 + 0.5 * (sub as f64 + 1.0)) * dt
            } else {
                (layer as f64 + 1.0) * dt
            };
            // Interior right-hand side: old layer for backward Euler,
            // (I + dt/2 L) u for Crank-Nicolson.
            if rannacher {
                rhs[1..m].copy_from_slice(&u[1..m]);
            } else {
                for i in 1..m {
                    rhs[i] = u[i] + 0.5 * dt * (l_lo * u[i - 1] + l_dg * u[i] + l_up * u[i + 1]);
                }
            }
            // Dirichlet data at the new time.
            let u_left = phi[0];
            let u_right = model.european_put_for_spot(spot_max, t_new)?;
            u[0] = u_left;
            u[m] = u_right;

            match options.solver {
                LcpSolver::BrennanSchwartz => {
                    // Eliminate the upper diagonal from the continuation
                    // side; the right Dirichlet value folds into the last
                    // interior row.
                    bhat[m - 1] = t_dg;
                    dhat[m - 1] = rhs[m - 1] - t_up * u_right;
                    for i in (1..m - 1).rev() {
                        let f = t_up / bhat[i + 1];
                        bhat[i] = t_dg - f * t_lo;
                        dhat[i] = rhs[i] - f * dhat[i + 1];
                    }
                    // Project onto the obstacle while substituting upward
                    // from the exercise side.
                    for i in 1..m {
                        let cand = (dhat[i] - t_lo * u[i - 1]) / bhat[i];
                        u[i] = cand.max(phi[i]);
                    }
                }
                LcpSolver::Psor { omega } => {
                    let sweeps = psor(
                        &mut u,
                        &phi,
                        &rhs,
                        (t_lo, t_dg, t_up),
                        m,
                        omega,
                        lcp_tol,
                        20_000,
                    )
                    .map_err(|iterations| PdeError::NonConvergence { layer, iterations })?;
                    psor_sweeps += sweeps;
                }
            }

            // Complementarity residual of this substep over interior nodes.
            for i in 1..m {
                let excess = t_lo * u[i - 1] + t_dg * u[i] + t_up * u[i + 1] - rhs[i];
                let gap = u[i] - phi[i];
                let violation = libm::fabs(excess.min(gap));
                max_residual = max_residual.max(violation);
            }
        }
        let (b, s) = locate_boundary(&u, &phi, x_min, dx, contact_tol, i_k);
        btilde.push(b);
        smooth_fit.push(s);
        if let Some(sf) = surface.as_mut() {
            sf.push(u.clone());
        }
    }

    Ok(PdeSolution {
        model: *model,
        m,
        n_t,
        x_min,
        dx,
        dt,
        btilde,
        smooth_fit,
        final_layer: u,
        surface,
        max_complementarity_residual: max_residual,
        psor_sweeps,
        lcp_tolerance: lcp_tol,
    })
}

/// Projected SOR sweeps until the projected residual is below `tol`.
///
/// Returns the sweep count, or `Err(iterations)` on hitting the cap.
#[allow(clippy::too_many_arguments)]
fn psor(
    u: &mut [f64],
    phi: &[f64],
    rhs: &[f64],
    (t_lo, t_dg, t_up): (f64, f64, f64),
    m: usize,
    omega: f64,
    tol: f64,
    max_sweeps: usize,
) -> Result<usize, usize> {
    // Warm start from the previous layer, projected onto the obstacle.
    for i in 1..m {
        if u[i] < phi[i] {
            u[i] = phi[i];
        }
    }
    for sweep in 1..=max_sweeps {
        for i in 1..m {
            let gs = (rhs[i] - t_lo * u[i - 1] - t_up * u[i + 1]) / t_dg;
            u[i] = (u[i] + omega * (gs - u[i])).max(phi[i]);
        }
        let mut residual: f64 = 0.0;
        for i in 1..m {
            let excess = t_lo * u[i - 1] + t_dg * u[i] + t_up * u[i + 1] - rhs[i];
            let gap = u[i] - phi[i];
            residual = residual.max(libm::fabs(excess.min(gap)));
        }
        if residual <= tol {
            return Ok(sweep);
        }
    }
    Err(max_sweeps)
}

/// Locates the exercise boundary on one layer: the largest node below the
/// strike with `u - phi <= tol`, refined by linear interpolation of
/// `u - phi`, plus the smooth-fit stencil at the first two continuation
/// nodes.
///
/// The scan is restricted to nodes where the obstacle is active
/// (`x < ln K`): above the strike both `u` and `phi` decay to zero, so an
/// unrestricted scan would mistake the far tail for contact.
fn locate_boundary(
    u: &[f64],
    phi: &[f64],
    x_min: f64,
    dx: f64,
    tol: f64,
    i_strike: usize,
) -> (Option<f64>, Option<SmoothFitSample>) {
    let m = u.len() - 1;
    let mut i_star = None;
    for i in (0..i_strike.min(m)).rev() {
        if u[i] - phi[i] <= tol {
            i_star = Some(i);
            break;
        }
    }
    let Some(i) = i_star else { return (None, None) };
    if i + 2 > m {
        // Contact reaching the upper edge: no usable continuation side.
        return (None, None);
    }
    let w0 = (u[i] - phi[i]).max(0.0);
    let w1 = u[i + 1] - phi[i + 1];
    let x_i = x_min + i as f64 * dx;
    let b = if w1 > w0 { x_i + dx * w0 / (w1 - w0) } else { x_i };
    let sample = SmoothFitSample { btilde: b, u: [u[i + 1], u[i + 2]] };
    (Some(b), Some(sample))
}

/// Certified reference price from two independent oracles.
#[derive(Debug, Clone, Copy)]
pub struct ReferencePrice {
    /// Certified price (the extrapolated finite-difference estimate).
    pub price: f64,
    /// Extrapolated lattice estimate (oracle A).
    pub lattice_estimate: f64,
    /// Extrapolated finite-difference estimate (oracle B).
    pub pde_estimate: f64,
    /// `|A - B|`.
    pub gap: f64,
    /// Certification tolerance used.
    pub tol: f64,
}

/// Reference periods for the lattice oracle.
const REFERENCE_N: usize = 1 << 15;

/// Certifies a reference price by agreement of two independent oracles.
///
/// Oracle A averages lattice prices over consecutive periods at `2^15` and
/// `2^15 + 1` (cancelling the odd/even oscillation) and Richardson-
/// extrapolates the averages across a doubling to `2^16`. Oracle B solves
/// the variational inequality at two resolutions and extrapolates the
/// second-order error. The certified price is oracle B's extrapolate; if
/// the oracles disagree by more than `tol` the call fails with both values
/// and the gap.
///
/// Requires `tol >= 1e-6 * K`.
pub fn reference_price(model: &MarketModel, tol: f64) -> Result<ReferencePrice, PdeError> {
    let floor = 1e-6 * model.k();
    if tol.is_nan() || tol < floor {
        return Err(PdeError::InvalidTolerance { tol, floor });
    }
    if model.k() == 0.0 {
        return Ok(ReferencePrice { price: 0.0, lattice_estimate: 0.0, pde_estimate: 0.0, gap: 0.0, tol });
    }

    let lattice_price = |n: usize| -> Result<f64, PdeError> {
        let spec = crate::lattice::LatticeSpec::paper_walk(n);
        crate::lattice::price_american(model, &spec)
            .map(|r| r.price)
            .map_err(|_| PdeError::InvalidGrid { reason: "lattice oracle failed" })
    };
    let a1 = 0.5 * (lattice_price(REFERENCE_N)? + lattice_price(REFERENCE_N + 1)?);
    let a2 = 0.5 * (lattice_price(2 * REFERENCE_N)? + lattice_price(2 * REFERENCE_N + 1)?);
    // Averaged errors decay like 1/n; extrapolate across the doubling.
    let lattice_estimate = 2.0 * a2 - a1;

    let b1 = solve_vi(model, 4000, 4000, 8.0)?.price_at_spot();
    let b2 = solve_vi(model, 8000, 8000, 8.0)?.price_at_spot();
    // Second-order scheme: halving both steps quarters the error.
    let pde_estimate = b2 + (b2 - b1) / 3.0;

    let gap = libm::fabs(lattice_estimate - pde_estimate);
    if gap > tol {
        return Err(PdeError::CertificationFailed { lattice_estimate, pde_estimate, gap, tol });
    }
    Ok(ReferencePrice { price: pde_estimate, lattice_estimate, pde_estimate, gap, tol })
}
