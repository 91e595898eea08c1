//! Independent reference implementations used as test oracles.
//!
//! Everything here is deliberately brute-force and structurally unrelated to
//! the production code paths in `amput-core`: no recombining lattices, no
//! closed-form cdf shortcuts, `std` math instead of `libm`. These routines
//! exist so the fast implementations can be checked against exhaustive or
//! quadrature-grade answers; they are dev-dependencies only and are never
//! shipped inside the library surface.

use amput_core::MarketModel;

/// Put payoff in the walk coordinate, written out locally.
fn payoff(model: &MarketModel, t: f64, x: f64) -> f64 {
    let mu = model.r() - model.d() - 0.5 * model.sigma() * model.sigma();
    let mu0 = mu / model.sigma();
    (model.k() - model.s0() * (model.sigma() * (mu0 * t + x)).exp()).max(0.0)
}

/// Optimal-stopping value of the n-period walk by exhaustive recursion over
/// the full (non-recombining) path tree.
///
/// Every adapted stopping rule corresponds to a stop/continue decision at
/// each history node; the recursion maximises over all of them, so the
/// result is the exact supremum over stopping times. Exponential in `n`;
/// intended for `n <= ~20`.
pub fn american_price_path_tree(model: &MarketModel, n: u32) -> f64 {
    assert!((1..=24).contains(&n), "path tree oracle needs 1 <= n <= 24");
    let h = model.t() / n as f64;
    let sqrt_h = h.sqrt();
    let disc = (-model.r() * h).exp();
    fn go(model: &MarketModel, n: u32, h: f64, sqrt_h: f64, disc: f64, j: u32, pos: i64) -> f64 {
        let t = j as f64 * h;
        let x = pos as f64 * sqrt_h;
        let exercise = payoff(model, t, x);
        if j == n {
            return exercise;
        }
        let up = go(model, n, h, sqrt_h, disc, j + 1, pos + 1);
        let down = go(model, n, h, sqrt_h, disc, j + 1, pos - 1);
        exercise.max(disc * 0.5 * (up + down))
    }
    go(model, n, h, sqrt_h, disc, 0, 0)
}

/// European value of the n-period walk by direct enumeration of all 2^n
/// terminal nodes of the path tree.
pub fn european_price_path_tree(model: &MarketModel, n: u32) -> f64 {
    assert!((1..=24).contains(&n));
    let h = model.t() / n as f64;
    let sqrt_h = h.sqrt();
    let weight = 0.5f64.powi(n as i32);
    let mut acc = 0.0;
    for path in 0u64..(1u64 << n) {
        let ups = path.count_ones() as i64;
        let pos = 2 * ups - n as i64;
        acc += weight * payoff(model, model.t(), pos as f64 * sqrt_h);
    }
    acc * (-model.r() * model.t()).exp()
}

/// Value and tail expectation of a barrier stopping rule, by enumeration of
/// all 2^n paths of the walk.
///
/// `stop_threshold(j)` gives the barrier tested at grid time `j*h` against
/// the walk position (stop when `x <= threshold`), for `j = 0..=n-2`; if no
/// stop occurs the path runs to maturity. Returns
/// `(E[e^{-r tau} g], E[(T - tau - h)^{-1/2} 1{tau <= T - 2h}])`.
pub fn stopping_rule_paths<F: Fn(usize) -> f64>(
    model: &MarketModel,
    n: u32,
    stop_threshold: F,
) -> (f64, f64) {
    assert!((3..=24).contains(&n));
    let h = model.t() / n as f64;
    let sqrt_h = h.sqrt();
    let weight = 0.5f64.powi(n as i32);
    let mut value = 0.0;
    let mut tail = 0.0;
    for path in 0u64..(1u64 << n) {
        let mut pos: i64 = 0;
        let mut stopped = false;
        for j in 0..=(n as usize - 2) {
            let t = j as f64 * h;
            let x = pos as f64 * sqrt_h;
            if x <= stop_threshold(j) {
                value += weight * (-model.r() * t).exp() * payoff(model, t, x);
                // tau = j h <= T - 2h always holds inside this loop.
                tail += weight / (model.t() - t - h).sqrt();
                stopped = true;
                break;
            }
            pos += if (path >> j) & 1 == 1 { 1 } else { -1 };
        }
        if !stopped {
            // tau = T: take the remaining steps and collect the payoff.
            for j in (n as usize - 1)..n as usize {
                pos += if (path >> j) & 1 == 1 { 1 } else { -1 };
            }
            let x = pos as f64 * sqrt_h;
            value += weight * (-model.r() * model.t()).exp() * payoff(model, model.t(), x);
        }
    }
    (value, tail)
}

/// European put by Gauss-Legendre quadrature of the lognormal integral,
/// independent of the closed form and of the crate's quadrature helper.
pub fn european_put_quadrature(model: &MarketModel, remaining: f64) -> f64 {
    assert!(remaining > 0.0);
    if model.k() == 0.0 {
        return 0.0;
    }
    let mu = model.r() - model.d() - 0.5 * model.sigma() * model.sigma();
    let vol = model.sigma() * remaining.sqrt();
    // Payoff is positive exactly for z < z_star.
    let z_star = ((model.k() / model.s0()).ln() - mu * remaining) / vol;
    let lo = z_star - 60.0;
    let integrand = |z: f64| {
        let s = model.s0() * (mu * remaining + vol * z).exp();
        (model.k() - s).max(0.0) * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
    };
    let value = gauss_legendre_64_composite(lo, z_star, 64, integrand);
    (-model.r() * remaining).exp() * value
}

/// Standard normal cdf by Taylor series around zero (|z| <= 8), using the
/// identity N(z) = 1/2 + n(z) * sum_k z^{2k+1} / (1*3*...*(2k+1)).
pub fn normal_cdf_series(z: f64) -> f64 {
    assert!(z.abs() <= 8.5, "series oracle is for moderate arguments");
    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut term = z;
    let mut sum = z;
    let mut k = 0u32;
    while term.abs() > 1e-22 * (1.0 + sum.abs()) && k < 400 {
        k += 1;
        term *= z * z / (2.0 * k as f64 + 1.0);
        sum += term;
    }
    0.5 + pdf * sum
}

/// 64-point Gauss-Legendre weights computed on the fly by Newton iteration,
/// applied on `panels` equal panels.
fn gauss_legendre_64_composite<F: Fn(f64) -> f64>(a: f64, b: f64, panels: usize, f: F) -> f64 {
    let n = 64usize;
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    for k in 0..n / 2 {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[k] = -x;
        nodes[n - 1 - k] = x;
        weights[k] = w;
        weights[n - 1 - k] = w;
    }
    let width = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let half = 0.5 * width;
        let mid = lo + half;
        for (x, w) in nodes.iter().zip(weights.iter()) {
            acc += w * f(mid + half * x);
        }
    }
    acc * 0.5 * width
}
