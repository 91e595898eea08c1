//! Backward induction for the binomial random-walk approximation of the
//! American put, exercise-boundary extraction, the one-step discrete
//! generator, and exact forward-induction evaluation of a barrier stopping
//! rule.
//!
//! The walk scheme places nodes at `x = (2k - j) sqrt(h)` for step `j`,
//! `k = 0..=j`, with `h = T/n`, so the support of the scaled walk is hit
//! exactly and the payoff `g(mu0 * jh + x)` is evaluated at nodes without
//! interpolation. The risk-neutral scheme is the classical multiplicative
//! tree `u = e^{sigma sqrt h}`, `p = (e^{(r-d)h} - d) / (u - d)`.
//!
//! Pricing walks two rolling value layers; the full exercise-flag triangle
//! (`~n^2/2` bools) and value layers are retained only on request.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::boundary::BoundaryCurve;
use crate::model::MarketModel;

/// Walk discretisation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeScheme {
    /// Additive +/-1 walk on `x = (2k - j) sqrt(h)` with probability 1/2
    /// each; the step distribution is bounded with zero mean, unit
    /// variance, and zero third moment.
    PaperWalk,
    /// Multiplicative risk-neutral tree on stock nodes
    /// `S0 u^k d^{j-k}` with `p = (e^{(r-d)h} - d)/(u - d)`.
    RiskNeutral,
}

/// Discretisation of the walk: period count and scheme.
///
/// `walk_bound` is the sup norm of the step distribution; only the +/-1
/// walk is implemented, so constructors pin it to 1. It is kept as a field
/// because the stopping rule consumes it as data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    /// Number of periods (>= 1).
    pub n: usize,
    /// Discretisation scheme.
    pub scheme: LatticeScheme,
    /// Sup norm of the walk step distribution.
    pub walk_bound: f64,
}

impl LatticeSpec {
    /// Additive walk spec with `n` periods.
    pub fn paper_walk(n: usize) -> Self {
        Self { n, scheme: LatticeScheme::PaperWalk, walk_bound: 1.0 }
    }

    /// Risk-neutral multiplicative tree spec with `n` periods.
    pub fn risk_neutral(n: usize) -> Self {
        Self { n, scheme: LatticeScheme::RiskNeutral, walk_bound: 1.0 }
    }

    /// Period length `h = T/n` in years.
    #[inline]
    pub fn step_years(&self, model: &MarketModel) -> f64 {
        model.t() / self.n as f64
    }
}

/// Errors from lattice operations.
#[derive(Debug, Clone, PartialEq)]
pub enum LatticeError {
    /// `n` outside the operation's admissible range.
    InvalidPeriods { n: usize, reason: &'static str },
    /// Risk-neutral probability left (0, 1): the step is too large for the
    /// drift.
    ProbabilityOutOfRange { p: f64 },
    /// The operation needs data that was not retained during pricing.
    MissingExerciseFlags,
    /// Node index outside the lattice triangle.
    IndexOutOfRange { j: usize, k: usize },
    /// Operation defined only for the additive walk.
    UnsupportedScheme,
}

impl fmt::Display for LatticeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeError::InvalidPeriods { n, reason } => {
                write!(f, "invalid period count n = {n}: {reason}")
            }
            LatticeError::ProbabilityOutOfRange { p } => {
                write!(f, "risk-neutral probability {p} outside (0, 1); reduce the step size")
            }
            LatticeError::MissingExerciseFlags => {
                write!(f, "lattice result does not retain exercise flags")
            }
            LatticeError::IndexOutOfRange { j, k } => {
                write!(f, "node (step {j}, index {k}) outside the lattice")
            }
            LatticeError::UnsupportedScheme => {
                write!(f, "operation is defined for the additive walk scheme only")
            }
        }
    }
}

/// What [`price_american_with`] should retain besides the root price.
#[derive(Debug, Clone, Copy, Default)]
pub struct PricingConfig {
    /// Keep the per-node exercise flags (needed by [`extract_boundary`]).
    pub retain_flags: bool,
    /// Keep every value layer (needed by generator diagnostics).
    pub retain_layers: bool,
}

/// Output of the backward induction.
#[derive(Debug, Clone)]
pub struct LatticeResult {
    /// Root value `P(n)`.
    pub price: f64,
    /// Exercise flags per step (`flags[j][k]`, steps `0..=n`), if retained.
    /// A node is flagged when the exercise value is within `1e-12 * K` of
    /// dominating the continuation value; at step `n` the flag is simply
    /// "payoff positive".
    pub exercise_flags: Option<Vec<Vec<bool>>>,
    /// Value layers (`layers[j][k]`), if retained. Layer `j` holds the
    /// undiscounted-at-`t_j` option values `V_j`.
    pub layers: Option<Vec<Vec<f64>>>,
}

/// One step of the extracted exercise boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryStep {
    /// Step index `j`.
    pub step: usize,
    /// Calendar time `j h` in years.
    pub t_years: f64,
    /// Largest exercising node index, if any node exercises.
    pub node: Option<usize>,
    /// Walk coordinate `(2k - j) sqrt(h)` of that node.
    pub x_walk: Option<f64>,
    /// Stock price at that node.
    pub stock: Option<f64>,
}

/// Output of the stopping-rule evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingValue {
    /// `E[e^{-r tau} g(mu0 tau + B_tau)]`.
    pub value: f64,
    /// `E[(T - tau - h)^{-1/2} 1{tau <= T - 2h}]`.
    pub tail_expectation: f64,
}

/// Relative tie tolerance for exercise/continuation classification.
///
/// Exact equality at a node is floating-point fragile; scaling by the
/// strike keeps the classification scale-free.
pub const TIE_TOLERANCE_REL: f64 = 1e-12;

/// Prices the American put at the root of the lattice.
pub fn price_american(model: &MarketModel, spec: &LatticeSpec) -> Result<LatticeResult, LatticeError> {
    price_american_with(model, spec, PricingConfig::default())
}

/// Prices the American put, optionally retaining flags and value layers.
///
/// Deterministic: identical inputs give bit-identical outputs. The sweep
/// runs `V_j(x) = max(payoff, disc * E[V_{j+1}(x + step)])` down from the
/// terminal layer `V_n = payoff`.
pub fn price_american_with(
    model: &MarketModel,
    spec: &LatticeSpec,
    config: PricingConfig,
) -> Result<LatticeResult, LatticeError> {
    backward_induction(model, spec, true, config)
}

/// Same recursion without the exercise max: the European control variate.
///
/// Converges to the closed-form European put as `n -> infinity`.
pub fn price_european_on_lattice(model: &MarketModel, spec: &LatticeSpec) -> Result<f64, LatticeError> {
    let result = backward_induction(model, spec, false, PricingConfig::default())?;
    Ok(result.price)
}

/// Per-layer stock multipliers for payoff evaluation.
///
/// Node `(j, k)` carries the stock price `drift(j) * table[2k - j + n]`,
/// with `table[i] = exp(sigma sqrt(h) (i - n))`. Every entry is a direct
/// `exp` evaluation, so there is no cumulative rounding along a layer.
struct NodeGeometry {
    exp_table: Vec<f64>,
    n: usize,
}

impl NodeGeometry {
    fn new(model: &MarketModel, spec: &LatticeSpec) -> Self {
        let n = spec.n;
        let sig_sqrt_h = model.sigma() * libm::sqrt(spec.step_years(model));
        let mut exp_table = vec![0.0; 2 * n + 1];
        for (i, slot) in exp_table.iter_mut().enumerate() {
            *slot = libm::exp(sig_sqrt_h * (i as f64 - n as f64));
        }
        Self { exp_table, n }
    }

    /// Stock price at node `(j, k)` given the layer drift factor.
    #[inline]
    fn stock(&self, drift: f64, j: usize, k: usize) -> f64 {
        drift * self.exp_table[2 * k + self.n - j]
    }
}

fn backward_induction(
    model: &MarketModel,
    spec: &LatticeSpec,
    american: bool,
    config: PricingConfig,
) -> Result<LatticeResult, LatticeError> {
    let n = spec.n;
    if n == 0 {
        return Err(LatticeError::InvalidPeriods { n, reason: "must be >= 1" });
    }
    let h = spec.step_years(model);
    let disc = libm::exp(-model.r() * h);
    let k_strike = model.k();
    let s0 = model.s0();
    let tie_tol = TIE_TOLERANCE_REL * k_strike;

    // Up/down weights already folded with the discount factor.
    let (w_up, w_down) = match spec.scheme {
        LatticeScheme::PaperWalk => (0.5 * disc, 0.5 * disc),
        LatticeScheme::RiskNeutral => {
            let up = libm::exp(model.sigma() * libm::sqrt(h));
            let dn = 1.0 / up;
            let p = (libm::exp((model.r() - model.d()) * h) - dn) / (up - dn);
            if !(p > 0.0 && p < 1.0) {
                return Err(LatticeError::ProbabilityOutOfRange { p });
            }
            (disc * p, disc * (1.0 - p))
        }
    };

    let geom = NodeGeometry::new(model, spec);
    // PaperWalk nodes carry the drift e^{mu j h}; risk-neutral stock nodes
    // are drift-free by construction.
    let layer_drift = |j: usize| -> f64 {
        match spec.scheme {
            LatticeScheme::PaperWalk => s0 * libm::exp(model.mu() * h * j as f64),
            LatticeScheme::RiskNeutral => s0,
        }
    };

    let mut flags: Option<Vec<Vec<bool>>> = config.retain_flags.then(Vec::new);
    let mut layers: Option<Vec<Vec<f64>>> = config.retain_layers.then(Vec::new);

    // Terminal layer.
    let mut values = vec![0.0f64; n + 1];
    let drift_n = layer_drift(n);
    for (k, v) in values.iter_mut().enumerate() {
        *v = (k_strike - geom.stock(drift_n, n, k)).max(0.0);
    }
    if let Some(fs) = flags.as_mut() {
        fs.push(values.iter().map(|v| *v > 0.0).collect());
    }
    if let Some(ls) = layers.as_mut() {
        ls.push(values.clone());
    }

    for j in (0..n).rev() {
        let drift = layer_drift(j);
        let mut layer_flags = config.retain_flags.then(|| vec![false; j + 1]);
        for k in 0..=j {
            let cont = w_up * values[k + 1] + w_down * values[k];
            let pay = (k_strike - geom.stock(drift, j, k)).max(0.0);
            if american {
                if let Some(lf) = layer_flags.as_mut() {
                    // Exercise means collecting a positive payoff that ties
                    // or beats continuation; zero-payoff ties far out of
                    // the money are not exercises.
                    lf[k] = pay > 0.0 && pay >= cont - tie_tol;
                }
                values[k] = pay.max(cont);
            } else {
                values[k] = cont;
            }
        }
        values.truncate(j + 1);
        if let (Some(fs), Some(lf)) = (flags.as_mut(), layer_flags) {
            fs.push(lf);
        }
        if let Some(ls) = layers.as_mut() {
            ls.push(values.clone());
        }
    }

    // Stored back-to-front above; present front-to-back.
    if let Some(fs) = flags.as_mut() {
        fs.reverse();
    }
    if let Some(ls) = layers.as_mut() {
        ls.reverse();
    }

    Ok(LatticeResult { price: values[0], exercise_flags: flags, layers })
}

/// Extracts the per-step exercise boundary from retained flags.
///
/// For each step, the boundary node is the largest flagged index (flags
/// already encode `exercise >= continuation - tie_tol`); steps where no
/// node exercises report `None`.
pub fn extract_boundary(
    model: &MarketModel,
    spec: &LatticeSpec,
    result: &LatticeResult,
) -> Result<Vec<BoundaryStep>, LatticeError> {
    let flags = result.exercise_flags.as_ref().ok_or(LatticeError::MissingExerciseFlags)?;
    let n = spec.n;
    let h = spec.step_years(model);
    let sqrt_h = libm::sqrt(h);
    let geom = NodeGeometry::new(model, spec);
    let mut out = Vec::with_capacity(n + 1);
    for (j, layer) in flags.iter().enumerate() {
        let node = layer.iter().rposition(|&f| f);
        let (x_walk, stock) = match node {
            Some(k) => {
                let x = (2.0 * k as f64 - j as f64) * sqrt_h;
                let drift = match spec.scheme {
                    LatticeScheme::PaperWalk => model.s0() * libm::exp(model.mu() * h * j as f64),
                    LatticeScheme::RiskNeutral => model.s0(),
                };
                (Some(x), Some(geom.stock(drift, j, k)))
            }
            None => (None, None),
        };
        out.push(BoundaryStep { step: j, t_years: j as f64 * h, node, x_walk, stock });
    }
    Ok(out)
}

/// One-step discrete generator of the walk applied to a grid function:
/// `D v (j, k) = E[v(j+1, node after one step)] - v(j, k)`
/// `           = (v(j+1, k+1) + v(j+1, k)) / 2 - v(j, k)`.
///
/// Defined for the additive walk; `v` is indexed by `(step, node)` with
/// node `k` at step `j` sitting at walk coordinate `(2k - j) sqrt(h)`.
pub fn discrete_generator<F: Fn(usize, usize) -> f64>(
    spec: &LatticeSpec,
    v: F,
    j: usize,
    k: usize,
) -> Result<f64, LatticeError> {
    if spec.scheme != LatticeScheme::PaperWalk {
        return Err(LatticeError::UnsupportedScheme);
    }
    if j + 1 > spec.n || k > j {
        return Err(LatticeError::IndexOutOfRange { j, k });
    }
    Ok(0.5 * (v(j + 1, k + 1) + v(j + 1, k)) - v(j, k))
}

/// Evaluates the barrier stopping rule exactly by forward induction.
///
/// At each grid time `t = jh`, `j <= n-2`, the rule stops when the walk is
/// within `sqrt(h) * walk_bound + |mu0| h` of the exercise region at time
/// `t + h`, i.e. when `x <= hat_b((j+1)h) + sqrt(h) walk_bound + |mu0| h`
/// with `hat_b` the boundary in walk coordinates. A first trigger at
/// `T - h` is deferred to maturity, so paths that never trigger earlier
/// simply run to `T`. Probabilities are path counts times `2^{-j}`,
/// maintained by zeroing mass upon stopping; no sampling is involved.
///
/// Requires `n >= 3` (the tail event `tau <= T - 2h` is undefined below
/// that) and the additive walk scheme.
pub fn stopping_rule_value(
    model: &MarketModel,
    spec: &LatticeSpec,
    boundary: &BoundaryCurve,
) -> Result<StoppingValue, LatticeError> {
    if spec.scheme != LatticeScheme::PaperWalk {
        return Err(LatticeError::UnsupportedScheme);
    }
    let n = spec.n;
    if n < 3 {
        return Err(LatticeError::InvalidPeriods { n, reason: "stopping rule needs n >= 3" });
    }
    let h = spec.step_years(model);
    let sqrt_h = libm::sqrt(h);
    let mu0 = model.mu0();
    let t_mat = model.t();
    let slack = sqrt_h * spec.walk_bound + mu0.abs() * h;

    let mut mass = vec![0.0f64; n + 1];
    mass[0] = 1.0;
    let mut value = 0.0;
    let mut tail = 0.0;

    for j in 0..=(n - 2) {
        let t = j as f64 * h;
        let threshold = boundary.hat_b(model, t + h) + slack;
        let mut next = vec![0.0f64; n + 1];
        for k in 0..=j {
            let p = mass[k];
            if p == 0.0 {
                continue;
            }
            let x = (2.0 * k as f64 - j as f64) * sqrt_h;
            if x <= threshold {
                value += p * libm::exp(-model.r() * t) * model.payoff_g(mu0 * t + x);
                tail += p / libm::sqrt(t_mat - t - h);
            } else {
                next[k] += 0.5 * p;
                next[k + 1] += 0.5 * p;
            }
        }
        mass = next;
    }

    // Step n-1: any remaining mass has tau = T; propagate once more and
    // collect the maturity payoff.
    let mut last = vec![0.0f64; n + 1];
    for k in 0..=(n - 1) {
        let p = mass[k];
        if p == 0.0 {
            continue;
        }
        last[k] += 0.5 * p;
        last[k + 1] += 0.5 * p;
    }
    let disc_t = libm::exp(-model.r() * t_mat);
    for (k, &p) in last.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let x = (2.0 * k as f64 - n as f64) * sqrt_h;
        value += p * disc_t * model.payoff_g(mu0 * t_mat + x);
    }

    Ok(StoppingValue { value, tail_expectation: tail })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atm() -> MarketModel {
        MarketModel::new(0.05, 0.0, 0.2, 100.0, 100.0, 1.0).unwrap()
    }

    #[test]
    fn rejects_zero_periods() {
        let err = price_american(&atm(), &LatticeSpec::paper_walk(0)).unwrap_err();
        assert!(matches!(err, LatticeError::InvalidPeriods { .. }));
    }

    #[test]
    fn zero_strike_prices_to_zero() {
        let m = MarketModel::new(0.05, 0.0, 0.2, 100.0, 0.0, 1.0).unwrap();
        for n in [1, 7, 64] {
            let spec = LatticeSpec::paper_walk(n);
            assert_eq!(price_american(&m, &spec).unwrap().price, 0.0);
            assert_eq!(price_european_on_lattice(&m, &spec).unwrap(), 0.0);
        }
    }

    #[test]
    fn one_step_tree_matches_hand_enumeration() {
        // Root = max(0, e^{-0.05}/2 * 100 (1 - e^{-0.17})); the only
        // nonzero terminal payoff is the down node. Frozen from 40-digit
        // arithmetic: 7.4355313269117763...
        let spec = LatticeSpec::paper_walk(1);
        let got = price_american(&atm(), &spec).unwrap().price;
        assert!((got - 7.435_531_326_911_776).abs() < 1e-12, "got {got}");
        let euro = price_european_on_lattice(&atm(), &spec).unwrap();
        assert!((euro - 7.435_531_326_911_776).abs() < 1e-12);
    }

    #[test]
    fn deep_in_the_money_equals_intrinsic() {
        let m = MarketModel::new(0.05, 0.0, 0.2, 1.0, 100.0, 1.0).unwrap();
        for n in [1, 4, 16, 64] {
            let p = price_american(&m, &LatticeSpec::paper_walk(n)).unwrap().price;
            assert!(p >= 99.0 - 1e-12, "n={n}: {p}");
            assert!(p <= 100.0, "n={n}: {p}");
        }
    }

    #[test]
    fn american_dominates_european_and_intrinsic() {
        let m = MarketModel::new(0.05, 0.03, 0.25, 95.0, 100.0, 1.0).unwrap();
        for n in [1, 2, 13, 128] {
            let spec = LatticeSpec::paper_walk(n);
            let amer = price_american(&m, &spec).unwrap().price;
            let euro = price_european_on_lattice(&m, &spec).unwrap();
            assert!(amer >= euro - 1e-12, "n={n}");
            assert!(euro >= 0.0, "n={n}");
            assert!(amer >= m.payoff_g(0.0) - 1e-12, "n={n}");
        }
    }

    #[test]
    fn risk_neutral_scheme_prices_and_rejects_bad_probability() {
        let m = atm();
        let p = price_american(&m, &LatticeSpec::risk_neutral(256)).unwrap().price;
        // Sanity corridor around the known ATM American put level.
        assert!(p > 5.0 && p < 7.5, "price {p}");

        // Huge drift relative to sigma over one giant step pushes p out of
        // (0, 1).
        let bad = MarketModel::new(2.5, 0.0, 0.05, 100.0, 100.0, 4.0).unwrap();
        let err = price_american(&bad, &LatticeSpec::risk_neutral(1)).unwrap_err();
        assert!(matches!(err, LatticeError::ProbabilityOutOfRange { .. }));
    }

    #[test]
    fn terminal_layer_equals_payoff_exactly() {
        let m = atm();
        let n = 9;
        let spec = LatticeSpec::paper_walk(n);
        let config = PricingConfig { retain_layers: true, retain_flags: false };
        let res = price_american_with(&m, &spec, config).unwrap();
        let layers = res.layers.unwrap();
        let h = spec.step_years(&m);
        let sqrt_h = libm::sqrt(h);
        for k in 0..=n {
            let x = (2.0 * k as f64 - n as f64) * sqrt_h;
            let g = m.payoff_g(m.mu0() * m.t() + x);
            let diff = (layers[n][k] - g).abs();
            assert!(diff <= 1e-12 * (1.0 + g.abs()), "k={k}: {diff:e}");
        }
    }

    #[test]
    fn boundary_extraction_requires_flags() {
        let m = atm();
        let spec = LatticeSpec::paper_walk(8);
        let res = price_american(&m, &spec).unwrap();
        assert_eq!(
            extract_boundary(&m, &spec, &res).unwrap_err(),
            LatticeError::MissingExerciseFlags
        );
    }

    #[test]
    fn boundary_zero_strike_is_none_everywhere() {
        let m = MarketModel::new(0.05, 0.0, 0.2, 100.0, 0.0, 1.0).unwrap();
        let spec = LatticeSpec::paper_walk(32);
        let config = PricingConfig { retain_flags: true, retain_layers: false };
        let res = price_american_with(&m, &spec, config).unwrap();
        let steps = extract_boundary(&m, &spec, &res).unwrap();
        assert!(steps.iter().all(|s| s.node.is_none()));
    }

    #[test]
    fn boundary_stays_below_strike_without_dividends() {
        // With d = 0 the continuation region contains the strike.
        let m = atm();
        let spec = LatticeSpec::paper_walk(256);
        let config = PricingConfig { retain_flags: true, retain_layers: false };
        let res = price_american_with(&m, &spec, config).unwrap();
        let steps = extract_boundary(&m, &spec, &res).unwrap();
        for s in &steps[..256] {
            if let Some(stock) = s.stock {
                assert!(stock < m.k(), "step {}: boundary {stock}", s.step);
            }
        }
    }

    #[test]
    fn generator_kills_constants_and_linear_walk() {
        let spec = LatticeSpec::paper_walk(16);
        let c = |_j: usize, _k: usize| 3.25;
        for j in 0..16 {
            for k in 0..=j {
                assert_eq!(discrete_generator(&spec, c, j, k).unwrap(), 0.0);
            }
        }
        // v(j, k) = x = (2k - j) sqrt(h): a martingale for the walk.
        let lin = |j: usize, k: usize| 2.0 * k as f64 - j as f64;
        for j in 0..16 {
            for k in 0..=j {
                let d = discrete_generator(&spec, lin, j, k).unwrap();
                assert!(d.abs() < 1e-14, "j={j} k={k}: {d}");
            }
        }
    }

    #[test]
    fn generator_rejects_out_of_range_and_wrong_scheme() {
        let spec = LatticeSpec::paper_walk(4);
        let v = |_: usize, _: usize| 0.0;
        assert!(matches!(
            discrete_generator(&spec, v, 4, 0),
            Err(LatticeError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            discrete_generator(&spec, v, 2, 3),
            Err(LatticeError::IndexOutOfRange { .. })
        ));
        let rn = LatticeSpec::risk_neutral(4);
        assert_eq!(discrete_generator(&rn, v, 0, 0), Err(LatticeError::UnsupportedScheme));
    }

    #[test]
    fn stopping_rule_rejects_small_n_and_wrong_scheme() {
        let m = atm();
        let curve = BoundaryCurve::from_samples(vec![(0.5, -5.0), (1.0, -5.0)], -5.0).unwrap();
        assert!(stopping_rule_value(&m, &LatticeSpec::paper_walk(2), &curve).is_err());
        assert!(stopping_rule_value(&m, &LatticeSpec::risk_neutral(8), &curve).is_err());
    }

    #[test]
    fn stopping_rule_zero_strike_is_zero() {
        let m = MarketModel::new(0.05, 0.0, 0.2, 100.0, 0.0, 1.0).unwrap();
        let curve = BoundaryCurve::from_samples(vec![(0.5, -1.0), (1.0, -1.0)], -1.0).unwrap();
        let sv = stopping_rule_value(&m, &LatticeSpec::paper_walk(16), &curve).unwrap();
        assert_eq!(sv.value, 0.0);
    }

    #[test]
    fn never_triggering_barrier_reduces_to_european() {
        // Boundary far below every node: tau = T on all paths.
        let m = atm();
        let n = 64;
        let spec = LatticeSpec::paper_walk(n);
        let curve = BoundaryCurve::from_samples(vec![(0.5, -1e6), (1.0, -1e6)], -1e6).unwrap();
        let sv = stopping_rule_value(&m, &spec, &curve).unwrap();
        let euro = price_european_on_lattice(&m, &spec).unwrap();
        assert!((sv.value - euro).abs() <= 1e-12 * (1.0 + euro.abs()));
        assert_eq!(sv.tail_expectation, 0.0);
    }

    #[test]
    fn step_size_reproduces_maturity_to_one_ulp() {
        for (t, n) in [(1.0, 7usize), (0.75, 1000), (2.5, 4097), (1.0, 1 << 15)] {
            let m = MarketModel::new(0.05, 0.0, 0.2, 100.0, 100.0, t).unwrap();
            let spec = LatticeSpec::paper_walk(n);
            let recomposed = spec.step_years(&m) * n as f64;
            let ulp = (t.to_bits() as i64 - recomposed.to_bits() as i64).unsigned_abs();
            assert!(ulp <= 1, "t={t} n={n}: {ulp} ulps");
        }
    }

    #[test]
    fn pricing_is_bit_deterministic() {
        let m = MarketModel::new(0.05, 0.08, 0.2, 100.0, 100.0, 1.0).unwrap();
        let spec = LatticeSpec::paper_walk(513);
        let a = price_american(&m, &spec).unwrap().price;
        let b = price_american(&m, &spec).unwrap().price;
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
