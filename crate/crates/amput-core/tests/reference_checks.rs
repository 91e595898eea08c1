//! Slow checks that exercise the certified reference pipeline end to end.
//! Each test runs the full dual-oracle certification (roughly 15-20 s).

use amput_core::lattice::{price_american, LatticeSpec};
use amput_core::pde::reference_price;
use amput_core::study::Regime;
use amput_core::MarketModel;

#[test]
fn deep_in_the_money_reference_is_intrinsic() {
    // S0 = 1, K = 100: the whole lattice sits in the exercise region and
    // both oracles must certify K - S0.
    let model = MarketModel::new(0.05, 0.0, 0.2, 1.0, 100.0, 1.0).unwrap();
    let tol = 2e-6 * model.k();
    let rf = reference_price(&model, tol).unwrap();
    assert!((rf.price - 99.0).abs() <= tol, "price {} vs 99", rf.price);
    assert!(rf.gap <= tol);
}

#[test]
fn envelope_constants_stable_on_top_half_of_schedule() {
    // Envelope constants recomputed from the top half of the schedule must
    // stay finite and within 50% of the full-schedule constants.
    let model = MarketModel::new(0.05, 0.0, 0.2, 100.0, 100.0, 1.0).unwrap();
    let regime = Regime::of(&model);
    let rf = reference_price(&model, 2e-6 * model.k()).unwrap();
    let mut full = (0.0f64, 0.0f64);
    let mut top = (0.0f64, 0.0f64);
    for k in 0..8 {
        let n = 128usize << k;
        let spec = LatticeSpec::paper_walk(n);
        let error = price_american(&model, &spec).unwrap().price - rf.price;
        let lnn = (n as f64).ln();
        let up = error.max(0.0) * n as f64 / lnn.powf(regime.alpha());
        let lo = (-error).max(0.0) * n as f64 / lnn.powf(regime.alpha_bar());
        full.0 = full.0.max(up);
        full.1 = full.1.max(lo);
        if k >= 4 {
            top.0 = top.0.max(up);
            top.1 = top.1.max(lo);
        }
    }
    assert!(full.0.is_finite() && full.1.is_finite());
    let change = |whole: f64, half: f64| {
        if whole == 0.0 {
            (half - whole).abs()
        } else {
            (half - whole).abs() / whole
        }
    };
    assert!(change(full.0, top.0) < 0.5, "upper constant drifted: {} -> {}", full.0, top.0);
    assert!(change(full.1, top.1) < 0.5, "lower constant drifted: {} -> {}", full.1, top.1);
}

#[test]
fn risk_neutral_and_walk_schemes_agree_at_depth() {
    // Both discretisations approximate the same value; at n = 4096 they
    // sit within a millimeter of each other (each error is O(1e-3) and
    // shrinking like 1/n).
    for d in [0.03, 0.08] {
        let model = MarketModel::new(0.05, d, 0.2, 100.0, 100.0, 1.0).unwrap();
        let rn = price_american(&model, &LatticeSpec::risk_neutral(4096)).unwrap().price;
        let pw = price_american(&model, &LatticeSpec::paper_walk(4096)).unwrap().price;
        assert!((rn - pw).abs() <= 2.5e-3, "d={d}: |rn - pw| = {:e}", (rn - pw).abs());
    }
}
