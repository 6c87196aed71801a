use awesome::schedule::{Decay, RoundsRule, Schedule};
use proptest::prelude::*;

type Sched = Schedule<f64>;

/// Epoch length recomputed with `powf` instead of the cancellation-free
/// form used by the schedule.
fn oracle_rounds(base: f64, actions: usize, t: usize) -> u128 {
    let k = t.max(1) as f64;
    let eps = base / (t as f64 + 1.0);
    let slack = 1.0 - 2f64.powf(-1.0 / (k * k));
    (actions as f64 / (slack * eps * eps)).ceil() as u128
}

#[test]
fn epoch_lengths_match_formula_for_small_t() {
    let four = Sched::harmonic(0.5, 4).unwrap();
    let six = Sched::harmonic(0.5, 6).unwrap();
    for t in 0..12 {
        assert_eq!(four.rounds(t), oracle_rounds(0.5, 4, t), "A=4 t={t}");
        assert_eq!(six.rounds(t), oracle_rounds(0.5, 6, t), "A=6 t={t}");
    }
    let expected = [
        32u128, 128, 906, 3454, 9435, 21065, 41112, 72902, 120313, 187775,
    ];
    let got: Vec<u128> = (0..10).map(|t| four.rounds(t)).collect();
    assert_eq!(got, expected);
    let cumulative: u128 = (0..10).map(|t| four.rounds(t)).sum();
    assert_eq!(cumulative, 457_122);
}

#[test]
fn thresholds_are_coupled() {
    let s = Sched::harmonic(0.5, 4).unwrap();
    assert_eq!(s.eps_s(0), s.eps_e(0));
    for t in 0..50 {
        assert_eq!(s.eps_s(t + 1), s.eps_e(t));
        assert_eq!(s.eps_e(t), 0.5 / (t as f64 + 1.0));
    }
}

#[test]
fn default_factors_meet_the_bound_for_ten_thousand_epochs() {
    for actions in [4usize, 6] {
        let s = Sched::harmonic(0.5, actions).unwrap();
        for t in 1..=10_000usize {
            let bound = 2f64.powf(-1.0 / (t as f64 * t as f64));
            assert!(s.equilibrium_factor(t) >= bound, "A={actions} t={t}");
            assert!(s.stationarity_factor(t) >= bound, "A={actions} t={t}");
        }
    }
}

#[test]
fn partial_products_stay_above_the_limit_up_to_a_million() {
    let s = Sched::harmonic(0.5, 4).unwrap();
    let (stat, eq) = s.never_restart_lower_bound(1_000_000).unwrap();
    let limit = 2f64.powf(-std::f64::consts::PI * std::f64::consts::PI / 6.0);
    assert!((limit - 0.319_77).abs() < 1e-5);
    assert!(stat >= limit && eq >= limit, "{stat} {eq}");
    // Ceiling slack keeps the prefix only slightly above the limit.
    assert!(eq - limit < 1e-4);
}

#[test]
fn lower_bound_is_the_product_of_factors() {
    let s = Sched::harmonic(0.5, 4).unwrap();
    let mut product = 1.0;
    for t in 1..=10 {
        let n = s.rounds(t) as f64;
        let eps = 0.5 / (t as f64 + 1.0);
        product *= 1.0 - 4.0 / (n * eps * eps);
    }
    let (_, eq) = s.never_restart_lower_bound(10).unwrap();
    assert!((eq - product).abs() < 1e-12);
}

#[test]
fn validity_verdicts() {
    assert!(Sched::harmonic(0.5, 4)
        .unwrap()
        .check_valid_prefix(100)
        .unwrap()
        .passed());
    assert!(Sched::geometric(0.5, 0.8, 4)
        .unwrap()
        .check_valid_prefix(30)
        .unwrap()
        .passed());
    let forced = Sched::harmonic(0.5, 4)
        .unwrap()
        .with_rounds(RoundsRule::Fixed { rounds: 1 })
        .unwrap()
        .check_valid_prefix(5)
        .unwrap();
    assert!(!forced.passed());
    assert_eq!(forced.first_failure().map(|(_, t)| t), Some(1));
    let constant = Sched::new(0.5, Decay::Constant, 4)
        .unwrap()
        .check_valid_prefix(5)
        .unwrap();
    assert_eq!(constant.first_failure(), Some(("eps_e decreasing", 1)));
}

#[test]
fn f32_schedule_agrees_on_early_lengths() {
    let s32 = Schedule::<f32>::harmonic(0.5, 4).unwrap();
    let s64 = Sched::harmonic(0.5, 4).unwrap();
    for t in 0..4 {
        let (a, b) = (s32.rounds(t), s64.rounds(t));
        assert!(a.abs_diff(b) <= 1, "t={t}: {a} vs {b}");
    }
}

proptest! {
    #[test]
    fn factor_bound_holds_for_any_builtin_parameters(
        base in 0.01f64..=1.0,
        actions in 1usize..40,
        t in 1usize..10_000,
        geometric in any::<bool>(),
        ratio in 0.5f64..0.99,
    ) {
        // Geometric epoch lengths leave the u128 range by t = 50.
        let (s, t) = if geometric {
            (Sched::geometric(base, ratio, actions).unwrap(), t % 30 + 1)
        } else {
            (Sched::harmonic(base, actions).unwrap(), t)
        };
        let bound = 2f64.powf(-1.0 / (t as f64 * t as f64));
        prop_assert!(s.equilibrium_factor(t) >= bound * (1.0 - 1e-12));
        prop_assert!(s.rounds(t) >= s.rounds(t - 1));
        prop_assert!(s.eps_e(t) < s.eps_e(t - 1));
    }
}
