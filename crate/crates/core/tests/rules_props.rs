use lof_core::{classify_lof, FoulingObservation, LofRank, Preset, ThresholdConfig};
use proptest::prelude::*;

/// Straight interval lookup, written independently of the decision tree.
fn oracle(slime: f64, macro_pct: f64, eps: f64, bounds: [f64; 3]) -> u8 {
    if macro_pct <= eps {
        return if slime > 0.0 { 1 } else { 0 };
    }
    let edges = [eps, bounds[0], bounds[1], bounds[2], f64::INFINITY];
    for (i, w) in edges.windows(2).enumerate() {
        if macro_pct > w[0] && macro_pct <= w[1] {
            return 2 + i as u8;
        }
    }
    unreachable!()
}

fn rank(slime: f64, macro_pct: f64, cfg: &ThresholdConfig) -> u8 {
    classify_lof(FoulingObservation::new(slime, macro_pct), cfg)
        .unwrap()
        .value()
}

#[test]
fn grid_totality_quarter_step() {
    let cfg = ThresholdConfig::default();
    for si in 0..=400 {
        for mi in 0..=(400 - si) {
            let (s, m) = (si as f64 * 0.25, mi as f64 * 0.25);
            let got = rank(s, m, &cfg);
            assert_eq!(got, oracle(s, m, 0.1, [5.0, 16.0, 40.0]), "slime {s} macro {m}");
        }
    }
}

#[test]
fn boundaries_belong_to_lower_rank() {
    let cfg = ThresholdConfig::default();
    assert_eq!(rank(0.0, 5.0, &cfg), 2);
    assert_eq!(rank(0.0, 5.0001, &cfg), 3);
    assert_eq!(rank(0.0, 16.0, &cfg), 3);
    assert_eq!(rank(0.0, 40.0, &cfg), 4);
    assert_eq!(rank(0.0, 40.0001, &cfg), 5);
    assert_eq!(rank(0.0, 0.1, &cfg), 0);
    assert_eq!(rank(3.0, 0.1, &cfg), 1);
    assert_eq!(rank(0.0, 0.10001, &cfg), 2);
}

#[test]
fn appendix_preset_bands() {
    let a = Preset::AppendixPrompt.config();
    for (m, want) in [(1.0, 0), (1.5, 2), (5.0, 2), (5.5, 3), (15.0, 3), (16.0, 4), (40.0, 4), (41.0, 5)] {
        assert_eq!(rank(0.0, m, &a), want, "macro {m}");
    }
}

fn observation() -> impl Strategy<Value = (f64, f64)> {
    (0.0f64..=100.0).prop_flat_map(|s| (Just(s), 0.0f64..=(100.0 - s)))
}

proptest! {
    #[test]
    fn matches_oracle((s, m) in observation()) {
        let cfg = ThresholdConfig::default();
        prop_assert_eq!(rank(s, m, &cfg), oracle(s, m, 0.1, [5.0, 16.0, 40.0]));
        let app = Preset::AppendixPrompt.config();
        prop_assert_eq!(rank(s, m, &app), oracle(s, m, 1.0, [5.0, 15.0, 40.0]));
    }

    #[test]
    fn monotone_in_macro((s, m) in observation(), bump in 0.0f64..50.0) {
        let cfg = ThresholdConfig::default();
        let m2 = (m + bump).min(100.0 - s);
        let (a, b) = (rank(s, m, &cfg), rank(s, m2, &cfg));
        if a >= 2 {
            prop_assert!(b >= a);
        }
    }

    #[test]
    fn slime_only_decides_below_epsilon((s, m) in observation()) {
        let cfg = ThresholdConfig::default();
        let r = rank(s, m, &cfg);
        if m <= 0.1 {
            prop_assert!(r <= 1);
            prop_assert_eq!(r == 1, s > 0.0);
        } else {
            prop_assert!(r >= 2);
            prop_assert_eq!(r, rank(0.0, m, &cfg));
        }
    }

    #[test]
    fn rank_round_trips_through_u8(v in 0u8..6) {
        let r = LofRank::new(v).unwrap();
        prop_assert_eq!(LofRank::try_from(r.value()).unwrap(), r);
        prop_assert!(LofRank::new(v + 6).is_err());
    }
}

#[test]
fn custom_config_text_round_trip() {
    let cfg = ThresholdConfig::parse("macro_presence_epsilon = 0.5\nbound2 = 4\nbound3 = 12\nbound4 = 30\n").unwrap();
    assert_eq!(ThresholdConfig::parse(&cfg.to_text()).unwrap(), cfg);
    assert_eq!(
        ThresholdConfig::parse("preset = figure1-default").unwrap(),
        ThresholdConfig::default()
    );
    assert!(ThresholdConfig::parse("bound2 = 20\n").is_err());
}

#[test]
fn invalid_observations_name_the_field() {
    let cfg = ThresholdConfig::default();
    let err = classify_lof(FoulingObservation::new(-1.0, 0.0), &cfg).unwrap_err();
    assert!(err.to_string().contains("slime"));
    let err = classify_lof(FoulingObservation::new(0.0, f64::NAN), &cfg).unwrap_err();
    assert!(err.to_string().contains("macro"));
    assert!(classify_lof(FoulingObservation::new(60.0, 50.0), &cfg).is_err());
}
