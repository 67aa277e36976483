use lof_core::temporal::DEFAULT_WINDOW;
use lof_core::{flip_rate, generate_video, smooth_sequence, FrameSequence, ProbabilityRaster, SynthSpec, Weighting};
use proptest::prelude::*;

const WEIGHTINGS: [Weighting; 3] = [Weighting::Uniform, Weighting::Confidence, Weighting::ClassMass];

fn simplex() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(0.0f64..1.0).prop_map(|v| {
        let s: f64 = v.iter().sum::<f64>() + 1e-3;
        [v[0] / s, v[1] / s, v[2] / s, 1.0 - (v[0] + v[1] + v[2]) / s]
    })
}

fn sequence() -> impl Strategy<Value = FrameSequence> {
    (1usize..8, 1usize..5).prop_flat_map(|(frames, px)| {
        prop::collection::vec(prop::collection::vec(simplex(), px), frames).prop_map(move |fs| {
            let frames = fs
                .into_iter()
                .map(|p| ProbabilityRaster::new(px, 1, p).unwrap())
                .collect();
            FrameSequence::new(frames, None).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn output_stays_on_simplex(seq in sequence(), half in 0usize..4) {
        for weighting in WEIGHTINGS {
            let out = smooth_sequence(&seq, 2 * half + 1, weighting).unwrap();
            prop_assert_eq!(out.len(), seq.len());
            for f in out.frames() {
                for p in f.probs() {
                    prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                    prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
                }
            }
        }
    }

    #[test]
    fn constant_sequence_is_fixed(v in simplex(), n in 1usize..9) {
        let frame = ProbabilityRaster::new(1, 1, vec![v]).unwrap();
        let seq = FrameSequence::new(vec![frame; n], None).unwrap();
        for weighting in WEIGHTINGS {
            prop_assert_eq!(&smooth_sequence(&seq, DEFAULT_WINDOW, weighting).unwrap(), &seq);
        }
    }

    #[test]
    fn window_one_is_identity(seq in sequence()) {
        prop_assert_eq!(smooth_sequence(&seq, 1, Weighting::Confidence).unwrap(), seq);
    }
}

#[test]
fn even_or_zero_window_rejected() {
    let frame = ProbabilityRaster::new(1, 1, vec![[0.25; 4]]).unwrap();
    let seq = FrameSequence::new(vec![frame; 3], None).unwrap();
    assert!(smooth_sequence(&seq, 0, Weighting::Uniform).is_err());
    assert!(smooth_sequence(&seq, 4, Weighting::Uniform).is_err());
}

#[test]
fn two_frame_macro_pull() {
    let a = ProbabilityRaster::new(1, 1, vec![[0.0, 0.0, 0.6, 0.4]]).unwrap();
    let b = ProbabilityRaster::new(1, 1, vec![[0.0, 0.0, 0.1, 0.9]]).unwrap();
    let seq = FrameSequence::new(vec![a, b], None).unwrap();
    assert_eq!(flip_rate(&seq).unwrap(), 1.0);
    let out = smooth_sequence(&seq, 3, Weighting::Uniform).unwrap();
    // Both frames average to (0, 0, 0.35, 0.65).
    for f in out.frames() {
        assert!((f.probs()[0][3] - 0.65).abs() < 1e-12);
    }
    assert_eq!(flip_rate(&out).unwrap(), 0.0);
}

#[test]
fn timestamps_must_increase() {
    let f = ProbabilityRaster::new(1, 1, vec![[1.0, 0.0, 0.0, 0.0]]).unwrap();
    assert!(FrameSequence::new(vec![f.clone(), f.clone()], Some(vec![1.0, 1.0])).is_err());
    assert!(FrameSequence::new(vec![f.clone(), f], Some(vec![0.0, 0.5])).is_ok());
    assert!(FrameSequence::new(vec![], None).is_err());
}

#[test]
fn smoothing_reduces_flips_on_noisy_video() {
    let mut wins = 0;
    for seed in 0..40u64 {
        let spec = SynthSpec {
            width: 12,
            height: 12,
            slime_pct: 30.0,
            macro_pct: 30.0,
            water_fraction: 0.2,
            blob_count: 3,
            seed,
        };
        let (seq, _) = generate_video(&spec, 10, 0.4).unwrap();
        let before = flip_rate(&seq).unwrap();
        assert!(before > 0.0);
        let after = flip_rate(&smooth_sequence(&seq, DEFAULT_WINDOW, Weighting::Confidence).unwrap()).unwrap();
        if after < before {
            wins += 1;
        }
    }
    assert!(wins >= 38, "{wins}/40");
}
