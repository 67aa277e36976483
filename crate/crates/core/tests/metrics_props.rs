use std::collections::BTreeMap;

use lof_core::{compute_metrics, LofRank, ScoredPrediction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_set(seed: u64) -> (BTreeMap<String, LofRank>, Vec<ScoredPrediction>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..300);
    let unclassified = rng.random_range(0.0..0.5);
    let mut truth = BTreeMap::new();
    let mut preds = Vec::new();
    for i in 0..n {
        let id = format!("p{i}");
        let t = rng.random_range(0..6u8);
        truth.insert(id.clone(), LofRank::new(t).unwrap());
        let top1 = if rng.random_bool(unclassified) {
            None
        } else if rng.random_bool(0.5) {
            Some(t)
        } else {
            Some(rng.random_range(0..6u8))
        };
        let top2 = top1.map(|a| (a + rng.random_range(1..6u8)) % 6);
        preds.push(ScoredPrediction {
            image_id: id,
            top1: top1.map(|v| LofRank::new(v).unwrap()),
            top2: top2.map(|v| LofRank::new(v).unwrap()),
        });
    }
    (truth, preds)
}

#[test]
fn identities_and_recount_over_random_sets() {
    for seed in 0..100 {
        let (truth, preds) = random_set(seed);
        let (m, cm) = compute_metrics(&truth, &preds).unwrap();

        let (mut classified, mut correct, mut top2) = (0u64, 0u64, 0u64);
        let mut rows = [[0u64; 6]; 6];
        for p in &preds {
            let t = truth[&p.image_id];
            if let Some(a) = p.top1 {
                classified += 1;
                rows[t.index()][a.index()] += 1;
                if a == t {
                    correct += 1;
                }
                if a == t || p.top2 == Some(t) {
                    top2 += 1;
                }
            }
        }
        assert_eq!(cm.counts, rows);
        assert_eq!((m.n_classified, m.n_correct, m.n_top2_hits), (classified, correct, top2));
        assert_eq!(m.n_total, preds.len() as u64);

        let lhs = m.accuracy_over_classified * m.classification_rate;
        assert!((lhs - m.accuracy_over_all).abs() <= 1e-12, "seed {seed}");

        if classified > 0 {
            let weighted: f64 = (0..6)
                .filter_map(|c| {
                    m.per_class_accuracy[c].map(|a| a * cm.row_sum(c) as f64 / classified as f64)
                })
                .sum();
            assert!((weighted - m.overall_accuracy).abs() <= 1e-12, "seed {seed}");
            assert!(m.top2_accuracy >= m.overall_accuracy);
        }
    }
}
