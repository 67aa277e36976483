use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetManifest, PredictionRecord};
use crate::error::{LofError, Result};
use crate::llm::BatchResult;
use crate::rules::LofRank;

/// Rows are the true rank, columns the predicted rank.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 6]; 6],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, t: usize) -> u64 {
        self.counts[t].iter().sum()
    }

    pub fn diagonal(&self) -> u64 {
        (0..6).map(|i| self.counts[i][i]).sum()
    }
}

pub fn confusion(pairs: &[(LofRank, LofRank)]) -> ConfusionMatrix {
    let mut m = ConfusionMatrix::default();
    for (t, p) in pairs {
        m.counts[t.index()][p.index()] += 1;
    }
    m
}

/// A prediction from any source. `top1 = None` marks an unclassified image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoredPrediction {
    pub image_id: String,
    pub top1: Option<LofRank>,
    pub top2: Option<LofRank>,
}

impl From<&PredictionRecord> for ScoredPrediction {
    fn from(p: &PredictionRecord) -> Self {
        Self {
            image_id: p.image_id.clone(),
            top1: Some(p.top1),
            top2: Some(p.top2),
        }
    }
}

impl From<&BatchResult> for ScoredPrediction {
    fn from(r: &BatchResult) -> Self {
        Self {
            image_id: r.id.clone(),
            top1: r.assessment.rank(),
            top2: None,
        }
    }
}

pub fn truth_labels(m: &DatasetManifest) -> BTreeMap<String, LofRank> {
    m.records.iter().map(|r| (r.id.clone(), r.lof)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Correct over classified; same as `accuracy_over_classified`.
    pub overall_accuracy: f64,
    /// `None` where the class has no classified images.
    pub per_class_accuracy: [Option<f64>; 6],
    pub top2_accuracy: f64,
    pub classification_rate: f64,
    pub accuracy_over_classified: f64,
    pub accuracy_over_all: f64,
    pub n_total: u64,
    pub n_classified: u64,
    pub n_correct: u64,
    pub n_top2_hits: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Scores predictions against expert labels. Rates over classified images
/// are 0 when nothing was classified.
pub fn compute_metrics(
    truth: &BTreeMap<String, LofRank>,
    preds: &[ScoredPrediction],
) -> Result<(MetricsReport, ConfusionMatrix)> {
    let mut pairs = Vec::with_capacity(preds.len());
    let mut top2_hits = 0u64;
    for p in preds {
        let t = *truth
            .get(&p.image_id)
            .ok_or_else(|| LofError::UnknownId(p.image_id.clone()))?;
        if let Some(top1) = p.top1 {
            pairs.push((t, top1));
            if top1 == t || p.top2 == Some(t) {
                top2_hits += 1;
            }
        }
    }
    let cm = confusion(&pairs);
    let n_total = preds.len() as u64;
    let n_classified = pairs.len() as u64;
    let n_correct = cm.diagonal();
    let mut per_class_accuracy = [None; 6];
    for (c, slot) in per_class_accuracy.iter_mut().enumerate() {
        let row = cm.row_sum(c);
        if row > 0 {
            *slot = Some(cm.counts[c][c] as f64 / row as f64);
        }
    }
    let accuracy_over_classified = ratio(n_correct, n_classified);
    let report = MetricsReport {
        overall_accuracy: accuracy_over_classified,
        per_class_accuracy,
        top2_accuracy: ratio(top2_hits, n_classified),
        classification_rate: ratio(n_classified, n_total),
        accuracy_over_classified,
        accuracy_over_all: ratio(n_correct, n_total),
        n_total,
        n_classified,
        n_correct,
        n_top2_hits: top2_hits,
    };
    Ok((report, cm))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: u8) -> LofRank {
        LofRank::new(v).unwrap()
    }

    fn pred(id: &str, top1: Option<u8>, top2: Option<u8>) -> ScoredPrediction {
        ScoredPrediction {
            image_id: id.into(),
            top1: top1.map(r),
            top2: top2.map(r),
        }
    }

    #[test]
    fn confusion_cells() {
        let m = confusion(&[(r(1), r(1)), (r(5), r(5))]);
        assert_eq!(m.counts[1][1], 1);
        assert_eq!(m.counts[5][5], 1);
        assert_eq!(m.total(), 2);
        let m = confusion(&[(r(3), r(4))]);
        assert_eq!(m.counts[3][4], 1);
        assert_eq!(m.diagonal(), 0);
        let m = confusion(&[(r(2), r(1)), (r(2), r(2)), (r(0), r(0))]);
        assert_eq!(m.row_sum(2), 2);
        assert_eq!(m.row_sum(0), 1);
    }

    #[test]
    fn top2_hit_without_top1_hit() {
        let truth: BTreeMap<_, _> = [("a".to_string(), r(3))].into();
        let (m, _) = compute_metrics(&truth, &[pred("a", Some(4), Some(3))]).unwrap();
        assert_eq!(m.overall_accuracy, 0.0);
        assert_eq!(m.top2_accuracy, 1.0);
    }

    #[test]
    fn unclassified_and_undefined_rows() {
        let truth: BTreeMap<_, _> = [
            ("a".to_string(), r(1)),
            ("b".to_string(), r(1)),
            ("c".to_string(), r(0)),
        ]
        .into();
        let preds = [pred("a", Some(1), None), pred("b", None, None), pred("c", None, None)];
        let (m, cm) = compute_metrics(&truth, &preds).unwrap();
        assert_eq!(m.n_total, 3);
        assert_eq!(m.n_classified, 1);
        assert_eq!(m.per_class_accuracy[1], Some(1.0));
        assert_eq!(m.per_class_accuracy[0], None);
        assert_eq!(m.accuracy_over_classified, 1.0);
        assert!((m.accuracy_over_all - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(cm.total(), 1);
    }

    #[test]
    fn unknown_id_rejected() {
        let truth: BTreeMap<_, _> = [("a".to_string(), r(1))].into();
        assert!(matches!(
            compute_metrics(&truth, &[pred("zzz", Some(1), None)]),
            Err(LofError::UnknownId(_))
        ));
    }

    #[test]
    fn nothing_classified() {
        let truth: BTreeMap<_, _> = [("a".to_string(), r(1))].into();
        let (m, _) = compute_metrics(&truth, &[pred("a", None, None)]).unwrap();
        assert_eq!(m.classification_rate, 0.0);
        assert_eq!(m.accuracy_over_classified, 0.0);
        assert_eq!(m.accuracy_over_all, 0.0);
    }
}
