//! Prediction CSV interchange:
//! `image_id,top1,top2,s0,s1,s2,s3,s4,s5,source_model`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{IoContext, LofError, Result};
use crate::rules::LofRank;

pub const PREDICTION_HEADER: [&str; 10] = [
    "image_id",
    "top1",
    "top2",
    "s0",
    "s1",
    "s2",
    "s3",
    "s4",
    "s5",
    "source_model",
];

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub image_id: String,
    pub top1: LofRank,
    pub top2: LofRank,
    pub class_scores: [f64; 6],
    pub source_model: String,
}

/// Highest and second-highest score indices, ties to the lowest index.
pub fn top_two(scores: &[f64; 6]) -> (usize, usize) {
    let mut first = 0;
    for i in 1..6 {
        if scores[i] > scores[first] {
            first = i;
        }
    }
    let mut second = if first == 0 { 1 } else { 0 };
    for i in 0..6 {
        if i != first && scores[i] > scores[second] {
            second = i;
        }
    }
    (first, second)
}

impl PredictionRecord {
    pub fn from_scores(
        image_id: impl Into<String>,
        class_scores: [f64; 6],
        source_model: impl Into<String>,
    ) -> Result<Self> {
        let image_id = image_id.into();
        if class_scores.iter().any(|s| !s.is_finite()) {
            return Err(LofError::InconsistentPrediction {
                id: image_id,
                reason: "non-finite score".into(),
            });
        }
        let (a, b) = top_two(&class_scores);
        Ok(Self {
            image_id,
            top1: LofRank::new(a as u8)?,
            top2: LofRank::new(b as u8)?,
            class_scores,
            source_model: source_model.into(),
        })
    }

    /// A one-hot prediction, as emitted by the rule engine.
    pub fn one_hot(image_id: impl Into<String>, rank: LofRank, source_model: &str) -> Self {
        let mut scores = [0.0; 6];
        scores[rank.index()] = 1.0;
        Self::from_scores(image_id, scores, source_model).expect("one-hot scores are finite")
    }

    pub fn validate(&self) -> Result<()> {
        let err = |reason: String| LofError::InconsistentPrediction {
            id: self.image_id.clone(),
            reason,
        };
        if self.class_scores.iter().any(|s| !s.is_finite()) {
            return Err(err("non-finite score".into()));
        }
        let (a, b) = top_two(&self.class_scores);
        if self.top1.index() != a {
            return Err(err(format!("top1={} but argmax={a}", self.top1)));
        }
        if self.top2.index() != b {
            return Err(err(format!("top2={} but second argmax={b}", self.top2)));
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    image_id: String,
    top1: u8,
    top2: u8,
    s0: f64,
    s1: f64,
    s2: f64,
    s3: f64,
    s4: f64,
    s5: f64,
    source_model: String,
}

pub fn parse_predictions(text: &str, origin: &Path) -> Result<Vec<PredictionRecord>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != PREDICTION_HEADER {
        return Err(LofError::Parse {
            path: origin.to_path_buf(),
            line: 1,
            reason: format!("expected header `{}`", PREDICTION_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let line = i + 2;
        let parse_err = |reason: String| LofError::Parse {
            path: origin.to_path_buf(),
            line,
            reason,
        };
        let row = row.map_err(|e| parse_err(e.to_string()))?;
        let record = PredictionRecord {
            top1: LofRank::new(row.top1).map_err(|e| parse_err(e.to_string()))?,
            top2: LofRank::new(row.top2).map_err(|e| parse_err(e.to_string()))?,
            class_scores: [row.s0, row.s1, row.s2, row.s3, row.s4, row.s5],
            image_id: row.image_id,
            source_model: row.source_model,
        };
        record.validate()?;
        out.push(record);
    }
    Ok(out)
}

pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let text = fs::read_to_string(path).io_context(|| format!("reading {}", path.display()))?;
    parse_predictions(&text, path)
}

/// Ids not present in `known`. These are tolerated at load time but cannot
/// be scored.
pub fn warn_unknown_ids(
    preds: &[PredictionRecord],
    known: impl Fn(&str) -> bool,
) -> Vec<&str> {
    let unknown: Vec<&str> = preds
        .iter()
        .map(|p| p.image_id.as_str())
        .filter(|id| !known(id))
        .collect();
    for id in &unknown {
        log::warn!("prediction for unknown image id `{id}`");
    }
    unknown
}

pub fn predictions_to_csv(records: &[PredictionRecord]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for r in records {
        r.validate()?;
        let [s0, s1, s2, s3, s4, s5] = r.class_scores;
        writer.serialize(Row {
            image_id: r.image_id.clone(),
            top1: r.top1.value(),
            top2: r.top2.value(),
            s0,
            s1,
            s2,
            s3,
            s4,
            s5,
            source_model: r.source_model.clone(),
        })?;
    }
    if records.is_empty() {
        writer.write_record(PREDICTION_HEADER)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| LofError::Invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_predictions(records: &[PredictionRecord], path: &Path) -> Result<()> {
    fs::write(path, predictions_to_csv(records)?)
        .io_context(|| format!("writing {}", path.display()))
}
