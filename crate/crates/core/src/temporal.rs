//! Windowed averaging of per-frame class probabilities across a video.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coverage::{argmax4, ProbabilityRaster};
use crate::error::{LofError, Result};

pub const DEFAULT_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<ProbabilityRaster>,
    timestamps: Option<Vec<f64>>,
}

impl FrameSequence {
    pub fn new(frames: Vec<ProbabilityRaster>, timestamps: Option<Vec<f64>>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| LofError::InvalidSequence("sequence has no frames".into()))?;
        let dims = first.dims();
        if let Some((i, f)) = frames.iter().enumerate().find(|(_, f)| f.dims() != dims) {
            return Err(LofError::InvalidSequence(format!(
                "frame {i} is {}x{}, expected {}x{}",
                f.width(),
                f.height(),
                dims.0,
                dims.1
            )));
        }
        if let Some(ts) = &timestamps {
            if ts.len() != frames.len() {
                return Err(LofError::InvalidSequence(format!(
                    "{} timestamps for {} frames",
                    ts.len(),
                    frames.len()
                )));
            }
            if ts.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
                return Err(LofError::InvalidSequence(
                    "timestamps are not strictly increasing".into(),
                ));
            }
        }
        Ok(Self { frames, timestamps })
    }

    pub fn frames(&self) -> &[ProbabilityRaster] {
        &self.frames
    }

    pub fn timestamps(&self) -> Option<&[f64]> {
        self.timestamps.as_deref()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    Uniform,
    /// Each frame's vector at a pixel is weighted by its max class probability.
    #[default]
    Confidence,
    /// Each class entry is weighted by its own probability.
    ClassMass,
}

impl FromStr for Weighting {
    type Err = LofError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Weighting::Uniform),
            "confidence" => Ok(Weighting::Confidence),
            "class-mass" => Ok(Weighting::ClassMass),
            other => Err(LofError::Invalid(format!("unknown weighting `{other}`"))),
        }
    }
}

/// Replaces each frame with the weighted mean of the frames in a centered
/// window. Windows are truncated at the sequence ends, never padded.
pub fn smooth_sequence(
    seq: &FrameSequence,
    window: usize,
    weighting: Weighting,
) -> Result<FrameSequence> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(LofError::InvalidSequence(format!(
            "window must be a positive odd integer, got {window}"
        )));
    }
    let n = seq.frames.len();
    let half = window / 2;
    let (w, h) = seq.frames[0].dims();
    let frames = (0..n)
        .into_par_iter()
        .map(|t| {
            let window_frames = &seq.frames[t.saturating_sub(half)..(t + half + 1).min(n)];
            let probs = (0..w * h)
                .map(|px| smooth_pixel(window_frames.iter().map(|f| &f.probs()[px]), weighting))
                .collect();
            ProbabilityRaster::with_tolerance(w, h, probs, 1e-9)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrameSequence {
        frames,
        timestamps: seq.timestamps.clone(),
    })
}

fn smooth_pixel<'a>(
    mut vectors: impl Iterator<Item = &'a [f64; 4]> + Clone,
    weighting: Weighting,
) -> [f64; 4] {
    let first = *vectors.clone().next().expect("window is never empty");
    if vectors.clone().all(|v| *v == first) {
        return first;
    }
    let mut acc = [0.0f64; 4];
    let mut class_weight = [0.0f64; 4];
    for v in vectors.by_ref() {
        match weighting {
            Weighting::Uniform | Weighting::Confidence => {
                let wgt = if weighting == Weighting::Uniform {
                    1.0
                } else {
                    v.iter().cloned().fold(0.0, f64::max)
                };
                for c in 0..4 {
                    acc[c] += wgt * v[c];
                    class_weight[c] += wgt;
                }
            }
            Weighting::ClassMass => {
                for c in 0..4 {
                    acc[c] += v[c] * v[c];
                    class_weight[c] += v[c];
                }
            }
        }
    }
    let mut mean = [0.0f64; 4];
    for c in 0..4 {
        if class_weight[c] > 0.0 {
            mean[c] = acc[c] / class_weight[c];
        }
    }
    let total: f64 = mean.iter().sum();
    if total > 0.0 {
        mean.map(|m| (m / total).min(1.0))
    } else {
        first
    }
}

/// Fraction of (pixel, consecutive frame pair) combinations whose argmax
/// class changes.
pub fn flip_rate(seq: &FrameSequence) -> Result<f64> {
    if seq.frames.len() < 2 {
        return Err(LofError::InvalidSequence(
            "flip rate needs at least two frames".into(),
        ));
    }
    let mut flips = 0u64;
    let mut pairs = 0u64;
    for pair in seq.frames.windows(2) {
        for (a, b) in pair[0].probs().iter().zip(pair[1].probs()) {
            pairs += 1;
            if argmax4(a) != argmax4(b) {
                flips += 1;
            }
        }
    }
    Ok(flips as f64 / pairs as f64)
}
