//! Segmentation rasters and hull-relative coverage.
//!
//! Hull area is every pixel that is not Water. Percentages are always relative
//! to that hull area, never to the full frame.

use serde::{Deserialize, Serialize};

use crate::error::{LofError, Result};
use crate::rules::FoulingObservation;

/// Tolerance on the per-pixel probability simplex.
pub const SIMPLEX_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum SegClass {
    Water = 0,
    Clean = 1,
    Slime = 2,
    Macrofouling = 3,
}

impl SegClass {
    pub const ALL: [SegClass; 4] = [
        SegClass::Water,
        SegClass::Clean,
        SegClass::Slime,
        SegClass::Macrofouling,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(idx: usize) -> Option<SegClass> {
        Self::ALL.get(idx).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskRaster {
    width: usize,
    height: usize,
    labels: Vec<SegClass>,
}

impl MaskRaster {
    pub fn new(width: usize, height: usize, labels: Vec<SegClass>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(LofError::InvalidRaster("mask has zero area".into()));
        }
        if labels.len() != width * height {
            return Err(LofError::InvalidRaster(format!(
                "{} labels for a {width}x{height} mask",
                labels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn filled(width: usize, height: usize, class: SegClass) -> Result<Self> {
        Self::new(width, height, vec![class; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[SegClass] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> SegClass {
        self.labels[y * self.width + x]
    }

    /// Pixel counts indexed by `SegClass::index`.
    pub fn class_counts(&self) -> [u64; 4] {
        let mut counts = [0u64; 4];
        for &c in &self.labels {
            counts[c.index()] += 1;
        }
        counts
    }
}

/// Per-pixel class probabilities in (Water, Clean, Slime, Macrofouling) order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityRaster {
    width: usize,
    height: usize,
    probs: Vec<[f64; 4]>,
}

impl ProbabilityRaster {
    pub fn new(width: usize, height: usize, probs: Vec<[f64; 4]>) -> Result<Self> {
        Self::with_tolerance(width, height, probs, SIMPLEX_TOLERANCE)
    }

    pub(crate) fn with_tolerance(
        width: usize,
        height: usize,
        probs: Vec<[f64; 4]>,
        tolerance: f64,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(LofError::InvalidRaster("raster has zero area".into()));
        }
        if probs.len() != width * height {
            return Err(LofError::InvalidRaster(format!(
                "{} pixels for a {width}x{height} raster",
                probs.len()
            )));
        }
        for (i, p) in probs.iter().enumerate() {
            if p.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
                return Err(LofError::InvalidRaster(format!(
                    "pixel {i} has a probability outside [0,1]: {p:?}"
                )));
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > tolerance {
                return Err(LofError::InvalidRaster(format!(
                    "pixel {i} sums to {sum}, not 1"
                )));
            }
        }
        Ok(Self {
            width,
            height,
            probs,
        })
    }

    pub fn one_hot(mask: &MaskRaster) -> Self {
        let probs = mask
            .labels
            .iter()
            .map(|c| {
                let mut v = [0.0; 4];
                v[c.index()] = 1.0;
                v
            })
            .collect();
        Self {
            width: mask.width,
            height: mask.height,
            probs,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn probs(&self) -> &[[f64; 4]] {
        &self.probs
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Hard labels, ties resolved to the lowest class index.
    pub fn argmax(&self) -> MaskRaster {
        MaskRaster {
            width: self.width,
            height: self.height,
            labels: self.probs.iter().map(argmax4).collect(),
        }
    }
}

pub(crate) fn argmax4(p: &[f64; 4]) -> SegClass {
    let mut best = 0;
    for i in 1..4 {
        if p[i] > p[best] {
            best = i;
        }
    }
    SegClass::ALL[best]
}

/// Which area the coverage percentages are relative to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageBasis {
    Hull,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Non-water area in pixels. Fractional for probability-mass coverage.
    pub hull_pixels: f64,
    pub water_pixels: f64,
    pub clean_pct: f64,
    pub slime_pct: f64,
    pub macro_pct: f64,
    pub basis: CoverageBasis,
}

impl CoverageReport {
    /// Builds a report from per-class areas (Water, Clean, Slime, Macrofouling).
    pub fn from_areas(areas: [f64; 4]) -> Result<Self> {
        let hull = areas[1] + areas[2] + areas[3];
        if hull < 1.0 {
            return Err(LofError::NoHullVisible);
        }
        Ok(Self {
            hull_pixels: hull,
            water_pixels: areas[0],
            clean_pct: areas[1] / hull * 100.0,
            slime_pct: areas[2] / hull * 100.0,
            macro_pct: areas[3] / hull * 100.0,
            basis: CoverageBasis::Hull,
        })
    }

    pub fn observation(&self) -> FoulingObservation {
        // Floating division can leave the sum a hair above 100.
        let slime = self.slime_pct.clamp(0.0, 100.0);
        let macro_pct = self.macro_pct.clamp(0.0, 100.0 - slime);
        FoulingObservation::new(slime, macro_pct)
    }
}

pub fn compute_coverage(mask: &MaskRaster) -> Result<CoverageReport> {
    let counts = mask.class_counts();
    CoverageReport::from_areas(counts.map(|c| c as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SoftMode {
    #[default]
    Argmax,
    Expected,
}

impl std::str::FromStr for SoftMode {
    type Err = LofError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "argmax" => Ok(SoftMode::Argmax),
            "expected" => Ok(SoftMode::Expected),
            other => Err(LofError::Invalid(format!("unknown coverage mode `{other}`"))),
        }
    }
}

pub fn compute_coverage_soft(probs: &ProbabilityRaster, mode: SoftMode) -> Result<CoverageReport> {
    match mode {
        SoftMode::Argmax => compute_coverage(&probs.argmax()),
        SoftMode::Expected => {
            let mut mass = [0.0f64; 4];
            for p in &probs.probs {
                for (m, v) in mass.iter_mut().zip(p) {
                    *m += v;
                }
            }
            CoverageReport::from_areas(mass)
        }
    }
}

/// Binned slime and macrofouling coverage across many frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageHistogram {
    pub bin_width: f64,
    /// Lower edge of each bin; the last bin is closed at 100.
    pub bin_starts: Vec<f64>,
    pub slime_counts: Vec<u64>,
    pub macro_counts: Vec<u64>,
    pub n_reports: usize,
}

pub const DEFAULT_BIN_WIDTH: f64 = 5.0;

pub fn coverage_distribution(
    reports: &[CoverageReport],
    bin_width: f64,
) -> Result<CoverageHistogram> {
    if reports.is_empty() {
        return Err(LofError::Empty("no coverage reports".into()));
    }
    if !(bin_width > 0.0 && bin_width <= 100.0) {
        return Err(LofError::Invalid(format!("bin width {bin_width} outside (0,100]")));
    }
    let n_bins = (100.0 / bin_width).ceil() as usize;
    let bin_of = |pct: f64| ((pct / bin_width).floor().max(0.0) as usize).min(n_bins - 1);
    let mut slime = vec![0u64; n_bins];
    let mut macro_counts = vec![0u64; n_bins];
    for r in reports {
        slime[bin_of(r.slime_pct)] += 1;
        macro_counts[bin_of(r.macro_pct)] += 1;
    }
    Ok(CoverageHistogram {
        bin_width,
        bin_starts: (0..n_bins).map(|i| i as f64 * bin_width).collect(),
        slime_counts: slime,
        macro_counts,
        n_reports: reports.len(),
    })
}
