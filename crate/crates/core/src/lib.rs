//! Level-of-fouling (LoF) assessment for vessel hull imagery.
//!
//! The crate turns four-class segmentation masks into hull-relative coverage,
//! maps coverage to an LoF rank through a threshold decision tree, builds and
//! parses multimodal LLM requests, smooths video predictions and scores any
//! prediction source against expert labels.

pub mod coverage;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod llm;
pub mod preprocess;
pub mod rules;
pub mod synth;
pub mod temporal;

pub use coverage::{
    compute_coverage, compute_coverage_soft, coverage_distribution, CoverageHistogram,
    CoverageReport, MaskRaster, ProbabilityRaster, SegClass, SoftMode,
};
pub use error::{LofError, Result};
pub use rules::{classify_lof, FoulingObservation, LofRank, Preset, ThresholdConfig};
pub use temporal::{flip_rate, smooth_sequence, FrameSequence, Weighting};
pub use eval::{compute_metrics, ConfusionMatrix, MetricsReport, ScoredPrediction};
pub use synth::{generate_dataset, generate_mask, generate_video, SynthSpec};
