use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the assessment toolkit.
#[derive(Debug, Error)]
pub enum LofError {
    #[error("invalid {field}: {reason}")]
    InvalidObservation { field: &'static str, reason: String },

    #[error("invalid threshold configuration: {}", .0.join("; "))]
    InvalidThresholds(Vec<String>),

    #[error("unknown threshold preset `{0}`")]
    UnknownPreset(String),

    #[error("rank {0} outside 0..=5")]
    RankOutOfRange(i64),

    #[error("no hull visible")]
    NoHullVisible,

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("unknown channel `{0}`")]
    UnknownChannel(String),

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("{0}")]
    Invalid(String),

    #[error("prediction for `{id}` is inconsistent: {reason}")]
    InconsistentPrediction { id: String, reason: String },

    #[error("unknown image id `{0}`")]
    UnknownId(String),

    #[error("mask decode failed: {0}")]
    MaskDecode(String),

    #[error("file {0} already exists; refusing to overwrite")]
    AlreadyExists(PathBuf),

    #[error("prompt error: {0}")]
    Prompt(String),

    #[error("request failed after {attempts} attempt(s): {reason}")]
    RequestFailed { attempts: u32, reason: String },

    #[error("malformed response: {0}")]
    MalformedResponse(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Png(#[from] png::DecodingError),

    #[error(transparent)]
    PngEncode(#[from] png::EncodingError),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl LofError {
    /// Stable snake_case tag for machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            LofError::InvalidObservation { .. } => "invalid_observation",
            LofError::InvalidThresholds(_) => "invalid_thresholds",
            LofError::UnknownPreset(_) => "unknown_preset",
            LofError::RankOutOfRange(_) => "rank_out_of_range",
            LofError::NoHullVisible => "no_hull_visible",
            LofError::InvalidRaster(_) => "invalid_raster",
            LofError::InvalidImage(_) => "invalid_image",
            LofError::UnknownChannel(_) => "unknown_channel",
            LofError::InvalidSequence(_) => "invalid_sequence",
            LofError::Parse { .. } => "parse",
            LofError::DuplicateId(_) => "duplicate_id",
            LofError::Empty(_) => "empty",
            LofError::Invalid(_) => "invalid",
            LofError::InconsistentPrediction { .. } => "inconsistent_prediction",
            LofError::UnknownId(_) => "unknown_id",
            LofError::MaskDecode(_) => "mask_decode",
            LofError::AlreadyExists(_) => "already_exists",
            LofError::Prompt(_) => "prompt",
            LofError::RequestFailed { .. } => "request_failed",
            LofError::MalformedResponse(_) => "malformed_response",
            LofError::Config(_) => "config",
            LofError::Io { .. } => "io",
            LofError::Png(_) | LofError::PngEncode(_) | LofError::Image(_) => "image_codec",
            LofError::Json(_) => "json",
            LofError::Csv(_) => "csv",
        }
    }
}

pub type Result<T, E = LofError> = std::result::Result<T, E>;

pub(crate) trait IoContext<T> {
    fn io_context(self, context: impl FnOnce() -> String) -> Result<T>;
}

impl<T> IoContext<T> for std::io::Result<T> {
    fn io_context(self, context: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|source| LofError::Io {
            context: context(),
            source,
        })
    }
}
