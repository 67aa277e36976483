//! Dataset manifests, train/test splits, raster codecs and prediction files.

pub mod codec;
pub mod manifest;
pub mod predictions;
pub mod split;

pub use codec::{
    colorize_mask, decode_mask, encode_mask, read_mask, read_probabilities, write_mask,
    write_probabilities, PALETTE, PROB_QUANT_TOLERANCE,
};
pub use manifest::{dataset_stats, load_manifest, DatasetManifest, DatasetStats, ImageRecord, Media};
pub use predictions::{
    load_predictions, parse_predictions, predictions_to_csv, write_predictions, PredictionRecord,
};
pub use split::{make_split, Split, SplitSpec};
