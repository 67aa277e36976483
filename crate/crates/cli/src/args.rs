use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lof_core::llm::TemplateName;
use lof_core::preprocess::EdgeOperator;
use lof_core::{SoftMode, Weighting};

#[derive(Debug, Parser)]
#[command(name = "lof", version, about = "Level-of-fouling assessment for hull imagery")]
pub struct Cli {
    /// Log filter, e.g. `warn`, `info` or `lof_core=debug`.
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Count images per LoF rank in a manifest.
    Stats(StatsArgs),
    /// Write a seeded train/test split; never overwrites an existing split.
    Split(SplitArgs),
    /// Export RGB, HSV and edge channel stacks for every manifest image.
    Preprocess(PreprocessArgs),
    /// Hull-relative coverage for a directory of masks or probability rasters.
    Coverage(CoverageArgs),
    /// Rate masks with the threshold decision tree and write a prediction CSV.
    Rate(RateArgs),
    /// Temporally smooth a directory of per-frame probability rasters.
    Smooth(SmoothArgs),
    /// Multimodal LLM assessment.
    Llm {
        #[command(subcommand)]
        command: LlmCommand,
    },
    /// Generate a synthetic dataset or probability video with known ground truth.
    Synth(SynthArgs),
    /// Score predictions against manifest labels and write report files.
    Eval(EvalArgs),
    /// Re-render report files from a report.json.
    Report(ReportArgs),
}

#[derive(Debug, Subcommand)]
pub enum LlmCommand {
    /// Assess every manifest image through a chat-completions endpoint.
    Run(LlmRunArgs),
    /// Serve a replay script as an offline chat-completions endpoint.
    MockServe(MockServeArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct StatsArgs {
    /// Dataset manifest (JSONL).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Also write the counts as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SplitArgs {
    /// Dataset manifest (JSONL).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Split file to create.
    #[arg(long)]
    pub out: PathBuf,
    /// Share of each class assigned to train.
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    /// RNG seed; identical seeds give identical output.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Split the whole manifest at once instead of per LoF class.
    #[arg(long)]
    pub no_stratify: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct PreprocessArgs {
    /// Dataset manifest (JSONL).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory; one subdirectory per image id.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated channel list drawn from R,G,B,H,S,V,E.
    #[arg(long, default_value = "R,G,B,H,S,V,E")]
    pub channels: String,
    /// Edge operator: sobel or laplacian.
    #[arg(long, value_parser = parse_edge, default_value = "sobel")]
    pub edge: EdgeOperator,
}

/// Mask or probability input shared by `coverage` and `rate`.
#[derive(Debug, Args, Serialize)]
pub struct RasterInput {
    /// Directory of indexed mask PNGs; file stem is the image id.
    #[arg(long, conflicts_with = "probs", required_unless_present = "probs")]
    pub masks: Option<PathBuf>,
    /// Directory of 16-bit RGBA probability PNGs; file stem is the image id.
    #[arg(long)]
    pub probs: Option<PathBuf>,
    /// How probability rasters become coverage.
    #[arg(long, value_parser = parse_mode, default_value = "argmax")]
    pub mode: SoftMode,
}

#[derive(Debug, Args, Serialize)]
pub struct CoverageArgs {
    #[command(flatten)]
    pub input: RasterInput,
    /// Coverage CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a binned coverage histogram as JSON.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    /// Histogram bin width in percent.
    #[arg(long, default_value_t = lof_core::coverage::DEFAULT_BIN_WIDTH)]
    pub bin_width: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct RateArgs {
    #[command(flatten)]
    pub input: RasterInput,
    /// Threshold preset name or key=value config file.
    #[arg(long, default_value = "figure1-default")]
    pub preset: String,
    /// Prediction CSV to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SmoothArgs {
    /// Directory of probability PNGs, one per frame, ordered by file name.
    #[arg(long)]
    pub frames: PathBuf,
    /// Output directory for smoothed frames.
    #[arg(long)]
    pub out: PathBuf,
    /// Odd window length in frames.
    #[arg(long, default_value_t = lof_core::temporal::DEFAULT_WINDOW)]
    pub window: usize,
    /// uniform, confidence or class-mass.
    #[arg(long, value_parser = parse_weighting, default_value = "confidence")]
    pub weighting: Weighting,
}

#[derive(Debug, Args, Serialize)]
pub struct LlmRunArgs {
    /// baseline, expert, conservative or expert+rag.
    #[arg(long, value_parser = parse_template)]
    pub template: TemplateName,
    /// Base URL; requests go to <endpoint>/chat/completions.
    #[arg(long)]
    pub endpoint: String,
    /// Dataset manifest (JSONL).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Append-only journal; ids already present are skipped.
    #[arg(long, default_value = "llm-journal.jsonl")]
    pub journal: PathBuf,
    /// Maximum requests in flight.
    #[arg(long, default_value_t = 4)]
    pub concurrency: usize,
    /// Guideline chunk store (JSONL), or `builtin`. Required for expert+rag.
    #[arg(long)]
    pub chunks: Option<String>,
    /// Number of guideline chunks retrieved into the prompt.
    #[arg(long, default_value_t = lof_core::llm::prompt::DEFAULT_RAG_SLOTS)]
    pub rag_k: usize,
    /// Query used to rank guideline chunks.
    #[arg(long, default_value = lof_core::llm::retrieve::DEFAULT_RAG_QUERY)]
    pub rag_query: String,
    /// Model identifier sent with each request.
    #[arg(long, default_value = "openai/gpt-4o")]
    pub model: String,
    /// Sampling temperature.
    #[arg(long, default_value_t = 0.0)]
    pub temperature: f64,
    /// Completion token limit.
    #[arg(long, default_value_t = 512)]
    pub max_tokens: u32,
    /// Per-request timeout.
    #[arg(long, default_value_t = 120)]
    pub timeout_secs: u64,
    /// Attempts per image, counting the first.
    #[arg(long, default_value_t = 3)]
    pub max_attempts: u32,
    /// First retry delay; doubles on each further retry.
    #[arg(long, default_value_t = 500)]
    pub backoff_ms: u64,
    /// Also write every result, including failures, as JSONL.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MockServeArgs {
    /// Replay script (JSONL).
    #[arg(long)]
    pub script: PathBuf,
    /// Port to listen on (0 picks a free one).
    #[arg(long, default_value_t = 8089)]
    pub port: u16,
    /// Address to bind.
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// RNG seed; identical seeds give identical output.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Images per LoF rank 0..5.
    #[arg(long, default_value = "7,263,70,113,126,183")]
    pub counts: String,
    /// Generate a probability video with this many frames instead of a dataset.
    #[arg(long)]
    pub video_frames: Option<usize>,
    /// Video noise level in [0,1).
    #[arg(long, default_value_t = 0.4)]
    pub noise: f64,
    /// Video frame width and height.
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    /// Video slime target, percent of hull.
    #[arg(long, default_value_t = 30.0)]
    pub slime: f64,
    /// Video macrofouling target, percent of hull.
    #[arg(long, default_value_t = 20.0)]
    pub macro_pct: f64,
    /// Video water fraction of the frame.
    #[arg(long, default_value_t = 0.2)]
    pub water: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Manifest holding the expert labels.
    #[arg(long)]
    pub truth: PathBuf,
    /// Prediction CSV.
    #[arg(long, conflicts_with = "journal", required_unless_present = "journal")]
    pub preds: Option<PathBuf>,
    /// LLM journal; manifest images missing from it count as unclassified.
    #[arg(long)]
    pub journal: Option<PathBuf>,
    /// Coverage CSV to include as a histogram.
    #[arg(long)]
    pub coverage: Option<PathBuf>,
    /// Report directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// report.json written by `eval`.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory to re-emit report files into; markdown goes to stdout otherwise.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_edge(s: &str) -> Result<EdgeOperator, String> {
    s.parse().map_err(|e: lof_core::LofError| e.to_string())
}

fn parse_mode(s: &str) -> Result<SoftMode, String> {
    s.parse().map_err(|e: lof_core::LofError| e.to_string())
}

fn parse_weighting(s: &str) -> Result<Weighting, String> {
    s.parse().map_err(|e: lof_core::LofError| e.to_string())
}

fn parse_template(s: &str) -> Result<TemplateName, String> {
    s.parse().map_err(|e: lof_core::LofError| e.to_string())
}
