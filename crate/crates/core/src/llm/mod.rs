//! Multimodal LLM assessment: image encoding, prompt templates, guideline
//! retrieval, submission, response parsing and batch runs.

pub mod batch;
pub mod client;
pub mod encode;
pub mod mock;
pub mod parse;
pub mod prompt;
pub mod retrieve;

pub use batch::{read_journal, run_batch, BatchConfig, BatchItem, BatchResult, JournalEntry};
pub use client::{submit, EndpointConfig, SubmitOutcome, API_KEY_ENV};
pub use encode::{encode_image, ImagePayload, MediaType};
pub use mock::{MockServer, ScriptEntry};
pub use parse::{format_assessment, parse_response, AssessmentStatus, ParsedAssessment};
pub use prompt::{build_prompt, request_hash, LlmRequest, PromptOptions, PromptTemplate, TemplateName};
pub use retrieve::{default_chunk_store, retrieve_chunks, ChunkTag, GuidelineChunk};
