//! Bounded-parallel batch assessment with a resumable journal.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use tokio::task::JoinSet;

use super::client::{submit, EndpointConfig};
use super::encode::encode_image;
use super::parse::{parse_response, ParsedAssessment};
use super::prompt::{build_prompt, PromptOptions, PromptTemplate};
use super::retrieve::GuidelineChunk;
use crate::error::{IoContext, LofError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchItem {
    pub id: String,
    pub image: PathBuf,
}

#[derive(Debug, Clone)]
pub struct BatchConfig {
    pub template: PromptTemplate,
    /// Guideline excerpts inserted into every prompt.
    pub chunks: Vec<GuidelineChunk>,
    pub prompt: PromptOptions,
    pub endpoint: EndpointConfig,
    pub concurrency: usize,
    pub journal: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub id: String,
    pub assessment: ParsedAssessment,
    /// Why no response was obtained, for unclassified results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// One journal line: the raw response and its parse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub id: String,
    pub raw: String,
    pub result: ParsedAssessment,
}

pub fn read_journal(path: &Path) -> Result<Vec<JournalEntry>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path).io_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<JournalEntry>(line) {
            Ok(e) => out.push(e),
            // A torn final line from an interrupted run is dropped.
            Err(_) if i + 1 == text.lines().count() => {
                log::warn!("ignoring incomplete final journal line in {}", path.display())
            }
            Err(e) => {
                return Err(LofError::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    reason: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}

struct Journal {
    file: fs::File,
}

impl Journal {
    fn append(&mut self, entry: &JournalEntry) -> Result<()> {
        let line = serde_json::to_string(entry)? + "\n";
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.flush())
            .io_context(|| "appending to journal".into())
    }
}

/// Runs every item through the template and endpoint. Each id yields exactly
/// one result, in input order. Per-image failures become unclassified results
/// carrying the error; only configuration problems abort the batch. Ids
/// already present in the journal are not resubmitted.
pub async fn run_batch(items: &[BatchItem], cfg: &BatchConfig) -> Result<Vec<BatchResult>> {
    if cfg.concurrency == 0 {
        return Err(LofError::Config("concurrency limit must be at least 1".into()));
    }
    cfg.template
        .check_chunks(cfg.chunks.len())
        .map_err(|e| LofError::Config(e.to_string()))?;

    let mut done: HashMap<String, ParsedAssessment> = HashMap::new();
    let journal = match &cfg.journal {
        Some(path) => {
            for e in read_journal(path)? {
                done.insert(e.id, e.result);
            }
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .io_context(|| format!("opening journal {}", path.display()))?;
            Some(Arc::new(Mutex::new(Journal { file })))
        }
        None => None,
    };
    if !done.is_empty() {
        log::info!("{} id(s) already journaled; skipping", done.len());
    }

    let client = reqwest::Client::new();
    let limit = Arc::new(Semaphore::new(cfg.concurrency));
    let mut slots: Vec<Option<BatchResult>> = vec![None; items.len()];
    let mut tasks = JoinSet::new();

    for (idx, item) in items.iter().enumerate() {
        if let Some(assessment) = done.get(&item.id) {
            slots[idx] = Some(BatchResult {
                id: item.id.clone(),
                assessment: assessment.clone(),
                error: None,
            });
            continue;
        }
        let item = item.clone();
        let client = client.clone();
        let limit = limit.clone();
        let journal = journal.clone();
        let template = cfg.template.clone();
        let chunks = cfg.chunks.clone();
        let prompt = cfg.prompt.clone();
        let endpoint = cfg.endpoint.clone();
        tasks.spawn(async move {
            let _permit = limit.acquire_owned().await.expect("semaphore never closed");
            let outcome = async {
                let image = encode_image(&item.image)?;
                let req = build_prompt(&template, &image, &chunks, &prompt)?;
                submit(&client, &req, &endpoint).await
            }
            .await;
            let result = match outcome {
                Ok(out) => {
                    let assessment = parse_response(&out.text);
                    if let Some(j) = &journal {
                        let entry = JournalEntry {
                            id: item.id.clone(),
                            raw: out.text,
                            result: assessment.clone(),
                        };
                        if let Err(e) = j.lock().unwrap().append(&entry) {
                            log::error!("journal write failed for {}: {e}", item.id);
                        }
                    }
                    BatchResult {
                        id: item.id,
                        assessment,
                        error: None,
                    }
                }
                Err(e) => {
                    let msg = endpoint.redact(&e.to_string());
                    log::warn!("{}: {msg}", item.id);
                    BatchResult {
                        id: item.id,
                        assessment: ParsedAssessment::unclassified(""),
                        error: Some(msg),
                    }
                }
            };
            (idx, result)
        });
    }

    while let Some(joined) = tasks.join_next().await {
        let (idx, result) = joined.map_err(|e| LofError::Invalid(format!("batch task failed: {e}")))?;
        slots[idx] = Some(result);
    }
    Ok(slots
        .into_iter()
        .map(|s| s.expect("every slot is filled"))
        .collect())
}
