//! Guideline chunk store and lexical retrieval.
//!
//! score = |query tokens ∩ chunk tokens| / |query tokens|
//!       + TAG_BONUS × (number of the chunk's tags cued by the query)
//!
//! Tokens are lowercase alphanumeric runs; the query is deduplicated.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{IoContext, LofError, Result};

pub const TAG_BONUS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChunkTag {
    ScaleDefinition,
    SlimeVsMacro,
    BoundaryCriteria,
}

impl ChunkTag {
    /// Query words that cue this tag.
    pub fn cues(self) -> &'static [&'static str] {
        match self {
            ChunkTag::ScaleDefinition => &["scale", "level", "lof", "rank", "definition"],
            ChunkTag::SlimeVsMacro => &["slime", "biofilm", "macrofouling", "organisms"],
            ChunkTag::BoundaryCriteria => {
                &["percent", "cover", "coverage", "threshold", "thresholds", "boundary"]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuidelineChunk {
    pub id: String,
    pub text: String,
    pub tags: Vec<ChunkTag>,
}

impl GuidelineChunk {
    pub fn validate(&self) -> Result<()> {
        if self.text.trim().is_empty() {
            return Err(LofError::Invalid(format!("chunk `{}` has empty text", self.id)));
        }
        if self.tags.is_empty() {
            return Err(LofError::Invalid(format!("chunk `{}` has no tags", self.id)));
        }
        Ok(())
    }
}

pub fn tokenize(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

pub fn score_chunk(query: &BTreeSet<String>, chunk: &GuidelineChunk) -> f64 {
    if query.is_empty() {
        return 0.0;
    }
    let chunk_tokens = tokenize(&chunk.text);
    let overlap = query.intersection(&chunk_tokens).count() as f64 / query.len() as f64;
    let mut tags: Vec<ChunkTag> = chunk.tags.clone();
    tags.sort();
    tags.dedup();
    let cued = tags
        .iter()
        .filter(|t| t.cues().iter().any(|c| query.contains(*c)))
        .count();
    overlap + TAG_BONUS * cued as f64
}

/// Top `k` chunks by score, ties broken by ascending id.
pub fn retrieve_chunks(query: &str, store: &[GuidelineChunk], k: usize) -> Vec<GuidelineChunk> {
    let q = tokenize(query);
    let mut scored: Vec<(f64, &GuidelineChunk)> =
        store.iter().map(|c| (score_chunk(&q, c), c)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.id.cmp(&b.1.id)));
    scored.into_iter().take(k).map(|(_, c)| c.clone()).collect()
}

pub const DEFAULT_RAG_QUERY: &str =
    "LoF scale definition slime versus macrofouling percent cover boundary thresholds";

/// Excerpts of the LoF scale used by the expert prompt.
pub fn default_chunk_store() -> Vec<GuidelineChunk> {
    use ChunkTag::*;
    let chunk = |id: &str, text: &str, tags: &[ChunkTag]| GuidelineChunk {
        id: id.into(),
        text: text.into(),
        tags: tags.to_vec(),
    };
    vec![
        chunk(
            "scale-0-1",
            "LoF 0: No slime, no macrofouling - completely clean surface. \
             LoF 1: Slime layer present (any amount), no macrofouling visible.",
            &[ScaleDefinition, SlimeVsMacro],
        ),
        chunk(
            "scale-2-5",
            "LoF 2: 1-5 percent macrofouling cover. LoF 3: 6-15 percent cover. \
             LoF 4: 16-40 percent cover. LoF 5: 41-100 percent cover.",
            &[ScaleDefinition, BoundaryCriteria],
        ),
        chunk(
            "decision-order",
            "Is there any slime visible? If no slime, LoF 0. If slime only with no \
             macrofouling, LoF 1. If macrofouling is present, estimate percent cover of \
             the visible surface and apply the 1-5, 6-15, 16-40 and 41-100 bands.",
            &[ScaleDefinition, BoundaryCriteria],
        ),
        chunk(
            "definition-slime",
            "Slime layer (biofilm): microscopic organisms forming thin films or filaments. \
             Slime alone never raises the rank above LoF 1.",
            &[SlimeVsMacro],
        ),
        chunk(
            "definition-macro",
            "Macrofouling: visible organisms such as barnacles, algae, sponges, bivalves \
             and sea squirts.",
            &[SlimeVsMacro],
        ),
        chunk(
            "percent-cover",
            "Percent cover is the proportion of the visible surface occupied by fouling \
             organisms. Consider the full visible surface area when estimating coverage.",
            &[BoundaryCriteria],
        ),
        chunk(
            "niche-areas",
            "Hull areas and niche areas such as rudders, propellers and complex structures \
             follow the same LoF criteria.",
            &[ScaleDefinition],
        ),
        chunk(
            "species",
            "Priority invasive species: Didemnum vexillum, Sabella spallanzanii, Undaria \
             pinnatifida, Styela clava and Ciona intestinalis.",
            &[SlimeVsMacro],
        ),
    ]
}

/// Reads a JSON-lines chunk store.
pub fn load_chunk_store(path: &Path) -> Result<Vec<GuidelineChunk>> {
    let text = fs::read_to_string(path).io_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let chunk: GuidelineChunk = serde_json::from_str(line).map_err(|e| LofError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        chunk.validate()?;
        out.push(chunk);
    }
    if out.is_empty() {
        return Err(LofError::Empty(format!("chunk store {}", path.display())));
    }
    Ok(out)
}
