use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{IoContext, LofError, Result};
use crate::rules::LofRank;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Media {
    Still,
    VideoFrame { sequence_id: String, frame_index: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageRecord {
    pub id: String,
    pub path: PathBuf,
    pub lof: LofRank,
    #[serde(default)]
    pub source: String,
    #[serde(default = "still")]
    pub media: Media,
    /// Segmentation mask, when one exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<PathBuf>,
}

fn still() -> Media {
    Media::Still
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub records: Vec<ImageRecord>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    schema_version: u32,
}

impl DatasetManifest {
    pub fn new(records: Vec<ImageRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(LofError::Empty("manifest has no records".into()));
        }
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(LofError::DuplicateId(r.id.clone()));
            }
        }
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            records,
        })
    }

    pub fn get(&self, id: &str) -> Option<&ImageRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Parses JSON-lines text. An optional first line `{"schema_version": N}`
    /// is accepted; blank lines are skipped.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut schema_version = SCHEMA_VERSION;
        let mut records = Vec::new();
        let mut seen = HashSet::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let err = |reason: String| LofError::Parse {
                path: origin.to_path_buf(),
                line: line_no,
                reason,
            };
            if records.is_empty() {
                if let Ok(h) = serde_json::from_str::<Header>(line) {
                    if h.schema_version != SCHEMA_VERSION {
                        return Err(err(format!(
                            "unsupported schema_version {}",
                            h.schema_version
                        )));
                    }
                    schema_version = h.schema_version;
                    continue;
                }
            }
            let record: ImageRecord =
                serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
            if !seen.insert(record.id.clone()) {
                return Err(err(format!("duplicate id `{}`", record.id)));
            }
            records.push(record);
        }
        if records.is_empty() {
            return Err(LofError::Empty(format!(
                "manifest {} has no records",
                origin.display()
            )));
        }
        Ok(Self {
            schema_version,
            records,
        })
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = serde_json::to_string(&serde_json::json!({
            "schema_version": self.schema_version
        }))?;
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).io_context(|| format!("creating {}", path.display()))?;
        f.write_all(self.to_jsonl()?.as_bytes())
            .io_context(|| format!("writing {}", path.display()))
    }

    /// Resolves a record-relative path against the manifest's directory.
    pub fn resolve(manifest_path: &Path, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            manifest_path
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .join(p)
        }
    }
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text =
        fs::read_to_string(path).io_context(|| format!("reading manifest {}", path.display()))?;
    DatasetManifest::parse(&text, path)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub counts: [u64; 6],
    pub total: u64,
}

pub fn dataset_stats(m: &DatasetManifest) -> DatasetStats {
    let mut counts = [0u64; 6];
    for r in &m.records {
        counts[r.lof.index()] += 1;
    }
    DatasetStats {
        counts,
        total: m.records.len() as u64,
    }
}
