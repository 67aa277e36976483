use std::fs::{self, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::manifest::DatasetManifest;
use crate::error::{IoContext, LofError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            seed: 0,
            stratified: true,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.train_fraction > 0.0 && self.train_fraction < 1.0 {
            Ok(())
        } else {
            Err(LofError::Invalid(format!(
                "train_fraction {} outside (0,1)",
                self.train_fraction
            )))
        }
    }

    /// Test-set size for a group of `n` records.
    pub fn test_count(&self, n: usize) -> usize {
        (((1.0 - self.train_fraction) * n as f64).round() as usize).min(n)
    }
}

/// Persisted train/test partition. Id lists are sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub spec: SplitSpec,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Partitions the manifest. In stratified mode each LoF class is shuffled and
/// split separately; classes without records are skipped with a warning.
pub fn make_split(m: &DatasetManifest, spec: SplitSpec) -> Result<Split> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();

    let groups: Vec<Vec<&str>> = if spec.stratified {
        (0..6)
            .map(|class| {
                m.records
                    .iter()
                    .filter(|r| r.lof.index() == class)
                    .map(|r| r.id.as_str())
                    .collect()
            })
            .collect()
    } else {
        vec![m.records.iter().map(|r| r.id.as_str()).collect()]
    };

    for (class, mut ids) in groups.into_iter().enumerate() {
        if ids.is_empty() {
            if spec.stratified {
                log::warn!("LoF class {class} has no records; skipped in split");
            }
            continue;
        }
        ids.sort_unstable();
        ids.shuffle(&mut rng);
        let k = spec.test_count(ids.len());
        test.extend(ids[..k].iter().map(|s| s.to_string()));
        train.extend(ids[k..].iter().map(|s| s.to_string()));
    }
    train.sort();
    test.sort();
    Ok(Split { spec, train, test })
}

impl Split {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Writes the split with create-exclusive semantics; an existing file is
    /// never replaced.
    pub fn persist(&self, path: &Path) -> Result<()> {
        let json = self.to_json()?;
        let mut f = match OpenOptions::new().write(true).create_new(true).open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                return Err(LofError::AlreadyExists(path.to_path_buf()))
            }
            Err(e) => {
                return Err(LofError::Io {
                    context: format!("creating {}", path.display()),
                    source: e,
                })
            }
        };
        f.write_all(json.as_bytes())
            .io_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).io_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::manifest::{ImageRecord, Media};
    use crate::rules::LofRank;

    fn manifest(labels: &[u8]) -> DatasetManifest {
        DatasetManifest::new(
            labels
                .iter()
                .enumerate()
                .map(|(i, &l)| ImageRecord {
                    id: format!("img-{i:04}"),
                    path: format!("{i}.png").into(),
                    lof: LofRank::new(l).unwrap(),
                    source: String::new(),
                    media: Media::Still,
                    mask: None,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn two_records_half_split() {
        let m = manifest(&[2, 2]);
        let s = make_split(
            &m,
            SplitSpec {
                train_fraction: 0.5,
                seed: 1,
                stratified: true,
            },
        )
        .unwrap();
        assert_eq!((s.train.len(), s.test.len()), (1, 1));
    }

    #[test]
    fn empty_class_is_skipped() {
        let m = manifest(&[1, 1, 1, 1, 1, 5, 5, 5, 5, 5]);
        let s = make_split(&m, SplitSpec::default()).unwrap();
        assert_eq!(s.test.len(), 2);
        assert_eq!(s.train.len(), 8);
    }

    #[test]
    fn non_stratified_uses_total() {
        let m = manifest(&[0, 1, 1, 1, 1, 1, 1, 1, 1, 1]);
        let s = make_split(
            &m,
            SplitSpec {
                stratified: false,
                ..SplitSpec::default()
            },
        )
        .unwrap();
        assert_eq!(s.test.len(), 2);
    }

    #[test]
    fn fraction_bounds() {
        let m = manifest(&[1]);
        for f in [0.0, 1.0, -0.2, 1.5] {
            let spec = SplitSpec {
                train_fraction: f,
                ..SplitSpec::default()
            };
            assert!(make_split(&m, spec).is_err());
        }
    }

    #[test]
    fn persist_refuses_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("split.json");
        let s = make_split(&manifest(&[1, 1, 2, 2, 3]), SplitSpec::default()).unwrap();
        s.persist(&path).unwrap();
        assert!(matches!(s.persist(&path), Err(LofError::AlreadyExists(_))));
        assert_eq!(Split::load(&path).unwrap(), s);
    }
}
