//! Level-of-fouling scale and the coverage decision tree.
//!
//! A rank is decided in two steps. If macrofouling cover is at or below the
//! presence epsilon the surface is on the slime branch (rank 0 when there is no
//! slime, rank 1 otherwise). Above epsilon the macrofouling percentage walks a
//! chain of half-open intervals `(lo, hi]` to ranks 2 through 5.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{IoContext, LofError, Result};

/// Slack allowed on `slime + macro <= 100`.
pub const COVERAGE_SUM_TOLERANCE: f64 = 1e-9;

/// Ordinal fouling rank, 0 (clean) through 5 (heavy macrofouling).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct LofRank(u8);

impl LofRank {
    pub const MAX: u8 = 5;
    pub const COUNT: usize = 6;

    pub fn new(value: u8) -> Result<Self> {
        if value <= Self::MAX {
            Ok(Self(value))
        } else {
            Err(LofError::RankOutOfRange(value as i64))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// All ranks in ascending order.
    pub fn all() -> impl Iterator<Item = LofRank> {
        (0..=Self::MAX).map(LofRank)
    }

    pub fn description(self) -> &'static str {
        match self.0 {
            0 => "No visible fouling",
            1 => "Slime layer only, no macrofouling",
            2 => "Sparse small organisms",
            3 => "Moderate fouling patches",
            4 => "Extensive fouling",
            _ => "Heavy macrofouling",
        }
    }
}

impl TryFrom<u8> for LofRank {
    type Error = LofError;

    fn try_from(value: u8) -> Result<Self> {
        Self::new(value)
    }
}

impl TryFrom<i64> for LofRank {
    type Error = LofError;

    fn try_from(value: i64) -> Result<Self> {
        if (0..=Self::MAX as i64).contains(&value) {
            Ok(Self(value as u8))
        } else {
            Err(LofError::RankOutOfRange(value))
        }
    }
}

impl From<LofRank> for u8 {
    fn from(rank: LofRank) -> u8 {
        rank.0
    }
}

impl fmt::Display for LofRank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Percent-of-hull boundaries used by the decision tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    /// Macrofouling cover at or below this is treated as absent.
    pub macro_presence_epsilon: f64,
    /// Upper bound (inclusive) of rank 2.
    pub bound2: f64,
    /// Upper bound (inclusive) of rank 3.
    pub bound3: f64,
    /// Upper bound (inclusive) of rank 4.
    pub bound4: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Preset::Figure1Default.config()
    }
}

/// Named threshold sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Bounds 5 / 16 / 40 with a 0.1 % presence epsilon.
    Figure1Default,
    /// The interval set quoted in the expert prompt: 1-5, 6-15, 16-40, 41-100.
    AppendixPrompt,
}

impl Preset {
    pub const NAMES: [&'static str; 2] = ["figure1-default", "appendix-prompt"];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Figure1Default => "figure1-default",
            Preset::AppendixPrompt => "appendix-prompt",
        }
    }

    pub fn config(self) -> ThresholdConfig {
        match self {
            Preset::Figure1Default => ThresholdConfig {
                macro_presence_epsilon: 0.1,
                bound2: 5.0,
                bound3: 16.0,
                bound4: 40.0,
            },
            Preset::AppendixPrompt => ThresholdConfig {
                macro_presence_epsilon: 1.0,
                bound2: 5.0,
                bound3: 15.0,
                bound4: 40.0,
            },
        }
    }
}

impl FromStr for Preset {
    type Err = LofError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "figure1-default" => Ok(Preset::Figure1Default),
            "appendix-prompt" => Ok(Preset::AppendixPrompt),
            other => Err(LofError::UnknownPreset(other.to_string())),
        }
    }
}

impl ThresholdConfig {
    /// Checks the ordering `0 <= epsilon < bound2 < bound3 < bound4 < 100`,
    /// reporting every violated constraint.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(self) -> Result<Self> {
        let mut problems = Vec::new();
        let named = [
            ("macro_presence_epsilon", self.macro_presence_epsilon),
            ("bound2", self.bound2),
            ("bound3", self.bound3),
            ("bound4", self.bound4),
        ];
        for (name, v) in named {
            if !v.is_finite() {
                problems.push(format!("{name} is not finite"));
            }
        }
        if self.macro_presence_epsilon < 0.0 || self.macro_presence_epsilon >= 100.0 {
            problems.push("macro_presence_epsilon outside [0,100)".to_string());
        }
        for (name, v) in &named[1..] {
            if !(*v > 0.0 && *v < 100.0) {
                problems.push(format!("{name} outside (0,100)"));
            }
        }
        if !(self.macro_presence_epsilon < self.bound2) {
            problems.push("macro_presence_epsilon not < bound2".to_string());
        }
        if !(self.bound2 < self.bound3) {
            problems.push("bound2 not < bound3".to_string());
        }
        if !(self.bound3 < self.bound4) {
            problems.push("bound3 not < bound4".to_string());
        }
        if problems.is_empty() {
            Ok(self)
        } else {
            Err(LofError::InvalidThresholds(problems))
        }
    }

    /// Parses a `key = value` text config. A `preset` key sets the base
    /// values, which later keys override. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ThresholdConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |reason: String| LofError::Parse {
                path: "<thresholds>".into(),
                line: idx + 1,
                reason,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let number = || {
                value
                    .parse::<f64>()
                    .map_err(|_| parse_err(format!("`{value}` is not a number")))
            };
            match key {
                "preset" => cfg = value.parse::<Preset>()?.config(),
                "macro_presence_epsilon" | "epsilon" => cfg.macro_presence_epsilon = number()?,
                "bound2" => cfg.bound2 = number()?,
                "bound3" => cfg.bound3 = number()?,
                "bound4" => cfg.bound4 = number()?,
                other => return Err(parse_err(format!("unknown key `{other}`"))),
            }
        }
        cfg.validate()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .io_context(|| format!("reading thresholds {}", path.display()))?;
        Self::parse(&text).map_err(|e| match e {
            LofError::Parse { line, reason, .. } => LofError::Parse {
                path: path.to_path_buf(),
                line,
                reason,
            },
            other => other,
        })
    }

    /// Resolves either a preset name or a path to a config file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        match name_or_path.parse::<Preset>() {
            Ok(preset) => Ok(preset.config()),
            Err(_) if Path::new(name_or_path).is_file() => Self::load(Path::new(name_or_path)),
            Err(e) => Err(e),
        }
    }

    pub fn to_text(&self) -> String {
        format!(
            "macro_presence_epsilon = {}\nbound2 = {}\nbound3 = {}\nbound4 = {}\n",
            self.macro_presence_epsilon, self.bound2, self.bound3, self.bound4
        )
    }
}

/// Slime and macrofouling cover as percentages of hull area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoulingObservation {
    pub slime_pct: f64,
    pub macro_pct: f64,
}

impl FoulingObservation {
    pub fn new(slime_pct: f64, macro_pct: f64) -> Self {
        Self {
            slime_pct,
            macro_pct,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("slime_pct", self.slime_pct), ("macro_pct", self.macro_pct)] {
            if !v.is_finite() || !(0.0..=100.0).contains(&v) {
                return Err(LofError::InvalidObservation {
                    field,
                    reason: format!("{v} outside [0,100]"),
                });
            }
        }
        if self.slime_pct + self.macro_pct > 100.0 + COVERAGE_SUM_TOLERANCE {
            return Err(LofError::InvalidObservation {
                field: "slime_pct + macro_pct",
                reason: format!("{} exceeds 100", self.slime_pct + self.macro_pct),
            });
        }
        Ok(())
    }
}

/// Maps an observation to its fouling rank. Percentages are compared at full
/// precision; nothing is rounded first.
pub fn classify_lof(obs: FoulingObservation, cfg: &ThresholdConfig) -> Result<LofRank> {
    obs.validate()?;
    let cfg = cfg.validate()?;
    Ok(classify_unchecked(obs, &cfg))
}

pub(crate) fn classify_unchecked(obs: FoulingObservation, cfg: &ThresholdConfig) -> LofRank {
    let m = obs.macro_pct;
    let rank = if m <= cfg.macro_presence_epsilon {
        if obs.slime_pct > 0.0 {
            1
        } else {
            0
        }
    } else if m <= cfg.bound2 {
        2
    } else if m <= cfg.bound3 {
        3
    } else if m <= cfg.bound4 {
        4
    } else {
        5
    };
    LofRank(rank)
}
