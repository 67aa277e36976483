//! Free-text response parsing.
//!
//! The rating is taken from the first pattern in this ladder that matches:
//!
//! 1. a line `**LoF Rating:** <int>`
//! 2. `LoF Rating: <int>` anywhere
//! 3. the first `LoF <int>` token
//! 4. a bare integer at the very start of the response
//!
//! A matched integer outside 0..=5 makes the response unclassified. Parsing
//! never fails.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::rules::LofRank;

static STRICT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^[ \t]*\*\*LoF Rating:\*\*[ \t]*(\d+)").unwrap());
static LENIENT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bLoF[ \t]+Rating[ \t]*:[ \t]*\**[ \t]*(\d+)").unwrap());
static LOF_TOKEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\bLoF[ \t]*(\d+)\b").unwrap());
static LEADING: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(\d+)(?:$|[^\d.%]|\.(?:\D|$))").unwrap());
static COVERAGE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?mi)^[ \t]*\**Coverage:?\**[ \t]*:?[ \t]*[~≈]?[ \t]*(\d+(?:\.\d+)?)").unwrap()
});
static SPECIES: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?mi)^[ \t]*\**Species:?\**[ \t]*:?[ \t]*(\S.*?)[ \t]*$").unwrap());
static RISK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?mi)^[ \t]*\**Risk:?\**[ \t]*:?[ \t]*(\S.*?)[ \t]*$").unwrap());

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "rank", rename_all = "snake_case")]
pub enum AssessmentStatus {
    Classified(LofRank),
    Unclassified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedAssessment {
    pub status: AssessmentStatus,
    pub coverage_pct: Option<f64>,
    pub species_note: Option<String>,
    pub risk_note: Option<String>,
    pub raw_text: String,
}

impl ParsedAssessment {
    pub fn unclassified(raw_text: impl Into<String>) -> Self {
        Self {
            status: AssessmentStatus::Unclassified,
            coverage_pct: None,
            species_note: None,
            risk_note: None,
            raw_text: raw_text.into(),
        }
    }

    pub fn rank(&self) -> Option<LofRank> {
        match self.status {
            AssessmentStatus::Classified(r) => Some(r),
            AssessmentStatus::Unclassified => None,
        }
    }
}

fn rating(raw: &str) -> Option<LofRank> {
    let captured = [&*STRICT, &*LENIENT, &*LOF_TOKEN, &*LEADING]
        .iter()
        .find_map(|re| re.captures(raw))?;
    let digits = captured.get(1)?.as_str();
    let value: u8 = digits.parse().ok()?;
    LofRank::new(value).ok()
}

pub fn parse_response(raw: &str) -> ParsedAssessment {
    let status = match rating(raw) {
        Some(rank) => AssessmentStatus::Classified(rank),
        None => AssessmentStatus::Unclassified,
    };
    let coverage_pct = COVERAGE
        .captures(raw)
        .and_then(|c| c[1].parse::<f64>().ok())
        .filter(|v| v.is_finite());
    let note = |re: &Regex| re.captures(raw).map(|c| c[1].to_string());
    ParsedAssessment {
        status,
        coverage_pct,
        species_note: note(&SPECIES),
        risk_note: note(&RISK),
        raw_text: raw.to_string(),
    }
}

/// Renders an assessment in the response format the expert prompt requests.
pub fn format_assessment(
    rank: LofRank,
    coverage_pct: f64,
    species: &str,
    risk: &str,
) -> String {
    format!(
        "**LoF Rating:** {rank} - {}\n**Coverage:** {coverage_pct}% of visible surface\n**Species:** {species}\n**Risk:** {risk}\n",
        rank.description()
    )
}
