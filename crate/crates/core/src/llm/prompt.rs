//! Prompt templates and request construction.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::encode::ImagePayload;
use super::retrieve::GuidelineChunk;
use crate::error::{LofError, Result};

/// Marker replaced by retrieved guideline excerpts.
pub const GUIDELINE_SLOT: &str = "{{GUIDELINE_EXCERPTS}}";

pub const EXPERT_SYSTEM_PROMPT: &str = r#"You are a marine biofouling assessment expert with expertise in the standardized Level of Fouling (LoF) classification system. Your primary goal is ACCURATE LoF classification across all ranking levels (0-5).

LEVEL OF FOULING (LoF) ASSESSMENT FRAMEWORK:
Follow the official LoF Rank Scale methodology exactly:

LoF 0: No slime, no macrofouling - completely clean surface
LoF 1: Slime layer present (any amount), no macrofouling visible
LoF 2: 1-5
LoF 3: 6-15
LoF 4: 16-40
LoF 5: 41-100

STANDARDIZED ASSESSMENT PROTOCOL:
1. Examine the visible submerged surface systematically
2. Determine fouling type: absent, slime-only, or macrofouling present
3. If macrofouling present, estimate percent cover of the visible surface
4. Apply the appropriate LoF rank based on percent cover thresholds

KEY DEFINITIONS:
- Slime layer (biofilm): Microscopic organisms forming thin films or filaments
- Macrofouling: Visible organisms such as barnacles, algae, sponges, bivalves, sea squirts
- Percent cover: Proportion of visible surface occupied by fouling organisms
- Visible surface: The directly observable area in the image

DECISION TREE APPLICATION:
1. Is there any slime visible?
   - If NO slime → LoF 0
   - If slime ONLY (no macrofouling) → LoF 1
2. If macrofouling is present, estimate percent cover:
   - 1-5
   - 6-15
   - 16-40
   - 41-100

ASSESSMENT GUIDELINES:
- Focus on actual biological organisms, not surface discoloration or shadows
- Consider the full visible surface area when estimating coverage
- Distinguish between organic growth and inorganic deposits/staining
- Account for image perspective but base estimates on what is clearly visible
- Both hull areas and niche areas (rudders, propellers, complex structures) follow the same LoF criteria

NEW ZEALAND PRIORITY INVASIVE SPECIES:
When identifying species, focus on these high-risk organisms:
- Didemnum vexillum (Sea Vomit): Tan/beige/cream lumpy encrusting patches
- Sabella spallanzanii (Mediterranean Fanworm): Fan-like feeding crowns from tubes
- Undaria pinnatifida (Asian Kelp): Brown seaweed with broad fronds
- Styela clava (Asian Sea Squirt): Club-shaped solitary tunicates
- Ciona intestinalis (Sea Vase): Translucent cylindrical tunicates

RESPONSE REQUIREMENTS:
1. LoF rating (0-5) with clear justification based on percent cover
2. Coverage percentage estimate of visible surface
3. Species identification with confidence level (when possible)
4. Brief biosecurity risk assessment

METADATA HANDLING:
Base analysis solely on visual image content. Do not use EXIF data, timestamps, or embedded metadata."#;

pub const EXPERT_USER_PROMPT: &str = r#"Analyze this marine biofouling image using the standardized Level of Fouling (LoF) classification system. Base your analysis solely on visual content.

ASSESSMENT INSTRUCTIONS:
Apply the official LoF decision tree methodology:
1. Examine the visible surface for any fouling
2. Determine if fouling is: absent, slime-only, or includes macrofouling
3. If macrofouling present, estimate percent cover of visible surface
4. Apply appropriate LoF rank:
   - LoF 0: No fouling visible
   - LoF 1: Slime layer only (any amount), no macrofouling
   - LoF 2: 1-5
   - LoF 3: 6-15
   - LoF 4: 16-40
   - LoF 5: 41-100

COVERAGE ESTIMATION:
- Focus on actual biological organisms covering the surface
- Consider the entire visible area when calculating percentages
- Distinguish biological growth from discoloration, shadows, or surface marks

Provide your analysis in this exact format:
**LoF Rating:** [0-5] - [description]
**Coverage:** [percentage] of visible surface
**Species:** [identification with confidence level]
**Risk:** [biosecurity assessment]"#;

pub const BASELINE_USER_PROMPT: &str = r#"You are a marine biofouling expert applying the Level of Fouling (LoF) rank scale developed by Davidson et al. (2019).

Classify the following image using the LoF scale, which ranges from 0 to 5 and is based on **visible percent cover of macrofouling** on submerged vessel surfaces (e.g., hulls, rudders, propellers):

LoF 0: No fouling at all — clean surface with no slime or macrofouling
LoF 1: Only a slime layer (biofilm), no visible macrofouling
LoF 2: 1–5
LoF 3: 6–15
LoF 4: 16–40
LoF 5: 41–100

Definitions:
- **Slime layer** is a microscopic film, not visible as organisms
- **Macrofouling** includes visible organisms like barnacles, seaweed, sponges, etc.
- Percent cover refers to the *visible surface* in the image, not the whole vessel

Please return:
1. A **LoF rank (0–5)** for the image
2. A short **justification** based on percent cover and fouling type
3. A note on any visible **invasive species**, if present

Do not say “unable to classify.” Always make a classification based on what is visible, even if uncertain. Assume the image is a valid vessel surface. Focus on the biofouling cover, not species identity."#;

const CONSERVATIVE_CALIBRATION: &str = r#"

CONSERVATIVE CALIBRATION:
- Assign LoF 4 only when macrofouling clearly covers more than 15% of the visible surface
- Assign LoF 5 only when macrofouling clearly covers more than 40% of the visible surface
- When an estimate sits near a band boundary, choose the lower LoF rank
- Slime, discoloration and shadows never count towards macrofouling cover"#;

const RAG_SECTION: &str = "\n\nOFFICIAL LoF GUIDELINE EXCERPTS:\n{{GUIDELINE_EXCERPTS}}";

pub const DEFAULT_RAG_SLOTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TemplateName {
    #[serde(rename = "baseline")]
    Baseline,
    #[serde(rename = "expert")]
    Expert,
    #[serde(rename = "conservative")]
    Conservative,
    #[serde(rename = "expert+rag")]
    ExpertRag,
}

impl TemplateName {
    pub const ALL: [TemplateName; 4] = [
        TemplateName::Baseline,
        TemplateName::Expert,
        TemplateName::Conservative,
        TemplateName::ExpertRag,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateName::Baseline => "baseline",
            TemplateName::Expert => "expert",
            TemplateName::Conservative => "conservative",
            TemplateName::ExpertRag => "expert+rag",
        }
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateName {
    type Err = LofError;

    fn from_str(s: &str) -> Result<Self> {
        TemplateName::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| LofError::Config(format!("unknown template `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: TemplateName,
    /// Empty for the user-only baseline.
    pub system_text: String,
    pub user_text: String,
    pub rag_slots: usize,
}

impl PromptTemplate {
    pub fn builtin(name: TemplateName) -> Self {
        match name {
            TemplateName::Baseline => Self {
                name,
                system_text: String::new(),
                user_text: BASELINE_USER_PROMPT.to_string(),
                rag_slots: 0,
            },
            TemplateName::Expert => Self {
                name,
                system_text: EXPERT_SYSTEM_PROMPT.to_string(),
                user_text: EXPERT_USER_PROMPT.to_string(),
                rag_slots: 0,
            },
            TemplateName::Conservative => Self {
                name,
                system_text: format!("{EXPERT_SYSTEM_PROMPT}{CONSERVATIVE_CALIBRATION}"),
                user_text: EXPERT_USER_PROMPT.to_string(),
                rag_slots: 0,
            },
            TemplateName::ExpertRag => Self {
                name,
                system_text: format!("{EXPERT_SYSTEM_PROMPT}{RAG_SECTION}"),
                user_text: EXPERT_USER_PROMPT.to_string(),
                rag_slots: DEFAULT_RAG_SLOTS,
            },
        }
    }

    pub fn requires_chunks(&self) -> bool {
        self.rag_slots > 0
    }

    /// Checks a chunk list against this template's slots.
    pub fn check_chunks(&self, n_chunks: usize) -> Result<()> {
        if n_chunks > self.rag_slots {
            return Err(LofError::Prompt(format!(
                "{n_chunks} guideline chunk(s) for template `{}` with {} slot(s)",
                self.name, self.rag_slots
            )));
        }
        if self.requires_chunks() && n_chunks == 0 {
            return Err(LofError::Prompt(format!(
                "template `{}` needs at least one guideline chunk",
                self.name
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContentPart {
    Text(String),
    Image(ImagePayload),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub role: Role,
    pub content: Vec<ContentPart>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptOptions {
    pub model_id: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout: Duration,
    /// Upper bound on prompt characters, image excluded.
    pub max_prompt_chars: usize,
}

impl Default for PromptOptions {
    fn default() -> Self {
        Self {
            model_id: "openai/gpt-4o".into(),
            temperature: 0.0,
            max_tokens: 512,
            timeout: Duration::from_secs(120),
            max_prompt_chars: 32_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmRequest {
    pub model_id: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout: Duration,
}

impl LlmRequest {
    /// Chat-completions JSON body. Object keys serialize in sorted order, so
    /// identical requests give identical bytes.
    pub fn to_wire(&self) -> Value {
        let messages: Vec<Value> = self
            .messages
            .iter()
            .map(|m| {
                let content = match m.content.as_slice() {
                    [ContentPart::Text(t)] => Value::String(t.clone()),
                    parts => Value::Array(
                        parts
                            .iter()
                            .map(|p| match p {
                                ContentPart::Text(t) => json!({"type": "text", "text": t}),
                                ContentPart::Image(img) => json!({
                                    "type": "image_url",
                                    "image_url": {"url": img.data_url()}
                                }),
                            })
                            .collect(),
                    ),
                };
                json!({"role": m.role, "content": content})
            })
            .collect();
        json!({
            "model": self.model_id,
            "messages": messages,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        })
    }

    pub fn body(&self) -> Vec<u8> {
        serde_json::to_vec(&self.to_wire()).expect("request JSON serializes")
    }

    pub fn system_text(&self) -> Option<&str> {
        self.messages
            .iter()
            .find(|m| m.role == Role::System)
            .and_then(|m| match m.content.first() {
                Some(ContentPart::Text(t)) => Some(t.as_str()),
                _ => None,
            })
    }

    pub fn image_count(&self) -> usize {
        self.messages
            .iter()
            .flat_map(|m| &m.content)
            .filter(|p| matches!(p, ContentPart::Image(_)))
            .count()
    }
}

/// Hex SHA-256 of the request body; the replay key used by the mock server.
pub fn request_hash(body: &[u8]) -> String {
    hex::encode(Sha256::digest(body))
}

/// Builds a single-image request. Chunk texts are inserted verbatim, one per
/// paragraph, where the template's guideline slot sits.
pub fn build_prompt(
    template: &PromptTemplate,
    image: &ImagePayload,
    chunks: &[GuidelineChunk],
    opts: &PromptOptions,
) -> Result<LlmRequest> {
    template.check_chunks(chunks.len())?;
    let system = if template.system_text.contains(GUIDELINE_SLOT) {
        let excerpts: Vec<&str> = chunks.iter().map(|c| c.text.as_str()).collect();
        template
            .system_text
            .replace(GUIDELINE_SLOT, &excerpts.join("\n\n"))
    } else {
        template.system_text.clone()
    };
    let chars = system.chars().count() + template.user_text.chars().count();
    if chars > opts.max_prompt_chars {
        return Err(LofError::Prompt(format!(
            "prompt is {chars} characters, limit {}",
            opts.max_prompt_chars
        )));
    }
    let mut messages = Vec::with_capacity(2);
    if !system.is_empty() {
        messages.push(Message {
            role: Role::System,
            content: vec![ContentPart::Text(system)],
        });
    }
    messages.push(Message {
        role: Role::User,
        content: vec![
            ContentPart::Text(template.user_text.clone()),
            ContentPart::Image(image.clone()),
        ],
    });
    Ok(LlmRequest {
        model_id: opts.model_id.clone(),
        messages,
        temperature: opts.temperature,
        max_tokens: opts.max_tokens,
        timeout: opts.timeout,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::encode::MediaType;
    use crate::llm::retrieve::ChunkTag;

    fn image() -> ImagePayload {
        ImagePayload {
            media_type: MediaType::Png,
            data: "iVBORw0KGgo=".into(),
        }
    }

    fn chunk(id: &str, text: &str) -> GuidelineChunk {
        GuidelineChunk {
            id: id.into(),
            text: text.into(),
            tags: vec![ChunkTag::BoundaryCriteria],
        }
    }

    fn body_text(req: &LlmRequest) -> String {
        String::from_utf8(req.body()).unwrap()
    }

    #[test]
    fn baseline_keeps_no_refusal_instruction() {
        let t = PromptTemplate::builtin(TemplateName::Baseline);
        let req = build_prompt(&t, &image(), &[], &PromptOptions::default()).unwrap();
        let wire = req.to_wire();
        let text = wire["messages"][0]["content"][0]["text"].as_str().unwrap();
        assert!(text.contains("Do not say “unable to classify.”"));
        assert_eq!(req.messages.len(), 1);
        assert_eq!(req.image_count(), 1);
    }

    #[test]
    fn expert_system_message_first() {
        let t = PromptTemplate::builtin(TemplateName::Expert);
        let req = build_prompt(&t, &image(), &[], &PromptOptions::default()).unwrap();
        assert_eq!(req.messages[0].role, Role::System);
        assert!(req
            .system_text()
            .unwrap()
            .contains("You are a marine biofouling assessment expert"));
        let wire = req.to_wire();
        assert_eq!(
            wire["messages"][1]["content"][1]["image_url"]["url"],
            "data:image/png;base64,iVBORw0KGgo="
        );
        assert_eq!(wire["temperature"], 0.0);
        assert_eq!(wire["max_tokens"], 512);
    }

    #[test]
    fn all_templates_demand_integer_rating() {
        for name in TemplateName::ALL {
            let t = PromptTemplate::builtin(name);
            let all = format!("{}\n{}", t.system_text, t.user_text);
            assert!(all.contains("LoF 5"), "{name}");
            if name != TemplateName::Baseline {
                assert!(t.system_text.contains("You are a marine biofouling assessment expert"));
                assert!(t.user_text.contains("**LoF Rating:** [0-5]"));
            }
        }
    }

    #[test]
    fn rag_chunks_inserted_verbatim() {
        let t = PromptTemplate::builtin(TemplateName::ExpertRag);
        let chunks = [chunk("b", "LoF 2: 1-5"), chunk("a", "second excerpt")];
        let req = build_prompt(&t, &image(), &chunks, &PromptOptions::default()).unwrap();
        let sys = req.system_text().unwrap();
        assert!(sys.contains("LoF 2: 1-5\n\nsecond excerpt"));
        assert!(!sys.contains(GUIDELINE_SLOT));
    }

    #[test]
    fn chunk_count_rules() {
        let rag = PromptTemplate::builtin(TemplateName::ExpertRag);
        assert!(build_prompt(&rag, &image(), &[], &PromptOptions::default()).is_err());
        let too_many: Vec<_> = (0..5).map(|i| chunk(&i.to_string(), "x")).collect();
        assert!(build_prompt(&rag, &image(), &too_many, &PromptOptions::default()).is_err());
        let expert = PromptTemplate::builtin(TemplateName::Expert);
        assert!(build_prompt(&expert, &image(), &too_many[..1], &PromptOptions::default()).is_err());
    }

    #[test]
    fn oversized_prompt_rejected() {
        let t = PromptTemplate::builtin(TemplateName::Expert);
        let opts = PromptOptions {
            max_prompt_chars: 100,
            ..PromptOptions::default()
        };
        assert!(matches!(
            build_prompt(&t, &image(), &[], &opts),
            Err(LofError::Prompt(_))
        ));
    }

    #[test]
    fn deterministic_bytes() {
        let t = PromptTemplate::builtin(TemplateName::ExpertRag);
        let chunks = [chunk("a", "LoF 3: 6-15")];
        let a = build_prompt(&t, &image(), &chunks, &PromptOptions::default()).unwrap();
        let b = build_prompt(&t, &image(), &chunks, &PromptOptions::default()).unwrap();
        assert_eq!(a.body(), b.body());
        assert_eq!(request_hash(&a.body()), request_hash(&b.body()));
        assert!(body_text(&a).starts_with("{\"max_tokens\":512,\"messages\":["));
    }

    #[test]
    fn template_names_parse() {
        for name in TemplateName::ALL {
            assert_eq!(name.as_str().parse::<TemplateName>().unwrap(), name);
        }
        assert!("fancy".parse::<TemplateName>().is_err());
    }
}
