//! SSML rendering for baseline and highlighted answer sentences.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::QaItem;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ProsodyError {
    #[error("profile {profile} does not support the {kind} modification")]
    UnsupportedModification { profile: String, kind: ModificationKind },
    #[error("unknown modification kind {0:?}")]
    UnknownKind(String),
    #[error("profile {profile}: {field} must not be empty")]
    EmptyToken { profile: String, field: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModificationKind {
    Baseline,
    Pause,
    Rate,
    Pitch,
    Emphasis,
}

impl ModificationKind {
    /// The four modifications, in the order groups are dealt.
    pub const MODIFIED: [ModificationKind; 4] = [
        ModificationKind::Pause,
        ModificationKind::Rate,
        ModificationKind::Pitch,
        ModificationKind::Emphasis,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModificationKind::Baseline => "baseline",
            ModificationKind::Pause => "pause",
            ModificationKind::Rate => "rate",
            ModificationKind::Pitch => "pitch",
            ModificationKind::Emphasis => "emphasis",
        }
    }
}

impl fmt::Display for ModificationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModificationKind {
    type Err = ProsodyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "baseline" => ModificationKind::Baseline,
            "pause" => ModificationKind::Pause,
            "rate" => ModificationKind::Rate,
            "pitch" => ModificationKind::Pitch,
            "emphasis" => ModificationKind::Emphasis,
            other => return Err(ProsodyError::UnknownKind(other.to_string())),
        })
    }
}

/// Per-engine SSML parameter settings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineProfile {
    /// Registry name, e.g. `google-wavenet-f`.
    pub name: String,
    pub engine_name: String,
    pub voice_name: String,
    /// `strength` of `<break>`.
    pub pause_strength: String,
    /// `rate` of `<prosody>`.
    pub rate_value: String,
    /// `pitch` of `<prosody>`.
    pub pitch_value: String,
    /// `level` of `<emphasis>`; `None` when the engine has no emphasis.
    #[serde(default)]
    pub emphasis_level: Option<String>,
}

impl EngineProfile {
    pub fn ibm_lisa() -> Self {
        EngineProfile {
            name: "ibm-lisa".into(),
            engine_name: "IBM".into(),
            voice_name: "Lisa".into(),
            pause_strength: "strong".into(),
            rate_value: "x-slow".into(),
            pitch_value: "x-high".into(),
            emphasis_level: None,
        }
    }

    pub fn google_wavenet_f() -> Self {
        EngineProfile {
            name: "google-wavenet-f".into(),
            engine_name: "Google".into(),
            voice_name: "Wavenet-F".into(),
            pause_strength: "strong".into(),
            rate_value: "slow".into(),
            pitch_value: "+2st".into(),
            emphasis_level: Some("strong".into()),
        }
    }

    pub fn builtin() -> Vec<EngineProfile> {
        vec![Self::ibm_lisa(), Self::google_wavenet_f()]
    }

    pub fn supports(&self, kind: ModificationKind) -> bool {
        kind != ModificationKind::Emphasis || self.emphasis_level.is_some()
    }

    pub fn validate(&self) -> Result<(), ProsodyError> {
        let fields = [
            ("name", Some(&self.name)),
            ("engine_name", Some(&self.engine_name)),
            ("voice_name", Some(&self.voice_name)),
            ("pause_strength", Some(&self.pause_strength)),
            ("rate_value", Some(&self.rate_value)),
            ("pitch_value", Some(&self.pitch_value)),
            ("emphasis_level", self.emphasis_level.as_ref()),
        ];
        for (field, v) in fields {
            if matches!(v, Some(s) if s.trim().is_empty()) {
                return Err(ProsodyError::EmptyToken {
                    profile: self.name.clone(),
                    field,
                });
            }
        }
        Ok(())
    }
}

/// Engine-ready markup with provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SsmlDocument {
    pub markup: String,
    pub item_id: String,
    pub kind: ModificationKind,
    pub profile_name: String,
}

/// Escapes `&`, `<` and `>` once. Not idempotent: `&amp;` becomes `&amp;amp;`.
pub fn escape_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            c => out.push(c),
        }
    }
    out
}

fn escape_attr(raw: &str) -> String {
    escape_text(raw).replace('"', "&quot;")
}

/// Renders `item` for `kind`. Text outside the key is identical to the
/// escaped baseline; highlighting markup sits directly against the key.
pub fn render_ssml(
    item: &QaItem,
    kind: ModificationKind,
    profile: &EngineProfile,
) -> Result<SsmlDocument, ProsodyError> {
    let range = item.key_byte_range();
    let before = escape_text(&item.answer_sentence[..range.start]);
    let key = escape_text(&item.answer_sentence[range.clone()]);
    let after = escape_text(&item.answer_sentence[range.end..]);

    let highlighted = match kind {
        ModificationKind::Baseline => key,
        ModificationKind::Pause => {
            let brk = format!(r#"<break strength="{}"/>"#, escape_attr(&profile.pause_strength));
            format!("{brk}{key}{brk}")
        }
        ModificationKind::Rate => format!(
            r#"<prosody rate="{}">{key}</prosody>"#,
            escape_attr(&profile.rate_value)
        ),
        ModificationKind::Pitch => format!(
            r#"<prosody pitch="{}">{key}</prosody>"#,
            escape_attr(&profile.pitch_value)
        ),
        ModificationKind::Emphasis => {
            let level = profile
                .emphasis_level
                .as_deref()
                .ok_or_else(|| ProsodyError::UnsupportedModification {
                    profile: profile.name.clone(),
                    kind,
                })?;
            format!(r#"<emphasis level="{}">{key}</emphasis>"#, escape_attr(level))
        }
    };

    Ok(SsmlDocument {
        markup: format!("<speak>{before}{highlighted}{after}</speak>"),
        item_id: item.item_id.clone(),
        kind,
        profile_name: profile.name.clone(),
    })
}

/// Drops everything between `<` and `>`; entities are left as they are.
pub fn strip_tags(markup: &str) -> String {
    let mut out = String::with_capacity(markup.len());
    let mut in_tag = false;
    for c in markup.chars() {
        match c {
            '<' => in_tag = true,
            '>' if in_tag => in_tag = false,
            c if !in_tag => out.push(c),
            _ => {}
        }
    }
    out
}
