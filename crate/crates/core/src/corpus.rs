//! SQuAD ingestion, answer-sentence extraction, slicing features and the
//! per-modification group plan.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::prosody::ModificationKind;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed SQuAD file {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("insufficient items: {required} required ({groups} groups x {group_size}), {available} available")]
    InsufficientItems {
        required: usize,
        available: usize,
        groups: usize,
        group_size: usize,
    },
    #[error("invalid group kinds: {0}")]
    InvalidKinds(String),
}

/// What text is fed to the TTS engine for an item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    #[default]
    Sentence,
    Paragraph,
}

/// One question / answer sentence / answer key tuple.
///
/// `key_char_span` is a half-open range of *character* (Unicode scalar)
/// offsets into `answer_sentence`, matching SQuAD's `answer_start`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaItem {
    pub item_id: String,
    pub article_title: String,
    pub question: String,
    pub paragraph: String,
    pub answer_sentence: String,
    pub answer_key: String,
    pub key_char_span: (usize, usize),
}

impl QaItem {
    /// Byte range of the key inside `answer_sentence`.
    pub fn key_byte_range(&self) -> std::ops::Range<usize> {
        let (s, e) = self.key_char_span;
        char_to_byte(&self.answer_sentence, s)..char_to_byte(&self.answer_sentence, e)
    }

    pub fn validate(&self) -> Result<(), String> {
        let (s, e) = self.key_char_span;
        let len = self.answer_sentence.chars().count();
        if !(s < e && e <= len) {
            return Err(format!("key span ({s}, {e}) invalid for sentence of {len} chars"));
        }
        if self.answer_sentence[self.key_byte_range()] != self.answer_key {
            return Err("answer key does not match the sentence at its span".into());
        }
        for (name, v) in [
            ("question", &self.question),
            ("answer_sentence", &self.answer_sentence),
            ("answer_key", &self.answer_key),
        ] {
            if v.trim().is_empty() {
                return Err(format!("{name} is empty"));
            }
        }
        if words(&self.answer_key).next().is_none() {
            return Err("answer key contains no words".into());
        }
        Ok(())
    }
}

fn char_to_byte(s: &str, char_idx: usize) -> usize {
    s.char_indices().nth(char_idx).map(|(b, _)| b).unwrap_or(s.len())
}

fn char_slice(s: &str, start: usize, end: usize) -> &str {
    &s[char_to_byte(s, start)..char_to_byte(s, end)]
}

/// An item the loader refused, with the reason that was logged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub item_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedCorpus {
    pub items: Vec<QaItem>,
    pub rejected: Vec<Rejection>,
}

#[derive(Deserialize)]
struct SquadFile {
    data: Vec<SquadArticle>,
}

#[derive(Deserialize)]
struct SquadArticle {
    title: String,
    paragraphs: Vec<SquadParagraph>,
}

#[derive(Deserialize)]
struct SquadParagraph {
    context: String,
    qas: Vec<SquadQa>,
}

#[derive(Deserialize)]
struct SquadQa {
    id: String,
    question: String,
    #[serde(default)]
    answers: Vec<SquadAnswer>,
}

#[derive(Deserialize)]
struct SquadAnswer {
    text: String,
    answer_start: usize,
}

/// Loads a SQuAD v1.1 file, one item per question using its first answer.
///
/// Only the first `limit_articles` articles (file order) are read when a
/// limit is given. Questions whose answer cannot be located are rejected and
/// logged; loading continues.
pub fn load_corpus(path: &Path, limit_articles: Option<usize>, unit: Unit) -> Result<LoadedCorpus, CorpusError> {
    let raw = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: SquadFile = serde_json::from_str(&raw).map_err(|source| CorpusError::Parse {
        path: path.display().to_string(),
        source,
    })?;

    let mut out = LoadedCorpus::default();
    let take = limit_articles.unwrap_or(usize::MAX);
    for article in file.data.into_iter().take(take) {
        for para in &article.paragraphs {
            for qa in &para.qas {
                match build_item(&article.title, &para.context, qa, unit) {
                    Ok(item) => out.items.push(item),
                    Err(reason) => {
                        log::warn!("rejected {}: {}", qa.id, reason);
                        out.rejected.push(Rejection {
                            item_id: qa.id.clone(),
                            reason,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

fn build_item(title: &str, context: &str, qa: &SquadQa, unit: Unit) -> Result<QaItem, String> {
    let answer = qa.answers.first().ok_or("question has no answers")?;
    let para_len = context.chars().count();
    let start = answer.answer_start;
    let end = start + answer.text.chars().count();
    if end > para_len {
        return Err(format!(
            "answer_start {start} + answer length exceeds paragraph length {para_len}"
        ));
    }
    if char_slice(context, start, end) != answer.text {
        return Err(format!("answer text not found at answer_start {start}"));
    }
    let (answer_sentence, key_char_span) = match unit {
        Unit::Paragraph => (context.to_string(), (start, end)),
        Unit::Sentence => {
            let ex = extract_answer_sentence(context, (start, end));
            (ex.sentence, ex.key_span)
        }
    };
    let item = QaItem {
        item_id: qa.id.clone(),
        article_title: title.to_string(),
        question: qa.question.clone(),
        paragraph: context.to_string(),
        answer_sentence,
        answer_key: answer.text.clone(),
        key_char_span,
    };
    item.validate()?;
    Ok(item)
}

/// Result of cutting the answer sentence(s) out of a paragraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceExtraction {
    pub sentence: String,
    /// Key span rebased onto `sentence`, in characters.
    pub key_span: (usize, usize),
    /// Set when the span ran past the paragraph end; the whole paragraph is
    /// returned in that case.
    pub straddles_end: bool,
}

const CLOSERS: &[char] = &['"', '\'', '\u{201D}', '\u{2019}', ')', ']'];
const OPENERS: &[char] = &['"', '\'', '\u{201C}', '\u{2018}', '('];

/// Character ranges of the sentences in `text`.
///
/// A sentence ends at `.`, `!` or `?` (plus any closing quotes/brackets) when
/// followed by whitespace and then an uppercase letter or an opening quote. A
/// period after a single-letter token (an initial such as "J.") never ends a
/// sentence.
pub fn sentence_spans(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut spans = Vec::new();
    let mut start = match chars.iter().position(|c| !c.is_whitespace()) {
        Some(s) => s,
        None => return spans,
    };
    let mut i = start;
    while i < n {
        let c = chars[i];
        if matches!(c, '.' | '!' | '?') && !(c == '.' && is_initial(&chars, i)) {
            let mut j = i + 1;
            while j < n && CLOSERS.contains(&chars[j]) {
                j += 1;
            }
            if j < n && chars[j].is_whitespace() {
                let mut k = j;
                while k < n && chars[k].is_whitespace() {
                    k += 1;
                }
                if k < n && (chars[k].is_uppercase() || OPENERS.contains(&chars[k])) {
                    spans.push((start, j));
                    start = k;
                    i = k;
                    continue;
                }
            }
        }
        i += 1;
    }
    let mut end = n;
    while end > start && chars[end - 1].is_whitespace() {
        end -= 1;
    }
    if end > start {
        spans.push((start, end));
    }
    spans
}

fn is_initial(chars: &[char], dot: usize) -> bool {
    dot >= 1 && chars[dot - 1].is_alphabetic() && (dot == 1 || !chars[dot - 2].is_alphanumeric())
}

/// Minimal run of sentences of `paragraph` covering `span` (characters, end
/// exclusive), with the span rebased onto the returned text.
pub fn extract_answer_sentence(paragraph: &str, span: (usize, usize)) -> SentenceExtraction {
    let len = paragraph.chars().count();
    let (start, end) = span;
    if end > len || start >= end {
        log::warn!("span ({start}, {end}) straddles paragraph end ({len} chars)");
        return SentenceExtraction {
            sentence: paragraph.to_string(),
            key_span: (start.min(len), end.min(len)),
            straddles_end: true,
        };
    }
    let spans = sentence_spans(paragraph);
    let first = spans.iter().position(|&(_, e)| e > start);
    let last = spans.iter().rposition(|&(s, _)| s < end);
    let (run_start, run_end) = match (first, last) {
        (Some(a), Some(b)) if a <= b => (spans[a].0.min(start), spans[b].1.max(end)),
        _ => (start, end),
    };
    SentenceExtraction {
        sentence: char_slice(paragraph, run_start, run_end).to_string(),
        key_span: (start - run_start, end - run_start),
        straddles_end: false,
    }
}

/// Whitespace tokens with punctuation trimmed from their edges; tokens that
/// were punctuation only are dropped.
pub fn words(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
}

/// Slicing features of an item, all in words except `key_len_chars`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemFeatures {
    pub key_len_words: usize,
    pub key_len_chars: usize,
    pub sentence_len_words: usize,
    pub offset_from_end_words: usize,
}

impl ItemFeatures {
    pub fn get(&self, feature: Feature) -> usize {
        match feature {
            Feature::KeyLenWords => self.key_len_words,
            Feature::SentenceLenWords => self.sentence_len_words,
            Feature::OffsetFromEndWords => self.offset_from_end_words,
        }
    }
}

/// Features the results can be sliced by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    KeyLenWords,
    SentenceLenWords,
    OffsetFromEndWords,
}

impl Feature {
    pub const ALL: [Feature; 3] = [
        Feature::KeyLenWords,
        Feature::SentenceLenWords,
        Feature::OffsetFromEndWords,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Feature::KeyLenWords => "key_len_words",
            Feature::SentenceLenWords => "sentence_len_words",
            Feature::OffsetFromEndWords => "offset_from_end_words",
        }
    }
}

pub fn item_features(item: &QaItem) -> ItemFeatures {
    let key_len_words = words(&item.answer_key).count().max(1);
    let sentence_len_words = words(&item.answer_sentence).count().max(key_len_words);
    let after = &item.answer_sentence[item.key_byte_range().end..];
    // A key cut mid-word leaves a word fragment on either side; clamp so the
    // three counts stay consistent.
    let offset_from_end_words = words(after).count().min(sentence_len_words - key_len_words);
    ItemFeatures {
        key_len_words,
        key_len_chars: item.answer_key.chars().count(),
        sentence_len_words,
        offset_from_end_words,
    }
}

/// Disjoint item groups, one per prosody modification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupPlan {
    pub groups: BTreeMap<ModificationKind, Vec<String>>,
    pub seed: u64,
}

impl GroupPlan {
    /// Modification kind assigned to an item, if any.
    pub fn kind_of(&self, item_id: &str) -> Option<ModificationKind> {
        self.groups
            .iter()
            .find(|(_, ids)| ids.iter().any(|i| i == item_id))
            .map(|(k, _)| *k)
    }

    pub fn planned_ids(&self) -> HashSet<&str> {
        self.groups.values().flatten().map(String::as_str).collect()
    }
}

/// Shuffles items (file order, seeded) and deals consecutive chunks of
/// `group_size` to `kinds` in the order given.
pub fn partition_groups(
    items: &[QaItem],
    kinds: &[ModificationKind],
    group_size: usize,
    seed: u64,
) -> Result<GroupPlan, CorpusError> {
    if kinds.contains(&ModificationKind::Baseline) {
        return Err(CorpusError::InvalidKinds(
            "baseline is rendered for every item and cannot own a group".into(),
        ));
    }
    let distinct: HashSet<_> = kinds.iter().collect();
    if distinct.len() != kinds.len() {
        return Err(CorpusError::InvalidKinds("duplicate modification kind".into()));
    }
    let required = kinds.len() * group_size;
    if items.len() < required {
        return Err(CorpusError::InsufficientItems {
            required,
            available: items.len(),
            groups: kinds.len(),
            group_size,
        });
    }
    let mut ids: Vec<String> = items.iter().map(|i| i.item_id.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let groups = kinds
        .iter()
        .zip(ids.chunks(group_size.max(1)))
        .map(|(k, chunk)| (*k, chunk.to_vec()))
        .collect();
    Ok(GroupPlan { groups, seed })
}
