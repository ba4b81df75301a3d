//! Highlighting key answer parts in synthesized speech and measuring what the
//! highlighting does to human judgments.
//!
//! The crate is organised along the pipeline:
//!
//! - [`corpus`]: SQuAD ingestion, answer-sentence extraction, slicing features, group plans
//! - [`prosody`]: baseline and prosody-modified SSML rendering
//! - [`synth`]: TTS clients, the deterministic mock engine and the on-disk audio cache
//! - [`collection`]: task assignment, the judgment store and quality control
//! - [`scoring`]: Double Metaphone plus gestalt similarity for typed answer keys
//! - [`stats`]: median aggregation, Krippendorff's alpha, majority ratio, Wilcoxon
//! - [`report`]: delta-vs-baseline tables and median-split slices

pub mod collection;
pub mod corpus;
pub mod jsonl;
pub mod prosody;
pub mod report;
pub mod scoring;
pub mod stats;
pub mod synth;

pub use collection::{Judgment, TrapItem, TrapType};
pub use corpus::{GroupPlan, ItemFeatures, QaItem};
pub use prosody::{EngineProfile, ModificationKind, SsmlDocument};
pub use stats::{ItemScore, WilcoxonResult};
