//! Run configuration: one JSON file shared by every subcommand.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use keyprosody_core::corpus::Unit;
use keyprosody_core::prosody::{EngineProfile, ModificationKind};
use keyprosody_core::report::DeltaAgg;
use keyprosody_core::synth::{HttpTtsConfig, DEFAULT_CONCURRENCY};

use crate::error::PipelineError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum EngineConfig {
    Mock,
    Http(HttpTtsConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Reliable simulated raters.
    pub workers: usize,
    /// Raters who fail traps and answer at random.
    pub spammers: usize,
    /// Kind whose informativeness is raised by `boost`; `None` for no effect.
    pub boosted_kind: Option<ModificationKind>,
    pub boost: i32,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            workers: 8,
            spammers: 1,
            boosted_kind: Some(ModificationKind::Pitch),
            boost: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus_path: PathBuf,
    pub unit: Unit,
    pub limit_articles: Option<usize>,
    pub profiles: Vec<EngineProfile>,
    pub kinds: Vec<ModificationKind>,
    pub group_size: usize,
    pub seed: u64,
    pub target_judgments_per_item: usize,
    pub trap_ratio: f64,
    pub gold_traps: usize,
    pub off_topic_traps: usize,
    pub output_dir: PathBuf,
    /// Engine per profile name; profiles not listed use the mock engine.
    pub engines: BTreeMap<String, EngineConfig>,
    pub concurrency: usize,
    pub delta_agg: DeltaAgg,
    pub accept_alternates: bool,
    pub bind: String,
    pub lease_secs: Option<i64>,
    pub simulation: SimulationConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus_path: PathBuf::from("train-v1.1.json"),
            unit: Unit::Sentence,
            limit_articles: Some(300),
            profiles: EngineProfile::builtin(),
            kinds: ModificationKind::MODIFIED.to_vec(),
            group_size: 75,
            seed: 0,
            target_judgments_per_item: 3,
            trap_ratio: 0.1,
            gold_traps: 20,
            off_topic_traps: 20,
            output_dir: PathBuf::from("out"),
            engines: BTreeMap::new(),
            concurrency: DEFAULT_CONCURRENCY,
            delta_agg: DeltaAgg::Median,
            accept_alternates: false,
            bind: "127.0.0.1:8080".into(),
            lease_secs: Some(30 * 60),
            simulation: SimulationConfig::default(),
        }
    }
}

impl RunConfig {
    /// Reads `path`. Relative `corpus_path` and `output_dir` are taken
    /// relative to the file's directory.
    pub fn load(path: &Path) -> Result<RunConfig, PipelineError> {
        let raw = fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&raw).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.corpus_path.is_relative() {
            cfg.corpus_path = base.join(&cfg.corpus_path);
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.group_size < 1 {
            return bad("group_size must be at least 1".into());
        }
        if self.target_judgments_per_item < 1 {
            return bad("target_judgments_per_item must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.trap_ratio) {
            return bad(format!("trap_ratio {} outside [0, 1)", self.trap_ratio));
        }
        if self.concurrency < 1 {
            return bad("concurrency must be at least 1".into());
        }
        if self.profiles.is_empty() {
            return bad("no engine profiles configured".into());
        }
        if self.kinds.is_empty() || self.kinds.contains(&ModificationKind::Baseline) {
            return bad("kinds must list modifications (not baseline)".into());
        }
        let mut names = std::collections::BTreeSet::new();
        for p in &self.profiles {
            p.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
            if !names.insert(p.name.as_str()) {
                return bad(format!("duplicate profile name {}", p.name));
            }
        }
        for name in self.engines.keys() {
            if !names.contains(name.as_str()) {
                return bad(format!("engine configured for unknown profile {name}"));
            }
        }
        Ok(())
    }

    /// Profiles selected by `--engine`, or all of them.
    pub fn selected_profiles(&self, engine: Option<&str>) -> Result<Vec<EngineProfile>, PipelineError> {
        match engine {
            None => Ok(self.profiles.clone()),
            Some(name) => self
                .profiles
                .iter()
                .find(|p| p.name == name)
                .cloned()
                .map(|p| vec![p])
                .ok_or_else(|| PipelineError::Config(format!("unknown engine profile {name:?}"))),
        }
    }
}
