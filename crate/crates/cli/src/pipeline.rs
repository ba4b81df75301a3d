//! The pipeline stages. Each reads the artifacts of earlier stages from the
//! output directory and rewrites its own only when their bytes change.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use keyprosody_core::collection::{
    analysis_rows, select_traps, worker_quality, Clock, CollectionConfig, Collector, Judgment, RatingUnit,
    ScoredJudgment, TrapItem, TrapSpec, TrapType, WorkerQuality,
};
use keyprosody_core::corpus::{
    item_features, load_corpus, partition_groups, Feature, GroupPlan, ItemFeatures, QaItem, Rejection,
};
use keyprosody_core::jsonl::{self, write_if_changed};
use keyprosody_core::prosody::{render_ssml, EngineProfile, ModificationKind, SsmlDocument};
use keyprosody_core::report::{delta_table, render_report, render_slice, report_file_name, slice_table, Format};
use keyprosody_core::scoring::{score_judgments, CorrectnessOptions};
use keyprosody_core::stats::{aggregate_all, krippendorff_alpha, majority_ratio, Dimension, ItemScore, Metric};
use keyprosody_core::synth::{AudioStore, HttpTtsClient, MockEngine, SynthRequest, Synthesizer, TtsClient};

use crate::config::{EngineConfig, RunConfig};
use crate::error::PipelineError;

pub type Result<T> = std::result::Result<T, PipelineError>;

/// Artifact locations under the output directory.
#[derive(Debug, Clone)]
pub struct Paths {
    pub out: PathBuf,
}

impl Paths {
    pub fn new(cfg: &RunConfig) -> Self {
        Paths {
            out: cfg.output_dir.clone(),
        }
    }
    pub fn items(&self) -> PathBuf {
        self.out.join("items.jsonl")
    }
    pub fn rejected(&self) -> PathBuf {
        self.out.join("rejected.jsonl")
    }
    pub fn plan(&self) -> PathBuf {
        self.out.join("plan.json")
    }
    pub fn trap_specs(&self) -> PathBuf {
        self.out.join("trap_specs.jsonl")
    }
    pub fn audio(&self) -> PathBuf {
        self.out.join("audio")
    }
    fn per_profile(&self, stem: &str, profile: &str, ext: &str) -> PathBuf {
        self.out.join(format!("{stem}_{profile}.{ext}"))
    }
    pub fn ssml(&self, profile: &str) -> PathBuf {
        self.per_profile("ssml", profile, "jsonl")
    }
    pub fn assets(&self, profile: &str) -> PathBuf {
        self.per_profile("assets", profile, "jsonl")
    }
    pub fn traps(&self, profile: &str) -> PathBuf {
        self.per_profile("traps", profile, "jsonl")
    }
    pub fn judgments(&self, profile: &str) -> PathBuf {
        self.per_profile("judgments", profile, "jsonl")
    }
    pub fn scored(&self, profile: &str) -> PathBuf {
        self.per_profile("scored", profile, "jsonl")
    }
    pub fn quality(&self, profile: &str) -> PathBuf {
        self.per_profile("quality", profile, "json")
    }
    pub fn item_scores(&self, profile: &str) -> PathBuf {
        self.per_profile("item_scores", profile, "jsonl")
    }
    pub fn agreement(&self, profile: &str) -> PathBuf {
        self.per_profile("agreement", profile, "json")
    }
    pub fn report(&self, profile: &str, scope: &str, format: Format) -> PathBuf {
        self.out.join(report_file_name(profile, scope, format))
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<bool> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    write_if_changed(path, bytes).map_err(io_err(path))
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<bool> {
    write(path, jsonl::to_string(records).as_bytes())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<bool> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable artifact");
    s.push('\n');
    write(path, s.as_bytes())
}

fn read_jsonl<T: DeserializeOwned>(path: &Path, stage: &'static str) -> Result<Vec<T>> {
    if !path.exists() {
        return Err(PipelineError::MissingArtifact {
            path: path.display().to_string(),
            stage,
        });
    }
    Ok(jsonl::read_all(path)?)
}

fn read_json<T: DeserializeOwned>(path: &Path, stage: &'static str) -> Result<T> {
    let raw = fs::read(path).map_err(|_| PipelineError::MissingArtifact {
        path: path.display().to_string(),
        stage,
    })?;
    serde_json::from_slice(&raw).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
}

fn changed(flag: bool) -> &'static str {
    if flag {
        "written"
    } else {
        "unchanged"
    }
}

pub fn ingest(cfg: &RunConfig) -> Result<String> {
    let paths = Paths::new(cfg);
    let loaded = load_corpus(&cfg.corpus_path, cfg.limit_articles, cfg.unit)?;
    let w1 = write_jsonl(&paths.items(), &loaded.items)?;
    let w2 = write_jsonl::<Rejection>(&paths.rejected(), &loaded.rejected)?;
    Ok(format!(
        "ingest: {} items, {} rejected ({}, {})",
        loaded.items.len(),
        loaded.rejected.len(),
        changed(w1),
        changed(w2)
    ))
}

pub fn load_items(cfg: &RunConfig) -> Result<Vec<QaItem>> {
    read_jsonl(&Paths::new(cfg).items(), "ingest")
}

pub fn plan(cfg: &RunConfig) -> Result<String> {
    let paths = Paths::new(cfg);
    let items = load_items(cfg)?;
    let plan = partition_groups(&items, &cfg.kinds, cfg.group_size, cfg.seed)?;
    let traps = select_traps(&items, &plan, cfg.gold_traps, cfg.off_topic_traps, cfg.seed);
    let w1 = write_json(&paths.plan(), &plan)?;
    let w2 = write_jsonl(&paths.trap_specs(), &traps)?;
    let sizes: Vec<String> = plan.groups.iter().map(|(k, v)| format!("{k}={}", v.len())).collect();
    Ok(format!(
        "plan: groups {} and {} traps ({}, {})",
        sizes.join(" "),
        traps.len(),
        changed(w1),
        changed(w2)
    ))
}

fn load_plan(cfg: &RunConfig) -> Result<(GroupPlan, Vec<TrapSpec>)> {
    let paths = Paths::new(cfg);
    Ok((
        read_json(&paths.plan(), "plan")?,
        read_jsonl(&paths.trap_specs(), "plan")?,
    ))
}

/// Documents for one profile: baseline and group modification for every
/// planned item, plus baseline audio for trap sources. Groups whose
/// modification the profile lacks are skipped.
pub fn ssml_documents(
    items: &[QaItem],
    plan: &GroupPlan,
    traps: &[TrapSpec],
    profile: &EngineProfile,
) -> Result<(Vec<SsmlDocument>, Vec<ModificationKind>)> {
    let by_id: HashMap<&str, &QaItem> = items.iter().map(|i| (i.item_id.as_str(), i)).collect();
    let lookup = |id: &str| {
        by_id
            .get(id)
            .copied()
            .ok_or_else(|| PipelineError::Config(format!("plan refers to unknown item {id}; rerun `plan`")))
    };
    let mut docs = Vec::new();
    let mut seen = BTreeSet::new();
    let mut skipped = Vec::new();
    for (kind, ids) in &plan.groups {
        if !profile.supports(*kind) {
            log::warn!("profile {} has no {kind}; skipping that group", profile.name);
            skipped.push(*kind);
            continue;
        }
        for id in ids {
            let item = lookup(id)?;
            for k in [ModificationKind::Baseline, *kind] {
                if seen.insert((id.clone(), k)) {
                    docs.push(render_ssml(item, k, profile)?);
                }
            }
        }
    }
    for t in traps {
        let item = lookup(&t.audio_item_id)?;
        if seen.insert((t.audio_item_id.clone(), ModificationKind::Baseline)) {
            docs.push(render_ssml(item, ModificationKind::Baseline, profile)?);
        }
    }
    Ok((docs, skipped))
}

pub fn ssml(cfg: &RunConfig, profiles: &[EngineProfile]) -> Result<String> {
    let paths = Paths::new(cfg);
    let items = load_items(cfg)?;
    let (plan, traps) = load_plan(cfg)?;
    let mut lines = Vec::new();
    for p in profiles {
        let (docs, skipped) = ssml_documents(&items, &plan, &traps, p)?;
        let w = write_jsonl(&paths.ssml(&p.name), &docs)?;
        let note = if skipped.is_empty() {
            String::new()
        } else {
            let s: Vec<&str> = skipped.iter().map(|k| k.as_str()).collect();
            format!(", unsupported: {}", s.join(" "))
        };
        lines.push(format!(
            "ssml {}: {} documents ({}{note})",
            p.name,
            docs.len(),
            changed(w)
        ));
    }
    Ok(lines.join("\n"))
}

/// Where each (item, kind) audio lives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetRef {
    pub item_id: String,
    pub kind: ModificationKind,
    pub asset_id: String,
    pub media_type: String,
}

fn client_for(cfg: &RunConfig, profile: &EngineProfile) -> Result<Arc<dyn TtsClient>> {
    Ok(match cfg.engines.get(&profile.name) {
        None | Some(EngineConfig::Mock) => Arc::new(MockEngine),
        Some(EngineConfig::Http(http)) => Arc::new(HttpTtsClient::new(http.clone())?),
    })
}

pub fn synth(cfg: &RunConfig, profiles: &[EngineProfile]) -> Result<String> {
    let paths = Paths::new(cfg);
    let (_, trap_specs) = load_plan(cfg)?;
    let mut lines = Vec::new();
    for p in profiles {
        let docs: Vec<SsmlDocument> = read_jsonl(&paths.ssml(&p.name), "ssml")?;
        let mut synth = Synthesizer::new(AudioStore::new(paths.audio())).with_concurrency(cfg.concurrency);
        synth.register(&p.name, client_for(cfg, p)?);
        let reqs: Vec<SynthRequest> = docs
            .into_iter()
            .map(|ssml| SynthRequest {
                ssml,
                profile: p.clone(),
            })
            .collect();
        let mut refs = Vec::with_capacity(reqs.len());
        let mut failures = Vec::new();
        for (req, res) in reqs.iter().zip(synth.synthesize_all(&reqs)) {
            match res {
                Ok(a) => refs.push(AssetRef {
                    item_id: req.ssml.item_id.clone(),
                    kind: req.ssml.kind,
                    asset_id: a.asset_id,
                    media_type: a.media_type,
                }),
                Err(e) => failures.push(e),
            }
        }
        if let Some(first) = failures.into_iter().next() {
            log::error!(
                "synthesis for {} incomplete; cached assets are kept for the rerun",
                p.name
            );
            return Err(first.into());
        }
        let baseline: HashMap<&str, &str> = refs
            .iter()
            .filter(|r| r.kind == ModificationKind::Baseline)
            .map(|r| (r.item_id.as_str(), r.asset_id.as_str()))
            .collect();
        let traps: Vec<TrapItem> = trap_specs
            .iter()
            .map(|t| TrapItem {
                trap_id: t.trap_id.clone(),
                question: t.question.clone(),
                audio_asset_id: baseline[t.audio_item_id.as_str()].to_string(),
                trap_type: t.trap_type,
                gold_key: t.gold_key.clone(),
            })
            .collect();
        let w1 = write_jsonl(&paths.assets(&p.name), &refs)?;
        let w2 = write_jsonl(&paths.traps(&p.name), &traps)?;
        lines.push(format!(
            "synth {}: {} assets, {} engine calls ({}, {})",
            p.name,
            refs.len(),
            synth.client_calls(),
            changed(w1),
            changed(w2)
        ));
    }
    Ok(lines.join("\n"))
}

/// Real rating units and traps for one profile.
pub fn rating_inputs(cfg: &RunConfig, profile: &EngineProfile) -> Result<(Vec<RatingUnit>, Vec<TrapItem>)> {
    let paths = Paths::new(cfg);
    let items = load_items(cfg)?;
    let (plan, _) = load_plan(cfg)?;
    let assets: Vec<AssetRef> = read_jsonl(&paths.assets(&profile.name), "synth")?;
    let traps: Vec<TrapItem> = read_jsonl(&paths.traps(&profile.name), "synth")?;
    let questions: HashMap<&str, &str> = items
        .iter()
        .map(|i| (i.item_id.as_str(), i.question.as_str()))
        .collect();
    let asset_of: HashMap<(&str, ModificationKind), &str> = assets
        .iter()
        .map(|a| ((a.item_id.as_str(), a.kind), a.asset_id.as_str()))
        .collect();
    let mut units = Vec::new();
    for (kind, ids) in &plan.groups {
        if !profile.supports(*kind) {
            continue;
        }
        for id in ids {
            for k in [ModificationKind::Baseline, *kind] {
                let asset = asset_of
                    .get(&(id.as_str(), k))
                    .ok_or_else(|| PipelineError::MissingArtifact {
                        path: format!("audio for {id}/{k}"),
                        stage: "synth",
                    })?;
                units.push(RatingUnit {
                    item_id: id.clone(),
                    kind: k,
                    question: questions.get(id.as_str()).copied().unwrap_or_default().to_string(),
                    audio_asset_id: asset.to_string(),
                });
            }
        }
    }
    Ok((units, traps))
}

pub fn open_collector(cfg: &RunConfig, profile: &EngineProfile, seed: u64, clock: Clock) -> Result<Collector> {
    let (units, traps) = rating_inputs(cfg, profile)?;
    let store = Paths::new(cfg).judgments(&profile.name);
    if let Some(dir) = store.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let collection = CollectionConfig {
        target_per_item: cfg.target_judgments_per_item,
        trap_ratio: cfg.trap_ratio,
        seed,
        lease_secs: cfg.lease_secs,
    };
    Ok(Collector::open(&store, units, traps, collection, clock)?)
}

pub fn serve(cfg: &RunConfig, profile: &EngineProfile) -> Result<()> {
    let addr: std::net::SocketAddr = cfg
        .bind
        .parse()
        .map_err(|e| PipelineError::Config(format!("bind {:?}: {e}", cfg.bind)))?;
    // fresh task ids per process so stale clients cannot hit new tasks
    let nonce = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    let collector = open_collector(cfg, profile, cfg.seed ^ nonce, Box::new(chrono::Utc::now))?;
    let state = keyprosody_service::AppState {
        collector: Arc::new(collector),
        audio: AudioStore::new(Paths::new(cfg).audio()),
    };
    let rt = tokio::runtime::Runtime::new().map_err(io_err(Path::new("tokio runtime")))?;
    rt.block_on(keyprosody_service::serve(addr, state))
        .map_err(|e| PipelineError::Io {
            path: cfg.bind.clone(),
            source: e,
        })
}

fn gold_keys(cfg: &RunConfig, profile: &EngineProfile) -> Result<(HashMap<String, String>, Vec<TrapItem>)> {
    let items = load_items(cfg)?;
    let traps: Vec<TrapItem> = read_jsonl(&Paths::new(cfg).traps(&profile.name), "synth")?;
    let mut gold: HashMap<String, String> = items.into_iter().map(|i| (i.item_id, i.answer_key)).collect();
    for t in &traps {
        match (&t.gold_key, t.trap_type) {
            (Some(k), TrapType::GoldKey) => {
                gold.insert(t.trap_id.clone(), k.clone());
            }
            _ => {
                gold.remove(&t.trap_id);
            }
        }
    }
    Ok((gold, traps))
}

pub fn score(cfg: &RunConfig, profiles: &[EngineProfile]) -> Result<String> {
    let paths = Paths::new(cfg);
    let opts = CorrectnessOptions {
        accept_alternates: cfg.accept_alternates,
    };
    let mut lines = Vec::new();
    for p in profiles {
        let judgments: Vec<Judgment> = read_jsonl(&paths.judgments(&p.name), "serve")?;
        let (gold, _) = gold_keys(cfg, p)?;
        let scored = score_judgments(&judgments, |j| gold.get(&j.item_id).map(String::as_str), opts);
        let w = write_jsonl(&paths.scored(&p.name), &scored)?;
        lines.push(format!("score {}: {} judgments ({})", p.name, scored.len(), changed(w)));
    }
    Ok(lines.join("\n"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementRow {
    pub dimension: Dimension,
    /// Modification group the audios belong to (its baseline and modified audio).
    pub group: ModificationKind,
    pub n_units: usize,
    pub alpha_nominal: Option<f64>,
    pub alpha_ordinal: Option<f64>,
    pub alpha_interval: Option<f64>,
    /// Alpha under the dimension's default metric.
    pub alpha: Option<f64>,
    pub majority_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementSummary {
    pub dimension: Dimension,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub majority_min: Option<f64>,
    pub majority_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub profile: String,
    pub judgments: usize,
    pub workers: usize,
    pub reliable_workers: usize,
    pub rows: Vec<AgreementRow>,
    pub summary: Vec<AgreementSummary>,
}

fn round(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

/// Alpha and majority ratio per rated dimension within each group, over raw
/// ratings of the analysis rows.
pub fn agreement(rows: &[ScoredJudgment], plan: &GroupPlan) -> Vec<AgreementRow> {
    let mut out = Vec::new();
    for (group, ids) in &plan.groups {
        let members: BTreeSet<&str> = ids.iter().map(String::as_str).collect();
        let in_group: Vec<&ScoredJudgment> = rows
            .iter()
            .filter(|r| members.contains(r.judgment.item_id.as_str()))
            .filter(|r| r.judgment.kind == *group || r.judgment.kind == ModificationKind::Baseline)
            .collect();
        if in_group.is_empty() {
            continue;
        }
        let workers: BTreeMap<&str, usize> = in_group
            .iter()
            .map(|r| r.judgment.worker_id.as_str())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, w)| (w, i))
            .collect();
        let mut units: BTreeMap<(&str, ModificationKind), Vec<&ScoredJudgment>> = BTreeMap::new();
        for r in &in_group {
            units
                .entry((r.judgment.item_id.as_str(), r.judgment.kind))
                .or_default()
                .push(r);
        }
        for dim in Dimension::RATED {
            let matrix: Vec<Vec<Option<f64>>> = units
                .values()
                .map(|js| {
                    let mut row = vec![None; workers.len()];
                    for j in js {
                        row[workers[j.judgment.worker_id.as_str()]] = dim.raw_value(j);
                    }
                    row
                })
                .collect();
            let a = |m: Metric| krippendorff_alpha(&matrix, m).ok().map(round);
            let (nominal, ordinal, interval) = (a(Metric::Nominal), a(Metric::Ordinal), a(Metric::Interval));
            let alpha = match dim.default_metric() {
                Metric::Nominal => nominal,
                Metric::Ordinal => ordinal,
                Metric::Interval => interval,
            };
            out.push(AgreementRow {
                dimension: dim,
                group: *group,
                n_units: matrix.len(),
                alpha_nominal: nominal,
                alpha_ordinal: ordinal,
                alpha_interval: interval,
                alpha,
                majority_ratio: majority_ratio(&matrix).map(round),
            });
        }
    }
    out
}

fn summarize(rows: &[AgreementRow]) -> Vec<AgreementSummary> {
    Dimension::RATED
        .iter()
        .map(|d| {
            let sel: Vec<&AgreementRow> = rows.iter().filter(|r| r.dimension == *d).collect();
            let range = |f: fn(&AgreementRow) -> Option<f64>| {
                let v: Vec<f64> = sel.iter().filter_map(|r| f(r)).collect();
                let min = v.iter().copied().reduce(f64::min);
                let max = v.iter().copied().reduce(f64::max);
                (min, max)
            };
            let (alpha_min, alpha_max) = range(|r| r.alpha);
            let (majority_min, majority_max) = range(|r| r.majority_ratio);
            AgreementSummary {
                dimension: *d,
                alpha_min,
                alpha_max,
                majority_min,
                majority_max,
            }
        })
        .collect()
}

pub fn analyze(cfg: &RunConfig, profiles: &[EngineProfile]) -> Result<String> {
    let paths = Paths::new(cfg);
    let (plan, _) = load_plan(cfg)?;
    let opts = CorrectnessOptions {
        accept_alternates: cfg.accept_alternates,
    };
    let mut lines = Vec::new();
    for p in profiles {
        let scored: Vec<ScoredJudgment> = read_jsonl(&paths.scored(&p.name), "score")?;
        let traps: Vec<TrapItem> = read_jsonl(&paths.traps(&p.name), "synth")?;
        let judgments: Vec<Judgment> = scored.iter().map(|s| s.judgment.clone()).collect();
        let quality: BTreeMap<String, WorkerQuality> = worker_quality(&judgments, &traps, opts);
        let reliable: BTreeSet<String> = quality
            .values()
            .filter(|q| q.reliable)
            .map(|q| q.worker_id.clone())
            .collect();
        let rows = analysis_rows(&scored, &reliable);
        let scores = aggregate_all(&rows);
        let agreement_rows = agreement(&rows, &plan);
        let report = AgreementReport {
            profile: p.name.clone(),
            judgments: rows.len(),
            workers: quality.len(),
            reliable_workers: reliable.len(),
            summary: summarize(&agreement_rows),
            rows: agreement_rows,
        };
        let w1 = write_json(&paths.quality(&p.name), &quality.values().collect::<Vec<_>>())?;
        let w2 = write_jsonl(&paths.item_scores(&p.name), &scores)?;
        let w3 = write_json(&paths.agreement(&p.name), &report)?;
        lines.push(format!(
            "analyze {}: {} of {} workers reliable, {} judgments, {} item scores ({}, {}, {})",
            p.name,
            reliable.len(),
            quality.len(),
            rows.len(),
            scores.len(),
            changed(w1),
            changed(w2),
            changed(w3)
        ));
    }
    Ok(lines.join("\n"))
}

pub fn report(cfg: &RunConfig, profiles: &[EngineProfile], format: Format) -> Result<String> {
    let paths = Paths::new(cfg);
    let items = load_items(cfg)?;
    let features: BTreeMap<String, ItemFeatures> =
        items.iter().map(|i| (i.item_id.clone(), item_features(i))).collect();
    let mut lines = Vec::new();
    for p in profiles {
        let scores: Vec<ItemScore> = read_jsonl(&paths.item_scores(&p.name), "analyze")?;
        let table = delta_table(&scores, cfg.delta_agg);
        if table.missing_baseline > 0 {
            log::warn!(
                "{}: {} modified scores without baseline",
                p.name,
                table.missing_baseline
            );
        }
        let mut written = 0;
        if write(
            &paths.report(&p.name, "overall", format),
            render_report(&table.rows, format).as_bytes(),
        )? {
            written += 1;
        }
        for feature in Feature::ALL {
            match slice_table(&scores, &features, feature, cfg.delta_agg) {
                Ok(slice) => {
                    if write(
                        &paths.report(&p.name, feature.as_str(), format),
                        render_slice(&slice, format).as_bytes(),
                    )? {
                        written += 1;
                    }
                }
                Err(e) => log::warn!("{}: {e}", p.name),
            }
        }
        lines.push(format!(
            "report {}: {} rows, {} files rewritten",
            p.name,
            table.rows.len(),
            written
        ));
    }
    Ok(lines.join("\n"))
}

/// Fills each profile's judgment store with simulated raters.
pub fn simulate(cfg: &RunConfig, profiles: &[EngineProfile]) -> Result<String> {
    let items = load_items(cfg)?;
    let mut lines = Vec::new();
    for p in profiles {
        let collector = open_collector(cfg, p, cfg.seed, crate::simulate::synthetic_clock())?;
        let traps: Vec<TrapItem> = read_jsonl(&Paths::new(cfg).traps(&p.name), "synth")?;
        let answers = crate::simulate::Answers::new(&items, &traps);
        let s = crate::simulate::run(&collector, &answers, &cfg.simulation, cfg.seed)?;
        lines.push(format!(
            "simulate {}: {} judgments submitted ({} traps)",
            p.name, s.submitted, s.trap_tasks
        ));
    }
    Ok(lines.join("\n"))
}

/// Every stage in order with simulated raters in place of `serve`.
pub fn all(cfg: &RunConfig, profiles: &[EngineProfile], format: Format) -> Result<String> {
    let steps = [
        ingest(cfg)?,
        plan(cfg)?,
        ssml(cfg, profiles)?,
        synth(cfg, profiles)?,
        simulate(cfg, profiles)?,
        score(cfg, profiles)?,
        analyze(cfg, profiles)?,
        report(cfg, profiles, format)?,
    ];
    Ok(steps.join("\n"))
}

/// Groups implied by stored judgments: each item belongs to the one modified
/// kind it was rated under.
pub fn infer_plan(rows: &[Judgment]) -> GroupPlan {
    let mut groups: BTreeMap<ModificationKind, BTreeSet<String>> = BTreeMap::new();
    for j in rows
        .iter()
        .filter(|j| !j.is_trap && j.kind != ModificationKind::Baseline)
    {
        groups.entry(j.kind).or_default().insert(j.item_id.clone());
    }
    GroupPlan {
        groups: groups.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect(),
        seed: 0,
    }
}

/// Agreement recomputed from an externally collected judgment file whose
/// rows are already quality-filtered.
pub fn judgment_file_agreement(path: &Path) -> Result<(usize, Vec<AgreementRow>, Vec<AgreementSummary>)> {
    let judgments: Vec<Judgment> = read_jsonl(path, "fixture")?;
    let rows: Vec<ScoredJudgment> = judgments
        .iter()
        .filter(|j| !j.is_trap)
        .map(|j| ScoredJudgment {
            judgment: j.clone(),
            correctness: None,
        })
        .collect();
    let plan = infer_plan(&judgments);
    let table = agreement(&rows, &plan);
    let summary = summarize(&table);
    Ok((rows.len(), table, summary))
}
