//! Rating task assignment, the append-only judgment store and the two
//! quality-control filters.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{GroupPlan, QaItem};
use crate::jsonl::{self, JsonlError};
use crate::prosody::ModificationKind;
use crate::scoring::{correctness_with, CorrectnessOptions};

/// Minimum mean correctness over gold-key traps for a worker to be kept.
pub const GOLD_CORRECTNESS_THRESHOLD: f64 = 0.5;

pub const INFORMATIVENESS_RANGE: (i64, i64) = (0, 4);
pub const ELOCUTION_RANGE: (i64, i64) = (0, 2);
pub const INTERRUPTION_RANGE: (i64, i64) = (0, 1);
pub const LENGTH_RANGE: (i64, i64) = (-1, 1);

#[derive(Debug, thiserror::Error)]
pub enum CollectionError {
    #[error("invalid judgment: {}", format_fields(.0))]
    Validation(Vec<FieldError>),
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("task {task_id} was not assigned to worker {worker_id}")]
    WrongWorker { task_id: String, worker_id: String },
    #[error("task {0} was already answered")]
    Duplicate(String),
    #[error("judgment store: {0}")]
    Store(#[from] JsonlError),
}

fn format_fields(fields: &[FieldError]) -> String {
    fields
        .iter()
        .map(|f| format!("{} ({})", f.field, f.message))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

/// One worker's ratings of one audio, as stored (one JSON line each).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub worker_id: String,
    pub item_id: String,
    pub kind: ModificationKind,
    pub informativeness: i32,
    pub elocution: i32,
    pub interruption: i32,
    pub length_rating: i32,
    pub typed_key: String,
    pub is_trap: bool,
    pub timestamp: DateTime<Utc>,
}

/// What a rating client posts. Item, kind and trap status are resolved from
/// the task on the server so the client never learns which tasks are traps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentSubmission {
    pub task_id: String,
    pub worker_id: String,
    pub informativeness: i64,
    pub elocution: i64,
    pub interruption: i64,
    pub length_rating: i64,
    pub typed_key: String,
}

impl JudgmentSubmission {
    pub fn validate(&self) -> Result<(), Vec<FieldError>> {
        let mut errors = Vec::new();
        for (field, value, (lo, hi)) in [
            ("informativeness", self.informativeness, INFORMATIVENESS_RANGE),
            ("elocution", self.elocution, ELOCUTION_RANGE),
            ("interruption", self.interruption, INTERRUPTION_RANGE),
            ("length_rating", self.length_rating, LENGTH_RANGE),
        ] {
            if !(lo..=hi).contains(&value) {
                errors.push(FieldError {
                    field: field.into(),
                    message: format!("{value} outside {lo}..={hi}"),
                });
            }
        }
        if self.typed_key.trim().is_empty() {
            errors.push(FieldError {
                field: "typed_key".into(),
                message: "must not be empty".into(),
            });
        }
        if self.worker_id.trim().is_empty() {
            errors.push(FieldError {
                field: "worker_id".into(),
                message: "must not be empty".into(),
            });
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }
}

/// A stored judgment with its correctness column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredJudgment {
    #[serde(flatten)]
    pub judgment: Judgment,
    /// `None` when there is no gold key (off-topic traps, unknown items).
    pub correctness: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrapType {
    GoldKey,
    OffTopic,
}

/// A quality-control task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrapItem {
    pub trap_id: String,
    pub question: String,
    pub audio_asset_id: String,
    pub trap_type: TrapType,
    #[serde(default)]
    pub gold_key: Option<String>,
}

impl TrapItem {
    pub fn validate(&self) -> Result<(), String> {
        match (self.trap_type, &self.gold_key) {
            (TrapType::OffTopic, Some(_)) => Err(format!("off-topic trap {} carries a gold key", self.trap_id)),
            (TrapType::GoldKey, None) => Err(format!("gold-key trap {} has no gold key", self.trap_id)),
            _ => Ok(()),
        }
    }
}

/// A trap before audio exists: which item's audio to play with which question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrapSpec {
    pub trap_id: String,
    pub question: String,
    pub audio_item_id: String,
    pub trap_type: TrapType,
    #[serde(default)]
    pub gold_key: Option<String>,
}

/// Picks traps from items outside the plan. Gold-key traps keep their own
/// question; off-topic traps pair a question with the answer audio of an item
/// from a different article.
pub fn select_traps(items: &[QaItem], plan: &GroupPlan, n_gold: usize, n_off_topic: usize, seed: u64) -> Vec<TrapSpec> {
    let planned = plan.planned_ids();
    let mut pool: Vec<&QaItem> = items.iter().filter(|i| !planned.contains(i.item_id.as_str())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7472_6170);
    pool.shuffle(&mut rng);

    let mut traps = Vec::new();
    let mut rest = pool.into_iter();
    for item in rest.by_ref().take(n_gold) {
        traps.push(TrapSpec {
            trap_id: format!("trap-gold-{}", item.item_id),
            question: item.question.clone(),
            audio_item_id: item.item_id.clone(),
            trap_type: TrapType::GoldKey,
            gold_key: Some(item.answer_key.clone()),
        });
    }
    let remaining: Vec<&QaItem> = rest.collect();
    let mut used = HashSet::new();
    for q in &remaining {
        if traps.len() >= n_gold + n_off_topic {
            break;
        }
        if used.contains(&q.item_id) {
            continue;
        }
        let audio = remaining
            .iter()
            .find(|a| a.article_title != q.article_title && !used.contains(&a.item_id) && a.item_id != q.item_id);
        if let Some(a) = audio {
            used.insert(q.item_id.clone());
            used.insert(a.item_id.clone());
            traps.push(TrapSpec {
                trap_id: format!("trap-offtopic-{}", q.item_id),
                question: q.question.clone(),
                audio_item_id: a.item_id.clone(),
                trap_type: TrapType::OffTopic,
                gold_key: None,
            });
        }
    }
    let got_gold = traps.iter().filter(|t| t.trap_type == TrapType::GoldKey).count();
    if got_gold < n_gold || traps.len() - got_gold < n_off_topic {
        log::warn!(
            "trap pool short: {} gold-key and {} off-topic traps available",
            got_gold,
            traps.len() - got_gold
        );
    }
    traps
}

/// A real (non-trap) audio awaiting judgments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingUnit {
    pub item_id: String,
    pub kind: ModificationKind,
    pub question: String,
    pub audio_asset_id: String,
}

/// An assignment of one audio to one worker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub task_id: String,
    pub worker_id: String,
    /// Item id for real tasks, trap id for traps.
    pub item_id: String,
    pub kind: ModificationKind,
    pub question: String,
    pub audio_asset_id: String,
    pub is_trap: bool,
    issued_at: DateTime<Utc>,
}

/// The part of a task a rating client may see.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskPayload {
    pub task_id: String,
    pub question: String,
    pub audio_url: String,
}

impl Task {
    pub fn payload(&self) -> TaskPayload {
        TaskPayload {
            task_id: self.task_id.clone(),
            question: self.question.clone(),
            audio_url: format!("/api/audio/{}", self.audio_asset_id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NextTask {
    Assigned(Task),
    NoWork,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub seq: u64,
    pub task_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionConfig {
    /// Accepted judgments wanted per (item, kind).
    pub target_per_item: usize,
    /// Probability of serving a trap instead of a real task.
    pub trap_ratio: f64,
    pub seed: u64,
    /// Unanswered assignments older than this are released.
    pub lease_secs: Option<i64>,
}

impl Default for CollectionConfig {
    fn default() -> Self {
        CollectionConfig {
            target_per_item: 3,
            trap_ratio: 0.1,
            seed: 0,
            lease_secs: Some(30 * 60),
        }
    }
}

pub type Clock = Box<dyn Fn() -> DateTime<Utc> + Send + Sync>;

type UnitKey = (String, ModificationKind);

struct State {
    rng: ChaCha8Rng,
    session: u64,
    next_task: u64,
    next_seq: u64,
    accepted: HashMap<UnitKey, usize>,
    reserved: HashMap<UnitKey, usize>,
    /// item ids (and trap ids) each worker has answered or holds
    seen: HashMap<String, HashSet<String>>,
    pending: HashMap<String, Task>,
    answered: HashSet<String>,
}

/// Serves tasks and records judgments. All mutation goes through one lock,
/// so assignment and store appends are serialized.
pub struct Collector {
    store_path: PathBuf,
    units: Vec<RatingUnit>,
    traps: Vec<TrapItem>,
    cfg: CollectionConfig,
    clock: Clock,
    state: Mutex<State>,
}

impl Collector {
    /// Opens (or creates) the store at `store_path` and rebuilds the index
    /// from any judgments already in it.
    pub fn open(
        store_path: &Path,
        units: Vec<RatingUnit>,
        traps: Vec<TrapItem>,
        cfg: CollectionConfig,
        clock: Clock,
    ) -> Result<Collector, CollectionError> {
        let existing: Vec<Judgment> = if store_path.exists() {
            jsonl::read_all(store_path)?
        } else {
            Vec::new()
        };
        let mut accepted: HashMap<UnitKey, usize> = HashMap::new();
        let mut seen: HashMap<String, HashSet<String>> = HashMap::new();
        for j in &existing {
            seen.entry(j.worker_id.clone()).or_default().insert(j.item_id.clone());
            if !j.is_trap {
                *accepted.entry((j.item_id.clone(), j.kind)).or_default() += 1;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (existing.len() as u64).rotate_left(32));
        let session = rng.random::<u32>() as u64;
        Ok(Collector {
            store_path: store_path.to_path_buf(),
            units,
            traps,
            cfg,
            clock,
            state: Mutex::new(State {
                rng,
                session,
                next_task: 1,
                next_seq: existing.len() as u64 + 1,
                accepted,
                reserved: HashMap::new(),
                seen,
                pending: HashMap::new(),
                answered: HashSet::new(),
            }),
        })
    }

    pub fn store_path(&self) -> &Path {
        &self.store_path
    }

    /// Assigns a uniformly random audio of an item this worker has not seen,
    /// or, with probability `trap_ratio`, an unseen trap.
    pub fn next_task(&self, worker_id: &str) -> NextTask {
        let now = (self.clock)();
        let mut st = self.state.lock().expect("collector state");
        self.expire_leases(&mut st, now);

        let seen = st.seen.get(worker_id);
        let is_seen = |id: &str| seen.is_some_and(|s| s.contains(id));
        let open_units: Vec<usize> = self
            .units
            .iter()
            .enumerate()
            .filter(|(_, u)| !is_seen(&u.item_id))
            .filter(|(_, u)| {
                let key = (u.item_id.clone(), u.kind);
                let taken = st.accepted.get(&key).copied().unwrap_or(0) + st.reserved.get(&key).copied().unwrap_or(0);
                taken < self.cfg.target_per_item
            })
            .map(|(i, _)| i)
            .collect();
        if open_units.is_empty() {
            return NextTask::NoWork;
        }
        let open_traps: Vec<usize> = self
            .traps
            .iter()
            .enumerate()
            .filter(|(_, t)| !is_seen(&t.trap_id))
            .map(|(i, _)| i)
            .collect();

        let serve_trap = !open_traps.is_empty() && st.rng.random::<f64>() < self.cfg.trap_ratio;
        let task_id = format!("{:08x}-{}", st.session, st.next_task);
        st.next_task += 1;
        let task = if serve_trap {
            let t = &self.traps[*open_traps.choose(&mut st.rng).expect("non-empty")];
            Task {
                task_id: task_id.clone(),
                worker_id: worker_id.to_string(),
                item_id: t.trap_id.clone(),
                kind: ModificationKind::Baseline,
                question: t.question.clone(),
                audio_asset_id: t.audio_asset_id.clone(),
                is_trap: true,
                issued_at: now,
            }
        } else {
            let u = &self.units[*open_units.choose(&mut st.rng).expect("non-empty")];
            *st.reserved.entry((u.item_id.clone(), u.kind)).or_default() += 1;
            Task {
                task_id: task_id.clone(),
                worker_id: worker_id.to_string(),
                item_id: u.item_id.clone(),
                kind: u.kind,
                question: u.question.clone(),
                audio_asset_id: u.audio_asset_id.clone(),
                is_trap: false,
                issued_at: now,
            }
        };
        st.seen
            .entry(worker_id.to_string())
            .or_default()
            .insert(task.item_id.clone());
        st.pending.insert(task_id, task.clone());
        NextTask::Assigned(task)
    }

    fn expire_leases(&self, st: &mut State, now: DateTime<Utc>) {
        let Some(lease) = self.cfg.lease_secs else {
            return;
        };
        let expired: Vec<String> = st
            .pending
            .iter()
            .filter(|(_, t)| (now - t.issued_at).num_seconds() >= lease)
            .map(|(id, _)| id.clone())
            .collect();
        for id in expired {
            let t = st.pending.remove(&id).expect("listed");
            if !t.is_trap {
                release(&mut st.reserved, &(t.item_id.clone(), t.kind));
            }
            if let Some(s) = st.seen.get_mut(&t.worker_id) {
                s.remove(&t.item_id);
            }
        }
    }

    /// Validates and appends a judgment for a pending task.
    pub fn submit(&self, sub: &JudgmentSubmission) -> Result<Receipt, CollectionError> {
        let mut st = self.state.lock().expect("collector state");
        let task = match st.pending.get(&sub.task_id) {
            Some(t) => t.clone(),
            None if st.answered.contains(&sub.task_id) => return Err(CollectionError::Duplicate(sub.task_id.clone())),
            None => return Err(CollectionError::UnknownTask(sub.task_id.clone())),
        };
        if task.worker_id != sub.worker_id {
            return Err(CollectionError::WrongWorker {
                task_id: sub.task_id.clone(),
                worker_id: sub.worker_id.clone(),
            });
        }
        sub.validate().map_err(CollectionError::Validation)?;

        let judgment = Judgment {
            worker_id: sub.worker_id.clone(),
            item_id: task.item_id.clone(),
            kind: task.kind,
            informativeness: sub.informativeness as i32,
            elocution: sub.elocution as i32,
            interruption: sub.interruption as i32,
            length_rating: sub.length_rating as i32,
            typed_key: sub.typed_key.trim().to_string(),
            is_trap: task.is_trap,
            timestamp: (self.clock)(),
        };
        jsonl::append(&self.store_path, &judgment)?;

        st.pending.remove(&sub.task_id);
        st.answered.insert(sub.task_id.clone());
        if !task.is_trap {
            let key = (task.item_id.clone(), task.kind);
            release(&mut st.reserved, &key);
            *st.accepted.entry(key).or_default() += 1;
        }
        let seq = st.next_seq;
        st.next_seq += 1;
        Ok(Receipt {
            seq,
            task_id: sub.task_id.clone(),
        })
    }

    /// Accepted judgment count for one (item, kind).
    pub fn accepted(&self, item_id: &str, kind: ModificationKind) -> usize {
        let st = self.state.lock().expect("collector state");
        st.accepted.get(&(item_id.to_string(), kind)).copied().unwrap_or(0)
    }
}

fn release(map: &mut HashMap<UnitKey, usize>, key: &UnitKey) {
    if let Some(n) = map.get_mut(key) {
        *n = n.saturating_sub(1);
    }
}

/// Per-worker trap outcomes behind a reliability decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerQuality {
    pub worker_id: String,
    pub gold_traps: usize,
    pub gold_correctness_mean: Option<f64>,
    pub off_topic_traps: usize,
    pub off_topic_failures: usize,
    pub reliable: bool,
}

/// Trap outcomes for every worker in `judgments`.
pub fn worker_quality(
    judgments: &[Judgment],
    traps: &[TrapItem],
    opts: CorrectnessOptions,
) -> BTreeMap<String, WorkerQuality> {
    let by_id: HashMap<&str, &TrapItem> = traps.iter().map(|t| (t.trap_id.as_str(), t)).collect();
    let mut gold: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut off: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    let mut workers: BTreeSet<&str> = BTreeSet::new();
    for j in judgments {
        workers.insert(&j.worker_id);
        if !j.is_trap {
            continue;
        }
        let Some(trap) = by_id.get(j.item_id.as_str()) else {
            continue;
        };
        match (trap.trap_type, &trap.gold_key) {
            (TrapType::GoldKey, Some(key)) => gold
                .entry(&j.worker_id)
                .or_default()
                .push(correctness_with(&j.typed_key, key, opts).value()),
            (TrapType::OffTopic, _) => {
                let e = off.entry(&j.worker_id).or_default();
                e.0 += 1;
                if j.informativeness != 0 {
                    e.1 += 1;
                }
            }
            _ => {}
        }
    }
    workers
        .into_iter()
        .map(|w| {
            let scores = gold.get(w);
            let mean = scores.map(|s| s.iter().sum::<f64>() / s.len() as f64);
            let (off_n, off_fail) = off.get(w).copied().unwrap_or((0, 0));
            let reliable = mean.is_none_or(|m| m >= GOLD_CORRECTNESS_THRESHOLD) && off_fail == 0;
            (
                w.to_string(),
                WorkerQuality {
                    worker_id: w.to_string(),
                    gold_traps: scores.map_or(0, Vec::len),
                    gold_correctness_mean: mean,
                    off_topic_traps: off_n,
                    off_topic_failures: off_fail,
                    reliable,
                },
            )
        })
        .collect()
}

/// Workers whose mean gold-trap correctness is at least 0.5 and who gave
/// informativeness 0 to every off-topic trap. Workers never shown a trap
/// count as reliable.
pub fn reliable_workers(judgments: &[Judgment], traps: &[TrapItem]) -> BTreeSet<String> {
    worker_quality(judgments, traps, CorrectnessOptions::default())
        .into_values()
        .filter(|q| q.reliable)
        .map(|q| q.worker_id)
        .collect()
}

/// Non-trap rows of reliable workers: the rows that feed the analysis.
pub fn analysis_rows(rows: &[ScoredJudgment], reliable: &BTreeSet<String>) -> Vec<ScoredJudgment> {
    rows.iter()
        .filter(|r| !r.judgment.is_trap && reliable.contains(&r.judgment.worker_id))
        .cloned()
        .collect()
}
