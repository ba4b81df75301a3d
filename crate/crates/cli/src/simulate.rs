//! Simulated raters for desk runs. They talk to the collector in process,
//! exactly as the HTTP handlers do, so the store is filled through the real
//! assignment and validation paths.
//!
//! Reliable workers report each item's latent ratings. The latent values
//! depend only on the item id and seed, so every reliable rating of an audio
//! agrees and the only baseline/modified difference is the configured boost.

use std::collections::HashMap;
use std::sync::atomic::{AtomicI64, Ordering};

use chrono::{DateTime, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use keyprosody_core::collection::{Clock, Collector, JudgmentSubmission, NextTask, Task, TrapItem, TrapType};
use keyprosody_core::corpus::QaItem;
use keyprosody_core::prosody::ModificationKind;

use crate::config::SimulationConfig;

/// Latent ratings of one item.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Latent {
    pub informativeness: i64,
    pub elocution: i64,
    pub interruption: i64,
    pub length_rating: i64,
}

pub fn latent(item_id: &str, seed: u64) -> Latent {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(item_id.as_bytes());
    let d = h.finalize();
    Latent {
        informativeness: 1 + (d[0] % 3) as i64,
        elocution: (d[1] % 3) as i64,
        interruption: (d[2] % 2) as i64,
        length_rating: (d[3] % 3) as i64 - 1,
    }
}

/// Clock that advances one second per reading from a fixed origin, so
/// simulated stores are byte-identical across runs.
pub fn synthetic_clock() -> Clock {
    let origin = DateTime::<Utc>::from_timestamp(1_700_000_000, 0).expect("valid origin");
    let tick = AtomicI64::new(0);
    Box::new(move || origin + chrono::Duration::seconds(tick.fetch_add(1, Ordering::Relaxed)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimulationSummary {
    pub submitted: usize,
    pub trap_tasks: usize,
}

/// Answer keys and trap kinds the simulated workers know about.
pub struct Answers<'a> {
    keys: HashMap<&'a str, &'a str>,
    traps: HashMap<&'a str, &'a TrapItem>,
}

impl<'a> Answers<'a> {
    pub fn new(items: &'a [QaItem], traps: &'a [TrapItem]) -> Self {
        Answers {
            keys: items
                .iter()
                .map(|i| (i.item_id.as_str(), i.answer_key.as_str()))
                .collect(),
            traps: traps.iter().map(|t| (t.trap_id.as_str(), t)).collect(),
        }
    }
}

fn honest(task: &Task, answers: &Answers, sim: &SimulationConfig, seed: u64) -> JudgmentSubmission {
    let mut sub = JudgmentSubmission {
        task_id: task.task_id.clone(),
        worker_id: task.worker_id.clone(),
        informativeness: 0,
        elocution: 1,
        interruption: 0,
        length_rating: 0,
        typed_key: "unknown".into(),
    };
    if task.is_trap {
        if let Some(t) = answers.traps.get(task.item_id.as_str()) {
            if let (TrapType::GoldKey, Some(k)) = (t.trap_type, &t.gold_key) {
                sub.informativeness = 2;
                sub.typed_key = k.clone();
            }
        }
        return sub;
    }
    let l = latent(&task.item_id, seed);
    let boost = if sim.boosted_kind == Some(task.kind) && task.kind != ModificationKind::Baseline {
        sim.boost as i64
    } else {
        0
    };
    sub.informativeness = (l.informativeness + boost).clamp(0, 4);
    sub.elocution = l.elocution;
    sub.interruption = l.interruption;
    sub.length_rating = l.length_rating;
    if let Some(k) = answers.keys.get(task.item_id.as_str()) {
        sub.typed_key = (*k).to_string();
    }
    sub
}

fn spam(task: &Task, rng: &mut ChaCha8Rng) -> JudgmentSubmission {
    JudgmentSubmission {
        task_id: task.task_id.clone(),
        worker_id: task.worker_id.clone(),
        // never 0, so off-topic traps always catch it
        informativeness: rng.random_range(1..=4),
        elocution: rng.random_range(0..=2),
        interruption: rng.random_range(0..=1),
        length_rating: rng.random_range(-1..=1),
        typed_key: "xq".into(),
    }
}

pub fn worker_ids(sim: &SimulationConfig) -> Vec<(String, bool)> {
    let mut ids: Vec<(String, bool)> = (0..sim.workers)
        .map(|i| (format!("sim-worker-{i:02}"), false))
        .collect();
    ids.extend((0..sim.spammers).map(|i| (format!("sim-spammer-{i:02}"), true)));
    ids
}

/// Workers take turns asking for tasks until none has work left.
pub fn run(
    collector: &Collector,
    answers: &Answers,
    sim: &SimulationConfig,
    seed: u64,
) -> Result<SimulationSummary, keyprosody_core::collection::CollectionError> {
    let workers = worker_ids(sim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5350_414d);
    let mut summary = SimulationSummary::default();
    let mut active = vec![true; workers.len()];
    while active.iter().any(|a| *a) {
        for (i, (id, spammer)) in workers.iter().enumerate() {
            if !active[i] {
                continue;
            }
            let task = match collector.next_task(id) {
                NextTask::Assigned(t) => t,
                NextTask::NoWork => {
                    active[i] = false;
                    continue;
                }
            };
            let sub = if *spammer {
                spam(&task, &mut rng)
            } else {
                honest(&task, answers, sim, seed)
            };
            collector.submit(&sub)?;
            summary.submitted += 1;
            summary.trap_tasks += task.is_trap as usize;
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latent_values_stay_in_range() {
        for i in 0..500 {
            let l = latent(&format!("item{i}"), 7);
            assert!((1..=3).contains(&l.informativeness));
            assert!((0..=2).contains(&l.elocution));
            assert!((0..=1).contains(&l.interruption));
            assert!((-1..=1).contains(&l.length_rating));
        }
        assert_eq!(latent("a", 1), latent("a", 1));
    }

    #[test]
    fn clock_ticks_deterministically() {
        let a = synthetic_clock();
        let b = synthetic_clock();
        assert_eq!(a(), b());
        assert_eq!(a() - b(), chrono::Duration::zero());
        let t0 = a();
        assert_eq!(a() - t0, chrono::Duration::seconds(1));
    }
}
