use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use keyprosody_core::collection::{CollectionConfig, Collector, Judgment, RatingUnit, TrapItem, TrapType};
use keyprosody_core::jsonl;
use keyprosody_core::prosody::{EngineProfile, ModificationKind, SsmlDocument};
use keyprosody_core::synth::{AudioStore, MockEngine, SynthRequest, Synthesizer};
use keyprosody_service::{router, AppState};

struct Fixture {
    _dir: tempfile::TempDir,
    store: std::path::PathBuf,
    app: axum::Router,
    asset_id: String,
}

fn fixture(n_units: usize, trap_ratio: f64) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let audio = AudioStore::new(dir.path().join("audio"));
    let mut synth = Synthesizer::new(audio.clone());
    synth.register("google-wavenet-f", Arc::new(MockEngine));
    let asset = synth
        .synthesize(&SynthRequest {
            ssml: SsmlDocument {
                markup: "<speak>Jimi Hendrix</speak>".into(),
                item_id: "q0".into(),
                kind: ModificationKind::Baseline,
                profile_name: "google-wavenet-f".into(),
            },
            profile: EngineProfile::google_wavenet_f(),
        })
        .unwrap();
    let units = (0..n_units)
        .map(|i| RatingUnit {
            item_id: format!("q{i}"),
            kind: ModificationKind::Baseline,
            question: format!("Question {i}?"),
            audio_asset_id: asset.asset_id.clone(),
        })
        .collect();
    let traps = vec![TrapItem {
        trap_id: "trap1".into(),
        question: "Off topic?".into(),
        audio_asset_id: asset.asset_id.clone(),
        trap_type: TrapType::OffTopic,
        gold_key: None,
    }];
    let store = dir.path().join("judgments.jsonl");
    let cfg = CollectionConfig {
        trap_ratio,
        seed: 3,
        ..CollectionConfig::default()
    };
    let clock = Box::new(|| chrono::DateTime::from_timestamp(1_600_000_000, 0).unwrap());
    let collector = Collector::open(&store, units, traps, cfg, clock).unwrap();
    let app = router(AppState {
        collector: Arc::new(collector),
        audio,
    });
    Fixture {
        _dir: dir,
        store,
        app,
        asset_id: asset.asset_id,
    }
}

async fn call(app: &axum::Router, req: Request<Body>) -> (StatusCode, Option<String>, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let ctype = resp
        .headers()
        .get("content-type")
        .map(|v| v.to_str().unwrap().to_string());
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, ctype, body)
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn post(body: Value) -> Request<Body> {
    Request::post("/api/judgment")
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap()
}

fn answer(task_id: &str, worker: &str) -> Value {
    json!({
        "task_id": task_id,
        "worker_id": worker,
        "informativeness": 3,
        "elocution": 2,
        "interruption": 0,
        "length_rating": -1,
        "typed_key": "jimmy hendrix",
    })
}

async fn take(f: &Fixture, worker: &str) -> Value {
    let (status, _, body) = call(&f.app, get(&format!("/api/task?worker_id={worker}"))).await;
    assert_eq!(status, StatusCode::OK);
    serde_json::from_slice(&body).unwrap()
}

#[tokio::test]
async fn task_payload_hides_trap_flag() {
    let f = fixture(3, 0.0);
    let task = take(&f, "w1").await;
    let keys: Vec<&String> = task.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["audio_url", "question", "task_id"]);
    assert_eq!(task["audio_url"], format!("/api/audio/{}", f.asset_id));
}

#[tokio::test]
async fn audio_has_media_type() {
    let f = fixture(1, 0.0);
    let (status, ctype, body) = call(&f.app, get(&format!("/api/audio/{}", f.asset_id))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ctype.as_deref(), Some("audio/wav"));
    assert_eq!(&body[..4], b"RIFF");
    let (status, _, _) = call(&f.app, get(&format!("/api/audio/{}", "0".repeat(64)))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _, _) = call(&f.app, get("/api/audio/..%2F..%2Fetc%2Fpasswd")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn judgment_is_stored_with_exact_schema() {
    let f = fixture(2, 0.0);
    let task = take(&f, "w1").await;
    let id = task["task_id"].as_str().unwrap();
    let (status, _, body) = call(&f.app, post(answer(id, "w1"))).await;
    assert_eq!(status, StatusCode::CREATED);
    let receipt: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(receipt["seq"], 1);
    assert_eq!(receipt["task_id"], id);

    let raw = std::fs::read_to_string(&f.store).unwrap();
    let line: Value = serde_json::from_str(raw.lines().next().unwrap()).unwrap();
    let mut keys: Vec<&String> = line.as_object().unwrap().keys().collect();
    keys.sort();
    assert_eq!(
        keys,
        [
            "elocution",
            "informativeness",
            "interruption",
            "is_trap",
            "item_id",
            "kind",
            "length_rating",
            "timestamp",
            "typed_key",
            "worker_id"
        ]
    );
    let stored: Vec<Judgment> = jsonl::read_all(Path::new(&f.store)).unwrap();
    assert_eq!(stored[0].length_rating, -1);
    assert_eq!(stored[0].kind, ModificationKind::Baseline);
    assert!(!stored[0].is_trap);
}

#[tokio::test]
async fn duplicate_submission_is_rejected_once_stored() {
    let f = fixture(2, 0.0);
    let task = take(&f, "w1").await;
    let id = task["task_id"].as_str().unwrap().to_string();
    assert_eq!(call(&f.app, post(answer(&id, "w1"))).await.0, StatusCode::CREATED);
    assert_eq!(call(&f.app, post(answer(&id, "w1"))).await.0, StatusCode::CONFLICT);
    let stored: Vec<Judgment> = jsonl::read_all(&f.store).unwrap();
    assert_eq!(stored.len(), 1);
}

#[tokio::test]
async fn invalid_fields_are_listed() {
    let f = fixture(2, 0.0);
    let task = take(&f, "w1").await;
    let id = task["task_id"].as_str().unwrap();
    let mut body = answer(id, "w1");
    body["informativeness"] = json!(7);
    body["length_rating"] = json!(2);
    let (status, _, resp) = call(&f.app, post(body)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let v: Value = serde_json::from_slice(&resp).unwrap();
    let fields: Vec<&str> = v["fields"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["field"].as_str().unwrap())
        .collect();
    assert_eq!(fields, ["informativeness", "length_rating"]);

    let (status, _, resp) = call(&f.app, post(json!({"task_id": id, "elocution": "two"}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let v: Value = serde_json::from_slice(&resp).unwrap();
    assert_eq!(v["fields"].as_array().unwrap().len(), 6);
    assert!(!f.store.exists());

    // the task is still open after a rejected attempt
    assert_eq!(call(&f.app, post(answer(id, "w1"))).await.0, StatusCode::CREATED);
}

#[tokio::test]
async fn unknown_and_foreign_tasks() {
    let f = fixture(2, 0.0);
    assert_eq!(call(&f.app, post(answer("nope", "w1"))).await.0, StatusCode::NOT_FOUND);
    let task = take(&f, "w1").await;
    let id = task["task_id"].as_str().unwrap();
    assert_eq!(call(&f.app, post(answer(id, "w2"))).await.0, StatusCode::FORBIDDEN);
}

#[tokio::test]
async fn no_work_is_204_and_missing_worker_is_400() {
    let f = fixture(1, 0.0);
    let task = take(&f, "w1").await;
    call(&f.app, post(answer(task["task_id"].as_str().unwrap(), "w1"))).await;
    assert_eq!(
        call(&f.app, get("/api/task?worker_id=w1")).await.0,
        StatusCode::NO_CONTENT
    );
    assert_eq!(call(&f.app, get("/api/task")).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(
        call(&f.app, get("/api/task?worker_id=")).await.0,
        StatusCode::BAD_REQUEST
    );
}

#[tokio::test]
async fn trap_judgments_are_flagged_in_the_store() {
    let f = fixture(3, 1.0);
    let task = take(&f, "w1").await;
    assert_eq!(task["question"], "Off topic?");
    let mut body = answer(task["task_id"].as_str().unwrap(), "w1");
    body["informativeness"] = json!(0);
    assert_eq!(call(&f.app, post(body)).await.0, StatusCode::CREATED);
    let stored: Vec<Judgment> = jsonl::read_all(&f.store).unwrap();
    assert!(stored[0].is_trap);
    assert_eq!(stored[0].item_id, "trap1");
}

#[tokio::test]
async fn concurrent_workers_never_exceed_target() {
    let f = fixture(4, 0.0);
    let mut handles = Vec::new();
    for w in 0..12 {
        let app = f.app.clone();
        handles.push(tokio::spawn(async move {
            let worker = format!("w{w}");
            loop {
                let (status, _, body) = call(&app, get(&format!("/api/task?worker_id={worker}"))).await;
                if status == StatusCode::NO_CONTENT {
                    break;
                }
                let task: Value = serde_json::from_slice(&body).unwrap();
                let (s, _, _) = call(&app, post(answer(task["task_id"].as_str().unwrap(), &worker))).await;
                assert_eq!(s, StatusCode::CREATED);
            }
        }));
    }
    for h in handles {
        h.await.unwrap();
    }
    let stored: Vec<Judgment> = jsonl::read_all(&f.store).unwrap();
    assert_eq!(stored.len(), 12);
    for i in 0..4 {
        let per: Vec<&Judgment> = stored.iter().filter(|j| j.item_id == format!("q{i}")).collect();
        assert_eq!(per.len(), 3);
        let workers: std::collections::HashSet<&str> = per.iter().map(|j| j.worker_id.as_str()).collect();
        assert_eq!(workers.len(), 3);
    }
}
