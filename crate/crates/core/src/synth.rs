//! Audio synthesis behind a content-addressed on-disk cache.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use base64::Engine as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::jsonl::write_if_changed;
use crate::prosody::{EngineProfile, ModificationKind, SsmlDocument};

pub const DEFAULT_CONCURRENCY: usize = 4;
pub const DEFAULT_RETRIES: u32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("configuration: no client registered for profile {0:?}")]
    UnknownProfile(String),
    #[error("configuration: credential environment variable {var} is not set")]
    MissingCredential { var: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error("malformed SSML for {item_id}: {reason}")]
    MalformedSsml { item_id: String, reason: String },
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("engine rejected request with status {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("invalid engine response: {0}")]
    InvalidResponse(String),
    #[error("audio store {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl SynthError {
    /// Short category used on the command line.
    pub fn category(&self) -> &'static str {
        match self {
            SynthError::UnknownProfile(_) | SynthError::MissingCredential { .. } | SynthError::Config(_) => "config",
            SynthError::MalformedSsml { .. } => "input",
            SynthError::Transport { .. } | SynthError::Rejected { .. } | SynthError::InvalidResponse(_) => "transport",
            SynthError::Io { .. } => "io",
        }
    }
}

/// Audio for one SSML document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AudioAsset {
    pub asset_id: String,
    pub item_id: String,
    pub kind: ModificationKind,
    pub profile_name: String,
    pub media_type: String,
    #[serde(skip)]
    pub bytes: Vec<u8>,
    #[serde(default)]
    pub duration_ms: Option<u64>,
}

impl AudioAsset {
    pub fn extension(&self) -> &'static str {
        extension_for(&self.media_type)
    }
}

pub fn extension_for(media_type: &str) -> &'static str {
    match media_type {
        "audio/mpeg" | "audio/mp3" => "mp3",
        _ => "wav",
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthRequest {
    pub ssml: SsmlDocument,
    pub profile: EngineProfile,
}

/// Digest of markup, engine and voice: the asset id.
pub fn cache_key(ssml: &SsmlDocument, profile: &EngineProfile) -> String {
    key_for(&ssml.markup, profile)
}

fn key_for(markup: &str, profile: &EngineProfile) -> String {
    let mut h = Sha256::new();
    h.update(markup.as_bytes());
    h.update([0x1f]);
    h.update(profile.engine_name.as_bytes());
    h.update([0x1f]);
    h.update(profile.voice_name.as_bytes());
    hex::encode(h.finalize())
}

/// Raw audio returned by an engine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientAudio {
    pub bytes: Vec<u8>,
    pub media_type: String,
    pub duration_ms: Option<u64>,
}

pub trait TtsClient: Send + Sync {
    fn synthesize(&self, markup: &str, profile: &EngineProfile) -> Result<ClientAudio, SynthError>;
}

pub const MOCK_SAMPLE_RATE: u32 = 8000;
const MOCK_TONES: usize = 6;
const MOCK_TONE_MS: u32 = 80;

/// Offline engine: a short square-wave tone sequence keyed by the asset id.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockEngine;

impl TtsClient for MockEngine {
    fn synthesize(&self, markup: &str, profile: &EngineProfile) -> Result<ClientAudio, SynthError> {
        Ok(ClientAudio {
            bytes: mock_wav(&key_for(markup, profile)),
            media_type: "audio/wav".into(),
            duration_ms: Some((MOCK_TONES as u64) * MOCK_TONE_MS as u64),
        })
    }
}

/// 16-bit mono PCM WAV whose tone frequencies come from the id's leading bytes.
pub fn mock_wav(asset_id: &str) -> Vec<u8> {
    let seed: Vec<u8> = hex::decode(asset_id).unwrap_or_else(|_| Sha256::digest(asset_id.as_bytes()).to_vec());
    let per_tone = (MOCK_SAMPLE_RATE * MOCK_TONE_MS / 1000) as usize;
    let mut samples: Vec<i16> = Vec::with_capacity(per_tone * MOCK_TONES);
    for t in 0..MOCK_TONES {
        let b = seed.get(t).copied().unwrap_or(0) as u32;
        let freq = 220 + b * 4;
        let half = (MOCK_SAMPLE_RATE / (2 * freq)).max(1) as usize;
        for s in 0..per_tone {
            samples.push(if (s / half).is_multiple_of(2) { 6000 } else { -6000 });
        }
    }
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&MOCK_SAMPLE_RATE.to_le_bytes());
    out.extend_from_slice(&(MOCK_SAMPLE_RATE * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HttpFlavor {
    /// JSON body, base64 `audioContent` in the response, API key header.
    Google,
    /// JSON body, binary audio response, basic auth with user `apikey`.
    Watson,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpTtsConfig {
    pub flavor: HttpFlavor,
    pub url: String,
    /// Name of the environment variable holding the API key.
    pub credential_env: String,
    /// Engine-side voice identifier; derived from the profile when absent.
    #[serde(default)]
    pub voice_id: Option<String>,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff")]
    pub backoff_base_ms: u64,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
}

fn default_retries() -> u32 {
    DEFAULT_RETRIES
}
fn default_backoff() -> u64 {
    250
}
fn default_timeout() -> u64 {
    30_000
}

type CredentialLookup = Box<dyn Fn(&str) -> Option<String> + Send + Sync>;

pub struct HttpTtsClient {
    cfg: HttpTtsConfig,
    http: reqwest::blocking::Client,
    lookup: CredentialLookup,
}

enum Attempt {
    Retry(String),
    Fatal(SynthError),
}

impl HttpTtsClient {
    pub fn new(cfg: HttpTtsConfig) -> Result<Self, SynthError> {
        Self::with_credentials(cfg, Box::new(|var| std::env::var(var).ok()))
    }

    /// Like `new` with a custom credential source instead of the environment.
    pub fn with_credentials(cfg: HttpTtsConfig, lookup: CredentialLookup) -> Result<Self, SynthError> {
        if cfg.url.trim().is_empty() {
            return Err(SynthError::Config("remote engine url is empty".into()));
        }
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(cfg.timeout_ms))
            .build()
            .map_err(|e| SynthError::Config(e.to_string()))?;
        Ok(HttpTtsClient { cfg, http, lookup })
    }

    fn voice(&self, profile: &EngineProfile) -> String {
        self.cfg.voice_id.clone().unwrap_or_else(|| match self.cfg.flavor {
            HttpFlavor::Google => format!("en-US-{}", profile.voice_name),
            HttpFlavor::Watson => format!("en-US_{}V3Voice", profile.voice_name),
        })
    }

    fn attempt(&self, markup: &str, voice: &str, key: &str) -> Result<ClientAudio, Attempt> {
        let req = match self.cfg.flavor {
            HttpFlavor::Google => {
                self.http
                    .post(&self.cfg.url)
                    .header("x-goog-api-key", key)
                    .json(&serde_json::json!({
                        "input": {"ssml": markup},
                        "voice": {"languageCode": "en-US", "name": voice},
                        "audioConfig": {"audioEncoding": "MP3"},
                    }))
            }
            HttpFlavor::Watson => self
                .http
                .post(&self.cfg.url)
                .query(&[("voice", voice)])
                .basic_auth("apikey", Some(key))
                .header("Accept", "audio/wav")
                .json(&serde_json::json!({"text": markup})),
        };
        let resp = req.send().map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(Attempt::Retry(format!("status {status}")));
        }
        if !status.is_success() {
            let body = resp.text().unwrap_or_default();
            return Err(Attempt::Fatal(SynthError::Rejected {
                status: status.as_u16(),
                body,
            }));
        }
        match self.cfg.flavor {
            HttpFlavor::Google => {
                let v: serde_json::Value = resp.json().map_err(|e| Attempt::Retry(e.to_string()))?;
                let content = v["audioContent"]
                    .as_str()
                    .ok_or_else(|| Attempt::Fatal(SynthError::InvalidResponse("missing audioContent".into())))?;
                let bytes = base64::engine::general_purpose::STANDARD
                    .decode(content)
                    .map_err(|e| Attempt::Fatal(SynthError::InvalidResponse(e.to_string())))?;
                Ok(ClientAudio {
                    bytes,
                    media_type: "audio/mpeg".into(),
                    duration_ms: None,
                })
            }
            HttpFlavor::Watson => {
                let media_type = resp
                    .headers()
                    .get(reqwest::header::CONTENT_TYPE)
                    .and_then(|v| v.to_str().ok())
                    .map(|v| v.split(';').next().unwrap_or(v).trim().to_string())
                    .filter(|m| m.starts_with("audio/"))
                    .unwrap_or_else(|| "audio/wav".into());
                let bytes = resp.bytes().map_err(|e| Attempt::Retry(e.to_string()))?.to_vec();
                Ok(ClientAudio {
                    bytes,
                    media_type,
                    duration_ms: None,
                })
            }
        }
    }
}

impl TtsClient for HttpTtsClient {
    fn synthesize(&self, markup: &str, profile: &EngineProfile) -> Result<ClientAudio, SynthError> {
        let key = (self.lookup)(&self.cfg.credential_env).ok_or_else(|| SynthError::MissingCredential {
            var: self.cfg.credential_env.clone(),
        })?;
        let voice = self.voice(profile);
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.attempt(markup, &voice, &key) {
                Ok(audio) if audio.bytes.is_empty() => {
                    return Err(SynthError::InvalidResponse("empty audio payload".into()))
                }
                Ok(audio) => return Ok(audio),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(message)) => {
                    if attempts > self.cfg.max_retries {
                        return Err(SynthError::Transport { attempts, message });
                    }
                    log::warn!("tts attempt {attempts} failed ({message}); retrying");
                    let wait = self.cfg.backoff_base_ms.saturating_mul(1 << (attempts - 1).min(16));
                    std::thread::sleep(Duration::from_millis(wait));
                }
            }
        }
    }
}

/// `audio/{asset_id}.{ext}` plus `audio/{asset_id}.json` metadata. The
/// sidecar is written last, so its presence marks a complete asset.
#[derive(Debug, Clone)]
pub struct AudioStore {
    root: PathBuf,
}

impl AudioStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        AudioStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn sidecar(&self, asset_id: &str) -> PathBuf {
        self.root.join(format!("{asset_id}.json"))
    }

    pub fn audio_path(&self, asset_id: &str, media_type: &str) -> PathBuf {
        self.root.join(format!("{asset_id}.{}", extension_for(media_type)))
    }

    /// Metadata only; `bytes` is left empty.
    pub fn meta(&self, asset_id: &str) -> Result<Option<AudioAsset>, SynthError> {
        if !is_asset_id(asset_id) {
            return Ok(None);
        }
        let path = self.sidecar(asset_id);
        match fs::read(&path) {
            Ok(raw) => serde_json::from_slice(&raw).map(Some).map_err(|e| SynthError::Io {
                path,
                source: io::Error::new(io::ErrorKind::InvalidData, e),
            }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(source) => Err(SynthError::Io { path, source }),
        }
    }

    pub fn load(&self, asset_id: &str) -> Result<Option<AudioAsset>, SynthError> {
        let Some(mut asset) = self.meta(asset_id)? else {
            return Ok(None);
        };
        let path = self.audio_path(asset_id, &asset.media_type);
        asset.bytes = fs::read(&path).map_err(|source| SynthError::Io { path, source })?;
        Ok(Some(asset))
    }

    pub fn save(&self, asset: &AudioAsset) -> Result<(), SynthError> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| SynthError::Io { path, source }
        };
        fs::create_dir_all(&self.root).map_err(io_err(&self.root))?;
        let audio = self.audio_path(&asset.asset_id, &asset.media_type);
        write_if_changed(&audio, &asset.bytes).map_err(io_err(&audio))?;
        let side = self.sidecar(&asset.asset_id);
        let mut meta = serde_json::to_vec_pretty(asset).expect("asset metadata serializes");
        meta.push(b'\n');
        write_if_changed(&side, &meta).map_err(io_err(&side))?;
        Ok(())
    }

    /// Number of complete assets on disk.
    pub fn count(&self) -> usize {
        fs::read_dir(&self.root)
            .map(|d| {
                d.filter_map(Result::ok)
                    .filter(|e| e.path().extension().is_some_and(|x| x == "json"))
                    .count()
            })
            .unwrap_or(0)
    }
}

fn is_asset_id(s: &str) -> bool {
    s.len() == 64 && s.bytes().all(|b| b.is_ascii_hexdigit())
}

/// Cached synthesis over a registry of clients keyed by profile name.
pub struct Synthesizer {
    store: AudioStore,
    clients: HashMap<String, Arc<dyn TtsClient>>,
    admission: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    calls: AtomicUsize,
    concurrency: usize,
}

impl Synthesizer {
    pub fn new(store: AudioStore) -> Self {
        Synthesizer {
            store,
            clients: HashMap::new(),
            admission: Mutex::new(HashMap::new()),
            calls: AtomicUsize::new(0),
            concurrency: DEFAULT_CONCURRENCY,
        }
    }

    pub fn with_concurrency(mut self, n: usize) -> Self {
        self.concurrency = n.max(1);
        self
    }

    pub fn register(&mut self, profile_name: &str, client: Arc<dyn TtsClient>) {
        self.clients.insert(profile_name.to_string(), client);
    }

    pub fn store(&self) -> &AudioStore {
        &self.store
    }

    /// Engine calls made so far (cache hits excluded).
    pub fn client_calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn synthesize(&self, req: &SynthRequest) -> Result<AudioAsset, SynthError> {
        let client = self
            .clients
            .get(&req.profile.name)
            .ok_or_else(|| SynthError::UnknownProfile(req.profile.name.clone()))?;
        check_markup(&req.ssml)?;
        let asset_id = cache_key(&req.ssml, &req.profile);

        let gate = {
            let mut map = self.admission.lock().expect("admission map");
            map.entry(asset_id.clone()).or_default().clone()
        };
        let _held = gate.lock().expect("admission gate");

        if let Some(mut cached) = self.store.load(&asset_id)? {
            cached.item_id = req.ssml.item_id.clone();
            cached.kind = req.ssml.kind;
            cached.profile_name = req.profile.name.clone();
            return Ok(cached);
        }
        self.calls.fetch_add(1, Ordering::SeqCst);
        let audio = client.synthesize(&req.ssml.markup, &req.profile)?;
        if audio.bytes.is_empty() {
            return Err(SynthError::InvalidResponse("empty audio payload".into()));
        }
        let asset = AudioAsset {
            asset_id,
            item_id: req.ssml.item_id.clone(),
            kind: req.ssml.kind,
            profile_name: req.profile.name.clone(),
            media_type: audio.media_type,
            bytes: audio.bytes,
            duration_ms: audio.duration_ms,
        };
        self.store.save(&asset)?;
        Ok(asset)
    }

    /// Synthesizes every request with at most `concurrency` calls in flight.
    /// Results keep request order.
    pub fn synthesize_all(&self, reqs: &[SynthRequest]) -> Vec<Result<AudioAsset, SynthError>> {
        let pool = match rayon::ThreadPoolBuilder::new().num_threads(self.concurrency).build() {
            Ok(p) => p,
            Err(e) => return reqs.iter().map(|_| Err(SynthError::Config(e.to_string()))).collect(),
        };
        pool.install(|| reqs.par_iter().map(|r| self.synthesize(r)).collect())
    }
}

fn check_markup(doc: &SsmlDocument) -> Result<(), SynthError> {
    let m = doc.markup.trim();
    let reason = if !m.starts_with("<speak>") || !m.ends_with("</speak>") {
        Some("document must be a single <speak> element")
    } else if m.matches('<').count() != m.matches('>').count() {
        Some("unbalanced angle brackets")
    } else {
        None
    };
    match reason {
        Some(r) => Err(SynthError::MalformedSsml {
            item_id: doc.item_id.clone(),
            reason: r.into(),
        }),
        None => Ok(()),
    }
}
