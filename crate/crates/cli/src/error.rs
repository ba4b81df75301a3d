use keyprosody_core::collection::CollectionError;
use keyprosody_core::corpus::CorpusError;
use keyprosody_core::jsonl::JsonlError;
use keyprosody_core::prosody::ProsodyError;
use keyprosody_core::report::ReportError;
use keyprosody_core::synth::SynthError;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{0}")]
    Config(String),
    #[error("missing artifact {path}; run `{stage}` first")]
    MissingArtifact { path: String, stage: &'static str },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Prosody(#[from] ProsodyError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Collection(#[from] CollectionError),
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    /// Machine-readable category printed as `error[category]: ...`.
    pub fn category(&self) -> &'static str {
        match self {
            PipelineError::Config(_) | PipelineError::Prosody(_) => "config",
            PipelineError::MissingArtifact { .. } => "missing-artifact",
            PipelineError::Corpus(_) => "corpus",
            PipelineError::Synth(e) => e.category(),
            PipelineError::Collection(_) => "collection",
            PipelineError::Jsonl(_) | PipelineError::Io { .. } => "io",
            PipelineError::Report(_) => "report",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "config" => 2,
            "missing-artifact" => 3,
            "corpus" | "input" => 4,
            "transport" => 5,
            "io" => 6,
            _ => 1,
        }
    }
}
