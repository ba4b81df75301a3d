use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use keyprosody::config::RunConfig;
use keyprosody::error::PipelineError;
use keyprosody::pipeline;
use keyprosody_core::report::Format;

#[derive(Parser)]
#[command(name = "keyprosody", version, about = "Prosody modification study pipeline")]
struct Cli {
    /// Run configuration file.
    #[arg(long, global = true, default_value = "keyprosody.json")]
    config: PathBuf,
    /// Restrict to one engine profile by name.
    #[arg(long, global = true)]
    engine: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Md)]
    format: FormatArg,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Md,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Load the SQuAD file into items.
    Ingest,
    /// Partition items into modification groups and pick traps.
    Plan,
    /// Render SSML for every planned audio.
    Ssml,
    /// Synthesize audio, reusing cached assets.
    Synth,
    /// Serve rating tasks over HTTP.
    Serve,
    /// Fill the judgment store with simulated raters.
    Simulate,
    /// Add correctness to stored judgments.
    Score,
    /// Filter workers, aggregate scores and compute agreement.
    Analyze,
    /// Write delta tables.
    Report,
    /// Every stage, with simulated raters.
    All,
}

fn run(cli: Cli) -> Result<String, PipelineError> {
    let mut cfg = if cli.config.exists() {
        RunConfig::load(&cli.config)?
    } else {
        return Err(PipelineError::Config(format!(
            "config file {} not found",
            cli.config.display()
        )));
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.output_dir = out;
    }
    cfg.validate()?;
    let profiles = cfg.selected_profiles(cli.engine.as_deref())?;
    let format = match cli.format {
        FormatArg::Md => Format::Markdown,
        FormatArg::Csv => Format::Csv,
    };
    match cli.command {
        Command::Ingest => pipeline::ingest(&cfg),
        Command::Plan => pipeline::plan(&cfg),
        Command::Ssml => pipeline::ssml(&cfg, &profiles),
        Command::Synth => pipeline::synth(&cfg, &profiles),
        Command::Serve => {
            let [profile] = profiles.as_slice() else {
                return Err(PipelineError::Config(
                    "serve handles one profile at a time; pass --engine".into(),
                ));
            };
            log::info!("serving {} on {}", profile.name, cfg.bind);
            pipeline::serve(&cfg, profile).map(|_| "serve: stopped".into())
        }
        Command::Simulate => pipeline::simulate(&cfg, &profiles),
        Command::Score => pipeline::score(&cfg, &profiles),
        Command::Analyze => pipeline::analyze(&cfg, &profiles),
        Command::Report => pipeline::report(&cfg, &profiles, format),
        Command::All => pipeline::all(&cfg, &profiles, format),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
