use std::path::PathBuf;
use std::process::ExitCode;

use assocgeom::error::{Error, Result};
use assocgeom::settings::Settings;
use assocgeom::stages::{self, Context, DemoOptions, EmbeddingTarget, Overrides};
use assocgeom_core::config::CenteringMode;
use assocgeom_core::hidden::Strategy;
use assocgeom_core::trials::Paradigm;
use assocgeom_core::vocab::Vocabulary;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "assocgeom", version, about = "Behavioral vs hidden-state semantic geometry of language models")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, default_value = "config.toml")]
    config: PathBuf,
    /// Directory for every stage's outputs.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Replace the configured master seed.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    #[arg(long, global = true, value_enum)]
    centering: Option<Centering>,
    /// Participant spec for every model, e.g. `simulated:tau=0.1`.
    #[arg(long, global = true)]
    participant: Option<String>,
    /// Continue an interrupted collection instead of starting over.
    #[arg(long, global = true)]
    resume: bool,
    /// Rerun stages the manifest reports as up to date.
    #[arg(long, global = true)]
    force: bool,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Centering {
    Centered,
    Raw,
}

#[derive(Clone, Copy, ValueEnum)]
enum ParadigmArg {
    Fc,
    Fa,
}

#[derive(Subcommand)]
enum Command {
    /// Write the FC and FA trial manifests.
    Generate,
    /// Run the trials against each model's participant.
    Collect,
    /// Tally collected records into cue-response counts.
    Aggregate,
    /// Behavioral similarity matrices (PPMI, counts, SVD).
    Geometry,
    /// Cross-model consensus references.
    Consensus,
    /// Layerwise RSA and nearest-neighbor overlap.
    Evaluate,
    /// Held-out-words ridge regression.
    Regress,
    /// Compliance table and JSON summary.
    Report,
    /// Every stage in order.
    Pipeline,
    /// Import `cue,response[,count]` rows as a model's counts.
    IngestDataset {
        #[arg(long)]
        model: String,
        #[arg(long, value_enum)]
        paradigm: ParadigmArg,
        #[arg(long)]
        input: PathBuf,
    },
    /// Convert a word-vector text file to a layer or reference file.
    IngestEmbeddings {
        #[arg(long)]
        input: PathBuf,
        /// Store as a static reference with this name instead of a layer.
        #[arg(long, conflicts_with_all = ["model", "strategy", "layer"])]
        reference: Option<String>,
        #[arg(long, required_unless_present = "reference")]
        model: Option<String>,
        #[arg(long, required_unless_present = "reference")]
        strategy: Option<String>,
        #[arg(long, required_unless_present = "reference")]
        layer: Option<u32>,
    },
    /// Write a synthetic demo project with a simulated participant.
    Synthetic {
        /// Project directory to create.
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 200)]
        words: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.2)]
        tau: f64,
        #[arg(long, default_value_t = 20)]
        fa_runs: usize,
    },
}

fn context(cli: &Cli) -> Result<Context> {
    let settings = Settings::load(&cli.config)?;
    let overrides = Overrides {
        seed: cli.seed_override,
        centering: cli.centering.map(|c| match c {
            Centering::Centered => CenteringMode::Centered,
            Centering::Raw => CenteringMode::Raw,
        }),
        participant: cli.participant.clone(),
        resume: cli.resume,
        force: cli.force,
    };
    Context::new(settings, &cli.out_dir, overrides)
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::Config("--workers must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Config(e.to_string()))?;
    }
    match &cli.command {
        Command::Generate => stages::generate(&context(cli)?).map(drop),
        Command::Collect => stages::collect(&context(cli)?),
        Command::Aggregate => stages::aggregate(&context(cli)?),
        Command::Geometry => stages::geometry(&context(cli)?),
        Command::Consensus => stages::consensus(&context(cli)?),
        Command::Evaluate => stages::evaluate(&context(cli)?),
        Command::Regress => stages::regress(&context(cli)?),
        Command::Report => stages::summarize(&context(cli)?),
        Command::Pipeline => stages::pipeline(&context(cli)?),
        Command::IngestDataset { model, paradigm, input } => {
            let p = match paradigm {
                ParadigmArg::Fc => Paradigm::ForcedChoice,
                ParadigmArg::Fa => Paradigm::FreeAssociation,
            };
            let path = stages::ingest_dataset(&context(cli)?, model, p, input)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::IngestEmbeddings { input, reference, model, strategy, layer } => {
            let settings = Settings::load(&cli.config)?;
            let vocab = Vocabulary::parse(&assocgeom::fsutil::read_to_string(&settings.vocab_path())?)?;
            let target = match reference {
                Some(name) => EmbeddingTarget::Reference(name.clone()),
                None => {
                    let s = strategy.as_deref().unwrap_or_default();
                    EmbeddingTarget::Layer {
                        model: model.clone().unwrap_or_default(),
                        strategy: Strategy::parse(s)
                            .ok_or_else(|| Error::Config(format!("unknown extraction strategy {s:?}")))?,
                        layer: layer.unwrap_or_default(),
                    }
                }
            };
            let path = stages::ingest_embeddings(&settings, &vocab, &target, input)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Synthetic { dir, words, seed, tau, fa_runs } => {
            let opts = DemoOptions { n_words: *words, seed: *seed, tau: *tau, fa_runs: *fa_runs };
            let path = stages::write_demo(dir, &opts)?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
