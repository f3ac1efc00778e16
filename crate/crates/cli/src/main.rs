//! `readrl`: train, evaluate, and probe window-based readability agents,
//! score texts with the traditional formulas, and generate the synthetic
//! benchmark corpus.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{OutputFormat, RunConfig};

/// Command failures split by exit code: usage and input problems exit 2,
/// runtime failures exit 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "readrl", version, about = "Reinforcement-learned text readability assessment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent and write checkpoint, log, and resolved config.
    Train(ConfigArgs),
    /// Evaluate a checkpoint over a corpus and report metrics.
    Evaluate(ConfigArgs),
    /// Assess a single text with a trained checkpoint.
    Assess(AssessArgs),
    /// Score a text with the traditional readability formulas.
    Baseline(BaselineArgs),
    /// Generate the synthetic benchmark corpus with its resource files.
    Synth(SynthArgs),
}

/// Shared run options. Values resolve as defaults, then `--config` file
/// entries, then these flags.
#[derive(Args)]
struct ConfigArgs {
    /// Line-based `key = value` configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Corpus: a CSV with header `label,text`, or a directory with one
    /// subdirectory of .txt files per level.
    #[arg(long, value_name = "PATH")]
    corpus: Option<String>,
    /// Word embedding table, one `token v1 v2 ...` line per token.
    #[arg(long, value_name = "PATH")]
    embeddings: Option<String>,
    /// N-gram frequency table, tab-separated `n-gram<TAB>count`.
    #[arg(long, value_name = "PATH")]
    ngrams: Option<String>,
    /// Easy-word list for Dale-Chall style statistics, one word per line.
    #[arg(long, value_name = "PATH")]
    wordlist: Option<String>,
    /// Checkpoint to load (evaluate/assess) or write (train).
    #[arg(long, value_name = "PATH")]
    checkpoint: Option<String>,
    /// Output directory for checkpoints, logs, and reports.
    #[arg(long, value_name = "DIR")]
    out: Option<String>,
    /// Training episode count.
    #[arg(long)]
    episodes: Option<usize>,
    /// Master seed; fixed seeds make runs bit-reproducible.
    #[arg(long)]
    seed: Option<u64>,
    /// Reward for every window move (at most 0).
    #[arg(long, allow_negative_numbers = true)]
    move_penalty: Option<f64>,
    /// Reward for a correct classification.
    #[arg(long, allow_negative_numbers = true)]
    correct_reward: Option<f64>,
    /// Reward for a wrong classification (also paid when a text stays
    /// undecided).
    #[arg(long, allow_negative_numbers = true)]
    incorrect_penalty: Option<f64>,
    /// Moves after which an episode is cut off as undecided.
    #[arg(long)]
    max_moves: Option<usize>,
    /// Exploration floor after annealing.
    #[arg(long)]
    epsilon_final: Option<f64>,
    /// Bootstrap mode for TD targets.
    #[arg(long, value_enum)]
    target_mode: Option<TargetModeArg>,
    /// How value and advantage streams combine into Q-values.
    #[arg(long, value_enum)]
    dueling_mode: Option<DuelingModeArg>,
    /// Report format.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Evaluation worker cap.
    #[arg(long)]
    jobs: Option<usize>,
    /// Print the fully resolved configuration and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct AssessArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Text to assess, given inline.
    #[arg(value_name = "TEXT", required_unless_present = "file", conflicts_with = "file")]
    text: Option<String>,
    /// Read the text from a UTF-8 file instead.
    #[arg(long, value_name = "PATH")]
    file: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    /// Text to score, given inline.
    #[arg(value_name = "TEXT", required_unless_present = "file", conflicts_with = "file")]
    text: Option<String>,
    /// Read the text from a UTF-8 file instead.
    #[arg(long, value_name = "PATH")]
    file: Option<PathBuf>,
    /// Formula to apply.
    #[arg(long, value_enum, required_unless_present = "all", conflicts_with = "all")]
    formula: Option<FormulaArg>,
    /// Apply all four formulas.
    #[arg(long)]
    all: bool,
    /// Easy-word list; words absent from it count as difficult.
    #[arg(long, value_name = "PATH")]
    wordlist: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,
}

#[derive(Args)]
struct SynthArgs {
    /// Directory for corpus.csv, embeddings.txt, and ngrams.tsv.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of readability levels.
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long, default_value_t = 200)]
    texts_per_class: usize,
    /// Shortest text, in tokens.
    #[arg(long, default_value_t = 15)]
    min_length: usize,
    /// Longest text, in tokens.
    #[arg(long, default_value_t = 60)]
    max_length: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetModeArg {
    Double,
    Vanilla,
}

#[derive(Clone, Copy, ValueEnum)]
enum DuelingModeArg {
    /// Advantages centered on their mean.
    Mean,
    /// Plain value + advantage sum.
    Sum,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum FormulaArg {
    FleschKincaid,
    GunningFog,
    DaleChall,
    FleschDayani,
}

impl ConfigArgs {
    /// Resolves defaults, config file, and flags into one `RunConfig`.
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            config.apply_file(path)?;
        }

        macro_rules! overlay {
            ($($field:ident),* $(,)?) => {
                $(if let Some(v) = &self.$field {
                    config.$field = v.clone();
                })*
            };
        }
        overlay!(
            corpus,
            embeddings,
            ngrams,
            wordlist,
            checkpoint,
            out,
            episodes,
            seed,
            move_penalty,
            correct_reward,
            incorrect_penalty,
            max_moves,
            epsilon_final,
            jobs,
        );
        if let Some(mode) = self.target_mode {
            config.target_mode = match mode {
                TargetModeArg::Double => readrl_core::agent::TargetMode::Double,
                TargetModeArg::Vanilla => readrl_core::agent::TargetMode::Vanilla,
            };
        }
        if let Some(mode) = self.dueling_mode {
            config.dueling_mode = match mode {
                DuelingModeArg::Mean => readrl_core::agent::DuelingMode::MeanCentered,
                DuelingModeArg::Sum => readrl_core::agent::DuelingMode::NaiveSum,
            };
        }
        if let Some(format) = self.format {
            config.format = match format {
                FormatArg::Table => OutputFormat::Table,
                FormatArg::Json => OutputFormat::Json,
            };
        }
        Ok(config)
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("readrl: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Train(args) => with_config(args, commands::train),
        Command::Evaluate(args) => with_config(args, commands::evaluate),
        Command::Assess(args) => with_config(&args.config, |config| {
            let text = read_input(args.text.as_deref(), args.file.as_deref())?;
            commands::assess(config, &text)
        }),
        Command::Baseline(args) => {
            let text = read_input(args.text.as_deref(), args.file.as_deref())?;
            commands::baseline(args, &text)
        }
        Command::Synth(args) => commands::synth(args),
    }
}

/// Resolves the configuration, honoring `--print-config` as a dump-and-exit.
fn with_config(
    args: &ConfigArgs,
    run: impl FnOnce(&RunConfig) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let config = args.resolve()?;
    if args.print_config {
        print!("{}", config.snapshot());
        return Ok(());
    }
    run(&config)
}

fn read_input(text: Option<&str>, file: Option<&std::path::Path>) -> Result<String, CliError> {
    match (text, file) {
        (Some(t), None) => Ok(t.to_string()),
        (None, Some(path)) => std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display()))),
        _ => unreachable!("clap enforces exactly one input source"),
    }
}
