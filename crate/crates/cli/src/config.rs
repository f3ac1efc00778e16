//! Run configuration: defaults, `key = value` file parsing, flag overrides,
//! and the resolved snapshot that reproduces a run when fed back in.

use std::fmt;
use std::path::Path;

use readrl_core::agent::{DuelingMode, Hyperparameters, TargetMode};
use readrl_core::env::RewardConfig;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Table,
    Json,
}

/// Everything a command needs, fully resolved. Precedence: built-in
/// defaults, then the config file, then command-line flags. Path fields use
/// the empty string for "not set".
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub corpus: String,
    pub embeddings: String,
    pub ngrams: String,
    pub wordlist: String,
    pub checkpoint: String,
    pub out: String,
    pub seed: u64,
    pub episodes: usize,
    pub testing_episodes: usize,
    pub learning_rate: f64,
    pub discount: f64,
    pub target_sync_period: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub epsilon_initial: f64,
    pub epsilon_final: f64,
    pub anneal_span: Option<usize>,
    pub target_mode: TargetMode,
    pub dueling_mode: DuelingMode,
    pub move_penalty: f64,
    pub correct_reward: f64,
    pub incorrect_penalty: f64,
    pub max_moves: usize,
    pub allow_backward: bool,
    pub format: OutputFormat,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let hyper = Hyperparameters::default();
        let reward = RewardConfig::default();
        RunConfig {
            corpus: String::new(),
            embeddings: String::new(),
            ngrams: String::new(),
            wordlist: String::new(),
            checkpoint: String::new(),
            out: "readrl-out".to_string(),
            seed: 0,
            episodes: hyper.training_episodes,
            testing_episodes: hyper.testing_episodes,
            learning_rate: hyper.learning_rate,
            discount: hyper.discount,
            target_sync_period: hyper.target_sync_period,
            batch_size: hyper.batch_size,
            buffer_capacity: hyper.buffer_capacity,
            epsilon_initial: hyper.epsilon_initial,
            epsilon_final: hyper.epsilon_final,
            anneal_span: hyper.anneal_span,
            target_mode: hyper.target_mode,
            dueling_mode: hyper.dueling_mode,
            move_penalty: reward.move_penalty,
            correct_reward: reward.correct_reward,
            incorrect_penalty: reward.incorrect_penalty,
            max_moves: reward.max_moves,
            allow_backward: reward.allow_backward,
            format: OutputFormat::Table,
            jobs: 1,
        }
    }
}

impl RunConfig {
    /// Applies a config file. Lines are `key = value`; blank lines and
    /// `#` comments are skipped; unknown keys are rejected by name.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let content = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config file {}: {e}", path.display()))
        })?;
        for (lineno, raw) in content.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    lineno + 1
                ))
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| {
                CliError::Usage(format!("{}:{}: {e}", path.display(), lineno + 1))
            })?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String>
        where
            T::Err: fmt::Display,
        {
            value
                .parse()
                .map_err(|e| format!("bad value `{value}` for {key}: {e}"))
        }

        match key {
            "corpus" => self.corpus = value.to_string(),
            "embeddings" => self.embeddings = value.to_string(),
            "ngrams" => self.ngrams = value.to_string(),
            "wordlist" => self.wordlist = value.to_string(),
            "checkpoint" => self.checkpoint = value.to_string(),
            "out" => self.out = value.to_string(),
            "seed" => self.seed = parse(key, value)?,
            "episodes" => self.episodes = parse(key, value)?,
            "testing_episodes" => self.testing_episodes = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "discount" => self.discount = parse(key, value)?,
            "target_sync_period" => self.target_sync_period = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "buffer_capacity" => self.buffer_capacity = parse(key, value)?,
            "epsilon_initial" => self.epsilon_initial = parse(key, value)?,
            "epsilon_final" => self.epsilon_final = parse(key, value)?,
            "anneal_span" => {
                self.anneal_span = if value == "auto" {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "target_mode" => {
                self.target_mode = match value {
                    "double" => TargetMode::Double,
                    "vanilla" => TargetMode::Vanilla,
                    _ => return Err(format!("target_mode must be double or vanilla, got `{value}`")),
                }
            }
            "dueling_mode" => {
                self.dueling_mode = match value {
                    "mean" => DuelingMode::MeanCentered,
                    "sum" => DuelingMode::NaiveSum,
                    _ => return Err(format!("dueling_mode must be mean or sum, got `{value}`")),
                }
            }
            "move_penalty" => self.move_penalty = parse(key, value)?,
            "correct_reward" => self.correct_reward = parse(key, value)?,
            "incorrect_penalty" => self.incorrect_penalty = parse(key, value)?,
            "max_moves" => self.max_moves = parse(key, value)?,
            "allow_backward" => self.allow_backward = parse(key, value)?,
            "format" => {
                self.format = match value {
                    "table" => OutputFormat::Table,
                    "json" => OutputFormat::Json,
                    _ => return Err(format!("format must be table or json, got `{value}`")),
                }
            }
            "jobs" => self.jobs = parse(key, value)?,
            _ => return Err(format!("unknown configuration key `{key}`")),
        }
        Ok(())
    }

    /// The snapshot written by `--print-config` and into output
    /// directories. Feeding it back via `--config` resolves to the same
    /// configuration.
    pub fn snapshot(&self) -> String {
        let anneal = match self.anneal_span {
            Some(n) => n.to_string(),
            None => "auto".to_string(),
        };
        format!(
            "corpus = {}\n\
             embeddings = {}\n\
             ngrams = {}\n\
             wordlist = {}\n\
             checkpoint = {}\n\
             out = {}\n\
             seed = {}\n\
             episodes = {}\n\
             testing_episodes = {}\n\
             learning_rate = {}\n\
             discount = {}\n\
             target_sync_period = {}\n\
             batch_size = {}\n\
             buffer_capacity = {}\n\
             epsilon_initial = {}\n\
             epsilon_final = {}\n\
             anneal_span = {anneal}\n\
             target_mode = {}\n\
             dueling_mode = {}\n\
             move_penalty = {}\n\
             correct_reward = {}\n\
             incorrect_penalty = {}\n\
             max_moves = {}\n\
             allow_backward = {}\n\
             format = {}\n\
             jobs = {}\n",
            self.corpus,
            self.embeddings,
            self.ngrams,
            self.wordlist,
            self.checkpoint,
            self.out,
            self.seed,
            self.episodes,
            self.testing_episodes,
            self.learning_rate,
            self.discount,
            self.target_sync_period,
            self.batch_size,
            self.buffer_capacity,
            self.epsilon_initial,
            self.epsilon_final,
            match self.target_mode {
                TargetMode::Double => "double",
                TargetMode::Vanilla => "vanilla",
            },
            match self.dueling_mode {
                DuelingMode::MeanCentered => "mean",
                DuelingMode::NaiveSum => "sum",
            },
            self.move_penalty,
            self.correct_reward,
            self.incorrect_penalty,
            self.max_moves,
            self.allow_backward,
            match self.format {
                OutputFormat::Table => "table",
                OutputFormat::Json => "json",
            },
            self.jobs,
        )
    }

    pub fn hyperparameters(&self) -> Hyperparameters {
        Hyperparameters {
            learning_rate: self.learning_rate,
            discount: self.discount,
            training_episodes: self.episodes,
            testing_episodes: self.testing_episodes,
            target_sync_period: self.target_sync_period,
            batch_size: self.batch_size,
            buffer_capacity: self.buffer_capacity,
            epsilon_initial: self.epsilon_initial,
            epsilon_final: self.epsilon_final,
            anneal_span: self.anneal_span,
            dueling_mode: self.dueling_mode,
            target_mode: self.target_mode,
        }
    }

    pub fn reward(&self) -> RewardConfig {
        RewardConfig {
            move_penalty: self.move_penalty,
            correct_reward: self.correct_reward,
            incorrect_penalty: self.incorrect_penalty,
            max_moves: self.max_moves,
            allow_backward: self.allow_backward,
        }
    }
}
