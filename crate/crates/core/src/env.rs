//! The text as a partially observable environment.
//!
//! The agent sees a five-token window of feature vectors. Moving the window
//! costs a small penalty, committing to a level ends the episode with a
//! correctness reward, and a cap on moves forces undecided episodes to
//! terminate. Window positions move in whole-window strides, so consecutive
//! windows never overlap.

use std::sync::Arc;

use thiserror::Error;

use crate::featurize::TokenFeatureSequence;

/// Number of tokens visible at once.
pub const WINDOW_SIZE: usize = 5;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid reward configuration: {0}")]
    InvalidConfig(String),
    #[error("true level {level} outside 1..={classes}")]
    LevelOutOfRange { level: usize, classes: usize },
    #[error("episode has not been started")]
    NoEpisode,
    #[error("episode already finished")]
    EpisodeFinished,
    #[error("backward moves are disabled by the reward configuration")]
    BackwardDisabled,
    #[error("classification level {level} outside 1..={classes}")]
    BadClassification { level: usize, classes: usize },
    #[error("episode still in progress")]
    NotTerminal,
}

/// Reward shape and episode limits. `allow_backward` adds a second move
/// action; everything else follows the defaults used throughout.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardConfig {
    pub move_penalty: f64,
    pub correct_reward: f64,
    pub incorrect_penalty: f64,
    pub max_moves: usize,
    pub allow_backward: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            move_penalty: -0.05,
            correct_reward: 1.0,
            incorrect_penalty: -1.0,
            max_moves: 50,
            allow_backward: false,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if !self.move_penalty.is_finite()
            || !self.correct_reward.is_finite()
            || !self.incorrect_penalty.is_finite()
        {
            return Err(EnvError::InvalidConfig("rewards must be finite".to_string()));
        }
        if self.move_penalty > 0.0 {
            return Err(EnvError::InvalidConfig(
                "move_penalty must not be positive".to_string(),
            ));
        }
        if self.correct_reward <= self.incorrect_penalty {
            return Err(EnvError::InvalidConfig(
                "correct_reward must exceed incorrect_penalty".to_string(),
            ));
        }
        if self.max_moves == 0 {
            return Err(EnvError::InvalidConfig(
                "max_moves must be at least 1".to_string(),
            ));
        }
        Ok(())
    }

    /// Number of movement actions this configuration exposes.
    pub fn move_action_count(&self) -> usize {
        if self.allow_backward {
            2
        } else {
            1
        }
    }
}

/// What the agent can do. Classification levels are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    MoveForward,
    MoveBackward,
    Classify(usize),
}

/// Terminal status of an episode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    InProgress,
    Classified(usize),
    Undecided,
}

/// The agent's view: WINDOW_SIZE rows of features, zero-padded past the end
/// of the text, flattened row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    window: Vec<f64>,
    feature_dim: usize,
    window_start: usize,
}

impl Observation {
    /// Builds an observation directly, e.g. for synthetic fixtures. The
    /// window must hold exactly WINDOW_SIZE rows of `feature_dim` values.
    pub fn new(window: Vec<f64>, feature_dim: usize, window_start: usize) -> Self {
        assert_eq!(
            window.len(),
            WINDOW_SIZE * feature_dim,
            "window must be WINDOW_SIZE x feature_dim"
        );
        Observation {
            window,
            feature_dim,
            window_start,
        }
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn window_start(&self) -> usize {
        self.window_start
    }

    /// Feature row for one of the WINDOW_SIZE window slots.
    pub fn row(&self, slot: usize) -> &[f64] {
        &self.window[slot * self.feature_dim..(slot + 1) * self.feature_dim]
    }
}

/// Recurrent activations carried across steps of one episode and stored in
/// transitions so minibatch updates can resume the recurrence mid-episode.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrentState {
    pub hidden: Vec<f64>,
    pub cell: Vec<f64>,
}

impl RecurrentState {
    pub fn zeros(size: usize) -> Self {
        RecurrentState {
            hidden: vec![0.0; size],
            cell: vec![0.0; size],
        }
    }
}

/// One step of experience, as stored in the replay buffer.
///
/// `recurrent_state` is the LSTM state the agent held when it saw `state`;
/// `next_recurrent_state` is the state after that step, which bootstrapping
/// needs when it evaluates `next_state`.
#[derive(Clone, Debug)]
pub struct Transition {
    pub state: Observation,
    pub action: Action,
    pub reward: f64,
    pub next_state: Observation,
    pub terminal: bool,
    pub recurrent_state: RecurrentState,
    pub next_recurrent_state: RecurrentState,
}

/// Result of one environment step.
#[derive(Clone, Debug)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub terminal: bool,
}

struct EpisodeState {
    features: Arc<TokenFeatureSequence>,
    true_level: usize,
    window_start: usize,
    moves_taken: usize,
    outcome: Outcome,
}

/// Episode driver for one text at a time. `reset` begins an episode and
/// `step` advances it until a terminal action or the move cap.
pub struct TextEnvironment {
    num_classes: usize,
    config: RewardConfig,
    episode: Option<EpisodeState>,
}

impl TextEnvironment {
    pub fn new(num_classes: usize, config: RewardConfig) -> Result<Self, EnvError> {
        if num_classes < 2 {
            return Err(EnvError::InvalidConfig(
                "need at least two readability classes".to_string(),
            ));
        }
        config.validate()?;
        Ok(TextEnvironment {
            num_classes,
            config,
            episode: None,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn config(&self) -> &RewardConfig {
        &self.config
    }

    /// Starts an episode over a featurized text with a known level and
    /// returns the initial observation (window at the start of the text).
    pub fn reset(
        &mut self,
        features: Arc<TokenFeatureSequence>,
        true_level: usize,
    ) -> Result<Observation, EnvError> {
        if features.is_empty() {
            return Err(EnvError::InvalidConfig(
                "cannot run an episode over an empty text".to_string(),
            ));
        }
        if true_level < 1 || true_level > self.num_classes {
            return Err(EnvError::LevelOutOfRange {
                level: true_level,
                classes: self.num_classes,
            });
        }
        self.episode = Some(EpisodeState {
            features,
            true_level,
            window_start: 0,
            moves_taken: 0,
            outcome: Outcome::InProgress,
        });
        Ok(self.observation().expect("episode just created"))
    }

    /// Applies an action. Moves shift the window by a whole stride (a no-op
    /// at the text edges, though the penalty still applies); classification
    /// ends the episode. The `max_moves`-th move terminates the episode as
    /// Undecided with the incorrect penalty as that step's reward.
    pub fn step(&mut self, action: Action) -> Result<StepResult, EnvError> {
        let num_classes = self.num_classes;
        let config = self.config;
        let episode = self.episode.as_mut().ok_or(EnvError::NoEpisode)?;
        if episode.outcome != Outcome::InProgress {
            return Err(EnvError::EpisodeFinished);
        }

        let reward;
        match action {
            Action::MoveForward | Action::MoveBackward => {
                if action == Action::MoveBackward && !config.allow_backward {
                    return Err(EnvError::BackwardDisabled);
                }
                episode.moves_taken += 1;
                match action {
                    Action::MoveForward => {
                        // Stay put once the window reaches the end of the
                        // text; the move still counts and still costs.
                        if episode.window_start + WINDOW_SIZE < episode.features.len() {
                            episode.window_start += WINDOW_SIZE;
                        }
                    }
                    Action::MoveBackward => {
                        episode.window_start =
                            episode.window_start.saturating_sub(WINDOW_SIZE);
                    }
                    Action::Classify(_) => unreachable!(),
                }
                if episode.moves_taken >= config.max_moves {
                    episode.outcome = Outcome::Undecided;
                    reward = config.incorrect_penalty;
                } else {
                    reward = config.move_penalty;
                }
            }
            Action::Classify(level) => {
                if level < 1 || level > num_classes {
                    return Err(EnvError::BadClassification {
                        level,
                        classes: num_classes,
                    });
                }
                episode.outcome = Outcome::Classified(level);
                reward = if level == episode.true_level {
                    config.correct_reward
                } else {
                    config.incorrect_penalty
                };
            }
        }

        let terminal = episode.outcome != Outcome::InProgress;
        Ok(StepResult {
            observation: self.observation().expect("episode is active"),
            reward,
            terminal,
        })
    }

    /// Current window, zero-padded past the end of the text.
    pub fn observation(&self) -> Option<Observation> {
        let episode = self.episode.as_ref()?;
        let dim = episode.features.feature_dim();
        let mut window = vec![0.0; WINDOW_SIZE * dim];
        for slot in 0..WINDOW_SIZE {
            let token = episode.window_start + slot;
            if token < episode.features.len() {
                window[slot * dim..(slot + 1) * dim]
                    .copy_from_slice(episode.features.feature(token));
            }
        }
        Some(Observation {
            window,
            feature_dim: dim,
            window_start: episode.window_start,
        })
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.episode.as_ref().map(|e| e.outcome)
    }

    pub fn moves_taken(&self) -> Option<usize> {
        self.episode.as_ref().map(|e| e.moves_taken)
    }

    pub fn window_start(&self) -> Option<usize> {
        self.episode.as_ref().map(|e| e.window_start)
    }

    pub fn true_level(&self) -> Option<usize> {
        self.episode.as_ref().map(|e| e.true_level)
    }

    pub fn is_terminal(&self) -> bool {
        matches!(
            self.episode.as_ref().map(|e| e.outcome),
            Some(Outcome::Classified(_)) | Some(Outcome::Undecided)
        )
    }

    /// Fraction of the text the final window position had revealed:
    /// min(window_start + WINDOW_SIZE, len) / len. Only meaningful once the
    /// episode is over.
    pub fn text_seen_fraction(&self) -> Result<f64, EnvError> {
        let episode = self.episode.as_ref().ok_or(EnvError::NoEpisode)?;
        if episode.outcome == Outcome::InProgress {
            return Err(EnvError::NotTerminal);
        }
        let len = episode.features.len();
        let seen = (episode.window_start + WINDOW_SIZE).min(len);
        Ok(seen as f64 / len as f64)
    }
}
