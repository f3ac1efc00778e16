//! The Q-learning agent: network, replay buffer, exploration schedule, and
//! the training loop.
//!
//! Action indexing is shared by everything here: indices 0..K-1 classify as
//! levels 1..K, index K moves the window forward, and index K+1 (present
//! only when backward movement is enabled) moves it backward.

mod network;
mod replay;
mod schedule;
mod train;

pub use network::{QNetwork, QOutput, LSTM_UNITS, OBSERVATION_WIDTH};
pub use replay::ReplayBuffer;
pub use schedule::EpsilonSchedule;
pub use train::{
    batch_targets, compute_target, td_backward_frozen, td_loss, td_loss_frozen, td_update,
    train, EpisodeRecord, PreparedCorpus, TrainError, TrainOutput,
};

use rand::Rng;
use thiserror::Error;

use crate::env::{Action, EnvError};
use crate::numeric::{CheckpointError, NumericError};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("network architecture problem: {0}")]
    Architecture(String),
    #[error("non-finite activations in {layer}")]
    NonFinite { layer: String },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparameters(String),
    #[error("checkpoint does not describe this network: {0}")]
    CheckpointMismatch(String),
}

/// How the value and advantage streams combine into Q-values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DuelingMode {
    /// Q = V + (A - mean A). The identifiable form; default.
    MeanCentered,
    /// Q = V + A, the literal sum of the two streams.
    NaiveSum,
}

/// Bootstrap scheme for TD targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetMode {
    /// The online network picks the bootstrap action, the target network
    /// scores it; default.
    Double,
    /// Plain max over the target network's Q-values.
    Vanilla,
}

/// Training knobs. Defaults mirror the reference configuration; episode
/// counts are routinely scaled down for desk-sized runs.
#[derive(Clone, Debug)]
pub struct Hyperparameters {
    pub learning_rate: f64,
    pub discount: f64,
    pub training_episodes: usize,
    pub testing_episodes: usize,
    pub target_sync_period: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub epsilon_initial: f64,
    pub epsilon_final: f64,
    /// Episodes over which epsilon anneals; defaults to half the training
    /// episodes when unset.
    pub anneal_span: Option<usize>,
    pub dueling_mode: DuelingMode,
    pub target_mode: TargetMode,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            learning_rate: 0.0001,
            discount: 0.99,
            training_episodes: 300_000,
            testing_episodes: 3000,
            target_sync_period: 5,
            batch_size: 32,
            buffer_capacity: 1000,
            epsilon_initial: 1.0,
            epsilon_final: 0.1,
            anneal_span: None,
            dueling_mode: DuelingMode::MeanCentered,
            target_mode: TargetMode::Double,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<(), AgentError> {
        let fail = |m: &str| Err(AgentError::InvalidHyperparameters(m.to_string()));
        if !(self.learning_rate > 0.0) {
            return fail("learning_rate must be positive");
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return fail("discount must be in (0, 1]");
        }
        if self.training_episodes == 0 {
            return fail("training_episodes must be at least 1");
        }
        if self.target_sync_period == 0 {
            return fail("target_sync_period must be at least 1");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1");
        }
        if self.buffer_capacity < self.batch_size {
            return fail("buffer_capacity must be at least batch_size");
        }
        if !(0.0..=1.0).contains(&self.epsilon_initial)
            || !(0.0..=1.0).contains(&self.epsilon_final)
            || self.epsilon_final > self.epsilon_initial
        {
            return fail("epsilon must anneal downward within [0, 1]");
        }
        if self.anneal_span == Some(0) {
            return fail("anneal_span must be at least 1");
        }
        Ok(())
    }

    /// The effective anneal span: explicit, or half the training episodes.
    pub fn effective_anneal_span(&self) -> usize {
        self.anneal_span
            .unwrap_or_else(|| (self.training_episodes / 2).max(1))
    }
}

/// Total number of actions for K classes and M move actions.
pub fn action_count(num_classes: usize, move_actions: usize) -> usize {
    num_classes + move_actions
}

pub fn action_to_index(action: Action, num_classes: usize) -> usize {
    match action {
        Action::Classify(level) => {
            debug_assert!(level >= 1 && level <= num_classes);
            level - 1
        }
        Action::MoveForward => num_classes,
        Action::MoveBackward => num_classes + 1,
    }
}

pub fn index_to_action(index: usize, num_classes: usize) -> Action {
    if index < num_classes {
        Action::Classify(index + 1)
    } else if index == num_classes {
        Action::MoveForward
    } else {
        Action::MoveBackward
    }
}

/// Argmax with ties broken toward the lowest index.
pub fn greedy_index(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy selection over raw Q-values, returning an action index.
pub fn select_action_index(q: &[f64], epsilon: f64, rng: &mut impl Rng) -> usize {
    debug_assert!((0.0..=1.0).contains(&epsilon));
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        rng.random_range(0..q.len())
    } else {
        greedy_index(q)
    }
}

/// Epsilon-greedy selection mapped onto the action space for `num_classes`
/// classes; the number of move actions is implied by the Q-vector length.
pub fn select_action(
    q: &[f64],
    epsilon: f64,
    num_classes: usize,
    rng: &mut impl Rng,
) -> Action {
    index_to_action(select_action_index(q, epsilon, rng), num_classes)
}
