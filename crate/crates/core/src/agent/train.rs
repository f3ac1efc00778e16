//! TD targets, the replay loss, and the episode loop.
//!
//! Training is stored-state: each transition carries the recurrent vectors
//! observed during the rollout, and a batched update runs exactly one
//! recurrent step from those vectors rather than replaying sequences.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use thiserror::Error;

use super::network::batch_windows;
use super::{
    action_to_index, greedy_index, index_to_action, select_action_index, AgentError,
    Hyperparameters, QNetwork, ReplayBuffer, TargetMode, LSTM_UNITS,
};
use crate::env::{EnvError, Outcome, RecurrentState, RewardConfig, TextEnvironment, Transition};
use crate::featurize::TokenFeatureSequence;
use crate::numeric::{adam_step, Tensor};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("corpus unsuitable for training: {0}")]
    Corpus(String),
    /// Training diverged. Carries the network and the log so far, so the
    /// caller can still write diagnostics and a last checkpoint.
    #[error("training diverged at episode {episode}: {detail}")]
    NonFiniteLoss {
        episode: usize,
        detail: String,
        network: Box<QNetwork>,
        log: Vec<EpisodeRecord>,
    },
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Featurized texts with verified labels, ready to sample episodes from.
#[derive(Clone, Debug)]
pub struct PreparedCorpus {
    by_class: Vec<Vec<Arc<TokenFeatureSequence>>>,
}

impl PreparedCorpus {
    /// Wraps featurized texts, checking every level is in 1..=num_classes
    /// and that no class is empty (the agent could never learn it).
    pub fn new(
        num_classes: usize,
        texts: Vec<(Arc<TokenFeatureSequence>, usize)>,
    ) -> Result<Self, TrainError> {
        if num_classes < 2 {
            return Err(TrainError::Corpus(
                "need at least two readability classes".to_string(),
            ));
        }
        let mut by_class = vec![Vec::new(); num_classes];
        for (i, (features, level)) in texts.into_iter().enumerate() {
            if level < 1 || level > num_classes {
                return Err(TrainError::Corpus(format!(
                    "text {i} has level {level}, outside 1..={num_classes}"
                )));
            }
            if features.is_empty() {
                return Err(TrainError::Corpus(format!("text {i} is empty")));
            }
            by_class[level - 1].push(features);
        }
        if let Some(missing) = by_class.iter().position(|c| c.is_empty()) {
            return Err(TrainError::Corpus(format!(
                "no texts with level {}",
                missing + 1
            )));
        }
        Ok(PreparedCorpus { by_class })
    }

    pub fn num_classes(&self) -> usize {
        self.by_class.len()
    }

    pub fn len(&self) -> usize {
        self.by_class.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn class_counts(&self) -> Vec<usize> {
        self.by_class.iter().map(Vec::len).collect()
    }

    /// Samples a text for one episode: a uniform class, then a uniform
    /// text within it. Class-uniform sampling keeps imbalanced corpora
    /// from skewing training toward their largest class.
    pub fn sample(&self, rng: &mut impl Rng) -> (Arc<TokenFeatureSequence>, usize) {
        let class = rng.random_range(0..self.by_class.len());
        let texts = &self.by_class[class];
        (
            Arc::clone(&texts[rng.random_range(0..texts.len())]),
            class + 1,
        )
    }
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub true_level: usize,
    pub total_reward: f64,
    /// Mean replay loss over this episode's updates; 0.0 while the buffer
    /// is still warming up.
    pub mean_loss: f64,
    pub epsilon: f64,
    pub moves: usize,
    pub outcome: String,
    pub predicted: Option<usize>,
}

pub struct TrainOutput {
    pub network: QNetwork,
    pub log: Vec<EpisodeRecord>,
}

/// TD target for one transition: the reward alone when terminal, otherwise
/// the reward plus the discounted bootstrap. Vanilla mode bootstraps with
/// max_a Q_target(s', a); double mode scores the online network's argmax
/// with the target network. The stored post-step recurrent state feeds the
/// s' evaluation.
pub fn compute_target(
    transition: &Transition,
    main: &QNetwork,
    target: &QNetwork,
    discount: f64,
    mode: TargetMode,
) -> Result<f64, AgentError> {
    if transition.terminal {
        return Ok(transition.reward);
    }
    let (q_target, _) =
        target.forward_observation(&transition.next_state, &transition.next_recurrent_state)?;
    let bootstrap = match mode {
        TargetMode::Vanilla => q_target[greedy_index(&q_target)],
        TargetMode::Double => {
            let (q_main, _) = main
                .forward_observation(&transition.next_state, &transition.next_recurrent_state)?;
            q_target[greedy_index(&q_main)]
        }
    };
    Ok(transition.reward + discount * bootstrap)
}

/// TD targets for a whole batch, evaluating the non-terminal successor
/// states in one batched forward pass per network.
pub fn batch_targets(
    transitions: &[&Transition],
    main: &QNetwork,
    target: &QNetwork,
    discount: f64,
    mode: TargetMode,
) -> Result<Vec<f64>, AgentError> {
    let mut targets: Vec<f64> = transitions.iter().map(|t| t.reward).collect();
    let open: Vec<usize> = (0..transitions.len())
        .filter(|&i| !transitions[i].terminal)
        .collect();
    if open.is_empty() {
        return Ok(targets);
    }

    let windows = batch_windows(open.iter().map(|&i| &transitions[i].next_state))?;
    let (hidden, cell) = recurrent_batch(open.iter().map(|&i| &transitions[i].next_recurrent_state))?;
    let q_target = target.forward(&windows, &hidden, &cell)?.q;
    let actions = q_target.shape()[1];
    let rows = q_target.data();

    let chosen: Vec<usize> = match mode {
        TargetMode::Vanilla => (0..open.len())
            .map(|r| greedy_index(&rows[r * actions..(r + 1) * actions]))
            .collect(),
        TargetMode::Double => {
            let q_main = main.forward(&windows, &hidden, &cell)?.q;
            let main_rows = q_main.data();
            (0..open.len())
                .map(|r| greedy_index(&main_rows[r * actions..(r + 1) * actions]))
                .collect()
        }
    };
    for (r, &i) in open.iter().enumerate() {
        targets[i] = transitions[i].reward + discount * rows[r * actions + chosen[r]];
    }
    Ok(targets)
}

/// Mean squared TD error of a batch. Targets are recomputed here and act
/// as constants; only Q_main(s, a) would carry gradients.
pub fn td_loss(
    transitions: &[&Transition],
    main: &QNetwork,
    target: &QNetwork,
    discount: f64,
    mode: TargetMode,
) -> Result<f64, AgentError> {
    let targets = batch_targets(transitions, main, target, discount, mode)?;
    td_loss_frozen(main, transitions, &targets)
}

/// Mean squared error against precomputed targets. Split out so a gradient
/// check can nudge parameters while the objective stays fixed.
pub fn td_loss_frozen(
    main: &QNetwork,
    transitions: &[&Transition],
    targets: &[f64],
) -> Result<f64, AgentError> {
    let q = forward_stored(main, transitions)?.q;
    Ok(loss_from_q(&q, main.num_classes(), transitions, targets))
}

/// Computes the frozen-target loss and accumulates its gradient into every
/// parameter. Gradients are zeroed first; the mean loss is returned.
pub fn td_backward_frozen(
    main: &mut QNetwork,
    transitions: &[&Transition],
    targets: &[f64],
) -> Result<f64, AgentError> {
    main.zero_grad();
    let windows = batch_windows(transitions.iter().map(|t| &t.state))?;
    let (hidden, cell) = recurrent_batch(transitions.iter().map(|t| &t.recurrent_state))?;
    let (out, cache) = main.forward_cached(&windows, &hidden, &cell)?;

    let batch = transitions.len();
    let actions = out.q.shape()[1];
    let num_classes = main.num_classes();
    let mut grad_q = Tensor::zeros(&[batch, actions]);
    let mut loss_sum = 0.0;
    for (i, transition) in transitions.iter().enumerate() {
        let a = action_to_index(transition.action, num_classes);
        let diff = out.q.data()[i * actions + a] - targets[i];
        loss_sum += diff * diff;
        grad_q.data_mut()[i * actions + a] = 2.0 * diff / batch as f64;
    }
    main.backward(&cache, &grad_q)?;
    Ok(loss_sum / batch as f64)
}

/// One replay update: batched targets, backward pass, Adam step.
pub fn td_update(
    main: &mut QNetwork,
    target: &QNetwork,
    transitions: &[&Transition],
    discount: f64,
    mode: TargetMode,
    learning_rate: f64,
) -> Result<f64, AgentError> {
    let targets = batch_targets(transitions, main, target, discount, mode)?;
    let loss = td_backward_frozen(main, transitions, &targets)?;
    adam_step(
        main.named_params_mut().into_iter().map(|(_, p)| p),
        learning_rate,
    );
    Ok(loss)
}

/// Runs the full training loop and returns the trained network with its
/// per-episode log.
///
/// Each episode resets the environment on a uniformly sampled text with a
/// fresh zero recurrent state and rolls out epsilon-greedily; every step
/// pushes its transition and, once the buffer holds a batch, applies one
/// replay update. The target network resyncs every `target_sync_period`
/// episodes. All randomness derives from `seed` through fixed-order
/// substreams, so equal seeds give bit-identical runs.
pub fn train(
    corpus: &PreparedCorpus,
    hyper: &Hyperparameters,
    reward: RewardConfig,
    seed: u64,
) -> Result<TrainOutput, TrainError> {
    hyper.validate()?;
    let mut master = ChaCha12Rng::seed_from_u64(seed);
    // Substream order is part of the determinism contract; do not reorder.
    let mut init_rng = ChaCha12Rng::seed_from_u64(master.random());
    let mut sampling_rng = ChaCha12Rng::seed_from_u64(master.random());
    let mut action_rng = ChaCha12Rng::seed_from_u64(master.random());
    let mut replay_rng = ChaCha12Rng::seed_from_u64(master.random());

    let num_classes = corpus.num_classes();
    let mut main = QNetwork::new(
        num_classes,
        reward.move_action_count(),
        hyper.dueling_mode,
        &mut init_rng,
    )?;
    let mut target = main.clone();
    let mut env = TextEnvironment::new(num_classes, reward)?;
    let schedule = super::EpsilonSchedule::new(
        hyper.epsilon_initial,
        hyper.epsilon_final,
        hyper.effective_anneal_span(),
    )?;
    let mut buffer = ReplayBuffer::new(hyper.buffer_capacity);
    let mut log: Vec<EpisodeRecord> = Vec::with_capacity(hyper.training_episodes);

    log::info!(
        "training {} episodes on {} texts ({} classes, {} actions)",
        hyper.training_episodes,
        corpus.len(),
        num_classes,
        main.num_actions()
    );

    for episode in 0..hyper.training_episodes {
        let epsilon = schedule.value(episode);
        let (features, true_level) = corpus.sample(&mut sampling_rng);
        let mut obs = env.reset(features, true_level)?;
        let mut state = RecurrentState::zeros(LSTM_UNITS);
        let mut total_reward = 0.0;
        let mut loss_sum = 0.0;
        let mut updates = 0usize;

        loop {
            let (q, next_state) = main.forward_observation(&obs, &state)?;
            let action_index = select_action_index(&q, epsilon, &mut action_rng);
            let action = index_to_action(action_index, num_classes);
            let step = env.step(action)?;
            total_reward += step.reward;
            buffer.push(Transition {
                state: obs,
                action,
                reward: step.reward,
                next_state: step.observation.clone(),
                terminal: step.terminal,
                recurrent_state: state,
                next_recurrent_state: next_state.clone(),
            });

            if let Some(batch) = buffer.sample(hyper.batch_size, &mut replay_rng) {
                match td_update(
                    &mut main,
                    &target,
                    &batch,
                    hyper.discount,
                    hyper.target_mode,
                    hyper.learning_rate,
                ) {
                    Ok(loss) if loss.is_finite() => {
                        loss_sum += loss;
                        updates += 1;
                    }
                    Ok(loss) => {
                        return Err(diverged(episode, format!("loss = {loss}"), main, log))
                    }
                    Err(AgentError::NonFinite { layer }) => {
                        return Err(diverged(
                            episode,
                            format!("non-finite activations in {layer}"),
                            main,
                            log,
                        ))
                    }
                    Err(e) => return Err(TrainError::Agent(e)),
                }
            }

            if step.terminal {
                break;
            }
            obs = step.observation;
            state = next_state;
        }

        let (outcome, predicted) = match env.outcome() {
            Some(Outcome::Classified(level)) => ("classified".to_string(), Some(level)),
            Some(Outcome::Undecided) => ("undecided".to_string(), None),
            _ => unreachable!("episode loop exits only on a terminal step"),
        };
        log.push(EpisodeRecord {
            episode,
            true_level,
            total_reward,
            mean_loss: if updates > 0 {
                loss_sum / updates as f64
            } else {
                0.0
            },
            epsilon,
            moves: env.moves_taken().unwrap_or(0),
            outcome,
            predicted,
        });

        if (episode + 1) % hyper.target_sync_period == 0 {
            target.sync_from(&main)?;
        }
    }

    log::info!("training finished after {} episodes", log.len());
    Ok(TrainOutput { network: main, log })
}

fn diverged(
    episode: usize,
    detail: String,
    network: QNetwork,
    log: Vec<EpisodeRecord>,
) -> TrainError {
    TrainError::NonFiniteLoss {
        episode,
        detail,
        network: Box::new(network),
        log,
    }
}

fn loss_from_q(
    q: &Tensor,
    num_classes: usize,
    transitions: &[&Transition],
    targets: &[f64],
) -> f64 {
    let actions = q.shape()[1];
    let mut sum = 0.0;
    for (i, transition) in transitions.iter().enumerate() {
        let a = action_to_index(transition.action, num_classes);
        let diff = q.data()[i * actions + a] - targets[i];
        sum += diff * diff;
    }
    sum / transitions.len() as f64
}

fn forward_stored(
    net: &QNetwork,
    transitions: &[&Transition],
) -> Result<super::QOutput, AgentError> {
    let windows = batch_windows(transitions.iter().map(|t| &t.state))?;
    let (hidden, cell) = recurrent_batch(transitions.iter().map(|t| &t.recurrent_state))?;
    net.forward(&windows, &hidden, &cell)
}

fn recurrent_batch<'a>(
    states: impl ExactSizeIterator<Item = &'a RecurrentState>,
) -> Result<(Tensor, Tensor), AgentError> {
    let batch = states.len();
    let mut hidden = Vec::with_capacity(batch * LSTM_UNITS);
    let mut cell = Vec::with_capacity(batch * LSTM_UNITS);
    for state in states {
        hidden.extend_from_slice(&state.hidden);
        cell.extend_from_slice(&state.cell);
    }
    Ok((
        Tensor::from_vec(&[batch, LSTM_UNITS], hidden).map_err(AgentError::Numeric)?,
        Tensor::from_vec(&[batch, LSTM_UNITS], cell).map_err(AgentError::Numeric)?,
    ))
}
