//! Greedy policy evaluation: one deterministic episode per test text.

use std::sync::Arc;

use super::metrics::{metrics_from_evaluations, EvalMetrics, Prediction};
use super::{Corpus, CorpusText, EvalError};
use crate::agent::{greedy_index, index_to_action, QNetwork, LSTM_UNITS};
use crate::env::{Outcome, RecurrentState, RewardConfig, TextEnvironment};
use crate::featurize::{featurize_text, tokenize, EmbeddingTable, NgramModel};

/// Outcome of one greedy episode.
#[derive(Clone, Debug, PartialEq)]
pub struct TextEvaluation {
    pub id: String,
    pub true_level: usize,
    pub prediction: Prediction,
    pub moves: usize,
    /// Fraction of the text the final window position had revealed.
    pub text_seen: f64,
    pub total_reward: f64,
}

/// Runs the trained policy greedily (epsilon = 0) over every corpus text,
/// each episode starting from a fresh zero recurrent state, and aggregates
/// the metric suite. `jobs` worker threads share the read-only network;
/// results are ordered by corpus position regardless of thread count.
pub fn evaluate_policy(
    net: &QNetwork,
    corpus: &Corpus,
    embeddings: &EmbeddingTable,
    ngrams: &NgramModel,
    reward: RewardConfig,
    jobs: usize,
) -> Result<(EvalMetrics, Vec<TextEvaluation>), EvalError> {
    if corpus.is_empty() {
        return Err(EvalError::InvalidArgument(
            "cannot evaluate an empty corpus".to_string(),
        ));
    }
    if net.num_classes() != corpus.num_classes {
        return Err(EvalError::InvalidArgument(format!(
            "network classifies {} levels but the corpus has {}",
            net.num_classes(),
            corpus.num_classes
        )));
    }
    if net.move_actions() != reward.move_action_count() {
        return Err(EvalError::InvalidArgument(format!(
            "network has {} move actions but the reward config implies {}",
            net.move_actions(),
            reward.move_action_count()
        )));
    }

    let workers = jobs.max(1).min(corpus.len());
    let chunk_size = corpus.texts.len().div_ceil(workers);
    let mut outcomes: Vec<Result<TextEvaluation, EvalError>> =
        Vec::with_capacity(corpus.len());
    std::thread::scope(|scope| {
        let handles: Vec<_> = corpus
            .texts
            .chunks(chunk_size)
            .map(|texts| {
                scope.spawn(move || {
                    texts
                        .iter()
                        .map(|text| evaluate_text(net, text, embeddings, ngrams, reward))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for handle in handles {
            outcomes.extend(handle.join().expect("evaluation worker panicked"));
        }
    });

    let evaluations: Vec<TextEvaluation> = outcomes.into_iter().collect::<Result<_, _>>()?;
    let metrics = metrics_from_evaluations(&evaluations, corpus.num_classes)?;
    Ok((metrics, evaluations))
}

fn evaluate_text(
    net: &QNetwork,
    text: &CorpusText,
    embeddings: &EmbeddingTable,
    ngrams: &NgramModel,
    reward: RewardConfig,
) -> Result<TextEvaluation, EvalError> {
    let tokens = tokenize(&text.text).tokens;
    let features = featurize_text(&tokens, embeddings, ngrams)
        .map_err(|e| EvalError::Corpus(format!("{}: {e}", text.id)))?;

    let mut env = TextEnvironment::new(net.num_classes(), reward)?;
    let mut obs = env.reset(Arc::new(features), text.level)?;
    let mut state = RecurrentState::zeros(LSTM_UNITS);
    let mut total_reward = 0.0;
    loop {
        let (q, next_state) = net.forward_observation(&obs, &state)?;
        let action = index_to_action(greedy_index(&q), net.num_classes());
        let step = env.step(action)?;
        total_reward += step.reward;
        if step.terminal {
            break;
        }
        obs = step.observation;
        state = next_state;
    }

    let prediction = match env.outcome() {
        Some(Outcome::Classified(level)) => Prediction::Level(level),
        Some(Outcome::Undecided) => Prediction::Undecided,
        _ => unreachable!("episode loop exits only on a terminal step"),
    };
    Ok(TextEvaluation {
        id: text.id.clone(),
        true_level: text.level,
        prediction,
        moves: env.moves_taken().unwrap_or(0),
        text_seen: env.text_seen_fraction()?,
        total_reward,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::DuelingMode;
    use crate::eval::synthetic::{generate_synthetic_corpus, SyntheticConfig};
    use crate::numeric::Tensor;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn doctored_network(classes: usize, favored_index: usize) -> QNetwork {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let mut net =
            QNetwork::new(classes, 1, DuelingMode::MeanCentered, &mut rng).unwrap();
        for (name, p) in net.named_params_mut() {
            let shape = p.value.shape().to_vec();
            p.reset_value(Tensor::zeros(&shape)).unwrap();
            if name == "advantage3.bias" {
                p.value.data_mut()[favored_index] = 1.0;
            }
        }
        net
    }

    fn fixture() -> (tempfile::TempDir, Corpus, EmbeddingTable, NgramModel) {
        let dir = tempfile::tempdir().unwrap();
        let bundle = generate_synthetic_corpus(
            &SyntheticConfig {
                num_classes: 3,
                texts_per_class: 4,
                length_range: (15, 30),
                seed: 9,
            },
            dir.path(),
        )
        .unwrap();
        let embeddings = EmbeddingTable::from_path(&bundle.embeddings_path).unwrap();
        let ngrams = NgramModel::from_path(&bundle.ngrams_path).unwrap();
        (dir, bundle.corpus, embeddings, ngrams)
    }

    #[test]
    fn an_always_classify_policy_never_moves() {
        let (_dir, corpus, embeddings, ngrams) = fixture();
        // Bias raised on Classify(1): the greedy policy answers level 1
        // immediately for every text.
        let net = doctored_network(3, 0);
        let (metrics, records) = evaluate_policy(
            &net,
            &corpus,
            &embeddings,
            &ngrams,
            RewardConfig::default(),
            1,
        )
        .unwrap();
        assert_eq!(metrics.texts, 12);
        assert_eq!(metrics.moves_mean, 0.0);
        assert_eq!(metrics.undecided_fraction, 0.0);
        assert_relative_eq!(metrics.accuracy, 1.0 / 3.0, max_relative = 1e-12);
        for record in &records {
            assert_eq!(record.prediction, Prediction::Level(1));
            assert_eq!(record.moves, 0);
            assert!(record.text_seen > 0.0 && record.text_seen <= 5.0 / 15.0 + 1e-12);
        }
    }

    #[test]
    fn an_always_move_policy_goes_undecided() {
        let (_dir, corpus, embeddings, ngrams) = fixture();
        // Bias raised on the move action (index K = 3).
        let net = doctored_network(3, 3);
        let reward = RewardConfig {
            max_moves: 7,
            ..RewardConfig::default()
        };
        let (metrics, records) =
            evaluate_policy(&net, &corpus, &embeddings, &ngrams, reward, 1).unwrap();
        assert_eq!(metrics.undecided_fraction, 1.0);
        assert_eq!(metrics.accuracy, 0.0);
        assert_eq!(metrics.moves_mean, 7.0);
        for record in &records {
            assert_eq!(record.prediction, Prediction::Undecided);
            assert_eq!(record.moves, 7);
        }
        // Every undecided text takes its maximum possible label error.
        let expected: f64 = corpus
            .texts
            .iter()
            .map(|t| {
                let e = (t.level - 1).max(3 - t.level) as f64;
                e * e
            })
            .sum::<f64>()
            / corpus.len() as f64;
        assert_relative_eq!(metrics.rmse, expected.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let (_dir, corpus, embeddings, ngrams) = fixture();
        let net = doctored_network(3, 0);
        let reward = RewardConfig::default();
        let (metrics_1, records_1) =
            evaluate_policy(&net, &corpus, &embeddings, &ngrams, reward, 1).unwrap();
        let (metrics_4, records_4) =
            evaluate_policy(&net, &corpus, &embeddings, &ngrams, reward, 4).unwrap();
        assert_eq!(metrics_1, metrics_4);
        assert_eq!(records_1, records_4);
    }

    #[test]
    fn mismatched_network_and_corpus_are_rejected() {
        let (_dir, corpus, embeddings, ngrams) = fixture();
        let net = doctored_network(4, 0);
        assert!(matches!(
            evaluate_policy(
                &net,
                &corpus,
                &embeddings,
                &ngrams,
                RewardConfig::default(),
                1
            ),
            Err(EvalError::InvalidArgument(_))
        ));
        let net = doctored_network(3, 0);
        let backward = RewardConfig {
            allow_backward: true,
            ..RewardConfig::default()
        };
        assert!(matches!(
            evaluate_policy(&net, &corpus, &embeddings, &ngrams, backward, 1),
            Err(EvalError::InvalidArgument(_))
        ));
    }
}
