//! The convolutional recurrent dueling Q-network.
//!
//! Input is the 5-token window of 105-dim feature rows, treated as a
//! 5x105x1 image. Four valid convolutions (with one zero column appended on
//! the width axis before the third) collapse it to a single 525-vector,
//! which feeds one LSTM step and then the two dueling streams:
//!
//!   5x105x1 -> 4x101x32 -> 2x49x64 -> (pad width +1) -> 1x21x64 -> 1x1x525
//!
//! The advantage stream ends at K+M outputs (K classes, M move actions) and
//! the value stream at one; the dueling mode chooses how they combine.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::{action_count, AgentError, DuelingMode};
use crate::env::{Observation, RecurrentState, WINDOW_SIZE};
use crate::numeric::{
    load_checkpoint, save_checkpoint, Activation, Conv2d, Conv2dCache, Dense, DenseCache,
    Differentiable, LstmCache, LstmCell, Padding, Parameter, Tensor,
};

/// Width of one observation row (embedding dimension plus n-gram features).
pub const OBSERVATION_WIDTH: usize = 105;

/// Recurrent units, equal to the flattened conv output.
pub const LSTM_UNITS: usize = 525;

/// Uniform init bound for the recurrent weights. Conv and dense layers use
/// fan-in scaled bounds of sqrt(6 / fan_in) instead.
const LSTM_INIT_BOUND: f64 = 0.05;

fn he_bound(fan_in: usize) -> f64 {
    (6.0 / fan_in as f64).sqrt()
}

/// Names of the checkpoint pseudo-entries that carry the architecture.
const META_CLASSES: &str = "meta.num_classes";
const META_MOVES: &str = "meta.move_actions";
const META_DUELING: &str = "meta.dueling_mean";

#[derive(Clone, Debug)]
pub struct QNetwork {
    conv1: Conv2d,
    conv2: Conv2d,
    conv3: Conv2d,
    conv4: Conv2d,
    lstm: LstmCell,
    adv1: Dense,
    adv2: Dense,
    adv3: Dense,
    val1: Dense,
    val2: Dense,
    val3: Dense,
    num_classes: usize,
    move_actions: usize,
    dueling: DuelingMode,
}

/// Result of a batched forward pass.
pub struct QOutput {
    /// Q-values, shaped [batch, K+M].
    pub q: Tensor,
    /// New recurrent hidden state, [batch, LSTM_UNITS].
    pub hidden: Tensor,
    /// New recurrent cell state, [batch, LSTM_UNITS].
    pub cell: Tensor,
}

/// Layer activations the backward pass needs, produced by
/// `forward_cached`.
pub struct ForwardCache {
    c1: Conv2dCache,
    c2: Conv2dCache,
    c3: Conv2dCache,
    c4: Conv2dCache,
    lstm: LstmCache,
    a1: DenseCache,
    a2: DenseCache,
    a3: DenseCache,
    v1: DenseCache,
    v2: DenseCache,
    v3: DenseCache,
    batch: usize,
}

impl QNetwork {
    /// Builds a freshly initialized network for K classes and M move
    /// actions, verifying that the convolution schedule composes exactly.
    pub fn new(
        num_classes: usize,
        move_actions: usize,
        dueling: DuelingMode,
        rng: &mut impl Rng,
    ) -> Result<Self, AgentError> {
        if num_classes < 2 {
            return Err(AgentError::Architecture(
                "need at least two classes".to_string(),
            ));
        }
        if move_actions < 1 || move_actions > 2 {
            return Err(AgentError::Architecture(
                "move_actions must be 1 or 2".to_string(),
            ));
        }
        let actions = action_count(num_classes, move_actions);
        let no_pad = Padding::default();
        let net = QNetwork {
            conv1: Conv2d::new(
                (2, 5),
                1,
                32,
                (1, 1),
                no_pad,
                Activation::Relu,
                he_bound(2 * 5 * 1),
                rng,
            ),
            conv2: Conv2d::new(
                (2, 5),
                32,
                64,
                (2, 2),
                no_pad,
                Activation::Relu,
                he_bound(2 * 5 * 32),
                rng,
            ),
            conv3: Conv2d::new(
                (2, 10),
                64,
                64,
                (1, 2),
                Padding {
                    right: 1,
                    ..Padding::default()
                },
                Activation::Relu,
                he_bound(2 * 10 * 64),
                rng,
            ),
            conv4: Conv2d::new(
                (1, 21),
                64,
                LSTM_UNITS,
                (1, 1),
                no_pad,
                Activation::Relu,
                he_bound(1 * 21 * 64),
                rng,
            ),
            lstm: LstmCell::new(LSTM_UNITS, LSTM_UNITS, LSTM_INIT_BOUND, rng),
            adv1: Dense::new(LSTM_UNITS, 256, Activation::Relu, he_bound(LSTM_UNITS), rng),
            adv2: Dense::new(256, 128, Activation::Relu, he_bound(256), rng),
            adv3: Dense::new(128, actions, Activation::Linear, he_bound(128), rng),
            val1: Dense::new(LSTM_UNITS, 256, Activation::Relu, he_bound(LSTM_UNITS), rng),
            val2: Dense::new(256, 128, Activation::Relu, he_bound(256), rng),
            val3: Dense::new(128, 1, Activation::Linear, he_bound(128), rng),
            num_classes,
            move_actions,
            dueling,
        };
        let schedule = net.conv_schedule()?;
        let last = schedule.last().expect("four conv layers");
        if *last != (1, 1, LSTM_UNITS) {
            return Err(AgentError::Architecture(format!(
                "conv schedule ends at {:?}, expected (1, 1, {})",
                last, LSTM_UNITS
            )));
        }
        Ok(net)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn move_actions(&self) -> usize {
        self.move_actions
    }

    pub fn dueling_mode(&self) -> DuelingMode {
        self.dueling
    }

    /// Number of Q-values the network emits.
    pub fn num_actions(&self) -> usize {
        action_count(self.num_classes, self.move_actions)
    }

    /// Output dimensions (height, width, channels) after each conv layer
    /// for the standard 5x105 observation.
    pub fn conv_schedule(&self) -> Result<Vec<(usize, usize, usize)>, AgentError> {
        let mut dims = (WINDOW_SIZE, OBSERVATION_WIDTH);
        let mut schedule = Vec::with_capacity(4);
        for (conv, name) in [
            (&self.conv1, "conv1"),
            (&self.conv2, "conv2"),
            (&self.conv3, "conv3"),
            (&self.conv4, "conv4"),
        ] {
            dims = conv.output_size(dims).map_err(|e| {
                AgentError::Architecture(format!("{name} does not fit: {e}"))
            })?;
            schedule.push((dims.0, dims.1, conv.out_channels()));
        }
        Ok(schedule)
    }

    /// Batched forward pass. `windows` is [batch, 5, 105, 1] (or the
    /// unbatched [5, 105, 1]); recurrent tensors are [batch, LSTM_UNITS].
    pub fn forward(
        &self,
        windows: &Tensor,
        hidden: &Tensor,
        cell: &Tensor,
    ) -> Result<QOutput, AgentError> {
        let x1 = self.conv1.forward(windows)?;
        ensure_finite(&x1, "conv1")?;
        let x2 = self.conv2.forward(&x1)?;
        ensure_finite(&x2, "conv2")?;
        let x3 = self.conv3.forward(&x2)?;
        ensure_finite(&x3, "conv3")?;
        let x4 = self.conv4.forward(&x3)?;
        ensure_finite(&x4, "conv4")?;
        let batch = if x4.rank() == 4 { x4.shape()[0] } else { 1 };
        let flat = x4.reshape(&[batch, LSTM_UNITS])?;

        let (h_new, c_new) = self.lstm.forward(&flat, hidden, cell)?;
        ensure_finite(&h_new, "lstm")?;
        ensure_finite(&c_new, "lstm")?;

        let a = self.adv2.forward(&self.adv1.forward(&h_new)?)?;
        let advantage = self.adv3.forward(&a)?;
        ensure_finite(&advantage, "advantage stream")?;
        let v = self.val2.forward(&self.val1.forward(&h_new)?)?;
        let value = self.val3.forward(&v)?;
        ensure_finite(&value, "value stream")?;

        let q = aggregate_dueling(&value, &advantage, self.dueling)?;
        Ok(QOutput {
            q,
            hidden: h_new,
            cell: c_new,
        })
    }

    /// Forward pass that also returns the caches `backward` needs.
    pub fn forward_cached(
        &self,
        windows: &Tensor,
        hidden: &Tensor,
        cell: &Tensor,
    ) -> Result<(QOutput, ForwardCache), AgentError> {
        let (x1, c1) = self.conv1.forward_cached(windows)?;
        ensure_finite(&x1, "conv1")?;
        let (x2, c2) = self.conv2.forward_cached(&x1)?;
        ensure_finite(&x2, "conv2")?;
        let (x3, c3) = self.conv3.forward_cached(&x2)?;
        ensure_finite(&x3, "conv3")?;
        let (x4, c4) = self.conv4.forward_cached(&x3)?;
        ensure_finite(&x4, "conv4")?;
        let batch = x4.shape()[0];
        let flat = x4.reshape(&[batch, LSTM_UNITS])?;

        let (h_new, c_new, lstm) = self.lstm.forward_cached(&flat, hidden, cell)?;
        ensure_finite(&h_new, "lstm")?;
        ensure_finite(&c_new, "lstm")?;

        let (a1_out, a1) = self.adv1.forward_cached(&h_new)?;
        let (a2_out, a2) = self.adv2.forward_cached(&a1_out)?;
        let (advantage, a3) = self.adv3.forward_cached(&a2_out)?;
        ensure_finite(&advantage, "advantage stream")?;
        let (v1_out, v1) = self.val1.forward_cached(&h_new)?;
        let (v2_out, v2) = self.val2.forward_cached(&v1_out)?;
        let (value, v3) = self.val3.forward_cached(&v2_out)?;
        ensure_finite(&value, "value stream")?;

        let q = aggregate_dueling(&value, &advantage, self.dueling)?;
        Ok((
            QOutput {
                q,
                hidden: h_new,
                cell: c_new,
            },
            ForwardCache {
                c1,
                c2,
                c3,
                c4,
                lstm,
                a1,
                a2,
                a3,
                v1,
                v2,
                v3,
                batch,
            },
        ))
    }

    /// Backpropagates a gradient with respect to the Q-values, accumulating
    /// into every parameter's gradient. Gradients with respect to the input
    /// window and incoming recurrent state are discarded: transitions are
    /// trained from stored recurrent states, so the recurrence is not
    /// unrolled further back.
    pub fn backward(
        &mut self,
        cache: &ForwardCache,
        grad_q: &Tensor,
    ) -> Result<(), AgentError> {
        let batch = cache.batch;
        let actions = self.num_actions();
        if grad_q.shape() != [batch, actions] {
            return Err(AgentError::Architecture(format!(
                "grad_q shape {:?} does not match [{batch}, {actions}]",
                grad_q.shape()
            )));
        }

        // Dueling aggregation backward: dV is the row sum of dQ; dA is dQ
        // (naive sum) or dQ centered by its row mean (mean-centered).
        let dq = grad_q.data();
        let mut grad_value = Tensor::zeros(&[batch, 1]);
        let mut grad_adv = Tensor::zeros(&[batch, actions]);
        for b in 0..batch {
            let row = &dq[b * actions..(b + 1) * actions];
            let sum: f64 = row.iter().sum();
            grad_value.data_mut()[b] = sum;
            let adv_row = &mut grad_adv.data_mut()[b * actions..(b + 1) * actions];
            match self.dueling {
                DuelingMode::NaiveSum => adv_row.copy_from_slice(row),
                DuelingMode::MeanCentered => {
                    let mean = sum / actions as f64;
                    for (dst, &src) in adv_row.iter_mut().zip(row) {
                        *dst = src - mean;
                    }
                }
            }
        }

        let g = self.adv3.backward(&cache.a3, &grad_adv)?;
        let g = self.adv2.backward(&cache.a2, &g)?;
        let grad_h_adv = self.adv1.backward(&cache.a1, &g)?;
        let g = self.val3.backward(&cache.v3, &grad_value)?;
        let g = self.val2.backward(&cache.v2, &g)?;
        let grad_h_val = self.val1.backward(&cache.v1, &g)?;

        let mut grad_h = grad_h_adv;
        for (a, b) in grad_h.data_mut().iter_mut().zip(grad_h_val.data()) {
            *a += b;
        }
        let grad_c = Tensor::zeros(&[batch, LSTM_UNITS]);
        let (grad_flat, _, _) = self.lstm.backward(&cache.lstm, &grad_h, &grad_c)?;

        let grad_x4 = grad_flat.reshape(&[batch, 1, 1, LSTM_UNITS])?;
        let g = self
            .conv4
            .backward(&cache.c4, &grad_x4, true)?
            .expect("input grad requested");
        let g = self
            .conv3
            .backward(&cache.c3, &g, true)?
            .expect("input grad requested");
        let g = self
            .conv2
            .backward(&cache.c2, &g, true)?
            .expect("input grad requested");
        self.conv1.backward(&cache.c1, &g, false)?;
        Ok(())
    }

    /// Single-observation convenience wrapper returning plain vectors.
    pub fn forward_observation(
        &self,
        obs: &Observation,
        state: &RecurrentState,
    ) -> Result<(Vec<f64>, RecurrentState), AgentError> {
        let windows = batch_windows(std::slice::from_ref(obs).iter())?;
        let hidden = Tensor::from_vec(&[1, LSTM_UNITS], state.hidden.clone())
            .map_err(AgentError::Numeric)?;
        let cell = Tensor::from_vec(&[1, LSTM_UNITS], state.cell.clone())
            .map_err(AgentError::Numeric)?;
        let out = self.forward(&windows, &hidden, &cell)?;
        Ok((
            out.q.data().to_vec(),
            RecurrentState {
                hidden: out.hidden.data().to_vec(),
                cell: out.cell.data().to_vec(),
            },
        ))
    }

    pub fn zero_grad(&mut self) {
        for (_, p) in self.named_params_mut() {
            p.zero_grad();
        }
    }

    pub fn named_params(&self) -> Vec<(&'static str, &Parameter)> {
        vec![
            ("conv1.kernel", &self.conv1.kernel),
            ("conv2.kernel", &self.conv2.kernel),
            ("conv3.kernel", &self.conv3.kernel),
            ("conv4.kernel", &self.conv4.kernel),
            ("lstm.w_input", &self.lstm.w_input),
            ("lstm.w_hidden", &self.lstm.w_hidden),
            ("lstm.bias", &self.lstm.bias),
            ("advantage1.weight", &self.adv1.weight),
            ("advantage1.bias", &self.adv1.bias),
            ("advantage2.weight", &self.adv2.weight),
            ("advantage2.bias", &self.adv2.bias),
            ("advantage3.weight", &self.adv3.weight),
            ("advantage3.bias", &self.adv3.bias),
            ("value1.weight", &self.val1.weight),
            ("value1.bias", &self.val1.bias),
            ("value2.weight", &self.val2.weight),
            ("value2.bias", &self.val2.bias),
            ("value3.weight", &self.val3.weight),
            ("value3.bias", &self.val3.bias),
        ]
    }

    pub fn named_params_mut(&mut self) -> Vec<(&'static str, &mut Parameter)> {
        vec![
            ("conv1.kernel", &mut self.conv1.kernel),
            ("conv2.kernel", &mut self.conv2.kernel),
            ("conv3.kernel", &mut self.conv3.kernel),
            ("conv4.kernel", &mut self.conv4.kernel),
            ("lstm.w_input", &mut self.lstm.w_input),
            ("lstm.w_hidden", &mut self.lstm.w_hidden),
            ("lstm.bias", &mut self.lstm.bias),
            ("advantage1.weight", &mut self.adv1.weight),
            ("advantage1.bias", &mut self.adv1.bias),
            ("advantage2.weight", &mut self.adv2.weight),
            ("advantage2.bias", &mut self.adv2.bias),
            ("advantage3.weight", &mut self.adv3.weight),
            ("advantage3.bias", &mut self.adv3.bias),
            ("value1.weight", &mut self.val1.weight),
            ("value1.bias", &mut self.val1.bias),
            ("value2.weight", &mut self.val2.weight),
            ("value2.bias", &mut self.val2.bias),
            ("value3.weight", &mut self.val3.weight),
            ("value3.bias", &mut self.val3.bias),
        ]
    }

    /// Copies every parameter value from `main` into this network. Both
    /// must be structurally identical; optimizer state here is untouched
    /// (the target network is never trained directly).
    pub fn sync_from(&mut self, main: &QNetwork) -> Result<(), AgentError> {
        if self.num_classes != main.num_classes
            || self.move_actions != main.move_actions
            || self.dueling != main.dueling
        {
            return Err(AgentError::Architecture(
                "cannot sync structurally different networks".to_string(),
            ));
        }
        let source = main.named_params();
        for ((name, dst), (src_name, src)) in
            self.named_params_mut().into_iter().zip(source)
        {
            debug_assert_eq!(name, src_name);
            dst.copy_value_from(src).map_err(AgentError::Numeric)?;
        }
        Ok(())
    }

    /// Writes all parameters plus architecture pseudo-entries, so the file
    /// alone reconstructs the network.
    pub fn save(&self, path: &Path) -> Result<(), AgentError> {
        let meta = [
            (
                META_CLASSES.to_string(),
                Tensor::from_vec(&[1], vec![self.num_classes as f64])
                    .map_err(AgentError::Numeric)?,
            ),
            (
                META_MOVES.to_string(),
                Tensor::from_vec(&[1], vec![self.move_actions as f64])
                    .map_err(AgentError::Numeric)?,
            ),
            (
                META_DUELING.to_string(),
                Tensor::from_vec(
                    &[1],
                    vec![match self.dueling {
                        DuelingMode::MeanCentered => 1.0,
                        DuelingMode::NaiveSum => 0.0,
                    }],
                )
                .map_err(AgentError::Numeric)?,
            ),
        ];
        let mut entries: Vec<(String, &Tensor)> =
            meta.iter().map(|(n, t)| (n.clone(), t)).collect();
        entries.extend(
            self.named_params()
                .into_iter()
                .map(|(n, p)| (n.to_string(), &p.value)),
        );
        save_checkpoint(path, &entries).map_err(AgentError::Checkpoint)
    }

    /// Reconstructs a network from a checkpoint written by `save`.
    pub fn load(path: &Path) -> Result<Self, AgentError> {
        let entries = load_checkpoint(path)?;
        let scalar = |name: &str| -> Result<f64, AgentError> {
            entries
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t.data()[0])
                .ok_or_else(|| AgentError::CheckpointMismatch(format!("missing {name}")))
        };
        let num_classes = scalar(META_CLASSES)? as usize;
        let move_actions = scalar(META_MOVES)? as usize;
        let dueling = if scalar(META_DUELING)? != 0.0 {
            DuelingMode::MeanCentered
        } else {
            DuelingMode::NaiveSum
        };

        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let mut net = QNetwork::new(num_classes, move_actions, dueling, &mut rng)?;
        let mut consumed = 3usize;
        for (name, param) in net.named_params_mut() {
            let entry = entries
                .iter()
                .find(|(n, _)| n == name)
                .ok_or_else(|| AgentError::CheckpointMismatch(format!("missing {name}")))?;
            param
                .reset_value(entry.1.clone())
                .map_err(|_| {
                    AgentError::CheckpointMismatch(format!(
                        "parameter {name} has shape {:?}, expected {:?}",
                        entry.1.shape(),
                        param.value.shape()
                    ))
                })?;
            consumed += 1;
        }
        if consumed != entries.len() {
            return Err(AgentError::CheckpointMismatch(format!(
                "checkpoint has {} entries, network consumed {consumed}",
                entries.len()
            )));
        }
        Ok(net)
    }
}

impl Differentiable for QNetwork {
    fn named_params_mut(&mut self) -> Vec<(String, &mut Parameter)> {
        QNetwork::named_params_mut(self)
            .into_iter()
            .map(|(n, p)| (n.to_string(), p))
            .collect()
    }
}

/// Combines value and advantage streams into Q-values.
pub(crate) fn aggregate_dueling(
    value: &Tensor,
    advantage: &Tensor,
    mode: DuelingMode,
) -> Result<Tensor, AgentError> {
    let batch = advantage.shape()[0];
    let actions = advantage.shape()[1];
    let mut q = advantage.clone();
    for b in 0..batch {
        let v = value.data()[b];
        let row = &mut q.data_mut()[b * actions..(b + 1) * actions];
        let offset = match mode {
            DuelingMode::NaiveSum => v,
            DuelingMode::MeanCentered => {
                let mean: f64 = row.iter().sum::<f64>() / actions as f64;
                v - mean
            }
        };
        for x in row.iter_mut() {
            *x += offset;
        }
    }
    Ok(q)
}

/// Stacks observations into the network input tensor [batch, 5, 105, 1].
pub(crate) fn batch_windows<'a>(
    observations: impl ExactSizeIterator<Item = &'a Observation>,
) -> Result<Tensor, AgentError> {
    let batch = observations.len();
    if batch == 0 {
        return Err(AgentError::Architecture(
            "cannot batch zero observations".to_string(),
        ));
    }
    let mut data = Vec::with_capacity(batch * WINDOW_SIZE * OBSERVATION_WIDTH);
    for obs in observations {
        if obs.feature_dim() != OBSERVATION_WIDTH {
            return Err(AgentError::Architecture(format!(
                "observation rows have {} features, the network expects {}",
                obs.feature_dim(),
                OBSERVATION_WIDTH
            )));
        }
        data.extend_from_slice(obs.window());
    }
    Tensor::from_vec(&[batch, WINDOW_SIZE, OBSERVATION_WIDTH, 1], data)
        .map_err(AgentError::Numeric)
}

fn ensure_finite(t: &Tensor, layer: &str) -> Result<(), AgentError> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(AgentError::NonFinite {
            layer: layer.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::greedy_index;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    fn random_observation(seed: u64) -> Observation {
        let mut r = rng(seed);
        let window: Vec<f64> = (0..WINDOW_SIZE * OBSERVATION_WIDTH)
            .map(|_| r.random_range(-1.0..1.0))
            .collect();
        Observation::new(window, OBSERVATION_WIDTH, 0)
    }

    #[test]
    fn conv_schedule_matches_documentation() {
        let net = QNetwork::new(3, 1, DuelingMode::MeanCentered, &mut rng(1)).unwrap();
        assert_eq!(
            net.conv_schedule().unwrap(),
            vec![(4, 101, 32), (2, 49, 64), (1, 21, 64), (1, 1, 525)]
        );
    }

    #[test]
    fn forward_emits_one_q_value_per_action() {
        for (classes, moves) in [(3, 1), (5, 1), (3, 2), (5, 2)] {
            let net =
                QNetwork::new(classes, moves, DuelingMode::MeanCentered, &mut rng(2)).unwrap();
            let obs = random_observation(3);
            let state = RecurrentState::zeros(LSTM_UNITS);
            let (q, next) = net.forward_observation(&obs, &state).unwrap();
            assert_eq!(q.len(), classes + moves);
            assert!(q.iter().all(|v| v.is_finite()));
            assert_eq!(next.hidden.len(), LSTM_UNITS);
            assert_eq!(next.cell.len(), LSTM_UNITS);
        }
    }

    #[test]
    fn rejects_degenerate_configurations() {
        assert!(QNetwork::new(1, 1, DuelingMode::MeanCentered, &mut rng(4)).is_err());
        assert!(QNetwork::new(3, 0, DuelingMode::MeanCentered, &mut rng(4)).is_err());
        assert!(QNetwork::new(3, 3, DuelingMode::MeanCentered, &mut rng(4)).is_err());
    }

    #[test]
    fn rejects_observations_of_the_wrong_width() {
        let net = QNetwork::new(3, 1, DuelingMode::MeanCentered, &mut rng(5)).unwrap();
        let obs = Observation::new(vec![0.0; WINDOW_SIZE * 7], 7, 0);
        let err = net
            .forward_observation(&obs, &RecurrentState::zeros(LSTM_UNITS))
            .unwrap_err();
        assert!(matches!(err, AgentError::Architecture(_)));
    }

    #[test]
    fn mean_centered_aggregation_example() {
        let value = Tensor::from_vec(&[1, 1], vec![2.0]).unwrap();
        let advantage = Tensor::from_vec(&[1, 3], vec![1.0, 0.0, -1.0]).unwrap();
        let q = aggregate_dueling(&value, &advantage, DuelingMode::MeanCentered).unwrap();
        assert_eq!(q.data(), &[3.0, 2.0, 1.0]);
    }

    #[test]
    fn naive_sum_aggregation_example() {
        let value = Tensor::from_vec(&[1, 1], vec![1.0]).unwrap();
        let advantage = Tensor::from_vec(&[1, 2], vec![0.5, -0.5]).unwrap();
        let q = aggregate_dueling(&value, &advantage, DuelingMode::NaiveSum).unwrap();
        assert_eq!(q.data(), &[1.5, 0.5]);
    }

    #[test]
    fn mean_centering_cancels_advantage_shifts() {
        let value = Tensor::from_vec(&[1, 1], vec![0.75]).unwrap();
        let advantage = Tensor::from_vec(&[1, 4], vec![0.3, -1.2, 0.9, 0.0]).unwrap();
        let base = aggregate_dueling(&value, &advantage, DuelingMode::MeanCentered).unwrap();
        let shifted_adv =
            Tensor::from_vec(&[1, 4], advantage.data().iter().map(|a| a + 10.0).collect())
                .unwrap();
        let shifted = aggregate_dueling(&value, &shifted_adv, DuelingMode::MeanCentered).unwrap();
        for (a, b) in base.data().iter().zip(shifted.data()) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
        assert_eq!(greedy_index(base.data()), greedy_index(shifted.data()));

        // Shifting the value stream moves every Q equally.
        let value_up = Tensor::from_vec(&[1, 1], vec![0.75 + 5.0]).unwrap();
        let raised = aggregate_dueling(&value_up, &advantage, DuelingMode::MeanCentered).unwrap();
        for (a, b) in base.data().iter().zip(raised.data()) {
            assert_relative_eq!(b - a, 5.0, max_relative = 1e-12);
        }
        assert_eq!(greedy_index(base.data()), greedy_index(raised.data()));
    }

    #[test]
    fn sync_copies_values_bit_for_bit_and_is_idempotent() {
        let main = QNetwork::new(3, 1, DuelingMode::MeanCentered, &mut rng(6)).unwrap();
        let mut target = QNetwork::new(3, 1, DuelingMode::MeanCentered, &mut rng(7)).unwrap();
        target.sync_from(&main).unwrap();
        let bits = |net: &QNetwork| -> Vec<u64> {
            net.named_params()
                .iter()
                .flat_map(|(_, p)| p.value.data().iter().map(|v| v.to_bits()))
                .collect()
        };
        assert_eq!(bits(&main), bits(&target));
        target.sync_from(&main).unwrap();
        assert_eq!(bits(&main), bits(&target));

        let obs = random_observation(8);
        let state = RecurrentState::zeros(LSTM_UNITS);
        let (q_main, _) = main.forward_observation(&obs, &state).unwrap();
        let (q_target, _) = target.forward_observation(&obs, &state).unwrap();
        assert_eq!(q_main, q_target);

        let mut other = QNetwork::new(4, 1, DuelingMode::MeanCentered, &mut rng(9)).unwrap();
        assert!(other.sync_from(&main).is_err());
    }

    #[test]
    fn checkpoint_round_trip_restores_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.bin");
        let net = QNetwork::new(5, 2, DuelingMode::NaiveSum, &mut rng(10)).unwrap();
        net.save(&path).unwrap();
        let restored = QNetwork::load(&path).unwrap();
        assert_eq!(restored.num_classes(), 5);
        assert_eq!(restored.move_actions(), 2);
        assert_eq!(restored.dueling_mode(), DuelingMode::NaiveSum);
        for ((name, a), (_, b)) in net.named_params().iter().zip(restored.named_params()) {
            let left: Vec<u64> = a.value.data().iter().map(|v| v.to_bits()).collect();
            let right: Vec<u64> = b.value.data().iter().map(|v| v.to_bits()).collect();
            assert_eq!(left, right, "parameter {name} changed across the round trip");
        }
    }

    #[test]
    fn load_rejects_incomplete_or_padded_checkpoints() {
        use crate::numeric::{load_checkpoint, save_checkpoint};
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("good.bin");
        let net = QNetwork::new(3, 1, DuelingMode::MeanCentered, &mut rng(11)).unwrap();
        net.save(&good).unwrap();
        let entries = load_checkpoint(&good).unwrap();

        let missing = dir.path().join("missing.bin");
        let subset: Vec<(String, &Tensor)> = entries
            .iter()
            .filter(|(n, _)| n != "lstm.bias")
            .map(|(n, t)| (n.clone(), t))
            .collect();
        save_checkpoint(&missing, &subset).unwrap();
        assert!(matches!(
            QNetwork::load(&missing),
            Err(AgentError::CheckpointMismatch(_))
        ));

        let padded = dir.path().join("padded.bin");
        let stray = Tensor::zeros(&[2]);
        let mut all: Vec<(String, &Tensor)> =
            entries.iter().map(|(n, t)| (n.clone(), t)).collect();
        all.push(("stray.tensor".to_string(), &stray));
        save_checkpoint(&padded, &all).unwrap();
        assert!(matches!(
            QNetwork::load(&padded),
            Err(AgentError::CheckpointMismatch(_))
        ));
    }

    #[test]
    fn non_finite_activations_name_the_layer() {
        let mut net = QNetwork::new(3, 1, DuelingMode::MeanCentered, &mut rng(12)).unwrap();
        for (name, p) in net.named_params_mut() {
            if name == "conv2.kernel" {
                p.value.data_mut()[0] = f64::NAN;
            }
        }
        let err = net
            .forward_observation(
                &random_observation(13),
                &RecurrentState::zeros(LSTM_UNITS),
            )
            .unwrap_err();
        match err {
            AgentError::NonFinite { layer } => assert_eq!(layer, "conv2"),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
