//! Differentiable layers: dense, 2-D convolution, and an LSTM cell.
//!
//! Forward passes come in two flavors: a plain one for inference and a
//! cached one that records exactly what the hand-written backward pass
//! needs. Backward passes accumulate into parameter gradients (so a batch
//! can be split across calls) and return gradients with respect to inputs.

use rand::Rng;

use super::linalg::{gemm_nn, gemm_nt, gemm_tn};
use super::{uniform_init, NumericError, Parameter, Tensor};

/// Elementwise nonlinearity applied after a layer's affine map.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
}

impl Activation {
    fn apply(self, data: &mut [f64]) {
        if self == Activation::Relu {
            for v in data.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
    }

    /// Like `apply`, but also records the derivative as a 0/1 multiplier per
    /// element, so the backward pass is a plain vectorized product. Only the
    /// strictly negative side is clamped: NaNs pass through to be caught by
    /// the caller's finiteness check, and their mask entry is zero.
    fn apply_masked(self, data: &mut [f64]) -> Vec<f64> {
        match self {
            Activation::Linear => Vec::new(),
            Activation::Relu => {
                let mut mask = vec![0.0; data.len()];
                for (m, v) in mask.iter_mut().zip(data.iter_mut()) {
                    *m = f64::from(u8::from(*v > 0.0));
                    *v = if *v < 0.0 { 0.0 } else { *v };
                }
                mask
            }
        }
    }

    /// Writes grad-of-preactivation given grad-of-output and the cached
    /// post-activation output.
    fn backprop(self, output: &[f64], grad_out: &[f64], grad_pre: &mut [f64]) {
        match self {
            Activation::Linear => grad_pre.copy_from_slice(grad_out),
            Activation::Relu => {
                for ((g, &o), &go) in grad_pre.iter_mut().zip(output).zip(grad_out) {
                    *g = if o > 0.0 { go } else { 0.0 };
                }
            }
        }
    }
}

/// Fully connected layer: y = act(x W + b) with W of shape [inputs, outputs].
#[derive(Clone, Debug)]
pub struct Dense {
    pub weight: Parameter,
    pub bias: Parameter,
    pub activation: Activation,
}

#[derive(Clone, Debug)]
pub struct DenseCache {
    input: Tensor,
    output: Tensor,
}

impl Dense {
    pub fn new(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        init_bound: f64,
        rng: &mut impl Rng,
    ) -> Self {
        Dense {
            weight: Parameter::new(uniform_init(&[inputs, outputs], init_bound, rng)),
            bias: Parameter::new(Tensor::zeros(&[outputs])),
            activation,
        }
    }

    pub fn in_features(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn out_features(&self) -> usize {
        self.weight.value.shape()[1]
    }

    /// Accepts a single vector [inputs] or a batch [batch, inputs]; the
    /// output keeps the input's rank.
    pub fn forward(&self, input: &Tensor) -> Result<Tensor, NumericError> {
        let rows = rows_of(input, self.in_features()).ok_or_else(|| {
            NumericError::ShapeMismatch {
                op: "dense",
                left: input.shape().to_vec(),
                right: self.weight.value.shape().to_vec(),
            }
        })?;
        let out = self.forward_rows(input.data(), rows);
        if input.rank() == 2 {
            Ok(out)
        } else {
            let outputs = self.out_features();
            out.reshape(&[outputs])
        }
    }

    pub fn forward_cached(&self, input: &Tensor) -> Result<(Tensor, DenseCache), NumericError> {
        let rows = rows_of(input, self.in_features()).ok_or_else(|| {
            NumericError::ShapeMismatch {
                op: "dense",
                left: input.shape().to_vec(),
                right: self.weight.value.shape().to_vec(),
            }
        })?;
        let output = self.forward_rows(input.data(), rows);
        let input = Tensor::from_vec(&[rows, self.in_features()], input.data().to_vec())?;
        Ok((
            output.clone(),
            DenseCache { input, output },
        ))
    }

    fn forward_rows(&self, input: &[f64], rows: usize) -> Tensor {
        let (inputs, outputs) = (self.in_features(), self.out_features());
        let mut out = Tensor::zeros(&[rows, outputs]);
        gemm_nn(
            rows,
            inputs,
            outputs,
            input,
            self.weight.value.data(),
            0.0,
            out.data_mut(),
        );
        let bias = self.bias.value.data();
        let relu = self.activation == Activation::Relu;
        for row in out.data_mut().chunks_exact_mut(outputs) {
            for (v, b) in row.iter_mut().zip(bias) {
                *v += b;
                if relu && *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        out
    }

    /// Accumulates parameter gradients and returns the gradient with
    /// respect to the input, shaped [batch, inputs].
    pub fn backward(
        &mut self,
        cache: &DenseCache,
        grad_out: &Tensor,
    ) -> Result<Tensor, NumericError> {
        let (inputs, outputs) = (self.in_features(), self.out_features());
        if grad_out.shape() != cache.output.shape() {
            return Err(NumericError::ShapeMismatch {
                op: "dense backward",
                left: grad_out.shape().to_vec(),
                right: cache.output.shape().to_vec(),
            });
        }
        let batch = cache.input.shape()[0];
        let mut grad_pre = vec![0.0; batch * outputs];
        self.activation
            .backprop(cache.output.data(), grad_out.data(), &mut grad_pre);

        gemm_tn(
            inputs,
            batch,
            outputs,
            cache.input.data(),
            &grad_pre,
            1.0,
            self.weight.grad.data_mut(),
        );
        let bias_grad = self.bias.grad.data_mut();
        for row in grad_pre.chunks_exact(outputs) {
            for (g, &d) in bias_grad.iter_mut().zip(row) {
                *g += d;
            }
        }
        let mut grad_in = Tensor::zeros(&[batch, inputs]);
        gemm_nt(
            batch,
            outputs,
            inputs,
            &grad_pre,
            self.weight.value.data(),
            0.0,
            grad_in.data_mut(),
        );
        Ok(grad_in)
    }
}

/// Zero padding applied to the spatial dimensions before convolving.
/// Sides are independent, which the network needs for its one asymmetric
/// width pad.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Padding {
    pub top: usize,
    pub bottom: usize,
    pub left: usize,
    pub right: usize,
}

/// 2-D convolution over [batch, height, width, channels] tensors, bias-free.
/// The kernel is stored [kh, kw, in_channels, out_channels].
#[derive(Clone, Debug)]
pub struct Conv2d {
    pub kernel: Parameter,
    stride: (usize, usize),
    padding: Padding,
    pub activation: Activation,
}

#[derive(Clone, Debug)]
pub struct Conv2dCache {
    cols: Vec<f64>,
    /// 0/1 ReLU derivative per output element; empty for linear layers.
    relu_mask: Vec<f64>,
    output_shape: [usize; 4],
    input_shape: [usize; 4],
}

impl Conv2d {
    pub fn new(
        kernel_size: (usize, usize),
        in_channels: usize,
        out_channels: usize,
        stride: (usize, usize),
        padding: Padding,
        activation: Activation,
        init_bound: f64,
        rng: &mut impl Rng,
    ) -> Self {
        assert!(
            kernel_size.0 > 0 && kernel_size.1 > 0 && stride.0 > 0 && stride.1 > 0,
            "kernel and stride must be positive"
        );
        let shape = [kernel_size.0, kernel_size.1, in_channels, out_channels];
        Conv2d {
            kernel: Parameter::new(uniform_init(&shape, init_bound, rng)),
            stride,
            padding,
            activation,
        }
    }

    pub fn kernel_size(&self) -> (usize, usize) {
        (self.kernel.value.shape()[0], self.kernel.value.shape()[1])
    }

    pub fn stride(&self) -> (usize, usize) {
        self.stride
    }

    pub fn padding(&self) -> Padding {
        self.padding
    }

    pub fn in_channels(&self) -> usize {
        self.kernel.value.shape()[2]
    }

    pub fn out_channels(&self) -> usize {
        self.kernel.value.shape()[3]
    }

    /// Spatial output size for a given input size, after padding.
    pub fn output_size(&self, input: (usize, usize)) -> Result<(usize, usize), NumericError> {
        let (kh, kw) = self.kernel_size();
        let h = input.0 + self.padding.top + self.padding.bottom;
        let w = input.1 + self.padding.left + self.padding.right;
        if h < kh || w < kw {
            return Err(NumericError::InvalidArgument {
                op: "conv2d",
                message: format!(
                    "kernel {}x{} does not fit padded input {}x{}",
                    kh, kw, h, w
                ),
            });
        }
        Ok(((h - kh) / self.stride.0 + 1, (w - kw) / self.stride.1 + 1))
    }

    /// Accepts [height, width, channels] or [batch, height, width, channels];
    /// the output keeps the input's rank.
    pub fn forward(&self, input: &Tensor) -> Result<Tensor, NumericError> {
        let (dims, batched) = self.batch_dims(input)?;
        let (mut out, _) = self.forward_impl(input.data(), dims)?;
        self.activation.apply(out.data_mut());
        if batched {
            Ok(out)
        } else {
            let s = out.shape().to_vec();
            out.reshape(&[s[1], s[2], s[3]])
        }
    }

    pub fn forward_cached(&self, input: &Tensor) -> Result<(Tensor, Conv2dCache), NumericError> {
        let (dims, _) = self.batch_dims(input)?;
        let (mut output, cols) = self.forward_impl(input.data(), dims)?;
        let relu_mask = self.activation.apply_masked(output.data_mut());
        let output_shape = {
            let s = output.shape();
            [s[0], s[1], s[2], s[3]]
        };
        Ok((
            output,
            Conv2dCache {
                cols,
                relu_mask,
                output_shape,
                input_shape: dims,
            },
        ))
    }

    /// Normalizes the input to batch dims without touching its data.
    fn batch_dims(&self, input: &Tensor) -> Result<([usize; 4], bool), NumericError> {
        self.check_channels(input)?;
        match input.shape() {
            &[h, w, c] => Ok(([1, h, w, c], false)),
            &[b, h, w, c] => Ok(([b, h, w, c], true)),
            _ => Err(NumericError::InvalidArgument {
                op: "conv2d",
                message: format!("expected rank 3 or 4, got shape {:?}", input.shape()),
            }),
        }
    }

    /// Validates the channel axis against the kernel, reporting the caller's
    /// shape as given rather than its batch-normalized form.
    fn check_channels(&self, input: &Tensor) -> Result<(), NumericError> {
        if input.rank() >= 3 && input.shape()[input.rank() - 1] != self.in_channels() {
            return Err(NumericError::ShapeMismatch {
                op: "conv2d",
                left: input.shape().to_vec(),
                right: self.kernel.value.shape().to_vec(),
            });
        }
        Ok(())
    }

    fn forward_impl(
        &self,
        input: &[f64],
        dims: [usize; 4],
    ) -> Result<(Tensor, Vec<f64>), NumericError> {
        let [batch, height, width, _] = dims;
        let (out_h, out_w) = self.output_size((height, width))?;
        let (kh, kw) = self.kernel_size();
        let patch = kh * kw * self.in_channels();
        let rows = batch * out_h * out_w;

        let mut cols = Vec::with_capacity(rows * patch);
        self.im2col(input, dims, &mut cols);
        debug_assert_eq!(cols.len(), rows * patch);

        let out_channels = self.out_channels();
        let mut out = Tensor::zeros(&[batch, out_h, out_w, out_channels]);
        gemm_nn(
            rows,
            patch,
            out_channels,
            &cols,
            self.kernel.value.data(),
            0.0,
            out.data_mut(),
        );
        Ok((out, cols))
    }

    /// Accumulates the kernel gradient; returns the input gradient unless
    /// the caller opts out (useful for the first layer of a network).
    pub fn backward(
        &mut self,
        cache: &Conv2dCache,
        grad_out: &Tensor,
        compute_input_grad: bool,
    ) -> Result<Option<Tensor>, NumericError> {
        if grad_out.shape() != cache.output_shape {
            return Err(NumericError::ShapeMismatch {
                op: "conv2d backward",
                left: grad_out.shape().to_vec(),
                right: cache.output_shape.to_vec(),
            });
        }
        let out_channels = self.out_channels();
        let rows = grad_out.len() / out_channels;
        let patch = self.kernel.value.len() / out_channels;

        let mut grad_pre = vec![0.0; grad_out.len()];
        match self.activation {
            Activation::Linear => grad_pre.copy_from_slice(grad_out.data()),
            Activation::Relu => {
                for ((g, &go), &m) in grad_pre
                    .iter_mut()
                    .zip(grad_out.data())
                    .zip(&cache.relu_mask)
                {
                    *g = go * m;
                }
            }
        }

        gemm_tn(
            patch,
            rows,
            out_channels,
            &cache.cols,
            &grad_pre,
            1.0,
            self.kernel.grad.data_mut(),
        );

        if !compute_input_grad {
            return Ok(None);
        }
        let mut grad_cols = vec![0.0; rows * patch];
        gemm_nt(
            rows,
            out_channels,
            patch,
            &grad_pre,
            self.kernel.value.data(),
            0.0,
            &mut grad_cols,
        );
        let mut grad_in = Tensor::zeros(&cache.input_shape);
        self.col2im(&grad_cols, cache.input_shape, grad_in.data_mut());
        Ok(Some(grad_in))
    }

    /// The kj loop collapses to one contiguous run per (position, ki):
    /// consecutive taps read consecutive input columns, and channels are
    /// innermost on both sides. Padding clips the run's ends.
    fn im2col(&self, input: &[f64], dims: [usize; 4], cols: &mut Vec<f64>) {
        let [batch, height, width, channels] = dims;
        let (kh, kw) = self.kernel_size();
        let (sh, sw) = self.stride;
        let (out_h, out_w) = self
            .output_size((height, width))
            .expect("validated by caller");
        let run = kw * channels;
        for b in 0..batch {
            let in_base = b * height * width * channels;
            for oh in 0..out_h {
                for ow in 0..out_w {
                    for ki in 0..kh {
                        let ih = oh * sh + ki;
                        if ih < self.padding.top || ih - self.padding.top >= height {
                            cols.resize(cols.len() + run, 0.0);
                            continue;
                        }
                        let ih = ih - self.padding.top;
                        let (lo, hi) = self.clip_taps(ow * sw, width);
                        if lo >= hi {
                            cols.resize(cols.len() + run, 0.0);
                            continue;
                        }
                        cols.resize(cols.len() + lo * channels, 0.0);
                        let iw = ow * sw + lo - self.padding.left;
                        let src = in_base + (ih * width + iw) * channels;
                        cols.extend_from_slice(&input[src..src + (hi - lo) * channels]);
                        cols.resize(cols.len() + (kw - hi) * channels, 0.0);
                    }
                }
            }
        }
    }

    fn col2im(&self, cols: &[f64], dims: [usize; 4], grad_in: &mut [f64]) {
        let [batch, height, width, channels] = dims;
        let (kh, kw) = self.kernel_size();
        let (sh, sw) = self.stride;
        let (out_h, out_w) = self
            .output_size((height, width))
            .expect("validated by caller");
        let run = kw * channels;
        let mut seg = 0;
        for b in 0..batch {
            let in_base = b * height * width * channels;
            for oh in 0..out_h {
                for ow in 0..out_w {
                    for ki in 0..kh {
                        let src = seg;
                        seg += run;
                        let ih = oh * sh + ki;
                        if ih < self.padding.top || ih - self.padding.top >= height {
                            continue;
                        }
                        let ih = ih - self.padding.top;
                        let (lo, hi) = self.clip_taps(ow * sw, width);
                        if lo >= hi {
                            continue;
                        }
                        let iw = ow * sw + lo - self.padding.left;
                        let dst = in_base + (ih * width + iw) * channels;
                        let span = (hi - lo) * channels;
                        let src = src + lo * channels;
                        for (g, &v) in grad_in[dst..dst + span]
                            .iter_mut()
                            .zip(&cols[src..src + span])
                        {
                            *g += v;
                        }
                    }
                }
            }
        }
    }

    /// Valid kj range for the run starting at padded column `iw0`.
    fn clip_taps(&self, iw0: usize, width: usize) -> (usize, usize) {
        let kw = self.kernel.value.shape()[1];
        let lo = self.padding.left.saturating_sub(iw0).min(kw);
        let hi = (self.padding.left + width).saturating_sub(iw0).min(kw);
        (lo, hi)
    }
}

/// Single LSTM step. Weights are stored with the four gates packed along the
/// last axis in the order input, forget, candidate, output.
#[derive(Clone, Debug)]
pub struct LstmCell {
    pub w_input: Parameter,
    pub w_hidden: Parameter,
    pub bias: Parameter,
    hidden: usize,
}

#[derive(Clone, Debug)]
pub struct LstmCache {
    x: Tensor,
    h: Tensor,
    c: Tensor,
    gates: Vec<f64>,
    tanh_c_new: Vec<f64>,
}

impl LstmCell {
    pub fn new(inputs: usize, hidden: usize, init_bound: f64, rng: &mut impl Rng) -> Self {
        LstmCell {
            w_input: Parameter::new(uniform_init(&[inputs, 4 * hidden], init_bound, rng)),
            w_hidden: Parameter::new(uniform_init(&[hidden, 4 * hidden], init_bound, rng)),
            bias: Parameter::new(Tensor::zeros(&[4 * hidden])),
            hidden,
        }
    }

    pub fn input_size(&self) -> usize {
        self.w_input.value.shape()[0]
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    /// One step. Accepts vectors [n], [m], [m] or batches [b, n], [b, m],
    /// [b, m]; returns (new hidden, new cell) with matching rank.
    pub fn forward(
        &self,
        x: &Tensor,
        h: &Tensor,
        c: &Tensor,
    ) -> Result<(Tensor, Tensor), NumericError> {
        let rows = self.validate(x, h, c)?;
        let (h_new, c_new, _, _) = self.step(x.data(), h.data(), c.data(), rows);
        if x.rank() == 2 {
            Ok((h_new, c_new))
        } else {
            let m = self.hidden;
            Ok((h_new.reshape(&[m])?, c_new.reshape(&[m])?))
        }
    }

    pub fn forward_cached(
        &self,
        x: &Tensor,
        h: &Tensor,
        c: &Tensor,
    ) -> Result<(Tensor, Tensor, LstmCache), NumericError> {
        let rows = self.validate(x, h, c)?;
        let (h_new, c_new, gates, tanh_c_new) = self.step(x.data(), h.data(), c.data(), rows);
        let cache = LstmCache {
            x: Tensor::from_vec(&[rows, self.input_size()], x.data().to_vec())?,
            h: Tensor::from_vec(&[rows, self.hidden], h.data().to_vec())?,
            c: Tensor::from_vec(&[rows, self.hidden], c.data().to_vec())?,
            gates,
            tanh_c_new,
        };
        Ok((h_new, c_new, cache))
    }

    fn validate(&self, x: &Tensor, h: &Tensor, c: &Tensor) -> Result<usize, NumericError> {
        let (n, m) = (self.input_size(), self.hidden);
        let rows = rows_of(x, n).ok_or_else(|| NumericError::ShapeMismatch {
            op: "lstm",
            left: x.shape().to_vec(),
            right: self.w_input.value.shape().to_vec(),
        })?;
        if rows_of(h, m) != Some(rows) || rows_of(c, m) != Some(rows) {
            return Err(NumericError::ShapeMismatch {
                op: "lstm",
                left: h.shape().to_vec(),
                right: c.shape().to_vec(),
            });
        }
        Ok(rows)
    }

    fn step(
        &self,
        x: &[f64],
        h: &[f64],
        c: &[f64],
        rows: usize,
    ) -> (Tensor, Tensor, Vec<f64>, Vec<f64>) {
        let (n, m) = (self.input_size(), self.hidden);
        let mut gates = vec![0.0; rows * 4 * m];
        gemm_nn(rows, n, 4 * m, x, self.w_input.value.data(), 0.0, &mut gates);
        gemm_nn(rows, m, 4 * m, h, self.w_hidden.value.data(), 1.0, &mut gates);
        let bias = self.bias.value.data();
        for row in gates.chunks_exact_mut(4 * m) {
            for (v, b) in row.iter_mut().zip(bias) {
                *v += b;
            }
            // Gate order: input, forget, candidate, output.
            for v in &mut row[..2 * m] {
                *v = sigmoid(*v);
            }
            for v in &mut row[2 * m..3 * m] {
                *v = v.tanh();
            }
            for v in &mut row[3 * m..] {
                *v = sigmoid(*v);
            }
        }

        let mut c_new = vec![0.0; rows * m];
        let mut tanh_c_new = vec![0.0; rows * m];
        let mut h_new = vec![0.0; rows * m];
        for b in 0..rows {
            let g = &gates[b * 4 * m..(b + 1) * 4 * m];
            let c_row = &c[b * m..(b + 1) * m];
            for j in 0..m {
                let cv = g[m + j] * c_row[j] + g[j] * g[2 * m + j];
                let tv = cv.tanh();
                c_new[b * m + j] = cv;
                tanh_c_new[b * m + j] = tv;
                h_new[b * m + j] = g[3 * m + j] * tv;
            }
        }

        let h_out = Tensor::from_vec(&[rows, m], h_new).expect("shape matches data");
        let c_out = Tensor::from_vec(&[rows, m], c_new).expect("shape matches data");
        (h_out, c_out, gates, tanh_c_new)
    }

    /// Accumulates weight gradients; returns gradients with respect to the
    /// step inputs (x, previous hidden, previous cell).
    pub fn backward(
        &mut self,
        cache: &LstmCache,
        grad_h: &Tensor,
        grad_c: &Tensor,
    ) -> Result<(Tensor, Tensor, Tensor), NumericError> {
        let (n, m) = (self.input_size(), self.hidden);
        let batch = cache.x.shape()[0];
        if grad_h.shape() != [batch, m] || grad_c.shape() != [batch, m] {
            return Err(NumericError::ShapeMismatch {
                op: "lstm backward",
                left: grad_h.shape().to_vec(),
                right: grad_c.shape().to_vec(),
            });
        }

        let mut grad_gates = vec![0.0; batch * 4 * m];
        let mut grad_c_prev = vec![0.0; batch * m];
        let dh = grad_h.data();
        let dc_ext = grad_c.data();
        for b in 0..batch {
            let g = &cache.gates[b * 4 * m..(b + 1) * 4 * m];
            let dg = &mut grad_gates[b * 4 * m..(b + 1) * 4 * m];
            let c_prev = &cache.c.data()[b * m..(b + 1) * m];
            for j in 0..m {
                let (i, f, cand, o) = (g[j], g[m + j], g[2 * m + j], g[3 * m + j]);
                let t = cache.tanh_c_new[b * m + j];
                let dh_j = dh[b * m + j];
                let dc_total = dc_ext[b * m + j] + dh_j * o * (1.0 - t * t);
                dg[3 * m + j] = dh_j * t * o * (1.0 - o);
                dg[m + j] = dc_total * c_prev[j] * f * (1.0 - f);
                dg[j] = dc_total * cand * i * (1.0 - i);
                dg[2 * m + j] = dc_total * i * (1.0 - cand * cand);
                grad_c_prev[b * m + j] = dc_total * f;
            }
        }

        gemm_tn(
            n,
            batch,
            4 * m,
            cache.x.data(),
            &grad_gates,
            1.0,
            self.w_input.grad.data_mut(),
        );
        gemm_tn(
            m,
            batch,
            4 * m,
            cache.h.data(),
            &grad_gates,
            1.0,
            self.w_hidden.grad.data_mut(),
        );
        let bias_grad = self.bias.grad.data_mut();
        for row in grad_gates.chunks_exact(4 * m) {
            for (gacc, &d) in bias_grad.iter_mut().zip(row) {
                *gacc += d;
            }
        }

        let mut grad_x = Tensor::zeros(&[batch, n]);
        gemm_nt(
            batch,
            4 * m,
            n,
            &grad_gates,
            self.w_input.value.data(),
            0.0,
            grad_x.data_mut(),
        );
        let mut grad_h_prev = Tensor::zeros(&[batch, m]);
        gemm_nt(
            batch,
            4 * m,
            m,
            &grad_gates,
            self.w_hidden.value.data(),
            0.0,
            grad_h_prev.data_mut(),
        );
        Ok((
            grad_x,
            grad_h_prev,
            Tensor::from_vec(&[batch, m], grad_c_prev)?,
        ))
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Row count of a vector or batch whose last axis must be `width`; the
/// promotion is pure metadata, no data is copied.
fn rows_of(t: &Tensor, width: usize) -> Option<usize> {
    match t.shape() {
        &[w] if w == width => Some(1),
        &[rows, w] if w == width => Some(rows),
        _ => None,
    }
}
