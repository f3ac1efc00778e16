//! Finite-difference verification of analytic gradients.
//!
//! The checker perturbs sampled parameter entries by a central difference
//! step, re-evaluates a caller-supplied scalar loss, and compares the slope
//! against the gradient the backward pass produced. It is the referee for
//! every hand-written backward in this crate.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::{NumericError, Parameter};

/// Central-difference step.
pub const GRAD_CHECK_STEP: f64 = 1e-5;

/// Anything with an enumerable, stably ordered set of named parameters.
pub trait Differentiable {
    fn named_params_mut(&mut self) -> Vec<(String, &mut Parameter)>;
}

#[derive(Clone, Debug)]
pub struct ParameterCheck {
    pub name: String,
    pub samples: usize,
    pub max_rel_error: f64,
}

#[derive(Clone, Debug)]
pub struct GradientCheckReport {
    pub per_parameter: Vec<ParameterCheck>,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl GradientCheckReport {
    /// Name of the worst offender, for diagnostics.
    pub fn worst(&self) -> Option<&ParameterCheck> {
        self.per_parameter
            .iter()
            .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
    }
}

/// Compares analytic gradients (already accumulated in each parameter's
/// `grad`) against central differences of `loss`.
///
/// Per parameter tensor, `samples_per_param` entries are probed (all of them
/// for small tensors), chosen by a seeded RNG so reruns probe the same slots.
/// The relative error uses max(|analytic|, |numeric|, 1e-8) in the
/// denominator. A non-finite loss or gradient aborts with a diagnostic
/// naming the parameter.
pub fn grad_check<N: Differentiable>(
    net: &mut N,
    mut loss: impl FnMut(&mut N) -> f64,
    tolerance: f64,
    samples_per_param: usize,
    seed: u64,
) -> Result<GradientCheckReport, NumericError> {
    // Snapshot the analytic gradients before perturbation runs overwrite
    // anything.
    let analytic: Vec<(String, Vec<f64>)> = net
        .named_params_mut()
        .into_iter()
        .map(|(name, p)| (name, p.grad.data().to_vec()))
        .collect();
    for (name, grads) in &analytic {
        if !grads.iter().all(|g| g.is_finite()) {
            return Err(NumericError::NonFinite {
                context: format!("analytic gradient of {name}"),
            });
        }
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut per_parameter = Vec::with_capacity(analytic.len());
    let mut max_rel_error = 0.0f64;

    for (param_index, (name, grads)) in analytic.iter().enumerate() {
        let len = grads.len();
        let indices: Vec<usize> = if len <= samples_per_param {
            (0..len).collect()
        } else {
            rand::seq::index::sample(&mut rng, len, samples_per_param).into_vec()
        };

        let mut worst = 0.0f64;
        for &slot in &indices {
            nudge(net, param_index, slot, GRAD_CHECK_STEP);
            let plus = loss(net);
            nudge(net, param_index, slot, -2.0 * GRAD_CHECK_STEP);
            let minus = loss(net);
            nudge(net, param_index, slot, GRAD_CHECK_STEP);
            if !plus.is_finite() || !minus.is_finite() {
                return Err(NumericError::NonFinite {
                    context: format!("loss while perturbing {name}[{slot}]"),
                });
            }
            let numeric = (plus - minus) / (2.0 * GRAD_CHECK_STEP);
            let a = grads[slot];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max(rel);
        }
        max_rel_error = max_rel_error.max(worst);
        per_parameter.push(ParameterCheck {
            name: name.clone(),
            samples: indices.len(),
            max_rel_error: worst,
        });
    }

    Ok(GradientCheckReport {
        per_parameter,
        max_rel_error,
        tolerance,
        passed: max_rel_error < tolerance,
    })
}

fn nudge<N: Differentiable>(net: &mut N, param_index: usize, slot: usize, delta: f64) {
    let mut params = net.named_params_mut();
    params[param_index].1.value.data_mut()[slot] += delta;
}
