//! Adam optimizer with bias-corrected moment estimates.

use super::Parameter;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// Applies one Adam update to each parameter from its accumulated gradient.
/// Gradients are left untouched; callers clear them between batches.
pub fn adam_step<'a>(params: impl IntoIterator<Item = &'a mut Parameter>, learning_rate: f64) {
    for param in params {
        param.steps += 1;
        let t = param.steps as i32;
        let bias1 = 1.0 - ADAM_BETA1.powi(t);
        let bias2 = 1.0 - ADAM_BETA2.powi(t);
        let m = param.moment1.data_mut();
        let v = param.moment2.data_mut();
        let g = param.grad.data();
        for ((m, v), (&g, value)) in m
            .iter_mut()
            .zip(v.iter_mut())
            .zip(g.iter().zip(param.value.data_mut()))
        {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *value -= learning_rate * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
        }
    }
}
