//! Linear epsilon annealing.

use super::AgentError;

/// Linearly decays epsilon from `initial` to `final_value` over
/// `anneal_span` episodes, then holds it there.
#[derive(Clone, Copy, Debug)]
pub struct EpsilonSchedule {
    initial: f64,
    final_value: f64,
    anneal_span: usize,
}

impl EpsilonSchedule {
    pub fn new(initial: f64, final_value: f64, anneal_span: usize) -> Result<Self, AgentError> {
        if !(0.0..=1.0).contains(&initial)
            || !(0.0..=1.0).contains(&final_value)
            || final_value > initial
        {
            return Err(AgentError::InvalidHyperparameters(
                "epsilon schedule must decay within [0, 1]".to_string(),
            ));
        }
        if anneal_span == 0 {
            return Err(AgentError::InvalidHyperparameters(
                "anneal_span must be at least 1".to_string(),
            ));
        }
        Ok(EpsilonSchedule {
            initial,
            final_value,
            anneal_span,
        })
    }

    /// Epsilon for a 0-based episode number. Episodes at or past the span
    /// return the final value exactly.
    pub fn value(&self, episode: usize) -> f64 {
        if episode >= self.anneal_span {
            return self.final_value;
        }
        let t = episode as f64 / self.anneal_span as f64;
        self.initial + (self.final_value - self.initial) * t
    }
}
