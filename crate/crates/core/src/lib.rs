//! Text readability assessment as a sequential decision problem.
//!
//! A document is exposed to an agent through a sliding five-token window of
//! feature vectors. At each step the agent either moves the window or commits
//! to a readability level; a small penalty on every move pushes it to decide
//! from as little text as possible. The agent is a convolutional recurrent
//! Q-network trained with experience replay and a periodically synchronized
//! target network.
//!
//! The crate also ships traditional readability formulas as baselines, a
//! synthetic corpus generator, and an evaluation harness that reports
//! classification and reading-effort metrics.

pub mod agent;
pub mod baselines;
pub mod env;
pub mod eval;
pub mod featurize;
pub mod numeric;
