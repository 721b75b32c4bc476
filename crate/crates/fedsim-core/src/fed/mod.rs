//! The federated protocol engine.
//!
//! Within a round the selected clients' updates are mutually independent
//! given the immutable global-model and importance snapshots (each client
//! derives its own RNG stream), so they may run concurrently; aggregation
//! is the synchronisation barrier and the round loop itself is sequential.

mod config;
mod importance;
mod round;
mod update;

pub use config::{FLConfig, ImportanceEstimator, Strategy};
pub use importance::{estimate_importance, ImportanceWeights};
pub use round::{
    evaluate_initial, evaluate_initial_pooled, evaluate_personalize, run_round, RoundOutcome,
    RoundState,
};
pub use update::{
    aggregate, local_update, penalty_gradient, penalty_loss, sample_clients, weight_divergence,
};
