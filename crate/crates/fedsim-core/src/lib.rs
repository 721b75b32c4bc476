//! Deterministic, single-process federated-learning simulator.
//!
//! The crate is organised around the life cycle of a simulated FL experiment:
//!
//! - [`nn`] — a minimal dense neural-network engine (forward pass, softmax
//!   cross-entropy, exact analytic gradients, SGD) over flat
//!   [`nn::ParamVector`]s. All arithmetic is `f64` so that cross-strategy
//!   equality checks are meaningful at the bit level.
//! - [`data`] — dataset ingestion (IDX files, a synthetic generator),
//!   Dirichlet non-IID partitioning across clients, and proxy-set sampling.
//! - [`fed`] — the protocol engine: importance estimation on the server's
//!   proxy set, strategy-parameterised client updates (FedAvg, FedProx,
//!   FedCL), client sampling, weighted aggregation, and the round loop.
//! - [`comms`] — an exact ledger of parameter scalars moved between server
//!   and clients each round.
//!
//! # Determinism
//!
//! Every randomised operation takes either an explicit seed or a
//! [`rand_chacha::ChaCha8Rng`]. Independent streams are derived from the
//! experiment seed with [`rng::derive_rng`], keyed by role tags plus round
//! and client indices, so client updates are order-independent and two runs
//! with the same configuration produce bit-identical results.

pub mod comms;
pub mod data;
pub mod error;
pub mod fed;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};
