//! Minimal dense neural-network engine.
//!
//! Pure functions over immutable inputs: the RNG is passed explicitly, so
//! every operation is safe to call concurrently with distinct streams.

mod model;
mod params;

pub use model::{Batch, ModelSpec};
pub use params::{Layout, ParamVector, Segment};
