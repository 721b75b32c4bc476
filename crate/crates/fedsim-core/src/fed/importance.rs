//! Per-parameter importance weights estimated on the server's proxy set.
//!
//! For every proxy example the per-parameter loss gradient is taken at the
//! current global model; the element-wise squared gradients, averaged over
//! the proxy set, form a diagonal-Fisher importance estimate. Dropout is
//! disabled during estimation.

use crate::data::ProxyDataset;
use crate::error::{Error, Result};
use crate::fed::config::ImportanceEstimator;
use crate::nn::{Layout, ModelSpec, ParamVector};

/// Nonnegative per-parameter weights, congruent with the model layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceWeights {
    values: Vec<f64>,
    layout: Layout,
    estimated_at_round: usize,
}

impl ImportanceWeights {
    /// All-ones weights: the identity fallback a client uses before it has
    /// received any estimate (with a positive lambda this reduces the
    /// penalty to a plain proximal term).
    pub fn identity(layout: Layout) -> Self {
        let values = vec![1.0; layout.len()];
        ImportanceWeights {
            values,
            layout,
            estimated_at_round: 0,
        }
    }

    pub fn from_values(layout: Layout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::shape(format!(
                "importance vector has {} values but layout expects {}",
                values.len(),
                layout.len()
            )));
        }
        if let Some(&bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::numeric(format!(
                "importance weights must be finite and nonnegative, got {bad}"
            )));
        }
        Ok(ImportanceWeights {
            values,
            layout,
            estimated_at_round: 0,
        })
    }

    /// Stamps the round the estimate was produced in.
    pub fn at_round(mut self, round: usize) -> Self {
        self.estimated_at_round = round;
        self
    }

    pub fn estimated_at_round(&self) -> usize {
        self.estimated_at_round
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Errors unless the weights share `params`' layout.
    pub fn ensure_congruent(&self, params: &ParamVector) -> Result<()> {
        if self.layout != *params.layout() {
            return Err(Error::shape(
                "importance weights incongruent with parameter layout".to_string(),
            ));
        }
        Ok(())
    }
}

/// Estimates importance weights for `global` on the proxy set.
pub fn estimate_importance(
    spec: &ModelSpec,
    global: &ParamVector,
    proxy: &ProxyDataset,
    estimator: ImportanceEstimator,
) -> Result<ImportanceWeights> {
    if proxy.data.is_empty() {
        return Err(Error::domain(
            "importance estimation needs a nonempty proxy set".to_string(),
        ));
    }
    let layout = spec.layout();
    if estimator == ImportanceEstimator::Identity {
        return Ok(ImportanceWeights::identity(layout));
    }

    let mut accum = vec![0.0f64; layout.len()];
    for example in 0..proxy.data.len() {
        let batch = proxy.data.batch_of(&[example])?;
        let (_, grad) = spec.loss_and_grad(global, &batch, false, None)?;
        match estimator {
            ImportanceEstimator::SquaredGradient => {
                for (a, g) in accum.iter_mut().zip(grad.values()) {
                    *a += g * g;
                }
            }
            ImportanceEstimator::AbsGradient => {
                for (a, g) in accum.iter_mut().zip(grad.values()) {
                    *a += g.abs();
                }
            }
            ImportanceEstimator::Identity => unreachable!("returned above"),
        }
    }
    let count = proxy.data.len() as f64;
    for a in accum.iter_mut() {
        *a /= count;
    }
    ImportanceWeights::from_values(layout, accum)
}
