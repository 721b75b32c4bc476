//! Protocol hyperparameters and strategy selection.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Aggregation strategy run by the round loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Plain weighted averaging; local updates carry no penalty.
    FedAvg,
    /// Proximal local updates: all-ones importance, coefficient `mu = 2 * lambda`.
    FedProx,
    /// Continual local training against server-estimated importance weights.
    FedCl,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fedavg" => Ok(Strategy::FedAvg),
            "fedprox" => Ok(Strategy::FedProx),
            "fedcl" => Ok(Strategy::FedCl),
            other => Err(Error::domain(format!(
                "unknown strategy {other:?}; expected fedavg, fedprox, or fedcl"
            ))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::FedAvg => "fedavg",
            Strategy::FedProx => "fedprox",
            Strategy::FedCl => "fedcl",
        })
    }
}

/// How per-parameter importance is reduced from per-example gradients.
///
/// The reduction is pluggable so alternatives can be compared; the default
/// is the squared gradient (a diagonal-Fisher estimate).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ImportanceEstimator {
    /// Mean of element-wise squared gradients over the proxy set.
    #[default]
    SquaredGradient,
    /// Mean of element-wise absolute gradients.
    AbsGradient,
    /// All-ones weights, ignoring the proxy set.
    Identity,
}

impl FromStr for ImportanceEstimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared-gradient" => Ok(ImportanceEstimator::SquaredGradient),
            "abs-gradient" => Ok(ImportanceEstimator::AbsGradient),
            "identity" => Ok(ImportanceEstimator::Identity),
            other => Err(Error::domain(format!(
                "unknown importance estimator {other:?}; expected squared-gradient, abs-gradient, or identity"
            ))),
        }
    }
}

impl fmt::Display for ImportanceEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ImportanceEstimator::SquaredGradient => "squared-gradient",
            ImportanceEstimator::AbsGradient => "abs-gradient",
            ImportanceEstimator::Identity => "identity",
        })
    }
}

/// All protocol hyperparameters for one experiment.
#[derive(Debug, Clone)]
pub struct FLConfig {
    /// Total number of clients (K).
    pub clients: usize,
    /// Fraction of clients selected per round (C), in (0, 1].
    pub client_fraction: f64,
    /// Local epochs per update (E).
    pub local_epochs: usize,
    /// Local mini-batch size (B).
    pub batch_size: usize,
    /// Initial learning rate.
    pub lr0: f64,
    /// Multiplicative learning-rate factor per round.
    pub lr_decay: f64,
    /// Penalty coefficient (lambda), >= 0.
    pub lambda: f64,
    /// Rounds between importance estimations/distributions (N), >= 1.
    pub omega_interval: usize,
    /// Aggregation strategy.
    pub strategy: Strategy,
    /// Dirichlet concentration used for partitioning.
    pub alpha: f64,
    /// Fraction of pooled training data sampled as the server proxy set.
    pub proxy_fraction: f64,
    /// Experiment seed; every random stream derives from it.
    pub seed: u64,
    /// Total communication rounds.
    pub rounds: usize,
    /// Importance-weight reduction.
    pub estimator: ImportanceEstimator,
}

impl Default for FLConfig {
    fn default() -> Self {
        FLConfig {
            clients: 10,
            client_fraction: 0.2,
            local_epochs: 2,
            batch_size: 64,
            lr0: 0.005,
            lr_decay: 0.99,
            lambda: 0.5,
            omega_interval: 1,
            strategy: Strategy::FedCl,
            alpha: 1.0,
            proxy_fraction: 0.01,
            seed: 0,
            rounds: 30,
            estimator: ImportanceEstimator::SquaredGradient,
        }
    }
}

impl FLConfig {
    /// Clients selected each round: `max(round(C * K), 1)`.
    pub fn selected_per_round(&self) -> usize {
        ((self.client_fraction * self.clients as f64).round() as usize).max(1)
    }

    /// Learning rate for round `t`: `lr0 * decay^t`.
    pub fn round_lr(&self, round: usize) -> f64 {
        self.lr0 * self.lr_decay.powi(round as i32)
    }

    /// Penalty coefficient after strategy resolution: FedAvg trains with
    /// no penalty regardless of `lambda`.
    pub fn effective_lambda(&self) -> f64 {
        match self.strategy {
            Strategy::FedAvg => 0.0,
            Strategy::FedProx | Strategy::FedCl => self.lambda,
        }
    }

    /// Checks every field against its documented range.
    pub fn validate(&self) -> Result<()> {
        if self.clients == 0 {
            return Err(Error::domain("clients must be positive".to_string()));
        }
        if !self.client_fraction.is_finite()
            || self.client_fraction <= 0.0
            || self.client_fraction > 1.0
        {
            return Err(Error::domain(format!(
                "client_fraction {} outside (0, 1]",
                self.client_fraction
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::domain("batch_size must be positive".to_string()));
        }
        if !self.lr0.is_finite() || self.lr0 <= 0.0 {
            return Err(Error::domain(format!("lr0 {} must be positive", self.lr0)));
        }
        if !self.lr_decay.is_finite() || self.lr_decay <= 0.0 || self.lr_decay > 1.0 {
            return Err(Error::domain(format!(
                "lr_decay {} outside (0, 1]",
                self.lr_decay
            )));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::domain(format!(
                "lambda {} must be nonnegative",
                self.lambda
            )));
        }
        if self.omega_interval == 0 {
            return Err(Error::domain(
                "omega_interval must be at least 1".to_string(),
            ));
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return Err(Error::domain(format!(
                "alpha {} must be positive",
                self.alpha
            )));
        }
        if !self.proxy_fraction.is_finite()
            || self.proxy_fraction <= 0.0
            || self.proxy_fraction > 1.0
        {
            return Err(Error::domain(format!(
                "proxy_fraction {} outside (0, 1]",
                self.proxy_fraction
            )));
        }
        Ok(())
    }
}
