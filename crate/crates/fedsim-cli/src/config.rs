//! TOML experiment configuration.
//!
//! Every key is optional; an empty file yields the default protocol
//! (`K=10, C=0.2, E=2, B=64, lr0=0.005, decay=0.99, lambda=0.5`) on a
//! synthetic 2000-example, 784-feature, 10-class dataset. Unknown keys are
//! rejected, and range violations name the offending key.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use fedsim_core::data::DEFAULT_NOISE;
use fedsim_core::fed::{FLConfig, ImportanceEstimator, Strategy};

use crate::error::{CliError, Result};

/// Environment variable that overrides `data.dir` for IDX ingestion.
pub const DATA_DIR_ENV: &str = "FEDSIM_DATA_DIR";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ConfigFile {
    protocol: ProtocolSection,
    data: DataSection,
    model: ModelSection,
    eval: EvalSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ProtocolSection {
    clients: usize,
    client_fraction: f64,
    local_epochs: usize,
    batch_size: usize,
    lr0: f64,
    lr_decay: f64,
    lambda: f64,
    omega_interval: usize,
    strategy: StrategyName,
    rounds: usize,
    seed: u64,
    importance: EstimatorName,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        let fl = FLConfig::default();
        ProtocolSection {
            clients: fl.clients,
            client_fraction: fl.client_fraction,
            local_epochs: fl.local_epochs,
            batch_size: fl.batch_size,
            lr0: fl.lr0,
            lr_decay: fl.lr_decay,
            lambda: fl.lambda,
            omega_interval: fl.omega_interval,
            strategy: StrategyName::FedCl,
            rounds: fl.rounds,
            seed: fl.seed,
            importance: EstimatorName::SquaredGradient,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum StrategyName {
    FedAvg,
    FedProx,
    FedCl,
}

impl From<StrategyName> for Strategy {
    fn from(name: StrategyName) -> Strategy {
        match name {
            StrategyName::FedAvg => Strategy::FedAvg,
            StrategyName::FedProx => Strategy::FedProx,
            StrategyName::FedCl => Strategy::FedCl,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum EstimatorName {
    SquaredGradient,
    AbsGradient,
    Identity,
}

impl From<EstimatorName> for ImportanceEstimator {
    fn from(name: EstimatorName) -> ImportanceEstimator {
        match name {
            EstimatorName::SquaredGradient => ImportanceEstimator::SquaredGradient,
            EstimatorName::AbsGradient => ImportanceEstimator::AbsGradient,
            EstimatorName::Identity => ImportanceEstimator::Identity,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct DataSection {
    source: SourceName,
    alpha: f64,
    proxy_fraction: f64,
    disjoint_proxy: bool,
    examples: usize,
    features: usize,
    classes: usize,
    noise: f64,
    dir: PathBuf,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            source: SourceName::Synthetic,
            alpha: 1.0,
            proxy_fraction: 0.01,
            disjoint_proxy: false,
            examples: 2000,
            features: 784,
            classes: 10,
            noise: DEFAULT_NOISE,
            dir: PathBuf::from("data"),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum SourceName {
    Synthetic,
    Mnist,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ModelSection {
    hidden: Vec<usize>,
    dropout: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            hidden: vec![64],
            dropout: 0.0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct EvalSection {
    initial_every: usize,
    personalize_every: usize,
    global_test: bool,
    target_accuracy: Option<f64>,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            initial_every: 1,
            personalize_every: 10,
            global_test: false,
            target_accuracy: None,
        }
    }
}

/// Where the experiment's examples come from.
#[derive(Debug, Clone)]
pub enum DataSettings {
    /// Gaussian-blob generator; runs with no external files.
    Synthetic {
        examples: usize,
        features: usize,
        classes: usize,
        noise: f64,
    },
    /// `train-images-idx3-ubyte` / `train-labels-idx1-ubyte` under `dir`,
    /// sub-sampled to `examples` rows when the files hold more.
    Mnist {
        dir: PathBuf,
        examples: usize,
        classes: usize,
    },
}

#[derive(Debug, Clone)]
pub struct ModelSettings {
    pub hidden: Vec<usize>,
    pub dropout: f64,
}

#[derive(Debug, Clone)]
pub struct EvalSettings {
    /// Initial accuracy is measured every this many rounds.
    pub initial_every: usize,
    /// Personalize accuracy is measured every this many rounds.
    pub personalize_every: usize,
    /// Evaluate on the pooled test set instead of the per-client mean.
    pub global_test: bool,
    /// Target for the rounds-to-target summary statistic.
    pub target_accuracy: Option<f64>,
}

/// Fully validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub fl: FLConfig,
    pub data: DataSettings,
    pub disjoint_proxy: bool,
    pub model: ModelSettings,
    pub eval: EvalSettings,
}

fn ensure(cond: bool, key: &str, message: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::config_value(key, message))
    }
}

impl ExperimentConfig {
    /// Parses and validates a TOML config file. `FEDSIM_DATA_DIR`, when
    /// set, overrides `data.dir`.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::ConfigRead {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_toml(&text).map_err(|e| match e {
            CliError::ConfigParse { message, .. } => CliError::ConfigParse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })?;
        if let DataSettings::Mnist { dir, .. } = &mut config.data {
            if let Some(env_dir) = std::env::var_os(DATA_DIR_ENV) {
                *dir = PathBuf::from(env_dir);
            }
        }
        Ok(config)
    }

    /// Parses and validates config text.
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| CliError::ConfigParse {
            path: PathBuf::new(),
            message: e.to_string(),
        })?;
        Self::from_parts(file)
    }

    /// The all-defaults configuration.
    pub fn default_config() -> Self {
        Self::from_toml("").expect("defaults validate")
    }

    fn from_parts(file: ConfigFile) -> Result<Self> {
        let p = &file.protocol;
        ensure(p.clients >= 1, "protocol.clients", "must be at least 1")?;
        ensure(
            p.client_fraction.is_finite() && p.client_fraction > 0.0 && p.client_fraction <= 1.0,
            "protocol.client_fraction",
            "must be in (0, 1]",
        )?;
        ensure(p.batch_size >= 1, "protocol.batch_size", "must be at least 1")?;
        ensure(
            p.lr0.is_finite() && p.lr0 > 0.0,
            "protocol.lr0",
            "must be positive",
        )?;
        ensure(
            p.lr_decay.is_finite() && p.lr_decay > 0.0 && p.lr_decay <= 1.0,
            "protocol.lr_decay",
            "must be in (0, 1]",
        )?;
        ensure(
            p.lambda.is_finite() && p.lambda >= 0.0,
            "protocol.lambda",
            "must be nonnegative",
        )?;
        ensure(
            p.omega_interval >= 1,
            "protocol.omega_interval",
            "must be at least 1",
        )?;

        let d = &file.data;
        ensure(
            d.alpha.is_finite() && d.alpha > 0.0,
            "data.alpha",
            "must be positive",
        )?;
        ensure(
            d.proxy_fraction.is_finite() && d.proxy_fraction > 0.0 && d.proxy_fraction <= 1.0,
            "data.proxy_fraction",
            "must be in (0, 1]",
        )?;
        ensure(d.examples >= 1, "data.examples", "must be at least 1")?;
        ensure(d.features >= 1, "data.features", "must be at least 1")?;
        ensure(d.classes >= 2, "data.classes", "must be at least 2")?;
        ensure(
            d.noise.is_finite() && d.noise >= 0.0,
            "data.noise",
            "must be nonnegative",
        )?;

        let m = &file.model;
        ensure(
            m.hidden.iter().all(|&h| h >= 1),
            "model.hidden",
            "layer widths must be positive",
        )?;
        ensure(
            (0.0..1.0).contains(&m.dropout),
            "model.dropout",
            "must be in [0, 1)",
        )?;

        let e = &file.eval;
        ensure(
            e.initial_every >= 1,
            "eval.initial_every",
            "must be at least 1",
        )?;
        ensure(
            e.personalize_every >= 1,
            "eval.personalize_every",
            "must be at least 1",
        )?;
        if let Some(t) = e.target_accuracy {
            ensure(
                t.is_finite(),
                "eval.target_accuracy",
                "must be a finite accuracy",
            )?;
        }

        let fl = FLConfig {
            clients: p.clients,
            client_fraction: p.client_fraction,
            local_epochs: p.local_epochs,
            batch_size: p.batch_size,
            lr0: p.lr0,
            lr_decay: p.lr_decay,
            lambda: p.lambda,
            omega_interval: p.omega_interval,
            strategy: p.strategy.into(),
            alpha: d.alpha,
            proxy_fraction: d.proxy_fraction,
            seed: p.seed,
            rounds: p.rounds,
            estimator: p.importance.into(),
        };

        let data = match d.source {
            SourceName::Synthetic => DataSettings::Synthetic {
                examples: d.examples,
                features: d.features,
                classes: d.classes,
                noise: d.noise,
            },
            SourceName::Mnist => DataSettings::Mnist {
                dir: d.dir.clone(),
                examples: d.examples,
                classes: d.classes,
            },
        };

        Ok(ExperimentConfig {
            fl,
            data,
            disjoint_proxy: d.disjoint_proxy,
            model: ModelSettings {
                hidden: m.hidden.clone(),
                dropout: m.dropout,
            },
            eval: EvalSettings {
                initial_every: e.initial_every,
                personalize_every: e.personalize_every,
                global_test: e.global_test,
                target_accuracy: e.target_accuracy,
            },
        })
    }
}
