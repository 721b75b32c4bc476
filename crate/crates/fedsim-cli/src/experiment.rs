//! End-to-end experiment orchestration: data -> partition -> round loop ->
//! metrics. Deterministic given the config: two runs with identical
//! configs produce identical record streams.

use std::collections::HashSet;

use fedsim_core::comms::{extra_cost_ratio, TransferLedger};
use fedsim_core::data::{
    dirichlet_partition, gen_synthetic_with_noise, load_idx, sample_proxy, sample_subset,
    ClientShard, Dataset, PartitionPlan, ProxyDataset,
};
use fedsim_core::fed::{
    evaluate_initial, evaluate_initial_pooled, evaluate_personalize, run_round,
    ImportanceWeights, RoundState, Strategy,
};
use fedsim_core::nn::ModelSpec;
use fedsim_core::rng::{derive_rng, stream};

use crate::config::{DataSettings, ExperimentConfig};
use crate::error::Result;

/// One row of the metrics stream. Accuracies are absent on rounds where
/// the corresponding evaluation was not scheduled.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub initial_accuracy: Option<f64>,
    pub personalize_accuracy: Option<f64>,
    pub weight_divergence: f64,
    pub down_params: u64,
    pub up_params: u64,
    pub lr: f64,
}

/// End-of-run statistics; the final accuracies are measured on the global
/// model produced by the last round.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub final_initial_accuracy: f64,
    pub final_personalize_accuracy: f64,
    pub target_accuracy: Option<f64>,
    /// First round whose initial accuracy reached the target, if any.
    pub rounds_to_target: Option<usize>,
    /// Scalars moved in both directions over the whole run.
    pub total_params_transferred: u64,
    /// Overhead versus a plain-averaging run of the same shape; absent for
    /// zero-round runs.
    pub extra_cost_ratio_vs_fedavg: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<RoundRecord>,
    pub summary: ExperimentSummary,
}

/// Loads the configured dataset (synthetic or IDX files, sub-sampled to
/// the configured size).
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    match &cfg.data {
        DataSettings::Synthetic {
            examples,
            features,
            classes,
            noise,
        } => Ok(gen_synthetic_with_noise(
            *examples, *features, *classes, *noise, cfg.fl.seed,
        )?),
        DataSettings::Mnist {
            dir,
            examples,
            classes,
        } => {
            let images = dir.join("train-images-idx3-ubyte");
            let labels = dir.join("train-labels-idx1-ubyte");
            let full = load_idx(&images, &labels)?.with_classes(*classes)?;
            if *examples < full.len() {
                Ok(sample_subset(&full, *examples, cfg.fl.seed)?)
            } else {
                Ok(full)
            }
        }
    }
}

/// The partition and proxy set an experiment runs on.
pub struct ExperimentData {
    pub plan: PartitionPlan,
    pub shards: Vec<ClientShard>,
    pub proxy: ProxyDataset,
}

/// Partitions the dataset and draws the server proxy set.
///
/// By default the proxy is sampled from the union of the clients' training
/// splits (it overlaps client data); with `disjoint_proxy` it is held out
/// of the partition entirely.
pub fn prepare_data(cfg: &ExperimentConfig, dataset: &Dataset) -> Result<ExperimentData> {
    let fl = &cfg.fl;
    if cfg.disjoint_proxy {
        let proxy = sample_proxy(dataset, fl.proxy_fraction, fl.seed)?;
        let held_out: HashSet<usize> = proxy.indices.iter().copied().collect();
        let rest: Vec<usize> = (0..dataset.len())
            .filter(|i| !held_out.contains(i))
            .collect();
        let remainder = dataset.subset(&rest)?;
        let (plan, shards) = dirichlet_partition(&remainder, fl.clients, fl.alpha, fl.seed)?;
        Ok(ExperimentData {
            plan,
            shards,
            proxy,
        })
    } else {
        let (plan, shards) = dirichlet_partition(dataset, fl.clients, fl.alpha, fl.seed)?;
        let trains: Vec<&Dataset> = shards.iter().map(|s| &s.train).collect();
        let pool = Dataset::concat(&trains)?;
        let proxy = sample_proxy(&pool, fl.proxy_fraction, fl.seed)?;
        Ok(ExperimentData {
            plan,
            shards,
            proxy,
        })
    }
}

/// Builds the model spec the experiment trains.
pub fn build_model(cfg: &ExperimentConfig, dataset: &Dataset) -> Result<ModelSpec> {
    Ok(ModelSpec::new(
        dataset.features(),
        cfg.model.hidden.clone(),
        dataset.classes(),
    )?
    .with_dropout(cfg.model.dropout)?)
}

/// Runs the configured experiment, collecting all records in memory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_experiment_with(cfg, |_| Ok(()))
}

/// Runs the experiment, handing each record to `sink` as soon as the round
/// finishes so partial metrics survive a mid-run abort.
pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    mut sink: impl FnMut(&RoundRecord) -> Result<()>,
) -> Result<ExperimentOutput> {
    let fl = &cfg.fl;
    let dataset = load_dataset(cfg)?;
    let data = prepare_data(cfg, &dataset)?;
    let spec = build_model(cfg, &dataset)?;

    let global = spec.init_params(&mut derive_rng(fl.seed, &[stream::INIT]));
    let mut state = RoundState::new(global, fl.clients);
    let mut ledger = TransferLedger::new(spec.param_count())?;
    let mut baseline = TransferLedger::new(spec.param_count())?;
    let identity = ImportanceWeights::identity(spec.layout());

    let eval_initial = |global: &_, shards: &[ClientShard]| -> Result<f64> {
        if cfg.eval.global_test {
            Ok(evaluate_initial_pooled(&spec, global, shards)?)
        } else {
            Ok(evaluate_initial(&spec, global, shards)?)
        }
    };
    let current_omega = |state: &RoundState| -> ImportanceWeights {
        match fl.strategy {
            Strategy::FedCl => state.omega.clone().unwrap_or_else(|| identity.clone()),
            Strategy::FedAvg | Strategy::FedProx => identity.clone(),
        }
    };

    let mut records = Vec::with_capacity(fl.rounds);
    for t in 0..fl.rounds {
        let initial_accuracy = if t % cfg.eval.initial_every == 0 {
            Some(eval_initial(&state.global, &data.shards)?)
        } else {
            None
        };
        let personalize_accuracy = if t % cfg.eval.personalize_every == 0 {
            let omega = current_omega(&state);
            Some(evaluate_personalize(
                &spec,
                &state.global,
                &omega,
                &data.shards,
                fl,
                fl.round_lr(t),
            )?)
        } else {
            None
        };

        let (next, outcome) = run_round(state, &data.shards, &data.proxy, &spec, fl, &mut ledger)?;
        baseline.record_round(t, outcome.selected.len(), false)?;

        let record = RoundRecord {
            round: t,
            initial_accuracy,
            personalize_accuracy,
            weight_divergence: outcome.weight_divergence,
            down_params: outcome.down_params,
            up_params: outcome.up_params,
            lr: outcome.lr,
        };
        sink(&record)?;
        records.push(record);
        state = next;
    }

    let final_initial_accuracy = eval_initial(&state.global, &data.shards)?;
    let omega = current_omega(&state);
    let final_personalize_accuracy = evaluate_personalize(
        &spec,
        &state.global,
        &omega,
        &data.shards,
        fl,
        fl.round_lr(fl.rounds),
    )?;

    let extra = if fl.rounds > 0 {
        Some(extra_cost_ratio(&ledger, &baseline)?)
    } else {
        None
    };
    let summary = ExperimentSummary {
        final_initial_accuracy,
        final_personalize_accuracy,
        target_accuracy: cfg.eval.target_accuracy,
        rounds_to_target: cfg
            .eval
            .target_accuracy
            .and_then(|target| rounds_to_target(&records, target)),
        total_params_transferred: ledger.total(),
        extra_cost_ratio_vs_fedavg: extra,
    };

    Ok(ExperimentOutput { records, summary })
}

/// First round whose measured initial accuracy reached `target`, if any.
pub fn rounds_to_target(records: &[RoundRecord], target: f64) -> Option<usize> {
    records
        .iter()
        .find(|r| r.initial_accuracy.is_some_and(|acc| acc >= target))
        .map(|r| r.round)
}
