//! The server round loop: sample clients, run local updates against the
//! current global model, aggregate, and account the traffic.

use crate::comms::TransferLedger;
use crate::data::{ClientShard, Dataset, ProxyDataset};
use crate::error::{Error, Result};
use crate::fed::config::{FLConfig, Strategy};
use crate::fed::importance::{estimate_importance, ImportanceWeights};
use crate::fed::update::{aggregate, local_update, sample_clients, weight_divergence};
use crate::nn::{ModelSpec, ParamVector};
use crate::rng::{derive_rng, stream};

/// Mutable protocol state carried between rounds.
#[derive(Debug, Clone)]
pub struct RoundState {
    /// Next round index `t`.
    pub round: usize,
    /// Current global model.
    pub global: ParamVector,
    /// Clients selected in the most recent round.
    pub selected: Vec<usize>,
    /// Most recent server-side importance estimate (FedCL only).
    pub omega: Option<ImportanceWeights>,
    /// Last importance estimate each client received, if any. Clients keep
    /// reusing theirs between distribution rounds.
    client_omega: Vec<Option<ImportanceWeights>>,
}

impl RoundState {
    pub fn new(global: ParamVector, clients: usize) -> Self {
        RoundState {
            round: 0,
            global,
            selected: Vec::new(),
            omega: None,
            client_omega: vec![None; clients],
        }
    }

    /// The importance weights client `k` would train with right now:
    /// its last-received estimate, or the identity fallback.
    pub fn omega_for_client(&self, client: usize) -> ImportanceWeights {
        self.client_omega[client]
            .clone()
            .unwrap_or_else(|| ImportanceWeights::identity(self.global.layout().clone()))
    }
}

/// Telemetry for one executed round.
#[derive(Debug, Clone)]
pub struct RoundOutcome {
    /// Round index that was executed.
    pub round: usize,
    /// Clients that participated.
    pub selected: Vec<usize>,
    /// Learning rate used by every client this round.
    pub lr: f64,
    /// Mean distance of post-update local models from the global model.
    pub weight_divergence: f64,
    /// Whether importance weights were estimated and shipped this round.
    pub omega_distributed: bool,
    /// Scalars moved server-to-clients.
    pub down_params: u64,
    /// Scalars moved clients-to-server.
    pub up_params: u64,
}

/// Executes round `state.round` and advances the state.
///
/// FedCL estimates importance weights on the proxy set and distributes
/// them to the selected clients every `omega_interval` rounds (the extra
/// downlink is billed to the ledger); in between, selected clients reuse
/// the last estimate they received, falling back to the identity. FedProx
/// trains every client against all-ones importance; FedAvg trains with no
/// penalty.
pub fn run_round(
    mut state: RoundState,
    shards: &[ClientShard],
    proxy: &ProxyDataset,
    spec: &ModelSpec,
    cfg: &FLConfig,
    ledger: &mut TransferLedger,
) -> Result<(RoundState, RoundOutcome)> {
    if shards.len() != cfg.clients {
        return Err(Error::shape(format!(
            "{} shards for {} configured clients",
            shards.len(),
            cfg.clients
        )));
    }
    let round = state.round;
    let lr = cfg.round_lr(round);
    let selected = sample_clients(cfg.clients, cfg.client_fraction, round, cfg.seed);

    let omega_distributed = cfg.strategy == Strategy::FedCl && round % cfg.omega_interval == 0;
    if omega_distributed {
        let omega =
            estimate_importance(spec, &state.global, proxy, cfg.estimator)?.at_round(round);
        for &client in &selected {
            state.client_omega[client] = Some(omega.clone());
        }
        state.omega = Some(omega);
    }

    let identity = ImportanceWeights::identity(state.global.layout().clone());
    let mut updates = Vec::with_capacity(selected.len());
    for &client in &selected {
        let omega = match cfg.strategy {
            Strategy::FedCl => state.client_omega[client].as_ref().unwrap_or(&identity),
            Strategy::FedAvg | Strategy::FedProx => &identity,
        };
        let mut rng = derive_rng(cfg.seed, &[stream::CLIENT, round as u64, client as u64]);
        let params = local_update(
            spec,
            &state.global,
            omega,
            &shards[client],
            cfg,
            lr,
            &mut rng,
        )?;
        updates.push((params, shards[client].train.len()));
    }

    let locals: Vec<ParamVector> = updates.iter().map(|(p, _)| p.clone()).collect();
    let divergence = weight_divergence(&locals, &state.global)?;
    let new_global = aggregate(&updates)?;

    let transfer = *ledger.record_round(round, selected.len(), omega_distributed)?;

    state.global = new_global;
    state.selected = selected.clone();
    state.round = round + 1;

    Ok((
        state,
        RoundOutcome {
            round,
            selected,
            lr,
            weight_divergence: divergence,
            omega_distributed,
            down_params: transfer.down_params,
            up_params: transfer.up_params,
        },
    ))
}

/// Unweighted mean, over all clients, of the global model's accuracy on
/// each client's local test split — measured before any local training.
pub fn evaluate_initial(
    spec: &ModelSpec,
    global: &ParamVector,
    shards: &[ClientShard],
) -> Result<f64> {
    if shards.is_empty() {
        return Err(Error::domain("no shards to evaluate".to_string()));
    }
    let mut sum = 0.0;
    for shard in shards {
        if shard.test.is_empty() {
            return Err(Error::domain(format!(
                "client {} has an empty test split",
                shard.client_id
            )));
        }
        sum += spec.accuracy(global, &shard.test.as_batch())?;
    }
    Ok(sum / shards.len() as f64)
}

/// Accuracy of the global model over all clients' test examples pooled
/// into one set (weights clients by their test-set size).
pub fn evaluate_initial_pooled(
    spec: &ModelSpec,
    global: &ParamVector,
    shards: &[ClientShard],
) -> Result<f64> {
    let tests: Vec<&Dataset> = shards.iter().map(|s| &s.test).collect();
    let pooled = Dataset::concat(&tests)?;
    if pooled.is_empty() {
        return Err(Error::domain("no test examples to evaluate".to_string()));
    }
    spec.accuracy(global, &pooled.as_batch())
}

/// Unweighted mean, over all clients, of each client's accuracy on its own
/// test split after one local training pass from the global model.
pub fn evaluate_personalize(
    spec: &ModelSpec,
    global: &ParamVector,
    omega: &ImportanceWeights,
    shards: &[ClientShard],
    cfg: &FLConfig,
    round_lr: f64,
) -> Result<f64> {
    if shards.is_empty() {
        return Err(Error::domain("no shards to evaluate".to_string()));
    }
    let mut sum = 0.0;
    for shard in shards {
        if shard.test.is_empty() {
            return Err(Error::domain(format!(
                "client {} has an empty test split",
                shard.client_id
            )));
        }
        let mut rng = derive_rng(cfg.seed, &[stream::PERSONALIZE, shard.client_id as u64]);
        let personalized = if cfg.local_epochs == 0 {
            global.clone()
        } else {
            local_update(spec, global, omega, shard, cfg, round_lr, &mut rng)?
        };
        sum += spec.accuracy(&personalized, &shard.test.as_batch())?;
    }
    Ok(sum / shards.len() as f64)
}
