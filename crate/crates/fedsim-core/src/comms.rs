//! Exact accounting of parameters moved between server and clients.
//!
//! Costs are counted in parameter scalars, not bytes: the overhead ratios
//! of interest are multiples of the model size and stay exact in integer
//! arithmetic regardless of serialization. A baseline round moves `m * P`
//! scalars down (the global model to each selected client) and `m * P` up;
//! a round that also distributes importance weights doubles the downlink.

use crate::error::{Error, Result};

/// Scalars moved in one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundTransfer {
    /// Round index.
    pub round: usize,
    /// Selected clients this round.
    pub selected: usize,
    /// Server-to-client scalars.
    pub down_params: u64,
    /// Client-to-server scalars.
    pub up_params: u64,
}

impl RoundTransfer {
    pub fn total(&self) -> u64 {
        self.down_params + self.up_params
    }
}

/// Append-only ledger of per-round transfers for one experiment.
#[derive(Debug, Clone, Default)]
pub struct TransferLedger {
    param_count: u64,
    entries: Vec<RoundTransfer>,
}

impl TransferLedger {
    /// Creates a ledger for a model of `param_count` scalars.
    pub fn new(param_count: usize) -> Result<Self> {
        if param_count == 0 {
            return Err(Error::domain(
                "ledger needs a positive model parameter count".to_string(),
            ));
        }
        Ok(TransferLedger {
            param_count: param_count as u64,
            entries: Vec::new(),
        })
    }

    /// Scalars per model.
    pub fn param_count(&self) -> u64 {
        self.param_count
    }

    /// Appends one round: `m * P` up, `m * P` down, doubled downlink when
    /// the importance weights ride along.
    pub fn record_round(
        &mut self,
        round: usize,
        selected: usize,
        omega_distributed: bool,
    ) -> Result<&RoundTransfer> {
        if selected == 0 {
            return Err(Error::domain(
                "a round must select at least one client".to_string(),
            ));
        }
        let m = selected as u64;
        let down_factor = if omega_distributed { 2 } else { 1 };
        self.entries.push(RoundTransfer {
            round,
            selected,
            down_params: m * self.param_count * down_factor,
            up_params: m * self.param_count,
        });
        Ok(self.entries.last().expect("just pushed"))
    }

    pub fn entries(&self) -> &[RoundTransfer] {
        &self.entries
    }

    pub fn rounds(&self) -> usize {
        self.entries.len()
    }

    pub fn total_down(&self) -> u64 {
        self.entries.iter().map(|e| e.down_params).sum()
    }

    pub fn total_up(&self) -> u64 {
        self.entries.iter().map(|e| e.up_params).sum()
    }

    /// All scalars moved, both directions.
    pub fn total(&self) -> u64 {
        self.total_down() + self.total_up()
    }
}

/// Ratio of total scalars moved versus a baseline ledger covering the same
/// rounds with the same selections and model size.
pub fn extra_cost_ratio(ledger: &TransferLedger, baseline: &TransferLedger) -> Result<f64> {
    if ledger.rounds() != baseline.rounds() {
        return Err(Error::domain(format!(
            "ledger covers {} rounds but baseline covers {}",
            ledger.rounds(),
            baseline.rounds()
        )));
    }
    if ledger.param_count != baseline.param_count {
        return Err(Error::domain(
            "ledgers account different model sizes".to_string(),
        ));
    }
    for (a, b) in ledger.entries.iter().zip(&baseline.entries) {
        if a.selected != b.selected {
            return Err(Error::domain(format!(
                "round {}: ledger selected {} clients but baseline {}",
                a.round, a.selected, b.selected
            )));
        }
    }
    if baseline.total() == 0 {
        return Err(Error::domain(
            "baseline ledger records no transfers".to_string(),
        ));
    }
    Ok(ledger.total() as f64 / baseline.total() as f64)
}
