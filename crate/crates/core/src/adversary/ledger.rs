use std::fmt;

use crate::mw::{KernelId, KernelSet};
use crate::net::ChainState;
use crate::relay::{NodeId, TxRef};
use crate::time::SimTime;

#[derive(Debug, Clone)]
pub struct AttackEntry {
    pub node: NodeId,
    pub attacked_at: SimTime,
    /// Kernel sets of the T_As covered by this T_B (several in batch mode).
    pub victims: Vec<KernelSet>,
    pub victim_fee: u64,
    pub victim_size: u64,
    pub tb_kernel: KernelId,
    pub tb_fee: u64,
    pub tb: TxRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackOutcome {
    TbIncluded,
    AggregateIncluded,
    BothAbsent,
}

impl fmt::Display for AttackOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttackOutcome::TbIncluded => "tb_included",
            AttackOutcome::AggregateIncluded => "aggregate_included",
            AttackOutcome::BothAbsent => "both_absent",
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct AttackLedger {
    pub entries: Vec<AttackEntry>,
}

impl AttackLedger {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn outcome(&self, entry: &AttackEntry, chain: &ChainState) -> AttackOutcome {
        match chain.kernels_of_tx_with(entry.tb_kernel) {
            None => AttackOutcome::BothAbsent,
            Some(n) if n > 1 => AttackOutcome::AggregateIncluded,
            Some(_) => AttackOutcome::TbIncluded,
        }
    }

    /// Whether none of the victim's kernels reached the chain.
    pub fn victim_excluded(victim: &KernelSet, chain: &ChainState) -> bool {
        victim.ids().iter().all(|k| !chain.contains(*k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostSummary {
    pub attacks: usize,
    pub attacked_txs: usize,
    pub total_fees: u64,
    pub excluded: usize,
    /// 0 when nothing was excluded.
    pub cost_per_excluded: f64,
}

pub fn attack_cost_summary(ledger: &AttackLedger, chain: &ChainState) -> CostSummary {
    let mut s = CostSummary {
        attacks: ledger.entries.len(),
        ..CostSummary::default()
    };
    for e in &ledger.entries {
        s.total_fees += e.tb_fee;
        s.attacked_txs += e.victims.len();
        s.excluded += e
            .victims
            .iter()
            .filter(|v| AttackLedger::victim_excluded(v, chain))
            .count();
    }
    if s.excluded > 0 {
        s.cost_per_excluded = s.total_fees as f64 / s.excluded as f64;
    }
    s
}
