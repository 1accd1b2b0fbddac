//! Per-transaction lifecycle records.

use std::fmt;

use crate::relay::NodeId;
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TxKind {
    Honest,
    AdversarialTb,
    /// An attack aggregate `T_A + T_B`.
    Aggregate,
}

impl fmt::Display for TxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TxKind::Honest => "honest",
            TxKind::AdversarialTb => "adversarial_tb",
            TxKind::Aggregate => "aggregate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TxStatus {
    Included,
    /// Can no longer be mined: it lost a kernel conflict or no pool holds it.
    ExcludedByConflict,
    PendingAtHorizon,
}

impl fmt::Display for TxStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TxStatus::Included => "included",
            TxStatus::ExcludedByConflict => "excluded_by_conflict",
            TxStatus::PendingAtHorizon => "pending_at_horizon",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TxRecord {
    pub tx_id: u64,
    pub origin: NodeId,
    pub kind: TxKind,
    pub created: SimTime,
    pub first_fluff: Option<SimTime>,
    pub included: Option<SimTime>,
    pub stem_hops: u32,
    pub was_attacked: bool,
    pub fee: u64,
    pub status: TxStatus,
}

impl TxRecord {
    pub fn new(tx_id: u64, origin: NodeId, kind: TxKind, created: SimTime, fee: u64) -> Self {
        TxRecord {
            tx_id,
            origin,
            kind,
            created,
            first_fluff: None,
            included: None,
            stem_hops: 0,
            was_attacked: false,
            fee,
            status: TxStatus::PendingAtHorizon,
        }
    }

    /// Creation to block timestamp, in milliseconds.
    pub fn latency_ms(&self) -> Option<u64> {
        self.included.map(|t| t - self.created)
    }

    /// `included >= first_fluff >= created` wherever both ends exist.
    pub fn is_ordered(&self) -> bool {
        let fluff_ok = self.first_fluff.is_none_or(|f| f >= self.created);
        let incl_ok = match (self.first_fluff, self.included) {
            (Some(f), Some(i)) => i >= f,
            (None, Some(i)) => i >= self.created,
            _ => true,
        };
        fluff_ok && incl_ok
    }
}
