//! Per-node transaction relay: a stempool/fluffpool state machine that
//! aggregates stem transactions, forwards them along one peer at a time and
//! broadcasts them once fluffed.

mod node;
mod pools;

pub use node::NodeState;
pub use pools::{EntryId, FluffEntry, Fluffpool, Priority, StemEntry, Stempool};

use std::fmt;
use std::sync::Arc;

use crate::mw::Transaction;
use crate::time::SimTime;

pub type TxRef = Arc<Transaction>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Uniform choice among `peers` other than `avoid`; `avoid` itself only when
/// it is the sole peer.
pub fn pick_stem_peer<R: rand::Rng + ?Sized>(
    peers: &[NodeId],
    avoid: Option<NodeId>,
    rng: &mut R,
) -> Option<NodeId> {
    let skip = avoid.filter(|a| peers.len() > 1 && peers.contains(a));
    let n = peers.len() - usize::from(skip.is_some());
    if n == 0 {
        return None;
    }
    let mut i = rng.random_range(0..n as u32) as usize;
    if let Some(a) = skip {
        let pos = peers.iter().position(|p| *p == a).expect("contained");
        if i >= pos {
            i += 1;
        }
    }
    Some(peers[i])
}

/// Relay protocol parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayParams {
    pub fluff_probability: f64,
    pub timeout_min_ms: u64,
    pub timeout_max_ms: u64,
    pub aggregation_time_ms: u64,
    pub outputs_min: usize,
    pub outputs_max: usize,
    pub fluffpool_capacity: u64,
}

impl Default for RelayParams {
    fn default() -> Self {
        RelayParams {
            fluff_probability: 0.1,
            timeout_min_ms: 20_000,
            timeout_max_ms: 50_000,
            aggregation_time_ms: 10_000,
            outputs_min: 5,
            outputs_max: 40,
            fluffpool_capacity: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("fluff_probability must be in (0, 1], got {0}")]
    FluffProbability(f64),
    #[error("timeout_min ({min} ms) exceeds timeout_max ({max} ms)")]
    Timeouts { min: u64, max: u64 },
    #[error("outputs_min ({min}) exceeds outputs_max ({max})")]
    Outputs { min: usize, max: usize },
}

impl RelayParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let q = self.fluff_probability;
        if !(q > 0.0 && q <= 1.0) {
            return Err(ParamError::FluffProbability(q));
        }
        if self.timeout_min_ms > self.timeout_max_ms {
            return Err(ParamError::Timeouts {
                min: self.timeout_min_ms,
                max: self.timeout_max_ms,
            });
        }
        if self.outputs_min > self.outputs_max {
            return Err(ParamError::Outputs {
                min: self.outputs_min,
                max: self.outputs_max,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimerKind {
    /// Pads with dummy outputs and forwards a transaction still aggregating.
    Aggregation,
    /// Emergency fluff if no covering fluff was seen.
    FluffWatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DropReason {
    Invalid,
    /// Shares a kernel with a stempool entry it does not cover.
    NotCovering,
    /// Identical to a stempool entry that is still aggregating.
    DuplicateStem,
    /// Already in the fluffpool.
    DuplicateFluff,
    /// Fluffpool full of more profitable transactions.
    LowPriority,
}

impl DropReason {
    /// Whether the sender would be told the transaction was accepted.
    pub fn is_accept(self) -> bool {
        matches!(
            self,
            DropReason::DuplicateStem | DropReason::DuplicateFluff | DropReason::LowPriority
        )
    }
}

/// Side effects requested by the relay engine; the simulator executes them.
#[derive(Debug, Clone, PartialEq)]
pub enum RelayAction {
    SendStem {
        peer: NodeId,
        tx: TxRef,
    },
    Broadcast {
        tx: TxRef,
        except: Option<NodeId>,
    },
    SetTimer {
        kind: TimerKind,
        deadline: SimTime,
        entry: EntryId,
    },
    DropTx {
        tx: TxRef,
        reason: DropReason,
    },
}
