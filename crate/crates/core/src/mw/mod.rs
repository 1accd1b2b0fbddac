//! Transaction algebra: commitments, kernels, validity, aggregation,
//! cut-through and fee-per-byte profitability.

mod commitment;
mod transaction;

pub use commitment::{Commitment, Scalar, MODULUS};
pub use transaction::{
    aggregate, cut_through, CutThrough, Kernel, KernelId, KernelIdAllocator, KernelSet, Output,
    Profitability, SizeModel, Transaction,
};

use std::sync::Arc;

use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MwError {
    #[error("value imbalance: inputs sum to {inputs}, outputs plus fee to {outputs}")]
    ValueImbalance { inputs: u128, outputs: u128 },
    #[error("transactions share kernel {0}")]
    KernelOverlap(KernelId),
    #[error("fee overflow")]
    FeeOverflow,
}

/// A mined block. Transactions are kept whole so records can be matched back.
#[derive(Debug, Clone)]
pub struct Block {
    pub height: u64,
    pub timestamp: SimTime,
    pub transactions: Vec<Arc<Transaction>>,
}

impl Block {
    pub fn size(&self) -> u64 {
        self.transactions.iter().map(|t| t.size()).sum()
    }

    pub fn kernel_ids(&self) -> impl Iterator<Item = KernelId> + '_ {
        self.transactions
            .iter()
            .flat_map(|t| t.kernels.iter().map(|k| k.id))
    }
}
