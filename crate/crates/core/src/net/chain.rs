use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use crate::mw::{Block, KernelId};
use crate::relay::{Fluffpool, TxRef};
use crate::time::SimTime;

/// Append-only chain plus an index of every included kernel.
#[derive(Debug, Clone, Default)]
pub struct ChainState {
    pub blocks: Vec<Arc<Block>>,
    kernel_index: HashSet<KernelId>,
    /// kernel -> (block, position in block)
    located: HashMap<KernelId, (usize, usize)>,
}

impl ChainState {
    pub fn height(&self) -> usize {
        self.blocks.len()
    }

    pub fn contains(&self, k: KernelId) -> bool {
        self.kernel_index.contains(&k)
    }

    pub fn kernel_index(&self) -> &HashSet<KernelId> {
        &self.kernel_index
    }

    pub fn tx_with(&self, k: KernelId) -> Option<&TxRef> {
        let &(b, t) = self.located.get(&k)?;
        Some(&self.blocks[b].transactions[t])
    }

    /// Kernel count of the on-chain transaction holding `k`.
    pub fn kernels_of_tx_with(&self, k: KernelId) -> Option<usize> {
        self.tx_with(k).map(|t| t.kernel_count())
    }

    /// Greedy selection by priority. Skips conflicts with the chain or with
    /// transactions already picked, and anything that no longer fits.
    pub fn select(&self, pool: &Fluffpool, capacity: u64) -> Vec<TxRef> {
        let mut picked = Vec::new();
        let mut taken: HashSet<KernelId> = HashSet::new();
        let mut bytes = 0;
        for entry in pool.by_priority_desc() {
            let ks = entry.tx.kernels.iter().map(|k| k.id);
            if ks.clone().any(|k| self.contains(k) || taken.contains(&k)) {
                continue;
            }
            if bytes + entry.size > capacity {
                continue;
            }
            bytes += entry.size;
            taken.extend(ks);
            picked.push(entry.tx.clone());
        }
        picked
    }

    pub fn mine_block(&mut self, pool: &Fluffpool, capacity: u64, now: SimTime) -> Arc<Block> {
        let transactions = self.select(pool, capacity);
        self.append(Block {
            height: self.blocks.len() as u64,
            timestamp: now,
            transactions,
        })
    }

    pub fn append(&mut self, block: Block) -> Arc<Block> {
        let b = self.blocks.len();
        for (t, tx) in block.transactions.iter().enumerate() {
            for k in &tx.kernels {
                let fresh = self.kernel_index.insert(k.id);
                assert!(fresh, "kernel {} mined twice", k.id);
                self.located.insert(k.id, (b, t));
            }
        }
        let block = Arc::new(block);
        self.blocks.push(block.clone());
        block
    }

    /// Index matches the blocks, no kernel twice, every transaction valid.
    pub fn check(&self) -> bool {
        let mut seen = HashSet::new();
        for block in &self.blocks {
            for tx in &block.transactions {
                if !tx.validate() {
                    return false;
                }
                for k in &tx.kernels {
                    if !seen.insert(k.id) {
                        return false;
                    }
                }
            }
        }
        seen == self.kernel_index
    }
}
