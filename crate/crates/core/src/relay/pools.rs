use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::mw::{KernelId, KernelSet, Profitability};
use crate::time::SimTime;

use super::{NodeId, TxRef};

pub type EntryId = u64;

#[derive(Debug, Clone)]
pub struct StemEntry {
    pub tx: TxRef,
    pub key: KernelSet,
    /// Stem peer it arrived from, `None` for local transactions.
    pub from: Option<NodeId>,
    pub aggregating: bool,
    pub aggregation_deadline: Option<SimTime>,
    pub fluff_watch_deadline: Option<SimTime>,
}

/// Pending stem transactions. Each kernel id belongs to at most one entry.
#[derive(Debug, Clone, Default)]
pub struct Stempool {
    entries: BTreeMap<EntryId, StemEntry>,
    by_kernel: HashMap<KernelId, EntryId>,
}

impl Stempool {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: EntryId) -> Option<&StemEntry> {
        self.entries.get(&id)
    }

    pub(crate) fn get_mut(&mut self, id: EntryId) -> Option<&mut StemEntry> {
        self.entries.get_mut(&id)
    }

    pub fn entry_with_kernel(&self, k: KernelId) -> Option<EntryId> {
        self.by_kernel.get(&k).copied()
    }

    /// The entry holding exactly this kernel set, if any.
    pub fn find_exact(&self, key: &KernelSet) -> Option<EntryId> {
        let first = *key.ids().first()?;
        let id = self.entry_with_kernel(first)?;
        (self.entries[&id].key == *key).then_some(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (EntryId, &StemEntry)> {
        self.entries.iter().map(|(id, e)| (*id, e))
    }

    pub(crate) fn insert(&mut self, id: EntryId, entry: StemEntry) {
        for k in entry.key.ids() {
            let prev = self.by_kernel.insert(*k, id);
            debug_assert!(prev.is_none(), "kernel {k} already pooled");
        }
        self.entries.insert(id, entry);
    }

    pub(crate) fn remove(&mut self, id: EntryId) -> Option<StemEntry> {
        let entry = self.entries.remove(&id)?;
        for k in entry.key.ids() {
            self.by_kernel.remove(k);
        }
        Some(entry)
    }

    /// Swaps the transaction stored under `id`, re-indexing its kernels.
    pub(crate) fn replace_tx(&mut self, id: EntryId, tx: TxRef) {
        let key = tx.kernel_set();
        let entry = self.entries.get_mut(&id).expect("entry exists");
        for k in entry.key.ids() {
            self.by_kernel.remove(k);
        }
        for k in key.ids() {
            self.by_kernel.insert(*k, id);
        }
        entry.tx = tx;
        entry.key = key;
    }

    /// Drops every entry that shares a kernel with `pred`. Returns how many.
    pub(crate) fn remove_where(&mut self, mut conflicts: impl FnMut(KernelId) -> bool) -> usize {
        let doomed: Vec<EntryId> = self
            .entries
            .iter()
            .filter(|(_, e)| e.key.ids().iter().any(|k| conflicts(*k)))
            .map(|(id, _)| *id)
            .collect();
        for id in &doomed {
            self.remove(*id);
        }
        doomed.len()
    }

    /// Each kernel indexed exactly once and every entry's kernels indexed to it.
    pub fn check_exclusivity(&self) -> bool {
        let total: usize = self.entries.values().map(|e| e.key.len()).sum();
        total == self.by_kernel.len()
            && self
                .entries
                .iter()
                .all(|(id, e)| e.key.ids().iter().all(|k| self.by_kernel.get(k) == Some(id)))
    }
}

/// Miner and eviction ordering: higher fee-per-byte first, ties to the
/// lexicographically smaller kernel set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Priority {
    pub profitability: Profitability,
    pub tiebreak: Reverse<KernelSet>,
}

impl Priority {
    pub fn of(tx: &crate::mw::Transaction) -> Self {
        Priority {
            profitability: tx.profitability(),
            tiebreak: Reverse(tx.kernel_set()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FluffEntry {
    pub tx: TxRef,
    pub size: u64,
    pub priority: Priority,
}

/// Fluffed transactions, bounded in bytes.
#[derive(Debug, Clone)]
pub struct Fluffpool {
    capacity: u64,
    bytes: u64,
    entries: BTreeMap<KernelSet, FluffEntry>,
    order: BTreeSet<Priority>,
}

impl Fluffpool {
    pub fn new(capacity: u64) -> Self {
        Fluffpool {
            capacity,
            bytes: 0,
            entries: BTreeMap::new(),
            order: BTreeSet::new(),
        }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn bytes(&self) -> u64 {
        self.bytes
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, key: &KernelSet) -> bool {
        self.entries.contains_key(key)
    }

    pub fn get(&self, key: &KernelSet) -> Option<&FluffEntry> {
        self.entries.get(key)
    }

    pub fn has_room_for(&self, size: u64) -> bool {
        self.bytes + size <= self.capacity
    }

    pub fn least_profitable(&self) -> Option<&Priority> {
        self.order.first()
    }

    /// Transactions from best to worst priority.
    pub fn by_priority_desc(&self) -> impl Iterator<Item = &FluffEntry> {
        self.order
            .iter()
            .rev()
            .map(|p| &self.entries[&p.tiebreak.0])
    }

    pub(crate) fn insert(&mut self, tx: TxRef) {
        let priority = Priority::of(&tx);
        let size = tx.size();
        let key = priority.tiebreak.0.clone();
        self.bytes += size;
        self.order.insert(priority.clone());
        let prev = self.entries.insert(key, FluffEntry { tx, size, priority });
        debug_assert!(prev.is_none());
    }

    pub(crate) fn remove(&mut self, key: &KernelSet) -> Option<FluffEntry> {
        let entry = self.entries.remove(key)?;
        self.order.remove(&entry.priority);
        self.bytes -= entry.size;
        Some(entry)
    }

    pub(crate) fn remove_where(&mut self, mut conflicts: impl FnMut(KernelId) -> bool) -> usize {
        let doomed: Vec<KernelSet> = self
            .entries
            .keys()
            .filter(|key| key.ids().iter().any(|k| conflicts(*k)))
            .cloned()
            .collect();
        for key in &doomed {
            self.remove(key);
        }
        doomed.len()
    }
}
