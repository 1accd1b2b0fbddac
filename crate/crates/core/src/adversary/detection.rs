use std::collections::HashSet;

use crate::mw::{KernelId, KernelSet, Transaction};
use crate::relay::NodeId;

/// First coalition observation of one stem transaction.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionEntry {
    pub node: NodeId,
    /// The guessed source.
    pub sender: NodeId,
    pub key: KernelSet,
    pub kernel_count: usize,
    /// Honest kernels in the transaction, one source guess each.
    pub predictions: usize,
    /// Guesses where the sender created the kernel.
    pub correct: usize,
    pub hops: u32,
}

#[derive(Debug, Clone, Default)]
pub struct DetectionLog {
    pub entries: Vec<DetectionEntry>,
    seen: HashSet<KernelSet>,
}

impl DetectionLog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Logs the first sighting of `tx` anywhere in the coalition. Returns
    /// false for repeat sightings.
    pub fn record_first_node(
        &mut self,
        node: NodeId,
        tx: &Transaction,
        sender: NodeId,
        origin: impl Fn(KernelId) -> Option<NodeId>,
        hops: u32,
    ) -> bool {
        let key = tx.kernel_set();
        if !self.seen.insert(key.clone()) {
            return false;
        }
        let mut predictions = 0;
        let mut correct = 0;
        for &k in key.ids() {
            if let Some(src) = origin(k) {
                predictions += 1;
                correct += usize::from(src == sender);
            }
        }
        self.entries.push(DetectionEntry {
            node,
            sender,
            kernel_count: key.len(),
            key,
            predictions,
            correct,
            hops,
        });
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionReport {
    pub precision_all: f64,
    /// NaN when the stratum is empty.
    pub precision_single: f64,
    pub precision_aggregated: f64,
    pub mean_hops: f64,
    pub single_samples: usize,
    pub aggregated_samples: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        f64::NAN
    } else {
        num as f64 / den as f64
    }
}

/// Precision of "sender is the source", per kernel guess, split by whether
/// the observed transaction had one kernel or several.
pub fn detection_report(log: &DetectionLog) -> Option<DetectionReport> {
    let scored: Vec<&DetectionEntry> = log.entries.iter().filter(|e| e.predictions > 0).collect();
    if scored.is_empty() {
        return None;
    }
    let (mut pred, mut hit) = ([0usize; 2], [0usize; 2]);
    let mut samples = [0usize; 2];
    let mut hops = 0u64;
    for e in &scored {
        let s = usize::from(e.kernel_count > 1);
        pred[s] += e.predictions;
        hit[s] += e.correct;
        samples[s] += 1;
        hops += e.hops as u64;
    }
    Some(DetectionReport {
        precision_all: ratio(hit[0] + hit[1], pred[0] + pred[1]),
        precision_single: ratio(hit[0], pred[0]),
        precision_aggregated: ratio(hit[1], pred[1]),
        mean_hops: hops as f64 / scored.len() as f64,
        single_samples: samples[0],
        aggregated_samples: samples[1],
    })
}
