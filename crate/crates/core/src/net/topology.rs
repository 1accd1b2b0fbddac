use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;

use super::config::{ConfigError, SimConfig};
use crate::relay::NodeId;

/// Undirected peer graph plus node roles. Bootstrap nodes are `0..n_bootstrap`.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub adjacency: Vec<Vec<NodeId>>,
    pub malicious: Vec<bool>,
    pub bootstrap: Vec<bool>,
}

impl Topology {
    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn neighbors(&self, n: NodeId) -> &[NodeId] {
        &self.adjacency[n.idx()]
    }

    pub fn is_malicious(&self, n: NodeId) -> bool {
        self.malicious[n.idx()]
    }

    pub fn honest_nodes(&self) -> Vec<NodeId> {
        (0..self.len() as u32)
            .map(NodeId)
            .filter(|n| !self.is_malicious(*n))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edge_count() as f64 / self.len() as f64
    }

    /// Symmetric, no self-loops, no parallel edges.
    pub fn is_simple(&self) -> bool {
        self.adjacency.iter().enumerate().all(|(i, peers)| {
            peers.windows(2).all(|w| w[0] < w[1])
                && peers.iter().all(|p| {
                    p.idx() != i && self.adjacency[p.idx()].binary_search(&NodeId(i as u32)).is_ok()
                })
        })
    }
}

/// Each node dials `d/2` distinct peers, the first `min(2, d/2)` among the
/// bootstrap nodes when there are any; the graph is the undirected union.
///
/// Malicious nodes are drawn separately from the bootstrap and normal
/// groups, in proportion to group size.
pub fn generate_topology<R: Rng + ?Sized>(
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<Topology, ConfigError> {
    cfg.validate()?;
    let n = cfg.n_nodes;
    let nb = cfg.n_bootstrap;
    let bootstrap: Vec<bool> = (0..n).map(|i| i < nb).collect();

    let n_mal = cfg.n_malicious();
    let boot_quota = ((n_mal * nb) as f64 / n as f64).round() as usize;
    let boot_quota = boot_quota.min(nb).min(n_mal);
    let mut malicious = vec![false; n];
    for i in sample(rng, nb, boot_quota) {
        malicious[i] = true;
    }
    for i in sample(rng, n - nb, n_mal - boot_quota) {
        malicious[nb + i] = true;
    }

    let dial = cfg.expected_degree / 2;
    let mut sets: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
    for i in 0..n {
        let mut chosen: BTreeSet<usize> = BTreeSet::new();
        if nb > 0 && !bootstrap[i] {
            let k = dial.min(2).min(nb);
            chosen.extend(sample(rng, nb, k));
        }
        while chosen.len() < dial {
            let j = rng.random_range(0..n);
            if j != i {
                chosen.insert(j);
            }
        }
        for &j in &chosen {
            sets[i].insert(j as u32);
            sets[j].insert(i as u32);
        }
    }

    Ok(Topology {
        adjacency: sets
            .into_iter()
            .map(|s| s.into_iter().map(NodeId).collect())
            .collect(),
        malicious,
        bootstrap,
    })
}
