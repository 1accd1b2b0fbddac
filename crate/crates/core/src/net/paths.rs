//! Lightweight stem-path Monte Carlo: no transactions, no timing, only the
//! route a stem transaction takes before its first fluff coin comes up.

use rand::Rng;

use super::config::{ConfigError, SimConfig};
use super::topology::{generate_topology, Topology};
use crate::relay::{pick_stem_peer, NodeId};
use crate::seed;

/// Walks one stem path. Returns true when a malicious node receives it.
/// Each hop avoids the node it came from, as the relay engine does.
///
/// The source flips the fluff coin too, so with `q = 1` nothing is ever sent.
pub fn walk_path<R: Rng + ?Sized>(topo: &Topology, honest: &[NodeId], q: f64, rng: &mut R) -> bool {
    let mut at = honest[rng.random_range(0..honest.len() as u32) as usize];
    let mut prev = None;
    loop {
        let draw: f64 = rng.random();
        if draw < q {
            return false;
        }
        let Some(next) = pick_stem_peer(topo.neighbors(at), prev, rng) else {
            return false;
        };
        prev = Some(at);
        at = next;
        if topo.is_malicious(at) {
            return true;
        }
    }
}

fn path_range(topo: &Topology, honest: &[NodeId], q: f64, master: u64, range: std::ops::Range<u64>) -> u64 {
    let mut infected = 0;
    for i in range {
        let mut rng = seed::stream(master, seed::PATHS, i);
        infected += u64::from(walk_path(topo, honest, q, &mut rng));
    }
    infected
}

/// Number of infected paths among `n_paths`, one after another.
pub fn count_infected_serial(topo: &Topology, q: f64, n_paths: u64, master: u64) -> u64 {
    let honest = topo.honest_nodes();
    if honest.is_empty() || !topo.malicious.iter().any(|m| *m) {
        return 0;
    }
    path_range(topo, &honest, q, master, 0..n_paths)
}

/// Same count as [`count_infected_serial`], split into chunks across threads.
#[cfg(feature = "parallel")]
pub fn count_infected_parallel(topo: &Topology, q: f64, n_paths: u64, master: u64) -> u64 {
    use rayon::prelude::*;

    const CHUNK: u64 = 16_384;
    let honest = topo.honest_nodes();
    if honest.is_empty() || !topo.malicious.iter().any(|m| *m) {
        return 0;
    }
    let chunks = n_paths.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * CHUNK).min(n_paths);
            path_range(topo, &honest, q, master, c * CHUNK..end)
        })
        .sum()
}

/// Parallel when requested and compiled in.
pub fn count_infected(topo: &Topology, q: f64, n_paths: u64, master: u64, parallel: bool) -> u64 {
    #[cfg(feature = "parallel")]
    if parallel {
        return count_infected_parallel(topo, q, n_paths, master);
    }
    let _ = parallel;
    count_infected_serial(topo, q, n_paths, master)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathsResult {
    pub n_paths: u64,
    pub infected: u64,
}

impl PathsResult {
    pub fn fraction(&self) -> f64 {
        if self.n_paths == 0 {
            0.0
        } else {
            self.infected as f64 / self.n_paths as f64
        }
    }
}

/// Builds the topology for `cfg.master_seed` and runs `n_paths` walks on it.
pub fn simulate_stem_paths(cfg: &SimConfig, n_paths: u64, parallel: bool) -> Result<PathsResult, ConfigError> {
    let topo = generate_topology(cfg, &mut seed::stream(cfg.master_seed, seed::TOPOLOGY, 0))?;
    Ok(PathsResult {
        n_paths,
        infected: count_infected(&topo, cfg.relay.fluff_probability, n_paths, cfg.master_seed, parallel),
    })
}

/// Infection probability when every hop lands on a malicious node with
/// probability `p`: `1 - q / (1 - (1 - q)(1 - p))`.
pub fn mean_field_infection(p: f64, q: f64) -> f64 {
    1.0 - q / (1.0 - (1.0 - q) * (1.0 - p))
}
