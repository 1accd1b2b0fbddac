//! Topology generation, the stem-path Monte Carlo, the chain and the
//! discrete-event network simulator.

mod chain;
mod config;
mod des;
mod paths;
mod topology;

pub use chain::ChainState;
pub use config::{ConfigError, SimConfig, SIM_KEYS};
pub use des::{resend_sweep, run_des, SimOutcome};
#[cfg(feature = "parallel")]
pub use paths::count_infected_parallel;
pub use paths::{
    count_infected, count_infected_serial, mean_field_infection, simulate_stem_paths, walk_path,
    PathsResult,
};
pub use topology::{generate_topology, Topology};
