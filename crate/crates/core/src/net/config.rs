use crate::adversary::{AttackConfig, Strategy};
use crate::relay::RelayParams;
use crate::time::secs_to_ms;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("`{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        reason: reason.into(),
    }
}

/// Network, workload and adversary parameters for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_nodes: usize,
    pub malicious_fraction: f64,
    pub expected_degree: usize,
    pub n_bootstrap: usize,
    pub latency_mean_ms: f64,
    pub latency_sd_ms: f64,
    pub block_interval_s: f64,
    /// Blocks exactly every `block_interval_s` instead of exponential gaps.
    pub fixed_block_interval: bool,
    pub tx_rate_per_node_per_s: f64,
    pub block_capacity_bytes: u64,
    /// 0 disables resending.
    pub resend_interval_s: f64,
    pub duration_s: f64,
    pub master_seed: u64,
    pub fee_min: u64,
    pub fee_max: u64,
    pub relay: RelayParams,
    pub attack: AttackConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_nodes: 1000,
            malicious_fraction: 0.10,
            expected_degree: 10,
            n_bootstrap: 0,
            latency_mean_ms: 100.0,
            latency_sd_ms: 20.0,
            block_interval_s: 60.0,
            fixed_block_interval: false,
            tx_rate_per_node_per_s: 0.1 / 60.0,
            block_capacity_bytes: 1_000_000,
            resend_interval_s: 0.0,
            duration_s: 3600.0,
            master_seed: 1,
            fee_min: 50,
            fee_max: 150,
            relay: RelayParams::default(),
            attack: AttackConfig::default(),
        }
    }
}

/// Keys accepted by [`SimConfig::set`], in documentation order.
pub const SIM_KEYS: &[&str] = &[
    "n_nodes",
    "malicious_fraction",
    "fluff_probability",
    "expected_degree",
    "n_bootstrap",
    "latency_mean_ms",
    "latency_sd_ms",
    "block_interval_s",
    "fixed_block_interval",
    "tx_rate_per_node_per_s",
    "block_capacity_bytes",
    "resend_interval_s",
    "duration_s",
    "master_seed",
    "fee_min",
    "fee_max",
    "timeout_min_s",
    "timeout_max_s",
    "aggregation_time_s",
    "outputs_min",
    "outputs_max",
    "fluffpool_capacity_bytes",
    "strategy",
    "batch_window_s",
    "delay_s",
    "fee_margin",
    "attack_fluff",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn parse_secs(key: &str, value: &str) -> Result<u64, ConfigError> {
    let s: f64 = parse(key, value)?;
    if !(s.is_finite() && s >= 0.0) {
        return Err(ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: "expected a non-negative number of seconds".into(),
        });
    }
    Ok(secs_to_ms(s))
}

impl SimConfig {
    pub fn n_malicious(&self) -> usize {
        // the epsilon keeps e.g. 0.1 * 250 from flooring to 24
        ((self.malicious_fraction * self.n_nodes as f64) + 1e-9).floor() as usize
    }

    pub fn horizon_ms(&self) -> u64 {
        secs_to_ms(self.duration_s)
    }

    pub fn block_interval_ms(&self) -> u64 {
        secs_to_ms(self.block_interval_s)
    }

    /// Assigns one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "n_nodes" => self.n_nodes = parse(key, value)?,
            "malicious_fraction" => self.malicious_fraction = parse(key, value)?,
            "fluff_probability" => self.relay.fluff_probability = parse(key, value)?,
            "expected_degree" => self.expected_degree = parse(key, value)?,
            "n_bootstrap" => self.n_bootstrap = parse(key, value)?,
            "latency_mean_ms" => self.latency_mean_ms = parse(key, value)?,
            "latency_sd_ms" => self.latency_sd_ms = parse(key, value)?,
            "block_interval_s" => self.block_interval_s = parse(key, value)?,
            "fixed_block_interval" => self.fixed_block_interval = parse(key, value)?,
            "tx_rate_per_node_per_s" => self.tx_rate_per_node_per_s = parse(key, value)?,
            "block_capacity_bytes" => self.block_capacity_bytes = parse(key, value)?,
            "resend_interval_s" => self.resend_interval_s = parse(key, value)?,
            "duration_s" => self.duration_s = parse(key, value)?,
            "master_seed" => self.master_seed = parse(key, value)?,
            "fee_min" => self.fee_min = parse(key, value)?,
            "fee_max" => self.fee_max = parse(key, value)?,
            "timeout_min_s" => self.relay.timeout_min_ms = parse_secs(key, value)?,
            "timeout_max_s" => self.relay.timeout_max_ms = parse_secs(key, value)?,
            "aggregation_time_s" => self.relay.aggregation_time_ms = parse_secs(key, value)?,
            "outputs_min" => self.relay.outputs_min = parse(key, value)?,
            "outputs_max" => self.relay.outputs_max = parse(key, value)?,
            "fluffpool_capacity_bytes" => self.relay.fluffpool_capacity = parse(key, value)?,
            "strategy" => {
                self.attack.strategy = value.parse::<Strategy>().map_err(|reason| {
                    ConfigError::BadValue {
                        key: key.to_string(),
                        value: value.to_string(),
                        reason,
                    }
                })?
            }
            "batch_window_s" => self.attack.batch_window_ms = parse_secs(key, value)?,
            "delay_s" => {
                self.attack.delay_ms = match value {
                    "inf" | "infinite" => None,
                    v => Some(parse_secs(key, v)?),
                }
            }
            "fee_margin" => self.attack.fee_margin = parse(key, value)?,
            "attack_fluff" => self.attack.attack_fluff = parse(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = self.malicious_fraction;
        if !(0.0..1.0).contains(&p) {
            return Err(invalid("malicious_fraction", format!("must be in [0, 1), got {p}")));
        }
        let q = self.relay.fluff_probability;
        if !(q > 0.0 && q <= 1.0) {
            return Err(invalid("fluff_probability", format!("must be in (0, 1], got {q}")));
        }
        if self.expected_degree < 2 {
            return Err(invalid("expected_degree", "must be at least 2"));
        }
        if self.n_nodes < self.expected_degree + 1 {
            return Err(invalid(
                "n_nodes",
                format!("need at least expected_degree + 1 = {}", self.expected_degree + 1),
            ));
        }
        if self.n_bootstrap > self.n_nodes {
            return Err(invalid("n_bootstrap", "exceeds n_nodes"));
        }
        if self.n_malicious() >= self.n_nodes {
            return Err(invalid("malicious_fraction", "leaves no honest node"));
        }
        if !(self.latency_mean_ms.is_finite() && self.latency_sd_ms >= 0.0) {
            return Err(invalid("latency_sd_ms", "must be non-negative"));
        }
        if !(self.block_interval_s > 0.0 && self.block_interval_s.is_finite()) {
            return Err(invalid("block_interval_s", "must be positive"));
        }
        if !(self.tx_rate_per_node_per_s >= 0.0 && self.tx_rate_per_node_per_s.is_finite()) {
            return Err(invalid("tx_rate_per_node_per_s", "must be non-negative"));
        }
        if !(self.resend_interval_s >= 0.0 && self.resend_interval_s.is_finite()) {
            return Err(invalid("resend_interval_s", "must be non-negative"));
        }
        if !(self.duration_s >= 0.0 && self.duration_s.is_finite()) {
            return Err(invalid("duration_s", "must be non-negative"));
        }
        if self.fee_min > self.fee_max {
            return Err(invalid("fee_min", "exceeds fee_max"));
        }
        if self.relay.timeout_min_ms > self.relay.timeout_max_ms {
            return Err(invalid("timeout_min_s", "exceeds timeout_max_s"));
        }
        if self.relay.outputs_min > self.relay.outputs_max {
            return Err(invalid("outputs_min", "exceeds outputs_max"));
        }
        if self.attack.fee_margin == 0 {
            return Err(invalid("fee_margin", "must be at least 1"));
        }
        Ok(())
    }
}
