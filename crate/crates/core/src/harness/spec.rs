use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

use crate::net::{ConfigError, SimConfig, SIM_KEYS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Paths,
    Sim,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Paths => "paths",
            Mode::Sim => "sim",
        })
    }
}

/// One swept parameter and its values, kept textual so each point goes
/// through the same parser as the base config.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub sweep: Option<Sweep>,
    pub base: SimConfig,
    pub n_paths: u64,
    pub replicates: usize,
    /// Replicate `r` runs with `master_seed + r` instead of the shared seed.
    pub vary_seed: bool,
    pub parallel: bool,
    pub output: PathBuf,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            mode: Mode::Paths,
            sweep: None,
            base: SimConfig::default(),
            n_paths: 1_000_000,
            replicates: 1,
            vary_seed: false,
            parallel: true,
            output: PathBuf::from("out"),
        }
    }
}

pub const SPEC_KEYS: &[&str] = &[
    "mode",
    "sweep",
    "n_paths",
    "replicates",
    "vary_seed",
    "parallel",
    "output",
];

/// A config problem pinned to its source line (0 when no line set the key).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {source}")]
pub struct SpecError {
    pub line: usize,
    pub key: String,
    pub source: ConfigError,
}

/// One unit of work: a sweep point and replicate with its full config.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub index: usize,
    pub point: Option<(String, String)>,
    pub replicate: usize,
    pub config: SimConfig,
}

fn bad(line: usize, key: &str, value: &str, reason: impl Into<String>) -> SpecError {
    SpecError {
        line,
        key: key.to_string(),
        source: ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: reason.into(),
        },
    }
}

fn parse_sweep(line: usize, value: &str) -> Result<Sweep, SpecError> {
    let (key, list) = value
        .split_once(':')
        .ok_or_else(|| bad(line, "sweep", value, "expected `name:v1,v2,...`"))?;
    let key = key.trim();
    if !SIM_KEYS.contains(&key) {
        return Err(bad(line, "sweep", value, format!("`{key}` is not a simulation parameter")));
    }
    let values: Vec<String> = list
        .split(',')
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect();
    if values.is_empty() {
        return Err(bad(line, "sweep", value, "no values"));
    }
    Ok(Sweep {
        key: key.to_string(),
        values,
    })
}

/// Parses flat `key=value` lines. `#` starts a comment; blank lines are
/// ignored. Omitted keys keep their defaults.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, SpecError> {
    let mut spec = ExperimentSpec::default();
    let mut lines: HashMap<String, usize> = HashMap::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(bad(line, content, "", "expected `key=value`"));
        };
        let (key, value) = (key.trim(), value.trim());
        if lines.insert(key.to_string(), line).is_some() {
            return Err(bad(line, key, value, "set twice"));
        }
        let parse_err = |reason: String| bad(line, key, value, reason);
        match key {
            "mode" => {
                spec.mode = match value {
                    "paths" => Mode::Paths,
                    "sim" => Mode::Sim,
                    _ => return Err(parse_err("expected `paths` or `sim`".into())),
                }
            }
            "sweep" => spec.sweep = Some(parse_sweep(line, value)?),
            "n_paths" => spec.n_paths = value.parse().map_err(|e| parse_err(format!("{e}")))?,
            "replicates" => {
                spec.replicates = value.parse().map_err(|e| parse_err(format!("{e}")))?
            }
            "vary_seed" => spec.vary_seed = value.parse().map_err(|e| parse_err(format!("{e}")))?,
            "parallel" => spec.parallel = value.parse().map_err(|e| parse_err(format!("{e}")))?,
            "output" => spec.output = PathBuf::from(value),
            _ => spec.base.set(key, value).map_err(|source| SpecError {
                line,
                key: key.to_string(),
                source,
            })?,
        }
    }

    let line_of = |k: &str| lines.get(k).copied().unwrap_or(0);
    if spec.replicates == 0 {
        let l = line_of("replicates");
        return Err(bad(l, "replicates", "0", "must be at least 1"));
    }
    spec.base.validate().map_err(|source| {
        let key = match &source {
            ConfigError::Invalid { key, .. } => key.to_string(),
            _ => String::new(),
        };
        SpecError {
            line: line_of(&key),
            key,
            source,
        }
    })?;
    // every sweep point must be a valid config on its own
    spec.jobs().map_err(|source| SpecError {
        line: line_of("sweep"),
        key: "sweep".into(),
        source,
    })?;
    Ok(spec)
}

impl ExperimentSpec {
    /// Sweep points in file order, replicates innermost.
    pub fn jobs(&self) -> Result<Vec<Job>, ConfigError> {
        let points: Vec<Option<(String, String)>> = match &self.sweep {
            None => vec![None],
            Some(s) => s
                .values
                .iter()
                .map(|v| Some((s.key.clone(), v.clone())))
                .collect(),
        };
        let mut jobs = Vec::new();
        for point in points {
            let mut config = self.base.clone();
            if let Some((k, v)) = &point {
                config.set(k, v)?;
                config.validate()?;
            }
            for replicate in 0..self.replicates {
                let mut config = config.clone();
                if self.vary_seed {
                    config.master_seed = config.master_seed.wrapping_add(replicate as u64);
                }
                jobs.push(Job {
                    index: jobs.len(),
                    point: point.clone(),
                    replicate,
                    config,
                });
            }
        }
        Ok(jobs)
    }
}
