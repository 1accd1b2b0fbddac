//! Experiment orchestration: config files in, CSV files out.

mod output;
mod spec;
mod summary;

pub use output::{fmt_rate, summary_header, PATHS_HEADER, RECORDS_HEADER};
pub use spec::{parse_config, ExperimentSpec, Job, Mode, SpecError, Sweep, SPEC_KEYS};
pub use summary::{summarize, summarize_outcome, LatencyStats, RunSummary, Summary, LATENCY_GROUPS};

use std::path::{Path, PathBuf};

use crate::net::{run_des, simulate_stem_paths, ConfigError, PathsResult, SimOutcome};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
}

/// Results kept in memory next to the files written.
#[derive(Debug)]
pub enum Results {
    Paths(Vec<(Job, PathsResult)>),
    Sim(Vec<(Job, SimOutcome, RunSummary)>),
}

#[derive(Debug)]
pub struct ExperimentOutput {
    pub files: Vec<PathBuf>,
    pub results: Results,
}

fn map_jobs<T: Send>(
    jobs: &[Job],
    parallel: bool,
    f: impl Fn(&Job) -> Result<T, ConfigError> + Sync + Send,
) -> Result<Vec<T>, ConfigError> {
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        return jobs.par_iter().map(f).collect();
    }
    let _ = parallel;
    jobs.iter().map(f).collect()
}

fn job_file(dir: &Path, stem: &str, job: &Job, many: bool) -> PathBuf {
    if many {
        dir.join(format!("{stem}_{}.csv", job.index))
    } else {
        dir.join(format!("{stem}.csv"))
    }
}

/// Runs every job of `spec` and writes its CSVs under `spec.output`.
///
/// Paths mode writes `paths.csv`. Sim mode writes `summary.csv` plus
/// `records`, `ledger` and `detection` tables, suffixed `_<job>` when the
/// spec has several jobs.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput, HarnessError> {
    let jobs = spec.jobs()?;
    let dir = &spec.output;
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.clone(),
        source,
    })?;

    match spec.mode {
        Mode::Paths => {
            // each point already fans out over paths, so points run in order
            let mut rows = Vec::with_capacity(jobs.len());
            for job in &jobs {
                rows.push(simulate_stem_paths(&job.config, spec.n_paths, spec.parallel)?);
            }
            let path = dir.join("paths.csv");
            let table: Vec<_> = jobs.iter().map(|j| j.config.clone()).zip(rows.iter().copied()).collect();
            output::write_paths(&path, &table)?;
            Ok(ExperimentOutput {
                files: vec![path],
                results: Results::Paths(jobs.into_iter().zip(rows).collect()),
            })
        }
        Mode::Sim => {
            let outcomes = map_jobs(&jobs, spec.parallel, |j| run_des(&j.config))?;
            let many = jobs.len() > 1;
            let mut files = Vec::new();
            let mut summary_rows = Vec::new();
            let mut results = Vec::new();
            for (job, out) in jobs.into_iter().zip(outcomes) {
                for (stem, write) in [
                    ("records", output::write_records as fn(&Path, &SimOutcome) -> _),
                    ("ledger", output::write_ledger),
                    ("detection", output::write_detection),
                ] {
                    let path = job_file(dir, stem, &job, many);
                    write(&path, &out)?;
                    files.push(path);
                }
                let s = summarize_outcome(&out);
                let (key, value) = job.point.clone().unwrap_or_default();
                let cols = [
                    job.index.to_string(),
                    key,
                    value,
                    job.replicate.to_string(),
                    job.config.master_seed.to_string(),
                ];
                summary_rows.push(output::summary_row(cols, &s));
                results.push((job, out, s));
            }
            let path = dir.join("summary.csv");
            output::write_summary(&path, summary_rows)?;
            files.push(path);
            Ok(ExperimentOutput {
                files,
                results: Results::Sim(results),
            })
        }
    }
}
