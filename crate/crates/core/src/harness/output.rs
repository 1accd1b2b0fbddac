use std::fs::File;
use std::path::Path;

use super::summary::{RunSummary, LATENCY_GROUPS};
use super::HarnessError;
use crate::net::{PathsResult, SimConfig, SimOutcome};
use crate::time::fmt_ms_as_secs;

pub const PATHS_HEADER: [&str; 8] = [
    "p",
    "q",
    "n_nodes",
    "expected_degree",
    "n_bootstrap",
    "n_paths",
    "seed",
    "infected_fraction",
];

pub const RECORDS_HEADER: [&str; 10] = [
    "tx_id",
    "origin_node",
    "created_at_s",
    "first_fluff_at_s",
    "included_at_s",
    "stem_hops",
    "was_attacked",
    "kind",
    "fee",
    "status",
];

fn opt_secs(t: Option<crate::time::SimTime>) -> String {
    t.map_or_else(|| "-1".to_string(), |t| fmt_ms_as_secs(t.millis()))
}

/// Rates and fractions: six decimals, `NaN` for undefined.
pub fn fmt_rate(x: f64) -> String {
    format!("{x:.6}")
}

fn create(path: &Path) -> Result<csv::Writer<File>, HarnessError> {
    let f = File::create(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::Writer::from_writer(f))
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<(), HarnessError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let wrap = |source: csv::Error| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = create(path)?;
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(row).map_err(wrap)?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn paths_row(cfg: &SimConfig, r: &PathsResult) -> Vec<String> {
    vec![
        cfg.malicious_fraction.to_string(),
        cfg.relay.fluff_probability.to_string(),
        cfg.n_nodes.to_string(),
        cfg.expected_degree.to_string(),
        cfg.n_bootstrap.to_string(),
        r.n_paths.to_string(),
        cfg.master_seed.to_string(),
        fmt_rate(r.fraction()),
    ]
}

pub fn write_paths(path: &Path, rows: &[(SimConfig, PathsResult)]) -> Result<(), HarnessError> {
    write_rows(path, &PATHS_HEADER, rows.iter().map(|(c, r)| paths_row(c, r)))
}

pub fn write_records(path: &Path, out: &SimOutcome) -> Result<(), HarnessError> {
    let rows = out.records.iter().map(|r| {
        vec![
            r.tx_id.to_string(),
            r.origin.to_string(),
            fmt_ms_as_secs(r.created.millis()),
            opt_secs(r.first_fluff),
            opt_secs(r.included),
            r.stem_hops.to_string(),
            r.was_attacked.to_string(),
            r.kind.to_string(),
            r.fee.to_string(),
            r.status.to_string(),
        ]
    });
    write_rows(path, &RECORDS_HEADER, rows)
}

pub fn write_ledger(path: &Path, out: &SimOutcome) -> Result<(), HarnessError> {
    let header = [
        "node",
        "attacked_at_s",
        "victims",
        "victim_kernels",
        "victim_fee",
        "victim_size",
        "tb_kernel",
        "tb_fee",
        "outcome",
    ];
    let ledger = &out.coalition.ledger;
    let rows = ledger.entries.iter().map(|e| {
        let kernels: Vec<String> = e
            .victims
            .iter()
            .flat_map(|v| v.ids().iter().map(|k| k.to_string()))
            .collect();
        vec![
            e.node.to_string(),
            fmt_ms_as_secs(e.attacked_at.millis()),
            e.victims.len().to_string(),
            kernels.join(" "),
            e.victim_fee.to_string(),
            e.victim_size.to_string(),
            e.tb_kernel.to_string(),
            e.tb_fee.to_string(),
            ledger.outcome(e, &out.chain).to_string(),
        ]
    });
    write_rows(path, &header, rows)
}

pub fn write_detection(path: &Path, out: &SimOutcome) -> Result<(), HarnessError> {
    let header = ["node", "guess", "kernel_count", "predictions", "correct", "hops"];
    let rows = out.coalition.detection.entries.iter().map(|e| {
        vec![
            e.node.to_string(),
            e.sender.to_string(),
            e.kernel_count.to_string(),
            e.predictions.to_string(),
            e.correct.to_string(),
            e.hops.to_string(),
        ]
    });
    write_rows(path, &header, rows)
}

pub fn summary_header() -> Vec<String> {
    let mut h: Vec<String> = [
        "job",
        "sweep_key",
        "sweep_value",
        "replicate",
        "seed",
        "honest",
        "included",
        "attacked",
        "lost",
        "inclusion_rate",
        "attacked_fraction",
        "excluded_fraction",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for g in LATENCY_GROUPS {
        for stat in ["n", "mean_s", "median_s", "p90_s"] {
            h.push(format!("latency_{g}_{stat}"));
        }
    }
    h.extend(
        [
            "attacks",
            "attacked_txs",
            "attack_fees",
            "attack_excluded",
            "cost_per_excluded",
            "precision_all",
            "precision_single",
            "precision_aggregated",
            "single_samples",
            "aggregated_samples",
            "mean_hops_to_adversary",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    h
}

/// Leading job columns, then the run statistics; empty cells when there
/// were no judged transactions or no detections.
pub fn summary_row(job: [String; 5], s: &RunSummary) -> Vec<String> {
    let mut row: Vec<String> = job.to_vec();
    match &s.tx {
        Some(t) => {
            row.extend([t.honest, t.included, t.attacked, t.lost].map(|v| v.to_string()));
            row.extend([t.inclusion_rate, t.attacked_fraction, t.excluded_fraction].map(fmt_rate));
            for l in &t.latency {
                row.push(l.n.to_string());
                row.extend([l.mean_s, l.median_s, l.p90_s].map(fmt_rate));
            }
        }
        None => row.extend(std::iter::repeat_n(String::new(), 7 + 4 * LATENCY_GROUPS.len())),
    }
    let c = &s.cost;
    row.extend([c.attacks, c.attacked_txs].map(|v| v.to_string()));
    row.push(c.total_fees.to_string());
    row.push(c.excluded.to_string());
    row.push(fmt_rate(c.cost_per_excluded));
    match &s.detection {
        Some(d) => {
            row.extend([d.precision_all, d.precision_single, d.precision_aggregated].map(fmt_rate));
            row.extend([d.single_samples, d.aggregated_samples].map(|v| v.to_string()));
            row.push(fmt_rate(d.mean_hops));
        }
        None => row.extend(std::iter::repeat_n(String::new(), 6)),
    }
    row
}

pub fn write_summary(path: &Path, rows: Vec<Vec<String>>) -> Result<(), HarnessError> {
    let header = summary_header();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(path, &header, rows)
}
