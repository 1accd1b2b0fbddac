use crate::adversary::{attack_cost_summary, detection_report, CostSummary, DetectionReport};
use crate::net::SimOutcome;
use crate::records::{TxKind, TxRecord, TxStatus};

/// Inclusion latency over the included members of one group, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyStats {
    pub n: usize,
    pub mean_s: f64,
    pub median_s: f64,
    pub p90_s: f64,
}

impl LatencyStats {
    /// NaN statistics for an empty group.
    pub fn from_ms(mut ms: Vec<u64>) -> Self {
        let n = ms.len();
        if n == 0 {
            return LatencyStats {
                n,
                mean_s: f64::NAN,
                median_s: f64::NAN,
                p90_s: f64::NAN,
            };
        }
        ms.sort_unstable();
        let total: u64 = ms.iter().sum();
        let median = if n % 2 == 1 {
            ms[n / 2] as f64
        } else {
            (ms[n / 2 - 1] + ms[n / 2]) as f64 / 2.0
        };
        // nearest rank
        let rank = (9 * n).div_ceil(10);
        LatencyStats {
            n,
            mean_s: total as f64 / n as f64 / 1000.0,
            median_s: median / 1000.0,
            p90_s: ms[rank - 1] as f64 / 1000.0,
        }
    }
}

pub const LATENCY_GROUPS: [&str; 4] = ["honest", "honest_unattacked", "honest_attacked", "adversarial_tb"];

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    /// Honest transactions created early enough to be judged.
    pub honest: usize,
    pub included: usize,
    pub attacked: usize,
    /// Not included and provably never will be.
    pub lost: usize,
    pub inclusion_rate: f64,
    pub attacked_fraction: f64,
    /// Everything not included by the horizon, lost or still pending.
    pub excluded_fraction: f64,
    pub latency: [LatencyStats; 4],
}

impl Summary {
    pub fn latency_of(&self, group: &str) -> Option<&LatencyStats> {
        LATENCY_GROUPS
            .iter()
            .position(|g| *g == group)
            .map(|i| &self.latency[i])
    }
}

fn rate(num: usize, den: usize) -> f64 {
    if den == 0 {
        f64::NAN
    } else {
        num as f64 / den as f64
    }
}

/// Rates over honest transactions created at least `guard_ms` before the
/// horizon; adversarial T_Bs get the same cutoff and their own latency row.
pub fn summarize(records: &[TxRecord], horizon_ms: u64, guard_ms: u64) -> Option<Summary> {
    if records.is_empty() {
        return None;
    }
    let cutoff = horizon_ms.saturating_sub(guard_ms);
    let judged = |r: &&TxRecord| r.created.millis() <= cutoff;
    let honest: Vec<&TxRecord> = records
        .iter()
        .filter(|r| r.kind == TxKind::Honest)
        .filter(judged)
        .collect();
    let n = honest.len();
    let included = honest.iter().filter(|r| r.included.is_some()).count();
    let attacked = honest.iter().filter(|r| r.was_attacked).count();
    let lost = honest
        .iter()
        .filter(|r| r.status == TxStatus::ExcludedByConflict)
        .count();

    let lat = |f: &dyn Fn(&TxRecord) -> bool| {
        LatencyStats::from_ms(
            records
                .iter()
                .filter(judged)
                .filter(|r| f(r))
                .filter_map(TxRecord::latency_ms)
                .collect(),
        )
    };
    let latency = [
        lat(&|r| r.kind == TxKind::Honest),
        lat(&|r| r.kind == TxKind::Honest && !r.was_attacked),
        lat(&|r| r.kind == TxKind::Honest && r.was_attacked),
        lat(&|r| r.kind == TxKind::AdversarialTb),
    ];
    Some(Summary {
        honest: n,
        included,
        attacked,
        lost,
        inclusion_rate: rate(included, n),
        attacked_fraction: rate(attacked, n),
        excluded_fraction: rate(n - included, n),
        latency,
    })
}

/// Everything reported for one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub tx: Option<Summary>,
    pub cost: CostSummary,
    pub detection: Option<DetectionReport>,
}

pub fn summarize_outcome(out: &SimOutcome) -> RunSummary {
    let guard = 3 * out.config.block_interval_ms();
    RunSummary {
        tx: summarize(&out.records, out.horizon.millis(), guard),
        cost: attack_cost_summary(&out.coalition.ledger, &out.chain),
        detection: detection_report(&out.coalition.detection),
    }
}
