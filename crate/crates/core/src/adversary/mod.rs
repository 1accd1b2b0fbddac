//! Adversarial strategies: the aggregation denial-of-service attack, the
//! delay (black-hole) attack and passive first-node source detection.

mod detection;
mod ledger;

pub use detection::{detection_report, DetectionEntry, DetectionLog, DetectionReport};
pub use ledger::{attack_cost_summary, AttackEntry, AttackLedger, AttackOutcome, CostSummary};

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;

use crate::mw::{aggregate, KernelId, KernelIdAllocator, MwError, Transaction, MODULUS};
use crate::relay::{NodeId, TxRef};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    DosAggregate,
    Delay,
    PassiveObserve,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::DosAggregate => "dos_aggregate",
            Strategy::Delay => "delay",
            Strategy::PassiveObserve => "passive_observe",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dos_aggregate" => Ok(Strategy::DosAggregate),
            "delay" => Ok(Strategy::Delay),
            "passive_observe" => Ok(Strategy::PassiveObserve),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackConfig {
    pub strategy: Strategy,
    /// 0 attacks every stem arrival on its own.
    pub batch_window_ms: u64,
    /// `None` never forwards (black hole).
    pub delay_ms: Option<u64>,
    pub fee_margin: u64,
    /// Also attack fluffed arrivals. They survive anyway.
    pub attack_fluff: bool,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            strategy: Strategy::DosAggregate,
            batch_window_ms: 0,
            delay_ms: None,
            fee_margin: 1,
            attack_fluff: false,
        }
    }
}

/// Value held by each pre-funded adversary coin.
pub const COIN_VALUE: u64 = 1_000_000_000;

/// Fee that makes a 1-input, 1-output, 1-kernel transaction strictly more
/// profitable than `victim`: `ceil(fee * 860 / size) + margin`.
pub fn tb_fee(victim_fee: u64, victim_size: u64, margin: u64) -> u64 {
    let tb_size = crate::mw::SizeModel::default().size(1, 1, 1) as u128;
    let num = victim_fee as u128 * tb_size;
    let fee = num.div_ceil(victim_size as u128) as u64;
    fee + margin
}

/// An attack ready to be fluffed: `tb` first, then `aggregate = T_A + T_B`.
#[derive(Debug, Clone)]
pub struct Attack {
    pub node: NodeId,
    pub tb: TxRef,
    pub aggregate: TxRef,
    pub entry: usize,
}

/// Builds T_B for the given victims and the aggregate of all of them with T_B.
pub fn dos_aggregate<R: Rng + ?Sized>(
    victims: &[TxRef],
    fee_margin: u64,
    kernel: KernelId,
    rng: &mut R,
) -> Result<(Transaction, Transaction), MwError> {
    let mut joined: Transaction = (*victims[0]).clone();
    for v in &victims[1..] {
        joined = aggregate(&joined, v)?;
    }
    let fee = tb_fee(joined.fee, joined.size(), fee_margin);
    let coin = (rng.random_range(1..MODULUS), COIN_VALUE);
    let tb = Transaction::build(&[coin], &[COIN_VALUE - fee], fee, kernel, rng)?;
    let agg = aggregate(&joined, &tb)?;
    Ok((tb, agg))
}

/// What the coalition does with a stem arrival at one of its nodes.
#[derive(Debug, Clone)]
pub enum Move {
    /// Hand to the node's honest relay engine.
    Relay,
    /// Drop without a trace.
    Swallow,
    /// Relay honestly at the given time.
    Delay(SimTime),
    /// Fluff the attack transactions.
    Attack(Attack),
    /// Held for the batch window; `Some` when a new window opened.
    Buffered(Option<SimTime>),
}

/// Shared state of every adversarial node. Knowledge is global and
/// immediate across the coalition.
#[derive(Debug, Clone)]
pub struct Coalition {
    pub config: AttackConfig,
    pub ledger: AttackLedger,
    pub detection: DetectionLog,
    /// Attacked kernel -> ledger entry.
    attacked: HashMap<KernelId, usize>,
    own_kernels: HashSet<KernelId>,
    batches: BTreeMap<NodeId, Vec<TxRef>>,
    delayed: HashSet<KernelId>,
}

impl Coalition {
    pub fn new(config: AttackConfig) -> Self {
        Coalition {
            config,
            ledger: AttackLedger::default(),
            detection: DetectionLog::default(),
            attacked: HashMap::new(),
            own_kernels: HashSet::new(),
            batches: BTreeMap::new(),
            delayed: HashSet::new(),
        }
    }

    pub fn is_own(&self, k: KernelId) -> bool {
        self.own_kernels.contains(&k)
    }

    /// Kernels that passed through a delaying node.
    pub fn delayed_kernels(&self) -> &HashSet<KernelId> {
        &self.delayed
    }

    /// An earlier attack on `k` whose T_B has not reached the chain yet.
    fn pending(&self, k: KernelId, on_chain: &HashSet<KernelId>) -> bool {
        self.attacked
            .get(&k)
            .is_some_and(|&e| match self.ledger.entries.get(e) {
                Some(entry) => !on_chain.contains(&entry.tb_kernel),
                None => true, // still in a batch window
            })
    }

    fn attackable(&self, tx: &Transaction, on_chain: &HashSet<KernelId>) -> bool {
        tx.validate()
            && tx.kernels.iter().all(|k| {
                !self.own_kernels.contains(&k.id)
                    && !on_chain.contains(&k.id)
                    && !self.pending(k.id, on_chain)
            })
    }

    pub fn on_stem<R: Rng + ?Sized>(
        &mut self,
        node: NodeId,
        tx: TxRef,
        now: SimTime,
        on_chain: &HashSet<KernelId>,
        kernels: &mut KernelIdAllocator,
        rng: &mut R,
    ) -> Move {
        match self.config.strategy {
            Strategy::PassiveObserve => Move::Relay,
            Strategy::Delay => {
                self.delayed.extend(tx.kernels.iter().map(|k| k.id));
                match self.config.delay_ms {
                    None => Move::Swallow,
                    Some(0) => Move::Relay,
                    Some(d) => Move::Delay(now + d),
                }
            }
            Strategy::DosAggregate => {
                if !self.attackable(&tx, on_chain) {
                    return Move::Swallow;
                }
                if self.config.batch_window_ms > 0 {
                    for k in &tx.kernels {
                        // placeholder entry until the window closes
                        self.attacked.insert(k.id, usize::MAX);
                    }
                    let batch = self.batches.entry(node).or_default();
                    batch.push(tx);
                    let opened = batch.len() == 1;
                    return Move::Buffered(opened.then(|| now + self.config.batch_window_ms));
                }
                match self.launch(node, vec![tx], now, kernels, rng) {
                    Some(a) => Move::Attack(a),
                    None => Move::Swallow,
                }
            }
        }
    }

    /// A fluffed arrival; only attacked when `attack_fluff` is set.
    pub fn on_fluff<R: Rng + ?Sized>(
        &mut self,
        node: NodeId,
        tx: TxRef,
        now: SimTime,
        on_chain: &HashSet<KernelId>,
        kernels: &mut KernelIdAllocator,
        rng: &mut R,
    ) -> Option<Attack> {
        if self.config.strategy != Strategy::DosAggregate
            || !self.config.attack_fluff
            || !self.attackable(&tx, on_chain)
        {
            return None;
        }
        self.launch(node, vec![tx], now, kernels, rng)
    }

    /// Closes the batch window of `node`.
    pub fn flush<R: Rng + ?Sized>(
        &mut self,
        node: NodeId,
        now: SimTime,
        on_chain: &HashSet<KernelId>,
        kernels: &mut KernelIdAllocator,
        rng: &mut R,
    ) -> Option<Attack> {
        let batch = self.batches.remove(&node)?;
        let victims: Vec<TxRef> = batch
            .into_iter()
            .filter(|t| t.kernels.iter().all(|k| !on_chain.contains(&k.id)))
            .collect();
        if victims.is_empty() {
            return None;
        }
        self.launch(node, victims, now, kernels, rng)
    }

    fn launch<R: Rng + ?Sized>(
        &mut self,
        node: NodeId,
        victims: Vec<TxRef>,
        now: SimTime,
        kernels: &mut KernelIdAllocator,
        rng: &mut R,
    ) -> Option<Attack> {
        let kernel = kernels.fresh();
        let (tb, agg) = dos_aggregate(&victims, self.config.fee_margin, kernel, rng).ok()?;
        self.own_kernels.insert(kernel);
        let entry = self.ledger.entries.len();
        for v in &victims {
            for k in &v.kernels {
                self.attacked.insert(k.id, entry);
            }
        }
        let tb = Arc::new(tb);
        self.ledger.entries.push(AttackEntry {
            node,
            attacked_at: now,
            victims: victims.iter().map(|v| v.kernel_set()).collect(),
            victim_fee: victims.iter().map(|v| v.fee).sum(),
            victim_size: victims.iter().map(|v| v.size()).sum(),
            tb_kernel: kernel,
            tb_fee: tb.fee,
            tb: tb.clone(),
        });
        Some(Attack {
            node,
            tb,
            aggregate: Arc::new(agg),
            entry,
        })
    }

    /// T_Bs not yet on chain, for periodic re-broadcast.
    pub fn unconfirmed_tbs<'a>(
        &'a self,
        on_chain: &'a HashSet<KernelId>,
    ) -> impl Iterator<Item = (NodeId, TxRef)> + 'a {
        self.ledger
            .entries
            .iter()
            .filter(|e| !on_chain.contains(&e.tb_kernel))
            .map(|e| (e.node, e.tb.clone()))
    }
}
