//! Discrete-event execution of a whole network.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};

use super::chain::ChainState;
use super::config::{ConfigError, SimConfig};
use super::topology::{generate_topology, Topology};
use crate::adversary::{Coalition, Move, Strategy};
use crate::mw::{Block, KernelId, KernelIdAllocator, KernelSet, Transaction, MODULUS};
use crate::records::{TxKind, TxRecord, TxStatus};
use crate::relay::{EntryId, NodeId, NodeState, RelayAction, TimerKind, TxRef};
use crate::seed::{self, SimRng};
use crate::time::SimTime;

const RESEND_SWEEP_MS: u64 = 1_000;

#[derive(Debug, Clone)]
enum Msg {
    Stem(TxRef),
    Fluff(TxRef),
    Block(Arc<Block>, Arc<HashSet<KernelId>>),
}

#[derive(Debug, Clone)]
enum EventKind {
    Deliver { to: NodeId, from: NodeId, msg: Msg },
    Timer { node: NodeId, entry: EntryId, kind: TimerKind },
    GenerateTx { node: NodeId },
    MineBlock,
    AdversaryFlush { node: NodeId },
    DelayedForward { node: NodeId, from: NodeId, tx: TxRef },
    ResendSweep,
}

#[derive(Debug, Clone)]
struct Event {
    time: SimTime,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // reversed so the max-heap pops the earliest (time, seq)
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub config: SimConfig,
    pub topology: Topology,
    pub chain: ChainState,
    pub records: Vec<TxRecord>,
    pub coalition: Coalition,
    pub horizon: SimTime,
    pub events: u64,
}

/// Honest records due for a resend: not on chain, last sent at least
/// `interval_ms` ago, and not excused by `skip`.
pub fn resend_sweep(
    now: SimTime,
    records: &[TxRecord],
    last_sent: &[SimTime],
    interval_ms: u64,
    skip: impl Fn(usize) -> bool,
) -> Vec<usize> {
    if interval_ms == 0 {
        return Vec::new();
    }
    records
        .iter()
        .enumerate()
        .filter(|(i, r)| {
            r.kind == TxKind::Honest
                && r.included.is_none()
                && now.saturating_sub(last_sent[*i]) >= interval_ms
                && !skip(*i)
        })
        .map(|(i, _)| i)
        .collect()
}

struct Sim {
    cfg: SimConfig,
    topo: Topology,
    honest: Vec<NodeId>,
    nodes: Vec<NodeState>,
    node_rngs: Vec<SimRng>,
    net_rng: SimRng,
    txgen_rng: SimRng,
    block_rng: SimRng,
    adv_rng: SimRng,
    latency: Normal<f64>,
    queue: BinaryHeap<Event>,
    seq: u64,
    link_clock: HashMap<(NodeId, NodeId), SimTime>,
    now: SimTime,
    chain: ChainState,
    kernels: KernelIdAllocator,
    coalition: Coalition,
    records: Vec<TxRecord>,
    txs: Vec<TxRef>,
    last_sent: Vec<SimTime>,
    by_kernel: HashMap<KernelId, usize>,
    by_key: HashMap<KernelSet, usize>,
    blocks_seen: Vec<HashSet<u64>>,
    events: u64,
}

/// Runs the network from time 0 up to and including `duration_s`.
pub fn run_des(cfg: &SimConfig) -> Result<SimOutcome, ConfigError> {
    let master = cfg.master_seed;
    let topo = generate_topology(cfg, &mut seed::stream(master, seed::TOPOLOGY, 0))?;
    let n = topo.len();
    let nodes = (0..n)
        .map(|i| NodeState::new(NodeId(i as u32), topo.adjacency[i].clone(), cfg.relay.clone()))
        .collect();
    let latency = Normal::new(cfg.latency_mean_ms, cfg.latency_sd_ms).map_err(|e| {
        ConfigError::Invalid {
            key: "latency_sd_ms",
            reason: e.to_string(),
        }
    })?;
    let mut sim = Sim {
        honest: topo.honest_nodes(),
        nodes,
        node_rngs: (0..n as u64).map(|i| seed::stream(master, seed::NODE, i)).collect(),
        net_rng: seed::stream(master, seed::NETWORK, 0),
        txgen_rng: seed::stream(master, seed::TXGEN, 0),
        block_rng: seed::stream(master, seed::BLOCKS, 0),
        adv_rng: seed::stream(master, seed::ADVERSARY, 0),
        latency,
        queue: BinaryHeap::new(),
        seq: 0,
        link_clock: HashMap::new(),
        now: SimTime::ZERO,
        chain: ChainState::default(),
        kernels: KernelIdAllocator::new(),
        coalition: Coalition::new(cfg.attack.clone()),
        records: Vec::new(),
        txs: Vec::new(),
        last_sent: Vec::new(),
        by_kernel: HashMap::new(),
        by_key: HashMap::new(),
        blocks_seen: vec![HashSet::new(); n],
        events: 0,
        topo,
        cfg: cfg.clone(),
    };
    sim.run();
    Ok(sim.finish())
}

impl Sim {
    fn push(&mut self, time: SimTime, kind: EventKind) {
        self.seq += 1;
        self.queue.push(Event {
            time,
            seq: self.seq,
            kind,
        });
    }

    fn exp_ms(rng: &mut SimRng, rate_per_s: f64) -> u64 {
        let d = Exp::new(rate_per_s).expect("positive rate");
        let secs: f64 = d.sample(rng);
        crate::time::secs_to_ms(secs).max(1)
    }

    /// Latency-delayed delivery. Links are FIFO: a message never overtakes
    /// an earlier one on the same link.
    fn send(&mut self, from: NodeId, to: NodeId, msg: Msg) {
        let lat = self.latency.sample(&mut self.net_rng).round().max(1.0) as u64;
        let mut at = self.now + lat;
        let clock = self.link_clock.entry((from, to)).or_insert(SimTime::ZERO);
        if at < *clock {
            at = *clock;
        }
        *clock = at;
        self.push(at, EventKind::Deliver { to, from, msg });
    }

    fn run(&mut self) {
        let horizon = SimTime(self.cfg.horizon_ms());
        if self.cfg.tx_rate_per_node_per_s > 0.0 {
            for i in 0..self.honest.len() {
                let node = self.honest[i];
                let dt = Self::exp_ms(&mut self.txgen_rng, self.cfg.tx_rate_per_node_per_s);
                self.push(SimTime(dt), EventKind::GenerateTx { node });
            }
        }
        let first_block = self.next_block_gap();
        self.push(SimTime(first_block), EventKind::MineBlock);
        if self.cfg.resend_interval_s > 0.0 {
            self.push(SimTime(RESEND_SWEEP_MS), EventKind::ResendSweep);
        }

        while let Some(ev) = self.queue.pop() {
            if ev.time > horizon {
                break;
            }
            self.now = ev.time;
            self.events += 1;
            self.dispatch(ev.kind);
        }
    }

    fn next_block_gap(&mut self) -> u64 {
        let mean = self.cfg.block_interval_s;
        if self.cfg.fixed_block_interval {
            self.cfg.block_interval_ms()
        } else {
            Self::exp_ms(&mut self.block_rng, 1.0 / mean)
        }
    }

    fn dispatch(&mut self, kind: EventKind) {
        match kind {
            EventKind::Deliver { to, from, msg } => self.deliver(to, from, msg),
            EventKind::Timer { node, entry, kind } => {
                let acts = self.nodes[node.idx()].on_timed_out(
                    entry,
                    kind,
                    self.now,
                    &mut self.node_rngs[node.idx()],
                );
                self.execute(node, acts);
            }
            EventKind::GenerateTx { node } => self.generate_tx(node),
            EventKind::MineBlock => self.mine(),
            EventKind::AdversaryFlush { node } => {
                let attack = self.coalition.flush(
                    node,
                    self.now,
                    self.chain.kernel_index(),
                    &mut self.kernels,
                    &mut self.adv_rng,
                );
                if let Some(a) = attack {
                    self.launch(a);
                }
            }
            EventKind::DelayedForward { node, from, tx } => self.relay_stem(node, Some(from), tx),
            EventKind::ResendSweep => self.resend(),
        }
    }

    fn relay_stem(&mut self, node: NodeId, from: Option<NodeId>, tx: TxRef) {
        let acts = self.nodes[node.idx()].on_transaction(
            tx,
            from,
            true,
            self.now,
            &mut self.node_rngs[node.idx()],
        );
        self.execute(node, acts);
    }

    fn deliver(&mut self, to: NodeId, from: NodeId, msg: Msg) {
        let malicious = self.topo.is_malicious(to);
        match msg {
            Msg::Stem(tx) if malicious => self.adversary_stem(to, from, tx),
            Msg::Stem(tx) => self.relay_stem(to, Some(from), tx),
            Msg::Fluff(tx) => {
                if malicious && self.coalition.config.attack_fluff {
                    let attack = self.coalition.on_fluff(
                        to,
                        tx.clone(),
                        self.now,
                        self.chain.kernel_index(),
                        &mut self.kernels,
                        &mut self.adv_rng,
                    );
                    if let Some(a) = attack {
                        self.launch(a);
                        return;
                    }
                }
                let acts = self.nodes[to.idx()].on_transaction(
                    tx,
                    Some(from),
                    false,
                    self.now,
                    &mut self.node_rngs[to.idx()],
                );
                self.execute(to, acts);
            }
            Msg::Block(block, kernels) => self.receive_block(to, Some(from), block, kernels),
        }
    }

    fn adversary_stem(&mut self, to: NodeId, from: NodeId, tx: TxRef) {
        let hops = tx
            .kernels
            .iter()
            .filter_map(|k| self.by_kernel.get(&k.id))
            .map(|&i| self.records[i].stem_hops)
            .max()
            .unwrap_or(0);
        let (records, by_kernel) = (&self.records, &self.by_kernel);
        self.coalition.detection.record_first_node(
            to,
            &tx,
            from,
            |k| {
                by_kernel
                    .get(&k)
                    .map(|&i| &records[i])
                    .filter(|r| r.kind == TxKind::Honest)
                    .map(|r| r.origin)
            },
            hops,
        );

        let mv = self.coalition.on_stem(
            to,
            tx.clone(),
            self.now,
            self.chain.kernel_index(),
            &mut self.kernels,
            &mut self.adv_rng,
        );
        if self.coalition.config.strategy == Strategy::Delay && !matches!(mv, Move::Relay) {
            self.mark_attacked(&tx);
        }
        match mv {
            Move::Relay => self.relay_stem(to, Some(from), tx),
            Move::Swallow | Move::Buffered(None) => {}
            Move::Delay(at) => self.push(at, EventKind::DelayedForward { node: to, from, tx }),
            Move::Attack(a) => self.launch(a),
            Move::Buffered(Some(at)) => self.push(at, EventKind::AdversaryFlush { node: to }),
        }
    }

    fn mark_attacked(&mut self, tx: &Transaction) {
        for k in &tx.kernels {
            if let Some(&i) = self.by_kernel.get(&k.id) {
                if self.records[i].kind == TxKind::Honest {
                    self.records[i].was_attacked = true;
                }
            }
        }
    }

    fn add_record(&mut self, tx: TxRef, origin: NodeId, kind: TxKind) -> usize {
        let idx = self.records.len();
        self.records
            .push(TxRecord::new(idx as u64, origin, kind, self.now, tx.fee));
        match kind {
            TxKind::Aggregate => {
                self.by_key.insert(tx.kernel_set(), idx);
            }
            _ => {
                for k in &tx.kernels {
                    self.by_kernel.insert(k.id, idx);
                }
            }
        }
        self.txs.push(tx);
        self.last_sent.push(self.now);
        idx
    }

    fn launch(&mut self, a: crate::adversary::Attack) {
        self.mark_attacked(&a.aggregate);
        self.add_record(a.tb.clone(), a.node, TxKind::AdversarialTb);
        self.add_record(a.aggregate.clone(), a.node, TxKind::Aggregate);
        // T_B goes out first; FIFO links keep it ahead of the aggregate everywhere
        for tx in [a.tb, a.aggregate] {
            let acts = self.nodes[a.node.idx()].on_transaction_fluff(tx, None);
            self.execute(a.node, acts);
        }
    }

    fn generate_tx(&mut self, node: NodeId) {
        let rng = &mut self.txgen_rng;
        let fee = rng.random_range(self.cfg.fee_min..=self.cfg.fee_max);
        let v1 = rng.random_range(1..=1000u64);
        let v2 = rng.random_range(1..=1000u64);
        let coin = (rng.random_range(1..MODULUS), v1 + v2 + fee);
        let tx = Transaction::build(&[coin], &[v1, v2], fee, self.kernels.fresh(), rng)
            .expect("balanced by construction");
        let tx = Arc::new(tx);
        self.add_record(tx.clone(), node, TxKind::Honest);
        self.relay_stem(node, None, tx);

        let dt = Self::exp_ms(&mut self.txgen_rng, self.cfg.tx_rate_per_node_per_s);
        self.push(self.now + dt, EventKind::GenerateTx { node });
    }

    fn mine(&mut self) {
        let producer = self.honest[self.block_rng.random_range(0..self.honest.len() as u32) as usize];
        let block = self.chain.mine_block(
            self.nodes[producer.idx()].fluffpool(),
            self.cfg.block_capacity_bytes,
            self.now,
        );
        let mut kernels = HashSet::new();
        for tx in &block.transactions {
            if let Some(&i) = self.by_key.get(&tx.kernel_set()) {
                self.records[i].included = Some(self.now);
            }
            for k in &tx.kernels {
                kernels.insert(k.id);
                if let Some(&i) = self.by_kernel.get(&k.id) {
                    self.records[i].included.get_or_insert(self.now);
                }
            }
        }
        self.receive_block(producer, None, block, Arc::new(kernels));

        // a T_B that lost a pool race anywhere gets another push
        let pending: Vec<(NodeId, TxRef)> = self
            .coalition
            .unconfirmed_tbs(self.chain.kernel_index())
            .collect();
        for (node, tb) in pending {
            for i in 0..self.topo.adjacency[node.idx()].len() {
                let peer = self.topo.adjacency[node.idx()][i];
                self.send(node, peer, Msg::Fluff(tb.clone()));
            }
        }

        let gap = self.next_block_gap();
        self.push(self.now + gap, EventKind::MineBlock);
    }

    fn receive_block(
        &mut self,
        node: NodeId,
        from: Option<NodeId>,
        block: Arc<Block>,
        kernels: Arc<HashSet<KernelId>>,
    ) {
        if !self.blocks_seen[node.idx()].insert(block.height) {
            return;
        }
        self.nodes[node.idx()].purge_conflicts(|k| kernels.contains(&k));
        for i in 0..self.topo.adjacency[node.idx()].len() {
            let peer = self.topo.adjacency[node.idx()][i];
            if Some(peer) != from {
                self.send(node, peer, Msg::Block(block.clone(), kernels.clone()));
            }
        }
    }

    fn resend(&mut self) {
        let interval = crate::time::secs_to_ms(self.cfg.resend_interval_s);
        let due = {
            let (nodes, records, txs) = (&self.nodes, &self.records, &self.txs);
            resend_sweep(self.now, records, &self.last_sent, interval, |i| {
                // still waiting in the origin's own fluffpool: nothing to redo
                nodes[records[i].origin.idx()]
                    .fluffpool()
                    .contains(&txs[i].kernel_set())
            })
        };
        for i in due {
            self.last_sent[i] = self.now;
            let origin = self.records[i].origin;
            let tx = self.txs[i].clone();
            self.relay_stem(origin, None, tx);
        }
        self.push(self.now + RESEND_SWEEP_MS, EventKind::ResendSweep);
    }

    fn execute(&mut self, node: NodeId, actions: Vec<RelayAction>) {
        for act in actions {
            match act {
                RelayAction::SendStem { peer, tx } => {
                    for k in &tx.kernels {
                        if let Some(&i) = self.by_kernel.get(&k.id) {
                            self.records[i].stem_hops += 1;
                        }
                    }
                    self.send(node, peer, Msg::Stem(tx));
                }
                RelayAction::Broadcast { tx, except } => {
                    self.mark_fluffed(&tx);
                    for i in 0..self.topo.adjacency[node.idx()].len() {
                        let peer = self.topo.adjacency[node.idx()][i];
                        if Some(peer) != except {
                            self.send(node, peer, Msg::Fluff(tx.clone()));
                        }
                    }
                }
                RelayAction::SetTimer {
                    kind,
                    deadline,
                    entry,
                } => self.push(deadline, EventKind::Timer { node, entry, kind }),
                RelayAction::DropTx { .. } => {}
            }
        }
    }

    fn mark_fluffed(&mut self, tx: &Transaction) {
        let now = self.now;
        for k in &tx.kernels {
            if let Some(&i) = self.by_kernel.get(&k.id) {
                self.records[i].first_fluff.get_or_insert(now);
            }
        }
        if tx.kernel_count() > 1 {
            if let Some(&i) = self.by_key.get(&tx.kernel_set()) {
                self.records[i].first_fluff.get_or_insert(now);
            }
        }
    }

    fn finish(mut self) -> SimOutcome {
        let mut held: HashSet<KernelId> = HashSet::new();
        for node in &self.nodes {
            for (_, e) in node.stempool().iter() {
                held.extend(e.key.ids());
            }
            for e in node.fluffpool().by_priority_desc() {
                held.extend(e.tx.kernels.iter().map(|k| k.id));
            }
        }
        // delayed transactions may still surface, and resent ones get another path
        let attack_is_final = self.coalition.config.strategy == Strategy::DosAggregate
            && self.cfg.resend_interval_s == 0.0;
        for (r, tx) in self.records.iter_mut().zip(&self.txs) {
            let ks = tx.kernels.iter().map(|k| k.id);
            r.status = if r.included.is_some() {
                TxStatus::Included
            } else if (r.was_attacked && attack_is_final)
                || ks.clone().any(|k| self.chain.contains(k))
                || !ks.clone().any(|k| held.contains(&k))
            {
                TxStatus::ExcludedByConflict
            } else {
                TxStatus::PendingAtHorizon
            };
        }
        SimOutcome {
            horizon: SimTime(self.cfg.horizon_ms()),
            config: self.cfg,
            topology: self.topo,
            chain: self.chain,
            records: self.records,
            coalition: self.coalition,
            events: self.events,
        }
    }
}
