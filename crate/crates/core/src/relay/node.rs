use std::sync::Arc;

use rand::Rng;

use crate::mw::{aggregate, KernelId, Profitability};
use crate::time::SimTime;

use super::pools::{EntryId, Fluffpool, Priority, StemEntry, Stempool};
use super::{pick_stem_peer, DropReason, NodeId, RelayAction, RelayParams, TimerKind, TxRef};

/// One peer's relay state.
///
/// All handlers return the effects they want executed; the caller owns the
/// clock and the random stream.
#[derive(Debug, Clone)]
pub struct NodeState {
    pub id: NodeId,
    pub peers: Vec<NodeId>,
    pub params: RelayParams,
    stempool: Stempool,
    fluffpool: Fluffpool,
    next_entry: EntryId,
}

impl NodeState {
    pub fn new(id: NodeId, peers: Vec<NodeId>, params: RelayParams) -> Self {
        let fluffpool = Fluffpool::new(params.fluffpool_capacity);
        NodeState {
            id,
            peers,
            params,
            stempool: Stempool::default(),
            fluffpool,
            next_entry: 0,
        }
    }

    pub fn stempool(&self) -> &Stempool {
        &self.stempool
    }

    pub fn fluffpool(&self) -> &Fluffpool {
        &self.fluffpool
    }

    /// Entry point for any incoming transaction.
    pub fn on_transaction<R: Rng + ?Sized>(
        &mut self,
        tx: TxRef,
        sender: Option<NodeId>,
        is_stem: bool,
        now: SimTime,
        rng: &mut R,
    ) -> Vec<RelayAction> {
        if is_stem {
            self.on_transaction_stem(tx, sender, now, rng)
        } else {
            self.on_transaction_fluff(tx, sender)
        }
    }

    pub fn on_transaction_stem<R: Rng + ?Sized>(
        &mut self,
        tx: TxRef,
        sender: Option<NodeId>,
        now: SimTime,
        rng: &mut R,
    ) -> Vec<RelayAction> {
        let mut out = Vec::new();
        let key = tx.kernel_set();
        if self.fluffpool.contains(&key) {
            // already past the stem phase here, e.g. a resent transaction
            out.push(RelayAction::DropTx {
                tx,
                reason: DropReason::DuplicateFluff,
            });
            return out;
        }
        let mut validated = false;

        for &k in key.ids() {
            let Some(qid) = self.stempool.entry_with_kernel(k) else {
                continue;
            };
            let q = self.stempool.get(qid).expect("indexed entry");
            if !key.is_superset(&q.key) {
                out.push(RelayAction::DropTx {
                    tx,
                    reason: DropReason::NotCovering,
                });
                return out;
            }
            if q.key.is_superset(&key) {
                if q.aggregating {
                    out.push(RelayAction::DropTx {
                        tx,
                        reason: DropReason::DuplicateStem,
                    });
                } else {
                    // duplicate receipt of a forwarded tx: relay the pooled copy again
                    self.relay_pooled(qid, now, rng, &mut out);
                }
                return out;
            }
            if !validated {
                if !tx.validate() {
                    out.push(RelayAction::DropTx {
                        tx,
                        reason: DropReason::Invalid,
                    });
                    return out;
                }
                validated = true;
            }
            self.stempool.remove(qid);
        }

        if !validated && !tx.validate() {
            out.push(RelayAction::DropTx {
                tx,
                reason: DropReason::Invalid,
            });
            return out;
        }

        let id = self.next_entry;
        self.next_entry += 1;
        self.stempool.insert(
            id,
            StemEntry {
                tx,
                key,
                from: sender,
                aggregating: false,
                aggregation_deadline: None,
                fluff_watch_deadline: None,
            },
        );
        self.relay_pooled(id, now, rng, &mut out);
        out
    }

    fn relay_pooled<R: Rng + ?Sized>(
        &mut self,
        id: EntryId,
        now: SimTime,
        rng: &mut R,
        out: &mut Vec<RelayAction>,
    ) {
        let outputs = self.stempool.get(id).expect("pooled").tx.outputs.len();
        if outputs >= self.params.outputs_max {
            self.on_transaction_aggregated(id, now, rng, out);
        } else {
            self.perform_aggregation(id, now, rng, out);
        }
    }

    /// Forward with probability `1 - fluff_probability`, else fluff.
    pub fn on_transaction_aggregated<R: Rng + ?Sized>(
        &mut self,
        id: EntryId,
        now: SimTime,
        rng: &mut R,
        out: &mut Vec<RelayAction>,
    ) {
        let entry = self.stempool.get_mut(id).expect("pooled");
        entry.aggregating = false;
        entry.aggregation_deadline = None;

        if self.peers.is_empty() {
            let tx = entry.tx.clone();
            out.extend(self.on_transaction_fluff(tx, None));
            return;
        }

        let draw: f64 = rng.random();
        if draw < 1.0 - self.params.fluff_probability {
            let peer = pick_stem_peer(&self.peers, entry.from, rng).expect("has peers");
            let wait = rng.random_range(self.params.timeout_min_ms..=self.params.timeout_max_ms);
            let deadline = now + wait;
            entry.fluff_watch_deadline = Some(deadline);
            out.push(RelayAction::SendStem {
                peer,
                tx: entry.tx.clone(),
            });
            out.push(RelayAction::SetTimer {
                kind: TimerKind::FluffWatch,
                deadline,
                entry: id,
            });
        } else {
            let tx = entry.tx.clone();
            out.extend(self.on_transaction_fluff(tx, None));
        }
    }

    /// Merges other aggregating entries into `id`, closest fee-per-byte first,
    /// then forwards or arms the aggregation timer.
    pub fn perform_aggregation<R: Rng + ?Sized>(
        &mut self,
        id: EntryId,
        now: SimTime,
        rng: &mut R,
        out: &mut Vec<RelayAction>,
    ) {
        let outputs_max = self.params.outputs_max;
        let base = self.stempool.get(id).expect("pooled").tx.profitability();
        let mut candidates: Vec<_> = self
            .stempool
            .iter()
            .filter(|(qid, q)| *qid != id && q.aggregating && q.tx.outputs.len() < outputs_max)
            .map(|(qid, q)| (q.tx.profitability().distance(&base), q.key.clone(), qid))
            .collect();
        candidates.sort_by(|a, b| {
            Profitability::cmp_distance(a.0, b.0).then_with(|| a.1.cmp(&b.1))
        });

        for (_, _, qid) in candidates {
            if self.stempool.get(id).expect("pooled").tx.outputs.len() >= outputs_max {
                break;
            }
            self.try_merge(id, qid);
        }

        let outputs = self.stempool.get(id).expect("pooled").tx.outputs.len();
        if outputs >= self.params.outputs_min {
            self.on_transaction_aggregated(id, now, rng, out);
        } else {
            let deadline = now + self.params.aggregation_time_ms;
            let entry = self.stempool.get_mut(id).expect("pooled");
            entry.aggregating = true;
            entry.aggregation_deadline = Some(deadline);
            out.push(RelayAction::SetTimer {
                kind: TimerKind::Aggregation,
                deadline,
                entry: id,
            });
        }
    }

    /// Folds entry `from` into entry `into` when the aggregate is valid and
    /// not already fluffed here.
    pub fn try_merge(&mut self, into: EntryId, from: EntryId) -> bool {
        let (Some(a), Some(b)) = (self.stempool.get(into), self.stempool.get(from)) else {
            return false;
        };
        match aggregate(&a.tx, &b.tx) {
            Ok(merged) if merged.validate() && !self.fluffpool.contains(&merged.kernel_set()) => {
                self.stempool.remove(from);
                self.stempool.replace_tx(into, Arc::new(merged));
                true
            }
            _ => false,
        }
    }

    /// Validates first, then updates both pools and broadcasts.
    pub fn on_transaction_fluff(&mut self, tx: TxRef, sender: Option<NodeId>) -> Vec<RelayAction> {
        let key = tx.kernel_set();
        // a fluffpool member is never also in the stempool, so this early exit
        // cannot skip a stempool removal
        if self.fluffpool.contains(&key) {
            return vec![RelayAction::DropTx {
                tx,
                reason: DropReason::DuplicateFluff,
            }];
        }
        if !tx.validate() {
            return vec![RelayAction::DropTx {
                tx,
                reason: DropReason::Invalid,
            }];
        }

        let was_in_stem = match self.stempool.find_exact(&key) {
            Some(id) => {
                self.stempool.remove(id);
                true
            }
            None => false,
        };
        if !was_in_stem {
            for &k in key.ids() {
                if let Some(qid) = self.stempool.entry_with_kernel(k) {
                    self.stempool.remove(qid);
                }
            }
        }

        let size = tx.size();
        let priority = Priority::of(&tx);
        while !self.fluffpool.has_room_for(size) {
            match self.fluffpool.least_profitable() {
                Some(least) if *least < priority => {
                    let victim = least.tiebreak.0.clone();
                    self.fluffpool.remove(&victim);
                }
                _ => {
                    return vec![RelayAction::DropTx {
                        tx,
                        reason: DropReason::LowPriority,
                    }];
                }
            }
        }

        self.fluffpool.insert(tx.clone());
        vec![RelayAction::Broadcast { tx, except: sender }]
    }

    pub fn on_timed_out<R: Rng + ?Sized>(
        &mut self,
        id: EntryId,
        kind: TimerKind,
        now: SimTime,
        rng: &mut R,
    ) -> Vec<RelayAction> {
        let mut out = Vec::new();
        let Some(entry) = self.stempool.get(id) else {
            return out;
        };
        match kind {
            TimerKind::Aggregation if entry.aggregating => {
                let mut tx = entry.tx.clone();
                Arc::make_mut(&mut tx).pad_outputs(self.params.outputs_min);
                self.stempool.replace_tx(id, tx);
                self.on_transaction_aggregated(id, now, rng, &mut out);
            }
            TimerKind::FluffWatch if !entry.aggregating => {
                let tx = entry.tx.clone();
                out = self.on_transaction_fluff(tx, None);
            }
            _ => {}
        }
        out
    }

    /// Drops pool entries touching any kernel for which `on_chain` holds.
    pub fn purge_conflicts(&mut self, mut on_chain: impl FnMut(KernelId) -> bool) -> usize {
        self.stempool.remove_where(&mut on_chain) + self.fluffpool.remove_where(&mut on_chain)
    }

    /// Pool invariants: kernel exclusivity, byte bound and pool disjointness.
    pub fn check_invariants(&self) -> bool {
        self.stempool.check_exclusivity()
            && self.fluffpool.bytes() <= self.fluffpool.capacity()
            && self
                .stempool
                .iter()
                .all(|(_, e)| !self.fluffpool.contains(&e.key))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mw::{KernelIdAllocator, Transaction};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::VecDeque;

    /// Replays scripted 64-bit words; `next_u32` takes the high half.
    struct Scripted(VecDeque<u64>);

    impl Scripted {
        fn draws(fractions: &[f64]) -> Self {
            Scripted(
                fractions
                    .iter()
                    .map(|f| ((f * (1u64 << 53) as f64) as u64) << 11)
                    .collect(),
            )
        }
    }

    impl rand::RngCore for Scripted {
        fn next_u32(&mut self) -> u32 {
            (self.next_u64() >> 32) as u32
        }
        fn next_u64(&mut self) -> u64 {
            self.0.pop_front().unwrap_or(0)
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            rand::RngCore::fill_bytes(&mut ChaCha8Rng::seed_from_u64(0), dst)
        }
    }

    struct Fixture {
        ids: KernelIdAllocator,
        rng: ChaCha8Rng,
    }

    impl Fixture {
        fn new() -> Self {
            Fixture {
                ids: KernelIdAllocator::new(),
                rng: ChaCha8Rng::seed_from_u64(11),
            }
        }

        fn tx(&mut self, outputs: usize, fee: u64) -> TxRef {
            let values = vec![10u64; outputs];
            let total = 10 * outputs as u64 + fee;
            Arc::new(
                Transaction::build(&[(99, total)], &values, fee, self.ids.fresh(), &mut self.rng)
                    .unwrap(),
            )
        }
    }

    fn node(peers: &[u32]) -> NodeState {
        NodeState::new(
            NodeId(0),
            peers.iter().map(|&p| NodeId(p)).collect(),
            RelayParams::default(),
        )
    }

    fn agg(a: &TxRef, b: &TxRef) -> TxRef {
        Arc::new(aggregate(a, b).unwrap())
    }

    fn now() -> SimTime {
        SimTime(1_000)
    }

    #[test]
    fn dispatch_by_phase() {
        let mut f = Fixture::new();
        let mut n = node(&[1, 2]);
        let tx = f.tx(2, 10);
        let acts = n.on_transaction(tx.clone(), Some(NodeId(1)), true, now(), &mut f.rng);
        assert!(matches!(
            acts.as_slice(),
            [RelayAction::SetTimer {
                kind: TimerKind::Aggregation,
                ..
            }]
        ));

        let mut n = node(&[1, 2]);
        let acts = n.on_transaction(tx.clone(), Some(NodeId(1)), false, now(), &mut f.rng);
        assert_eq!(
            acts,
            vec![RelayAction::Broadcast {
                tx,
                except: Some(NodeId(1))
            }]
        );
    }

    #[test]
    fn invalid_stem_is_dropped() {
        let mut f = Fixture::new();
        let mut n = node(&[1]);
        let mut bad = (*f.tx(2, 10)).clone();
        bad.outputs[0].rangeproof_ok = false;
        let acts = n.on_transaction(Arc::new(bad), None, true, now(), &mut f.rng);
        assert!(matches!(
            acts[0],
            RelayAction::DropTx {
                reason: DropReason::Invalid,
                ..
            }
        ));
        assert!(n.stempool().is_empty());
    }

    #[test]
    fn fresh_small_tx_waits_for_aggregation() {
        let mut f = Fixture::new();
        let mut n = node(&[1]);
        let tx = f.tx(2, 10);
        let acts = n.on_transaction_stem(tx, None, now(), &mut f.rng);
        assert_eq!(
            acts,
            vec![RelayAction::SetTimer {
                kind: TimerKind::Aggregation,
                deadline: SimTime(11_000),
                entry: 0
            }]
        );
        let e = n.stempool().get(0).unwrap();
        assert!(e.aggregating);
        assert_eq!(e.aggregation_deadline, Some(SimTime(11_000)));
    }

    #[test]
    fn covering_aggregate_replaces_pooled_part() {
        let mut f = Fixture::new();
        let mut n = node(&[1]);
        let a = f.tx(2, 10);
        let b = f.tx(2, 10);
        n.on_transaction_stem(a.clone(), None, now(), &mut f.rng);
        let ab = agg(&a, &b);
        n.on_transaction_stem(ab.clone(), None, now(), &mut f.rng);
        assert_eq!(n.stempool().len(), 1);
        let (_, e) = n.stempool().iter().next().unwrap();
        assert_eq!(e.key, ab.kernel_set());
        assert!(n.check_invariants());
    }

    #[test]
    fn non_covering_overlap_is_rejected() {
        let mut f = Fixture::new();
        let mut n = node(&[1]);
        let a = f.tx(2, 10);
        let b = f.tx(2, 10);
        let c = f.tx(2, 10);
        n.on_transaction_stem(agg(&a, &b), None, now(), &mut f.rng);
        let ac = agg(&a, &c);
        let acts = n.on_transaction_stem(ac, None, now(), &mut f.rng);
        assert!(matches!(
            acts.as_slice(),
            [RelayAction::DropTx {
                reason: DropReason::NotCovering,
                ..
            }]
        ));
        assert!(!DropReason::NotCovering.is_accept());
    }

    #[test]
    fn duplicate_of_aggregating_entry_is_accepted_and_dropped() {
        let mut f = Fixture::new();
        let mut n = node(&[1]);
        let a = f.tx(2, 10);
        n.on_transaction_stem(a.clone(), None, now(), &mut f.rng);
        let acts = n.on_transaction_stem(a, None, now(), &mut f.rng);
        assert!(matches!(
            acts.as_slice(),
            [RelayAction::DropTx {
                reason: DropReason::DuplicateStem,
                ..
            }]
        ));
        assert!(DropReason::DuplicateStem.is_accept());
    }

    #[test]
    fn duplicate_of_forwarded_entry_is_relayed_again() {
        let mut f = Fixture::new();
        let mut n = node(&[1]);
        let a = f.tx(6, 10);
        let mut stem = Scripted::draws(&[0.2, 0.0, 0.0]);
        n.on_transaction_stem(a.clone(), None, now(), &mut stem);
        let mut stem = Scripted::draws(&[0.2, 0.0, 0.0]);
        let acts = n.on_transaction_stem(a, None, now(), &mut stem);
        assert!(matches!(acts[0], RelayAction::SendStem { .. }));
        assert_eq!(n.stempool().len(), 1);
    }

    #[test]
    fn stem_copy_of_fluffed_tx_is_ignored() {
        let mut f = Fixture::new();
        let mut n = node(&[1]);
        let tx = f.tx(5, 10);
        n.on_transaction_fluff(tx.clone(), None);
        let acts = n.on_transaction_stem(tx, None, now(), &mut f.rng);
        assert!(matches!(
            acts.as_slice(),
            [RelayAction::DropTx {
                reason: DropReason::DuplicateFluff,
                ..
            }]
        ));
        assert!(n.stempool().is_empty());
    }

    #[test]
    fn wide_tx_skips_aggregation() {
        let mut f = Fixture::new();
        let mut n = node(&[1]);
        // a pooled aggregating entry that must NOT be merged into a 40-output tx
        let small = f.tx(2, 10);
        n.on_transaction_stem(small, None, now(), &mut f.rng);
        let wide = f.tx(40, 10);
        let mut draw = Scripted::draws(&[0.5, 0.0, 0.0]);
        let acts = n.on_transaction_stem(wide.clone(), None, now(), &mut draw);
        match &acts[0] {
            RelayAction::SendStem { tx, .. } => assert_eq!(tx.kernel_set(), wide.kernel_set()),
            other => panic!("expected stem forward, got {other:?}"),
        }
        assert_eq!(n.stempool().len(), 2);
    }

    #[test]
    fn stem_draw_forwards_with_watch_timer() {
        let mut f = Fixture::new();
        let mut n = node(&[1, 2, 3]);
        let tx = f.tx(5, 10);
        let mut draws = Scripted::draws(&[0.42, 0.5, 0.0]);
        let acts = n.on_transaction_stem(tx, None, now(), &mut draws);
        assert_eq!(acts.len(), 2);
        assert!(matches!(acts[0], RelayAction::SendStem { .. }));
        match acts[1] {
            RelayAction::SetTimer {
                kind: TimerKind::FluffWatch,
                deadline,
                ..
            } => {
                let wait = deadline - now();
                assert!((20_000..=50_000).contains(&wait), "wait {wait}");
            }
            ref other => panic!("{other:?}"),
        }
        assert!(n.fluffpool().is_empty());
    }

    #[test]
    fn fluff_draw_broadcasts() {
        let mut f = Fixture::new();
        let mut n = node(&[1, 2, 3]);
        let tx = f.tx(5, 10);
        let mut draws = Scripted::draws(&[0.95]);
        let acts = n.on_transaction_stem(tx.clone(), None, now(), &mut draws);
        assert_eq!(acts, vec![RelayAction::Broadcast { tx, except: None }]);
        assert!(n.stempool().is_empty());
        assert_eq!(n.fluffpool().len(), 1);
    }

    #[test]
    fn peerless_node_fluffs() {
        let mut f = Fixture::new();
        let mut n = node(&[]);
        let tx = f.tx(5, 10);
        let mut draws = Scripted::draws(&[0.0]);
        let acts = n.on_transaction_stem(tx.clone(), None, now(), &mut draws);
        assert_eq!(acts, vec![RelayAction::Broadcast { tx, except: None }]);
    }

    #[test]
    fn aggregation_reaches_outputs_min_and_forwards() {
        let mut f = Fixture::new();
        let mut n = node(&[1]);
        let mate = f.tx(3, 10);
        n.on_transaction_stem(mate.clone(), None, now(), &mut f.rng);
        let tx = f.tx(2, 10);
        let mut draws = Scripted::draws(&[0.1, 0.0, 0.0]);
        let acts = n.on_transaction_stem(tx.clone(), None, now(), &mut draws);
        match &acts[0] {
            RelayAction::SendStem { tx: sent, .. } => {
                assert_eq!(sent.outputs.len(), 5);
                assert_eq!(sent.kernel_count(), 2);
                assert!(sent.covers(&tx) && sent.covers(&mate));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(n.stempool().len(), 1);
    }

    #[test]
    fn aggregation_prefers_closest_profitability() {
        // tx at 0.055 per byte; candidates at 0.05 and 0.07 per byte
        let mut f = Fixture::new();
        let mut n = node(&[1]);
        // one-output txs are 860 bytes
        let size = 860u64;
        let low = f.tx(1, size * 50 / 1000);
        let high = f.tx(1, size * 70 / 1000);
        for (id, t) in [(50, &low), (70, &high)] {
            n.stempool.insert(
                id,
                StemEntry {
                    tx: t.clone(),
                    key: t.kernel_set(),
                    from: None,
                    aggregating: true,
                    aggregation_deadline: None,
                    fluff_watch_deadline: None,
                },
            );
        }
        n.params.outputs_max = 2; // room for exactly one merge
        let tx = f.tx(1, size * 55 / 1000);
        assert!((tx.profitability().as_f64() - 0.055).abs() < 1e-3);
        n.on_transaction_stem(tx.clone(), None, now(), &mut f.rng);
        let merged = n
            .stempool()
            .iter()
            .find(|(_, e)| e.key.contains(tx.kernels[0].id))
            .map(|(_, e)| e.key.clone())
            .unwrap();
        assert!(merged.contains(low.kernels[0].id));
        assert!(!merged.contains(high.kernels[0].id));
    }

    #[test]
    fn try_merge_outcomes() {
        let mut f = Fixture::new();
        let mut n = node(&[1]);
        let a = f.tx(1, 10);
        let b = f.tx(1, 10);
        n.on_transaction_stem(a, None, now(), &mut f.rng);
        n.on_transaction_stem(b, None, now(), &mut f.rng);
        // the second insert already merged the first
        assert_eq!(n.stempool().len(), 1);

        let mut n = node(&[1]);
        let c = f.tx(1, 10);
        let mut forged = (*f.tx(1, 10)).clone();
        n.on_transaction_stem(c, None, now(), &mut f.rng);
        let id_c = 0;
        // slip a forged entry into the pool directly
        forged.outputs[0].rangeproof_ok = false;
        let key = forged.kernel_set();
        n.stempool.insert(
            99,
            StemEntry {
                tx: Arc::new(forged),
                key,
                from: None,
                aggregating: true,
                aggregation_deadline: None,
                fluff_watch_deadline: None,
            },
        );
        assert!(!n.try_merge(id_c, 99));
        assert!(!n.try_merge(id_c, id_c));
        assert_eq!(n.stempool().len(), 2);
    }

    #[test]
    fn merge_never_recreates_a_fluffed_tx() {
        let mut f = Fixture::new();
        let mut n = node(&[1]);
        let (a, b) = (f.tx(2, 10), f.tx(2, 10));
        n.on_transaction_fluff(agg(&a, &b), None);
        n.on_transaction_stem(a.clone(), None, now(), &mut f.rng);
        n.on_transaction_stem(b.clone(), None, now(), &mut f.rng);
        assert_eq!(n.stempool().len(), 2);
        assert!(n.check_invariants());
    }

    #[test]
    fn fluffed_aggregate_evicts_stem_parts() {
        let mut f = Fixture::new();
        let mut n = node(&[1, 2]);
        let a = f.tx(5, 10);
        let mut draws = Scripted::draws(&[0.0, 0.0, 0.0]);
        n.on_transaction_stem(a.clone(), None, now(), &mut draws);
        assert_eq!(n.stempool().len(), 1);
        let b = f.tx(1, 10);
        let ab = agg(&a, &b);
        let acts = n.on_transaction_fluff(ab.clone(), Some(NodeId(2)));
        assert_eq!(
            acts,
            vec![RelayAction::Broadcast {
                tx: ab.clone(),
                except: Some(NodeId(2))
            }]
        );
        assert!(n.stempool().is_empty());
        // the forwarded entry's watch timer is now stale
        assert!(n.on_timed_out(0, TimerKind::FluffWatch, now(), &mut f.rng).is_empty());

        // second delivery is an idempotent no-op
        let before = n.fluffpool().bytes();
        let acts = n.on_transaction_fluff(ab, Some(NodeId(1)));
        assert!(matches!(
            acts.as_slice(),
            [RelayAction::DropTx {
                reason: DropReason::DuplicateFluff,
                ..
            }]
        ));
        assert_eq!(n.fluffpool().bytes(), before);
    }

    #[test]
    fn full_fluffpool_rejects_least_profitable_newcomer() {
        let mut f = Fixture::new();
        let mut params = RelayParams::default();
        let probe = f.tx(1, 100);
        params.fluffpool_capacity = probe.size() * 2;
        let mut n = NodeState::new(NodeId(0), vec![NodeId(1)], params);
        n.on_transaction_fluff(f.tx(1, 100), None);
        n.on_transaction_fluff(f.tx(1, 90), None);
        let cheap = f.tx(1, 1);
        let acts = n.on_transaction_fluff(cheap, None);
        assert!(matches!(
            acts.as_slice(),
            [RelayAction::DropTx {
                reason: DropReason::LowPriority,
                ..
            }]
        ));
        assert_eq!(n.fluffpool().len(), 2);

        // a richer newcomer evicts the 90-fee resident
        let rich = f.tx(1, 500);
        n.on_transaction_fluff(rich.clone(), None);
        assert_eq!(n.fluffpool().len(), 2);
        assert!(n.fluffpool().contains(&rich.kernel_set()));
        assert!(n.check_invariants());
    }

    #[test]
    fn invalid_fluff_leaves_stempool_alone() {
        let mut f = Fixture::new();
        let mut n = node(&[1]);
        let a = f.tx(2, 10);
        n.on_transaction_stem(a.clone(), None, now(), &mut f.rng);
        let mut forged = (*agg(&a, &f.tx(1, 10))).clone();
        forged.outputs[0].commitment.value = forged.outputs[0].commitment.value + 1u64.into();
        let acts = n.on_transaction_fluff(Arc::new(forged), Some(NodeId(1)));
        assert!(matches!(
            acts.as_slice(),
            [RelayAction::DropTx {
                reason: DropReason::Invalid,
                ..
            }]
        ));
        assert_eq!(n.stempool().len(), 1);
        assert!(n.fluffpool().is_empty());
    }

    #[test]
    fn aggregation_timeout_pads_and_forwards() {
        let mut f = Fixture::new();
        let mut n = node(&[1]);
        let tx = f.tx(2, 10);
        n.on_transaction_stem(tx, None, now(), &mut f.rng);
        let mut draws = Scripted::draws(&[0.3, 0.0, 0.0]);
        let acts = n.on_timed_out(0, TimerKind::Aggregation, SimTime(11_000), &mut draws);
        match &acts[0] {
            RelayAction::SendStem { tx, .. } => {
                assert_eq!(tx.outputs.len(), 5);
                assert_eq!(tx.outputs.iter().filter(|o| o.commitment.is_dummy).count(), 3);
                assert!(tx.validate());
            }
            other => panic!("{other:?}"),
        }
        // the aggregation timer is spent; a second firing does nothing
        assert!(n
            .on_timed_out(0, TimerKind::Aggregation, SimTime(12_000), &mut f.rng)
            .is_empty());
    }

    #[test]
    fn watch_timeout_emergency_fluffs() {
        let mut f = Fixture::new();
        let mut n = node(&[1]);
        let tx = f.tx(5, 10);
        let mut draws = Scripted::draws(&[0.3, 0.0, 0.0]);
        n.on_transaction_stem(tx.clone(), None, now(), &mut draws);
        let acts = n.on_timed_out(0, TimerKind::FluffWatch, SimTime(60_000), &mut f.rng);
        assert_eq!(acts, vec![RelayAction::Broadcast { tx, except: None }]);
        assert!(n.stempool().is_empty());
    }

    #[test]
    fn purge_removes_conflicting_entries() {
        let mut f = Fixture::new();
        let mut n = node(&[1]);
        let a = f.tx(2, 10);
        let b = f.tx(5, 10);
        n.on_transaction_stem(a.clone(), None, now(), &mut f.rng);
        n.on_transaction_fluff(b.clone(), None);
        let gone = n.purge_conflicts(|k| k == a.kernels[0].id || k == b.kernels[0].id);
        assert_eq!(gone, 2);
        assert!(n.stempool().is_empty() && n.fluffpool().is_empty());
    }
}
