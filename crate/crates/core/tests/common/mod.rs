#![allow(dead_code)]

//! Algebra properties shared by the property tests and the acceptance run.

use std::collections::BTreeMap;

use mwrelay::mw::{aggregate, cut_through, Commitment, Kernel, KernelId, KernelIdAllocator, Transaction, MODULUS};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Shape of a random balanced transaction.
#[derive(Debug, Clone)]
pub struct TxSpec {
    pub seed: u64,
    pub inputs: usize,
    pub outputs: usize,
    pub pad_to: usize,
}

pub fn tx_spec() -> impl Strategy<Value = TxSpec> {
    (any::<u64>(), 1..4usize, 1..6usize, 0..8usize).prop_map(|(seed, inputs, outputs, pad_to)| TxSpec {
        seed,
        inputs,
        outputs,
        pad_to,
    })
}

/// Balanced by construction: output values split what the inputs hold
/// after the fee.
pub fn build(spec: &TxSpec, kernel: KernelId) -> Transaction {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let coins: Vec<(u64, u64)> = (0..spec.inputs)
        .map(|_| (rng.random_range(0..MODULUS), rng.random_range(1..1_000_000)))
        .collect();
    let total: u64 = coins.iter().map(|c| c.1).sum();
    let fee = rng.random_range(0..=total.min(5_000));
    let mut left = total - fee;
    let mut values = Vec::with_capacity(spec.outputs);
    for i in 0..spec.outputs {
        let v = if i + 1 == spec.outputs { left } else { rng.random_range(0..=left) };
        values.push(v);
        left -= v;
    }
    let mut tx = Transaction::build(&coins, &values, fee, kernel, &mut rng).expect("balanced");
    tx.pad_outputs(spec.pad_to);
    tx
}

fn pair() -> impl Strategy<Value = (TxSpec, TxSpec)> {
    (tx_spec(), tx_spec())
}

pub fn prop_aggregation_closure((a, b): (TxSpec, TxSpec)) -> Result<(), TestCaseError> {
    let mut ids = KernelIdAllocator::new();
    let (ta, tb) = (build(&a, ids.fresh()), build(&b, ids.fresh()));
    let agg = aggregate(&ta, &tb).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!(agg.validate());
    // and again with the aggregate as an operand
    let tc = build(&b, ids.fresh());
    prop_assert!(aggregate(&agg, &tc).unwrap().validate());
    Ok(())
}

pub fn prop_mediant_bound((a, b): (TxSpec, TxSpec)) -> Result<(), TestCaseError> {
    let mut ids = KernelIdAllocator::new();
    let (ta, tb) = (build(&a, ids.fresh()), build(&b, ids.fresh()));
    let (pa, pb) = (ta.profitability(), tb.profitability());
    let pm = aggregate(&ta, &tb).unwrap().profitability();
    let (lo, hi) = if pa <= pb { (pa, pb) } else { (pb, pa) };
    // independent check in plain u128 cross products
    let cross = |x: (u64, u64), y: (u64, u64)| (x.0 as u128 * y.1 as u128, y.0 as u128 * x.1 as u128);
    let le = |x, y| {
        let (l, r) = cross(x, y);
        l <= r
    };
    let lt = |x, y| {
        let (l, r) = cross(x, y);
        l < r
    };
    let (l, h, m) = ((lo.fee, lo.size), (hi.fee, hi.size), (pm.fee, pm.size));
    prop_assert_eq!(m, (ta.fee + tb.fee, ta.size() + tb.size()));
    if pa == pb {
        prop_assert!(le(l, m) && le(m, h) && le(m, l));
    } else {
        prop_assert!(lt(l, m) && lt(m, h), "{:?} {:?} {:?}", l, m, h);
    }
    Ok(())
}

/// A parent and a child spending some of its outputs, plus an unrelated tx.
pub fn prop_cut_through_conservation(
    (a, b, spend_mask): (TxSpec, TxSpec, u8),
) -> Result<(), TestCaseError> {
    let mut ids = KernelIdAllocator::new();
    let parent = build(&a, ids.fresh());
    let other = build(&b, ids.fresh());
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed ^ b.seed);
    let spent: Vec<(u64, u64)> = parent
        .outputs
        .iter()
        .enumerate()
        .filter(|(i, o)| !o.commitment.is_dummy && (spend_mask >> (i % 8)) & 1 == 1)
        .map(|(_, o)| o.commitment.coords())
        .collect();
    let mut txs = vec![parent.clone(), other];
    if !spent.is_empty() {
        let total: u64 = spent.iter().map(|c| c.1).sum();
        let fee = total / 3;
        let child = Transaction::build(&spent, &[total - fee], fee, ids.fresh(), &mut rng).unwrap();
        txs.push(child);
    }

    let ct = cut_through(&txs);
    let mut before: BTreeMap<KernelId, usize> = BTreeMap::new();
    for k in txs.iter().flat_map(|t| &t.kernels) {
        *before.entry(k.id).or_default() += 1;
    }
    let mut after: BTreeMap<KernelId, usize> = BTreeMap::new();
    for k in &ct.kernels {
        *after.entry(k.id).or_default() += 1;
    }
    prop_assert_eq!(before, after);
    let sum: Commitment = txs.iter().map(Transaction::commitment_sum).sum();
    prop_assert_eq!(ct.commitment_sum(), sum);
    prop_assert!(ct.commitment_sum().is_zero());
    let inputs: usize = txs.iter().map(|t| t.inputs.len()).sum();
    prop_assert_eq!(ct.inputs.len(), inputs - spent.len());
    prop_assert_eq!(ct.total_fee, txs.iter().map(|t| t.fee).sum::<u64>());
    Ok(())
}

fn with_kernels(ids: &[u64]) -> Transaction {
    Transaction {
        inputs: vec![],
        outputs: vec![],
        kernels: ids
            .iter()
            .map(|&i| Kernel::new(KernelId(i), 0u64.into()))
            .collect(),
        fee: 0,
    }
}

pub fn kernel_sets() -> impl Strategy<Value = (Vec<u64>, Vec<u64>, Vec<u64>)> {
    let set = || proptest::collection::btree_set(0..12u64, 0..8).prop_map(|s| s.into_iter().collect::<Vec<_>>());
    (set(), set(), set())
}

/// Random triples test the implication; the nested chain built from them
/// makes sure the premise actually holds often.
pub fn prop_covers_transitive((x, y, z): (Vec<u64>, Vec<u64>, Vec<u64>)) -> Result<(), TestCaseError> {
    let (a, b, c) = (with_kernels(&x), with_kernels(&y), with_kernels(&z));
    for t in [&a, &b, &c] {
        prop_assert!(t.covers(t));
    }
    if a.covers(&b) && b.covers(&c) {
        prop_assert!(a.covers(&c));
    }
    let union = |p: &[u64], q: &[u64]| {
        let mut v: Vec<u64> = p.iter().chain(q).copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let inner = z.clone();
    let mid = union(&inner, &y);
    let outer = union(&mid, &x);
    let (ti, tm, to) = (with_kernels(&inner), with_kernels(&mid), with_kernels(&outer));
    prop_assert!(tm.covers(&ti) && to.covers(&tm) && to.covers(&ti));
    if mid.len() > inner.len() {
        prop_assert!(!ti.covers(&tm));
    }
    Ok(())
}

pub fn prop_validate_round_trip(spec: TxSpec) -> Result<(), TestCaseError> {
    let tx = build(&spec, KernelId(1));
    prop_assert!(tx.validate());
    prop_assert_eq!(tx.kernel_count(), 1);
    let mut bad = tx.clone();
    let i = (spec.seed % bad.outputs.len() as u64) as usize;
    let (r, v) = bad.outputs[i].commitment.coords();
    bad.outputs[i].commitment = Commitment::new(r, (v + 1) % MODULUS);
    prop_assert!(!bad.validate());
    Ok(())
}

fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    prop: fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, prop).map_err(|e| e.to_string())
}

pub const ALGEBRA_PROPERTIES: [&str; 5] = [
    "aggregation closure",
    "mediant bound",
    "cut-through conservation",
    "covers transitivity",
    "validate round-trip",
];

/// Runs property `i` of [`ALGEBRA_PROPERTIES`] for `cases` cases.
pub fn check_algebra(i: usize, cases: u32) -> Result<(), String> {
    match i {
        0 => run(cases, pair(), prop_aggregation_closure),
        1 => run(cases, pair(), prop_mediant_bound),
        2 => run(cases, (tx_spec(), tx_spec(), any::<u8>()), prop_cut_through_conservation),
        3 => run(cases, kernel_sets(), prop_covers_transitive),
        4 => run(cases, tx_spec(), prop_validate_round_trip),
        _ => Err(format!("no property {i}")),
    }
}
