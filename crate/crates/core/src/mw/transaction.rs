use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rand::Rng;

use super::commitment::{Commitment, Scalar, MODULUS};
use super::MwError;

/// Globally unique kernel identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KernelId(pub u64);

impl fmt::Display for KernelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "k{}", self.0)
    }
}

/// Hands out fresh kernel ids for one simulation run.
#[derive(Debug, Clone, Default)]
pub struct KernelIdAllocator {
    next: u64,
}

impl KernelIdAllocator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn starting_at(next: u64) -> Self {
        KernelIdAllocator { next }
    }

    pub fn fresh(&mut self) -> KernelId {
        let id = KernelId(self.next);
        self.next += 1;
        id
    }

    pub fn issued(&self) -> u64 {
        self.next
    }
}

/// A zero-value excess commitment; the durable identity of a transaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Kernel {
    pub id: KernelId,
    pub excess: Commitment,
}

impl Kernel {
    /// Builds a kernel from an excess blinding factor. The value part is zero.
    pub fn new(id: KernelId, blinding: Scalar) -> Self {
        Kernel {
            id,
            excess: Commitment::new(blinding, Scalar::ZERO),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Output {
    pub commitment: Commitment,
    /// Stand-in for a range proof verification result.
    pub rangeproof_ok: bool,
}

impl Output {
    pub fn new(commitment: Commitment) -> Self {
        Output {
            commitment,
            rangeproof_ok: true,
        }
    }

    pub fn dummy() -> Self {
        Output::new(Commitment::dummy())
    }
}

/// Sorted, deduplicated set of kernel ids. Ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct KernelSet(Vec<KernelId>);

impl KernelSet {
    pub fn from_ids(ids: impl IntoIterator<Item = KernelId>) -> Self {
        let mut v: Vec<KernelId> = ids.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        KernelSet(v)
    }

    pub fn ids(&self) -> &[KernelId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: KernelId) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn is_superset(&self, other: &KernelSet) -> bool {
        // both sorted: single merge pass
        let mut mine = self.0.iter();
        'outer: for k in &other.0 {
            for m in mine.by_ref() {
                match m.cmp(k) {
                    Ordering::Less => continue,
                    Ordering::Equal => continue 'outer,
                    Ordering::Greater => return false,
                }
            }
            return false;
        }
        true
    }

    pub fn is_disjoint(&self, other: &KernelSet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => return false,
            }
        }
        true
    }
}

/// Byte costs per transaction element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeModel {
    pub input_bytes: u64,
    pub output_bytes: u64,
    pub kernel_bytes: u64,
}

impl Default for SizeModel {
    fn default() -> Self {
        SizeModel {
            input_bytes: 40,
            output_bytes: 720,
            kernel_bytes: 100,
        }
    }
}

impl SizeModel {
    pub fn size(&self, inputs: usize, outputs: usize, kernels: usize) -> u64 {
        self.input_bytes * inputs as u64
            + self.output_bytes * outputs as u64
            + self.kernel_bytes * kernels as u64
    }
}

/// Exact fee-per-byte ratio.
///
/// Comparisons use cross products, so two ratios are equal iff they denote the
/// same rational number. Fees below 2^40 and sizes below 2^24 keep every
/// intermediate product inside `u128`.
#[derive(Debug, Clone, Copy)]
pub struct Profitability {
    pub fee: u64,
    pub size: u64,
}

impl Profitability {
    pub fn new(fee: u64, size: u64) -> Self {
        assert!(size > 0, "profitability of a zero-size transaction");
        Profitability { fee, size }
    }

    pub fn as_f64(&self) -> f64 {
        self.fee as f64 / self.size as f64
    }

    /// `|self - other|` as an unreduced fraction `(numerator, denominator)`.
    pub fn distance(&self, other: &Profitability) -> (u128, u128) {
        let a = self.fee as u128 * other.size as u128;
        let b = other.fee as u128 * self.size as u128;
        (a.abs_diff(b), self.size as u128 * other.size as u128)
    }

    /// Orders two distances returned by [`Profitability::distance`].
    pub fn cmp_distance(a: (u128, u128), b: (u128, u128)) -> Ordering {
        (a.0 * b.1).cmp(&(b.0 * a.1))
    }
}

impl PartialEq for Profitability {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Profitability {}

impl PartialOrd for Profitability {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Profitability {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.fee as u128 * other.size as u128).cmp(&(other.fee as u128 * self.size as u128))
    }
}

/// A MimbleWimble transaction. Inputs are stored negated, so validity is a
/// plain zero-sum over every element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub inputs: Vec<Commitment>,
    pub outputs: Vec<Output>,
    pub kernels: Vec<Kernel>,
    pub fee: u64,
}

impl Transaction {
    /// Creates a transaction spending `input_coins` (each `(blinding, value)`)
    /// into fresh outputs of the given values, paying `fee`.
    ///
    /// Output blindings are drawn from `rng`; the single kernel's excess is
    /// solved so the commitments sum to zero.
    pub fn build<R: Rng + ?Sized>(
        input_coins: &[(u64, u64)],
        output_values: &[u64],
        fee: u64,
        kernel_id: KernelId,
        rng: &mut R,
    ) -> Result<Transaction, MwError> {
        let total_in: u128 = input_coins.iter().map(|&(_, v)| v as u128).sum();
        let total_out: u128 =
            output_values.iter().map(|&v| v as u128).sum::<u128>() + fee as u128;
        if total_in != total_out {
            return Err(MwError::ValueImbalance {
                inputs: total_in,
                outputs: total_out,
            });
        }

        let inputs: Vec<Commitment> = input_coins
            .iter()
            .map(|&(r, v)| -Commitment::new(r, v))
            .collect();
        let outputs: Vec<Output> = output_values
            .iter()
            .map(|&v| Output::new(Commitment::new(rng.random_range(1..MODULUS), v)))
            .collect();

        let input_blinding: Scalar = input_coins.iter().map(|&(r, _)| Scalar::new(r)).sum();
        let output_blinding: Scalar = outputs.iter().map(|o| o.commitment.blinding).sum();
        let excess = input_blinding - output_blinding;

        Ok(Transaction {
            inputs,
            outputs,
            kernels: vec![Kernel::new(kernel_id, excess)],
            fee,
        })
    }

    /// Sum of every commitment including the explicit fee.
    pub fn commitment_sum(&self) -> Commitment {
        self.inputs.iter().sum::<Commitment>()
            + self.outputs.iter().map(|o| o.commitment).sum::<Commitment>()
            + self.kernels.iter().map(|k| k.excess).sum::<Commitment>()
            + Commitment::explicit(self.fee)
    }

    /// Zero-sum holds, every range proof verifies, and there is at least one
    /// kernel with a zero value component.
    pub fn validate(&self) -> bool {
        !self.kernels.is_empty()
            && self.kernels.iter().all(|k| k.excess.value.is_zero())
            && self.outputs.iter().all(|o| o.rangeproof_ok)
            && self.commitment_sum().is_zero()
    }

    pub fn kernel_set(&self) -> KernelSet {
        KernelSet::from_ids(self.kernels.iter().map(|k| k.id))
    }

    pub fn kernel_count(&self) -> usize {
        self.kernels.len()
    }

    /// True iff every kernel of `other` is also a kernel of `self`.
    pub fn covers(&self, other: &Transaction) -> bool {
        self.kernel_set().is_superset(&other.kernel_set())
    }

    pub fn size(&self) -> u64 {
        self.size_with(&SizeModel::default())
    }

    pub fn size_with(&self, model: &SizeModel) -> u64 {
        model.size(self.inputs.len(), self.outputs.len(), self.kernels.len())
    }

    pub fn profitability(&self) -> Profitability {
        Profitability::new(self.fee, self.size())
    }

    /// Appends zero-valued padding outputs until there are at least `target`.
    pub fn pad_outputs(&mut self, target: usize) -> usize {
        let missing = target.saturating_sub(self.outputs.len());
        self.outputs
            .extend(std::iter::repeat_n(Output::dummy(), missing));
        missing
    }
}

/// Concatenates two transactions. Fails when they share a kernel.
pub fn aggregate(a: &Transaction, b: &Transaction) -> Result<Transaction, MwError> {
    let ka = a.kernel_set();
    let kb = b.kernel_set();
    if !ka.is_disjoint(&kb) {
        let shared = ka
            .ids()
            .iter()
            .copied()
            .find(|k| kb.contains(*k))
            .expect("overlap implies a shared id");
        return Err(MwError::KernelOverlap(shared));
    }
    let fee = a.fee.checked_add(b.fee).ok_or(MwError::FeeOverflow)?;
    let mut inputs = Vec::with_capacity(a.inputs.len() + b.inputs.len());
    inputs.extend_from_slice(&a.inputs);
    inputs.extend_from_slice(&b.inputs);
    let mut outputs = Vec::with_capacity(a.outputs.len() + b.outputs.len());
    outputs.extend_from_slice(&a.outputs);
    outputs.extend_from_slice(&b.outputs);
    let mut kernels = Vec::with_capacity(a.kernels.len() + b.kernels.len());
    kernels.extend_from_slice(&a.kernels);
    kernels.extend_from_slice(&b.kernels);
    Ok(Transaction {
        inputs,
        outputs,
        kernels,
        fee,
    })
}

/// What remains of a set of transactions once spent outputs are deleted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutThrough {
    pub inputs: Vec<Commitment>,
    pub outputs: Vec<Output>,
    pub kernels: Vec<Kernel>,
    pub total_fee: u64,
}

impl CutThrough {
    pub fn commitment_sum(&self) -> Commitment {
        self.inputs.iter().sum::<Commitment>()
            + self.outputs.iter().map(|o| o.commitment).sum::<Commitment>()
            + self.kernels.iter().map(|k| k.excess).sum::<Commitment>()
            + Commitment::explicit(self.total_fee)
    }
}

/// Removes every output whose negation appears as an input somewhere in
/// `txs`, together with that input. Kernels are all kept. Padding outputs
/// never match.
pub fn cut_through(txs: &[Transaction]) -> CutThrough {
    let mut spendable: HashMap<(u64, u64), Vec<(usize, usize)>> = HashMap::new();
    for (t, tx) in txs.iter().enumerate() {
        for (o, out) in tx.outputs.iter().enumerate() {
            if !out.commitment.is_dummy {
                spendable
                    .entry(out.commitment.coords())
                    .or_default()
                    .push((t, o));
            }
        }
    }

    let mut spent_outputs: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut spent_inputs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for (t, tx) in txs.iter().enumerate() {
        for (i, input) in tx.inputs.iter().enumerate() {
            if input.is_dummy {
                continue;
            }
            let key = (-*input).coords();
            if let Some(slots) = spendable.get_mut(&key) {
                if let Some(slot) = slots.pop() {
                    spent_outputs.insert(slot);
                    spent_inputs.insert((t, i));
                }
            }
        }
    }

    let mut result = CutThrough {
        inputs: Vec::new(),
        outputs: Vec::new(),
        kernels: Vec::new(),
        total_fee: 0,
    };
    for (t, tx) in txs.iter().enumerate() {
        result.inputs.extend(
            tx.inputs
                .iter()
                .enumerate()
                .filter(|(i, _)| !spent_inputs.contains(&(t, *i)))
                .map(|(_, c)| *c),
        );
        result.outputs.extend(
            tx.outputs
                .iter()
                .enumerate()
                .filter(|(o, _)| !spent_outputs.contains(&(t, *o)))
                .map(|(_, c)| *c),
        );
        result.kernels.extend_from_slice(&tx.kernels);
        result.total_fee += tx.fee;
    }
    result
}
