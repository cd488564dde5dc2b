//! Exact preparation of large real qudits that factor across qubit groups.
//!
//! The embedded target is read as an `L`-qubit state. If it is a product
//! across a grouping of the qubits into parties of at most three, each party
//! is an (at most) 8-level real state and is prepared on its own EPR pairs:
//! single qubits by a two-outcome projective scheme, pairs and triples by
//! the minimum protocols of [`crate::realspace`]. Full separability across a
//! grouping is tested with `√(2 Σ_r (1 − tr ρ_r²))`, which vanishes iff every
//! party's reduced state is pure.
//!
//! Alice may also apply a pre-agreed transform `U_s` to the target "in
//! mind" before grouping; the index of the transform and, when several
//! groupings are allowed, the grouping are announced to Bob.

use std::fmt;
use std::ops::Range;

use itertools::Itertools;
use serde::{Serialize, Serializer};

use crate::channel::{ClassicalMessage, EprChannel, Protocol, Resolution};
use crate::error::{Result, RspError};
use crate::linalg::{
    apply, apply_on_slots, gates, qubit_count, ComplexMatrix, StateVector, C64, EXACT_TOL, ZERO,
};
use crate::realspace;
use crate::states::{admits, embed, QuditSpec};

/// A state counts as separable when its measure is at most this.
pub const SEPARABILITY_TOL: f64 = 1e-8;
/// Largest party size.
pub const MAX_PARTY: usize = 3;

/// Partition of `L` qubit slots into contiguous parties of size 1–3.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Grouping {
    sizes: Vec<usize>,
}

impl Grouping {
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() {
            return Err(RspError::InvalidGrouping("no parties".into()));
        }
        if let Some(bad) = sizes.iter().find(|&&n| n == 0 || n > MAX_PARTY) {
            return Err(RspError::InvalidGrouping(format!(
                "party size {bad} not in 1..=3"
            )));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
        })
    }

    /// Validates explicit slot blocks against `qubits` slots.
    pub fn from_blocks(blocks: &[Vec<usize>], qubits: usize) -> Result<Self> {
        let mut next = 0;
        for b in blocks {
            if b.is_empty() || b.iter().enumerate().any(|(i, &s)| s != next + i) {
                return Err(RspError::InvalidGrouping(format!(
                    "block {b:?} is not the contiguous run starting at slot {next}"
                )));
            }
            next += b.len();
        }
        if next != qubits {
            return Err(RspError::InvalidGrouping(format!(
                "blocks cover {next} of {qubits} slots"
            )));
        }
        Self::from_sizes(&blocks.iter().map(Vec::len).collect::<Vec<_>>())
    }

    /// Case 1: every qubit on its own.
    pub fn singletons(qubits: usize) -> Self {
        Self {
            sizes: vec![1; qubits],
        }
    }

    /// Consecutive blocks of `width` with a trailing remainder party,
    /// `⌈L/width⌉` parties in total.
    pub fn uniform(qubits: usize, width: usize) -> Result<Self> {
        if qubits == 0 || !(1..=MAX_PARTY).contains(&width) {
            return Err(RspError::InvalidGrouping(format!(
                "{qubits} qubits by {width}"
            )));
        }
        let mut sizes = vec![width; qubits / width];
        if !qubits.is_multiple_of(width) {
            sizes.push(qubits % width);
        }
        Ok(Self { sizes })
    }

    pub fn qubits(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn blocks(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.sizes
            .iter()
            .map(|&n| {
                let r = start..start + n;
                start += n;
                r
            })
            .collect()
    }

    pub fn block_lists(&self) -> Vec<Vec<usize>> {
        self.blocks().into_iter().map(|r| r.collect()).collect()
    }
}

impl fmt::Debug for Grouping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Grouping{:?}", self.block_lists())
    }
}

impl Serialize for Grouping {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.block_lists().serialize(s)
    }
}

/// Every contiguous grouping of `qubits` slots, finest first; groupings with
/// the same number of parties are ordered lexicographically by party sizes.
pub fn contiguous_groupings(qubits: usize) -> Vec<Grouping> {
    fn compositions(rest: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(prefix.clone());
            return;
        }
        for n in 1..=MAX_PARTY.min(rest) {
            prefix.push(n);
            compositions(rest - n, prefix, out);
            prefix.pop();
        }
    }
    let mut all = Vec::new();
    if qubits > 0 {
        compositions(qubits, &mut Vec::new(), &mut all);
    }
    all.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    all.into_iter().map(|sizes| Grouping { sizes }).collect()
}

/// Reshapes `v` into a `2^n × 2^{L−n}` matrix with the party's bits as rows.
fn party_matrix(v: &[C64], qubits: usize, block: &Range<usize>) -> Vec<Vec<C64>> {
    let n = block.len();
    let lo_bits = qubits - block.end;
    let rest = 1usize << (qubits - n);
    (0..1usize << n)
        .map(|i| {
            (0..rest)
                .map(|j| {
                    let hi = j >> lo_bits;
                    let lo = j & ((1 << lo_bits) - 1);
                    v[(hi << (n + lo_bits)) | (i << lo_bits) | lo]
                })
                .collect()
        })
        .collect()
}

/// `1 − tr ρ²` of one party, computed as twice the sum of squared 2×2 minors
/// of the reshaped state. Product states give exact cancellations entry by
/// entry, so the result stays at rounding level instead of `1 − (1 ± ε)`.
fn party_impurity(v: &[C64], qubits: usize, block: &Range<usize>) -> f64 {
    let m = party_matrix(v, qubits, block);
    let norm2: f64 = v.iter().map(|a| a.norm_sqr()).sum();
    let cols = m[0].len();
    let mut e2 = 0.0;
    for (i, ri) in m.iter().enumerate() {
        for rk in &m[i + 1..] {
            for j in 0..cols {
                let (a, c) = (ri[j], rk[j]);
                if a == ZERO && c == ZERO {
                    continue;
                }
                for l in j + 1..cols {
                    e2 += (a * rk[l] - ri[l] * c).norm_sqr();
                }
            }
        }
    }
    2.0 * e2 / (norm2 * norm2)
}

fn check_grouping(v: &StateVector, g: &Grouping) -> Result<usize> {
    let qubits = qubit_count(v.dim())?;
    if g.qubits() != qubits {
        return Err(RspError::InvalidGrouping(format!(
            "grouping covers {} slots, state has {qubits}",
            g.qubits()
        )));
    }
    Ok(qubits)
}

/// `√(2 Σ_r (1 − tr ρ_r²))` over the parties of `g`.
pub fn separability_measure(v: &StateVector, g: &Grouping) -> Result<f64> {
    let qubits = check_grouping(v, g)?;
    let total: f64 = g
        .blocks()
        .iter()
        .map(|b| party_impurity(v.amplitudes(), qubits, b))
        .sum();
    Ok((2.0 * total.max(0.0)).sqrt())
}

/// Per-party factors whose tensor product reproduces `v` (including its
/// global phase, up to rounding).
pub fn extract_factors(v: &StateVector, g: &Grouping) -> Result<Vec<StateVector>> {
    let measure = separability_measure(v, g)?;
    if measure > SEPARABILITY_TOL {
        return Err(RspError::NotSeparable(measure));
    }
    let mut rest: Vec<C64> = v.amplitudes().to_vec();
    let mut factors = Vec::with_capacity(g.len());
    let parties = g.sizes().len();
    for (idx, &n) in g.sizes().iter().enumerate() {
        if idx + 1 == parties {
            factors.push(StateVector::normalized(rest.clone())?);
            break;
        }
        let qubits = qubit_count(rest.len())?;
        let m = party_matrix(&rest, qubits, &(0..n));
        let col_norm = |j: usize| m.iter().map(|r| r[j].norm_sqr()).sum::<f64>();
        let pivot = (0..m[0].len())
            .max_by(|&a, &b| col_norm(a).total_cmp(&col_norm(b)))
            .unwrap();
        let factor = StateVector::normalized(m.iter().map(|r| r[pivot]).collect())?;
        let before: f64 = rest.iter().map(|a| a.norm_sqr()).sum();
        // project the remaining parties onto the factor: rest ← ⟨factor|·M
        let projected: Vec<C64> = (0..m[0].len())
            .map(|j| {
                factor
                    .amplitudes()
                    .iter()
                    .zip(&m)
                    .map(|(f, r)| f.conj() * r[j])
                    .sum()
            })
            .collect();
        let kept: f64 = projected.iter().map(|a| a.norm_sqr()).sum();
        if kept / before < 1.0 - SEPARABILITY_TOL {
            return Err(RspError::NotSeparable(measure));
        }
        factors.push(factor);
        rest = projected;
    }
    Ok(factors)
}

/// Party state serialized as separate real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorExport {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&StateVector> for FactorExport {
    fn from(v: &StateVector) -> Self {
        Self {
            re: v.amplitudes().iter().map(|a| a.re).collect(),
            im: v.amplitudes().iter().map(|a| a.im).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparabilityReport {
    pub grouping: Grouping,
    pub measure: f64,
    pub separable: bool,
    pub factors: Option<Vec<StateVector>>,
}

impl SeparabilityReport {
    pub fn analyze(v: &StateVector, g: &Grouping) -> Result<Self> {
        let measure = separability_measure(v, g)?;
        let factors = if measure <= SEPARABILITY_TOL {
            extract_factors(v, g).ok()
        } else {
            None
        };
        Ok(Self {
            grouping: g.clone(),
            measure,
            separable: factors.is_some(),
            factors,
        })
    }
}

impl Serialize for SeparabilityReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("SeparabilityReport", 4)?;
        st.serialize_field("grouping", &self.grouping)?;
        st.serialize_field("measure", &self.measure)?;
        st.serialize_field("separable", &self.separable)?;
        let factors: Option<Vec<FactorExport>> = self
            .factors
            .as_ref()
            .map(|fs| fs.iter().map(FactorExport::from).collect());
        st.serialize_field("factors", &factors)?;
        st.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum GroupingPolicy {
    /// Single qubits.
    #[default]
    Case1,
    /// Consecutive pairs, trailing single qubit for odd `L`.
    Case2,
    /// Consecutive triples, trailing remainder party.
    Case3,
    /// Search all contiguous groupings with parties of at most three.
    Case4Enumerate,
}

impl GroupingPolicy {
    pub fn allowed(self, qubits: usize) -> Vec<Grouping> {
        match self {
            Self::Case1 => vec![Grouping::singletons(qubits)],
            Self::Case2 => Grouping::uniform(qubits, 2).into_iter().collect(),
            Self::Case3 => Grouping::uniform(qubits, 3).into_iter().collect(),
            Self::Case4Enumerate => contiguous_groupings(qubits),
        }
    }

    /// Cbits spent telling Bob which of the allowed groupings is used.
    pub fn announcement_alphabet(self, qubits: usize) -> usize {
        match self {
            Self::Case4Enumerate => contiguous_groupings(qubits).len(),
            _ => 1,
        }
    }
}

/// First allowed grouping under which `v` is separable.
pub fn plan_grouping(v: &StateVector, policy: GroupingPolicy) -> Option<Grouping> {
    plan_grouping_indexed(v, policy).map(|(_, g)| g)
}

fn plan_grouping_indexed(v: &StateVector, policy: GroupingPolicy) -> Option<(usize, Grouping)> {
    let qubits = qubit_count(v.dim()).ok()?;
    policy
        .allowed(qubits)
        .into_iter()
        .enumerate()
        .find(|(_, g)| separability_measure(v, g).is_ok_and(|m| m <= SEPARABILITY_TOL))
}

// ---------------------------------------------------------------------------
// U_s transforms
// ---------------------------------------------------------------------------

/// One transform Alice may apply to the target before grouping.
#[derive(Debug, Clone, PartialEq)]
pub enum UsTransform {
    Identity,
    /// `perm[i]` is the destination slot of source slot `i`.
    SlotPermutation(Vec<usize>),
    /// A real orthogonal matrix on the full register.
    Matrix(ComplexMatrix),
}

impl UsTransform {
    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        match self {
            Self::Identity => Ok(v.clone()),
            Self::SlotPermutation(perm) => permute_slots(v, perm),
            Self::Matrix(m) => apply(m, v),
        }
    }

    pub fn apply_inverse(&self, v: &StateVector) -> Result<StateVector> {
        match self {
            Self::Identity => Ok(v.clone()),
            Self::SlotPermutation(perm) => {
                let mut inv = vec![0; perm.len()];
                for (src, &dst) in perm.iter().enumerate() {
                    inv[dst] = src;
                }
                permute_slots(v, &inv)
            }
            Self::Matrix(m) => apply(&m.adjoint(), v),
        }
    }

    pub fn to_matrix(&self, qubits: usize) -> Result<ComplexMatrix> {
        let dim = 1usize << qubits;
        match self {
            Self::Identity => Ok(ComplexMatrix::identity(dim)),
            Self::Matrix(m) => Ok(m.clone()),
            Self::SlotPermutation(_) => {
                let mut m = ComplexMatrix::zeros(dim, dim);
                for col in 0..dim {
                    let image = self.apply(&StateVector::basis(dim, col))?;
                    for (row, a) in image.amplitudes().iter().enumerate() {
                        m[(row, col)] = *a;
                    }
                }
                Ok(m)
            }
        }
    }
}

fn permute_slots(v: &StateVector, perm: &[usize]) -> Result<StateVector> {
    let qubits = qubit_count(v.dim())?;
    let mut seen = vec![false; qubits];
    if perm.len() != qubits
        || perm
            .iter()
            .any(|&d| d >= qubits || std::mem::replace(&mut seen[d], true))
    {
        return Err(RspError::InvalidSlots(format!(
            "{perm:?} is not a permutation of {qubits} slots"
        )));
    }
    let mut out = vec![ZERO; v.dim()];
    for (idx, a) in v.amplitudes().iter().enumerate() {
        let mut dst = 0usize;
        for (src, &to) in perm.iter().enumerate() {
            if idx & (1 << (qubits - 1 - src)) != 0 {
                dst |= 1 << (qubits - 1 - to);
            }
        }
        out[dst] = *a;
    }
    StateVector::new(out)
}

/// Ordered, pre-agreed list of transforms. Entry 0 is conventionally the
/// identity.
#[derive(Debug, Clone, PartialEq)]
pub struct UsCatalog {
    entries: Vec<UsTransform>,
}

impl Default for UsCatalog {
    fn default() -> Self {
        Self::identity()
    }
}

impl UsCatalog {
    pub fn identity() -> Self {
        Self {
            entries: vec![UsTransform::Identity],
        }
    }

    /// Qubit-slot permutations of `qubits` slots in lexicographic order
    /// (identity first), truncated to `limit` entries.
    pub fn permutations(qubits: usize, limit: Option<usize>) -> Self {
        let entries = (0..qubits)
            .permutations(qubits)
            .take(limit.unwrap_or(usize::MAX))
            .map(|p| {
                if p.iter().enumerate().all(|(i, &d)| i == d) {
                    UsTransform::Identity
                } else {
                    UsTransform::SlotPermutation(p)
                }
            })
            .collect();
        Self { entries }
    }

    /// Custom catalog; matrices must be real orthogonal so real targets stay real.
    pub fn from_entries(entries: Vec<UsTransform>) -> Result<Self> {
        if entries.is_empty() {
            return Err(RspError::InvalidTarget("empty U_s catalog".into()));
        }
        for e in &entries {
            if let UsTransform::Matrix(m) = e {
                m.ensure_unitary()?;
                if m.max_imag() > EXACT_TOL {
                    return Err(RspError::InvalidTarget("U_s matrices must be real".into()));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[UsTransform] {
        &self.entries
    }

    pub fn get(&self, idx: usize) -> Option<&UsTransform> {
        self.entries.get(idx)
    }

    /// Cbits for announcing one entry: `log2 |catalog|`.
    pub fn announcement_cost(&self) -> f64 {
        (self.len() as f64).log2()
    }

    /// Index of the entry whose matrix equals `u` within 1e-12.
    pub fn position(&self, u: &ComplexMatrix, qubits: usize) -> Option<usize> {
        self.entries.iter().position(|e| {
            e.to_matrix(qubits)
                .is_ok_and(|m| m.max_abs_diff(u) <= EXACT_TOL)
        })
    }
}

/// `u·v`, provided `u` is registered in `catalog`.
pub fn apply_us(v: &StateVector, u: &ComplexMatrix, catalog: &UsCatalog) -> Result<StateVector> {
    let qubits = qubit_count(v.dim())?;
    let idx = catalog
        .position(u, qubits)
        .ok_or(RspError::UnknownTransform)?;
    catalog.entries[idx].apply(v)
}

// ---------------------------------------------------------------------------
// Protocol
// ---------------------------------------------------------------------------

/// Alice's operator for one party, given the party's real factor.
///
/// Single qubits use the projective basis `{(a,b), (b,−a)}` written as a
/// unitary whose rows are the two bras; larger parties use the minimum
/// catalog of their dimension.
pub fn party_operator(factor: &[f64]) -> Result<ComplexMatrix> {
    match factor.len() {
        2 => {
            let (a, b) = (factor[0], factor[1]);
            ComplexMatrix::from_real(2, 2, &[a, b, b, -a])
        }
        4 | 8 => realspace::catalog(factor.len())?.alice_operator(factor),
        n => Err(RspError::InvalidTarget(format!("party dimension {n}"))),
    }
}

/// Bob's correction for a party outcome.
pub fn party_correction(dim: usize, outcome: usize) -> Result<ComplexMatrix> {
    match dim {
        2 if outcome == 0 => Ok(ComplexMatrix::identity(2)),
        2 => Ok(gates::minus_i_sigma_y()),
        4 | 8 => Ok(realspace::catalog(dim)?.correction(outcome)),
        n => Err(RspError::InvalidTarget(format!("party dimension {n}"))),
    }
}

/// Which (transform, grouping) pair the planner settled on.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparablePlan {
    pub us_index: usize,
    pub grouping_index: usize,
    pub grouping: Grouping,
    pub factors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct SeparableProtocol {
    s: usize,
    policy: GroupingPolicy,
    us_catalog_len: usize,
    transform: UsTransform,
    plan: SeparablePlan,
    channel: EprChannel,
    target: StateVector,
    original: StateVector,
}

impl SeparableProtocol {
    pub fn new(
        q: &QuditSpec,
        pairs: usize,
        policy: GroupingPolicy,
        us: &UsCatalog,
    ) -> Result<Self> {
        let coeffs = q.real_coeffs()?;
        let s = coeffs.len();
        if !admits(s, pairs) {
            return Err(RspError::InvalidPairCount { dim: s, pairs });
        }
        let original = embed(&QuditSpec::real(coeffs)?, pairs)?;

        let mut found = None;
        for (us_index, t) in us.entries().iter().enumerate() {
            let w = t.apply(&original)?;
            if w.max_imag() > EXACT_TOL {
                continue;
            }
            if let Some((grouping_index, grouping)) = plan_grouping_indexed(&w, policy) {
                found = Some((us_index, grouping_index, grouping, w));
                break;
            }
        }
        let (us_index, grouping_index, grouping, target) = found.ok_or_else(|| {
            RspError::NotPreparable(format!(
                "no grouping allowed by {policy:?} separates the target under {} U_s transform(s)",
                us.len()
            ))
        })?;

        let factors: Vec<Vec<f64>> = extract_factors(&target, &grouping)?
            .iter()
            .map(|f| {
                if f.max_imag() > 1e-10 {
                    return Err(RspError::InvariantViolation(
                        "complex factor of a real state".into(),
                    ));
                }
                Ok(f.amplitudes().iter().map(|a| a.re).collect())
            })
            .collect::<Result<_>>()?;

        let mut channel = EprChannel::new(pairs)?;
        for (block, f) in grouping.blocks().into_iter().zip(&factors) {
            let slots: Vec<usize> = block.collect();
            channel = channel.alice_apply_on(&party_operator(f)?, &slots)?;
        }

        Ok(Self {
            s,
            policy,
            us_catalog_len: us.len(),
            transform: us.entries()[us_index].clone(),
            plan: SeparablePlan {
                us_index,
                grouping_index,
                grouping,
                factors,
            },
            channel,
            target,
            original,
        })
    }

    pub fn plan(&self) -> &SeparablePlan {
        &self.plan
    }

    pub fn grouping(&self) -> &Grouping {
        &self.plan.grouping
    }

    pub fn transform(&self) -> &UsTransform {
        &self.transform
    }

    /// Extra cbits beyond `L`: U_s choice plus grouping choice.
    pub fn announcement_cbits(&self) -> f64 {
        (self.us_catalog_len as f64).log2()
            + (self.policy.announcement_alphabet(self.pairs()) as f64).log2()
    }
}

impl Protocol for SeparableProtocol {
    fn name(&self) -> &'static str {
        "separable"
    }

    fn dim(&self) -> usize {
        self.s
    }

    fn channel(&self) -> &EprChannel {
        &self.channel
    }

    fn target(&self) -> &StateVector {
        &self.target
    }

    fn resolve(&self, outcome: usize, bob_state: &StateVector) -> Result<Resolution> {
        let pairs = self.pairs();
        let mut messages = Vec::new();
        if self.us_catalog_len > 1 {
            messages.push(ClassicalMessage::new(
                self.us_catalog_len,
                self.plan.us_index,
            )?);
        }
        let groupings = self.policy.announcement_alphabet(pairs);
        if groupings > 1 {
            messages.push(ClassicalMessage::new(groupings, self.plan.grouping_index)?);
        }
        let mut state = bob_state.clone();
        for block in self.plan.grouping.blocks() {
            let n = block.len();
            let party_outcome = (outcome >> (pairs - block.end)) & ((1 << n) - 1);
            messages.push(ClassicalMessage::new(1 << n, party_outcome)?);
            let fix = party_correction(1 << n, party_outcome)?;
            state = apply_on_slots(&fix, &state, &block.collect::<Vec<_>>())?;
        }
        Ok(Resolution {
            messages,
            corrected: Some(state),
        })
    }

    fn logical_fidelity(&self, bob_final: &StateVector) -> Option<f64> {
        let back = self.transform.apply_inverse(bob_final).ok()?;
        crate::linalg::fidelity_global_phase(&self.original, &back).ok()
    }
}

/// Checks that the two Case-1 projectors of a real qubit factor resolve the identity.
pub fn projector_completeness_defect(factor: &[f64]) -> f64 {
    let (a, b) = (factor[0], factor[1]);
    let psi = [a, b];
    let bar = [b, -a];
    let mut worst = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let sum = psi[i] * psi[j] + bar[i] * bar[j];
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((sum - expect).abs());
        }
    }
    worst
}
