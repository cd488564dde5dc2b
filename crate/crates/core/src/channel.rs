//! The EPR-pair channel and the two-party protocol engine.
//!
//! `L` EPR pairs `(|00⟩+|11⟩)/√2` are stored as one `2L`-qubit state with
//! Alice's qubits in slots `0..L` and Bob's in `L..2L`; pair `i` joins slot
//! `i` with slot `L+i`. In decimal labels the fresh channel is
//! `2^{-L/2} Σ_k |k⟩_A|k⟩_B`, so the amplitude array reads as a
//! `2^L × 2^L` matrix with Alice's label as the row.
//!
//! A protocol plugs in through [`Protocol`]: it prepares the channel after
//! Alice's operation and decides, per measurement outcome, which messages
//! are sent and what Bob does. [`run_exhaustive`], [`run_sampled`] and
//! [`monte_carlo`] drive any protocol the same way.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RspError};
use crate::linalg::{
    apply, apply_on_slots, fidelity_global_phase, ComplexMatrix, DensityMatrix, StateVector, C64,
    ZERO,
};

/// Largest supported number of EPR pairs.
pub const MAX_PAIRS: usize = 10;
/// A branch marked successful must reach at least this fidelity.
pub const SUCCESS_FIDELITY: f64 = 1.0 - 1e-8;

#[derive(Clone, PartialEq)]
pub struct EprChannel {
    pairs: usize,
    joint: StateVector,
}

impl std::fmt::Debug for EprChannel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EprChannel")
            .field("pairs", &self.pairs)
            .finish_non_exhaustive()
    }
}

impl EprChannel {
    pub fn new(pairs: usize) -> Result<Self> {
        if !(1..=MAX_PAIRS).contains(&pairs) {
            return Err(RspError::InvalidPairCount { dim: 0, pairs });
        }
        let side = 1usize << pairs;
        let amp = C64::new(1.0 / (side as f64).sqrt(), 0.0);
        let mut amps = vec![ZERO; side * side];
        for k in 0..side {
            amps[k * side + k] = amp;
        }
        Ok(Self {
            pairs,
            joint: StateVector::new(amps)?,
        })
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    /// Dimension of each party's register, `2^L`.
    pub fn side(&self) -> usize {
        1 << self.pairs
    }

    pub fn joint(&self) -> &StateVector {
        &self.joint
    }

    pub fn alice_slots(&self) -> Vec<usize> {
        (0..self.pairs).collect()
    }

    pub fn bob_slots(&self) -> Vec<usize> {
        (self.pairs..2 * self.pairs).collect()
    }

    /// Applies `m ⊗ I`: a unitary on Alice's whole register.
    pub fn alice_apply(&self, m: &ComplexMatrix) -> Result<Self> {
        let side = self.side();
        if !m.is_square() || m.rows() != side {
            return Err(RspError::DimensionMismatch {
                expected: side,
                found: m.rows(),
            });
        }
        m.ensure_unitary()?;
        let j = self.joint.amplitudes();
        let mut out = vec![ZERO; j.len()];
        for r in 0..side {
            let row = &mut out[r * side..(r + 1) * side];
            for (k, &a) in m.row(r).iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                for (o, &x) in row.iter_mut().zip(&j[k * side..(k + 1) * side]) {
                    *o += a * x;
                }
            }
        }
        Ok(Self {
            pairs: self.pairs,
            joint: StateVector::new(out)?,
        })
    }

    /// Applies a unitary to a subset of Alice's qubits (`slots` in `0..L`).
    pub fn alice_apply_on(&self, m: &ComplexMatrix, slots: &[usize]) -> Result<Self> {
        if let Some(&bad) = slots.iter().find(|&&s| s >= self.pairs) {
            return Err(RspError::InvalidSlots(format!(
                "{bad} is not one of Alice's slots"
            )));
        }
        m.ensure_unitary()?;
        let joint = apply_on_slots(m, &self.joint, slots)?;
        Ok(Self {
            pairs: self.pairs,
            joint: StateVector::new(joint.into_amplitudes())?,
        })
    }

    /// Born probabilities of Alice's computational-basis outcomes.
    pub fn alice_marginal(&self) -> Vec<f64> {
        self.joint
            .amplitudes()
            .chunks(self.side())
            .map(|row| row.iter().map(|a| a.norm_sqr()).sum())
            .collect()
    }

    /// Conditional branch for Alice's outcome `k`.
    pub fn branch(&self, k: usize) -> Result<Branch> {
        let side = self.side();
        if k >= side {
            return Err(RspError::IndexOutOfRange {
                index: k,
                qubits: self.pairs,
            });
        }
        let row = self.joint.amplitudes()[k * side..(k + 1) * side].to_vec();
        let probability: f64 = row.iter().map(|a| a.norm_sqr()).sum();
        if probability <= f64::MIN_POSITIVE {
            return Err(RspError::ZeroProbabilityBranch(k));
        }
        Ok(Branch {
            outcome: k,
            probability,
            bob_state: StateVector::normalized(row)?,
        })
    }

    /// Every outcome with nonzero probability, in ascending order.
    pub fn branches(&self) -> Vec<Branch> {
        (0..self.side())
            .filter_map(|k| self.branch(k).ok())
            .collect()
    }

    pub fn measure<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Branch> {
        let k = sample_index(&self.alice_marginal(), rng.random::<f64>());
        self.branch(k)
    }

    pub fn measure_seeded(&self, seed: u64) -> Result<Branch> {
        self.measure(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Reduced state of Alice's register.
    pub fn alice_reduced(&self) -> DensityMatrix {
        self.reduced(true)
    }

    /// Reduced state of Bob's register.
    pub fn bob_reduced(&self) -> DensityMatrix {
        self.reduced(false)
    }

    fn reduced(&self, alice: bool) -> DensityMatrix {
        let side = self.side();
        let j = self.joint.amplitudes();
        let at = |a: usize, b: usize| {
            if alice {
                j[a * side + b]
            } else {
                j[b * side + a]
            }
        };
        let mut m = ComplexMatrix::zeros(side, side);
        for x in 0..side {
            for y in 0..side {
                m[(x, y)] = (0..side).map(|o| at(x, o) * at(y, o).conj()).sum();
            }
        }
        DensityMatrix::new(m).expect("reduced state of a normalized pure state")
    }
}

fn sample_index(probs: &[f64], r: f64) -> usize {
    let total: f64 = probs.iter().sum();
    let target = r * total;
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_nonzero = i;
            acc += p;
            if target < acc {
                return i;
            }
        }
    }
    last_nonzero
}

/// One of Alice's measurement outcomes with Bob's normalized conditional state.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub outcome: usize,
    pub probability: f64,
    pub bob_state: StateVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureMode {
    Sample(u64),
    Exhaustive,
}

/// Measures Alice's register: one sampled branch, or all of them.
pub fn alice_measure(ch: &EprChannel, mode: MeasureMode) -> Result<Vec<Branch>> {
    match mode {
        MeasureMode::Sample(seed) => Ok(vec![ch.measure_seeded(seed)?]),
        MeasureMode::Exhaustive => Ok(ch.branches()),
    }
}

pub fn build_channel(pairs: usize) -> Result<EprChannel> {
    EprChannel::new(pairs)
}

/// Bob's local correction `M·ψ`.
pub fn bob_correct(bob_state: &StateVector, m: &ComplexMatrix) -> Result<StateVector> {
    if m.cols() != bob_state.dim() {
        return Err(RspError::DimensionMismatch {
            expected: bob_state.dim(),
            found: m.cols(),
        });
    }
    apply(m, bob_state)
}

/// Bob's correction on a subset of his qubits (`slots` index his own register).
pub fn bob_correct_on(
    bob_state: &StateVector,
    m: &ComplexMatrix,
    slots: &[usize],
) -> Result<StateVector> {
    apply_on_slots(m, bob_state, slots)
}

/// Cbits needed to teleport an `s`-level state over `pairs` EPR pairs: `log2(s) + L`.
pub fn teleport_cost(s: usize, pairs: usize) -> f64 {
    (s as f64).log2() + pairs as f64
}

// ---------------------------------------------------------------------------
// Classical side
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalMessage {
    #[serde(rename = "alphabet")]
    alphabet_size: usize,
    symbol: usize,
}

impl ClassicalMessage {
    pub fn new(alphabet_size: usize, symbol: usize) -> Result<Self> {
        if symbol >= alphabet_size {
            return Err(RspError::SymbolOutOfRange {
                symbol,
                alphabet: alphabet_size,
            });
        }
        Ok(Self {
            alphabet_size,
            symbol,
        })
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn symbol(&self) -> usize {
        self.symbol
    }

    /// `log2(alphabet)`, possibly fractional.
    pub fn cost(&self) -> f64 {
        (self.alphabet_size as f64).log2()
    }

    /// Bits on a real wire: `⌈log2(alphabet)⌉`.
    pub fn wire_bits(&self) -> u32 {
        self.alphabet_size.next_power_of_two().trailing_zeros()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CbitMode {
    #[default]
    Fractional,
    Integer,
}

/// Record of one protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolTranscript {
    pub alice_outcome: usize,
    pub messages: Vec<ClassicalMessage>,
    pub cbits_total: f64,
    pub bob_final: StateVector,
    pub success: bool,
    /// Fidelity of `bob_final` with the declared target.
    pub fidelity: f64,
    /// Fidelity with the untransformed target, when the protocol prepared a
    /// transformed version of it.
    pub logical_fidelity: Option<f64>,
}

impl ProtocolTranscript {
    pub fn new(alice_outcome: usize, bob_state: StateVector) -> Self {
        Self {
            alice_outcome,
            messages: Vec::new(),
            cbits_total: 0.0,
            bob_final: bob_state,
            success: false,
            fidelity: 0.0,
            logical_fidelity: None,
        }
    }

    /// Appends a message and charges `log2(alphabet_size)` cbits.
    pub fn charge_message(mut self, alphabet_size: usize, symbol: usize) -> Result<Self> {
        let msg = ClassicalMessage::new(alphabet_size, symbol)?;
        self.cbits_total += msg.cost();
        self.messages.push(msg);
        Ok(self)
    }

    pub fn cbits(&self, mode: CbitMode) -> f64 {
        match mode {
            CbitMode::Fractional => self.cbits_total,
            CbitMode::Integer => self.messages.iter().map(|m| m.wire_bits() as f64).sum(),
        }
    }

    pub fn export(&self, protocol: &str, s: usize, pairs: usize) -> TranscriptExport {
        TranscriptExport {
            protocol: protocol.to_string(),
            s,
            pairs,
            outcome: self.alice_outcome,
            success: self.success,
            fidelity: self.fidelity,
            cbits: self.cbits_total,
            messages: self.messages.clone(),
            branches: None,
        }
    }
}

/// JSON form of a transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptExport {
    pub protocol: String,
    pub s: usize,
    #[serde(rename = "L")]
    pub pairs: usize,
    pub outcome: usize,
    pub success: bool,
    pub fidelity: f64,
    pub cbits: f64,
    pub messages: Vec<ClassicalMessage>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub branches: Option<Vec<BranchExport>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchExport {
    pub k: usize,
    pub prob: f64,
    pub fidelity_after_correction: f64,
}

// ---------------------------------------------------------------------------
// Protocol engine
// ---------------------------------------------------------------------------

/// What Bob does after Alice reports an outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolution {
    pub messages: Vec<ClassicalMessage>,
    /// Bob's corrected state, or `None` when the outcome signals failure.
    pub corrected: Option<StateVector>,
}

/// A remote-state-preparation protocol over an EPR channel.
pub trait Protocol: Sync {
    fn name(&self) -> &'static str;

    /// Dimension `s` of the qudit being prepared.
    fn dim(&self) -> usize;

    fn pairs(&self) -> usize {
        self.channel().pairs()
    }

    /// The channel after Alice's local operation, ready to be measured.
    fn channel(&self) -> &EprChannel;

    /// The state Bob should end up with, on his full `2^L` register.
    fn target(&self) -> &StateVector;

    fn resolve(&self, outcome: usize, bob_state: &StateVector) -> Result<Resolution>;

    fn logical_fidelity(&self, _bob_final: &StateVector) -> Option<f64> {
        None
    }
}

/// Completes a measured branch into a transcript, checking the success invariant.
pub fn finish_branch<P: Protocol + ?Sized>(p: &P, branch: &Branch) -> Result<ProtocolTranscript> {
    let res = p.resolve(branch.outcome, &branch.bob_state)?;
    let mut t = ProtocolTranscript::new(branch.outcome, branch.bob_state.clone());
    for m in &res.messages {
        t = t.charge_message(m.alphabet_size(), m.symbol())?;
    }
    if let Some(state) = res.corrected {
        t.fidelity = fidelity_global_phase(p.target(), &state)?;
        t.success = true;
        t.logical_fidelity = p.logical_fidelity(&state);
        t.bob_final = state;
        if t.fidelity < SUCCESS_FIDELITY {
            return Err(RspError::InvariantViolation(format!(
                "{}: outcome {} marked successful with fidelity {}",
                p.name(),
                branch.outcome,
                t.fidelity
            )));
        }
    } else {
        t.fidelity = fidelity_global_phase(p.target(), &t.bob_final)?;
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchRecord {
    pub outcome: usize,
    pub probability: f64,
    pub transcript: ProtocolTranscript,
}

/// All of Alice's outcomes with exact probabilities and Bob's final states.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchTable {
    pub protocol: &'static str,
    pub s: usize,
    pub pairs: usize,
    pub rows: Vec<BranchRecord>,
}

impl BranchTable {
    pub fn success_probability(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.transcript.success)
            .map(|r| r.probability)
            .sum()
    }

    pub fn total_probability(&self) -> f64 {
        self.rows.iter().map(|r| r.probability).sum()
    }

    pub fn min_success_fidelity(&self) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.transcript.success)
            .map(|r| r.transcript.fidelity)
            .min_by(f64::total_cmp)
    }

    /// Probability-weighted mean of charged cbits.
    pub fn expected_cbits(&self) -> f64 {
        let total = self.total_probability();
        self.rows
            .iter()
            .map(|r| r.probability * r.transcript.cbits_total)
            .sum::<f64>()
            / total
    }

    pub fn export(&self) -> TranscriptExport {
        let first = &self.rows[0].transcript;
        let mut e = first.export(self.protocol, self.s, self.pairs);
        e.branches = Some(
            self.rows
                .iter()
                .map(|r| BranchExport {
                    k: r.outcome,
                    prob: r.probability,
                    fidelity_after_correction: r.transcript.fidelity,
                })
                .collect(),
        );
        e
    }
}

pub fn run_exhaustive<P: Protocol + ?Sized>(p: &P) -> Result<BranchTable> {
    let rows = p
        .channel()
        .branches()
        .iter()
        .map(|b| {
            Ok(BranchRecord {
                outcome: b.outcome,
                probability: b.probability,
                transcript: finish_branch(p, b)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BranchTable {
        protocol: p.name(),
        s: p.dim(),
        pairs: p.pairs(),
        rows,
    })
}

pub fn run_sampled<P: Protocol + ?Sized>(p: &P, seed: u64) -> Result<ProtocolTranscript> {
    let branch = p.channel().measure_seeded(seed)?;
    finish_branch(p, &branch)
}

/// Result of [`run`]: one transcript, or the full branch table.
#[derive(Debug, Clone, PartialEq)]
pub enum RunOutput {
    Single(ProtocolTranscript),
    Table(BranchTable),
}

pub fn run<P: Protocol + ?Sized>(p: &P, mode: MeasureMode) -> Result<RunOutput> {
    match mode {
        MeasureMode::Sample(seed) => run_sampled(p, seed).map(RunOutput::Single),
        MeasureMode::Exhaustive => run_exhaustive(p).map(RunOutput::Table),
    }
}

/// Per-trial summary kept by [`monte_carlo`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub outcome: usize,
    pub success: bool,
    pub fidelity: f64,
    pub cbits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary {
    pub trials: u64,
    pub successes: u64,
    pub success_frequency: f64,
    /// `None` when no trial succeeded.
    pub mean_fidelity_on_success: Option<f64>,
    pub mean_cbits: f64,
    pub outcome_counts: Vec<u64>,
}

/// Runs `trials` independent seeded trials; trial `t` uses seed `seed + t`.
///
/// Bob's side depends only on Alice's outcome, so each reachable outcome is
/// resolved once and trials only draw outcomes. Draws run on the current
/// rayon pool and are reduced in trial order, so the summary does not depend
/// on scheduling.
pub fn monte_carlo<P: Protocol + ?Sized>(
    p: &P,
    seed: u64,
    trials: u64,
) -> Result<MonteCarloSummary> {
    let ch = p.channel();
    let marginal = ch.alice_marginal();
    let resolved: Vec<Option<TrialOutcome>> = (0..ch.side())
        .into_par_iter()
        .map(|k| {
            if marginal[k] <= f64::MIN_POSITIVE {
                return Ok(None);
            }
            let tr = finish_branch(p, &ch.branch(k)?)?;
            Ok(Some(TrialOutcome {
                outcome: k,
                success: tr.success,
                fidelity: tr.fidelity,
                cbits: tr.cbits_total,
            }))
        })
        .collect::<Result<_>>()?;
    let draws: Vec<usize> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t));
            sample_index(&marginal, rng.random::<f64>())
        })
        .collect();
    let results = draws
        .iter()
        .map(|&k| resolved[k].ok_or(RspError::ZeroProbabilityBranch(k)))
        .collect::<Result<Vec<_>>>()?;

    let mut counts = vec![0u64; ch.side()];
    let mut successes = 0u64;
    let mut fid_sum = 0.0;
    let mut cbit_sum = 0.0;
    for r in &results {
        counts[r.outcome] += 1;
        cbit_sum += r.cbits;
        if r.success {
            successes += 1;
            fid_sum += r.fidelity;
        }
    }
    let n = trials.max(1) as f64;
    Ok(MonteCarloSummary {
        trials,
        successes,
        success_frequency: successes as f64 / n,
        mean_fidelity_on_success: (successes > 0).then(|| fid_sum / successes as f64),
        mean_cbits: cbit_sum / n,
        outcome_counts: counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{gates, purity, EXACT_TOL, NORM_TOL};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn single_pair_is_bell_state() {
        let ch = build_channel(1).unwrap();
        let bell = StateVector::from_real(&[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]).unwrap();
        assert!(ch.joint().max_abs_diff(&bell) < EXACT_TOL);
    }

    #[test]
    fn two_pairs_in_decimal_form() {
        let ch = build_channel(2).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let expect = if a == b { 0.5 } else { 0.0 };
                assert_abs_diff_eq!(ch.joint()[a * 4 + b].re, expect, epsilon = EXACT_TOL);
            }
        }
        assert_abs_diff_eq!(purity(&ch.alice_reduced()), 0.25, epsilon = NORM_TOL);
    }

    #[test]
    fn joint_layout_equals_reordered_pair_product() {
        // (|00⟩+|11⟩)^{⊗L} in pair order, then permute qubits to A-slots first
        for pairs in 1..=4usize {
            let bell = StateVector::from_real(&[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]).unwrap();
            let mut prod = bell.clone();
            for _ in 1..pairs {
                prod = crate::linalg::tensor(&prod, &bell);
            }
            let n = 2 * pairs;
            let mut reordered = vec![ZERO; 1 << n];
            for (idx, amp) in prod.amplitudes().iter().enumerate() {
                // pair-order qubit 2i is Alice's i, 2i+1 is Bob's i
                let mut out = 0usize;
                for i in 0..pairs {
                    let a = (idx >> (n - 1 - 2 * i)) & 1;
                    let b = (idx >> (n - 2 - 2 * i)) & 1;
                    out |= a << (n - 1 - i);
                    out |= b << (n - 1 - (pairs + i));
                }
                reordered[out] = *amp;
            }
            let expect = StateVector::new(reordered).unwrap();
            assert!(build_channel(pairs).unwrap().joint().max_abs_diff(&expect) < EXACT_TOL);
        }
    }

    #[test]
    fn pair_count_range() {
        assert!(build_channel(0).is_err());
        assert!(build_channel(MAX_PAIRS + 1).is_err());
        assert!(build_channel(MAX_PAIRS).is_ok());
    }

    #[test]
    fn alice_bit_flip() {
        let ch = build_channel(1)
            .unwrap()
            .alice_apply(&gates::pauli_x())
            .unwrap();
        let expect = StateVector::from_real(&[0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0]).unwrap();
        assert!(ch.joint().max_abs_diff(&expect) < EXACT_TOL);
    }

    #[test]
    fn alice_apply_rejects_non_unitary() {
        let m = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            build_channel(1).unwrap().alice_apply(&m),
            Err(RspError::NotUnitary(_))
        ));
    }

    #[test]
    fn alice_apply_on_slot_matches_full_register() {
        let ch = build_channel(2).unwrap();
        let full = crate::linalg::tensor(&gates::identity(), &gates::minus_i_sigma_y());
        let a = ch.alice_apply(&full).unwrap();
        let b = ch.alice_apply_on(&gates::minus_i_sigma_y(), &[1]).unwrap();
        assert!(a.joint().max_abs_diff(b.joint()) < EXACT_TOL);
        assert!(ch.alice_apply_on(&gates::pauli_x(), &[2]).is_err());
    }

    #[test]
    fn fresh_single_pair_measurement() {
        let ch = build_channel(1).unwrap();
        let branches = alice_measure(&ch, MeasureMode::Exhaustive).unwrap();
        assert_eq!(branches.len(), 2);
        for b in &branches {
            assert_abs_diff_eq!(b.probability, 0.5, epsilon = EXACT_TOL);
            assert!(b.bob_state.max_abs_diff(&StateVector::basis(2, b.outcome)) < EXACT_TOL);
        }
        let sampled = alice_measure(&ch, MeasureMode::Sample(3)).unwrap();
        assert_eq!(sampled.len(), 1);
    }

    #[test]
    fn zero_probability_branch_is_an_error() {
        // X on Alice then measuring: all outcomes still 1/2, so build a state with a dead branch
        let h = ComplexMatrix::from_real(
            2,
            2,
            &[FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
        )
        .unwrap();
        let mut ch = build_channel(1).unwrap();
        // collapse by hand: joint = |0⟩_A|+⟩_B
        ch.joint = StateVector::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0, 0.0]).unwrap();
        assert_eq!(
            ch.branch(1).unwrap_err(),
            RspError::ZeroProbabilityBranch(1)
        );
        assert_eq!(ch.branches().len(), 1);
        let ch = ch.alice_apply(&h).unwrap();
        assert_eq!(ch.branches().len(), 2);
    }

    #[test]
    fn bob_correct_identity_and_mismatch() {
        let v = StateVector::from_real(&[0.6, 0.8]).unwrap();
        assert_eq!(bob_correct(&v, &ComplexMatrix::identity(2)).unwrap(), v);
        assert!(bob_correct(&v, &ComplexMatrix::identity(4)).is_err());
    }

    #[test]
    fn message_charging() {
        let t = ProtocolTranscript::new(0, StateVector::basis(2, 0));
        let t = t.charge_message(4, 3).unwrap();
        assert_abs_diff_eq!(t.cbits_total, 2.0, epsilon = EXACT_TOL);
        let t2 = ProtocolTranscript::new(0, StateVector::basis(2, 0))
            .charge_message(2, 0)
            .unwrap()
            .charge_message(2, 1)
            .unwrap();
        assert_abs_diff_eq!(t2.cbits_total, 2.0, epsilon = EXACT_TOL);
        assert!(matches!(
            t2.charge_message(3, 3),
            Err(RspError::SymbolOutOfRange {
                symbol: 3,
                alphabet: 3
            })
        ));
        let five = ProtocolTranscript::new(0, StateVector::basis(2, 0))
            .charge_message(5, 4)
            .unwrap();
        assert_abs_diff_eq!(
            five.cbits(CbitMode::Fractional),
            5f64.log2(),
            epsilon = EXACT_TOL
        );
        assert_eq!(five.cbits(CbitMode::Integer), 3.0);
    }

    #[test]
    fn teleport_costs() {
        assert_abs_diff_eq!(teleport_cost(4, 2), 4.0, epsilon = EXACT_TOL);
        assert_abs_diff_eq!(teleport_cost(3, 2), 3.584962500721156, epsilon = 1e-12);
        assert_abs_diff_eq!(teleport_cost(2, 1), 2.0, epsilon = EXACT_TOL);
    }

    #[test]
    fn sampling_skips_zero_mass() {
        assert_eq!(sample_index(&[0.0, 1.0, 0.0], 0.0), 1);
        assert_eq!(sample_index(&[0.5, 0.5, 0.0], 0.999_999), 1);
        assert_eq!(sample_index(&[0.25; 4], 0.3), 1);
    }

    #[test]
    fn transcript_export_schema() {
        let t = ProtocolTranscript::new(2, StateVector::basis(4, 2))
            .charge_message(4, 2)
            .unwrap();
        let json = serde_json::to_value(t.export("equatorial", 3, 2)).unwrap();
        assert_eq!(json["L"], 2);
        assert_eq!(json["messages"][0]["alphabet"], 4);
        assert_eq!(json["messages"][0]["symbol"], 2);
        assert!(json.get("branches").is_none());
    }
}
