//! Probabilistic preparation of equatorial qudits.
//!
//! Alice rotates her register so that outcome `k < s` leaves Bob with the
//! ensemble member `ψ_k = (1/√s) Σ_j e^{i2πkj/s} e^{iφ_j}|j⟩`; Bob removes
//! the DFT phase with a diagonal correction. Outcomes `k ≥ s` leave Bob in
//! `|k⟩` and signal failure, so the protocol succeeds with probability
//! `s/2^L`. One `(s+1)`-symbol message is sent (`s` symbols when `s = 2^L`).
//!
//! Alice's operator has ROW `k` equal to the coefficients of `ψ_k`. With the
//! channel `Σ_m |m⟩|m⟩`, `(U ⊗ I)` then yields `Σ_k |k⟩_A ⊗ (row k)_B`, so no
//! extra per-branch phases appear.

use std::f64::consts::PI;

use crate::channel::{ClassicalMessage, EprChannel, Protocol, Resolution};
use crate::error::{Result, RspError};
use crate::linalg::{apply, ComplexMatrix, StateVector, C64, NORM_TOL, ONE};
use crate::states::{admits, embed_amplitudes};

/// The orthonormal family `{ψ_k}` generated by one phase vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EquatorialEnsemble {
    phases: Vec<f64>,
}

impl EquatorialEnsemble {
    /// `phases[0]` must be zero.
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        match phases.first() {
            None => Err(RspError::InvalidTarget("no phases given".into())),
            Some(p0) if p0.abs() > 1e-12 => Err(RspError::InvalidTarget(format!(
                "first phase must be 0, got {p0}"
            ))),
            _ => Ok(Self { phases }),
        }
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn member(&self, k: usize) -> StateVector {
        let s = self.dim();
        let r = 1.0 / (s as f64).sqrt();
        let amps = self
            .phases
            .iter()
            .enumerate()
            .map(|(j, &phi)| C64::from_polar(r, 2.0 * PI * ((k * j) % s) as f64 / s as f64 + phi))
            .collect();
        StateVector::normalized(amps).expect("equatorial member is normalizable")
    }

    pub fn members(&self) -> Vec<StateVector> {
        (0..self.dim()).map(|k| self.member(k)).collect()
    }
}

pub fn target_family(s: usize, phases: &[f64]) -> Result<Vec<StateVector>> {
    if phases.len() != s {
        return Err(RspError::DimensionMismatch {
            expected: s,
            found: phases.len(),
        });
    }
    Ok(EquatorialEnsemble::new(phases.to_vec())?.members())
}

/// `U = U' ⊕ I`: the first `s` rows are the (unconjugated) family members,
/// the remaining block is the identity.
pub fn build_alice_operator(family: &[StateVector], pairs: usize) -> Result<ComplexMatrix> {
    let s = family.len();
    let side = 1usize << pairs;
    if s == 0 || side < s {
        return Err(RspError::InvalidPairCount { dim: s, pairs });
    }
    if let Some(f) = family.iter().find(|f| f.dim() != s) {
        return Err(RspError::DimensionMismatch {
            expected: s,
            found: f.dim(),
        });
    }
    for (a, fa) in family.iter().enumerate() {
        for (b, fb) in family.iter().enumerate().skip(a) {
            let expect = if a == b { ONE } else { C64::new(0.0, 0.0) };
            let dev = (fa.inner(fb)? - expect).norm();
            if dev > NORM_TOL {
                return Err(RspError::InvalidTarget(format!(
                    "family is not orthonormal (⟨ψ_{a}|ψ_{b}⟩ off by {dev:.3e})"
                )));
            }
        }
    }
    let rows: Vec<Vec<C64>> = family.iter().map(|f| f.amplitudes().to_vec()).collect();
    let top = ComplexMatrix::from_rows(&rows)?;
    let u = top.direct_sum(&ComplexMatrix::identity(side - s));
    u.ensure_unitary()?;
    Ok(u)
}

/// Bob's correction for outcome `k`: `diag(e^{-i2πkj/s}) ⊕ I`.
pub fn correction(k: usize, s: usize, pairs: usize) -> Result<ComplexMatrix> {
    let side = 1usize << pairs;
    if side < s {
        return Err(RspError::InvalidPairCount { dim: s, pairs });
    }
    if k >= s {
        return Err(RspError::IndexOutOfRange {
            index: k,
            qubits: pairs,
        });
    }
    let diag: Vec<C64> = (0..side)
        .map(|j| {
            if j < s {
                C64::from_polar(1.0, -2.0 * PI * ((k * j) % s) as f64 / s as f64)
            } else {
                ONE
            }
        })
        .collect();
    Ok(ComplexMatrix::diagonal(&diag))
}

/// Classical alphabet: `s` symbols when `s = 2^L`, else `s + 1` with one shared
/// failure symbol.
pub fn message_alphabet(s: usize, pairs: usize) -> usize {
    if s == 1 << pairs {
        s
    } else {
        s + 1
    }
}

/// Success probability `s/2^L`.
pub fn success_probability(s: usize, pairs: usize) -> f64 {
    s as f64 / (1u64 << pairs) as f64
}

#[derive(Debug, Clone)]
pub struct EquatorialProtocol {
    ensemble: EquatorialEnsemble,
    operator: ComplexMatrix,
    channel: EprChannel,
    target: StateVector,
}

impl EquatorialProtocol {
    pub fn new(phases: &[f64], pairs: usize) -> Result<Self> {
        let ensemble = EquatorialEnsemble::new(phases.to_vec())?;
        let s = ensemble.dim();
        if !admits(s, pairs) {
            return Err(RspError::InvalidPairCount { dim: s, pairs });
        }
        let operator = build_alice_operator(&ensemble.members(), pairs)?;
        let channel = EprChannel::new(pairs)?.alice_apply(&operator)?;
        let target = embed_amplitudes(ensemble.member(0).amplitudes(), pairs)?;
        Ok(Self {
            ensemble,
            operator,
            channel,
            target,
        })
    }

    pub fn ensemble(&self) -> &EquatorialEnsemble {
        &self.ensemble
    }

    pub fn alice_operator(&self) -> &ComplexMatrix {
        &self.operator
    }
}

impl Protocol for EquatorialProtocol {
    fn name(&self) -> &'static str {
        "equatorial"
    }

    fn dim(&self) -> usize {
        self.ensemble.dim()
    }

    fn channel(&self) -> &EprChannel {
        &self.channel
    }

    fn target(&self) -> &StateVector {
        &self.target
    }

    fn resolve(&self, outcome: usize, bob_state: &StateVector) -> Result<Resolution> {
        let s = self.dim();
        let pairs = self.pairs();
        let alphabet = message_alphabet(s, pairs);
        if outcome < s {
            let fixed = apply(&correction(outcome, s, pairs)?, bob_state)?;
            Ok(Resolution {
                messages: vec![ClassicalMessage::new(alphabet, outcome)?],
                corrected: Some(fixed),
            })
        } else {
            Ok(Resolution {
                messages: vec![ClassicalMessage::new(alphabet, s)?],
                corrected: None,
            })
        }
    }
}
