//! Qudit targets, their qubit-register embeddings and the index codec.
//!
//! A qudit of dimension `s` is carried by `L` qubits on the subspace spanned
//! by the first `s` computational basis states. Basis labels follow the
//! register convention of [`crate::linalg`]: the last qubit is the least
//! significant bit, so `|0…01⟩` is decimal 1.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RspError};
use crate::linalg::{StateVector, C64};

/// Tolerance used when comparing states that went through a protocol.
pub const EQUIV_TOL: f64 = 1e-9;
/// Input coefficient vectors within this distance of unit norm are
/// renormalized; anything further off is rejected.
pub const LOADER_NORM_TOL: f64 = 1e-6;

/// Admissible number of qubits for a qudit of dimension `s`:
/// `log2(s) ≤ L ≤ 1 + log2(s)`.
pub fn qubit_bounds(s: usize) -> Result<(usize, usize)> {
    if s < 1 {
        return Err(RspError::InvalidTarget(
            "dimension must be at least 1".into(),
        ));
    }
    let min = s.next_power_of_two().trailing_zeros() as usize;
    let max = s.ilog2() as usize + 1;
    Ok((min, max))
}

/// Whether `pairs` lies within [`qubit_bounds`] for `s`.
pub fn admits(s: usize, pairs: usize) -> bool {
    qubit_bounds(s).is_ok_and(|(lo, hi)| (lo..=hi).contains(&pairs))
}

/// Decimal ↔ binary conversion for `qubits`-bit register labels.
///
/// Bit 0 of the encoded string is the first tensor factor (most significant).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexCodec {
    qubits: usize,
}

impl IndexCodec {
    pub fn new(qubits: usize) -> Self {
        Self { qubits }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn encode(&self, k: usize) -> Result<Vec<u8>> {
        if self.qubits < usize::BITS as usize && k >> self.qubits != 0 {
            return Err(RspError::IndexOutOfRange {
                index: k,
                qubits: self.qubits,
            });
        }
        Ok((0..self.qubits)
            .map(|i| ((k >> (self.qubits - 1 - i)) & 1) as u8)
            .collect())
    }

    pub fn decode(&self, bits: &[u8]) -> Result<usize> {
        if bits.len() != self.qubits {
            return Err(RspError::DimensionMismatch {
                expected: self.qubits,
                found: bits.len(),
            });
        }
        bits.iter().try_fold(0usize, |acc, &b| match b {
            0 | 1 => Ok((acc << 1) | b as usize),
            _ => Err(RspError::InvalidTarget(format!("bit value {b}"))),
        })
    }

    /// Converts a label written with the first factor as the least
    /// significant bit into this codec's convention (bit reversal).
    pub fn from_lsb_first(&self, k: usize) -> Result<usize> {
        let mut bits = self.encode(k)?;
        bits.reverse();
        self.decode(&bits)
    }
}

pub fn encode_index(k: usize, qubits: usize) -> Result<Vec<u8>> {
    IndexCodec::new(qubits).encode(k)
}

pub fn decode_index(bits: &[u8]) -> Result<usize> {
    IndexCodec::new(bits.len()).decode(bits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuditKind {
    Equatorial,
    Real,
    General,
}

/// A pure qudit target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuditSpecFile", into = "QuditSpecFile")]
pub enum QuditSpec {
    /// `(1/√s) Σ_j e^{iφ_j}|j⟩`.
    Equatorial {
        phases: Vec<f64>,
    },
    Real {
        coeffs: Vec<f64>,
    },
    General {
        amps: Vec<C64>,
    },
}

fn loader_normalize(norm_sqr: f64) -> Result<f64> {
    let norm = norm_sqr.sqrt();
    if (norm - 1.0).abs() > LOADER_NORM_TOL {
        return Err(RspError::NotNormalized(norm_sqr));
    }
    Ok(1.0 / norm)
}

impl QuditSpec {
    pub fn equatorial(phases: Vec<f64>) -> Result<Self> {
        if phases.is_empty() {
            return Err(RspError::InvalidTarget("no phases given".into()));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(RspError::InvalidTarget("non-finite phase".into()));
        }
        Ok(Self::Equatorial { phases })
    }

    /// Real coefficients; renormalized when within [`LOADER_NORM_TOL`] of unit norm.
    pub fn real(mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(RspError::InvalidTarget(
                "empty or non-finite coefficients".into(),
            ));
        }
        let scale = loader_normalize(coeffs.iter().map(|c| c * c).sum())?;
        coeffs.iter_mut().for_each(|c| *c *= scale);
        Ok(Self::Real { coeffs })
    }

    pub fn general(mut amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() || amps.iter().any(|a| !a.is_finite()) {
            return Err(RspError::InvalidTarget(
                "empty or non-finite amplitudes".into(),
            ));
        }
        let scale = loader_normalize(amps.iter().map(|a| a.norm_sqr()).sum())?;
        amps.iter_mut().for_each(|a| *a *= scale);
        Ok(Self::General { amps })
    }

    pub fn kind(&self) -> QuditKind {
        match self {
            Self::Equatorial { .. } => QuditKind::Equatorial,
            Self::Real { .. } => QuditKind::Real,
            Self::General { .. } => QuditKind::General,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Equatorial { phases } => phases.len(),
            Self::Real { coeffs } => coeffs.len(),
            Self::General { amps } => amps.len(),
        }
    }

    pub fn amplitudes(&self) -> Vec<C64> {
        match self {
            Self::Equatorial { phases } => {
                let r = 1.0 / (phases.len() as f64).sqrt();
                phases.iter().map(|&p| C64::from_polar(r, p)).collect()
            }
            Self::Real { coeffs } => coeffs.iter().map(|&c| C64::new(c, 0.0)).collect(),
            Self::General { amps } => amps.clone(),
        }
    }

    pub fn state(&self) -> StateVector {
        StateVector::normalized(self.amplitudes()).expect("qudit specs are normalized")
    }

    /// Real coefficients, for protocols restricted to real Hilbert space.
    ///
    /// A general spec is accepted when every imaginary part is below 1e-12.
    pub fn real_coeffs(&self) -> Result<Vec<f64>> {
        match self {
            Self::Real { coeffs } => Ok(coeffs.clone()),
            Self::General { amps } if amps.iter().all(|a| a.im.abs() <= 1e-12) => {
                Ok(amps.iter().map(|a| a.re).collect())
            }
            Self::Equatorial { phases } if phases.len() == 1 => Ok(vec![phases[0].cos()]),
            _ => Err(RspError::InvalidTarget(
                "target has complex amplitudes".into(),
            )),
        }
    }

    pub fn phases(&self) -> Option<&[f64]> {
        match self {
            Self::Equatorial { phases } => Some(phases),
            _ => None,
        }
    }
}

/// On-disk JSON form of a [`QuditSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum QuditSpecFile {
    Equatorial {
        s: usize,
        phases: Vec<f64>,
    },
    Real {
        s: usize,
        coeffs: Vec<f64>,
    },
    General {
        s: usize,
        re: Vec<f64>,
        im: Vec<f64>,
    },
}

impl TryFrom<QuditSpecFile> for QuditSpec {
    type Error = RspError;

    fn try_from(f: QuditSpecFile) -> Result<Self> {
        let check = |s: usize, n: usize| {
            if s == n {
                Ok(())
            } else {
                Err(RspError::DimensionMismatch {
                    expected: s,
                    found: n,
                })
            }
        };
        match f {
            QuditSpecFile::Equatorial { s, phases } => {
                check(s, phases.len())?;
                Self::equatorial(phases)
            }
            QuditSpecFile::Real { s, coeffs } => {
                check(s, coeffs.len())?;
                Self::real(coeffs)
            }
            QuditSpecFile::General { s, re, im } => {
                check(s, re.len())?;
                check(s, im.len())?;
                Self::general(
                    re.into_iter()
                        .zip(im)
                        .map(|(r, i)| C64::new(r, i))
                        .collect(),
                )
            }
        }
    }
}

impl From<QuditSpec> for QuditSpecFile {
    fn from(q: QuditSpec) -> Self {
        let s = q.dim();
        match q {
            QuditSpec::Equatorial { phases } => Self::Equatorial { s, phases },
            QuditSpec::Real { coeffs } => Self::Real { s, coeffs },
            QuditSpec::General { amps } => Self::General {
                s,
                re: amps.iter().map(|a| a.re).collect(),
                im: amps.iter().map(|a| a.im).collect(),
            },
        }
    }
}

/// Places the qudit on basis states `0..s` of an `qubits`-qubit register.
pub fn embed(q: &QuditSpec, qubits: usize) -> Result<StateVector> {
    embed_amplitudes(&q.amplitudes(), qubits)
}

pub(crate) fn embed_amplitudes(amps: &[C64], qubits: usize) -> Result<StateVector> {
    let dim = 1usize
        .checked_shl(qubits as u32)
        .ok_or(RspError::InvalidPairCount {
            dim: amps.len(),
            pairs: qubits,
        })?;
    if dim < amps.len() {
        return Err(RspError::InvalidPairCount {
            dim: amps.len(),
            pairs: qubits,
        });
    }
    let mut out = vec![C64::new(0.0, 0.0); dim];
    out[..amps.len()].copy_from_slice(amps);
    StateVector::normalized(out)
}

/// How [`equivalent`] treats a global phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseMode {
    /// Coefficients may differ by one shared unit phase.
    #[default]
    UpToGlobalPhase,
    /// Coefficient tuples must match exactly.
    Strict,
}

/// Whether `a` restricted to `basis` carries the coefficients of `q`, with no
/// weight outside that subspace.
pub fn equivalent(a: &StateVector, basis: &[usize], q: &QuditSpec, mode: PhaseMode) -> bool {
    let target = q.amplitudes();
    if basis.len() != target.len() || basis.iter().any(|&i| i >= a.dim()) {
        return false;
    }
    if (1..basis.len()).any(|i| basis[..i].contains(&basis[i])) {
        return false;
    }
    let amps = a.amplitudes();
    let outside: f64 = (0..a.dim())
        .filter(|i| !basis.contains(i))
        .map(|i| amps[i].norm_sqr())
        .sum();
    if outside > EQUIV_TOL {
        return false;
    }
    let coeffs: Vec<C64> = basis.iter().map(|&i| amps[i]).collect();
    let phase = match mode {
        PhaseMode::Strict => C64::new(1.0, 0.0),
        PhaseMode::UpToGlobalPhase => {
            let overlap: C64 = target.iter().zip(&coeffs).map(|(t, c)| t.conj() * c).sum();
            if overlap.norm() == 0.0 {
                return false;
            }
            overlap / overlap.norm()
        }
    };
    target
        .iter()
        .zip(&coeffs)
        .all(|(t, c)| (t * phase - c).norm() <= EQUIV_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::EXACT_TOL;

    #[test]
    fn bounds_examples() {
        assert_eq!(qubit_bounds(3).unwrap(), (2, 2));
        assert_eq!(qubit_bounds(8).unwrap(), (3, 4));
        assert_eq!(qubit_bounds(1).unwrap(), (0, 1));
        assert!(qubit_bounds(0).is_err());
        for s in 1..=4096 {
            let (lo, hi) = qubit_bounds(s).unwrap();
            let l2 = (s as f64).log2();
            assert!(lo as f64 >= l2 - 1e-12 && (lo as f64) < l2 + 1.0);
            assert!(hi as f64 <= 1.0 + l2 + 1e-12 && hi as f64 > l2);
            assert!(lo <= hi);
        }
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode_index(1, 3).unwrap(), vec![0, 0, 1]);
        assert_eq!(encode_index(0, 3).unwrap(), vec![0, 0, 0]);
        assert_eq!(encode_index(5, 3).unwrap(), vec![1, 0, 1]);
        assert!(matches!(
            encode_index(8, 3),
            Err(RspError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn codec_is_bijective_up_to_ten_qubits() {
        for l in 0..=10 {
            let codec = IndexCodec::new(l);
            for k in 0..1usize << l {
                let bits = codec.encode(k).unwrap();
                assert_eq!(bits.len(), l);
                assert_eq!(codec.decode(&bits).unwrap(), k);
            }
        }
    }

    #[test]
    fn lsb_first_labels_are_bit_reversed() {
        let codec = IndexCodec::new(3);
        // i*2^0 + j*2^1 + k*2^2 with (i,j,k) = (1,1,0) is 3; in register order that is |110⟩ = 6
        assert_eq!(codec.from_lsb_first(3).unwrap(), 6);
        assert_eq!(codec.from_lsb_first(1).unwrap(), 4);
    }

    #[test]
    fn embed_examples() {
        let q = QuditSpec::real(vec![1.0, 0.0]).unwrap();
        assert_eq!(embed(&q, 1).unwrap(), StateVector::basis(2, 0));

        let q = QuditSpec::real(vec![0.6, 0.0, 0.8]).unwrap();
        let e = embed(&q, 2).unwrap();
        assert_eq!(e, StateVector::from_real(&[0.6, 0.0, 0.8, 0.0]).unwrap());

        let q = QuditSpec::real(vec![0.5; 4]).unwrap();
        let e = embed(&q, 3).unwrap();
        assert_eq!(
            e,
            StateVector::from_real(&[0.5, 0.5, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0]).unwrap()
        );
        assert!((e.norm_sqr() - 1.0).abs() < EXACT_TOL);

        assert!(matches!(
            embed(&q, 1),
            Err(RspError::InvalidPairCount { .. })
        ));
    }

    #[test]
    fn equivalence_cases() {
        let q = QuditSpec::equatorial(vec![0.0, 1.2, 2.5]).unwrap();
        let a = embed(&q, 2).unwrap();
        assert!(equivalent(&a, &[0, 1, 2], &q, PhaseMode::UpToGlobalPhase));
        assert!(equivalent(&a, &[0, 1, 2], &q, PhaseMode::Strict));

        let phased = a.scaled(C64::from_polar(1.0, 2.1));
        assert!(equivalent(
            &phased,
            &[0, 1, 2],
            &q,
            PhaseMode::UpToGlobalPhase
        ));
        assert!(!equivalent(&phased, &[0, 1, 2], &q, PhaseMode::Strict));

        // amplitude 0.1 on |3⟩, renormalized: residual weight ≈ 0.0099
        let mut amps = a.amplitudes().to_vec();
        amps[3] = C64::new(0.1, 0.0);
        let leaked = StateVector::normalized(amps).unwrap();
        assert!(!equivalent(
            &leaked,
            &[0, 1, 2],
            &q,
            PhaseMode::UpToGlobalPhase
        ));

        // permuted subspace basis
        let moved = StateVector::normalized(vec![C64::new(0.0, 0.0), a[2], a[0], a[1]]).unwrap();
        assert!(equivalent(&moved, &[2, 3, 1], &q, PhaseMode::Strict));
        assert!(!equivalent(
            &moved,
            &[0, 1, 2],
            &q,
            PhaseMode::UpToGlobalPhase
        ));
    }

    #[test]
    fn loader_normalizes_near_unit_and_rejects_far() {
        let q = QuditSpec::real(vec![0.6, 0.8000004]).unwrap();
        let n: f64 = q.real_coeffs().unwrap().iter().map(|c| c * c).sum();
        assert!((n - 1.0).abs() < EXACT_TOL);
        assert!(QuditSpec::real(vec![0.6, 0.9]).is_err());
    }

    #[test]
    fn spec_json_schema() {
        let q: QuditSpec =
            serde_json::from_str(r#"{"kind":"equatorial","s":3,"phases":[0.0,1.2,2.5]}"#).unwrap();
        assert_eq!(q.kind(), QuditKind::Equatorial);
        assert_eq!(q.dim(), 3);

        let q: QuditSpec =
            serde_json::from_str(r#"{"kind":"real","s":2,"coeffs":[0.6,0.8]}"#).unwrap();
        assert_eq!(q.real_coeffs().unwrap(), vec![0.6, 0.8]);

        let q: QuditSpec =
            serde_json::from_str(r#"{"kind":"general","s":2,"re":[0.6,0.0],"im":[0.0,0.8]}"#)
                .unwrap();
        assert!(q.real_coeffs().is_err());
        let back = serde_json::to_string(&q).unwrap();
        assert_eq!(serde_json::from_str::<QuditSpec>(&back).unwrap(), q);

        let bad = serde_json::from_str::<QuditSpec>(r#"{"kind":"real","s":3,"coeffs":[0.6,0.8]}"#);
        assert!(bad.is_err());
        let bad = serde_json::from_str::<QuditSpec>(r#"{"kind":"real","s":2,"coeffs":[1.0,1.0]}"#);
        assert!(bad.is_err());
    }
}
