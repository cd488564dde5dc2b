//! Exact (minimum) preparation of real-coefficient qudits with `s ≤ 8`.
//!
//! The protocol needs a state-independent family `{V_j}` of real orthogonal
//! matrices such that `{V_j Ψ}` is orthonormal for every real unit `Ψ`.
//! Such families are the left multiplications by the units of the
//! Cayley-Dickson algebras of dimension 1, 2, 4 and 8 (reals, complex
//! numbers, quaternions, octonions): `|e_j x|² = |x|²` and
//! `⟨e_j x, e_k x⟩ = ⟨e_j, e_k⟩|x|²` hold in any composition algebra.
//!
//! Alice applies `U` whose row `j` is `(V_j Ψ)^T`; outcome `j` leaves Bob
//! with `V_j Ψ`, which he undoes with `V_j^T`. Every outcome succeeds and
//! one `2^L`-symbol message (`L` cbits) is sent. Dimensions 3 and 5–7 are
//! zero-padded to 4 and 8.

use std::sync::OnceLock;

use crate::channel::{ClassicalMessage, EprChannel, Protocol, Resolution};
use crate::error::{Result, RspError};
use crate::linalg::{
    apply, apply_on_slots, gates, kron_factor, ComplexMatrix, StateVector, Tensor, C64, EXACT_TOL,
};
use crate::states::{embed_amplitudes, QuditSpec};

/// Cayley-Dickson product `(a,b)(c,d) = (ac − d̄b, da + bc̄)` on real
/// coordinate vectors of length 1, 2, 4 or 8.
pub fn cayley_dickson_mul(x: &[f64], y: &[f64]) -> Vec<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n == 1 {
        return vec![x[0] * y[0]];
    }
    let h = n / 2;
    let (a, b) = x.split_at(h);
    let (c, d) = y.split_at(h);
    let ac = cayley_dickson_mul(a, c);
    let db = cayley_dickson_mul(&conj(d), b);
    let da = cayley_dickson_mul(d, a);
    let bc = cayley_dickson_mul(b, &conj(c));
    let mut out: Vec<f64> = ac.iter().zip(&db).map(|(p, q)| p - q).collect();
    out.extend(da.iter().zip(&bc).map(|(p, q)| p + q));
    out
}

fn conj(x: &[f64]) -> Vec<f64> {
    x.iter()
        .enumerate()
        .map(|(i, &v)| if i == 0 { v } else { -v })
        .collect()
}

/// Matrix of `x ↦ e_unit · x` in dimension `dim`.
fn left_multiplication(unit: usize, dim: usize) -> ComplexMatrix {
    let mut e = vec![0.0; dim];
    e[unit] = 1.0;
    let mut m = ComplexMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut x = vec![0.0; dim];
        x[col] = 1.0;
        for (row, v) in cayley_dickson_mul(&e, &x).into_iter().enumerate() {
            m[(row, col)] = C64::new(v, 0.0);
        }
    }
    m
}

/// A factorized correction `left ⊗ right`; `left` acts on Bob's leading qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    pub left: ComplexMatrix,
    pub right: ComplexMatrix,
}

impl Factorization {
    fn new(left: ComplexMatrix, right: ComplexMatrix) -> Self {
        Self { left, right }
    }

    pub fn product(&self) -> ComplexMatrix {
        self.left.tensor(&self.right)
    }

    pub fn left_qubits(&self) -> usize {
        self.left.rows().trailing_zeros() as usize
    }
}

/// The family `V_0 = I, V_1, …` for one catalog dimension.
#[derive(Debug, Clone)]
pub struct OperatorCatalog {
    dim: usize,
    operators: Vec<ComplexMatrix>,
    /// Product forms of `V_j†`, where one exists.
    factorizations: Vec<Option<Factorization>>,
}

impl OperatorCatalog {
    fn build(dim: usize) -> Self {
        let operators: Vec<_> = (0..dim).map(|j| left_multiplication(j, dim)).collect();
        let factorizations = match dim {
            4 => {
                let i2 = gates::identity();
                let iy = gates::minus_i_sigma_y().transpose(); // iσ_y
                vec![
                    Some(Factorization::new(i2.clone(), i2.clone())),
                    Some(Factorization::new(i2, iy.clone())),
                    Some(Factorization::new(iy.clone(), gates::pauli_z())),
                    Some(Factorization::new(iy, gates::pauli_x())),
                ]
            }
            8 => operators
                .iter()
                .map(|v| {
                    let dagger = v.transpose();
                    [2, 4].into_iter().find_map(|left| {
                        kron_factor(&dagger, left, EXACT_TOL).map(|(l, r)| Factorization::new(l, r))
                    })
                })
                .collect(),
            _ => vec![None; dim],
        };
        Self {
            dim,
            operators,
            factorizations,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn operator(&self, j: usize) -> &ComplexMatrix {
        &self.operators[j]
    }

    /// `V_j† = V_j^T` (the catalog is real).
    pub fn correction(&self, j: usize) -> ComplexMatrix {
        self.operators[j].transpose()
    }

    pub fn factorization(&self, j: usize) -> Option<&Factorization> {
        self.factorizations.get(j).and_then(Option::as_ref)
    }

    /// The vectors `V_j Ψ` for a real `Ψ` of the catalog dimension.
    pub fn images(&self, psi: &[f64]) -> Result<Vec<Vec<f64>>> {
        if psi.len() != self.dim {
            return Err(RspError::DimensionMismatch {
                expected: self.dim,
                found: psi.len(),
            });
        }
        let v: Vec<C64> = psi.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.operators
            .iter()
            .map(|op| Ok(op.mul_vec(&v)?.iter().map(|c| c.re).collect()))
            .collect()
    }

    /// `U = [V_0Ψ, …, V_{d-1}Ψ]^T`.
    pub fn alice_operator(&self, psi: &[f64]) -> Result<ComplexMatrix> {
        let rows: Vec<Vec<C64>> = self
            .images(psi)?
            .into_iter()
            .map(|r| r.into_iter().map(|x| C64::new(x, 0.0)).collect())
            .collect();
        ComplexMatrix::from_rows(&rows)
    }
}

/// Shared catalog for `dim ∈ {1, 2, 4, 8}`.
pub fn catalog(dim: usize) -> Result<&'static OperatorCatalog> {
    static CATALOGS: [OnceLock<OperatorCatalog>; 4] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    let slot = match dim {
        1 => 0,
        2 => 1,
        4 => 2,
        8 => 3,
        _ => return Err(RspError::UnsupportedCatalog(dim)),
    };
    Ok(CATALOGS[slot].get_or_init(|| OperatorCatalog::build(dim)))
}

pub fn factored_correction(j: usize, cat: &OperatorCatalog) -> Option<&Factorization> {
    cat.factorization(j)
}

/// Zero-pads real coefficients to the smallest catalog dimension `≥ s`.
pub fn pad_to_catalog(coeffs: &[f64]) -> Result<(Vec<f64>, usize)> {
    let s = coeffs.len();
    let dim = match s {
        0 => return Err(RspError::InvalidTarget("empty target".into())),
        1 => 1,
        2 => 2,
        3 | 4 => 4,
        5..=8 => 8,
        _ => {
            return Err(RspError::InvalidTarget(format!(
                "dimension {s} exceeds 8; use the separable protocol"
            )))
        }
    };
    let mut padded = coeffs.to_vec();
    padded.resize(dim, 0.0);
    Ok((padded, dim))
}

/// EPR pairs used for a real qudit of dimension `s ≤ 8`.
pub fn pairs_for(s: usize) -> Result<usize> {
    match s {
        1 => Ok(1),
        2..=4 => Ok(2),
        5..=8 => Ok(3),
        _ => Err(RspError::InvalidTarget(format!(
            "dimension {s} outside 1..=8"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorrectionStyle {
    /// Bob applies `V_j†` to his whole register.
    #[default]
    Collective,
    /// Bob applies `M_j` and `N_j` to separate qubits when a product form
    /// exists, and falls back to the collective operation otherwise.
    Factored,
}

#[derive(Debug, Clone)]
pub struct RealMinProtocol {
    s: usize,
    catalog: &'static OperatorCatalog,
    style: CorrectionStyle,
    operator: ComplexMatrix,
    channel: EprChannel,
    target: StateVector,
}

impl RealMinProtocol {
    /// Runs over [`pairs_for`]`(s)` pairs with the `2^L`-dimensional catalog.
    pub fn new(coeffs: &[f64], style: CorrectionStyle) -> Result<Self> {
        let s = coeffs.len();
        let pairs = pairs_for(s)?;
        Self::with_pairs(coeffs, pairs, style)
    }

    fn with_pairs(coeffs: &[f64], pairs: usize, style: CorrectionStyle) -> Result<Self> {
        let s = coeffs.len();
        if s == 0 || s > 8 {
            return Err(RspError::InvalidTarget(format!(
                "dimension {s} outside 1..=8"
            )));
        }
        if !(1..=3).contains(&pairs) || (1 << pairs) < s {
            return Err(RspError::InvalidPairCount { dim: s, pairs });
        }
        let norm: f64 = coeffs.iter().map(|c| c * c).sum();
        if (norm - 1.0).abs() > crate::linalg::NORM_TOL {
            return Err(RspError::NotNormalized(norm));
        }
        let dim = 1usize << pairs;
        let catalog = catalog(dim)?;
        let mut psi = coeffs.to_vec();
        psi.resize(dim, 0.0);
        let operator = catalog.alice_operator(&psi)?;
        let channel = EprChannel::new(pairs)?.alice_apply(&operator)?;
        let target = StateVector::from_real(&psi)?;
        Ok(Self {
            s,
            catalog,
            style,
            operator,
            channel,
            target,
        })
    }

    pub fn from_spec(q: &QuditSpec, style: CorrectionStyle) -> Result<Self> {
        Self::new(&q.real_coeffs()?, style)
    }

    pub fn catalog(&self) -> &'static OperatorCatalog {
        self.catalog
    }

    pub fn alice_operator(&self) -> &ComplexMatrix {
        &self.operator
    }

    fn correct(&self, j: usize, bob: &StateVector) -> Result<StateVector> {
        match (self.style, self.catalog.factorization(j)) {
            (CorrectionStyle::Factored, Some(f)) => {
                let split = f.left_qubits();
                let total = self.pairs();
                let lhs: Vec<usize> = (0..split).collect();
                let rhs: Vec<usize> = (split..total).collect();
                let mid = apply_on_slots(&f.left, bob, &lhs)?;
                apply_on_slots(&f.right, &mid, &rhs)
            }
            _ => apply(&self.catalog.correction(j), bob),
        }
    }
}

impl Protocol for RealMinProtocol {
    fn name(&self) -> &'static str {
        "real-min"
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
        Ok(Resolution {
            messages: vec![ClassicalMessage::new(self.catalog.dim(), outcome)?],
            corrected: Some(self.correct(outcome, bob_state)?),
        })
    }
}

/// Checks that Bob's state carries the unpadded target on indices `0..s`.
pub fn holds_target(bob: &StateVector, coeffs: &[f64]) -> Result<bool> {
    let q = QuditSpec::real(coeffs.to_vec())?;
    let basis: Vec<usize> = (0..coeffs.len()).collect();
    Ok(crate::states::equivalent(
        bob,
        &basis,
        &q,
        crate::states::PhaseMode::UpToGlobalPhase,
    ))
}

/// Embedding of the padded target on `pairs` qubits.
pub fn padded_target(coeffs: &[f64], pairs: usize) -> Result<StateVector> {
    embed_amplitudes(
        &coeffs.iter().map(|&c| C64::new(c, 0.0)).collect::<Vec<_>>(),
        pairs,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::run_exhaustive;
    use crate::linalg::{fidelity_global_phase, NORM_TOL};
    use approx::assert_abs_diff_eq;

    fn real(rows: usize, data: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_real(rows, rows, data).unwrap()
    }

    #[test]
    fn quaternion_catalog_matches_reference_blocks() {
        let cat = catalog(4).unwrap();
        let z = 0.0;
        let v1 = real(
            4,
            &[z, -1.0, z, z, 1.0, z, z, z, z, z, z, -1.0, z, z, 1.0, z],
        );
        let v2 = real(
            4,
            &[z, z, -1.0, z, z, z, z, 1.0, 1.0, z, z, z, z, -1.0, z, z],
        );
        let v3 = real(
            4,
            &[z, z, z, -1.0, z, z, -1.0, z, z, 1.0, z, z, 1.0, z, z, z],
        );
        assert_eq!(
            cat.operator(0).max_abs_diff(&ComplexMatrix::identity(4)),
            0.0
        );
        assert_eq!(cat.operator(1).max_abs_diff(&v1), 0.0);
        assert_eq!(cat.operator(2).max_abs_diff(&v2), 0.0);
        assert_eq!(cat.operator(3).max_abs_diff(&v3), 0.0);
    }

    #[test]
    fn images_of_first_basis_vector() {
        let cat = catalog(4).unwrap();
        let imgs = cat.images(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        for (j, img) in imgs.iter().enumerate() {
            let mut e = vec![0.0; 4];
            e[j] = 1.0;
            assert_eq!(img, &e);
        }
    }

    #[test]
    fn complex_catalog_rotates_by_quarter_turn() {
        let imgs = catalog(2).unwrap().images(&[0.6, 0.8]).unwrap();
        assert_eq!(imgs[1], vec![-0.8, 0.6]);
    }

    #[test]
    fn uniform_vector_gram_is_identity() {
        let imgs = catalog(4).unwrap().images(&[0.5; 4]).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let dot: f64 = imgs[a].iter().zip(&imgs[b]).map(|(x, y)| x * y).sum();
                assert_abs_diff_eq!(dot, if a == b { 1.0 } else { 0.0 }, epsilon = EXACT_TOL);
            }
        }
    }

    #[test]
    fn unsupported_catalogs() {
        for d in [0, 3, 5, 6, 7, 16] {
            assert_eq!(catalog(d).unwrap_err(), RspError::UnsupportedCatalog(d));
        }
    }

    #[test]
    fn quaternion_factorizations() {
        let cat = catalog(4).unwrap();
        for j in 0..4 {
            let f = factored_correction(j, cat).unwrap();
            assert!(f.product().max_abs_diff(&cat.correction(j)) <= EXACT_TOL);
        }
        let f1 = cat.factorization(1).unwrap();
        assert_eq!(f1.left, gates::identity());
        assert_eq!(f1.right, real(2, &[0.0, 1.0, -1.0, 0.0]));
        let f0 = cat.factorization(0).unwrap();
        assert_eq!(
            (f0.left.clone(), f0.right.clone()),
            (gates::identity(), gates::identity())
        );
    }

    #[test]
    fn octonion_catalog_has_collective_corrections() {
        let cat = catalog(8).unwrap();
        let missing = (0..8).filter(|&j| cat.factorization(j).is_none()).count();
        assert!(
            missing > 0,
            "some octonion units must need collective corrections"
        );
        for j in 0..8 {
            if let Some(f) = cat.factorization(j) {
                assert!(f.product().max_abs_diff(&cat.correction(j)) <= EXACT_TOL);
            }
        }
    }

    #[test]
    fn padding() {
        assert_eq!(
            pad_to_catalog(&[0.6, 0.0, 0.8]).unwrap(),
            (vec![0.6, 0.0, 0.8, 0.0], 4)
        );
        assert_eq!(pad_to_catalog(&[0.5; 4]).unwrap(), (vec![0.5; 4], 4));
        let six = [0.5, 0.5, 0.5, 0.5, 0.0, 0.0];
        let (p, d) = pad_to_catalog(&six).unwrap();
        assert_eq!(d, 8);
        assert_eq!(p.len(), 8);
        assert!(pad_to_catalog(&[0.1; 9]).is_err());
    }

    #[test]
    fn basis_target_has_four_certain_branches() {
        let p = RealMinProtocol::new(&[1.0, 0.0, 0.0, 0.0], CorrectionStyle::Collective).unwrap();
        let t = run_exhaustive(&p).unwrap();
        assert_eq!(t.rows.len(), 4);
        for r in &t.rows {
            assert_abs_diff_eq!(r.probability, 0.25, epsilon = EXACT_TOL);
            assert_abs_diff_eq!(r.transcript.fidelity, 1.0, epsilon = NORM_TOL);
            assert_abs_diff_eq!(r.transcript.cbits_total, 2.0, epsilon = EXACT_TOL);
        }
    }

    #[test]
    fn three_level_target_uses_two_pairs() {
        let coeffs = [0.48, -0.6, 0.64];
        let p = RealMinProtocol::new(&coeffs, CorrectionStyle::Factored).unwrap();
        assert_eq!(p.pairs(), 2);
        let t = run_exhaustive(&p).unwrap();
        assert_abs_diff_eq!(t.success_probability(), 1.0, epsilon = EXACT_TOL);
        for r in &t.rows {
            assert!(holds_target(&r.transcript.bob_final, &coeffs).unwrap());
        }
    }

    #[test]
    fn eight_level_target_uses_three_pairs() {
        let raw: Vec<f64> = (0..8).map(|i| (i as f64 * 0.9).sin() + 0.1).collect();
        let n = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let coeffs: Vec<f64> = raw.iter().map(|x| x / n).collect();
        let p = RealMinProtocol::new(&coeffs, CorrectionStyle::Collective).unwrap();
        let t = run_exhaustive(&p).unwrap();
        assert_eq!(t.rows.len(), 8);
        for r in &t.rows {
            assert!(r.transcript.success);
            assert_abs_diff_eq!(r.transcript.cbits_total, 3.0, epsilon = EXACT_TOL);
            let f =
                fidelity_global_phase(&r.transcript.bob_final, &padded_target(&coeffs, 3).unwrap())
                    .unwrap();
            assert!(f >= 1.0 - 1e-8);
        }
    }

    #[test]
    fn complex_and_oversized_targets_rejected() {
        let q = QuditSpec::general(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        assert!(RealMinProtocol::from_spec(&q, CorrectionStyle::Collective).is_err());
        assert!(RealMinProtocol::new(&[1.0 / 3.0; 9], CorrectionStyle::Collective).is_err());
    }

    #[test]
    fn cayley_dickson_is_a_composition_algebra() {
        let x: Vec<f64> = (0..8).map(|i| 0.3 * i as f64 - 1.0).collect();
        let y: Vec<f64> = (0..8).map(|i| (i as f64).cos()).collect();
        let nx: f64 = x.iter().map(|v| v * v).sum();
        let ny: f64 = y.iter().map(|v| v * v).sum();
        let xy = cayley_dickson_mul(&x, &y);
        let nxy: f64 = xy.iter().map(|v| v * v).sum();
        assert_abs_diff_eq!(nxy, nx * ny, epsilon = 1e-10);
    }
}
