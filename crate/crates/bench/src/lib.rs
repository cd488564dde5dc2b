//! Fixed inputs shared by the benchmarks.

use qudit_rsp::linalg::{tensor_all, StateVector};
use qudit_rsp::QuditSpec;

/// Deterministic phases `φ_j = 0.37·j²` for an `s`-level equatorial target.
pub fn phases(s: usize) -> Vec<f64> {
    (0..s).map(|j| 0.37 * (j * j) as f64).collect()
}

/// Deterministic unit vector with `s` real entries.
pub fn real_coeffs(s: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..s).map(|j| ((j as f64 + 1.0) * 1.3).sin()).collect();
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    raw.into_iter().map(|x| x / norm).collect()
}

/// Real product state of `qubits` single-qubit factors.
pub fn product_target(qubits: usize) -> QuditSpec {
    let factors: Vec<StateVector> = (0..qubits)
        .map(|q| {
            let t = 0.4 + 0.3 * q as f64;
            StateVector::from_real(&[t.cos(), t.sin()]).unwrap()
        })
        .collect();
    let v = tensor_all(&factors).unwrap();
    QuditSpec::real(v.amplitudes().iter().map(|a| a.re).collect()).unwrap()
}
