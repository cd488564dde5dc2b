use proptest::prelude::*;
use qudit_rsp::linalg::{apply_on_slots, tensor, ComplexMatrix, StateVector, C64};
use qudit_rsp::realspace::catalog;
use qudit_rsp::separable::{extract_factors, Grouping};
use qudit_rsp::{
    monte_carlo, run_exhaustive, separability_measure, EprChannel, EquatorialProtocol, Protocol,
};
use std::f64::consts::TAU;

fn amplitudes(dim: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
        .prop_filter("non-zero", |v| {
            v.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 1e-3
        })
        .prop_map(|v| v.into_iter().map(|(re, im)| C64::new(re, im)).collect())
}

fn state(dim: usize) -> impl Strategy<Value = StateVector> {
    amplitudes(dim).prop_map(|a| StateVector::normalized(a).unwrap())
}

fn real_unit(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, dim)
        .prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect()
        })
}

/// Random unitary from Gram-Schmidt on random columns.
fn unitary(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(amplitudes(dim), dim).prop_filter_map("rank deficient", move |cols| {
        let mut basis: Vec<Vec<C64>> = Vec::new();
        for mut c in cols {
            for b in &basis {
                let dot: C64 = b.iter().zip(&c).map(|(x, y)| x.conj() * y).sum();
                for (ci, bi) in c.iter_mut().zip(b) {
                    *ci -= dot * bi;
                }
            }
            let n = c.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if n < 1e-6 {
                return None;
            }
            basis.push(c.into_iter().map(|x| x / n).collect());
        }
        ComplexMatrix::from_rows(&basis).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensor_is_associative(a in state(2), b in state(4), c in state(2)) {
        let left = tensor(&tensor(&a, &b), &c);
        let right = tensor(&a, &tensor(&b, &c));
        prop_assert!(left.max_abs_diff(&right) < 1e-14);
    }

    #[test]
    fn local_unitaries_preserve_norm(v in state(8), u in unitary(2), slot in 0usize..3) {
        let w = apply_on_slots(&u, &v, &[slot]).unwrap();
        prop_assert!((w.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alice_cannot_signal(u in unitary(4)) {
        let ch = EprChannel::new(2).unwrap();
        let after = ch.alice_apply(&u).unwrap();
        prop_assert!(after.bob_reduced().max_abs_diff(&ch.bob_reduced()) < 1e-12);
    }

    #[test]
    fn equatorial_invariants(pairs in 1usize..=6, offset in 0usize..64, seed in prop::collection::vec(0.0f64..TAU, 64)) {
        let lo = (1usize << (pairs - 1)) + 1;
        let hi = 1usize << pairs;
        let s = if pairs == 1 { 2 } else { lo + offset % (hi - lo + 1) };
        let mut phases = seed[..s].to_vec();
        phases[0] = 0.0;
        let p = EquatorialProtocol::new(&phases, pairs).unwrap();
        let t = run_exhaustive(&p).unwrap();
        prop_assert!((t.total_probability() - 1.0).abs() < 1e-12);
        prop_assert!((t.success_probability() - s as f64 / hi as f64).abs() < 1e-12);
        for r in &t.rows {
            prop_assert_eq!(r.transcript.success, r.outcome < s);
            if r.transcript.success {
                prop_assert!(r.transcript.fidelity >= 1.0 - 1e-8);
            }
        }
    }

    #[test]
    fn catalog_images_are_orthonormal(psi4 in real_unit(4), psi8 in real_unit(8), psi2 in real_unit(2)) {
        for psi in [psi2, psi4, psi8] {
            let imgs = catalog(psi.len()).unwrap().images(&psi).unwrap();
            for (i, a) in imgs.iter().enumerate() {
                for (j, b) in imgs.iter().enumerate() {
                    let g: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((g - expect).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn separable_round_trip(a in state(2), b in state(4), c in state(8)) {
        let v = tensor(&tensor(&a, &b), &c);
        let g = Grouping::from_sizes(&[1, 2, 3]).unwrap();
        prop_assert!(separability_measure(&v, &g).unwrap() < 1e-10);
        let f = extract_factors(&v, &g).unwrap();
        let back = tensor(&tensor(&f[0], &f[1]), &f[2]);
        prop_assert!(back.max_abs_diff(&v) < 1e-10);
    }
}

#[test]
fn sampled_frequency_tracks_exact_probability() {
    let phases = [0.0, 1.1, 2.3, 0.4, 5.0];
    let p = EquatorialProtocol::new(&phases, 3).unwrap();
    let exact = run_exhaustive(&p).unwrap().success_probability();
    let n = 20_000u64;
    let mc = monte_carlo(&p, 11, n).unwrap();
    let se = (exact * (1.0 - exact) / n as f64).sqrt();
    assert!((mc.success_frequency - exact).abs() <= 5.0 * se);
    assert_eq!(mc.outcome_counts.iter().sum::<u64>(), n);
    assert_eq!(p.channel().side(), mc.outcome_counts.len());
    assert_eq!(monte_carlo(&p, 11, n).unwrap(), mc);
}
