use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use qudit_rsp::linalg::{ComplexMatrix, StateVector, C64};
use qudit_rsp::separable::{Grouping, GroupingPolicy, UsCatalog};
use qudit_rsp::{
    monte_carlo, run_exhaustive, separability_measure, CorrectionStyle, EprChannel,
    EquatorialProtocol, RealMinProtocol, SeparableProtocol,
};
use qudit_rsp_bench::{phases, product_target, real_coeffs};

fn channel_apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("alice_apply");
    for pairs in [2usize, 4, 6] {
        let ch = EprChannel::new(pairs).unwrap();
        let side = 1 << pairs;
        let p = EquatorialProtocol::new(&phases(side), pairs).unwrap();
        let u: &ComplexMatrix = p.alice_operator();
        group.bench_with_input(BenchmarkId::from_parameter(pairs), &side, |b, _| {
            b.iter(|| ch.alice_apply(black_box(u)).unwrap())
        });
    }
    group.finish();
}

fn exhaustive(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_exhaustive");
    for s in [3usize, 11, 40] {
        let pairs = (usize::BITS - (s - 1).leading_zeros()) as usize;
        let p = EquatorialProtocol::new(&phases(s), pairs).unwrap();
        group.bench_with_input(BenchmarkId::new("equatorial", s), &s, |b, _| {
            b.iter(|| run_exhaustive(black_box(&p)).unwrap())
        });
    }
    for style in [CorrectionStyle::Collective, CorrectionStyle::Factored] {
        let p = RealMinProtocol::new(&real_coeffs(4), style).unwrap();
        group.bench_function(BenchmarkId::new("real-min-4", format!("{style:?}")), |b| {
            b.iter(|| run_exhaustive(black_box(&p)).unwrap())
        });
    }
    let p = RealMinProtocol::new(&real_coeffs(8), CorrectionStyle::Collective).unwrap();
    group.bench_function("real-min-8", |b| {
        b.iter(|| run_exhaustive(black_box(&p)).unwrap())
    });
    let p = SeparableProtocol::new(
        &product_target(6),
        6,
        GroupingPolicy::Case1,
        &UsCatalog::identity(),
    )
    .unwrap();
    group.bench_function("separable-case1-L6", |b| {
        b.iter(|| run_exhaustive(black_box(&p)).unwrap())
    });
    group.finish();
}

fn measure(c: &mut Criterion) {
    let mut group = c.benchmark_group("separability_measure");
    for qubits in [4usize, 6, 8] {
        let amps: Vec<C64> = (0..1usize << qubits)
            .map(|i| C64::new((i as f64 * 0.7).cos(), 0.0))
            .collect();
        let v = StateVector::normalized(amps).unwrap();
        let g = Grouping::singletons(qubits);
        group.bench_with_input(BenchmarkId::from_parameter(qubits), &qubits, |b, _| {
            b.iter(|| separability_measure(black_box(&v), &g).unwrap())
        });
    }
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let p = EquatorialProtocol::new(&phases(11), 4).unwrap();
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(20);
    group.bench_function("equatorial-11-100k", |b| {
        b.iter(|| monte_carlo(&p, black_box(7), 100_000).unwrap())
    });
    group.finish();
}

criterion_group!(benches, channel_apply, exhaustive, measure, sampling);
criterion_main!(benches);
