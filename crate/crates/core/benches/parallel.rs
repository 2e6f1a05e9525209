use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mrbv::energy::Example1;
use mrbv::mfunctional::property_suite;
use mrbv::potentials::Potentials;
use mrbv::regimes::{segment_curve, SegmentOptions};
use mrbv::reparam::{arclength_reparam, normalize};
use mrbv::solver::{integrate, RateParams, SolverConfig};
use mrbv::{Dims, Exec, State};

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn bench_property_suite(c: &mut Criterion) {
    let pot = Potentials::standard(2, 2);
    let mut g = c.benchmark_group("property_suite");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::new(name, 2000), &exec, |b, &exec| {
            b.iter(|| property_suite(&pot, Dims::new(2, 2), 2.0, 2000, 7, exec).unwrap())
        });
    }
    g.finish();
}

fn bench_segmentation(c: &mut Criterion) {
    let pot = Potentials::standard(1, 1);
    let params = RateParams::new(1e-3, 2.0).unwrap();
    let tr = integrate(&Example1, &pot, &params, &SolverConfig::default(), 0.0, 1.6, &State::scalar(2.0, -1.5)).unwrap();
    let curve = normalize(&arclength_reparam(&tr).unwrap()).unwrap().resample(4096).unwrap();
    let opts = SegmentOptions::default();
    let mut g = c.benchmark_group("segment_curve");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_with_input(BenchmarkId::new(name, curve.len()), &exec, |b, &exec| {
            b.iter(|| segment_curve(&curve, &Example1, &pot, 2.0, &opts, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_property_suite, bench_segmentation);
criterion_main!(benches);
