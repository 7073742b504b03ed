use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use finsler_dp::energy::{energy_j, grad_j, Nonlinearity, ProblemSpec};
use finsler_dp::fespace::{build_mesh, FeFunction};
use finsler_dp::minkowski::{uniformity_constant_with, MinkowskiNorm, NormSpec};
use finsler_dp::musielak::{Mode, WeightField};
use finsler_dp::par::Execution;

fn spec(exec: Execution) -> ProblemSpec {
    let mesh = Arc::new(build_mesh(3, &[1.0; 3], &[8; 3]).unwrap().with_execution(exec));
    let norm: Arc<dyn MinkowskiNorm> = Arc::new(NormSpec::Euclidean.build(3).unwrap());
    let mu = WeightField::from_fn(mesh, |x| 0.5 * x[0]).unwrap();
    let g = Nonlinearity::new(1.0, 1.0, 3.0, 1.5);
    ProblemSpec::new(2.0, 2.5, 0.5, 1.0, 0.9, mu, g, norm, 4, Mode::Strict).unwrap().0
}

fn bump(spec: &ProblemSpec) -> FeFunction {
    FeFunction::interpolate(spec.mesh().clone(), |x| {
        0.1 * x.iter().map(|t| (std::f64::consts::PI * t).sin()).product::<f64>()
    })
}

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assembly");
    for (label, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        let s = spec(exec);
        let u = bump(&s);
        group.bench_with_input(BenchmarkId::new("energy", label), &u, |b, u| {
            b.iter(|| energy_j(u, &s, 1e-6).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("gradient", label), &u, |b, u| {
            b.iter(|| grad_j(u, &s, 1e-6).unwrap())
        });
    }
    group.finish();
}

fn uniformity(c: &mut Criterion) {
    let norm = NormSpec::Randers { a: vec![2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 1.5], b: vec![0.4, -0.2, 0.3] }
        .build(3)
        .unwrap();
    let mut group = c.benchmark_group("uniformity");
    group.sample_size(10);
    for (label, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_function(label, |b| b.iter(|| uniformity_constant_with(&norm, 0.1, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, assembly, uniformity);
criterion_main!(benches);
