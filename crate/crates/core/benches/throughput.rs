use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use kgscatter::cli::{sweep_records, SweepSpec};
use kgscatter::images::{boundary_residual_with, ImageProblem};
use kgscatter::lattice::{build_lattice, init_packet, step, LatticeConfig, PacketSpec};
use kgscatter::{Execution, PhysicalSetup};

const MODES: [(&str, Execution); 2] =
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn lattice_steps(c: &mut Criterion) {
    let setup = PhysicalSetup::new(1.0, 10.0).unwrap();
    let spec = PacketSpec::new(3.0, -80.0, 10.0);
    let mut group = c.benchmark_group("lattice_100_steps");
    for n in [8001usize, 64001] {
        let config = LatticeConfig::new(400.0, n, 0.0);
        let mut base = build_lattice(&config, &setup).unwrap();
        init_packet(&mut base, &spec, &setup, &config).unwrap();
        for (name, mode) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| {
                    let mut state = base.clone();
                    state.set_execution(mode);
                    for _ in 0..100 {
                        step(&mut state, &setup).unwrap();
                    }
                    black_box(state.time)
                })
            });
        }
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let spec = SweepSpec::new(1.0, 50.0, 0.5, 60.0, 20_000).unwrap();
    let mut group = c.benchmark_group("sweep_20000");
    for (name, mode) in MODES {
        group.bench_function(name, |b| b.iter(|| black_box(sweep_records(&spec, mode).unwrap().len())));
    }
    group.finish();
}

fn images(c: &mut Criterion) {
    let problem = ImageProblem::new(1.0, 1.0).unwrap();
    let mut group = c.benchmark_group("boundary_residual_401");
    for (name, mode) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| black_box(boundary_residual_with(&problem, 10.0, 401, mode)))
        });
    }
    group.finish();
}

criterion_group!(benches, lattice_steps, sweep, images);
criterion_main!(benches);
