use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use madc::mra::{build_mra_with, validate_mra_with};
use madc::topology::derive_topology;
use madc::{catalog_design, simulate, Exec, SimConfig};

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn mra(c: &mut Criterion) {
    let design = catalog_design("sts15").unwrap();
    let mut group = c.benchmark_group("mra_sts15");
    for (label, exec) in MODES {
        group.bench_with_input(BenchmarkId::new("build", label), &exec, |b, &exec| {
            b.iter(|| build_mra_with(black_box(&design), exec).unwrap())
        });
        let built = build_mra_with(&design, Exec::Sequential).unwrap();
        group.bench_with_input(BenchmarkId::new("validate", label), &exec, |b, &exec| {
            b.iter(|| validate_mra_with(black_box(built.grid()), exec))
        });
    }
    group.finish();
}

fn end_to_end(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate");
    group.sample_size(20);
    for (name, eta1) in [("fano", 1), ("sts15", 2), ("s_2_4_13", 1)] {
        let design = catalog_design(name).unwrap();
        let topo = derive_topology(&design, eta1, 1).unwrap();
        let base = SimConfig::for_topology(&topo, 48, 1);
        for (label, exec) in MODES {
            let config = base.with_exec(exec);
            group.bench_with_input(
                BenchmarkId::new(format!("{name}_eta1_{eta1}"), label),
                &config,
                |b, config| b.iter(|| simulate(black_box(&design), eta1, 1, config).unwrap()),
            );
        }
    }
    group.finish();
}

criterion_group!(benches, mra, end_to_end);
criterion_main!(benches);
