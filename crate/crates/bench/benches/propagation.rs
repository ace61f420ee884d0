use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use quepp_core::generate::{all_x, generate_trotter};
use quepp_core::{
    build_ensemble, enumerate_paths, merged_bfs_cpt, Amount, CliffordGate, ExperimentSpec, Family,
    MirrorParams, PauliString, SamplerConfig, TruncationPolicy,
};

fn mirror(n: usize, layers: usize) -> ExperimentSpec {
    ExperimentSpec {
        family: Family::Mirror1d,
        num_qubits: n,
        layers,
        theta: std::f64::consts::PI / 5.0,
        seed: 5,
        observable: "Z0 Z1".into(),
        sweep: None,
        mirror: MirrorParams {
            rotations: Amount::Density(0.1),
            ..Default::default()
        },
    }
}

fn conjugation(c: &mut Criterion) {
    let p: PauliString = "XYZIXYZIXYZIXYZIXYZIXYZIXYZIXYZIXYZIXYZIXYZIXYZIXYZIXYZIXYZIXYZI"
        .parse()
        .unwrap();
    let gates: Vec<CliffordGate> = (0..63)
        .flat_map(|q| {
            [
                CliffordGate::H(q),
                CliffordGate::CX(q, q + 1),
                CliffordGate::S(q + 1),
            ]
        })
        .collect();
    c.bench_function("conjugate_189_gates_64q", |b| {
        b.iter_batched(
            || p.clone(),
            |mut p| {
                for g in &gates {
                    p.conjugate_in_place(g);
                }
                black_box(p)
            },
            BatchSize::SmallInput,
        )
    });
}

fn enumeration(c: &mut Criterion) {
    let spec = mirror(10, 8);
    let (circuit, obs) = (spec.generate().unwrap(), spec.observable().unwrap());
    c.bench_function("dfs_order3_mirror10x8", |b| {
        b.iter(|| {
            enumerate_paths(&circuit, &obs, TruncationPolicy::Order { k_t: 3 }, false)
                .unwrap()
                .count()
        })
    });
    c.bench_function("merged_bfs_mirror10x8", |b| {
        b.iter(|| {
            merged_bfs_cpt(&circuit, &obs, 1 << 14, 1e-6)
                .unwrap()
                .estimate
        })
    });
}

fn sampling(c: &mut Criterion) {
    let circuit = generate_trotter(10, 4, 0.4).unwrap();
    let obs = all_x(10);
    c.bench_function("sample_20_paths_trotter10x4", |b| {
        b.iter(|| {
            build_ensemble(&circuit, &obs, &SamplerConfig::new(20, 1_000_000, 9))
                .unwrap()
                .paths
                .len()
        })
    });
}

criterion_group!(benches, conjugation, enumeration, sampling);
criterion_main!(benches);
