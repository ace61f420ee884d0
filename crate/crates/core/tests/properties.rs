mod common;

use std::collections::BTreeMap;

use common::*;
use proptest::prelude::*;
use quepp_core::{
    classical_cpt_estimate, enumerate_paths, enumerate_paths_parallel, eta_balance, eta_median,
    eta_weighted_average, ideal_expectation, merged_bfs_cpt, run_quepp, Amount, Circuit,
    EnsembleRecord, EnsembleSource, EtaMethod, ExecutionPlan, ExperimentSpec, Family, MirrorParams,
    NoisyEstimate, PathId, PauliOp, PauliPath, PauliString, PipelineConfig, QueppError,
    SamplerConfig, SimulatorBackend, TruncationPolicy,
};

fn circuit_strategy(
    max_qubits: usize,
    max_ops: usize,
    max_rotations: usize,
) -> impl Strategy<Value = (Circuit, PauliString)> {
    (
        1..=max_qubits,
        input_kind(),
        prop::collection::vec(raw_op(), 0..=max_ops),
        prop::collection::vec(0u8..4, 4),
        any::<bool>(),
    )
        .prop_map(move |(n, input, raw, code, neg)| {
            (
                build_circuit(n, input, &raw, max_rotations),
                random_observable(n, &code, neg),
            )
        })
}

fn full_paths(c: &Circuit, o: &PauliString, keep_zero: bool) -> Vec<PauliPath> {
    enumerate_paths(c, o, TruncationPolicy::Full, keep_zero)
        .unwrap()
        .collect()
}

fn by_id(paths: &[PauliPath]) -> BTreeMap<PathId, f64> {
    paths
        .iter()
        .map(|p| (p.path_id.clone(), p.contribution()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn full_expansion_equals_dense_expectation((c, o) in circuit_strategy(4, 14, 6)) {
        let dense = dense_expectation(&c, &o);
        prop_assert!((classical_cpt_estimate(&full_paths(&c, &o, false)) - dense).abs() < TOL);
        prop_assert!((classical_cpt_estimate(&full_paths(&c, &o, true)) - dense).abs() < TOL);
        prop_assert!((ideal_expectation(&c, &o) - dense).abs() < TOL);
    }

    #[test]
    fn full_expansion_has_unit_power((c, o) in circuit_strategy(3, 12, 6)) {
        let all = full_paths(&c, &o, true);
        let p: f64 = all.iter().map(|p| p.coefficient().powi(2)).sum();
        prop_assert!((p - 1.0).abs() < 1e-10);
    }

    #[test]
    fn order_truncation_is_a_filter_of_the_full_set((c, o) in circuit_strategy(4, 14, 6), k in 0usize..5) {
        let full = by_id(&full_paths(&c, &o, true));
        let kept = by_id(&enumerate_paths(&c, &o, TruncationPolicy::Order { k_t: k }, true).unwrap().collect::<Vec<_>>());
        let expected: BTreeMap<PathId, f64> = full.into_iter().filter(|(id, _)| id.0.len() <= k).collect();
        prop_assert_eq!(kept, expected);
    }

    #[test]
    fn coefficient_truncation_keeps_exactly_the_large_paths((c, o) in circuit_strategy(4, 14, 6), eps in 0.01f64..0.9) {
        let full = full_paths(&c, &o, true);
        let kept = by_id(&enumerate_paths(&c, &o, TruncationPolicy::Coefficient { epsilon: eps }, true).unwrap().collect::<Vec<_>>());
        for p in &full {
            let g = p.coefficient().abs();
            if g >= eps * (1.0 + 1e-9) {
                prop_assert!(kept.contains_key(&p.path_id));
            } else if g < eps * (1.0 - 1e-9) {
                prop_assert!(!kept.contains_key(&p.path_id));
            }
        }
    }

    #[test]
    fn parallel_enumeration_matches_serial((c, o) in circuit_strategy(4, 14, 7), k in 0usize..6, workers in 2usize..5) {
        let policy = TruncationPolicy::Order { k_t: k };
        let serial: Vec<PauliPath> = enumerate_paths(&c, &o, policy, false).unwrap().collect();
        let (parallel, _) = enumerate_paths_parallel(&c, &o, policy, false, workers).unwrap();
        prop_assert_eq!(serial, parallel);
    }

    #[test]
    fn uncapped_merged_propagation_is_exact((c, o) in circuit_strategy(4, 14, 6)) {
        let r = merged_bfs_cpt(&c, &o, usize::MAX, 0.0).unwrap();
        prop_assert!(!r.capped);
        prop_assert!((r.estimate - dense_expectation(&c, &o)).abs() < TOL);
    }

    #[test]
    fn normalization_preserves_unitary_up_to_phase((c, _) in circuit_strategy(3, 10, 5)) {
        let n = c.normalize_rotations();
        for r in n.rotations() {
            prop_assert!(r.angle.abs() <= std::f64::consts::FRAC_PI_4 + 1e-12);
        }
        let dim = (1usize << c.num_qubits()) as f64;
        let overlap = unitary(&c).dagger().mul(&unitary(&n)).trace().norm();
        prop_assert!((overlap - dim).abs() < 1e-9);
    }

    #[test]
    fn text_round_trip((c, _) in circuit_strategy(5, 16, 8)) {
        let back = Circuit::parse(&c.to_text()).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn mirror_circuits_return_the_input_expectation(
        n in 2usize..7,
        layers in 0usize..5,
        seed in any::<u64>(),
        theta in -3.0f64..3.0,
        density in 0.0f64..1.0,
        code in prop::collection::vec(any::<bool>(), 7),
        one_d in any::<bool>(),
    ) {
        let label: String = (0..n).map(|q| if code[q] { 'Z' } else { 'I' }).collect();
        let spec = ExperimentSpec {
            family: if one_d { Family::Mirror1d } else { Family::Mirror2d },
            num_qubits: n,
            layers,
            theta,
            seed,
            observable: label,
            sweep: None,
            mirror: MirrorParams { rotations: Amount::Density(density), ..Default::default() },
        };
        let (c, o) = (spec.generate().unwrap(), spec.observable().unwrap());
        prop_assert!((ideal_expectation(&c, &o) - 1.0).abs() < TOL);
    }

    #[test]
    fn noiseless_exact_runs_reproduce_the_ideal_value(
        (c, o) in circuit_strategy(4, 14, 6),
        mode in 0u8..3,
        k in 0usize..4,
        eps in 0.05f64..0.6,
        seed in any::<u64>(),
    ) {
        let source = match mode {
            0 => EnsembleSource::order(k),
            1 => EnsembleSource::Truncation { policy: TruncationPolicy::Coefficient { epsilon: eps } },
            _ => EnsembleSource::Sampler { config: SamplerConfig::new(8, 400, seed) },
        };
        let cfg = PipelineConfig {
            source,
            eta_method: EtaMethod::Median,
            plan: ExecutionPlan { infinite_shots: true, ..ExecutionPlan::new(1, 1, 0) },
            workers: 1,
            allow_partial: false,
        };
        match run_quepp(&c, &o, &SimulatorBackend::noiseless(), &cfg) {
            Ok(out) => prop_assert!((out.result.boosted - dense_expectation(&c, &o)).abs() < TOL),
            Err(quepp_core::PipelineError::Quepp(QueppError::Empty)) => {}
            Err(quepp_core::PipelineError::Sampler(_)) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn estimators_agree_on_uniform_rescaling((c, o) in circuit_strategy(3, 12, 5), eta in 0.05f64..1.0) {
        let records: Vec<EnsembleRecord> = full_paths(&c, &o, false)
            .iter()
            .map(|p| EnsembleRecord::new(p, NoisyEstimate::exact(eta * p.ideal_expectation as f64)).unwrap())
            .collect();
        prop_assume!(!records.is_empty());
        let m = eta_median(&records).unwrap();
        prop_assert!((m - eta).abs() < 1e-12);
        let den: f64 = records.iter().map(|r| r.coefficient() * r.ideal as f64).sum();
        if den.abs() > 1e-3 {
            prop_assert!((eta_weighted_average(&records).unwrap() - eta).abs() < 1e-12);
        }
        prop_assert!((eta_balance(&records).unwrap() - eta).abs() < 1e-12);
    }
}

#[test]
fn single_qubit_worked_example() {
    // U = RX(θ)·H, O = Z: ⟨Z⟩ = cos θ ⟨X⟩ − sin θ ⟨Y⟩ on the input.
    let theta = 0.37;
    let mut c = Circuit::new(1);
    c.push_clifford(quepp_core::CliffordGate::H(0)).unwrap();
    c.push_rx(0, theta).unwrap();
    let o = PauliString::from_ops(&[PauliOp::Z], false);
    let paths = full_paths(&c, &o, true);
    assert_eq!(paths.len(), 2);
    let frame = |p: &PauliPath| {
        (
            p.frame.ops()[0],
            if p.frame.is_negative() { -1.0 } else { 1.0 },
        )
    };
    let (f0, s0) = frame(&paths[0]);
    let (f1, s1) = frame(&paths[1]);
    assert_eq!(f0, PauliOp::X);
    assert!((s0 * paths[0].coefficient() - theta.cos()).abs() < 1e-15);
    assert_eq!(f1, PauliOp::Y);
    assert!((s1 * paths[1].coefficient() + theta.sin()).abs() < 1e-15);
}
