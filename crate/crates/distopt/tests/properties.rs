//! Randomized invariant checks across the library surface.

mod common;

use nalgebra::DVector;
use proptest::prelude::*;

use distopt::fgm::{alpha_step, initial_alpha};
use distopt::graph::{
    apply_block_laplacian, build_graph, consensus_residual, laplacian, spectral_summary, GraphKind,
};
use distopt::problems::{make_entropy, make_quadratic, make_ridge, regularize};
use distopt::simnet::NetworkSim;

fn graph_kind() -> impl Strategy<Value = GraphKind> {
    prop_oneof![
        Just(GraphKind::Cycle),
        Just(GraphKind::Path),
        Just(GraphKind::Star),
        Just(GraphKind::Complete),
    ]
}

proptest! {
    #[test]
    fn laplacian_rows_sum_to_zero(kind in graph_kind(), m in 2usize..10) {
        let w = laplacian(&build_graph(kind, m, None, 0).unwrap());
        let ones = DVector::from_element(m, 1.0);
        prop_assert!((w.matrix() * ones).norm() < 1e-12);
    }

    #[test]
    fn laplacian_psd_and_connected_spectrum(kind in graph_kind(), m in 2usize..10) {
        let w = laplacian(&build_graph(kind, m, None, 0).unwrap());
        let s = spectral_summary(&w).unwrap();
        prop_assert!(s.lambda_min_plus > 0.0);
        prop_assert!(s.lambda_max >= s.lambda_min_plus);
        prop_assert!(s.chi >= 1.0 - 1e-12);
    }

    #[test]
    fn consensus_residual_vanishes_only_on_consensus(
        kind in graph_kind(),
        m in 2usize..7,
        base in proptest::collection::vec(-5.0f64..5.0, 2),
        bump in 0.1f64..3.0,
        node in 0usize..7,
    ) {
        let t = build_graph(kind, m, None, 0).unwrap();
        let w = laplacian(&t);
        let n = base.len();
        let mut x = DVector::zeros(m * n);
        for i in 0..m {
            for d in 0..n {
                x[i * n + d] = base[d];
            }
        }
        // The residual is the square root of a quadratic form, so roundoff
        // in the form shows up at its square root scale.
        prop_assert!(consensus_residual(&x, &w).unwrap() < 1e-6);
        x[(node % m) * n] += bump;
        // A bump of at least 0.1 on a node with at least one neighbor gives
        // a residual of at least 0.1.
        prop_assert!(consensus_residual(&x, &w).unwrap() > 5e-2);
    }

    #[test]
    fn alpha_recurrence_invariants(q in 0.0f64..=1.0, steps in 1usize..100) {
        let mut a = initial_alpha(q).unwrap();
        prop_assert!(a > 0.0 && a <= 1.0);
        for _ in 0..steps {
            let (next, beta) = alpha_step(a, q);
            // the defining quadratic holds at the root
            let res = next * next - (1.0 - next) * a * a - q * next;
            prop_assert!(res.abs() < 1e-12);
            prop_assert!(next > 0.0 && next <= 1.0);
            prop_assert!(beta >= 0.0 && beta < 1.0);
            a = next;
        }
    }

    #[test]
    fn quadratic_conjugate_first_order(
        scale in 0.1f64..10.0,
        center in proptest::collection::vec(-3.0f64..3.0, 1..4),
        zv in proptest::collection::vec(-3.0f64..3.0, 1..4),
    ) {
        let n = center.len().min(zv.len());
        let agent = make_quadratic(DVector::from_vec(center[..n].to_vec()), scale).unwrap();
        let z = DVector::from_vec(zv[..n].to_vec());
        let x = agent.conjugate_argmax(&z).unwrap();
        prop_assert!((agent.gradient(&x) - &z).norm() < 1e-9);
    }

    #[test]
    fn ridge_conjugate_first_order(
        hv in proptest::collection::vec(-2.0f64..2.0, 6),
        bv in proptest::collection::vec(-2.0f64..2.0, 3),
        zv in proptest::collection::vec(-2.0f64..2.0, 2),
        c in 0.01f64..2.0,
    ) {
        let h = nalgebra::DMatrix::from_vec(3, 2, hv);
        let agent = make_ridge(h, DVector::from_vec(bv), 2, 3, c).unwrap();
        let z = DVector::from_vec(zv);
        let x = agent.conjugate_argmax(&z).unwrap();
        prop_assert!((agent.gradient(&x) - &z).norm() < 1e-7);
    }

    #[test]
    fn entropy_conjugate_stays_in_simplex(
        qlogits in proptest::collection::vec(-2.0f64..2.0, 2..6),
        zv in proptest::collection::vec(-20.0f64..20.0, 2..6),
    ) {
        let n = qlogits.len().min(zv.len());
        let mut q = DVector::from_vec(qlogits[..n].to_vec());
        q.apply(|v| *v = v.exp());
        let s: f64 = q.sum();
        q /= s;
        let agent = make_entropy(q).unwrap();
        let x = agent.conjugate_argmax(&DVector::from_vec(zv[..n].to_vec())).unwrap();
        prop_assert!(x.iter().all(|&v| v >= 0.0));
        prop_assert!((x.sum() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn regularized_conjugate_first_order(
        scale in 0.1f64..5.0,
        c in 0.01f64..2.0,
        z0 in -2.0f64..2.0,
        x0 in -2.0f64..2.0,
    ) {
        let base = make_quadratic(DVector::from_vec(vec![0.5]), scale).unwrap();
        let reg = regularize(base, c, DVector::from_vec(vec![x0])).unwrap();
        let z = DVector::from_vec(vec![z0]);
        let x = reg.conjugate_argmax(&z).unwrap();
        prop_assert!((reg.gradient(&x) - &z).norm() < 1e-9);
    }

    #[test]
    fn exchange_delivers_exactly_neighbors(
        kind in graph_kind(),
        m in 2usize..8,
        vals in proptest::collection::vec(-1.0f64..1.0, 8),
    ) {
        let t = build_graph(kind, m, None, 0).unwrap();
        let payloads: Vec<DVector<f64>> =
            (0..m).map(|i| DVector::from_vec(vec![vals[i]])).collect();
        let mut sim = NetworkSim::new(t.clone());
        let inbox = sim.exchange(&payloads).unwrap();
        for i in 0..m {
            let mut senders: Vec<usize> = inbox[i].keys().copied().collect();
            senders.sort_unstable();
            let mut expect = t.neighbors(i).to_vec();
            expect.sort_unstable();
            prop_assert_eq!(senders, expect);
        }
        prop_assert_eq!(sim.round_count(), 1);
    }

    #[test]
    fn weighted_sums_equal_block_laplacian(
        kind in graph_kind(),
        m in 2usize..7,
        vals in proptest::collection::vec(-2.0f64..2.0, 14),
    ) {
        let t = build_graph(kind, m, None, 0).unwrap();
        let w = laplacian(&t);
        let n = 2;
        let payloads: Vec<DVector<f64>> = (0..m)
            .map(|i| DVector::from_vec(vec![vals[2 * i], vals[2 * i + 1]]))
            .collect();
        let mut sim = NetworkSim::new(t);
        let inbox = sim.exchange(&payloads).unwrap();
        let mut stacked = DVector::zeros(m * n);
        for i in 0..m {
            let s = sim.weighted_neighbor_sum(i, &payloads[i], &inbox[i]).unwrap();
            stacked.rows_mut(i * n, n).copy_from(&s);
        }
        let mut flat = DVector::zeros(m * n);
        for i in 0..m {
            flat.rows_mut(i * n, n).copy_from(&payloads[i]);
        }
        let direct = apply_block_laplacian(&flat, &w).unwrap();
        prop_assert!((stacked - direct).norm() < 1e-12);
        prop_assert_eq!(sim.violation_count(), 0);
    }
}
