//! Property tests over random instances: feature-map algebra, decoder
//! invariants, and solver feasibility/monotonicity.

use proptest::prelude::*;

use stol_core::chain_model::{ChainFeatureMap, LinearScorer, TransferScorer};
use stol_core::inference::{brute_force_argmax, decode, hamming_loss, loss_augmented_decode};
use stol_core::qp::{
    dual_objective, kkt_residual, primal_slack, recover_w, solve_dual, solve_dual_traced,
    ConstraintRecord, WorkingSet,
};
use stol_core::trainer::objective;

fn weights_strategy(m: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-3.0..3.0f64, m)
}

fn inputs_strategy(d: usize, t: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(-3.0..3.0f64, d), t)
}

fn labels_strategy(k: usize, t: usize) -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::vec(0..k, t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    // joint features of a concatenation: sum of part features plus one
    // junction transition indicator
    #[test]
    fn features_add_over_concatenation(
        x1 in inputs_strategy(2, 3),
        x2 in inputs_strategy(2, 2),
        y1 in labels_strategy(3, 3),
        y2 in labels_strategy(3, 2),
    ) {
        let map = ChainFeatureMap::new(2, 3);
        let x: Vec<Vec<f64>> = x1.iter().chain(&x2).cloned().collect();
        let y: Vec<usize> = y1.iter().chain(&y2).copied().collect();
        let whole = map.joint_features(&x, &y).unwrap();
        let a = map.joint_features(&x1, &y1).unwrap();
        let b = map.joint_features(&x2, &y2).unwrap();
        let junction = map.transition_index(y1[2], y2[0]);
        for i in 0..map.m() {
            let mut expect = a[i] + b[i];
            if i == junction {
                expect += 1.0;
            }
            prop_assert!((whole[i] - expect).abs() < 1e-10);
        }
    }

    // the delta part of the transfer score is linear in w
    #[test]
    fn transfer_delta_is_linear_in_w(
        theta in weights_strategy(6),
        w in weights_strategy(6),
        x in inputs_strategy(1, 3),
        y in labels_strategy(2, 3),
    ) {
        let map = ChainFeatureMap::new(1, 2);
        let source = LinearScorer::new(theta, map).unwrap();
        let single = TransferScorer::new(source.clone(), w.clone()).unwrap();
        let doubled_w: Vec<f64> = w.iter().map(|v| v * 2.0).collect();
        let doubled = TransferScorer::new(source.clone(), doubled_w).unwrap();
        let base = source.score(&x, &y).unwrap();
        let d1 = single.score(&x, &y).unwrap() - base;
        let d2 = doubled.score(&x, &y).unwrap() - base;
        prop_assert!((d2 - 2.0 * d1).abs() < 1e-12 * (1.0 + d1.abs()));
    }

    // decode agrees exactly with enumeration whenever K^T <= 10^4
    #[test]
    fn decode_matches_brute_force(
        weights in weights_strategy(15),
        x in inputs_strategy(2, 4),
    ) {
        let map = ChainFeatureMap::new(2, 3);
        let dp = decode(&map, &weights, &x).unwrap();
        let (bf, _) = brute_force_argmax(&map, &weights, &x, None).unwrap();
        prop_assert_eq!(dp, bf);
    }

    // the separation value dominates every explicitly checked candidate
    #[test]
    fn separation_value_dominates_candidates(
        theta in weights_strategy(6),
        w in weights_strategy(6),
        x in inputs_strategy(1, 4),
        y_true in labels_strategy(2, 4),
        candidate in labels_strategy(2, 4),
    ) {
        let map = ChainFeatureMap::new(1, 2);
        let ts = TransferScorer::new(LinearScorer::new(theta, map).unwrap(), w).unwrap();
        let (_, value) = loss_augmented_decode(&ts, &x, &y_true).unwrap();
        let augmented = hamming_loss::<f64>(&y_true, &candidate).unwrap()
            + ts.score(&x, &candidate).unwrap();
        prop_assert!(value >= augmented - 1e-9);
        prop_assert!(value >= ts.score(&x, &y_true).unwrap() - 1e-9);
    }

    // positive rescaling never changes the decoded sequence
    #[test]
    fn decode_scale_invariance(
        weights in weights_strategy(15),
        x in inputs_strategy(2, 4),
        scale in 0.01..50.0f64,
    ) {
        let map = ChainFeatureMap::new(2, 3);
        let scaled: Vec<f64> = weights.iter().map(|v| v * scale).collect();
        prop_assert_eq!(
            decode(&map, &weights, &x).unwrap(),
            decode(&map, &scaled, &x).unwrap()
        );
    }

    #[test]
    fn hamming_satisfies_triangle_inequality(
        a in labels_strategy(3, 5),
        b in labels_strategy(3, 5),
        c in labels_strategy(3, 5),
    ) {
        let ab = hamming_loss::<f64>(&a, &b).unwrap();
        let bc = hamming_loss::<f64>(&b, &c).unwrap();
        let ac = hamming_loss::<f64>(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert!((hamming_loss::<f64>(&a, &b).unwrap() - hamming_loss::<f64>(&b, &a).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn objective_is_monotone(
        w in weights_strategy(4),
        xi in 0.0..2.0f64,
        bump in 0.0..1.0f64,
        c in 0.1..100.0f64,
    ) {
        let base = objective(&w, xi, c).unwrap();
        prop_assert!(objective(&w, xi + bump, c).unwrap() >= base);
        let grown: Vec<f64> = w.iter().map(|v| v * 1.5).collect();
        prop_assert!(objective(&grown, xi, c).unwrap() >= base - c * 0.0);
    }
}

fn random_working_set(seed: u64, n: usize, m: usize) -> WorkingSet<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut ws = WorkingSet::new();
    for i in 0..n {
        let dpsi: Vec<f64> = (0..m).map(|_| rng.random_range(-1.5..1.5)).collect();
        let delta_loss: f64 = rng.random_range(0.0..1.0);
        let source_margin: f64 = rng.random_range(-1.0..1.0);
        ws.push(ConstraintRecord::new(vec![vec![i]], dpsi, delta_loss, source_margin).unwrap())
            .unwrap();
    }
    ws
}

#[test]
fn solver_stays_feasible_and_monotone_on_random_sets() {
    for seed in 0..40u64 {
        let n = 1 + (seed as usize % 6);
        let ws = random_working_set(seed, n, 8);
        let h = ws.gram_matrix();
        let b = ws.linear_terms();
        let c = [0.5, 1.0, 10.0, 100.0][seed as usize % 4];
        let (alpha, trace) = solve_dual_traced(&h, &b, c, 1e-9, &vec![0.0; n]).unwrap();
        assert!(kkt_residual(&h, &b, c, &alpha).unwrap() <= 1e-9);
        let mut prev = f64::NEG_INFINITY;
        for step in &trace {
            assert!(step.min_alpha >= 0.0, "negative multiplier mid-run");
            assert!(step.alpha_sum <= c + 1e-9, "budget violated mid-run");
            assert!(
                step.objective >= prev - 1e-9,
                "dual objective decreased mid-run"
            );
            prev = step.objective;
        }
    }
}

#[test]
fn recovered_w_is_invariant_to_record_permutation() {
    for seed in 0..20u64 {
        let n = 2 + (seed as usize % 5);
        let ws = random_working_set(seed + 100, n, 6);
        let c = 10.0;
        let solve_w = |ws: &WorkingSet<f64>| {
            let h = ws.gram_matrix();
            let b = ws.linear_terms();
            let alpha = solve_dual(&h, &b, c, 1e-10).unwrap();
            recover_w(ws, &alpha).unwrap()
        };
        let w_forward = solve_w(&ws);

        let mut reversed = WorkingSet::new();
        for record in ws.records().iter().rev() {
            reversed.push(record.clone()).unwrap();
        }
        let w_reversed = solve_w(&reversed);
        for (a, b) in w_forward.iter().zip(&w_reversed) {
            assert!((a - b).abs() < 1e-6, "w changed under permutation");
        }
    }
}

#[test]
fn strong_duality_holds_on_random_sets() {
    for seed in 0..60u64 {
        let n = 1 + (seed as usize % 6);
        let ws = random_working_set(seed + 500, n, 8);
        let h = ws.gram_matrix();
        let b = ws.linear_terms();
        let c = [1.0, 100.0][seed as usize % 2];
        let alpha = solve_dual(&h, &b, c, 1e-9).unwrap();
        let w = recover_w(&ws, &alpha).unwrap();
        let xi = primal_slack(&ws, &w).unwrap();
        let gap = objective(&w, xi, c).unwrap() - dual_objective(&h, &b, &alpha);
        assert!(
            gap >= -1e-6 && gap <= 1e-5 * (1.0 + c),
            "gap {gap} outside bounds at seed {seed}"
        );
    }
}
