//! Property tests over small random instances.

use mts_core::benchmarks::{brute_force_oracle, dyn_, dyn_limited, dyn_rho, offline_opt, BruteVariant};
use mts_core::instances::mts_to_lgt;
use mts_core::unfair::{
    odd_exponent_distribution, odd_exponent_for, share_update, unfair_opt, OddExponent, OddExponentState,
    ShareState, UnfairAlgorithm, UnfairUniformInstance, WorkFunctionState,
};
use mts_core::{
    cap_cost_table, cap_predictor_costs, normalize_costs, trajectory_cost, CostVector, MetricSpace, MtsInstance,
    PredictorTrace,
};
use proptest::prelude::*;

/// A line instance with `n` points, `T` tasks and `ell` predictors.
#[derive(Debug, Clone)]
struct Case {
    inst: MtsInstance,
    traces: Vec<PredictorTrace>,
}

fn arb_case(max_n: usize, max_t: usize, max_ell: usize) -> impl Strategy<Value = Case> {
    (2..=max_n, 1..=max_t, 1..=max_ell).prop_flat_map(|(n, t, ell)| {
        (
            prop::collection::vec(0.0..10.0f64, n),
            0..n,
            prop::collection::vec(prop::collection::vec(0.0..5.0f64, n), t),
            prop::collection::vec(prop::collection::vec(0..n, t), ell),
        )
            .prop_map(|(mut pos, s0, costs, traces)| {
                pos.sort_by(f64::total_cmp);
                // Keep points distinct.
                for i in 1..pos.len() {
                    if pos[i] - pos[i - 1] < 1e-3 {
                        pos[i] = pos[i - 1] + 1e-3;
                    }
                }
                let metric = MetricSpace::line(&pos).unwrap();
                let costs = costs.into_iter().map(|c| CostVector::new(c).unwrap()).collect();
                Case {
                    inst: MtsInstance::new(metric, s0, costs).unwrap(),
                    traces: traces.into_iter().map(PredictorTrace::new).collect(),
                }
            })
    })
}

fn all_sequences(n: usize, t: usize) -> Vec<Vec<usize>> {
    (0..n.pow(t as u32))
        .map(|mut code| {
            (0..t)
                .map(|_| {
                    let x = code % n;
                    code /= n;
                    x
                })
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn changing_one_step_changes_cost_locally(case in arb_case(4, 6, 1), t_pick in 0usize..6, x in 0usize..4, y in 0usize..4) {
        let inst = &case.inst;
        let n = inst.num_states();
        let t = t_pick % inst.horizon();
        let (x, y) = (x % n, y % n);
        let base = &case.traces[0].states;
        let mut a = base.clone();
        let mut b = base.clone();
        a[t] = x;
        b[t] = y;
        let m = inst.metric();
        let prev = if t == 0 { inst.initial_state() } else { base[t - 1] };
        let around = |z: usize| {
            let next = if t + 1 < base.len() { m.d(z, base[t + 1]) } else { 0.0 };
            m.d(prev, z) + inst.cost(t, z) + next
        };
        let diff = trajectory_cost(inst, &a).unwrap().total - trajectory_cost(inst, &b).unwrap().total;
        prop_assert!((diff - (around(x) - around(y))).abs() < 1e-9);
    }

    #[test]
    fn normalizing_shifts_every_sequence_equally(case in arb_case(4, 4, 1)) {
        let (norm, offsets) = normalize_costs(&case.inst);
        let shift: f64 = offsets.iter().sum();
        let mut best = (f64::INFINITY, Vec::new());
        let mut best_norm = (f64::INFINITY, Vec::new());
        for seq in all_sequences(case.inst.num_states(), case.inst.horizon()) {
            let before = trajectory_cost(&case.inst, &seq).unwrap().total;
            let after = trajectory_cost(&norm, &seq).unwrap().total;
            prop_assert!((before - after - shift).abs() < 1e-9);
            if before < best.0 - 1e-12 {
                best = (before, seq.clone());
            }
            if after < best_norm.0 - 1e-12 {
                best_norm = (after, seq);
            }
        }
        prop_assert!((trajectory_cost(&case.inst, &best_norm.1).unwrap().total - best.0).abs() < 1e-9);
    }

    #[test]
    fn capping_is_idempotent(case in arb_case(4, 6, 3)) {
        let once = cap_predictor_costs(&case.inst, &case.traces).unwrap();
        let twice = cap_cost_table(&once.table, once.cap);
        prop_assert_eq!(&twice.table, &once.table);
        prop_assert_eq!(twice.num_capped(), 0);
        prop_assert!(once.table.iter().flatten().all(|&f| f <= 2.0 * case.inst.diameter()));
    }

    #[test]
    fn benchmarks_are_ordered(case in arb_case(4, 6, 3)) {
        let (opt, _) = offline_opt(&case.inst).unwrap();
        let (dyn_value, _) = dyn_(&case.inst, &case.traces).unwrap();
        prop_assert!(opt <= dyn_value + 1e-9);
        let t_len = case.inst.horizon();
        let mut prev = f64::INFINITY;
        for m in 0..t_len {
            let (v, s) = dyn_limited(&case.inst, &case.traces, m).unwrap();
            prop_assert!(s.switches <= m);
            prop_assert!(v <= prev + 1e-9);
            prop_assert!(dyn_value <= v + 1e-9);
            for rho in [0.0, 1.0, 5.0] {
                let (r, _) = dyn_rho(&case.inst, &case.traces, rho).unwrap();
                prop_assert!(r <= v + m as f64 * rho + 1e-9);
            }
            prev = v;
        }
        prop_assert!((prev - dyn_value).abs() < 1e-9);
        let mut last = f64::NEG_INFINITY;
        for rho in [0.0, 0.5, 1.0, 5.0] {
            let (r, _) = dyn_rho(&case.inst, &case.traces, rho).unwrap();
            prop_assert!(r >= last - 1e-9);
            last = r;
        }
    }

    #[test]
    fn dynamic_programs_match_enumeration(case in arb_case(3, 5, 3)) {
        let (dyn_value, _) = dyn_(&case.inst, &case.traces).unwrap();
        prop_assert!((dyn_value - brute_force_oracle(&case.inst, &case.traces, BruteVariant::Dyn).unwrap()).abs() < 1e-9);
        let (opt, _) = offline_opt(&case.inst).unwrap();
        prop_assert!((opt - brute_force_oracle(&case.inst, &case.traces, BruteVariant::Opt).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn shortest_layered_path_is_dyn(case in arb_case(4, 6, 3)) {
        let g = mts_to_lgt(&case.inst, &case.traces).unwrap();
        let (dyn_value, _) = dyn_(&case.inst, &case.traces).unwrap();
        prop_assert!((g.shortest_path() - dyn_value).abs() < 1e-9);
    }

    #[test]
    fn odd_exponent_probabilities_sum_to_one(v in prop::collection::vec(0.0..3.0f64, 2..8), r in 0.5..20.0f64) {
        let ell = v.len();
        let state = OddExponentState::new(WorkFunctionState::from_trajectory_costs(v, r), odd_exponent_for(ell));
        let raw: f64 = (0..ell).map(|j| state.raw_probability(j)).sum();
        prop_assert!((raw - 1.0).abs() < 1e-9);
    }

    #[test]
    fn odd_exponent_stays_a_distribution(
        costs in prop::collection::vec(prop::collection::vec(0.0..1.0f64, 4), 1..30),
        r in 1.0..20.0f64,
    ) {
        let mut alg = OddExponent::new(OddExponentState::for_uniform(4, r, None));
        for c in &costs {
            alg.feed(c).unwrap();
            let p = odd_exponent_distribution(alg.state()).unwrap();
            prop_assert!(p.p().iter().all(|&x| (-1e-9..=1.0 + 1e-9).contains(&x)));
            prop_assert!((p.p().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn share_weights_stay_positive(
        costs in prop::collection::vec(prop::collection::vec(0.0..=1.0f64, 3), 1..40),
        alpha in 0.001..0.5f64,
        beta in 0.0..1.0f64,
    ) {
        let mut s = ShareState::new(3, alpha, beta);
        for c in &costs {
            let next = share_update(&s, c).unwrap();
            let delta: f64 = s.weights.iter().zip(c).map(|(w, x)| w - w * beta.powf(*x)).sum();
            prop_assert!(next.weights.iter().all(|&w| w > 0.0 && w >= alpha * delta / 3.0 - 1e-15));
            let sum: f64 = next.weights.iter().sum();
            s = ShareState { weights: next.weights.iter().map(|w| w / sum).collect(), ..next };
        }
    }

    #[test]
    fn fair_unfair_opt_is_plain_opt(
        costs in prop::collection::vec(prop::collection::vec(0.0..3.0f64, 3), 1..6),
        s0 in 0usize..3,
    ) {
        let unfair = UnfairUniformInstance::new(3, 1.0, costs.clone(), s0).unwrap();
        let inst = MtsInstance::new(
            MetricSpace::uniform(3),
            s0,
            costs.into_iter().map(|c| CostVector::new(c).unwrap()).collect(),
        )
        .unwrap();
        let (u, _) = unfair_opt(&unfair);
        let (o, _) = offline_opt(&inst).unwrap();
        let brute = brute_force_oracle(&inst, &[], BruteVariant::Opt).unwrap();
        prop_assert!((u - o).abs() < 1e-9);
        prop_assert!((u - brute).abs() < 1e-9);
    }
}
