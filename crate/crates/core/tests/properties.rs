mod common;

use common::*;
use portfolio::anytime::{expand_instances, AnytimeInstance, ObjectiveSpec};
use portfolio::coverage::{average_capped_time, run_prefix};
use portfolio::experts::SleepingExperts;
use portfolio::harness::data::{parse_runtimes, parse_schedule, write_runtimes, write_schedule, Dataset};
use portfolio::offline::{
    best_single_heuristic, greedy_schedule, greedy_schedule_with, optimal_schedule_oracle, GreedyOptions,
};
use portfolio::online::{observe_instance, og_select, OnlineConfig, OnlineState};
use portfolio::{
    coverage, evaluate, expected_capped_time, CoverageState, Exec, ExecutionModel, HeuristicId, Instance, Models,
    Portfolio, RunSegment, RuntimeProfile, Schedule,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_case(deterministic: bool) -> impl Strategy<Value = (Vec<Instance>, Schedule)> {
    workload(deterministic).prop_flat_map(|(k, xs, models)| {
        (Just(xs), segments_strategy(k, 6))
            .prop_map(move |(xs, segs)| (xs, Schedule::new(segs, models.clone()).unwrap()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn survival_never_increases((xs, s) in arb_case(false)) {
        let mut state = CoverageState::for_instances(&xs);
        for &seg in s.segments() {
            let next = state.advance(seg, &xs, s.models());
            for i in 0..xs.len() {
                prop_assert!(next.survival(i) <= state.survival(i) + 1e-15);
                prop_assert!(next.survival(i) >= 0.0);
            }
            state = next;
        }
    }

    #[test]
    fn coverage_never_decreases((xs, s) in arb_case(false), h in 0usize..3, tau in 1u64..=8) {
        let h = HeuristicId(h % s.models().len());
        let longer = s.appended(RunSegment::new(h, tau));
        prop_assert!(coverage(&longer, &xs) >= coverage(&s, &xs) - 1e-12);
    }

    #[test]
    fn capped_time_is_within_cap((xs, s) in arb_case(false), cap in 1u64..=20) {
        for x in &xs {
            let e = expected_capped_time(&s, x, cap).unwrap();
            prop_assert!(e <= cap as f64 + 1e-12);
            prop_assert!(e >= 1.0 - 1e-12);
            if coverage(&s, std::slice::from_ref(x)) == 0.0 {
                prop_assert_eq!(e, cap as f64);
            }
        }
    }

    #[test]
    fn appending_never_hurts((xs, s) in arb_case(false), h in 0usize..3, tau in 1u64..=8, cap in 1u64..=20) {
        let h = HeuristicId(h % s.models().len());
        let longer = s.appended(RunSegment::new(h, tau));
        for x in &xs {
            prop_assert!(expected_capped_time(&longer, x, cap).unwrap() <= expected_capped_time(&s, x, cap).unwrap() + 1e-12);
        }
    }

    #[test]
    fn single_runs_match_the_timeline((xs, s) in arb_case(true), cap in 1u64..=20) {
        for x in &xs {
            let walked = walk_capped(&s, &fixed_times(x), cap) as f64;
            prop_assert_eq!(expected_capped_time(&s, x, cap).unwrap(), walked);
        }
    }

    #[test]
    fn restart_densities_decay((_k, xs, models) in workload(false)) {
        let models = Models::restart(models.len());
        let (_, trace) = greedy_schedule(&xs, &models, LIMIT);
        let d: Vec<f64> = trace.densities().collect();
        for w in d.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "{:?}", d);
        }
    }

    #[test]
    fn greedy_is_reproducible((_k, xs, models) in workload(false)) {
        let (a, ta) = greedy_schedule(&xs, &models, LIMIT);
        let (b, tb) = greedy_schedule(&xs, &models, LIMIT);
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&ta, &tb);
        let mut opts = GreedyOptions::new(LIMIT);
        opts.exec = Exec::Serial;
        let (c, _) = greedy_schedule_with(&xs, &models, &opts);
        prop_assert_eq!(a, c);
    }

    #[test]
    fn greedy_within_four_of_every_single_heuristic((k, xs, models) in workload(false)) {
        let (g, _) = greedy_schedule(&xs, &models, LIMIT);
        let (_, single) = best_single_heuristic(k, &xs, LIMIT);
        prop_assert!(evaluate(&g, &xs, LIMIT).unwrap() <= 4.0 * single + 1e-9);
    }

    #[test]
    fn oracle_never_loses_to_greedy((_k, xs, models) in workload(true)) {
        let (g, _) = greedy_schedule(&xs, &models, LIMIT);
        let opt = optimal_schedule_oracle(&xs, &models, LIMIT, 6).unwrap();
        prop_assert!(opt.cost <= evaluate(&g, &xs, LIMIT).unwrap() + 1e-9);
        prop_assert!((evaluate(&opt.schedule, &xs, LIMIT).unwrap() - opt.cost).abs() < 1e-9);
    }

    #[test]
    fn expert_weights_stay_positive_and_asleep_ones_frozen(
        rounds in prop::collection::vec((prop::collection::vec(any::<bool>(), 4), prop::collection::vec(0.0f64..=1.0, 4)), 1..60),
        beta in 0.05f64..1.0,
    ) {
        let mut e = SleepingExperts::new(4, beta).unwrap();
        for (mask, losses) in rounds {
            let awake: Vec<usize> = (0..4).filter(|&j| mask[j]).collect();
            if awake.is_empty() {
                continue;
            }
            let before = e.weights().to_vec();
            let l: Vec<f64> = awake.iter().map(|&j| losses[j]).collect();
            e.update(&awake, &l).unwrap();
            for j in 0..4 {
                prop_assert!(e.weights()[j] > 0.0);
                if !mask[j] {
                    prop_assert_eq!(e.weights()[j].to_bits(), before[j].to_bits());
                }
            }
            let total_before: f64 = awake.iter().map(|&j| before[j]).sum();
            let total_after: f64 = awake.iter().map(|&j| e.weights()[j]).sum();
            prop_assert!((total_before - total_after).abs() <= 1e-9 * total_before);
        }
    }

    #[test]
    fn equal_losses_keep_the_odds(w in prop::collection::vec(0.1f64..10.0, 3), loss in 0.0f64..=1.0) {
        let mut e = SleepingExperts::new(3, 0.5).unwrap();
        // push the weights apart first
        e.update(&[0, 1, 2], &[w[0] / 10.0, w[1] / 10.0, w[2] / 10.0]).unwrap();
        let before = e.probabilities(&[0, 2]).unwrap();
        e.update(&[0, 2], &[loss, loss]).unwrap();
        let after = e.probabilities(&[0, 2]).unwrap();
        for (a, b) in before.iter().zip(&after) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn expansion_is_a_weighted_double_sum(
        times in prop::collection::vec(prop::collection::vec(prop::collection::vec(prop::option::weighted(0.8, 1..=LIMIT), 2), 3), 1..4),
        weights in prop::collection::vec(0.1f64..2.0, 3),
        segs in segments_strategy(2, 6),
        models in prop::collection::vec(model_strategy(), 2),
    ) {
        let objs: Vec<ObjectiveSpec> = ["feas", "opt", "prove"].iter().zip(&weights).map(|(n, &w)| ObjectiveSpec::new(*n, w)).collect();
        let xs: Vec<AnytimeInstance> = times
            .iter()
            .enumerate()
            .map(|(i, t)| AnytimeInstance::deterministic(format!("x{i}"), t, LIMIT))
            .collect();
        let expanded = expand_instances(&xs, &objs).unwrap();
        prop_assert_eq!(expanded.len(), 3 * xs.len());
        let total: f64 = expanded.iter().map(|x| x.weight).sum();
        prop_assert!((total - xs.len() as f64 * weights.iter().sum::<f64>()).abs() < 1e-9);
        let s = Schedule::new(segs, Models::from_vec(models)).unwrap();
        let direct: f64 = times
            .iter()
            .map(|per_obj| {
                per_obj.iter().zip(&weights).map(|(t, w)| w * walk_capped(&s, t, LIMIT) as f64).sum::<f64>()
            })
            .sum();
        prop_assert!((evaluate(&s, &expanded, LIMIT).unwrap() - direct).abs() < 1e-9);
    }

    #[test]
    fn lone_objective_keeps_instances(
        times in prop::collection::vec(prop::collection::vec(prop::option::weighted(0.8, 1..=LIMIT), 2), 1..5),
    ) {
        let xs: Vec<AnytimeInstance> = times
            .iter()
            .enumerate()
            .map(|(i, t)| AnytimeInstance::deterministic(format!("x{i}"), std::slice::from_ref(t), LIMIT))
            .collect();
        let expanded = expand_instances(&xs, &[ObjectiveSpec::new("solve", 1.0)]).unwrap();
        let plain: Vec<Instance> = times
            .iter()
            .enumerate()
            .map(|(i, t)| Instance::deterministic(format!("x{i}"), t, LIMIT))
            .collect();
        prop_assert_eq!(expanded, plain);
    }

    #[test]
    fn greedy_on_expansion_within_four_of_single_heuristics(
        times in prop::collection::vec(prop::collection::vec(prop::collection::vec(prop::option::weighted(0.8, 1..=LIMIT), 2), 3), 1..4),
    ) {
        let xs: Vec<AnytimeInstance> = times
            .iter()
            .enumerate()
            .map(|(i, t)| AnytimeInstance::deterministic(format!("x{i}"), t, LIMIT))
            .collect();
        let expanded = expand_instances(&xs, &ObjectiveSpec::uniform(["feas", "opt", "prove"])).unwrap();
        let models = Models::suspend_resume(2);
        let (g, _) = greedy_schedule(&expanded, &models, LIMIT);
        let (_, single) = best_single_heuristic(2, &expanded, LIMIT);
        prop_assert!(evaluate(&g, &expanded, LIMIT).unwrap() <= 4.0 * single + 1e-9);
    }

    #[test]
    fn schedule_csv_round_trips(segs in segments_strategy(3, 10), models in prop::collection::vec(model_strategy(), 3)) {
        let p = Portfolio::new(vec!["walk sat".into(), "cdcl,v2".into(), "lookahead".into()]).unwrap();
        let s = Schedule::new(segs, Models::from_vec(models)).unwrap();
        let text = write_schedule(&s, &p).unwrap();
        let back = parse_schedule(&text, "s", &p, ExecutionModel::Restart).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn loader_keeps_exactly_the_solvable((_k, xs, _m) in workload(false)) {
        let k = xs[0].profiles.len();
        let ds = Dataset {
            portfolio: Portfolio::anonymous(k),
            instances: xs.clone(),
            limit: LIMIT,
            notes: Vec::new(),
            discarded: Vec::new(),
            features: vec!["ALL".into()],
        };
        let back = parse_runtimes(&write_runtimes(&ds).unwrap(), "r").unwrap();
        let expect: Vec<&Instance> = xs.iter().filter(|x| x.profiles.iter().any(|p| p.solved_times().iter().any(|&t| t <= LIMIT))).collect();
        prop_assert_eq!(back.instances.len(), expect.len());
        prop_assert_eq!(back.discarded.len(), xs.len() - expect.len());
        for (a, b) in back.instances.iter().zip(expect) {
            prop_assert_eq!(&a.profiles, &b.profiles);
        }
    }

    #[test]
    fn online_charges_stay_under_the_cap((_k, xs, models) in workload(false), seed in any::<u64>()) {
        let k = models.len();
        let mut cfg = OnlineConfig::new(xs.len(), LIMIT).with_gamma(0.5);
        cfg.models = Some(models);
        let mut state = OnlineState::new(k, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for x in &xs {
            let sel = og_select(&state, &mut rng);
            let out = observe_instance(&mut state, x, &sel, &mut rng);
            prop_assert!(out.charged_time <= LIMIT);
            prop_assert!(out.charged_time >= 1);
        }
    }

    #[test]
    fn frozen_learner_never_moves((_k, xs, _m) in workload(false), seed in any::<u64>()) {
        let k = xs[0].profiles.len();
        let mut state = OnlineState::new(k, &OnlineConfig::new(xs.len(), LIMIT).with_gamma(0.0)).unwrap();
        let before: Vec<Vec<f64>> = state.slots().iter().map(|s| s.probabilities()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for x in &xs {
            let sel = og_select(&state, &mut rng);
            prop_assert!(!sel.explore);
            let out = observe_instance(&mut state, x, &sel, &mut rng);
            prop_assert_eq!(out.exploration_time, 0);
        }
        let after: Vec<Vec<f64>> = state.slots().iter().map(|s| s.probabilities()).collect();
        prop_assert_eq!(before, after);
    }
}

#[test]
fn prefix_state_matches_stepwise_advance() {
    let xs = vec![
        Instance::new(
            "a",
            vec![RuntimeProfile::from_solved(&[2, 6]), RuntimeProfile::from_solved(&[3])],
        ),
        Instance::deterministic("b", &[None, Some(5)], 10),
    ];
    let s = Schedule::new(
        vec![RunSegment::new(HeuristicId(0), 2), RunSegment::new(HeuristicId(1), 4)],
        Models::suspend_resume(2),
    )
    .unwrap();
    let mut stepwise = CoverageState::for_instances(&xs);
    for &seg in s.segments() {
        stepwise = stepwise.advance(seg, &xs, s.models());
    }
    assert_eq!(run_prefix(&s, &xs).survivals(), stepwise.survivals());
    // a: half the runs of h0 finish at 2, then h1 finishes at 3 on top
    assert_eq!(stepwise.survivals(), &[0.0, 1.0]);
    assert!((average_capped_time(&s, &xs, 10).unwrap() - (0.5 * 2.0 + 0.5 * 5.0 + 10.0) / 2.0).abs() < 1e-12);
}
