mod common;

use chargegame::flow::{certify_max_flow, max_flow, unit_quantum};
use chargegame::instances::{random_instance, random_profile, RandomParams};
use chargegame::model::{apply_strategy, build_expanded_graph, StrategyProfile};
use chargegame::{
    admissibility, best_response, is_k_strong, is_nash, load_instance, optimal_welfare, paper_instance,
    profile_from_flow, save_instance, strategy_grid, utilities, welfare, Instance, PaperInstanceId, PriceProfile,
    Quantity, Utility,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn params() -> impl Strategy<Value = (u64, RandomParams)> {
    (any::<u64>(), 1usize..=4, 1usize..=3, 0usize..=3, 1i64..=3).prop_map(|(seed, nodes, horizon, agents, cap)| {
        let params = RandomParams {
            nodes,
            horizon,
            agents: agents.min(nodes),
            max_capacity: cap,
            demand_density: Quantity::new(1, 2),
        };
        (seed, params)
    })
}

fn instance_and_profile() -> impl Strategy<Value = (Instance, StrategyProfile, u64)> {
    params().prop_map(|(seed, p)| {
        let instance = random_instance(seed, &p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let profile = random_profile(&instance, Quantity::ONE, &mut rng).unwrap();
        (instance, profile, seed)
    })
}

fn ascending(horizon: usize) -> PriceProfile {
    PriceProfile::new((1..=horizon as i64).map(Quantity::from_integer).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn max_flow_matches_edmonds_karp((instance, profile, _) in instance_and_profile()) {
        let relaxed = build_expanded_graph(&instance).unwrap();
        prop_assert_eq!(max_flow(&relaxed).value(), common::max_flow_value(&relaxed));
        let capped = apply_strategy(&relaxed, &profile).unwrap();
        let mf = max_flow(&capped);
        prop_assert_eq!(mf.value(), common::max_flow_value(&capped));
        prop_assert_eq!(mf.cut_capacity(&capped), mf.value());
        prop_assert!(certify_max_flow(&capped, &mf.flow).is_ok());
    }

    #[test]
    fn flow_value_ignores_edge_order((instance, profile, seed) in instance_and_profile()) {
        let graph = apply_strategy(&build_expanded_graph(&instance).unwrap(), &profile).unwrap();
        let mut order: Vec<usize> = (0..graph.edges().len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let permuted = graph.permuted(&order);
        prop_assert_eq!(max_flow(&permuted).value(), max_flow(&graph).value());
    }

    #[test]
    fn admissibility_matches_capacity_reduction((instance, profile, _) in instance_and_profile()) {
        let graph = apply_strategy(&build_expanded_graph(&instance).unwrap(), &profile).unwrap();
        let eps = unit_quantum(&graph) / 2;
        let verdict = admissibility(&instance, &profile).unwrap();
        for e in &verdict.edges {
            prop_assert_eq!(e.admissible, common::edge_forced(&graph, e.edge, eps), "edge {}", e.edge);
        }
        prop_assert_eq!(verdict.agents, common::agent_verdicts(&graph, eps));
    }

    #[test]
    fn verdicts_ignore_host_edge_order((instance, profile, seed) in instance_and_profile()) {
        let mut shuffled = instance.clone();
        shuffled.edges.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = admissibility(&instance, &profile).unwrap();
        let b = admissibility(&shuffled, &profile).unwrap();
        prop_assert_eq!(a.agents, b.agents);
        prop_assert_eq!(welfare(&instance, &profile).unwrap(), welfare(&shuffled, &profile).unwrap());
    }

    #[test]
    fn grid_matches_brute_force((seed, p) in params(), half in any::<bool>()) {
        let instance = random_instance(seed, &p).unwrap();
        let g = if half { Quantity::new(1, 2) } else { Quantity::ONE };
        for b in 0..instance.agents.len() {
            prop_assert_eq!(strategy_grid(&instance, b, g).unwrap(), common::brute_force_grid(&instance, b, g));
        }
    }

    #[test]
    fn flow_profile_is_optimal_and_admissible((seed, p) in params()) {
        let instance = random_instance(seed, &p).unwrap();
        let mf = max_flow(&build_expanded_graph(&instance).unwrap());
        let profile = profile_from_flow(&instance, &mf.flow).unwrap();
        prop_assert!(admissibility(&instance, &profile).unwrap().profile);
        prop_assert_eq!(welfare(&instance, &profile).unwrap(), optimal_welfare(&instance).unwrap());
    }

    #[test]
    fn welfare_never_exceeds_optimum((instance, profile, _) in instance_and_profile()) {
        prop_assert!(welfare(&instance, &profile).unwrap() <= optimal_welfare(&instance).unwrap());
    }

    #[test]
    fn best_response_is_stable((instance, profile, _) in instance_and_profile()) {
        let prices = ascending(instance.horizon);
        for b in 0..instance.agents.len() {
            let (s, u) = best_response(&instance, &prices, &profile, b, Quantity::ONE).unwrap();
            prop_assert!(u >= Utility::Finite(Quantity::ZERO));
            let moved = profile.with_strategy(b, s.clone());
            let (again, u2) = best_response(&instance, &prices, &moved, b, Quantity::ONE).unwrap();
            prop_assert_eq!(again, s);
            prop_assert_eq!(u2, u);
        }
    }

    #[test]
    fn strong_checks_nest((instance, profile, _) in instance_and_profile()) {
        let prices = ascending(instance.horizon);
        let n = instance.agents.len().max(1);
        let nash = is_nash(&instance, &prices, &profile, Quantity::ONE).unwrap().is_nash;
        let mut previous = nash;
        for k in 1..=n {
            let holds = is_k_strong(&instance, &prices, &profile, k, Quantity::ONE).unwrap().holds;
            if k == 1 {
                prop_assert_eq!(holds, nash);
            }
            prop_assert!(previous || !holds, "k = {} strong but not k - 1", k);
            previous = holds;
        }
    }

    #[test]
    fn two_step_ascending_flow_profile_is_nash(seed in any::<u64>(), nodes in 1usize..=4, agents in 1usize..=3) {
        let p = RandomParams { nodes, horizon: 2, agents: agents.min(nodes), ..RandomParams::default() };
        let instance = random_instance(seed, &p).unwrap();
        let mf = max_flow(&build_expanded_graph(&instance).unwrap());
        let profile = profile_from_flow(&instance, &mf.flow).unwrap();
        let verdict = is_nash(&instance, &PriceProfile::from_integers(&[1, 2]), &profile, Quantity::ONE).unwrap();
        prop_assert!(verdict.is_nash, "witness {:?}", verdict.witness);
    }

    #[test]
    fn documents_round_trip((seed, p) in params()) {
        let instance = random_instance(seed, &p).unwrap();
        prop_assert_eq!(load_instance(&save_instance(&instance)).unwrap(), instance);
    }

    #[test]
    fn scaling_scales_welfare((instance, profile, _) in instance_and_profile(), c in 2i64..=4) {
        let factor = Quantity::from_integer(c);
        let scaled = instance.scaled(factor);
        let sp = profile.scaled(factor);
        prop_assert_eq!(welfare(&scaled, &sp).unwrap(), welfare(&instance, &profile).unwrap() * c);
        prop_assert_eq!(optimal_welfare(&scaled).unwrap(), optimal_welfare(&instance).unwrap() * c);
        prop_assert_eq!(
            admissibility(&scaled, &sp).unwrap().agents,
            admissibility(&instance, &profile).unwrap().agents
        );
    }
}

#[test]
fn final_step_charging_is_never_admissible() {
    for id in PaperInstanceId::suite() {
        let (instance, prices) = paper_instance(id).unwrap();
        let t = instance.horizon;
        for b in 0..instance.agents.len() {
            let mut rows = vec![vec![Quantity::ZERO; t]; instance.agents.len()];
            rows[b][t - 1] = Quantity::ONE;
            let profile = StrategyProfile::new(rows);
            let u = utilities(&instance, &profile, &prices).unwrap();
            assert_eq!(u[b], Utility::NegativeInfinity, "{id} agent {b}");
        }
    }
}

#[test]
fn oracle_grid_on_named_instances() {
    for id in PaperInstanceId::suite() {
        let (instance, _) = paper_instance(id).unwrap();
        for b in 0..instance.agents.len() {
            let g = Quantity::new(1, 2);
            assert_eq!(strategy_grid(&instance, b, g).unwrap(), common::brute_force_grid(&instance, b, g), "{id}");
        }
    }
}
