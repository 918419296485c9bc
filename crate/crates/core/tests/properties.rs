mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wfdgm::battery::{BatteryLoad, BatteryModelParams, BatteryState};
use wfdgm::context::{best_candidate, jaccard, NeighborSet, StabilityState, StabilityWeights};
use wfdgm::domain::{Blacklist, GroupRecord, ServiceRecord, TokenSource};
use wfdgm::metrics::{ConnectivityGraph, DiffusionState};
use wfdgm::mobility::{
    poi_walk_step, GridMap, PoiWalkParams, Position, WaypointState, WorkingDaySchedule,
};
use wfdgm::NodeId;

fn set_of(ids: Vec<u32>) -> NeighborSet {
    ids.into_iter().map(NodeId).collect()
}

fn owner_record(node: u32, suitability: f64) -> ServiceRecord {
    let mut tokens = TokenSource::new();
    let g = GroupRecord::new(NodeId(node), 4, &mut tokens).unwrap();
    ServiceRecord::owner(&g, suitability)
}

proptest! {
    #[test]
    fn jaccard_is_symmetric_and_bounded(a in prop::collection::vec(0u32..20, 0..10), b in prop::collection::vec(0u32..20, 0..10)) {
        let (a, b) = (set_of(a), set_of(b));
        let j = jaccard(&a, &b);
        prop_assert_eq!(j, jaccard(&b, &a));
        prop_assert!((0.0..=1.0).contains(&j));
        prop_assert_eq!(jaccard(&a, &a), 1.0);
    }

    #[test]
    fn stability_stays_in_unit_interval(
        w1 in 0.0f64..=1.0,
        start in 0.0f64..=1.0,
        ops in prop::collection::vec(prop::option::of(prop::collection::vec(0u32..10, 0..6)), 0..40),
    ) {
        let mut st = StabilityState::with_initial(start, StabilityWeights::new(w1, 1.0 - w1).unwrap());
        for op in ops {
            match op {
                Some(ids) => st.on_neighbors_changed(&set_of(ids)),
                None => { st.update(); }
            }
            prop_assert!((0.0..=1.0).contains(&st.index()));
            prop_assert!((0.0..=1.0).contains(&st.window_mean()));
        }
    }

    #[test]
    fn best_candidate_ignores_input_order(
        suits in prop::collection::vec(0u8..5, 1..8),
        own in 0u8..5,
        blocked in prop::collection::vec(any::<bool>(), 8),
        seed in any::<u64>(),
    ) {
        // coarse suitabilities so ties are common
        let records: Vec<ServiceRecord> =
            suits.iter().enumerate().map(|(i, &s)| owner_record(i as u32 + 1, s as f64 / 4.0)).collect();
        let me = owner_record(0, own as f64 / 4.0);
        let mut bl = Blacklist::new();
        for (i, &b) in blocked.iter().enumerate().take(records.len()) {
            if b {
                bl.add(NodeId(i as u32 + 1), 0.0, 60.0);
            }
        }
        let want = best_candidate(&records, &me, &bl, 10.0);
        let mut shuffled = records.clone();
        use rand::seq::SliceRandom;
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(best_candidate(&shuffled, &me, &bl, 10.0), want);
        prop_assert!(want == me.node || !bl.is_blocked(want, 10.0));
    }

    #[test]
    fn battery_never_rises(clients in 0u32..16, steps in 1usize..500, start in 0.0f64..=1.0, load in 0u8..3) {
        let params = BatteryModelParams::default();
        let load = match load { 0 => BatteryLoad::Idle, 1 => BatteryLoad::Owner { clients }, _ => BatteryLoad::Client };
        let mut b = BatteryState::with_level(start);
        let mut prev = b.level();
        for _ in 0..steps {
            b.update(load, 30.0, &params);
            prop_assert!(b.level() <= prev && b.level() >= 0.0);
            prev = b.level();
        }
    }

    #[test]
    fn diffusion_caches_only_grow(n in 2usize..12, joins in prop::collection::vec((0usize..12, prop::collection::vec(0usize..12, 1..5)), 0..30)) {
        let mut d = DiffusionState::new(n);
        let mut prev_mean = d.mean_fraction();
        let mut prev_len: Vec<usize> = (0..n).map(|i| d.cache_len(NodeId(i as u32))).collect();
        for (j, members) in joins {
            let joiner = NodeId((j % n) as u32);
            let mut members: Vec<NodeId> = members.into_iter().map(|m| NodeId((m % n) as u32)).filter(|&m| m != joiner).collect();
            members.sort_unstable();
            members.dedup();
            d.on_join(joiner, &members);
            prop_assert!(d.mean_fraction() >= prev_mean);
            prev_mean = d.mean_fraction();
            for (i, prev) in prev_len.iter_mut().enumerate() {
                let id = NodeId(i as u32);
                prop_assert!(d.holds(id, id));
                prop_assert!(d.cache_len(id) >= *prev);
                *prev = d.cache_len(id);
            }
            // after a join the joiner and every member hold the same set
            for &m in &members {
                prop_assert_eq!(d.cache_len(m), d.cache_len(joiner));
            }
        }
    }

    #[test]
    fn components_partition_the_nodes(seed in any::<u64>(), n in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (cg, _) = common::random_graph(&mut rng, n);
        let comps = cg.connected_components();
        let mut seen: Vec<usize> = comps.sets.iter().flatten().map(|x| x.index()).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        prop_assert!(comps.sets.iter().all(|c| !c.is_empty()));
    }

    #[test]
    fn poi_walkers_stay_on_the_map_and_under_speed(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = GridMap::lattice(200.0, 100.0, 20.0).unwrap().with_random_pois(6, &mut rng).unwrap();
        let params = PoiWalkParams { speed_min: 0.0, speed_max: 1.5, wait_min: 0.0, wait_max: 30.0 };
        let mut ws = WaypointState::parked(&map, map.pois()[0], 0.0);
        for step in 0..2000 {
            let before = ws.current;
            poi_walk_step(&mut ws, &map, &params, step as f64, 1.0, &mut rng);
            prop_assert!(map.bounds().contains(&ws.current));
            prop_assert!(before.distance(&ws.current) <= params.speed_max + 1e-9);
            prop_assert!(ws.speed >= params.speed_min && ws.speed <= params.speed_max);
        }
    }

    #[test]
    fn commuters_respect_their_top_speed(seed in any::<u64>(), xs in prop::collection::vec(0.0f64..4500.0, 3), ys in prop::collection::vec(0.0f64..3400.0, 3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let schedule = WorkingDaySchedule::default();
        let places: Vec<Position> = xs.iter().zip(&ys).map(|(&x, &y)| Position::new(x, y)).collect();
        let plan = schedule.plan(places[0], places[1], places[2], &mut rng);
        let limit = plan.max_speed();
        prop_assert!(limit <= schedule.transport_speed.max(schedule.walk_speed));
        let mut prev = plan.position_at(0.0);
        let mut t = 0.0;
        while t < schedule.day_length_s * 1.5 {
            t += 10.0;
            let p = plan.position_at(t);
            prop_assert!(p.x >= 0.0 && p.x <= 4500.0 && p.y >= 0.0 && p.y <= 3400.0);
            prop_assert!(prev.distance(&p) <= limit * 10.0 + 1e-6);
            prev = p;
        }
    }
}

#[test]
fn stability_bounded_over_many_sequences() {
    common::check_stability_bounds(100_000, 3).unwrap();
}

#[test]
fn suitability_is_monotone() {
    common::check_monotonicity(10_000, 5).unwrap();
}

#[test]
fn empty_graph_has_one_component_per_node() {
    let comps = ConnectivityGraph::new(5).connected_components();
    assert_eq!(comps.sizes(), vec![1; 5]);
}
