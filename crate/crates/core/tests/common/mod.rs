//! Independent reference implementations shared by the oracle tests and the
//! acceptance suite. Deliberately naive.

#![allow(dead_code)]

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use wfdgm::context::{
    suitability, ContextSnapshot, NeighborSet, NormalizationParams, StabilityState,
    StabilityWeights, SuitabilityWeights,
};
use wfdgm::metrics::{ccdf, Ccdf, ConnectivityGraph};
use wfdgm::mobility::{poi_walk_step, Bounds, GridMap, PoiWalkParams, Position, WaypointState};
use wfdgm::NodeId;

/// Random weighted graph on `n` nodes. Some edges get zero weight and must
/// not connect anything.
pub fn random_graph<R: Rng>(
    rng: &mut R,
    n: usize,
) -> (ConnectivityGraph, Vec<(usize, usize, f64)>) {
    let mut cg = ConnectivityGraph::new(n);
    let mut edges = Vec::new();
    let p = rng.random_range(0.0..0.5);
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                let w = if rng.random_bool(0.2) {
                    0.0
                } else {
                    rng.random_range(1..100) as f64
                };
                cg.accumulate_contact(NodeId(a as u32), NodeId(b as u32), w);
                edges.push((a, b, w));
            }
        }
    }
    (cg, edges)
}

/// Components by breadth-first search over an adjacency matrix, each sorted,
/// the list sorted.
pub fn bfs_components(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<usize>> {
    let mut adj = vec![vec![false; n]; n];
    for &(a, b, w) in edges {
        if w > 0.0 {
            adj[a][b] = true;
            adj[b][a] = true;
        }
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for w in 0..n {
                if adj[v][w] && !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                    q.push_back(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out.sort();
    out
}

/// Fraction of `values` that are at least `x`, by counting.
pub fn ccdf_count(values: &[f64], x: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|&&v| v >= x).count() as f64 / values.len() as f64
}

/// Small random connected map: a random spanning tree plus extra segments.
pub fn random_map<R: Rng>(rng: &mut R) -> (GridMap, Vec<(usize, usize)>) {
    let n = rng.random_range(2..14);
    let bounds = Bounds {
        width: 100.0,
        height: 100.0,
    };
    let vertices: Vec<Position> = (0..n).map(|_| bounds.uniform(rng)).collect();
    let mut segments = Vec::new();
    for v in 1..n {
        segments.push((rng.random_range(0..v), v));
    }
    for _ in 0..rng.random_range(0..2 * n) {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            segments.push((a, b));
        }
    }
    let map =
        GridMap::from_segments(bounds, vertices, &segments, (0..n).collect()).expect("valid map");
    (map, segments)
}

/// All-pairs shortest distances by Floyd-Warshall.
pub fn floyd(map: &GridMap, segments: &[(usize, usize)]) -> Vec<Vec<f64>> {
    let n = map.vertices().len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(a, b) in segments {
        let w = map.vertex(a).distance(&map.vertex(b));
        if w < d[a][b] {
            d[a][b] = w;
            d[b][a] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Components of `trials` random graphs against breadth-first search.
pub fn check_components(trials: usize, seed: u64) -> Result<(), String> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for t in 0..trials {
        let n = rng.random_range(1..=12);
        let (cg, edges) = random_graph(&mut rng, n);
        let comps = cg.connected_components();
        let mut got: Vec<Vec<usize>> = comps
            .sets
            .iter()
            .map(|c| {
                let mut v: Vec<usize> = c.iter().map(|x| x.index()).collect();
                v.sort_unstable();
                v
            })
            .collect();
        got.sort();
        let want = bfs_components(n, &edges);
        if got != want {
            return Err(format!("graph {t}: got {got:?}, oracle {want:?}"));
        }
        let sizes = comps.sizes();
        if sizes.windows(2).any(|w| w[0] < w[1]) {
            return Err(format!("graph {t}: sizes not largest first {sizes:?}"));
        }
    }
    Ok(())
}

/// CCDF of `trials` random value lists against direct counting.
pub fn check_ccdf(trials: usize, seed: u64) -> Result<(), String> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for t in 0..trials {
        let len = rng.random_range(0..60);
        // coarse values so that ties and exact grid hits occur
        let values: Vec<f64> = (0..len)
            .map(|_| {
                if rng.random_bool(0.5) {
                    rng.random_range(0..=20) as f64 / 20.0
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        let c = Ccdf::new(values.clone());
        for (x, f) in ccdf(&values) {
            if f != ccdf_count(&values, x) {
                return Err(format!(
                    "list {t}: at {x} got {f}, oracle {}",
                    ccdf_count(&values, x)
                ));
            }
        }
        for &v in &values {
            if c.at(v) != ccdf_count(&values, v) {
                return Err(format!("list {t}: at sample value {v}"));
            }
        }
    }
    Ok(())
}

/// Walks between every pair of vertices on `trials` random maps and checks
/// the route length against Floyd-Warshall.
#[allow(clippy::needless_range_loop)] // a and b are vertex ids as well as indices
pub fn check_paths(trials: usize, seed: u64) -> Result<(), String> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let params = PoiWalkParams {
        speed_min: 1.0,
        speed_max: 1.0,
        wait_min: 0.0,
        wait_max: 0.0,
    };
    for t in 0..trials {
        let (map, segments) = random_map(&mut rng);
        let d = floyd(&map, &segments);
        let n = map.vertices().len();
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let mut ws = WaypointState::parked(&map, a, 0.0);
                if !ws.head_to(&map, b, 1.0) {
                    return Err(format!("map {t}: no route {a}->{b}"));
                }
                // length of the planned route, edge by edge
                let mut route = vec![a];
                route.extend(ws.remaining_path());
                let mut len = 0.0;
                for w in route.windows(2) {
                    if !segments
                        .iter()
                        .any(|&(p, q)| (p, q) == (w[0], w[1]) || (q, p) == (w[0], w[1]))
                    {
                        return Err(format!(
                            "map {t}: route {a}->{b} uses missing segment {w:?}"
                        ));
                    }
                    len += map.vertex(w[0]).distance(&map.vertex(w[1]));
                }
                if (len - d[a][b]).abs() > 1e-9 * d[a][b].max(1.0) {
                    return Err(format!(
                        "map {t}: route {a}->{b} is {len}, oracle {}",
                        d[a][b]
                    ));
                }
                // walking it at 1 m/s takes ceil(length) seconds
                let mut steps = 0u32;
                while ws.target.is_some() {
                    poi_walk_step(&mut ws, &map, &params, steps as f64, 1.0, &mut rng);
                    steps += 1;
                    if steps as f64 > len + 2.0 {
                        return Err(format!("map {t}: walk {a}->{b} did not arrive"));
                    }
                }
                if ws.vertex != b || ws.current != map.vertex(b) {
                    return Err(format!(
                        "map {t}: walk {a}->{b} ended at vertex {}",
                        ws.vertex
                    ));
                }
                if (steps as f64 - len.ceil()).abs() > 1.0 {
                    return Err(format!("map {t}: walk {a}->{b} took {steps} s for {len} m"));
                }
            }
        }
    }
    Ok(())
}

fn random_set<R: Rng>(rng: &mut R) -> NeighborSet {
    let mut ids: Vec<NodeId> = (0..rng.random_range(0..8))
        .map(|_| NodeId(rng.random_range(0..10)))
        .collect();
    ids.sort_unstable();
    ids.dedup();
    NeighborSet::from_sorted(ids)
}

/// Random sequences of neighbourhood changes and window closes, with
/// random convex weights, never leave the stability index outside [0, 1].
pub fn check_stability_bounds(sequences: usize, seed: u64) -> Result<(), String> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for s in 0..sequences {
        let w1 = rng.random::<f64>();
        let weights = StabilityWeights::new(w1, 1.0 - w1).map_err(|e| e.to_string())?;
        let mut st = StabilityState::with_initial(rng.random(), weights);
        for _ in 0..rng.random_range(1..20) {
            if rng.random_bool(0.3) {
                let v = st.update();
                if !(0.0..=1.0).contains(&v) {
                    return Err(format!("sequence {s}: index {v}"));
                }
            } else {
                st.on_neighbors_changed(&random_set(&mut rng));
                let m = st.window_mean();
                if !(0.0..=1.0).contains(&m) {
                    return Err(format!("sequence {s}: window mean {m}"));
                }
            }
        }
    }
    Ok(())
}

fn random_snapshot<R: Rng>(rng: &mut R) -> ContextSnapshot {
    ContextSnapshot {
        resources: rng.random(),
        peers: rng.random_range(0..30),
        free_slots: rng.random_range(0..=15),
        stability: rng.random(),
    }
}

/// Raising any one feature never lowers suitability, and the index stays in
/// [0, 1] for convex weights.
pub fn check_monotonicity(pairs: usize, seed: u64) -> Result<(), String> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let norm = NormalizationParams::default();
    for p in 0..pairs {
        let mut raw: [f64; 4] = [rng.random(), rng.random(), rng.random(), rng.random()];
        let total: f64 = raw.iter().sum();
        raw.iter_mut().for_each(|w| *w /= total);
        let w = SuitabilityWeights {
            resources: raw[0],
            peers: raw[1],
            capacity: raw[2],
            stability: raw[3],
        };
        let lo = random_snapshot(&mut rng);
        let mut hi = lo;
        match rng.random_range(0..4) {
            0 => hi.resources = rng.random_range(lo.resources..=1.0),
            1 => hi.peers += rng.random_range(0..10),
            2 => hi.free_slots = rng.random_range(lo.free_slots..=15),
            _ => hi.stability = rng.random_range(lo.stability..=1.0),
        }
        let (a, b) = (suitability(&lo, &w, &norm), suitability(&hi, &w, &norm));
        if a > b + 1e-12 {
            return Err(format!("pair {p}: {lo:?} -> {a}, {hi:?} -> {b}"));
        }
        if !(-1e-12..=1.0 + 1e-12).contains(&b) {
            return Err(format!("pair {p}: suitability {b} out of range"));
        }
    }
    Ok(())
}
