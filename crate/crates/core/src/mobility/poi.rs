//! Map-based movement: nodes walk shortest paths between random points of
//! interest over a graph of walkable segments, pausing at each one.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Bounds, Position};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MapError {
    #[error("map has no vertices")]
    Empty,
    #[error("lattice spacing must be positive and fit the area, got {0}")]
    Spacing(f64),
    #[error("segment ({0}, {1}) references a missing vertex")]
    BadSegment(usize, usize),
    #[error("vertex {0} lies outside the map bounds")]
    OutOfBounds(usize),
    #[error("point of interest at vertex {0} is not on any walkable segment")]
    PoiOffMap(usize),
    #[error("requested {requested} points of interest but the map has {available} vertices")]
    TooManyPois { requested: usize, available: usize },
    #[error("walkable graph is disconnected: vertex {0} unreachable")]
    Disconnected(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    bounds: Bounds,
    vertices: Vec<Position>,
    adjacency: Vec<Vec<(usize, f64)>>,
    pois: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    vertex: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, ties on vertex index for determinism
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl GridMap {
    /// Uniform 4-connected lattice covering `width` x `height`.
    pub fn lattice(width: f64, height: f64, spacing: f64) -> Result<Self, MapError> {
        if !(spacing.is_finite() && spacing > 0.0) || spacing > width.max(height) {
            return Err(MapError::Spacing(spacing));
        }
        let cols = (width / spacing).floor() as usize + 1;
        let rows = (height / spacing).floor() as usize + 1;
        let idx = |c: usize, r: usize| r * cols + c;
        let mut vertices = Vec::with_capacity(cols * rows);
        for r in 0..rows {
            for c in 0..cols {
                vertices.push(Position::new(c as f64 * spacing, r as f64 * spacing));
            }
        }
        let mut segments = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    segments.push((idx(c, r), idx(c + 1, r)));
                }
                if r + 1 < rows {
                    segments.push((idx(c, r), idx(c, r + 1)));
                }
            }
        }
        Self::from_segments(Bounds { width, height }, vertices, &segments, Vec::new())
    }

    /// Arbitrary map; segment lengths are Euclidean.
    pub fn from_segments(
        bounds: Bounds,
        vertices: Vec<Position>,
        segments: &[(usize, usize)],
        pois: Vec<usize>,
    ) -> Result<Self, MapError> {
        if vertices.is_empty() {
            return Err(MapError::Empty);
        }
        if let Some(i) = vertices.iter().position(|v| !bounds.contains(v)) {
            return Err(MapError::OutOfBounds(i));
        }
        let mut adjacency = vec![Vec::new(); vertices.len()];
        for &(a, b) in segments {
            if a >= vertices.len() || b >= vertices.len() {
                return Err(MapError::BadSegment(a, b));
            }
            if a == b {
                continue;
            }
            let d = vertices[a].distance(&vertices[b]);
            adjacency[a].push((b, d));
            adjacency[b].push((a, d));
        }
        let map = Self {
            bounds,
            vertices,
            adjacency,
            pois: Vec::new(),
        };
        map.with_pois(pois)
    }

    pub fn with_pois(mut self, pois: Vec<usize>) -> Result<Self, MapError> {
        for &p in &pois {
            if p >= self.vertices.len() {
                return Err(MapError::BadSegment(p, p));
            }
            if self.adjacency[p].is_empty() && self.vertices.len() > 1 {
                return Err(MapError::PoiOffMap(p));
            }
        }
        self.pois = pois;
        Ok(self)
    }

    /// Places `count` points of interest on distinct vertices, uniformly.
    pub fn with_random_pois<R: Rng + ?Sized>(
        self,
        count: usize,
        rng: &mut R,
    ) -> Result<Self, MapError> {
        let available = self.vertices.len();
        if count > available {
            return Err(MapError::TooManyPois {
                requested: count,
                available,
            });
        }
        let mut chosen = sample(rng, available, count).into_vec();
        chosen.sort_unstable();
        self.with_pois(chosen)
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn vertices(&self) -> &[Position] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Position {
        self.vertices[v]
    }

    pub fn pois(&self) -> &[usize] {
        &self.pois
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    /// Fails unless every vertex is reachable from vertex 0.
    pub fn check_connected(&self) -> Result<(), MapError> {
        let mut seen = vec![false; self.vertices.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &(w, _) in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(v) => Err(MapError::Disconnected(v)),
            None => Ok(()),
        }
    }

    /// Dijkstra from `from` to `to`. Returns the path length and the vertex
    /// sequence including both endpoints.
    pub fn shortest_path(&self, from: usize, to: usize) -> Option<(f64, Vec<usize>)> {
        let n = self.vertices.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        dist[from] = 0.0;
        heap.push(HeapEntry {
            dist: 0.0,
            vertex: from,
        });
        while let Some(HeapEntry { dist: d, vertex: v }) = heap.pop() {
            if v == to {
                break;
            }
            if d > dist[v] {
                continue;
            }
            for &(w, len) in &self.adjacency[v] {
                let nd = d + len;
                if nd < dist[w] {
                    dist[w] = nd;
                    prev[w] = v;
                    heap.push(HeapEntry {
                        dist: nd,
                        vertex: w,
                    });
                }
            }
        }
        if !dist[to].is_finite() {
            return None;
        }
        let mut path = vec![to];
        let mut v = to;
        while v != from {
            v = prev[v];
            path.push(v);
        }
        path.reverse();
        Some((dist[to], path))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoiWalkParams {
    pub speed_min: f64,
    pub speed_max: f64,
    /// Pause at each point of interest, seconds.
    pub wait_min: f64,
    pub wait_max: f64,
}

impl Default for PoiWalkParams {
    fn default() -> Self {
        Self {
            speed_min: 0.0,
            speed_max: 1.5,
            wait_min: 600.0,
            wait_max: 3600.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaypointState {
    pub current: Position,
    /// Last vertex reached.
    pub vertex: usize,
    /// Destination while walking.
    pub target: Option<usize>,
    path: VecDeque<usize>,
    pub speed: f64,
    pub wait_until: f64,
}

impl WaypointState {
    /// Parked at `vertex` until `wait_until`.
    pub fn parked(map: &GridMap, vertex: usize, wait_until: f64) -> Self {
        Self {
            current: map.vertex(vertex),
            vertex,
            target: None,
            path: VecDeque::new(),
            speed: 0.0,
            wait_until,
        }
    }

    pub fn remaining_path(&self) -> impl Iterator<Item = usize> + '_ {
        self.path.iter().copied()
    }

    /// Starts walking to `poi` at `speed` along the shortest path.
    pub fn head_to(&mut self, map: &GridMap, poi: usize, speed: f64) -> bool {
        let Some((_, path)) = map.shortest_path(self.vertex, poi) else {
            return false;
        };
        self.path = path.into_iter().skip(1).collect();
        self.target = Some(poi);
        self.speed = speed;
        true
    }
}

/// Advances one node from `now` to `now + dt`.
pub fn poi_walk_step<R: Rng + ?Sized>(
    ws: &mut WaypointState,
    map: &GridMap,
    params: &PoiWalkParams,
    now: f64,
    dt: f64,
    rng: &mut R,
) {
    if now < ws.wait_until {
        return;
    }
    if ws.target.is_none() {
        let pois = map.pois();
        let choices = pois.iter().filter(|&&p| p != ws.vertex).count();
        if choices == 0 {
            ws.wait_until = now + dt + draw(rng, params.wait_min, params.wait_max);
            return;
        }
        let pick = rng.random_range(0..choices);
        let poi = *pois
            .iter()
            .filter(|&&p| p != ws.vertex)
            .nth(pick)
            .expect("index within filtered count");
        let speed = draw(rng, params.speed_min, params.speed_max);
        if !ws.head_to(map, poi, speed) {
            return;
        }
    }

    let mut budget = ws.speed * dt;
    while budget > 0.0 {
        let Some(&next) = ws.path.front() else { break };
        let target = map.vertex(next);
        let d = ws.current.distance(&target);
        if d <= budget {
            ws.current = target;
            ws.vertex = next;
            ws.path.pop_front();
            budget -= d;
        } else {
            ws.current = ws.current.lerp(&target, budget / d);
            budget = 0.0;
        }
    }
    if ws.path.is_empty() {
        ws.target = None;
        ws.wait_until = now + dt + draw(rng, params.wait_min, params.wait_max);
    }
}

fn draw<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line_map() -> GridMap {
        let vertices = vec![Position::new(0.0, 0.0), Position::new(100.0, 0.0)];
        GridMap::from_segments(
            Bounds {
                width: 100.0,
                height: 1.0,
            },
            vertices,
            &[(0, 1)],
            vec![0, 1],
        )
        .unwrap()
    }

    #[test]
    fn waiting_node_does_not_move() {
        let map = line_map();
        let mut ws = WaypointState::parked(&map, 0, 500.0);
        let before = ws.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        poi_walk_step(
            &mut ws,
            &map,
            &PoiWalkParams::default(),
            100.0,
            10.0,
            &mut rng,
        );
        assert_eq!(ws, before);
    }

    #[test]
    fn walks_speed_times_dt_along_segment() {
        let map = line_map();
        let mut ws = WaypointState::parked(&map, 0, 0.0);
        assert!(ws.head_to(&map, 1, 1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        poi_walk_step(
            &mut ws,
            &map,
            &PoiWalkParams::default(),
            0.0,
            10.0,
            &mut rng,
        );
        assert!((ws.current.x - 10.0).abs() < 1e-12);
        assert_eq!(ws.current.y, 0.0);
    }

    #[test]
    fn arrival_draws_wait_in_range() {
        let map = line_map();
        let params = PoiWalkParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let mut ws = WaypointState::parked(&map, 0, 0.0);
            ws.head_to(&map, 1, 50.0);
            poi_walk_step(&mut ws, &map, &params, 0.0, 2.0, &mut rng);
            assert_eq!(ws.vertex, 1);
            assert_eq!(ws.target, None);
            let wait = ws.wait_until - 2.0;
            assert!((600.0..=3600.0).contains(&wait), "wait {wait}");
        }
    }

    #[test]
    fn lattice_shortest_path_is_manhattan() {
        let map = GridMap::lattice(100.0, 60.0, 20.0).unwrap();
        // cols = 6, rows = 4
        assert_eq!(map.vertices().len(), 24);
        let (len, path) = map.shortest_path(0, 23).unwrap();
        assert!((len - 160.0).abs() < 1e-9);
        assert_eq!(path.first(), Some(&0));
        assert_eq!(path.last(), Some(&23));
        assert!(map.check_connected().is_ok());
    }

    #[test]
    fn disconnected_map_is_detected() {
        let vertices = vec![
            Position::new(0.0, 0.0),
            Position::new(1.0, 0.0),
            Position::new(2.0, 0.0),
        ];
        let map = GridMap::from_segments(
            Bounds {
                width: 2.0,
                height: 1.0,
            },
            vertices,
            &[(0, 1)],
            vec![],
        )
        .unwrap();
        assert_eq!(map.check_connected(), Err(MapError::Disconnected(2)));
        assert_eq!(map.shortest_path(0, 2), None);
    }

    #[test]
    fn random_pois_are_distinct_vertices() {
        let map = GridMap::lattice(200.0, 100.0, 20.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let map = map.with_random_pois(30, &mut rng).unwrap();
        let mut p = map.pois().to_vec();
        p.dedup();
        assert_eq!(p.len(), 30);
        assert!(GridMap::lattice(20.0, 20.0, 20.0)
            .unwrap()
            .with_random_pois(5, &mut rng)
            .is_err());
    }
}
