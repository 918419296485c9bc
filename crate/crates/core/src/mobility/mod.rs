//! Node movement: a static seating grid, shortest-path walks between points
//! of interest, and a simplified working-day routine.

pub mod poi;
pub mod working_day;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use poi::{poi_walk_step, GridMap, MapError, PoiWalkParams, WaypointState};
pub use working_day::{working_day_step, DayPhase, DayPlan, WorkingDaySchedule};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_sq(&self, other: &Position) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        dx * dx + dy * dy
    }

    /// Point `fraction` of the way from `self` to `to`.
    pub fn lerp(&self, to: &Position, fraction: f64) -> Position {
        Position::new(
            self.x + (to.x - self.x) * fraction,
            self.y + (to.y - self.y) * fraction,
        )
    }
}

/// Axis-aligned box anchored at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub width: f64,
    pub height: f64,
}

impl Bounds {
    pub fn contains(&self, p: &Position) -> bool {
        const SLACK: f64 = 1e-6;
        p.x >= -SLACK && p.y >= -SLACK && p.x <= self.width + SLACK && p.y <= self.height + SLACK
    }

    pub fn clamp(&self, p: Position) -> Position {
        Position::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height))
    }

    /// Uniform point inside a disc around `center`, clipped to the box.
    pub fn scatter<R: Rng + ?Sized>(&self, center: Position, radius: f64, rng: &mut R) -> Position {
        let r = radius * rng.random::<f64>().sqrt();
        let theta = rng.random::<f64>() * std::f64::consts::TAU;
        self.clamp(Position::new(
            center.x + r * theta.cos(),
            center.y + r * theta.sin(),
        ))
    }

    pub fn uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Position {
        Position::new(
            rng.random::<f64>() * self.width,
            rng.random::<f64>() * self.height,
        )
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GridError {
    #[error("{rows}x{cols} grid cannot seat {nodes} nodes")]
    TooSmall {
        nodes: usize,
        rows: usize,
        cols: usize,
    },
    #[error("grid spacing must be positive, got {0}")]
    Spacing(f64),
}

/// Row-major seating: node `k` sits at column `k mod cols`, row `k div cols`.
pub fn static_grid(
    nodes: usize,
    rows: usize,
    cols: usize,
    spacing: f64,
) -> Result<Vec<Position>, GridError> {
    if rows * cols < nodes {
        return Err(GridError::TooSmall { nodes, rows, cols });
    }
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(GridError::Spacing(spacing));
    }
    Ok((0..nodes)
        .map(|k| Position::new((k % cols) as f64 * spacing, (k / cols) as f64 * spacing))
        .collect())
}

/// Movement model instantiated for a whole population.
#[derive(Debug, Clone)]
pub enum Mobility {
    Static,
    PoiWalk {
        map: GridMap,
        params: PoiWalkParams,
        states: Vec<WaypointState>,
    },
    WorkingDay {
        plans: Vec<DayPlan>,
    },
}

impl Mobility {
    /// Moves every live node from `now` to `now + dt`. Each node draws from
    /// its own generator so one node's death leaves the others' paths intact.
    pub fn advance<R: Rng>(
        &mut self,
        now: f64,
        dt: f64,
        alive: &[bool],
        positions: &mut [Position],
        rngs: &mut [R],
    ) {
        match self {
            Mobility::Static => {}
            Mobility::PoiWalk {
                map,
                params,
                states,
            } => {
                for (i, ws) in states.iter_mut().enumerate() {
                    if alive[i] {
                        poi_walk_step(ws, map, params, now, dt, &mut rngs[i]);
                        positions[i] = ws.current;
                    }
                }
            }
            Mobility::WorkingDay { plans } => {
                for (i, plan) in plans.iter().enumerate() {
                    if alive[i] {
                        positions[i] = working_day_step(plan, now, dt);
                    }
                }
            }
        }
    }

    /// Largest distance any node may cover per second.
    pub fn max_speed(&self) -> f64 {
        match self {
            Mobility::Static => 0.0,
            Mobility::PoiWalk { params, .. } => params.speed_max,
            Mobility::WorkingDay { plans } => {
                plans.iter().map(DayPlan::max_speed).fold(0.0, f64::max)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_grid() {
        let p = static_grid(4, 2, 2, 1.0).unwrap();
        assert_eq!(
            p,
            vec![
                Position::new(0.0, 0.0),
                Position::new(1.0, 0.0),
                Position::new(0.0, 1.0),
                Position::new(1.0, 1.0)
            ]
        );
    }

    #[test]
    fn grid_too_small_is_rejected() {
        assert_eq!(
            static_grid(5, 2, 2, 1.0),
            Err(GridError::TooSmall {
                nodes: 5,
                rows: 2,
                cols: 2
            })
        );
    }

    #[test]
    fn desk_concert_fits_in_small_diameter() {
        let p = static_grid(200, 10, 20, 1.0).unwrap();
        let diameter = (19.0f64.powi(2) + 9.0f64.powi(2)).sqrt();
        let max = p
            .iter()
            .flat_map(|a| p.iter().map(move |b| a.distance(b)))
            .fold(0.0, f64::max);
        assert!((max - diameter).abs() < 1e-12);
        assert!(max <= 21.4);
    }

    #[test]
    fn static_model_never_moves() {
        let mut pos = static_grid(6, 2, 3, 2.0).unwrap();
        let before = pos.clone();
        let mut m = Mobility::Static;
        let mut rngs: Vec<_> = (0..6).map(|_| rand::rng()).collect();
        for t in 0..100 {
            m.advance(t as f64, 1.0, &[true; 6], &mut pos, &mut rngs);
        }
        assert_eq!(pos, before);
    }
}
