//! Scenario geometry: how nodes are laid out and how they move.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::kernel::Scenario;
use crate::mobility::{
    static_grid, Bounds, DayPlan, GridError, GridMap, MapError, Mobility, PoiWalkParams, Position,
    WaypointState, WorkingDaySchedule,
};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScenarioError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

/// Movement model and its geometry, as written in a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MobilitySpec {
    /// Seated crowd on a row-major grid.
    StaticGrid {
        rows: usize,
        cols: usize,
        spacing_m: f64,
    },
    /// Shortest-path walks between points of interest on a square lattice.
    PoiWalk {
        width_m: f64,
        height_m: f64,
        lattice_spacing_m: f64,
        poi_count: usize,
        speed_min: f64,
        speed_max: f64,
        wait_min_s: f64,
        wait_max_s: f64,
    },
    /// Home, office and evening spot per node.
    WorkingDay {
        width_m: f64,
        height_m: f64,
        home_districts: usize,
        home_radius_m: f64,
        offices: usize,
        office_radius_m: f64,
        evening_spots: usize,
        evening_radius_m: f64,
        schedule: WorkingDaySchedule,
    },
}

impl MobilitySpec {
    pub fn kind(&self) -> &'static str {
        match self {
            MobilitySpec::StaticGrid { .. } => "static_grid",
            MobilitySpec::PoiWalk { .. } => "poi_walk",
            MobilitySpec::WorkingDay { .. } => "working_day",
        }
    }

    /// Cheap checks that do not need to build the map.
    pub fn validate(&self, node_count: usize) -> Result<(), ScenarioError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            MobilitySpec::StaticGrid {
                rows,
                cols,
                spacing_m,
            } => {
                if rows * cols < node_count {
                    return Err(GridError::TooSmall {
                        nodes: node_count,
                        rows,
                        cols,
                    }
                    .into());
                }
                positive("spacing_m", spacing_m)
            }
            MobilitySpec::PoiWalk {
                width_m,
                height_m,
                lattice_spacing_m,
                poi_count,
                speed_min,
                speed_max,
                wait_min_s,
                wait_max_s,
            } => {
                positive("width_m", width_m)?;
                positive("height_m", height_m)?;
                positive("lattice_spacing_m", lattice_spacing_m)?;
                if poi_count < 2 {
                    return Err(invalid("poi_count must be at least 2"));
                }
                if !(speed_min >= 0.0 && speed_min <= speed_max && speed_max.is_finite()) {
                    return Err(invalid(format!(
                        "speed range [{speed_min}, {speed_max}] is invalid"
                    )));
                }
                if !(wait_min_s >= 0.0 && wait_min_s <= wait_max_s && wait_max_s.is_finite()) {
                    return Err(invalid(format!(
                        "wait range [{wait_min_s}, {wait_max_s}] is invalid"
                    )));
                }
                Ok(())
            }
            MobilitySpec::WorkingDay {
                width_m,
                height_m,
                home_districts,
                home_radius_m,
                offices,
                office_radius_m,
                evening_spots,
                evening_radius_m,
                ref schedule,
            } => {
                positive("width_m", width_m)?;
                positive("height_m", height_m)?;
                if home_districts == 0 || offices == 0 || evening_spots == 0 {
                    return Err(invalid("every place kind needs at least one site"));
                }
                for (name, r) in [
                    ("home_radius_m", home_radius_m),
                    ("office_radius_m", office_radius_m),
                    ("evening_radius_m", evening_radius_m),
                ] {
                    if !(r.is_finite() && r >= 0.0) {
                        return Err(invalid(format!("{name} must be non-negative, got {r}")));
                    }
                }
                positive("walk_speed", schedule.walk_speed)?;
                positive("transport_speed", schedule.transport_speed)?;
                positive("day_length_s", schedule.day_length_s)?;
                let s = schedule;
                if !(0.0 <= s.leave_home_s
                    && s.leave_home_s <= s.leave_work_s
                    && s.leave_work_s <= s.leave_evening_s)
                {
                    return Err(invalid(
                        "departures must be ordered home <= work <= evening",
                    ));
                }
                if s.jitter_s.is_nan() || s.jitter_s < 0.0 {
                    return Err(invalid("jitter_s must be non-negative"));
                }
                Ok(())
            }
        }
    }

    /// Lays out `node_count` nodes.
    pub fn build<R: Rng + ?Sized>(
        &self,
        name: &str,
        node_count: usize,
        rng: &mut R,
    ) -> Result<Scenario, ScenarioError> {
        self.validate(node_count)?;
        let (positions, mobility) = match *self {
            MobilitySpec::StaticGrid {
                rows,
                cols,
                spacing_m,
            } => (
                static_grid(node_count, rows, cols, spacing_m)?,
                Mobility::Static,
            ),
            MobilitySpec::PoiWalk {
                width_m,
                height_m,
                lattice_spacing_m,
                poi_count,
                speed_min,
                speed_max,
                wait_min_s,
                wait_max_s,
            } => {
                let map = GridMap::lattice(width_m, height_m, lattice_spacing_m)?
                    .with_random_pois(poi_count, rng)?;
                map.check_connected()?;
                let params = PoiWalkParams {
                    speed_min,
                    speed_max,
                    wait_min: wait_min_s,
                    wait_max: wait_max_s,
                };
                // everyone starts parked at a random point of interest, part way through a visit
                let states: Vec<WaypointState> = (0..node_count)
                    .map(|_| {
                        let poi = map.pois()[rng.random_range(0..map.pois().len())];
                        let wait = if wait_max_s > 0.0 {
                            rng.random_range(0.0..=wait_max_s)
                        } else {
                            0.0
                        };
                        WaypointState::parked(&map, poi, wait)
                    })
                    .collect();
                let positions = states.iter().map(|s| s.current).collect();
                (
                    positions,
                    Mobility::PoiWalk {
                        map,
                        params,
                        states,
                    },
                )
            }
            MobilitySpec::WorkingDay {
                width_m,
                height_m,
                home_districts,
                home_radius_m,
                offices,
                office_radius_m,
                evening_spots,
                evening_radius_m,
                schedule,
            } => {
                let bounds = Bounds {
                    width: width_m,
                    height: height_m,
                };
                let mut sites = |count: usize, radius: f64| -> Vec<Position> {
                    let mx = radius.min(width_m / 2.0);
                    let my = radius.min(height_m / 2.0);
                    (0..count)
                        .map(|_| {
                            Position::new(
                                rng.random_range(mx..=width_m - mx),
                                rng.random_range(my..=height_m - my),
                            )
                        })
                        .collect()
                };
                let homes = sites(home_districts, home_radius_m);
                let works = sites(offices, office_radius_m);
                let evenings = sites(evening_spots, evening_radius_m);
                let plans: Vec<DayPlan> = (0..node_count)
                    .map(|_| {
                        let h = bounds.scatter(
                            homes[rng.random_range(0..homes.len())],
                            home_radius_m,
                            rng,
                        );
                        let o = bounds.scatter(
                            works[rng.random_range(0..works.len())],
                            office_radius_m,
                            rng,
                        );
                        let e = bounds.scatter(
                            evenings[rng.random_range(0..evenings.len())],
                            evening_radius_m,
                            rng,
                        );
                        schedule.plan(h, o, e, rng)
                    })
                    .collect();
                let positions = plans.iter().map(|p| p.position_at(0.0)).collect();
                (positions, Mobility::WorkingDay { plans })
            }
        };
        Ok(Scenario {
            name: name.to_string(),
            positions,
            mobility,
        })
    }
}
