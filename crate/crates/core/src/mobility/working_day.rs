//! Three-phase daily routine: home, office, evening spot, with straight-line
//! commutes in between. Each node's plan is fixed at setup, so positions
//! are a pure function of time.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Position;

/// Population-wide routine. Times are seconds from the start of each day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkingDaySchedule {
    pub day_length_s: f64,
    pub leave_home_s: f64,
    pub leave_work_s: f64,
    pub leave_evening_s: f64,
    /// Each departure is shifted by U[-jitter, +jitter] per node.
    pub jitter_s: f64,
    pub walk_speed: f64,
    pub transport_speed: f64,
    /// Legs up to this length are walked.
    pub walk_threshold_m: f64,
}

impl Default for WorkingDaySchedule {
    fn default() -> Self {
        Self {
            day_length_s: 8.0 * 3600.0,
            leave_home_s: 0.5 * 3600.0,
            leave_work_s: 4.5 * 3600.0,
            leave_evening_s: 6.5 * 3600.0,
            jitter_s: 900.0,
            walk_speed: 1.4,
            transport_speed: 10.0,
            walk_threshold_m: 1000.0,
        }
    }
}

impl WorkingDaySchedule {
    pub fn speed_for(&self, distance: f64) -> f64 {
        if distance <= self.walk_threshold_m {
            self.walk_speed
        } else {
            self.transport_speed
        }
    }

    /// Draws one node's jittered departures.
    pub fn plan<R: Rng + ?Sized>(
        &self,
        home: Position,
        office: Position,
        evening: Position,
        rng: &mut R,
    ) -> DayPlan {
        let mut jitter = || {
            if self.jitter_s > 0.0 {
                rng.random_range(-self.jitter_s..=self.jitter_s)
            } else {
                0.0
            }
        };
        let departures = [
            (self.leave_home_s + jitter()).max(0.0),
            self.leave_work_s + jitter(),
            self.leave_evening_s + jitter(),
        ];
        DayPlan::new([home, office, evening], departures, self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DayPhase {
    Home,
    Commute,
    Work,
    Evening,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Leg {
    from: Position,
    to: Position,
    depart: f64,
    arrive: f64,
}

impl Leg {
    fn position_at(&self, t: f64) -> Position {
        let span = self.arrive - self.depart;
        if span <= 0.0 {
            return self.to;
        }
        self.from
            .lerp(&self.to, ((t - self.depart) / span).clamp(0.0, 1.0))
    }
}

/// One node's resolved day.
#[derive(Debug, Clone, PartialEq)]
pub struct DayPlan {
    pub home: Position,
    pub office: Position,
    pub evening: Position,
    day_length: f64,
    legs: [Leg; 3],
    speeds: [f64; 3],
}

impl DayPlan {
    /// `departures` are the nominal leave times from home, office and evening
    /// spot. A node never leaves a place before it has reached it.
    pub fn new(places: [Position; 3], departures: [f64; 3], schedule: &WorkingDaySchedule) -> Self {
        let [home, office, evening] = places;
        let stops = [(home, office), (office, evening), (evening, home)];
        let mut legs = [Leg {
            from: home,
            to: home,
            depart: 0.0,
            arrive: 0.0,
        }; 3];
        let mut speeds = [0.0; 3];
        let mut ready = 0.0f64;
        for (i, &(from, to)) in stops.iter().enumerate() {
            let d = from.distance(&to);
            let v = schedule.speed_for(d);
            let depart = departures[i].max(ready);
            let arrive = depart + if d > 0.0 { d / v } else { 0.0 };
            legs[i] = Leg {
                from,
                to,
                depart,
                arrive,
            };
            speeds[i] = if d > 0.0 { v } else { 0.0 };
            ready = arrive;
        }
        Self {
            home,
            office,
            evening,
            day_length: schedule.day_length_s,
            legs,
            speeds,
        }
    }

    fn day_time(&self, t: f64) -> f64 {
        if self.day_length > 0.0 {
            t.rem_euclid(self.day_length)
        } else {
            t
        }
    }

    pub fn position_at(&self, t: f64) -> Position {
        let t = self.day_time(t);
        let [a, b, c] = &self.legs;
        if t < a.depart {
            self.home
        } else if t < a.arrive {
            a.position_at(t)
        } else if t < b.depart {
            self.office
        } else if t < b.arrive {
            b.position_at(t)
        } else if t < c.depart {
            self.evening
        } else if t < c.arrive {
            c.position_at(t)
        } else {
            self.home
        }
    }

    pub fn phase_at(&self, t: f64) -> DayPhase {
        let t = self.day_time(t);
        let [a, b, c] = &self.legs;
        if t < a.depart || t >= c.arrive {
            DayPhase::Home
        } else if t < a.arrive || (t >= b.depart && t < b.arrive) || (t >= c.depart && t < c.arrive)
        {
            DayPhase::Commute
        } else if t < b.depart {
            DayPhase::Work
        } else {
            DayPhase::Evening
        }
    }

    /// Arrival time at the office, seconds into the day.
    pub fn office_arrival(&self) -> f64 {
        self.legs[0].arrive
    }

    pub fn max_speed(&self) -> f64 {
        self.speeds.iter().copied().fold(0.0, f64::max)
    }
}

/// Position of a node at `now + dt`.
pub fn working_day_step(plan: &DayPlan, now: f64, dt: f64) -> Position {
    plan.position_at(now + dt)
}
