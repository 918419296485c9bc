//! Linear battery depletion fitted per role.
//!
//! Levels are fractions of a full charge. A group owner with `n` clients
//! drains at `p1_go * n + p2_go` per hour, a client at
//! `p1_client * client_n + p2_client`, and a node outside any group at
//! `idle_rate`. All constants are negative rates except `idle_rate`, which
//! is a positive fraction per hour.

use serde::{Deserialize, Serialize};

const SECONDS_PER_HOUR: f64 = 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryModelParams {
    pub p1_go: f64,
    pub p2_go: f64,
    pub p1_client: f64,
    pub p2_client: f64,
    /// Fraction of capacity lost per hour while ungrouped.
    pub idle_rate: f64,
    /// Group-size factor used for client drain.
    pub client_n: f64,
}

impl Default for BatteryModelParams {
    fn default() -> Self {
        Self {
            p1_go: -0.006802,
            p2_go: -0.03356,
            p1_client: -0.003365,
            p2_client: -0.04075,
            idle_rate: 0.04,
            client_n: 1.0,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BatteryParamError {
    #[error("battery slope for {role} with n={n} is {slope}, which would charge the battery")]
    PositiveSlope {
        role: &'static str,
        n: u32,
        slope: f64,
    },
    #[error("idle rate must be non-negative and finite, got {0}")]
    IdleRate(f64),
}

/// Load a node places on its battery during one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatteryLoad {
    Idle,
    Owner { clients: u32 },
    Client,
}

impl BatteryModelParams {
    /// Signed change in level per hour (never positive for valid params).
    pub fn slope_per_hour(&self, load: BatteryLoad) -> f64 {
        match load {
            BatteryLoad::Idle | BatteryLoad::Owner { clients: 0 } => -self.idle_rate,
            BatteryLoad::Owner { clients } => self.p1_go * clients as f64 + self.p2_go,
            BatteryLoad::Client => self.p1_client * self.client_n + self.p2_client,
        }
    }

    /// Checks every slope a group of up to `max_clients` can produce.
    pub fn validate(&self, max_clients: u32) -> Result<(), BatteryParamError> {
        if !self.idle_rate.is_finite() || self.idle_rate < 0.0 {
            return Err(BatteryParamError::IdleRate(self.idle_rate));
        }
        let client = self.slope_per_hour(BatteryLoad::Client);
        if client > 0.0 {
            return Err(BatteryParamError::PositiveSlope {
                role: "client",
                n: 1,
                slope: client,
            });
        }
        for n in 1..=max_clients {
            let s = self.slope_per_hour(BatteryLoad::Owner { clients: n });
            if s > 0.0 {
                return Err(BatteryParamError::PositiveSlope {
                    role: "group owner",
                    n,
                    slope: s,
                });
            }
        }
        Ok(())
    }

    /// Closed-form level after `hours` under a constant load.
    pub fn level_after(&self, load: BatteryLoad, hours: f64) -> f64 {
        (1.0 + hours * self.slope_per_hour(load)).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryState {
    level: f64,
}

impl Default for BatteryState {
    fn default() -> Self {
        Self::full()
    }
}

impl BatteryState {
    pub fn full() -> Self {
        Self { level: 1.0 }
    }

    pub fn with_level(level: f64) -> Self {
        Self {
            level: level.clamp(0.0, 1.0),
        }
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn is_depleted(&self) -> bool {
        self.level <= 0.0
    }

    /// Integrates `dt` seconds of `load`. The level never rises and stops
    /// at zero.
    pub fn update(&mut self, load: BatteryLoad, dt: f64, params: &BatteryModelParams) {
        debug_assert!(dt > 0.0);
        let delta = params.slope_per_hour(load).min(0.0) * dt / SECONDS_PER_HOUR;
        self.level = (self.level + delta).max(0.0);
    }
}
