//! Run configuration: presets, TOML files and command-line overrides.
//!
//! Resolution order, later wins: preset, file, command line. Unknown keys
//! are rejected. The resolved configuration serializes back to TOML and
//! loading that echo reproduces the same runs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use crate::battery::BatteryModelParams;
use crate::context::{NormalizationParams, StabilityWeights, SuitabilityWeights, WeightError};
use crate::domain::{MAX_CAPACITY, MIN_CAPACITY};
use crate::kernel::{scenario_rng, Scenario, SimConfig, SimError};
use crate::mobility::WorkingDaySchedule;
use crate::protocol::{ProtocolKind, ProtocolParams};
use crate::scenario::{MobilitySpec, ScenarioError};

pub const PRESETS: [&str; 6] = [
    "concert",
    "concert-small",
    "comicon",
    "comicon-small",
    "helsinki",
    "helsinki-small",
];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("unknown preset `{0}` (known: concert, concert-small, comicon, comicon-small, helsinki, helsinki-small)")]
    UnknownPreset(String),
    #[error("{0}")]
    Invalid(String),
    #[error("weights: {0}")]
    Weights(#[from] WeightError),
    #[error("scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("simulation: {0}")]
    Sim(#[from] SimError),
}

fn one_or_many<'de, D, T>(d: D) -> Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

/// WFD-GM tunables shared by every decision period of a batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolSection {
    pub res_th: f64,
    pub t_b: f64,
    pub t_b_travel: f64,
    pub p0: f64,
    /// Resources, peers, free slots, stability.
    pub weights: [f64; 4],
    /// Previous index, window mean.
    pub stability_weights: [f64; 2],
    /// Stability refresh period; follows the decision period when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_st: Option<f64>,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        let p = ProtocolParams::default();
        let sw = StabilityWeights::default();
        Self {
            res_th: p.res_th,
            t_b: p.t_b,
            t_b_travel: p.t_b_travel,
            p0: p.p0,
            weights: p.weights.as_array(),
            stability_weights: [sw.previous, sw.jaccard],
            t_st: None,
        }
    }
}

fn default_protocols() -> Vec<ProtocolKind> {
    vec![ProtocolKind::Wfdgm, ProtocolKind::Baseline]
}
fn default_t_d() -> Vec<f64> {
    vec![30.0]
}
fn default_seeds() -> Vec<u64> {
    vec![1]
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_range() -> f64 {
    100.0
}
fn default_tick() -> f64 {
    1.0
}
fn default_cap_min() -> u32 {
    MIN_CAPACITY
}
fn default_cap_max() -> u32 {
    MAX_CAPACITY
}
fn default_sample_period() -> f64 {
    30.0
}
fn default_diffusion_period() -> f64 {
    1800.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub node_count: usize,
    pub duration_s: f64,
    #[serde(default = "default_protocols", deserialize_with = "one_or_many")]
    pub protocols: Vec<ProtocolKind>,
    #[serde(default = "default_t_d", deserialize_with = "one_or_many")]
    pub t_d: Vec<f64>,
    #[serde(default = "default_seeds", deserialize_with = "one_or_many")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_range")]
    pub radio_range_m: f64,
    #[serde(default = "default_tick")]
    pub tick_s: f64,
    #[serde(default = "default_cap_min")]
    pub capacity_min: u32,
    #[serde(default = "default_cap_max")]
    pub capacity_max: u32,
    #[serde(default = "default_sample_period")]
    pub sample_period_s: f64,
    #[serde(default = "default_diffusion_period")]
    pub diffusion_period_s: f64,
    #[serde(default)]
    pub trace: bool,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub normalization: NormalizationParams,
    #[serde(default)]
    pub battery: BatteryModelParams,
    pub mobility: MobilitySpec,
}

/// Command-line values that replace whatever the preset and file say.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub preset: Option<String>,
    pub protocols: Option<Vec<ProtocolKind>>,
    pub t_d: Option<Vec<f64>>,
    pub seeds: Option<Vec<u64>>,
    pub out_dir: Option<PathBuf>,
    pub trace: bool,
}

fn base(
    preset: &str,
    node_count: usize,
    duration_s: f64,
    mobility: MobilitySpec,
) -> ScenarioConfig {
    ScenarioConfig {
        preset: Some(preset.to_string()),
        node_count,
        duration_s,
        protocols: default_protocols(),
        t_d: default_t_d(),
        seeds: default_seeds(),
        out_dir: default_out_dir(),
        radio_range_m: default_range(),
        tick_s: default_tick(),
        capacity_min: MIN_CAPACITY,
        capacity_max: MAX_CAPACITY,
        sample_period_s: default_sample_period(),
        diffusion_period_s: default_diffusion_period(),
        trace: false,
        protocol: ProtocolSection::default(),
        normalization: NormalizationParams::default(),
        battery: BatteryModelParams::default(),
        mobility,
    }
}

const HOUR: f64 = 3600.0;

/// Built-in scenario by name.
pub fn preset(name: &str) -> Result<ScenarioConfig, ConfigError> {
    let cfg = match name {
        // 1000 seats; 40 x 25 at 0.7 m covers roughly 500 m^2
        "concert" => base(
            name,
            1000,
            3.0 * HOUR,
            MobilitySpec::StaticGrid {
                rows: 25,
                cols: 40,
                spacing_m: 0.7,
            },
        ),
        "concert-small" => base(
            name,
            200,
            3.0 * HOUR,
            MobilitySpec::StaticGrid {
                rows: 10,
                cols: 20,
                spacing_m: 1.0,
            },
        ),
        "comicon" => base(name, 2000, 4.0 * HOUR, poi_walk(4000.0, 2000.0, 575)),
        "comicon-small" => base(name, 200, 2.0 * HOUR, poi_walk(800.0, 400.0, 60)),
        "helsinki" => base(
            name,
            4000,
            24.0 * HOUR,
            working_day(
                400,
                200,
                120,
                WorkingDaySchedule {
                    day_length_s: 24.0 * HOUR,
                    leave_home_s: 8.0 * HOUR,
                    leave_work_s: 17.0 * HOUR,
                    leave_evening_s: 21.0 * HOUR,
                    jitter_s: 1800.0,
                    ..WorkingDaySchedule::default()
                },
            ),
        ),
        "helsinki-small" => base(
            name,
            200,
            8.0 * HOUR,
            working_day(20, 10, 6, WorkingDaySchedule::default()),
        ),
        other => return Err(ConfigError::UnknownPreset(other.to_string())),
    };
    Ok(cfg)
}

fn poi_walk(width_m: f64, height_m: f64, poi_count: usize) -> MobilitySpec {
    MobilitySpec::PoiWalk {
        width_m,
        height_m,
        lattice_spacing_m: 20.0,
        poi_count,
        speed_min: 0.0,
        speed_max: 1.5,
        wait_min_s: 600.0,
        wait_max_s: 3600.0,
    }
}

fn working_day(
    homes: usize,
    offices: usize,
    evening: usize,
    schedule: WorkingDaySchedule,
) -> MobilitySpec {
    MobilitySpec::WorkingDay {
        width_m: 4500.0,
        height_m: 3400.0,
        home_districts: homes,
        home_radius_m: 50.0,
        offices,
        office_radius_m: 40.0,
        evening_spots: evening,
        evening_radius_m: 30.0,
        schedule,
    }
}

/// Recursive table merge. A `mobility` table with a different `kind`
/// replaces the old one instead of mixing fields of two models.
fn merge(into: &mut toml::Table, from: toml::Table) {
    for (k, v) in from {
        match (into.get_mut(&k), v) {
            (Some(toml::Value::Table(dst)), toml::Value::Table(src))
                if !(k == "mobility"
                    && src
                        .get("kind")
                        .is_some_and(|kind| Some(kind) != dst.get("kind"))) =>
            {
                merge(dst, src);
            }
            (_, v) => {
                into.insert(k, v);
            }
        }
    }
}

impl ScenarioConfig {
    /// Resolves a parsed file (or nothing) plus overrides into a validated config.
    pub fn resolve(file: Option<toml::Table>, overrides: &Overrides) -> Result<Self, ConfigError> {
        let file = file.unwrap_or_default();
        let preset_name = match (&overrides.preset, file.get("preset")) {
            (Some(p), _) => Some(p.clone()),
            (None, Some(toml::Value::String(p))) => Some(p.clone()),
            (None, Some(other)) => {
                return Err(ConfigError::Parse(format!(
                    "preset must be a string, got {other}"
                )))
            }
            (None, None) => None,
        };
        let mut table = match &preset_name {
            Some(name) => {
                let p = preset(name)?;
                toml::Table::try_from(&p).map_err(|e| ConfigError::Parse(e.to_string()))?
            }
            None => toml::Table::new(),
        };
        merge(&mut table, file);
        if let Some(name) = &preset_name {
            table.insert("preset".into(), toml::Value::String(name.clone()));
        }
        let mut cfg: ScenarioConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        if let Some(p) = &overrides.protocols {
            cfg.protocols.clone_from(p);
        }
        if let Some(t) = &overrides.t_d {
            cfg.t_d.clone_from(t);
        }
        if let Some(s) = &overrides.seeds {
            cfg.seeds.clone_from(s);
        }
        if let Some(o) = &overrides.out_dir {
            cfg.out_dir.clone_from(o);
        }
        cfg.trace |= overrides.trace;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str, overrides: &Overrides) -> Result<Self, ConfigError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        Self::resolve(Some(table), overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    /// Label used in summaries.
    pub fn scenario_name(&self) -> &str {
        self.preset.as_deref().unwrap_or("custom")
    }

    pub fn protocol_params(&self, t_d: f64) -> Result<ProtocolParams, ConfigError> {
        let p = &self.protocol;
        let params = ProtocolParams {
            t_d,
            res_th: p.res_th,
            t_b: p.t_b,
            t_b_travel: p.t_b_travel,
            p0: p.p0,
            weights: SuitabilityWeights::from_array(p.weights)?,
            stability_weights: StabilityWeights::new(
                p.stability_weights[0],
                p.stability_weights[1],
            )?,
            norm: self.normalization,
            t_st: p.t_st.unwrap_or(t_d),
        };
        params
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("protocol: {e}")))?;
        Ok(params)
    }

    pub fn sim_config(&self, t_d: f64, seed: u64) -> SimConfig {
        SimConfig {
            duration_s: self.duration_s,
            tick_s: self.tick_s,
            t_d,
            radio_range_m: self.radio_range_m,
            seed,
            node_count: self.node_count,
            capacity_min: self.capacity_min,
            capacity_max: self.capacity_max,
            sample_period_s: self.sample_period_s,
            diffusion_period_s: self.diffusion_period_s,
            battery: self.battery,
            trace: self.trace,
            check_invariants: self.trace || cfg!(debug_assertions),
        }
    }

    pub fn build_scenario(&self, seed: u64) -> Result<Scenario, ScenarioError> {
        self.mobility.build(
            self.scenario_name(),
            self.node_count,
            &mut scenario_rng(seed),
        )
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.node_count == 0 {
            return Err(ConfigError::Invalid("node_count must be positive".into()));
        }
        if self.protocols.is_empty() || self.t_d.is_empty() || self.seeds.is_empty() {
            return Err(ConfigError::Invalid(
                "protocols, t_d and seeds must each list at least one value".into(),
            ));
        }
        for &t_d in &self.t_d {
            self.protocol_params(t_d)?;
            self.sim_config(t_d, 0).validate()?;
        }
        self.mobility.validate(self.node_count)?;
        Ok(())
    }
}

/// Reads and resolves a configuration file.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ScenarioConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ScenarioConfig::from_toml_str(&text, overrides)
}
