//! Simulation of WiFi-Direct-style group formation in crowds.
//!
//! Two group management protocols run on the same deterministic kernel:
//! WFD-GM, which elects owners by a suitability index and keeps groups
//! churning through merges and travelling clients, and a highest-MAC
//! baseline that forms static groups. Scenarios cover a seated concert,
//! a convention floor with points of interest and a city working day.
//!
//! ```no_run
//! use wfdgm::config::{Overrides, ScenarioConfig};
//! use wfdgm::batch::{run_one, RunSpec};
//! use wfdgm::protocol::ProtocolKind;
//!
//! let o = Overrides { preset: Some("concert-small".into()), ..Default::default() };
//! let cfg = ScenarioConfig::resolve(None, &o).unwrap();
//! let r = run_one(&cfg, RunSpec { protocol: ProtocolKind::Wfdgm, t_d: 30.0, seed: 1 }).unwrap();
//! println!("{} components", r.components.count());
//! ```

pub mod batch;
pub mod battery;
pub mod config;
pub mod context;
pub mod domain;
pub mod kernel;
pub mod link;
pub mod metrics;
pub mod mobility;
pub mod output;
pub mod protocol;
pub mod proximity;
pub mod scenario;
pub mod trace;

pub use batch::{run_batch, run_one, RunSpec};
pub use config::{load_config, Overrides, ScenarioConfig};
pub use domain::NodeId;
pub use kernel::{run, RunResult, SimConfig, Simulator};
pub use protocol::ProtocolKind;
