//! Particle simulation of coupled opinion and popularity dynamics under
//! feedback controls.
//!
//! Each agent carries an opinion `v` in `[-1, 1]` and a contact count `c > 0`.
//! Contacts relax toward a reference level, are penalized for opinions far
//! from the population mean, and can be boosted by a contact control.
//! Opinions move by bounded-confidence compromise weighted by relative
//! popularity, with diffusion and an optional steering control. The
//! [`engine`] advances an ensemble with a Nanbu-type pairing scheme;
//! [`oracles`] holds independent checks of its steady states and controls.

pub mod config;
pub mod control;
pub mod engine;
pub mod model;
pub mod oracles;
pub mod output;
pub mod rng;
pub mod stats;

pub use config::{preset, ConfigError, ScenarioConfig};
pub use engine::{run, run_with_threads, Engine, EngineError, RunResult};
