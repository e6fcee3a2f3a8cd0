//! Performance model of a two-hop LEO relay (source satellite → relay
//! satellite → ground station) with a finite relay buffer, priority-based
//! medium access and weather-dependent hybrid RF/laser downlinks.
//!
//! * [`link_budget`]: Shannon capacities from SNR or a free-space budget.
//! * [`markov_chain`]: embedded chain for laser downlinks (rain, thin cloud).
//! * [`fluid_rf`]: fluid buffer model for RF downlinks (fog, thin cloud).
//! * [`weather`]: per-weather composition and the weather mix.
//! * [`simulator`]: Monte Carlo slot simulator and fluid replay used as
//!   independent checks.
//! * [`cli`]: configuration, analysis, sweeps, validation and output.

pub mod cli;
pub mod error;
pub mod fluid_rf;
pub mod link_budget;
pub mod markov_chain;
pub mod simulator;
pub mod weather;

pub use error::{Error, Result};
pub use fluid_rf::FluidParams;
pub use link_budget::LinkPhysical;
pub use markov_chain::{LaserChainParams, PerfTriple, StationaryDistribution};
pub use simulator::{SimConfig, SimResult};
pub use weather::{WeatherScenario, WeatherWeights};
