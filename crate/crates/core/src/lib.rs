//! Agent-based simulation of preemptive household evacuation decisions
//! during a typhoon.
//!
//! The crate is organised bottom-up:
//!
//! * [`geo`] loads the spatial world (roads, buildings, waterways, shelters)
//!   and answers routing and hazard-proximity queries.
//! * [`population`] synthesizes or loads coded household profiles.
//! * [`risk`] holds the perceived-risk arithmetic and the evacuate/stay rule.
//! * [`engine`] runs the discrete-time simulation of rescuers, households
//!   and shelter managers.
//! * [`sweep`] enumerates the experiment grid and executes replications.
//! * [`stats`] fits least-squares sensitivity models to sweep output.
//! * [`demo`] writes a synthetic demo village and default input files.

pub mod codes;
pub mod demo;
pub mod engine;
mod error;
pub mod geo;
pub mod kv;
pub mod population;
pub mod risk;
pub mod stats;
pub mod sweep;

pub use error::{Error, Result};
