//! Motion planning for a two-wheeled drone that can both drive and fly.
//!
//! The crate bundles the hybrid contact dynamics of the vehicle, a
//! mode-switching MPPI planner whose samples are partly seeded by an
//! auxiliary position controller, an attitude-tracking torque law, and a
//! closed-loop simulator with CSV/JSON logging.

pub mod cli;
pub mod config;
pub mod controllers;
pub mod dynamics;
pub mod environment;
pub mod error;
pub mod planner;
pub mod simulator;

pub use error::{Error, Result};
