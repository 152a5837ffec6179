//! Truck parking-lot occupancy workbench.
//!
//! The pipeline is: [`sim`] produces ground-truth parking events,
//! [`observe`] thins them to what an app with penetration `p` would see,
//! [`estimate`] turns the sparse observations into online state labels
//! (empty / slightly filled / full), and [`eval`] scores the detected state
//! transitions against the true ones. [`io`] reads and writes every
//! artifact, and [`experiment`] wires it all together.

pub mod error;
pub mod estimate;
pub mod eval;
pub mod experiment;
pub mod io;
pub mod observe;
pub mod scenario;
pub mod series;
pub mod sim;

pub use error::{ConfigError, Error, Result};
