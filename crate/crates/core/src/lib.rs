//! Time-dependent Schrödinger equation for hydrogen in intense high-frequency laser
//! pulses, with the dipole, first-order nondipole and envelope-approximation
//! interactions in the velocity and propagation gauges.

pub mod angular;
pub mod config;
pub mod error;
pub mod hamiltonian;
pub mod observables;
pub mod propagator;
pub mod pulse;
pub mod radial;
pub mod run;
pub mod table;
pub mod units;

pub use error::{Error, Result};
