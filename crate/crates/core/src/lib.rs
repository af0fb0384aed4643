//! Free-induction-decay simulation for small J-coupled spin-1/2 systems.
//!
//! The crate simulates the transverse magnetization of a three-fluorine
//! spin system (or any register of up to four spins) after a selective
//! `pi/2` pulse, ensemble-averaged over static longitudinal noise, and
//! provides the matching closed-form results for thermal and pseudo-pure
//! initial states.

pub mod analytic;
pub mod config;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod hamiltonians;
pub mod noise;
pub mod spin_algebra;
pub mod state_prep;
pub mod validate;

pub use error::{FidError, Result};
