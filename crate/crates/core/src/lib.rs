//! Simulation and steady-state analysis of adaptive traders choosing between
//! two double-auction markets.
//!
//! Traders score returns per round, keep exponentially weighted attractions
//! to each market (memory length 1/r) and pick a venue through a softmax with
//! intensity of choice beta. The crate provides
//!
//! - closed-form model primitives ([`model`]),
//! - deterministic two- and four-trader dynamics ([`small_n`]),
//! - the single-group Fokker-Planck steady state with free-energy
//!   classification into unfragmented / weakly / strongly fragmented states
//!   ([`fokker_planck`]),
//! - self-consistent market order parameters for one- and two-group
//!   populations, phase diagrams and average returns ([`steady_state`]),
//! - a finite-N stochastic market simulation ([`abm`]).

pub mod abm;
pub mod error;
pub mod fokker_planck;
pub mod math;
pub mod model;
pub mod small_n;
pub mod steady_state;

pub use error::{Error, Result};
