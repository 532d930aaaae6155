//! Cellular evolutionary algorithm built around centric selection.
//!
//! The population lives on a toroidal grid and every cell mates within its
//! Von Neumann neighborhood. A single parameter β, the probability of drawing
//! the center cell as a tournament candidate, tunes selective pressure.
//! Besides the engine the crate provides takeover experiments, analytics for
//! improvement probabilities per mating type, QAP and NK landscape backends
//! and β sweep recipes.

pub mod engine;
pub mod equilibrium;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod pem;
pub mod problems;
pub mod rng;
pub mod selection;
pub mod stats;

pub use error::{Error, Result};
