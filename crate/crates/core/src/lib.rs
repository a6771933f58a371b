//! Simulation and estimation toolkit for the reduction of multi-target
//! detection to Markovian multi-reference alignment.
//!
//! * [`mtd_sim`] synthesises 1D and 2D measurements and their patches.
//! * [`markov1d`] holds the exact law of the 1D latent chain.
//! * [`hardcore2d`] samples the hard-core placement model and the 2D latent field.
//! * [`mra`] is the forward model and its population moments.
//! * [`estimators`] runs empirical moments, MSE experiments and recovery.

pub mod error;
pub mod estimators;
pub mod hardcore2d;
pub mod io;
pub mod markov1d;
pub mod mra;
pub mod mtd_sim;
pub mod rng;
pub mod stats;
pub mod types;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use rng::{derive_stream, SeedSpec, StreamRng};
pub use types::{
    validate_padded_1d, validate_padded_2d, GroupElement1D, GroupElement2D, NoiseSpec,
    PaddedSignal1D, PaddedSignal2D, Shift2, Signal1D, Signal2D,
};
