//! Link-level OTFS simulation.
//!
//! The delay-Doppler chain is split into:
//!
//! - [`lattice`]: frame geometry, alphabets, index conventions;
//! - [`transforms`]: SFFT / ISFFT between delay-Doppler and time-frequency grids;
//! - [`channel`]: sparse delay-Doppler channels and the equivalent matrix `H`;
//! - [`detect`]: exhaustive ML and Gibbs-sampling detectors;
//! - [`chanest`]: PN-pilot matched-filter channel estimation;
//! - [`harness`]: seeded Monte-Carlo sweeps, configuration and CSV output.

pub mod chanest;
pub mod channel;
pub mod detect;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod transforms;

pub use error::{Error, Result};
pub use num_complex;
pub use lattice::{Alphabet, DDFrame, FrameConfig, TFFrame};
