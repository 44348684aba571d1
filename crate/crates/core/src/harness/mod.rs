//! Experiment orchestration: configuration, seeded sweeps, CSV output.

pub mod config;
pub mod records;
pub mod rng;
pub mod selftest;
pub mod sweep;

pub use config::{ExperimentConfig, Modulation, PilotGridKind};
pub use records::{
    ber_csv, emit_csv, emit_est_error_csv, est_error_csv, BerRecord, CsiMode, EstErrorRecord, BER_HEADER,
    EST_ERROR_HEADER,
};
pub use rng::{derive_frame_rng, frame_rng, FrameRng, Stream};
pub use selftest::{run_selftest, SelfCheck};
pub use sweep::{run_ber_sweep, run_estimated_csi_sweep, run_estimation_error_sweep, RunOptions};
