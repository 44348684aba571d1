//! Per-frame random streams.
//!
//! Each `(master seed, stream, frame)` triple keys its own ChaCha8 generator,
//! so a frame's draws never depend on which worker ran it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purposes a frame draws randomness for. Streams are shared across SNR
/// points and curves, so every point sees the same channels, bits and noise
/// shapes (common random numbers).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Channel = 1,
    Bits = 2,
    Noise = 3,
    Detector = 4,
    Pilot = 5,
}

pub type FrameRng = ChaCha8Rng;

/// Generator keyed by the full triple; distinct triples give distinct keys.
pub fn derive_frame_rng(master_seed: u64, stream_id: u64, frame_idx: u64) -> FrameRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream_id.to_le_bytes());
    key[16..24].copy_from_slice(&frame_idx.to_le_bytes());
    key[24..].copy_from_slice(b"otfs-rng");
    ChaCha8Rng::from_seed(key)
}

pub fn frame_rng(master_seed: u64, stream: Stream, frame_idx: u64) -> FrameRng {
    derive_frame_rng(master_seed, stream as u64, frame_idx)
}
