//! Result records and their CSV form.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{invalid, Result};

pub const BER_HEADER: &str = "snr_db,doppler_hz,detector,csi,n_p,frames,bits,bit_errors,ber,h_err_f_mean,wall_s,seed";
pub const EST_ERROR_HEADER: &str = "pilot_snr_db,doppler_hz,n_p,draws,h_err_f_mean,h_norm_f_mean,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiMode {
    Perfect,
    Estimated,
}

impl CsiMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Perfect => "perfect",
            Self::Estimated => "estimated",
        }
    }
}

/// One BER point.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub snr_db: f64,
    pub doppler_hz: f64,
    pub detector: String,
    pub csi: CsiMode,
    pub n_p: Option<usize>,
    pub frames: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    /// Mean `||H - H_e||_F` over the point's frames (estimated CSI only).
    pub h_err_f_mean: Option<f64>,
    pub wall_s: f64,
    pub seed: u64,
    /// Reached the error target before the frame cap.
    pub converged: bool,
}

/// One estimation-error point.
#[derive(Debug, Clone, PartialEq)]
pub struct EstErrorRecord {
    pub pilot_snr_db: f64,
    pub doppler_hz: f64,
    pub n_p: usize,
    pub draws: u64,
    pub h_err_f_mean: f64,
    /// Mean `||H||_F` over the same draws, for relative errors.
    pub h_norm_f_mean: f64,
    pub seed: u64,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl BerRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.snr_db,
            self.doppler_hz,
            self.detector,
            self.csi.as_str(),
            opt(self.n_p),
            self.frames,
            self.bits,
            self.bit_errors,
            self.ber,
            opt(self.h_err_f_mean),
            self.wall_s,
            self.seed
        )
    }
}

impl EstErrorRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.pilot_snr_db,
            self.doppler_hz,
            self.n_p,
            self.draws,
            self.h_err_f_mean,
            self.h_norm_f_mean,
            self.seed
        )
    }
}

/// Renders BER records; refuses empty data points.
pub fn ber_csv(records: &[BerRecord]) -> Result<String> {
    let mut out = String::from(BER_HEADER);
    out.push('\n');
    for r in records {
        if r.frames == 0 || r.bits == 0 {
            return invalid(format!("refusing to write a point with no frames (snr {} dB)", r.snr_db));
        }
        writeln!(out, "{}", r.csv_row()).unwrap();
    }
    Ok(out)
}

pub fn est_error_csv(records: &[EstErrorRecord]) -> Result<String> {
    let mut out = String::from(EST_ERROR_HEADER);
    out.push('\n');
    for r in records {
        if r.draws == 0 {
            return invalid(format!("refusing to write a point with no draws (pilot snr {} dB)", r.pilot_snr_db));
        }
        writeln!(out, "{}", r.csv_row()).unwrap();
    }
    Ok(out)
}

pub fn emit_csv(records: &[BerRecord], path: impl AsRef<Path>) -> Result<()> {
    let text = ber_csv(records)?;
    fs::File::create(path)?.write_all(text.as_bytes())?;
    Ok(())
}

pub fn emit_est_error_csv(records: &[EstErrorRecord], path: impl AsRef<Path>) -> Result<()> {
    let text = est_error_csv(records)?;
    fs::File::create(path)?.write_all(text.as_bytes())?;
    Ok(())
}
