//! Packet latency accounting.
//!
//! A packet of `n` frames sends the first `i` frames uncompressed on the
//! fine-tuning path (uplink + downlink + fine-tuning time) and the remaining
//! `n - i` frames compressed (uplink + downlink + inference time).

use thiserror::Error;

/// Stated end-to-end requirement on packet latency, milliseconds.
pub const LATENCY_REQUIREMENT_MS: f64 = 100.0;

#[derive(Debug, Error, PartialEq)]
pub enum LatencyError {
    #[error("invalid latency field {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("finetune_frames {i} exceeds frames_per_packet {n}")]
    FinetuneExceedsPacket { i: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyParams {
    /// Uncompressed-path components, milliseconds.
    pub l_up: f64,
    pub l_down: f64,
    pub l_ft: f64,
    /// Compressed-path components, milliseconds.
    pub lhat_up: f64,
    pub lhat_down: f64,
    pub lhat_inf: f64,
    /// Frames per packet (n).
    pub frames_per_packet: usize,
    /// Leading frames sent uncompressed for fine-tuning (i).
    pub finetune_frames: usize,
}

impl Default for LatencyParams {
    fn default() -> Self {
        LatencyParams {
            l_up: 2.5,
            l_down: 2.0,
            l_ft: 1.09,
            lhat_up: 0.8,
            lhat_down: 0.5,
            lhat_inf: 0.3,
            frames_per_packet: 10,
            finetune_frames: 1,
        }
    }
}

impl LatencyParams {
    pub fn validate(&self) -> Result<(), LatencyError> {
        for (field, v) in [
            ("L_up", self.l_up),
            ("L_down", self.l_down),
            ("L_ft", self.l_ft),
            ("Lhat_up", self.lhat_up),
            ("Lhat_down", self.lhat_down),
            ("Lhat_inf", self.lhat_inf),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(LatencyError::Invalid {
                    field,
                    reason: format!("must be >= 0 and finite, got {v}"),
                });
            }
        }
        if self.finetune_frames > self.frames_per_packet {
            return Err(LatencyError::FinetuneExceedsPacket {
                i: self.finetune_frames,
                n: self.frames_per_packet,
            });
        }
        Ok(())
    }

    /// Per-frame latency on the uncompressed fine-tuning path, ms.
    pub fn uncompressed_ms(&self) -> f64 {
        self.l_up + self.l_down + self.l_ft
    }

    /// Per-frame latency on the compressed path, ms.
    pub fn compressed_ms(&self) -> f64 {
        self.lhat_up + self.lhat_down + self.lhat_inf
    }
}

/// Total packet latency: i * L + (n - i) * Lhat, milliseconds.
pub fn packet_latency(p: &LatencyParams) -> Result<f64, LatencyError> {
    p.validate()?;
    let i = p.finetune_frames as f64;
    let n = p.frames_per_packet as f64;
    Ok(i * p.uncompressed_ms() + (n - i) * p.compressed_ms())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyRow {
    pub n: usize,
    pub i: usize,
    pub l_ms: f64,
    pub lhat_ms: f64,
    pub total_ms: f64,
    pub under_100ms: bool,
}

/// Latency table for a list of configurations; totals above the 100 ms
/// requirement are flagged.
pub fn latency_report(scenarios: &[LatencyParams]) -> Result<Vec<LatencyRow>, LatencyError> {
    scenarios
        .iter()
        .map(|p| {
            let total = packet_latency(p)?;
            Ok(LatencyRow {
                n: p.frames_per_packet,
                i: p.finetune_frames,
                l_ms: p.uncompressed_ms(),
                lhat_ms: p.compressed_ms(),
                total_ms: total,
                under_100ms: total <= LATENCY_REQUIREMENT_MS,
            })
        })
        .collect()
}
