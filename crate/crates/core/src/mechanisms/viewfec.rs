//! Per-GoP redundancy of the view-aware scheme: anchors get parity in
//! proportion to their size, scaled by a motion weight and divided by their
//! rank in the GoP.

use serde::{Deserialize, Serialize};

use super::MechanismError;
use crate::motion::IntensityClass;
use crate::video::{packetize, FrameRecord, FrameType, GopLayout};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ViewFecParams {
    /// Per-type gates (I, P, B), each in [0, 1].
    pub gamma: [f64; 3],
    /// Motion weight C per class (Low, Medium, High), each in (0, 1].
    pub alpha: [f64; 3],
    /// Payload bytes per packet, for frame sizes in packets.
    pub payload_bytes: usize,
}

impl Default for ViewFecParams {
    fn default() -> Self {
        Self {
            gamma: [1.0, 1.0, 0.0],
            alpha: [0.25, 0.5, 1.0],
            payload_bytes: 1000,
        }
    }
}

impl ViewFecParams {
    /// Two-class weighting: Medium and High share the full weight.
    pub fn two_class() -> Self {
        Self {
            alpha: [0.5, 1.0, 1.0],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), MechanismError> {
        if let Some(g) = self.gamma.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(MechanismError::BadParam(format!("gamma {g} outside [0, 1]")));
        }
        if let Some(a) = self.alpha.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
            return Err(MechanismError::BadParam(format!("alpha {a} outside (0, 1]")));
        }
        if self.payload_bytes == 0 {
            return Err(MechanismError::BadParam("payload_bytes must be positive".into()));
        }
        Ok(())
    }

    pub fn gate(&self, kind: FrameType) -> f64 {
        self.gamma[kind.code() as usize]
    }

    pub fn weight(&self, class: IntensityClass) -> f64 {
        self.alpha[class.severity()]
    }
}

/// Rank of a frame in its GoP: 1 for the I-frame, 2, 3, … for successive
/// P-frames; a B-frame takes the rank of the anchor before it.
pub fn rank_in_gop(offset: usize, layout: &GopLayout) -> u32 {
    1 + ((offset % layout.n_ratio) / layout.m_ratio) as u32
}

/// Parity packets per source packet for one frame: `γ × C / RP`.
pub fn viewfec_frame_ratio(kind: FrameType, rank: u32, params: &ViewFecParams, c_gop: f64) -> f64 {
    params.gate(kind) * c_gop / f64::from(rank)
}

/// Parity packets for one GoP: the sum over its frames of the frame size in
/// packets times the frame's ratio.
pub fn viewfec_gop_redundancy(frames: &[FrameRecord], layout: &GopLayout, params: &ViewFecParams, c_gop: f64) -> f64 {
    frames
        .iter()
        .enumerate()
        .map(|(offset, f)| {
            let fs = packetize(f, params.payload_bytes) as f64;
            fs * viewfec_frame_ratio(f.kind, rank_in_gop(offset, layout), params, c_gop)
        })
        .sum()
}

/// Mean redundancy over GoPs.
pub fn average_redundancy(per_gop: &[f64]) -> Result<f64, MechanismError> {
    if per_gop.is_empty() {
        return Err(MechanismError::Empty);
    }
    Ok(per_gop.iter().sum::<f64>() / per_gop.len() as f64)
}
