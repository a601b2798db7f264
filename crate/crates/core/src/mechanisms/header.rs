//! Five-byte hop-by-hop option carrying the video classes a relay needs to
//! recompute protection.
//!
//! | byte | content                                                      |
//! |------|--------------------------------------------------------------|
//! | 0    | version (1)                                                  |
//! | 1    | frame type (bits 7-6), motion (5-4), spatial (3-2), temporal (1-0) |
//! | 2-4  | normalised I, P, B sizes as `round(nhat × 255)`              |

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motion::IntensityClass;
use crate::video::FrameType;

pub const HEADER_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum HeaderError {
    #[error("unsupported header version {0}")]
    BadVersion(u8),
    #[error("header needs {HEADER_LEN} bytes, got {0}")]
    Truncated(usize),
    #[error("field {field} holds invalid value {value}")]
    BadField { field: &'static str, value: u8 },
    #[error("size fraction {0} outside [0, 1]")]
    BadFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopHeader {
    pub frame_type: FrameType,
    pub motion_class: IntensityClass,
    pub spatial_class: IntensityClass,
    pub temporal_class: IntensityClass,
    /// Normalised mean I, P and B sizes.
    pub nhat: [f64; 3],
}

fn quantize(x: f64) -> Result<u8, HeaderError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(HeaderError::BadFraction(x));
    }
    Ok((x * 255.0).round() as u8)
}

fn class(field: &'static str, bits: u8) -> Result<IntensityClass, HeaderError> {
    IntensityClass::from_severity(bits as usize).ok_or(HeaderError::BadField { field, value: bits })
}

impl HopHeader {
    pub fn encode(&self) -> Result<[u8; HEADER_LEN], HeaderError> {
        let classes = (self.frame_type.code() << 6)
            | ((self.motion_class.severity() as u8) << 4)
            | ((self.spatial_class.severity() as u8) << 2)
            | self.temporal_class.severity() as u8;
        Ok([
            HEADER_VERSION,
            classes,
            quantize(self.nhat[0])?,
            quantize(self.nhat[1])?,
            quantize(self.nhat[2])?,
        ])
    }

    /// Reads the header from the start of `bytes`; anything after the first
    /// five bytes is left to the caller.
    pub fn decode(bytes: &[u8]) -> Result<Self, HeaderError> {
        if bytes.len() < HEADER_LEN {
            return Err(HeaderError::Truncated(bytes.len()));
        }
        if bytes[0] != HEADER_VERSION {
            return Err(HeaderError::BadVersion(bytes[0]));
        }
        let c = bytes[1];
        let ft = c >> 6;
        Ok(Self {
            frame_type: FrameType::from_code(ft).ok_or(HeaderError::BadField {
                field: "frame_type",
                value: ft,
            })?,
            motion_class: class("motion_class", (c >> 4) & 3)?,
            spatial_class: class("spatial_class", (c >> 2) & 3)?,
            temporal_class: class("temporal_class", c & 3)?,
            nhat: [0, 1, 2].map(|i| f64::from(bytes[2 + i]) / 255.0),
        })
    }
}

pub fn encode_header(header: &HopHeader) -> Result<[u8; HEADER_LEN], HeaderError> {
    header.encode()
}

pub fn decode_header(bytes: &[u8]) -> Result<HopHeader, HeaderError> {
    HopHeader::decode(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn header() -> HopHeader {
        HopHeader {
            frame_type: FrameType::P,
            motion_class: IntensityClass::High,
            spatial_class: IntensityClass::Low,
            temporal_class: IntensityClass::Medium,
            nhat: [0.5, 0.25, 0.0],
        }
    }

    #[test]
    fn layout_is_bit_exact() {
        let b = header().encode().unwrap();
        assert_eq!(b, [1, 0b01_10_00_01, 128, 64, 0]);
        let d = HopHeader::decode(&b).unwrap();
        assert_eq!(d.nhat[0], 128.0 / 255.0);
        assert!((d.nhat[0] - 0.50196).abs() < 1e-5);
    }

    #[test]
    fn decode_errors() {
        let b = header().encode().unwrap();
        assert_eq!(HopHeader::decode(&b[..4]), Err(HeaderError::Truncated(4)));
        let mut v = b;
        v[0] = 2;
        assert_eq!(HopHeader::decode(&v), Err(HeaderError::BadVersion(2)));
        v = b;
        v[1] = 0b11_00_00_00;
        assert_eq!(
            HopHeader::decode(&v),
            Err(HeaderError::BadField {
                field: "frame_type",
                value: 3
            })
        );
        v = b;
        v[1] |= 0b11;
        assert!(matches!(
            HopHeader::decode(&v),
            Err(HeaderError::BadField {
                field: "temporal_class",
                ..
            })
        ));
        let bad = HopHeader {
            nhat: [1.2, 0.0, 0.0],
            ..header()
        };
        assert_eq!(bad.encode(), Err(HeaderError::BadFraction(1.2)));
    }

    fn arb_class() -> impl Strategy<Value = IntensityClass> {
        (0usize..3).prop_map(|s| IntensityClass::from_severity(s).unwrap())
    }

    proptest! {
        #[test]
        fn round_trip(
            ft in 0u8..3, m in arb_class(), s in arb_class(), t in arb_class(),
            n in proptest::array::uniform3(0.0f64..=1.0),
        ) {
            let h = HopHeader { frame_type: FrameType::from_code(ft).unwrap(), motion_class: m, spatial_class: s, temporal_class: t, nhat: n };
            let bytes = h.encode().unwrap();
            let d = HopHeader::decode(&bytes).unwrap();
            prop_assert_eq!((d.frame_type, d.motion_class, d.spatial_class, d.temporal_class), (h.frame_type, m, s, t));
            for (got, want) in d.nhat.iter().zip(n) {
                prop_assert!((got - want).abs() <= 0.5 / 255.0 + 1e-12);
            }
            prop_assert_eq!(d.encode().unwrap(), bytes);
        }
    }
}
