//! Video sequences as frame-metadata traces.
//!
//! A [`VideoTrace`] stands in for an encoded video: it carries, per frame,
//! the type, the encoded size and aggregate motion-vector statistics. The
//! pixel content needed for quality metrics is produced separately by
//! [`synthesize_video`] as 8-bit luma [`PixelFrame`]s.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motion::IntensityClass;
use crate::rng;

/// Upper pixel value limit of 8-bit samples.
pub const PIXEL_MAX: u8 = 255;

#[derive(Debug, Error, PartialEq)]
pub enum VideoError {
    #[error("GoP ratios must be at least 1 (got n={n_ratio}, m={m_ratio})")]
    ZeroRatio { n_ratio: usize, m_ratio: usize },
    #[error("m_ratio {m_ratio} exceeds n_ratio {n_ratio}")]
    SpacingTooLarge { n_ratio: usize, m_ratio: usize },
    #[error("total frame count must be at least 1")]
    NoFrames,
    #[error("frame {0} is a B-frame and has no relative position")]
    NotAnchor(usize),
    #[error("frame index {index} out of range for {len} frames")]
    OutOfRange { index: usize, len: usize },
    #[error("trace line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("trace i/o: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FrameType {
    I,
    P,
    B,
}

impl FrameType {
    pub fn code(self) -> u8 {
        match self {
            FrameType::I => 0,
            FrameType::P => 1,
            FrameType::B => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(FrameType::I),
            1 => Some(FrameType::P),
            2 => Some(FrameType::B),
            _ => None,
        }
    }

    pub fn is_anchor(self) -> bool {
        !matches!(self, FrameType::B)
    }
}

impl fmt::Display for FrameType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FrameType::I => "I",
            FrameType::P => "P",
            FrameType::B => "B",
        };
        f.write_str(s)
    }
}

impl FromStr for FrameType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "I" => Ok(FrameType::I),
            "P" => Ok(FrameType::P),
            "B" => Ok(FrameType::B),
            other => Err(format!("unknown frame type {other:?}")),
        }
    }
}

/// Metadata of one encoded frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub index: usize,
    pub kind: FrameType,
    pub size_bytes: u64,
    pub mv_count: u64,
    /// Sum of the Euclidean lengths of all motion vectors, in pixels.
    pub mv_total_distance: f64,
    pub mb_width: u32,
    pub mb_height: u32,
    pub mb_count: u64,
}

impl FrameRecord {
    /// Checks the per-record invariants (positive size, motion aggregates
    /// consistent with the frame type).
    pub fn validate(&self) -> Result<(), String> {
        if self.size_bytes == 0 {
            return Err(format!("frame {} has zero size", self.index));
        }
        if self.mb_width == 0 || self.mb_height == 0 {
            return Err(format!("frame {} has an empty macroblock", self.index));
        }
        if !(self.mv_total_distance.is_finite() && self.mv_total_distance >= 0.0) {
            return Err(format!("frame {} has invalid vector distance", self.index));
        }
        if self.kind == FrameType::I && (self.mv_count != 0 || self.mv_total_distance != 0.0) {
            return Err(format!("I-frame {} carries motion vectors", self.index));
        }
        if self.mv_count == 0 && self.mv_total_distance != 0.0 {
            return Err(format!("frame {} has distance without vectors", self.index));
        }
        Ok(())
    }
}

/// GoP structure in N:M notation: `n_ratio` frames between adjacent
/// I-frames and an anchor every `m_ratio` frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GopLayout {
    pub n_ratio: usize,
    pub m_ratio: usize,
}

impl GopLayout {
    pub fn new(n_ratio: usize, m_ratio: usize) -> Result<Self, VideoError> {
        if n_ratio == 0 || m_ratio == 0 {
            return Err(VideoError::ZeroRatio { n_ratio, m_ratio });
        }
        if m_ratio > n_ratio {
            return Err(VideoError::SpacingTooLarge { n_ratio, m_ratio });
        }
        Ok(Self { n_ratio, m_ratio })
    }

    /// The 19:2 layout: an I-frame every 19 frames, two B-frames between
    /// anchors.
    pub fn nineteen_two() -> Self {
        Self {
            n_ratio: 19,
            m_ratio: 3,
        }
    }

    pub fn length(&self) -> usize {
        self.n_ratio
    }

    /// Frame type at a position inside one GoP.
    pub fn kind_at_offset(&self, offset: usize) -> FrameType {
        let offset = offset % self.n_ratio;
        if offset == 0 {
            FrameType::I
        } else if offset.is_multiple_of(self.m_ratio) {
            FrameType::P
        } else {
            FrameType::B
        }
    }

    pub fn gop_start(&self, frame_index: usize) -> usize {
        frame_index - frame_index % self.n_ratio
    }

    /// Number of anchors (I plus P) in one GoP.
    pub fn anchor_count(&self) -> usize {
        (0..self.n_ratio)
            .filter(|&o| self.kind_at_offset(o).is_anchor())
            .count()
    }
}

/// Frame-type sequence for `total_frames` frames of an N:M layout.
pub fn generate_gop_layout(n_ratio: usize, m_ratio: usize, total_frames: usize) -> Result<Vec<FrameType>, VideoError> {
    if n_ratio == 0 || m_ratio == 0 {
        return Err(VideoError::ZeroRatio { n_ratio, m_ratio });
    }
    if total_frames == 0 {
        return Err(VideoError::NoFrames);
    }
    // m_ratio larger than the GoP simply yields an all-I/B pattern here; the
    // GopLayout type is where the m ≤ n invariant is enforced.
    let layout = GopLayout { n_ratio, m_ratio };
    Ok((0..total_frames).map(|i| layout.kind_at_offset(i)).collect())
}

/// Rank of an anchor frame inside its GoP: 1 for the I-frame, then 2, 3, …
/// for successive P-frames.
pub fn relative_position(frame_index: usize, layout: &GopLayout) -> Result<u32, VideoError> {
    let offset = frame_index % layout.n_ratio;
    if !layout.kind_at_offset(offset).is_anchor() {
        return Err(VideoError::NotAnchor(frame_index));
    }
    Ok(1 + (offset / layout.m_ratio) as u32)
}

/// Number of network packets needed for a frame at the given payload size.
pub fn packetize(frame: &FrameRecord, payload_bytes: usize) -> usize {
    assert!(payload_bytes > 0, "payload size must be positive");
    let size = frame.size_bytes as usize;
    size.div_ceil(payload_bytes).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoTrace {
    pub frames: Vec<FrameRecord>,
    pub gop: GopLayout,
    pub width: u32,
    pub height: u32,
    pub fps: f64,
}

impl VideoTrace {
    /// Validates contiguity, per-frame invariants and consistency with the
    /// GoP layout.
    pub fn validate(&self) -> Result<(), VideoError> {
        for (i, f) in self.frames.iter().enumerate() {
            if f.index != i {
                return Err(VideoError::Parse {
                    line: i + 2,
                    reason: format!("expected index {i}, found {}", f.index),
                });
            }
            f.validate()
                .map_err(|reason| VideoError::Parse { line: i + 2, reason })?;
            let expected = self.gop.kind_at_offset(i);
            if f.kind != expected {
                return Err(VideoError::Parse {
                    line: i + 2,
                    reason: format!("frame {i} is {} but the layout expects {expected}", f.kind),
                });
            }
        }
        Ok(())
    }

    pub fn gop_count(&self) -> usize {
        self.frames.len().div_ceil(self.gop.n_ratio)
    }

    /// Frames of the `g`-th GoP.
    pub fn gop_frames(&self, g: usize) -> &[FrameRecord] {
        let start = g * self.gop.n_ratio;
        let end = (start + self.gop.n_ratio).min(self.frames.len());
        &self.frames[start..end]
    }

    pub fn total_bytes(&self) -> u64 {
        self.frames.iter().map(|f| f.size_bytes).sum()
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<(), VideoError> {
        let io = |e: std::io::Error| VideoError::Io(e.to_string());
        writeln!(
            out,
            "{},{},{},{},{}",
            self.width, self.height, self.fps, self.gop.n_ratio, self.gop.m_ratio
        )
        .map_err(io)?;
        for f in &self.frames {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                f.index, f.kind, f.size_bytes, f.mv_count, f.mv_total_distance, f.mb_width, f.mb_height, f.mb_count
            )
            .map_err(io)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("trace text is ASCII")
    }

    /// Parses the line-delimited trace format and validates the result.
    pub fn read_from<R: BufRead>(input: R) -> Result<Self, VideoError> {
        let mut lines = input.lines().enumerate();
        let (_, header) = lines.next().ok_or(VideoError::Parse {
            line: 1,
            reason: "missing header".into(),
        })?;
        let header = header.map_err(|e| VideoError::Io(e.to_string()))?;
        let h: Vec<&str> = header.trim_end().split(',').collect();
        if h.len() != 5 {
            return Err(VideoError::Parse {
                line: 1,
                reason: format!("header needs 5 fields, found {}", h.len()),
            });
        }
        let bad = |line: usize, what: &str| VideoError::Parse {
            line,
            reason: format!("invalid {what}"),
        };
        let width: u32 = h[0].parse().map_err(|_| bad(1, "width"))?;
        let height: u32 = h[1].parse().map_err(|_| bad(1, "height"))?;
        let fps: f64 = h[2].parse().map_err(|_| bad(1, "fps"))?;
        let n_ratio: usize = h[3].parse().map_err(|_| bad(1, "n_ratio"))?;
        let m_ratio: usize = h[4].parse().map_err(|_| bad(1, "m_ratio"))?;
        let gop = GopLayout::new(n_ratio, m_ratio)?;

        let mut frames = Vec::new();
        for (i, line) in lines {
            let lineno = i + 1;
            let line = line.map_err(|e| VideoError::Io(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let p: Vec<&str> = line.trim_end().split(',').collect();
            if p.len() != 8 {
                return Err(VideoError::Parse {
                    line: lineno,
                    reason: format!("frame line needs 8 fields, found {}", p.len()),
                });
            }
            frames.push(FrameRecord {
                index: p[0].parse().map_err(|_| bad(lineno, "index"))?,
                kind: p[1].parse().map_err(|_| bad(lineno, "kind"))?,
                size_bytes: p[2].parse().map_err(|_| bad(lineno, "size_bytes"))?,
                mv_count: p[3].parse().map_err(|_| bad(lineno, "mv_count"))?,
                mv_total_distance: p[4].parse().map_err(|_| bad(lineno, "mv_total_distance"))?,
                mb_width: p[5].parse().map_err(|_| bad(lineno, "mb_width"))?,
                mb_height: p[6].parse().map_err(|_| bad(lineno, "mb_height"))?,
                mb_count: p[7].parse().map_err(|_| bad(lineno, "mb_count"))?,
            });
        }
        let trace = VideoTrace {
            frames,
            gop,
            width,
            height,
            fps,
        };
        trace.validate()?;
        Ok(trace)
    }
}

/// A single-channel 8-bit luma image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelFrame {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<u8>,
}

impl PixelFrame {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Self {
        assert_eq!(samples.len(), width * height, "sample count must equal width × height");
        Self { width, height, samples }
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    pub fn at(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }
}

/// Parameters of the synthetic video generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisSpec {
    #[serde(default = "default_n_ratio")]
    pub n_ratio: usize,
    #[serde(default = "default_m_ratio")]
    pub m_ratio: usize,
    pub gop_count: usize,
    pub motion: IntensityClass,
    pub seed: u64,
    #[serde(default = "default_width")]
    pub width: u32,
    #[serde(default = "default_height")]
    pub height: u32,
    #[serde(default = "default_fps")]
    pub fps: f64,
    /// Pixel frames are rendered at `width / render_divisor` ×
    /// `height / render_divisor`.
    #[serde(default = "default_divisor")]
    pub render_divisor: u32,
}

fn default_n_ratio() -> usize {
    GopLayout::nineteen_two().n_ratio
}
fn default_m_ratio() -> usize {
    GopLayout::nineteen_two().m_ratio
}
fn default_width() -> u32 {
    352
}
fn default_height() -> u32 {
    288
}
fn default_fps() -> f64 {
    29.97
}
fn default_divisor() -> u32 {
    4
}

impl SynthesisSpec {
    pub fn new(layout: GopLayout, gop_count: usize, motion: IntensityClass, seed: u64) -> Self {
        Self {
            n_ratio: layout.n_ratio,
            m_ratio: layout.m_ratio,
            gop_count,
            motion,
            seed,
            width: default_width(),
            height: default_height(),
            fps: default_fps(),
            render_divisor: default_divisor(),
        }
    }
}

/// Per-class generator profile: mean frame sizes (I, P, B), mean vector
/// count and mean total vector length of predicted frames, and the
/// per-frame content displacement in rendered pixels.
struct MotionProfile {
    sizes: [f64; 3],
    mv_count: f64,
    mv_distance: f64,
    shift: f64,
}

fn profile(class: IntensityClass) -> MotionProfile {
    match class {
        IntensityClass::Low => MotionProfile {
            sizes: [28_000.0, 7_000.0, 3_000.0],
            mv_count: 2_500.0,
            mv_distance: 5_000.0,
            shift: 0.5,
        },
        IntensityClass::Medium => MotionProfile {
            sizes: [32_000.0, 11_000.0, 5_000.0],
            mv_count: 3_500.0,
            mv_distance: 45_000.0,
            shift: 2.0,
        },
        IntensityClass::High => MotionProfile {
            sizes: [36_000.0, 16_000.0, 8_000.0],
            mv_count: 4_500.0,
            mv_distance: 150_000.0,
            shift: 5.0,
        },
    }
}

/// Generates a deterministic frame trace and its rendered luma frames.
///
/// Frame sizes and motion aggregates are drawn uniformly within ±15 % / ±20 %
/// of the motion class means; the rendered content is a smooth texture
/// translated every frame by an amount that grows with the motion class, so
/// frame-copy concealment error depends on motion.
pub fn synthesize_video(spec: &SynthesisSpec) -> Result<(VideoTrace, Vec<PixelFrame>), VideoError> {
    let gop = GopLayout::new(spec.n_ratio, spec.m_ratio)?;
    if spec.gop_count == 0 {
        return Err(VideoError::NoFrames);
    }
    let total = spec.gop_count * gop.n_ratio;
    let kinds = generate_gop_layout(gop.n_ratio, gop.m_ratio, total)?;
    let prof = profile(spec.motion);
    let mut rng = rng::seeded(spec.seed);

    let (mb_w, mb_h) = (16u32, 16u32);
    let mb_count = u64::from(spec.width.div_ceil(mb_w)) * u64::from(spec.height.div_ceil(mb_h));

    let frames = kinds
        .iter()
        .enumerate()
        .map(|(index, &kind)| {
            let mean = prof.sizes[kind.code() as usize];
            let size_bytes = (mean * rng.gen_range(0.85..1.15)).round().max(1.0) as u64;
            let (mv_count, mv_total_distance) = match kind {
                FrameType::I => (0, 0.0),
                _ => {
                    let count = (prof.mv_count * rng.gen_range(0.8..1.2)).round() as u64;
                    let dist = (prof.mv_distance * rng.gen_range(0.8..1.2) * 100.0).round() / 100.0;
                    (count, dist)
                }
            };
            FrameRecord {
                index,
                kind,
                size_bytes,
                mv_count,
                mv_total_distance,
                mb_width: mb_w,
                mb_height: mb_h,
                mb_count,
            }
        })
        .collect();

    let trace = VideoTrace {
        frames,
        gop,
        width: spec.width,
        height: spec.height,
        fps: spec.fps,
    };

    let divisor = spec.render_divisor.max(1);
    let rw = (spec.width / divisor).max(8) as usize;
    let rh = (spec.height / divisor).max(8) as usize;
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let texture_seed: u64 = rng.gen();
    let pixels = (0..total)
        .map(|t| render_frame(rw, rh, t as f64 * prof.shift, phase, texture_seed))
        .collect();

    Ok((trace, pixels))
}

fn render_frame(width: usize, height: usize, shift: f64, phase: f64, seed: u64) -> PixelFrame {
    let dx = shift;
    let dy = 0.4 * shift;
    let mut samples = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let u = x as f64 + dx;
            let v = y as f64 + dy;
            let smooth = 128.0 + 60.0 * (0.21 * u + 0.05 * v + phase).sin() + 40.0 * (0.13 * v - 0.07 * u).cos();
            let grain = lattice_noise(u, v, seed);
            samples.push((smooth + grain).round().clamp(0.0, 255.0) as u8);
        }
    }
    PixelFrame::new(width, height, samples)
}

/// Bilinearly interpolated hash noise in [-12, 12], moving with the content.
fn lattice_noise(u: f64, v: f64, seed: u64) -> f64 {
    let (x0, y0) = (u.floor(), v.floor());
    let (fx, fy) = (u - x0, v - y0);
    let corner = |x: f64, y: f64| -> f64 {
        let mut h = seed ^ ((x as i64 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        h ^= (y as i64 as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
        h ^= h >> 29;
        h = h.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h ^= h >> 32;
        (h % 2001) as f64 / 1000.0 - 1.0
    };
    let top = corner(x0, y0) * (1.0 - fx) + corner(x0 + 1.0, y0) * fx;
    let bottom = corner(x0, y0 + 1.0) * (1.0 - fx) + corner(x0 + 1.0, y0 + 1.0) * fx;
    12.0 * (top * (1.0 - fy) + bottom * fy)
}
