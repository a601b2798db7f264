//! Loss-to-quality accounting: GoP damage, frame-copy concealment, MSE,
//! PSNR, SSIM, decodable-frame ratio and network overhead.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::video::{FrameType, GopLayout, PixelFrame, PIXEL_MAX};

#[derive(Debug, Error, PartialEq)]
pub enum QoeError {
    #[error("frames differ in size ({0}x{1} vs {2}x{3})")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("frames smaller than one {0}x{0} window")]
    TooSmall(usize),
    #[error("sent bytes {sent} below original bytes {original}")]
    NegativeOverhead { sent: u64, original: u64 },
    #[error("original byte count must be positive")]
    NoOriginal,
    #[error("sequence lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("nothing to measure")]
    Empty,
}

/// Per-frame impairment flags for a whole trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DamageMap {
    pub impaired: Vec<bool>,
}

impl DamageMap {
    pub fn intact(len: usize) -> Self {
        Self {
            impaired: vec![false; len],
        }
    }

    pub fn impaired_count(&self) -> usize {
        self.impaired.iter().filter(|d| **d).count()
    }

    pub fn len(&self) -> usize {
        self.impaired.len()
    }

    pub fn is_empty(&self) -> bool {
        self.impaired.is_empty()
    }

    /// Marks frames impaired in `other` as impaired here too.
    pub fn merge(&mut self, other: &DamageMap) {
        for (a, b) in self.impaired.iter_mut().zip(&other.impaired) {
            *a |= *b;
        }
    }
}

/// Damage within one GoP starting at `gop_start`, returned as a map over
/// the GoP's `layout.length()` frames. A lost B-frame only damages itself,
/// a lost P-frame damages itself and the rest of the GoP, a lost I-frame
/// the whole GoP. Loss indices are absolute; those outside the GoP are
/// ignored.
pub fn propagate_gop_damage(lost_frames: &BTreeSet<usize>, layout: &GopLayout, gop_start: usize) -> DamageMap {
    let len = layout.length();
    let mut impaired = vec![false; len];
    for &idx in lost_frames {
        if idx < gop_start || idx >= gop_start + len {
            continue;
        }
        let offset = idx - gop_start;
        match layout.kind_at_offset(offset) {
            FrameType::B => impaired[offset] = true,
            FrameType::P | FrameType::I => impaired[offset..].iter_mut().for_each(|f| *f = true),
        }
    }
    DamageMap { impaired }
}

/// Damage over a whole trace of `total` frames.
pub fn propagate_trace_damage(lost_frames: &BTreeSet<usize>, layout: &GopLayout, total: usize) -> DamageMap {
    let mut impaired = Vec::with_capacity(total);
    let mut start = 0;
    while start < total {
        let gop = propagate_gop_damage(lost_frames, layout, start);
        impaired.extend(gop.impaired.into_iter().take(total - start));
        start += layout.length();
    }
    DamageMap { impaired }
}

pub const CONCEAL_GRAY: u8 = 128;

/// Replaces each impaired frame by the last intact frame before it; impaired
/// frames with no intact predecessor become mid-gray.
pub fn frame_copy_conceal(display: &[PixelFrame], damage: &DamageMap) -> Result<Vec<PixelFrame>, QoeError> {
    if display.len() != damage.len() {
        return Err(QoeError::LengthMismatch(display.len(), damage.len()));
    }
    let mut last_good: Option<usize> = None;
    let mut out = Vec::with_capacity(display.len());
    for (i, f) in display.iter().enumerate() {
        if damage.impaired[i] {
            out.push(match last_good {
                Some(j) => display[j].clone(),
                None => PixelFrame::filled(f.width, f.height, CONCEAL_GRAY),
            });
        } else {
            last_good = Some(i);
            out.push(f.clone());
        }
    }
    Ok(out)
}

fn same_dims(a: &PixelFrame, b: &PixelFrame) -> Result<(), QoeError> {
    if a.width != b.width || a.height != b.height {
        return Err(QoeError::DimensionMismatch(a.width, a.height, b.width, b.height));
    }
    Ok(())
}

pub fn mse(a: &PixelFrame, b: &PixelFrame) -> Result<f64, QoeError> {
    same_dims(a, b)?;
    if a.samples.is_empty() {
        return Err(QoeError::Empty);
    }
    let sum: u64 = a
        .samples
        .iter()
        .zip(&b.samples)
        .map(|(&x, &y)| {
            let d = x.abs_diff(y) as u64;
            d * d
        })
        .sum();
    Ok(sum as f64 / a.samples.len() as f64)
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` when `mse` is zero.
pub fn psnr(mse: f64, max: f64) -> f64 {
    if mse <= 0.0 {
        return f64::INFINITY;
    }
    10.0 * (max * max / mse).log10()
}

pub fn psnr_8bit(mse: f64) -> f64 {
    psnr(mse, PIXEL_MAX as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for SsimWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            gamma: 1.0,
        }
    }
}

pub const SSIM_WINDOW: usize = 8;
pub const SSIM_STRIDE: usize = 4;
const C1: f64 = (0.01 * 255.0) * (0.01 * 255.0);
const C2: f64 = (0.03 * 255.0) * (0.03 * 255.0);
const C3: f64 = C2 / 2.0;

fn signed_pow(x: f64, e: f64) -> f64 {
    if e == 1.0 {
        x
    } else {
        x.signum() * x.abs().powf(e)
    }
}

/// Structural similarity: luminance, contrast and structure terms on 8×8
/// windows with stride 4, averaged over windows.
pub fn ssim(a: &PixelFrame, b: &PixelFrame, weights: &SsimWeights) -> Result<f64, QoeError> {
    same_dims(a, b)?;
    if a.width < SSIM_WINDOW || a.height < SSIM_WINDOW {
        return Err(QoeError::TooSmall(SSIM_WINDOW));
    }
    let n = (SSIM_WINDOW * SSIM_WINDOW) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    let mut y0 = 0;
    while y0 + SSIM_WINDOW <= a.height {
        let mut x0 = 0;
        while x0 + SSIM_WINDOW <= a.width {
            let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for y in y0..y0 + SSIM_WINDOW {
                for x in x0..x0 + SSIM_WINDOW {
                    let p = a.at(x, y) as f64;
                    let q = b.at(x, y) as f64;
                    sa += p;
                    sb += q;
                    saa += p * p;
                    sbb += q * q;
                    sab += p * q;
                }
            }
            let (ma, mb) = (sa / n, sb / n);
            let va = (saa / n - ma * ma).max(0.0);
            let vb = (sbb / n - mb * mb).max(0.0);
            let cov = sab / n - ma * mb;
            let (da, db) = (va.sqrt(), vb.sqrt());
            let l = (2.0 * ma * mb + C1) / (ma * ma + mb * mb + C1);
            let c = (2.0 * da * db + C2) / (va + vb + C2);
            let s = (cov + C3) / (da * db + C3);
            total += signed_pow(c, weights.alpha) * signed_pow(l, weights.beta) * signed_pow(s, weights.gamma);
            count += 1;
            x0 += SSIM_STRIDE;
        }
        y0 += SSIM_STRIDE;
    }
    Ok(total / count as f64)
}

/// `(sent − original) / original`.
pub fn overhead_pct(sent_bytes: u64, original_bytes: u64) -> Result<f64, QoeError> {
    if original_bytes == 0 {
        return Err(QoeError::NoOriginal);
    }
    if sent_bytes < original_bytes {
        return Err(QoeError::NegativeOverhead {
            sent: sent_bytes,
            original: original_bytes,
        });
    }
    Ok((sent_bytes - original_bytes) as f64 / original_bytes as f64)
}

pub fn decodable_frame_ratio(damage: &DamageMap) -> Result<f64, QoeError> {
    if damage.is_empty() {
        return Err(QoeError::Empty);
    }
    Ok((damage.len() - damage.impaired_count()) as f64 / damage.len() as f64)
}

/// Quality and cost summary of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QoeReport {
    pub mechanism: String,
    pub seed: u64,
    /// Nominal channel loss rate of the run.
    pub plr_setting: f64,
    pub decodable_frame_ratio: f64,
    pub mean_mse: f64,
    /// PSNR of the mean MSE; infinite when every frame is exact.
    pub mean_psnr_db: f64,
    pub mean_ssim: f64,
    pub overhead_pct: f64,
}

impl QoeReport {
    /// Scores displayed frames against the originals.
    pub fn measure(
        mechanism: &str,
        seed: u64,
        plr_setting: f64,
        original: &[PixelFrame],
        shown: &[PixelFrame],
        damage: &DamageMap,
        overhead: f64,
    ) -> Result<Self, QoeError> {
        if original.len() != shown.len() {
            return Err(QoeError::LengthMismatch(original.len(), shown.len()));
        }
        if original.is_empty() {
            return Err(QoeError::Empty);
        }
        let w = SsimWeights::default();
        let (mut m, mut s) = (0.0, 0.0);
        for (a, b) in original.iter().zip(shown) {
            m += mse(a, b)?;
            s += ssim(a, b, &w)?;
        }
        let n = original.len() as f64;
        let mean_mse = m / n;
        Ok(Self {
            mechanism: mechanism.to_string(),
            seed,
            plr_setting,
            decodable_frame_ratio: decodable_frame_ratio(damage)?,
            mean_mse,
            mean_psnr_db: psnr_8bit(mean_mse),
            mean_ssim: s / n,
            overhead_pct: overhead,
        })
    }
}

pub const REPORT_HEADER: &str = "mechanism,seed,plr_setting,decodable_ratio,mean_psnr_db,mean_ssim,overhead_pct";

fn fmt_f64(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".to_string()
    } else {
        format!("{v:.6}")
    }
}

impl QoeReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.mechanism,
            self.seed,
            fmt_f64(self.plr_setting),
            fmt_f64(self.decodable_frame_ratio),
            fmt_f64(self.mean_psnr_db),
            fmt_f64(self.mean_ssim),
            fmt_f64(self.overhead_pct)
        )
    }
}

pub fn write_reports_csv<W: Write>(mut out: W, reports: &[QoeReport]) -> std::io::Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for r in reports {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::video::{generate_gop_layout, GopLayout};
    use rand::Rng;

    fn lost(ix: &[usize]) -> BTreeSet<usize> {
        ix.iter().copied().collect()
    }

    #[test]
    fn damage_scenarios() {
        let g = GopLayout::nineteen_two();
        assert_eq!(propagate_gop_damage(&lost(&[1]), &g, 0).impaired_count(), 1);
        assert_eq!(propagate_gop_damage(&lost(&[0]), &g, 0).impaired_count(), 19);
        let p = propagate_gop_damage(&lost(&[3]), &g, 0);
        assert_eq!(p.impaired_count(), 16);
        assert!(p.impaired[3..].iter().all(|d| *d) && !p.impaired[2]);
        // second GoP, absolute indices
        assert_eq!(propagate_gop_damage(&lost(&[19 + 9]), &g, 19).impaired_count(), 10);
        assert_eq!(propagate_gop_damage(&lost(&[5]), &g, 19).impaired_count(), 0);
    }

    #[test]
    fn damage_ordering_by_type() {
        let g = GopLayout::nineteen_two();
        let kinds = generate_gop_layout(19, 3, 19).unwrap();
        for (off, k) in kinds.iter().enumerate() {
            let n = propagate_gop_damage(&lost(&[off]), &g, 0).impaired_count();
            match k {
                FrameType::I => assert_eq!(n, 19),
                FrameType::P => assert_eq!(n, 19 - off),
                FrameType::B => assert_eq!(n, 1),
            }
        }
    }

    #[test]
    fn trace_damage_spans_gops() {
        let g = GopLayout::nineteen_two();
        let d = propagate_trace_damage(&lost(&[19]), &g, 95);
        assert_eq!(d.impaired_count(), 19);
        assert_eq!(decodable_frame_ratio(&d).unwrap(), 0.8);
        assert_eq!(decodable_frame_ratio(&DamageMap::intact(10)).unwrap(), 1.0);
        assert_eq!(
            decodable_frame_ratio(&DamageMap {
                impaired: vec![true; 4]
            })
            .unwrap(),
            0.0
        );
    }

    fn frame(v: u8) -> PixelFrame {
        PixelFrame::filled(8, 8, v)
    }

    #[test]
    fn concealment() {
        let frames: Vec<PixelFrame> = (0..6).map(|i| frame(i * 10)).collect();
        assert_eq!(frame_copy_conceal(&frames, &DamageMap::intact(6)).unwrap(), frames);
        let mut d = DamageMap::intact(6);
        d.impaired[5] = true;
        assert_eq!(frame_copy_conceal(&frames, &d).unwrap()[5], frames[4]);
        let d = DamageMap {
            impaired: vec![true, true, true, false, false, false],
        };
        let out = frame_copy_conceal(&frames, &d).unwrap();
        assert!(out[..3].iter().all(|f| *f == frame(CONCEAL_GRAY)));
    }

    #[test]
    fn mse_and_psnr_examples() {
        assert_eq!(mse(&frame(7), &frame(7)).unwrap(), 0.0);
        assert_eq!(mse(&frame(0), &frame(255)).unwrap(), 65025.0);
        let a = PixelFrame::new(2, 2, vec![0, 0, 0, 0]);
        let b = PixelFrame::new(2, 2, vec![255, 0, 0, 0]);
        assert_eq!(mse(&a, &b).unwrap(), 16256.25);
        assert_eq!(psnr_8bit(65025.0), 0.0);
        assert_eq!(psnr_8bit(0.0), f64::INFINITY);
        assert!((psnr_8bit(16256.25) - 10.0 * 4f64.log10()).abs() < 1e-12);
        assert!(mse(&a, &frame(0)).is_err());
    }

    fn textured(seed: u64) -> PixelFrame {
        let mut rng = crate::rng::seeded(seed);
        PixelFrame::new(16, 16, (0..256).map(|_| rng.gen()).collect())
    }

    #[test]
    fn ssim_examples() {
        let w = SsimWeights::default();
        let a = textured(1);
        assert_eq!(ssim(&a, &a, &w).unwrap(), 1.0);
        let neg = PixelFrame::new(16, 16, a.samples.iter().map(|v| 255 - v).collect());
        assert!(ssim(&a, &neg, &w).unwrap() < 0.5);
        // constant frames: only the luminance term departs from 1
        let (p, q) = (100.0f64, 110.0f64);
        let expected = (2.0 * p * q + C1) / (p * p + q * q + C1);
        let got = ssim(&frame(100), &frame(110), &w).unwrap();
        assert!((got - expected).abs() < 1e-12 && got < 1.0);
        assert!(ssim(&PixelFrame::filled(4, 4, 0), &PixelFrame::filled(4, 4, 0), &w).is_err());
    }

    #[test]
    fn ssim_symmetric() {
        let w = SsimWeights::default();
        for s in 0..10 {
            let (a, b) = (textured(s), textured(s + 100));
            assert_eq!(ssim(&a, &b, &w).unwrap(), ssim(&b, &a, &w).unwrap());
        }
    }

    #[test]
    fn overhead_examples() {
        assert!((overhead_pct(1380, 1000).unwrap() - 0.38).abs() < 1e-12);
        assert_eq!(overhead_pct(1000, 1000).unwrap(), 0.0);
        assert!((overhead_pct(1650, 1000).unwrap() - 0.65).abs() < 1e-12);
        assert!(overhead_pct(900, 1000).is_err());
    }

    #[test]
    fn csv_uses_inf_literal() {
        let r = QoeReport {
            mechanism: "NoFec".into(),
            seed: 1,
            plr_setting: 0.2,
            decodable_frame_ratio: 1.0,
            mean_mse: 0.0,
            mean_psnr_db: f64::INFINITY,
            mean_ssim: 1.0,
            overhead_pct: 0.0,
        };
        assert_eq!(r.csv_row(), "NoFec,1,0.200000,1.000000,inf,1.000000,0.000000");
    }
}
