use serde::{Deserialize, Serialize};

use super::{FecError, ReedSolomon, RsParams};

/// One FEC block in transit: n shards, each present or erased.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FecBlock {
    pub params: RsParams,
    pub shards: Vec<Option<Vec<u8>>>,
    pub frame_ref: usize,
}

impl FecBlock {
    /// A fully present block from encoded shards.
    pub fn from_encoded(params: RsParams, shards: Vec<Vec<u8>>, frame_ref: usize) -> Result<Self, FecError> {
        if shards.len() != params.n {
            return Err(FecError::ShardCount {
                expected: params.n,
                got: shards.len(),
            });
        }
        Ok(Self {
            params,
            shards: shards.into_iter().map(Some).collect(),
            frame_ref,
        })
    }

    pub fn erase(&mut self, index: usize) {
        if let Some(s) = self.shards.get_mut(index) {
            *s = None;
        }
    }

    pub fn present_count(&self) -> usize {
        self.shards.iter().filter(|s| s.is_some()).count()
    }

    /// Wire form of the present shards: one leading shard-index byte, then
    /// the payload.
    pub fn to_packets(&self) -> Vec<Vec<u8>> {
        self.shards
            .iter()
            .enumerate()
            .filter_map(|(i, s)| {
                s.as_ref().map(|d| {
                    let mut p = Vec::with_capacity(d.len() + 1);
                    p.push(i as u8);
                    p.extend_from_slice(d);
                    p
                })
            })
            .collect()
    }

    /// Inverse of [`FecBlock::to_packets`]; missing indices become erasures.
    pub fn from_packets(params: RsParams, packets: &[Vec<u8>], frame_ref: usize) -> Result<Self, FecError> {
        let mut shards: Vec<Option<Vec<u8>>> = vec![None; params.n];
        for p in packets {
            let (&idx, payload) = p.split_first().ok_or(FecError::LengthMismatch)?;
            let slot = shards.get_mut(idx as usize).ok_or(FecError::ShardCount {
                expected: params.n,
                got: idx as usize + 1,
            })?;
            *slot = Some(payload.to_vec());
        }
        Ok(Self {
            params,
            shards,
            frame_ref,
        })
    }
}

/// Recovers a block's source shards; fails when fewer than k shards arrived.
pub fn rs_decode(block: &FecBlock) -> Result<Vec<Vec<u8>>, FecError> {
    ReedSolomon::new(block.params)?.reconstruct(&block.shards)
}

/// Parity decision for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtectionDecision {
    pub frame_index: usize,
    /// Parity packets per source packet.
    pub ratio: f64,
    pub protect: bool,
}

impl ProtectionDecision {
    pub fn none(frame_index: usize) -> Self {
        Self {
            frame_index,
            ratio: 0.0,
            protect: false,
        }
    }

    /// `ratio` is clamped to [0, 1]; a zero ratio means unprotected.
    pub fn with_ratio(frame_index: usize, ratio: f64) -> Self {
        let ratio = if ratio.is_finite() { ratio.clamp(0.0, 1.0) } else { 0.0 };
        Self {
            frame_index,
            ratio,
            protect: ratio > 0.0,
        }
    }
}

/// Splits a frame's packets into FEC blocks of `block_source_size` source
/// packets (the last one may be smaller).
///
/// The frame's total parity `H = round(ratio × packet_count)` (half rounds
/// up) is spread over the blocks in proportion to their size by largest
/// remainder, earlier blocks winning ties. This keeps the frame's parity
/// ratio within half a packet of the request instead of compounding one
/// ceiling per block.
pub fn build_ffblocks(packet_count: usize, block_source_size: usize, ratio: f64) -> Result<Vec<RsParams>, FecError> {
    if packet_count == 0 || block_source_size == 0 {
        return Err(FecError::NoSource);
    }
    if !(0.0..=1.0).contains(&ratio) {
        return Err(FecError::BadRatio(ratio));
    }
    let ks: Vec<usize> = (0..packet_count.div_ceil(block_source_size))
        .map(|b| block_source_size.min(packet_count - b * block_source_size))
        .collect();
    let total_h = ((ratio * packet_count as f64) + 0.5 + 1e-9).floor() as usize;
    let total_h = total_h.min(packet_count);

    let mut hs: Vec<usize> = ks.iter().map(|&k| total_h * k / packet_count).collect();
    let mut left = total_h - hs.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..ks.len()).collect();
    order.sort_by_key(|&b| std::cmp::Reverse(total_h * ks[b] % packet_count));
    for b in order {
        if left == 0 {
            break;
        }
        hs[b] += 1;
        left -= 1;
    }
    ks.into_iter().zip(hs).map(|(k, h)| RsParams::new(k, h)).collect()
}
