//! Reed-Solomon erasure coding over GF(256) and FEC block construction.
//!
//! Codes are systematic: the first k shards of a block are the source
//! packets verbatim, the remaining h are parity. Any k of the n shards
//! recover the source.

mod block;
pub mod gf256;
mod rs;

use thiserror::Error;

pub use block::{build_ffblocks, rs_decode, FecBlock, ProtectionDecision};
pub use rs::{recovery_rate, rs_encode, ReedSolomon, RsParams};

/// Source packets per FEC block.
pub const DEFAULT_BLOCK_SIZE: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum FecError {
    #[error("a block needs at least one source shard")]
    NoSource,
    #[error("{0} shards exceed the GF(256) limit of 255")]
    TooManyShards(usize),
    #[error("shards differ in length")]
    LengthMismatch,
    #[error("expected {expected} shards, got {got}")]
    ShardCount { expected: usize, got: usize },
    #[error("only {present} of the {k} shards needed arrived")]
    Unrecoverable { present: usize, k: usize },
    #[error("redundancy ratio {0} outside [0, 1]")]
    BadRatio(f64),
}

/// Splits `data` into `k` equal-length shards, zero-padding the tail.
pub fn split_shards(data: &[u8], k: usize) -> Vec<Vec<u8>> {
    let len = data.len().div_ceil(k.max(1)).max(1);
    (0..k)
        .map(|i| {
            let start = (i * len).min(data.len());
            let end = ((i + 1) * len).min(data.len());
            let mut s = data[start..end].to_vec();
            s.resize(len, 0);
            s
        })
        .collect()
}

/// Concatenates shards and truncates to the original length.
pub fn join_shards(shards: &[Vec<u8>], original_len: usize) -> Vec<u8> {
    let mut out: Vec<u8> = shards.concat();
    out.truncate(original_len);
    out
}
