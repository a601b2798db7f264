use serde::{Deserialize, Serialize};

use super::{gf256, FecError};

/// Shard counts of one Reed-Solomon block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RsParams {
    pub n: usize,
    pub k: usize,
    pub h: usize,
}

impl RsParams {
    pub fn new(k: usize, h: usize) -> Result<Self, FecError> {
        if k == 0 {
            return Err(FecError::NoSource);
        }
        if k + h > 255 {
            return Err(FecError::TooManyShards(k + h));
        }
        Ok(Self { n: k + h, k, h })
    }

    pub fn recovery_rate(&self) -> f64 {
        recovery_rate(self)
    }
}

/// Fraction of a block's shards that may be lost: `h / n`.
pub fn recovery_rate(params: &RsParams) -> f64 {
    params.h as f64 / params.n as f64
}

/// Systematic erasure code. The encoding matrix is a Vandermonde matrix on
/// the points 0..n right-multiplied by the inverse of its top k×k square, so
/// the first k rows are the identity and any k rows stay invertible.
#[derive(Debug, Clone)]
pub struct ReedSolomon {
    params: RsParams,
    matrix: Vec<Vec<u8>>,
}

impl ReedSolomon {
    pub fn new(params: RsParams) -> Result<Self, FecError> {
        let RsParams { n, k, .. } = params;
        if k == 0 {
            return Err(FecError::NoSource);
        }
        if n > 255 || n < k {
            return Err(FecError::TooManyShards(n));
        }
        let vandermonde: Vec<Vec<u8>> = (0..n)
            .map(|i| (0..k).map(|j| gf256::pow(i as u8, j)).collect())
            .collect();
        let top_inv = gf256::invert(&vandermonde[..k]).expect("Vandermonde on distinct points is invertible");
        let matrix = gf256::mat_mul(&vandermonde, &top_inv);
        Ok(Self { params, matrix })
    }

    pub fn params(&self) -> RsParams {
        self.params
    }

    fn shard_len(shards: &[impl AsRef<[u8]>]) -> Result<usize, FecError> {
        let len = shards.first().map_or(0, |s| s.as_ref().len());
        if shards.iter().any(|s| s.as_ref().len() != len) {
            return Err(FecError::LengthMismatch);
        }
        Ok(len)
    }

    /// Returns the n shards: the k sources followed by h parity shards.
    pub fn encode(&self, source: &[Vec<u8>]) -> Result<Vec<Vec<u8>>, FecError> {
        let RsParams { n, k, .. } = self.params;
        if source.len() != k {
            return Err(FecError::ShardCount {
                expected: k,
                got: source.len(),
            });
        }
        let len = Self::shard_len(source)?;
        let mut out = source.to_vec();
        for row in &self.matrix[k..n] {
            let mut parity = vec![0u8; len];
            for (c, src) in row.iter().zip(source) {
                gf256::mul_add_slice(&mut parity, src, *c);
            }
            out.push(parity);
        }
        Ok(out)
    }

    /// Rebuilds the k source shards from any k present shards.
    pub fn reconstruct(&self, shards: &[Option<Vec<u8>>]) -> Result<Vec<Vec<u8>>, FecError> {
        let RsParams { n, k, .. } = self.params;
        if shards.len() != n {
            return Err(FecError::ShardCount {
                expected: n,
                got: shards.len(),
            });
        }
        let present: Vec<usize> = (0..n).filter(|&i| shards[i].is_some()).collect();
        if present.len() < k {
            return Err(FecError::Unrecoverable {
                present: present.len(),
                k,
            });
        }
        let present_data: Vec<&Vec<u8>> = present.iter().map(|&i| shards[i].as_ref().expect("present")).collect();
        let len = Self::shard_len(&present_data)?;

        if (0..k).all(|i| shards[i].is_some()) {
            return Ok(shards[..k].iter().map(|s| s.clone().expect("present")).collect());
        }
        // prefer surviving source rows so the sub-matrix is mostly identity
        let rows: Vec<usize> = present.into_iter().take(k).collect();
        let sub: Vec<Vec<u8>> = rows.iter().map(|&r| self.matrix[r].clone()).collect();
        let decode = gf256::invert(&sub).expect("any k rows of the encoding matrix are invertible");
        let mut out = Vec::with_capacity(k);
        for (i, drow) in decode.iter().enumerate() {
            if let Some(s) = &shards[i] {
                out.push(s.clone());
                continue;
            }
            let mut data = vec![0u8; len];
            for (c, &r) in drow.iter().zip(&rows) {
                gf256::mul_add_slice(&mut data, shards[r].as_ref().expect("present"), *c);
            }
            out.push(data);
        }
        Ok(out)
    }
}

/// Encodes k equal-length source shards with h parity shards.
pub fn rs_encode(source: &[Vec<u8>], h: usize) -> Result<Vec<Vec<u8>>, FecError> {
    let params = RsParams::new(source.len(), h)?;
    ReedSolomon::new(params)?.encode(source)
}
