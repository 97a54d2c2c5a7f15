//! Lossless polar source coding of sparse binary blocks.
//!
//! With `u = e G`, the indices that stay uncertain under a BSC(p) genie are
//! stored verbatim; the rest are predicted by SC from the prior alone. Where
//! the prediction is wrong the index is appended as side information, so the
//! scheme is lossless for every input. If the result would not be shorter
//! than the block itself, the raw block is stored instead.

use super::sc::ScEngine;
use super::{polar_transform, reliability, ChannelKind};
use crate::error::{Error, Result};

/// Flip probabilities are clamped into this range before use.
const P_MIN: f64 = 1e-9;
const P_MAX: f64 = 0.5 - 1e-9;

/// Binary entropy in bits; `H(0) = H(1) = 0`.
pub fn entropy_h(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Inverse of `entropy_h` on `[0, 0.5]`, by bisection.
pub fn inv_entropy(h: f64) -> f64 {
    if h <= 0.0 {
        return 0.0;
    }
    if h >= 1.0 {
        return 0.5;
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if entropy_h(mid) < h {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// A compressed block. `payload.len() == orig_len` marks raw storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedBlock {
    pub payload: Vec<u8>,
    pub orig_len: usize,
    pub flip_prob: f64,
}

impl CompressedBlock {
    /// Compressed length in bits.
    pub fn len(&self) -> usize {
        self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payload.is_empty()
    }

    pub fn rate(&self) -> f64 {
        self.payload.len() as f64 / self.orig_len as f64
    }
}

fn log2_len(n: usize) -> usize {
    n.trailing_zeros() as usize
}

/// Indices that are sent verbatim: those whose expected side-information
/// cost `P_e(i) * log2 N` exceeds the one bit it takes to store them.
fn high_entropy_mask(n: usize, p: f64) -> Vec<bool> {
    if n == 1 {
        return vec![true];
    }
    let rel = reliability(ChannelKind::Bsc, n, p);
    let cost = log2_len(n) as f64;
    rel.pe.iter().map(|&pe| pe * cost > 1.0).collect()
}

fn clamp_p(p: f64) -> f64 {
    if p.is_nan() {
        P_MAX
    } else {
        p.clamp(P_MIN, P_MAX)
    }
}

fn push_index(out: &mut Vec<u8>, idx: usize, width: usize) {
    out.extend((0..width).rev().map(|b| ((idx >> b) & 1) as u8));
}

fn read_index(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize)
}

/// Compresses `raw` (length a power of two) for a BSC(p)-like source.
pub fn source_compress(raw: &[u8], p: f64) -> Result<CompressedBlock> {
    let n = raw.len();
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let p = clamp_p(p);
    let raw_block = || CompressedBlock {
        payload: raw.iter().map(|b| b & 1).collect(),
        orig_len: n,
        flip_prob: p,
    };
    if n == 1 {
        return Ok(raw_block());
    }
    let mut u: Vec<u8> = raw.iter().map(|b| b & 1).collect();
    polar_transform(&mut u);
    let high = high_entropy_mask(n, p);
    let width = log2_len(n);

    let mut payload: Vec<u8> = (0..n).filter(|&i| high[i]).map(|i| u[i]).collect();
    let mut misses = Vec::new();
    let prior = vec![((1.0 - p) / p).ln(); n];
    let mut eng = ScEngine::new(n);
    eng.run(&prior, &mut |i, l| {
        if !high[i] && ((l < 0.0) as u8) != u[i] {
            misses.push(i);
        }
        u[i]
    });
    if payload.len() + misses.len() * width >= n {
        return Ok(raw_block());
    }
    for i in misses {
        push_index(&mut payload, i, width);
    }
    Ok(CompressedBlock {
        payload,
        orig_len: n,
        flip_prob: p,
    })
}

/// Inverse of [`source_compress`].
pub fn source_decompress(block: &CompressedBlock, n: usize, p: f64) -> Result<Vec<u8>> {
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    if block.orig_len != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: block.orig_len,
        });
    }
    if block.payload.len() == n {
        return Ok(block.payload.iter().map(|b| b & 1).collect());
    }
    if block.payload.len() > n {
        return Err(Error::MalformedBlock(format!(
            "payload of {} bits exceeds block length {n}",
            block.payload.len()
        )));
    }
    let p = clamp_p(p);
    let high = high_entropy_mask(n, p);
    let width = log2_len(n);
    let n_high = high.iter().filter(|&&h| h).count();
    let extra =
        block.payload.len().checked_sub(n_high).ok_or_else(|| {
            Error::MalformedBlock("payload shorter than the verbatim part".into())
        })?;
    if extra % width != 0 {
        return Err(Error::MalformedBlock(format!(
            "side information of {extra} bits is not a multiple of {width}"
        )));
    }
    let (stored, side) = block.payload.split_at(n_high);
    let mut flip = vec![false; n];
    for chunk in side.chunks(width) {
        let idx = read_index(chunk);
        if high[idx] || flip[idx] {
            return Err(Error::MalformedBlock(format!("bad correction index {idx}")));
        }
        flip[idx] = true;
    }

    let prior = vec![((1.0 - p) / p).ln(); n];
    let mut eng = ScEngine::new(n);
    let mut next_stored = stored.iter();
    eng.run(&prior, &mut |i, l| {
        if high[i] {
            next_stored.next().copied().unwrap_or(0) & 1
        } else {
            (l < 0.0) as u8 ^ flip[i] as u8
        }
    });
    Ok(eng.codeword().to_vec())
}

/// Design flip probabilities tried by [`source_compress_adaptive`].
pub const ADAPTIVE_GRID: [f64; 8] = [0.003, 0.006, 0.012, 0.02, 0.03, 0.05, 0.08, 0.12];

/// Header width that selects an entry of [`ADAPTIVE_GRID`].
pub const ADAPTIVE_HEADER_BITS: usize = 3;

/// Compresses `raw` with every design probability in [`ADAPTIVE_GRID`] and
/// keeps the shortest result, prefixed by the index of the one used.
pub fn source_compress_adaptive(raw: &[u8]) -> Result<Vec<u8>> {
    let mut best: Option<(usize, CompressedBlock)> = None;
    for (i, &p) in ADAPTIVE_GRID.iter().enumerate() {
        let blk = source_compress(raw, p)?;
        if best.as_ref().is_none_or(|(_, b)| blk.len() < b.len()) {
            best = Some((i, blk));
        }
    }
    let (idx, blk) = best.expect("grid is not empty");
    let mut out = Vec::with_capacity(ADAPTIVE_HEADER_BITS + blk.len());
    push_index(&mut out, idx, ADAPTIVE_HEADER_BITS);
    out.extend_from_slice(&blk.payload);
    Ok(out)
}

/// Inverse of [`source_compress_adaptive`] for blocks of length `n`.
pub fn source_decompress_adaptive(bits: &[u8], n: usize) -> Result<Vec<u8>> {
    if bits.len() < ADAPTIVE_HEADER_BITS {
        return Err(Error::MalformedBlock("missing header".into()));
    }
    let (head, payload) = bits.split_at(ADAPTIVE_HEADER_BITS);
    let p = ADAPTIVE_GRID[read_index(head)];
    let blk = CompressedBlock {
        payload: payload.to_vec(),
        orig_len: n,
        flip_prob: p,
    };
    source_decompress(&blk, n, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn entropy_values() {
        assert_eq!(entropy_h(0.0), 0.0);
        assert!((entropy_h(0.5) - 1.0).abs() < 1e-15);
        assert!((entropy_h(0.05) - 0.2864).abs() < 1e-4);
    }

    #[test]
    fn inverse_entropy() {
        assert_eq!(inv_entropy(0.0), 0.0);
        let p = inv_entropy(0.5);
        assert!((p - 0.11003).abs() < 1e-5);
        for h in [0.01, 0.2, 0.5, 0.9, 0.999] {
            assert!((entropy_h(inv_entropy(h)) - h).abs() <= 1e-12);
        }
    }

    #[test]
    fn trivial_round_trips() {
        let n = 64;
        let zero = vec![0u8; n];
        let blk = source_compress(&zero, 0.05).unwrap();
        assert_eq!(source_decompress(&blk, n, 0.05).unwrap(), zero);
        for pos in [0, 17, 63] {
            let mut one = zero.clone();
            one[pos] = 1;
            let blk = source_compress(&one, 0.05).unwrap();
            assert_eq!(source_decompress(&blk, n, 0.05).unwrap(), one);
        }
    }

    #[test]
    fn adversarial_inputs_are_lossless() {
        let n = 64;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut inputs = vec![vec![1u8; n], (0..n).map(|i| (i % 2) as u8).collect()];
        for _ in 0..20 {
            inputs.push((0..n).map(|_| rng.random_range(0..2u8)).collect());
        }
        for raw in inputs {
            let blk = source_compress(&raw, 0.02).unwrap();
            assert!(blk.len() <= n);
            assert_eq!(source_decompress(&blk, n, 0.02).unwrap(), raw);
        }
    }

    #[test]
    fn adaptive_picks_a_short_encoding() {
        let n = 64;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for w in [0usize, 1, 3, 8, 30] {
            let mut raw = vec![0u8; n];
            for _ in 0..w {
                raw[rng.random_range(0..n)] = 1;
            }
            let bits = source_compress_adaptive(&raw).unwrap();
            let fixed = source_compress(&raw, 0.05).unwrap().len();
            assert!(bits.len() <= fixed + ADAPTIVE_HEADER_BITS);
            assert_eq!(source_decompress_adaptive(&bits, n).unwrap(), raw);
        }
        assert!(source_decompress_adaptive(&[1, 0], n).is_err());
    }

    #[test]
    fn malformed_blocks_are_rejected() {
        let blk = CompressedBlock {
            payload: vec![0; 70],
            orig_len: 64,
            flip_prob: 0.05,
        };
        assert!(matches!(
            source_decompress(&blk, 64, 0.05),
            Err(Error::MalformedBlock(_))
        ));
        assert!(matches!(
            source_compress(&[0; 10], 0.05),
            Err(Error::NotPowerOfTwo(10))
        ));
    }
}
