//! The two-user adder AWGN channel.
//!
//! Each user's code symbols are serialized to bits (bit 0 of the symbol
//! first) and BPSK-mapped (bit 0 -> +1, bit 1 -> -1). The receiver sees the
//! sum of both users' antipodal signals plus Gaussian noise:
//!
//! `z[i][t] = bpsk(x_bits[i][t]) + bpsk(y_bits[i][t]) + noise`,
//! `noise ~ N(0, sigma^2)`.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::gf::{Field, Symbol};
use crate::{Error, Result};

/// Noise level plus the Eb/N0 bookkeeping it was derived from.
#[derive(Debug, Clone, Copy)]
pub struct ChannelParams {
    /// Noise variance per real sample.
    pub sigma2: f64,
    /// The Eb/N0 (dB) this variance corresponds to, if constructed that way.
    pub ebn0_db: Option<f64>,
}

impl ChannelParams {
    /// Directly from a noise variance.
    pub fn from_sigma2(sigma2: f64) -> Result<ChannelParams> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma^2 = {sigma2} must be positive")));
        }
        Ok(ChannelParams { sigma2, ebn0_db: None })
    }

    /// From a per-user Eb/N0 in dB at per-user information rate `rate`
    /// (information bits per binary channel use of that user).
    pub fn from_ebn0_db(ebn0_db: f64, rate: f64) -> Result<ChannelParams> {
        Ok(ChannelParams {
            sigma2: ebn0_to_sigma2(ebn0_db, rate)?,
            ebn0_db: Some(ebn0_db),
        })
    }
}

/// Converts per-user Eb/N0 (dB) to noise variance: each user sends
/// unit-energy antipodal samples carrying `rate` information bits each, so
/// `sigma^2 = 1 / (2 * rate * 10^(ebn0_db/10))`.
pub fn ebn0_to_sigma2(ebn0_db: f64, rate: f64) -> Result<f64> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidParameter(format!("rate {rate} outside (0, 1]")));
    }
    if !ebn0_db.is_finite() {
        return Err(Error::InvalidParameter(format!("Eb/N0 {ebn0_db} dB not finite")));
    }
    let ebn0 = 10f64.powf(ebn0_db / 10.0);
    Ok(1.0 / (2.0 * rate * ebn0))
}

/// BPSK map on a bit vector: 0 -> +1.0, 1 -> -1.0.
pub fn bpsk(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| 1.0 - 2.0 * b as f64).collect()
}

/// Serializes a symbol block to its `N * r` transmit bits, bit 0 of each
/// symbol first.
pub fn symbols_to_bits(field: &Field, block: &[Symbol]) -> Vec<u8> {
    let r = field.r();
    let mut bits = Vec::with_capacity(block.len() * r as usize);
    for &s in block {
        for t in 0..r {
            bits.push((s >> t) & 1);
        }
    }
    bits
}

/// One received block: an `N x r` matrix of real samples, row `i` holding
/// the `r` samples of code-symbol position `i`.
#[derive(Debug, Clone)]
pub struct RxBlock {
    n: usize,
    r: usize,
    samples: Vec<f64>,
}

impl RxBlock {
    pub fn new(n: usize, r: usize, samples: Vec<f64>) -> Result<RxBlock> {
        if samples.len() != n * r {
            return Err(Error::LengthMismatch {
                what: "sample buffer",
                got: samples.len(),
                expected: n * r,
            });
        }
        Ok(RxBlock { n, r, samples })
    }

    /// Number of symbol positions `N`.
    pub fn block_len(&self) -> usize {
        self.n
    }

    /// Samples per position (= bits per symbol).
    pub fn bits_per_symbol(&self) -> usize {
        self.r
    }

    /// The `r` samples of symbol position `i`.
    #[inline]
    pub fn symbol_samples(&self, i: usize) -> &[f64] {
        &self.samples[i * self.r..(i + 1) * self.r]
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }
}

/// Transmits both users' bit streams through the adder AWGN channel using
/// the caller's RNG (all randomness is the noise).
pub fn transmit_with_rng<R: Rng + ?Sized>(
    x_bits: &[u8],
    y_bits: &[u8],
    params: &ChannelParams,
    r: usize,
    rng: &mut R,
) -> Result<RxBlock> {
    if x_bits.len() != y_bits.len() {
        return Err(Error::LengthMismatch {
            what: "user-2 bit stream",
            got: y_bits.len(),
            expected: x_bits.len(),
        });
    }
    if r == 0 || x_bits.len() % r != 0 {
        return Err(Error::InvalidParameter(format!(
            "bit stream of length {} is not a multiple of r={r}",
            x_bits.len()
        )));
    }
    let normal = Normal::new(0.0, params.sigma2.sqrt())
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let samples = x_bits
        .iter()
        .zip(y_bits)
        .map(|(&xb, &yb)| {
            let sx = 1.0 - 2.0 * xb as f64;
            let sy = 1.0 - 2.0 * yb as f64;
            sx + sy + normal.sample(rng)
        })
        .collect();
    RxBlock::new(x_bits.len() / r, r, samples)
}

/// Deterministic transmission: like [`transmit_with_rng`] but seeding a
/// fresh ChaCha stream from `seed`.
pub fn transmit(
    x_bits: &[u8],
    y_bits: &[u8],
    params: &ChannelParams,
    r: usize,
    seed: u64,
) -> Result<RxBlock> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    transmit_with_rng(x_bits, y_bits, params, r, &mut rng)
}

/// Derives an independent per-trial RNG seed from a base seed and two
/// stream coordinates (e.g. sweep-point index and block index). Chained
/// SplitMix64 finalizers; the result depends on all three inputs, so
/// trials can be distributed across workers in any order without changing
/// any trial's randomness.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    let a = mix(base ^ 0x9E37_79B9_7F4A_7C15);
    let b = mix(a ^ stream);
    mix(b ^ index)
}
