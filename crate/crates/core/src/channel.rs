//! BPSK over AWGN, in additive (`y = x + n`) and multiplicative
//! (`y = x ⊙ z`, `z ~ N(1, σ²)`) form.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::codes::LinearCode;
use crate::error::{dim_err, Error, Result};
use crate::gf2::{BitMatrix, BitVector};

/// An operating point: `Eb/N0` in dB with the code rate it refers to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnrPoint {
    pub ebn0_db: f64,
    pub rate: f64,
    pub sigma: f64,
}

impl SnrPoint {
    pub fn new(ebn0_db: f64, rate: f64) -> Result<Self> {
        Ok(SnrPoint {
            ebn0_db,
            rate,
            sigma: sigma_from_ebn0(ebn0_db, rate)?,
        })
    }
}

/// Noise standard deviation for unit-energy BPSK: `σ = (2·R·10^{Eb/N0/10})^{-1/2}`.
pub fn sigma_from_ebn0(ebn0_db: f64, rate: f64) -> Result<f64> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::Config(format!("code rate {rate} outside (0,1]")));
    }
    Ok(1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0)).sqrt())
}

/// `0 → +1`, `1 → −1`.
pub fn bpsk_map(v: &BitVector) -> Vec<f64> {
    v.iter().map(|b| if b { -1.0 } else { 1.0 }).collect()
}

/// `0` where the value is strictly positive, `1` otherwise.
pub fn hard_decision(v: &[f64]) -> BitVector {
    let mut out = BitVector::zeros(v.len());
    for (i, &x) in v.iter().enumerate() {
        if x <= 0.0 || x.is_nan() {
            out.set(i, true);
        }
    }
    out
}

fn normal(mean: f64, sigma: f64) -> Result<Normal<f64>> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::Config(format!("noise deviation {sigma} must be positive")));
    }
    Normal::new(mean, sigma).map_err(|e| Error::Config(e.to_string()))
}

pub fn transmit_additive<R: Rng + ?Sized>(x: &[f64], sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
    let noise = normal(0.0, sigma)?;
    Ok(x.iter().map(|&xi| xi + noise.sample(rng)).collect())
}

/// Draws `z ~ N(1, σ²)` per coordinate; returns `(y = x ⊙ z, z)`.
pub fn transmit_multiplicative<R: Rng + ?Sized>(
    x: &[f64],
    sigma: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let noise = normal(1.0, sigma)?;
    let z: Vec<f64> = x.iter().map(|_| noise.sample(rng)).collect();
    let y = x.iter().zip(&z).map(|(a, b)| a * b).collect();
    Ok((y, z))
}

/// Applies a fixed multiplicative noise realisation to a codeword.
pub fn apply_noise(x_bits: &BitVector, z: &[f64]) -> Result<Vec<f64>> {
    if x_bits.len() != z.len() {
        return dim_err(format!("codeword of length {} with noise of length {}", x_bits.len(), z.len()));
    }
    Ok(bpsk_map(x_bits).iter().zip(z).map(|(a, b)| a * b).collect())
}

/// `(|y|, −2·H·bin(y) + 1)`, of length `2n − k`.
pub fn estimator_input(y: &[f64], h: &BitMatrix) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(y.len() + h.rows());
    write_estimator_input(y, h, &mut out)?;
    Ok(out)
}

/// Appends the estimator input for `y` to `out`.
pub fn write_estimator_input(y: &[f64], h: &BitMatrix, out: &mut Vec<f64>) -> Result<()> {
    if y.len() != h.cols() {
        return dim_err(format!("channel output of length {} with {}-column H", y.len(), h.cols()));
    }
    let syndrome = h.matvec(&hard_decision(y))?;
    out.extend(y.iter().map(|v| v.abs()));
    out.extend(syndrome.iter().map(|s| if s { -1.0 } else { 1.0 }));
    Ok(())
}

/// One end-to-end transmission, kept for inspection and tests.
#[derive(Clone, Debug)]
pub struct ChannelSample {
    pub u: BitVector,
    pub x_b: BitVector,
    pub x_s: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Option<Vec<f64>>,
}

impl ChannelSample {
    /// Encodes `u` and sends it through the multiplicative channel.
    pub fn multiplicative<R: Rng + ?Sized>(
        code: &LinearCode,
        u: BitVector,
        sigma: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let x_b = code.encode(&u)?;
        let x_s = bpsk_map(&x_b);
        let (y, z) = transmit_multiplicative(&x_s, sigma, rng)?;
        Ok(ChannelSample { u, x_b, x_s, y, z: Some(z) })
    }

    /// Encodes `u` and sends it through the additive channel.
    pub fn additive<R: Rng + ?Sized>(code: &LinearCode, u: BitVector, sigma: f64, rng: &mut R) -> Result<Self> {
        let x_b = code.encode(&u)?;
        let x_s = bpsk_map(&x_b);
        let y = transmit_additive(&x_s, sigma, rng)?;
        Ok(ChannelSample { u, x_b, x_s, y, z: None })
    }
}

/// A uniformly random `k`-bit message.
pub fn random_message<R: Rng + ?Sized>(k: usize, rng: &mut R) -> BitVector {
    let mut u = BitVector::zeros(k);
    for i in 0..k {
        u.set(i, rng.random::<bool>());
    }
    u
}
