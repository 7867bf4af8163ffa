//! BPSK over AWGN with counter-keyed, reproducible noise.
//!
//! Randomness for codeword `i` comes from a ChaCha8 stream selected by
//! `(seed, domain, i)`, so any codeword can be regenerated on its own,
//! independently of how a campaign is split between workers. Gaussian samples
//! use the Box–Muller transform on 53-bit uniforms taken from that stream.

use std::f64::consts::PI;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// How an SNR in dB is turned into a noise variance.
///
/// All variants give `sigma^2 = 1 / (2 R 10^(snr/10))` and differ in `R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnrType {
    /// Eb/N0 per information bit, `R = k / N` (CRC bits are overhead).
    #[default]
    EbN0,
    /// Eb/N0 per non-frozen bit, `R = (k + r) / N`.
    EbN0Coded,
    /// Es/N0, `R = 1`.
    EsN0,
}

impl SnrType {
    /// The rate `R` used to scale the noise.
    pub fn energy_rate(self, n_bits: usize, k_info: usize, r_crc: usize) -> f64 {
        match self {
            SnrType::EbN0 => k_info as f64 / n_bits as f64,
            SnrType::EbN0Coded => (k_info + r_crc) as f64 / n_bits as f64,
            SnrType::EsN0 => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SnrType::EbN0 => "ebn0",
            SnrType::EbN0Coded => "ebn0-coded",
            SnrType::EsN0 => "esn0",
        }
    }
}

impl std::str::FromStr for SnrType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ebn0" => Ok(Self::EbN0),
            "ebn0-coded" => Ok(Self::EbN0Coded),
            "esn0" => Ok(Self::EsN0),
            other => Err(Error::Config(format!("unknown SNR type {other:?}"))),
        }
    }
}

/// Noise variance per real dimension for unit-energy BPSK, `R = rate`.
pub fn noise_variance(snr_db: f64, rate: f64) -> f64 {
    1.0 / (2.0 * rate * 10f64.powf(snr_db / 10.0))
}

/// Independent random streams derived from one campaign seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamDomain {
    Noise,
    Payload,
}

impl StreamDomain {
    fn salt(self) -> u64 {
        match self {
            StreamDomain::Noise => 0,
            StreamDomain::Payload => 0x9e37_79b9_7f4a_7c15,
        }
    }
}

/// The RNG for one codeword in one domain.
pub fn codeword_rng(seed: u64, domain: StreamDomain, codeword_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ domain.salt());
    rng.set_stream(codeword_index);
    rng
}

/// Uniform in `[0, 1)` with 53 random bits.
fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Fills `out` with i.i.d. standard normal samples (Box–Muller, both outputs used).
pub fn fill_standard_normal(rng: &mut impl RngCore, out: &mut [f64]) {
    let mut chunks = out.chunks_exact_mut(2);
    for pair in &mut chunks {
        let (a, b) = box_muller(rng);
        pair[0] = a;
        pair[1] = b;
    }
    if let [last] = chunks.into_remainder() {
        *last = box_muller(rng).0;
    }
}

fn box_muller(rng: &mut impl RngCore) -> (f64, f64) {
    let u1 = 1.0 - unit_f64(rng);
    let u2 = unit_f64(rng);
    let radius = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (2.0 * PI * u2).sin_cos();
    (radius * c, radius * s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    snr_db: f64,
    rate: f64,
    noise_sigma: f64,
    seed: u64,
}

impl ChannelConfig {
    /// `rate` is the energy rate `R` of [`noise_variance`] (see
    /// [`SnrType::energy_rate`]).
    pub fn new(snr_db: f64, rate: f64, seed: u64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::Config(format!("code rate {rate} not in (0, 1]")));
        }
        if !snr_db.is_finite() {
            return Err(Error::Config(format!("SNR {snr_db} dB is not finite")));
        }
        let noise_sigma = noise_variance(snr_db, rate).sqrt();
        Ok(Self {
            snr_db,
            rate,
            noise_sigma,
            seed,
        })
    }

    /// A channel with an explicit noise standard deviation; `sigma = 0` gives a
    /// noiseless link (LLRs are then undefined).
    pub fn with_sigma(noise_sigma: f64, seed: u64) -> Result<Self> {
        if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
            return Err(Error::Config(format!("invalid sigma {noise_sigma}")));
        }
        Ok(Self {
            snr_db: f64::INFINITY,
            rate: 1.0,
            noise_sigma,
            seed,
        })
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_sigma * self.noise_sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The noise vector added to codeword `codeword_index`.
    pub fn noise(&self, len: usize, codeword_index: u64) -> Vec<f64> {
        let mut n = vec![0.0; len];
        self.fill_noise(&mut n, codeword_index);
        n
    }

    pub fn fill_noise(&self, out: &mut [f64], codeword_index: u64) {
        let mut rng = codeword_rng(self.seed, StreamDomain::Noise, codeword_index);
        fill_standard_normal(&mut rng, out);
        for v in out.iter_mut() {
            *v *= self.noise_sigma;
        }
    }
}

/// Bit 0 maps to +1, bit 1 to -1.
pub fn modulate(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| 1.0 - 2.0 * b as f64).collect()
}

/// `y = symbols + n` with the noise of codeword `codeword_index`.
pub fn transmit(symbols: &[f64], cfg: &ChannelConfig, codeword_index: u64) -> Vec<f64> {
    let mut y = cfg.noise(symbols.len(), codeword_index);
    for (v, s) in y.iter_mut().zip(symbols) {
        *v += s;
    }
    y
}

/// `alpha_ch[i] = 2 y[i] / sigma^2`.
pub fn channel_llr(y: &[f64], cfg: &ChannelConfig) -> Result<Vec<f64>> {
    let var = cfg.noise_variance();
    if var <= 0.0 {
        return Err(Error::ZeroNoise);
    }
    let scale = 2.0 / var;
    Ok(y.iter().map(|v| scale * v).collect())
}
