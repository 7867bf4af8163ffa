//! Code specification, frozen-set construction and import, and encoding.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::channel::SnrType;
use crate::construction::{check_length, ReliabilityOrder};
use crate::error::{io_err, Error, Result};

/// A polar code `P(N, k)` with an `r`-bit CRC appended to the information bits.
///
/// The `k + r` payload bits occupy the non-frozen positions in ascending index
/// order; frozen positions carry zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSpec {
    n_bits: usize,
    k_info: usize,
    r_crc: usize,
    frozen_set: Vec<usize>,
    info_set: Vec<usize>,
    frozen_mask: Vec<bool>,
    design_snr_db: Option<f64>,
}

impl CodeSpec {
    /// Builds a spec from an explicit frozen set (any order, no duplicates).
    pub fn from_frozen_set(
        n_bits: usize,
        k_info: usize,
        r_crc: usize,
        mut frozen_set: Vec<usize>,
        design_snr_db: Option<f64>,
    ) -> Result<Self> {
        check_length(n_bits)?;
        frozen_set.sort_unstable();
        let mut frozen_mask = vec![false; n_bits];
        for &i in &frozen_set {
            if i >= n_bits {
                return Err(Error::IndexOutOfRange { index: i, n: n_bits });
            }
            if std::mem::replace(&mut frozen_mask[i], true) {
                return Err(Error::DuplicateIndex(i));
            }
        }
        let non_frozen = n_bits - frozen_set.len();
        if non_frozen == 0 || non_frozen == n_bits {
            return Err(Error::InvalidRate {
                n: n_bits,
                count: non_frozen,
            });
        }
        if k_info + r_crc != non_frozen {
            return Err(Error::Config(format!(
                "k ({k_info}) + r ({r_crc}) must equal the non-frozen count {non_frozen}"
            )));
        }
        let info_set = (0..n_bits).filter(|&i| !frozen_mask[i]).collect();
        Ok(Self {
            n_bits,
            k_info,
            r_crc,
            frozen_set,
            info_set,
            frozen_mask,
            design_snr_db,
        })
    }

    /// Gaussian-approximation construction at `design_snr_db`, read as Eb/N0
    /// per information bit.
    pub fn construct(n_bits: usize, k_info: usize, r_crc: usize, design_snr_db: f64) -> Result<Self> {
        Self::construct_with(n_bits, k_info, r_crc, design_snr_db, SnrType::EbN0)
    }

    pub fn construct_with(
        n_bits: usize,
        k_info: usize,
        r_crc: usize,
        design_snr_db: f64,
        snr_type: SnrType,
    ) -> Result<Self> {
        check_length(n_bits)?;
        let count = k_info + r_crc;
        if count == 0 || count >= n_bits {
            return Err(Error::InvalidRate { n: n_bits, count });
        }
        let rate = snr_type.energy_rate(n_bits, k_info, r_crc);
        if rate <= 0.0 {
            return Err(Error::Config("Eb/N0 construction needs k >= 1".into()));
        }
        let order = ReliabilityOrder::gaussian_approximation(n_bits, design_snr_db, rate)?;
        let frozen = order.least_reliable(n_bits - count);
        Self::from_frozen_set(n_bits, k_info, r_crc, frozen, Some(design_snr_db))
    }

    /// Reads a frozen-set file: one decimal index per line, `#` starts a comment.
    pub fn load_frozen_set(path: impl AsRef<Path>, n_bits: usize, r_crc: usize) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse_frozen_set(&text, n_bits, r_crc)
    }

    pub fn parse_frozen_set(text: &str, n_bits: usize, r_crc: usize) -> Result<Self> {
        check_length(n_bits)?;
        let mut frozen = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let index: usize = content.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                reason: format!("expected a non-negative integer, found {content:?}"),
            })?;
            frozen.push(index);
        }
        let non_frozen = n_bits.saturating_sub(frozen.len());
        if non_frozen < r_crc {
            return Err(Error::CrcLongerThanPayload { non_frozen, r_crc });
        }
        Self::from_frozen_set(n_bits, non_frozen - r_crc, r_crc, frozen, None)
    }

    /// Serialises the frozen set in the format read by [`Self::load_frozen_set`].
    pub fn frozen_set_text(&self) -> String {
        let mut out = format!(
            "# frozen set N={} k={} r={}",
            self.n_bits, self.k_info, self.r_crc
        );
        if let Some(snr) = self.design_snr_db {
            let _ = write!(out, " design_snr_db={snr}");
        }
        out.push('\n');
        for i in &self.frozen_set {
            let _ = writeln!(out, "{i}");
        }
        out
    }

    pub fn write_frozen_set(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.frozen_set_text()).map_err(io_err(path))
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn k_info(&self) -> usize {
        self.k_info
    }

    pub fn r_crc(&self) -> usize {
        self.r_crc
    }

    /// `k + r`, the number of non-frozen positions.
    pub fn payload_len(&self) -> usize {
        self.info_set.len()
    }

    /// `(k + r) / N`.
    pub fn rate(&self) -> f64 {
        self.payload_len() as f64 / self.n_bits as f64
    }

    pub fn energy_rate(&self, snr_type: SnrType) -> f64 {
        snr_type.energy_rate(self.n_bits, self.k_info, self.r_crc)
    }

    pub fn frozen_set(&self) -> &[usize] {
        &self.frozen_set
    }

    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen_mask[i]
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen_mask
    }

    pub fn design_snr_db(&self) -> Option<f64> {
        self.design_snr_db
    }

    /// `x = u F^{(x)n}` over GF(2).
    pub fn encode(&self, u: &[u8]) -> Result<Vec<u8>> {
        check_len(self.n_bits, u.len())?;
        let mut x = u.to_vec();
        polar_transform(&mut x);
        Ok(x)
    }

    /// Places the payload at the non-frozen indices, zeros elsewhere.
    pub fn insert_payload(&self, payload: &[u8]) -> Result<Vec<u8>> {
        check_len(self.payload_len(), payload.len())?;
        let mut u = vec![0u8; self.n_bits];
        for (&i, &b) in self.info_set.iter().zip(payload) {
            u[i] = b;
        }
        Ok(u)
    }

    pub fn extract_payload(&self, u: &[u8]) -> Result<Vec<u8>> {
        check_len(self.n_bits, u.len())?;
        Ok(self.info_set.iter().map(|&i| u[i]).collect())
    }
}

/// Construction by non-frozen count alone (no CRC, `k = k_plus_r`).
pub fn construct_frozen_set(n_bits: usize, k_plus_r: usize, design_snr_db: f64) -> Result<CodeSpec> {
    CodeSpec::construct(n_bits, k_plus_r, 0, design_snr_db)
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch { expected, actual });
    }
    Ok(())
}

/// In-place butterfly evaluation of `x = u F^{(x)n}`, `F = [[1, 0], [1, 1]]`.
///
/// The length must be a power of two. The transform is its own inverse.
pub fn polar_transform(bits: &mut [u8]) {
    let n = bits.len();
    debug_assert!(n.is_power_of_two());
    let mut half = 1;
    while half < n {
        for block in bits.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= *b;
            }
        }
        half *= 2;
    }
}
