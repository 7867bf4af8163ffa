//! Bit-serial CRC used to detect decoding failures.
//!
//! Convention: MSB-first shift register, configurable initial register, no
//! reflection, no final XOR. With a zero initial register the CRC of `m` is the
//! remainder of `m(z) z^r` divided by the generator.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrcSpec {
    degree: u32,
    polynomial: u64,
    initial_register: u64,
}

impl CrcSpec {
    /// `polynomial` holds the `degree` low-order coefficients (the leading
    /// `z^degree` term is implicit), e.g. `0x8005` for `z^16 + z^15 + z^2 + 1`.
    pub fn new(degree: u32, polynomial: u64) -> Result<Self> {
        Self::with_initial_register(degree, polynomial, 0)
    }

    pub fn with_initial_register(degree: u32, polynomial: u64, initial_register: u64) -> Result<Self> {
        if degree == 0 || degree > 63 {
            return Err(Error::InvalidCrc(format!("degree {degree} not in 1..=63")));
        }
        let mask = (1u64 << degree) - 1;
        if polynomial & !mask != 0 {
            return Err(Error::InvalidCrc(format!(
                "polynomial {polynomial:#x} wider than degree {degree}"
            )));
        }
        if polynomial & 1 == 0 {
            return Err(Error::InvalidCrc("constant term must be 1".into()));
        }
        if initial_register & !mask != 0 {
            return Err(Error::InvalidCrc("initial register wider than degree".into()));
        }
        Ok(Self {
            degree,
            polynomial,
            initial_register,
        })
    }

    /// `z^16 + z^15 + z^2 + 1`.
    pub fn crc16() -> Self {
        Self::new(16, 0x8005).expect("valid polynomial")
    }

    pub fn degree(&self) -> usize {
        self.degree as usize
    }

    pub fn polynomial(&self) -> u64 {
        self.polynomial
    }

    pub fn initial_register(&self) -> u64 {
        self.initial_register
    }

    fn register(&self, message: &[u8]) -> u64 {
        let top = self.degree - 1;
        let mask = (1u64 << self.degree) - 1;
        let mut reg = self.initial_register;
        for &bit in message {
            let feedback = ((reg >> top) as u8 ^ bit) & 1;
            reg = (reg << 1) & mask;
            if feedback == 1 {
                reg ^= self.polynomial;
            }
        }
        reg
    }

    /// CRC bits of `message`, MSB first.
    pub fn compute(&self, message: &[u8]) -> Vec<u8> {
        let reg = self.register(message);
        (0..self.degree)
            .rev()
            .map(|shift| ((reg >> shift) & 1) as u8)
            .collect()
    }

    /// `message || compute(message)`.
    pub fn append(&self, message: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(message.len() + self.degree());
        out.extend_from_slice(message);
        out.extend(self.compute(message));
        out
    }

    /// True iff the trailing `r` bits equal the CRC of the leading bits.
    pub fn check(&self, payload: &[u8]) -> Result<bool> {
        let r = self.degree();
        if payload.len() < r {
            return Err(Error::LengthMismatch {
                expected: r,
                actual: payload.len(),
            });
        }
        let (message, crc) = payload.split_at(payload.len() - r);
        let reg = self.register(message);
        let received = crc.iter().fold(0u64, |acc, &b| (acc << 1) | (b & 1) as u64);
        Ok(reg == received)
    }
}
