//! Successive-cancellation decoding over the binary code tree.
//!
//! The traversal is depth-first, left child first. LLRs for a node of size
//! `N_v` live in `llr[N_v..2 N_v]`, so one buffer of length `2N` serves every
//! level. Partial sums are combined in place in a length-`N` buffer indexed by
//! leaf position; after a full pass it holds `encode(u_hat)`.

use crate::code::CodeSpec;
use crate::error::{Error, Result};

/// Min-sum check-node update: `sign(x) sign(y) min(|x|, |y|)`.
#[inline]
pub fn f_func(x: f64, y: f64) -> f64 {
    let m = x.abs().min(y.abs());
    if (x < 0.0) != (y < 0.0) {
        -m
    } else {
        m
    }
}

/// Variable-node update: `(1 - 2b) x + y`.
#[inline]
pub fn g_func(x: f64, y: f64, b: u8) -> f64 {
    if b & 1 == 0 {
        y + x
    } else {
        y - x
    }
}

/// Hard decision on an LLR; zero decides 0.
#[inline]
pub fn hard_decision(llr: f64) -> u8 {
    (llr < 0.0) as u8
}

/// Partial sums of a parent node: `[beta_l ^ beta_r, beta_r]`.
pub fn combine_partial_sums(beta_l: &[u8], beta_r: &[u8]) -> Result<Vec<u8>> {
    if beta_l.len() != beta_r.len() {
        return Err(Error::LengthMismatch {
            expected: beta_l.len(),
            actual: beta_r.len(),
        });
    }
    let mut out: Vec<u8> = beta_l.iter().zip(beta_r).map(|(l, r)| l ^ r).collect();
    out.extend_from_slice(beta_r);
    Ok(out)
}

/// Output of one SC pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ScResult {
    pub u_hat: Vec<u8>,
    pub alpha_dec: Vec<f64>,
}

/// SC decoder with reusable scratch buffers for one code length.
#[derive(Debug, Clone)]
pub struct ScDecoder {
    n_bits: usize,
    llr: Vec<f64>,
    partial: Vec<u8>,
    u_hat: Vec<u8>,
    alpha_dec: Vec<f64>,
}

impl ScDecoder {
    pub fn new(n_bits: usize) -> Self {
        assert!(n_bits.is_power_of_two(), "code length must be a power of two");
        Self {
            n_bits,
            llr: vec![0.0; 2 * n_bits],
            partial: vec![0; n_bits],
            u_hat: vec![0; n_bits],
            alpha_dec: vec![0.0; n_bits],
        }
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    /// Runs one pass. Leaves listed in `flips` take the opposite of their hard
    /// decision; frozen leaves are always 0. Results are read back through
    /// [`Self::u_hat`], [`Self::alpha_dec`] and [`Self::x_hat`].
    pub fn run(&mut self, alpha_ch: &[f64], frozen_mask: &[bool], flips: &[usize]) {
        assert_eq!(alpha_ch.len(), self.n_bits, "channel LLR length");
        assert_eq!(frozen_mask.len(), self.n_bits, "frozen mask length");
        let n = self.n_bits;
        self.llr[n..].copy_from_slice(alpha_ch);
        let mut ctx = Pass {
            llr: &mut self.llr,
            partial: &mut self.partial,
            u_hat: &mut self.u_hat,
            alpha_dec: &mut self.alpha_dec,
            frozen: frozen_mask,
            flips,
        };
        ctx.node(n, 0);
    }

    pub fn u_hat(&self) -> &[u8] {
        &self.u_hat
    }

    pub fn alpha_dec(&self) -> &[f64] {
        &self.alpha_dec
    }

    /// Re-encoded estimate, i.e. the root partial sums.
    pub fn x_hat(&self) -> &[u8] {
        &self.partial
    }

    pub fn result(&self) -> ScResult {
        ScResult {
            u_hat: self.u_hat.clone(),
            alpha_dec: self.alpha_dec.clone(),
        }
    }
}

struct Pass<'a> {
    llr: &'a mut [f64],
    partial: &'a mut [u8],
    u_hat: &'a mut [u8],
    alpha_dec: &'a mut [f64],
    frozen: &'a [bool],
    flips: &'a [usize],
}

impl Pass<'_> {
    fn node(&mut self, nv: usize, start: usize) {
        if nv == 1 {
            let a = self.llr[1];
            self.alpha_dec[start] = a;
            let bit = if self.frozen[start] {
                0
            } else {
                hard_decision(a) ^ self.flips.contains(&start) as u8
            };
            self.u_hat[start] = bit;
            self.partial[start] = bit;
            return;
        }
        let half = nv / 2;
        {
            let (child, parent) = self.llr.split_at_mut(nv);
            let parent = &parent[..nv];
            let (pl, pr) = parent.split_at(half);
            for ((c, &x), &y) in child[half..].iter_mut().zip(pl).zip(pr) {
                *c = f_func(x, y);
            }
        }
        self.node(half, start);
        {
            let (child, parent) = self.llr.split_at_mut(nv);
            let parent = &parent[..nv];
            let (pl, pr) = parent.split_at(half);
            let beta_l = &self.partial[start..start + half];
            for (((c, &x), &y), &b) in child[half..].iter_mut().zip(pl).zip(pr).zip(beta_l) {
                *c = g_func(x, y, b);
            }
        }
        self.node(half, start + half);
        let (left, right) = self.partial[start..start + nv].split_at_mut(half);
        for (l, r) in left.iter_mut().zip(right.iter()) {
            *l ^= *r;
        }
    }
}

/// One SC pass with validation, allocating its result.
pub fn sc_decode(alpha_ch: &[f64], spec: &CodeSpec, flips: &[usize]) -> Result<ScResult> {
    if alpha_ch.len() != spec.n_bits() {
        return Err(Error::LengthMismatch {
            expected: spec.n_bits(),
            actual: alpha_ch.len(),
        });
    }
    for &i in flips {
        if i >= spec.n_bits() {
            return Err(Error::IndexOutOfRange {
                index: i,
                n: spec.n_bits(),
            });
        }
        if spec.is_frozen(i) {
            return Err(Error::Config(format!("flip index {i} is frozen")));
        }
    }
    let mut dec = ScDecoder::new(spec.n_bits());
    dec.run(alpha_ch, spec.frozen_mask(), flips);
    Ok(dec.result())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_examples() {
        assert_eq!(f_func(2.0, -3.0), -2.0);
        assert_eq!(f_func(0.0, 5.0), 0.0);
        assert_eq!(f_func(-1.0, -4.0), 1.0);
    }

    #[test]
    fn g_examples() {
        assert_eq!(g_func(2.0, 3.0, 0), 5.0);
        assert_eq!(g_func(2.0, 3.0, 1), 1.0);
        for &(x, y) in &[(1.5, -2.25), (-7.0, 0.125), (0.0, 3.0)] {
            assert_eq!(g_func(x, y, 0) + g_func(x, y, 1), 2.0 * y);
        }
    }

    #[test]
    fn partial_sum_examples() {
        assert_eq!(combine_partial_sums(&[1], &[0]).unwrap(), vec![1, 0]);
        assert_eq!(combine_partial_sums(&[1, 0, 1], &[1, 0, 1]).unwrap(), vec![0, 0, 0, 1, 0, 1]);
        assert!(combine_partial_sums(&[1], &[0, 1]).is_err());
    }

    #[test]
    fn hand_trace_n2() {
        let spec = CodeSpec::parse_frozen_set("0\n", 2, 0).unwrap();
        let res = sc_decode(&[-1.0, 3.0], &spec, &[]).unwrap();
        assert_eq!(res.u_hat, vec![0, 0]);
        assert_eq!(res.alpha_dec, vec![-1.0, 2.0]);

        let flipped = sc_decode(&[-1.0, 3.0], &spec, &[1]).unwrap();
        assert_eq!(flipped.u_hat, vec![0, 1]);
        assert_eq!(flipped.alpha_dec, vec![-1.0, 2.0]);
    }

    #[test]
    fn rejects_frozen_flip() {
        let spec = CodeSpec::parse_frozen_set("0\n", 2, 0).unwrap();
        assert!(sc_decode(&[1.0, 1.0], &spec, &[0]).is_err());
        assert!(sc_decode(&[1.0, 1.0], &spec, &[2]).is_err());
        assert!(sc_decode(&[1.0], &spec, &[]).is_err());
    }

    #[test]
    fn tie_decides_zero() {
        let spec = CodeSpec::parse_frozen_set("0\n", 2, 0).unwrap();
        let res = sc_decode(&[0.0, 0.0], &spec, &[]).unwrap();
        assert_eq!(res.u_hat, vec![0, 0]);
    }
}
