//! Bit-channel reliability estimation by density evolution under the
//! Gaussian approximation.
//!
//! Each synthetic channel is summarised by the mean of its (consistent
//! Gaussian) LLR. A kernel stage maps an input mean `m` to `phi_inv(1 - (1 -
//! phi(m))^2)` on the check (upper, `f`) branch and to `2m` on the variable
//! (lower, `g`) branch. `phi` is Chung's two-piece approximation, evaluated in
//! the log domain so that means in the thousands do not underflow. Below
//! `SMALL_MEAN` the fit is unusable (it saturates at `phi = 1`), so the check
//! branch falls back to its small-mean asymptote `m^2 / 2`.

use std::f64::consts::PI;

use crate::channel::noise_variance;
use crate::error::{Error, Result};

/// Where a reliability ordering came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderSource {
    Computed,
    Imported,
}

/// Permutation of `0..N`, least reliable bit channel first.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityOrder {
    order: Vec<usize>,
    source: OrderSource,
}

impl ReliabilityOrder {
    /// Wraps an externally supplied ordering after checking it is a permutation.
    pub fn from_permutation(order: Vec<usize>, source: OrderSource) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &i in &order {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::DuplicateIndex(i));
            }
        }
        Ok(Self { order, source })
    }

    /// Gaussian-approximation ordering for BPSK over AWGN at `design_snr_db`,
    /// converted to a noise variance with energy rate `rate`.
    pub fn gaussian_approximation(n_bits: usize, design_snr_db: f64, rate: f64) -> Result<Self> {
        check_length(n_bits)?;
        let sigma2 = noise_variance(design_snr_db, rate);
        let means = llr_means(n_bits, 2.0 / sigma2);
        let mut order: Vec<usize> = (0..n_bits).collect();
        // Stable on index for equal means, so the result is fully deterministic.
        order.sort_by(|&a, &b| means[a].total_cmp(&means[b]).then(a.cmp(&b)));
        Ok(Self {
            order,
            source: OrderSource::Computed,
        })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn source(&self) -> OrderSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// The `count` least reliable indices, ascending.
    pub fn least_reliable(&self, count: usize) -> Vec<usize> {
        let mut frozen = self.order[..count.min(self.order.len())].to_vec();
        frozen.sort_unstable();
        frozen
    }
}

pub(crate) fn check_length(n_bits: usize) -> Result<()> {
    if n_bits < 2 || !n_bits.is_power_of_two() {
        return Err(Error::InvalidLength(n_bits));
    }
    Ok(())
}

/// Mean LLR of every synthetic channel `u_i`, natural index order.
///
/// The index bits, read MSB first, give the path from the root of the SC
/// tree: 0 is the left (`f`) child, 1 the right (`g`) child.
pub fn llr_means(n_bits: usize, channel_mean: f64) -> Vec<f64> {
    let mut means = vec![channel_mean];
    while means.len() < n_bits {
        let mut next = Vec::with_capacity(means.len() * 2);
        for &m in &means {
            next.push(check_node_mean(m));
            next.push(2.0 * m);
        }
        means = next;
    }
    means
}

const CHUNG_SPLIT: f64 = 10.0;
const SMALL_MEAN: f64 = 0.2;

/// `ln phi(x)` for Chung's approximation of the consistent-Gaussian function.
pub fn ln_phi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < CHUNG_SPLIT {
        chung_low(x).min(0.0)
    } else {
        // The high branch starts slightly above the low one; clamp to keep
        // the function non-increasing across the split.
        let high = 0.5 * (PI / x).ln() - x / 4.0 + (1.0 - 10.0 / (7.0 * x)).ln();
        high.min(chung_low(CHUNG_SPLIT))
    }
}

fn chung_low(x: f64) -> f64 {
    -0.4527 * x.powf(0.86) + 0.0218
}

/// Solves `ln_phi(x) = target` for `x >= 0` by bisection.
pub fn ln_phi_inv(target: f64) -> f64 {
    if target >= 0.0 {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while ln_phi(hi) > target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ln_phi(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Check-node update: `phi_inv(1 - (1 - phi(m))^2)`.
fn check_node_mean(m: f64) -> f64 {
    if m < SMALL_MEAN {
        return 0.5 * m * m;
    }
    let lp = ln_phi(m);
    // 1 - (1 - p)^2 = p (2 - p)
    let p = lp.exp();
    ln_phi_inv(lp + (2.0 - p).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_phi_decreasing_on_each_piece() {
        let mut prev = ln_phi(1e-6);
        for i in 1..1000 {
            let x = i as f64 * 0.0099;
            let v = ln_phi(x);
            assert!(v <= prev, "not decreasing at {x}");
            prev = v;
        }
        let mut prev = ln_phi(10.0);
        for i in 1..1000 {
            let v = ln_phi(10.0 + i as f64 * 5.0);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn inverse_round_trips() {
        for &x in &[0.05, 0.5, 3.0, 9.0, 10.5, 12.0, 100.0, 4000.0] {
            let back = ln_phi_inv(ln_phi(x));
            assert!((back - x).abs() < 1e-9 * x.max(1.0), "{x} -> {back}");
        }
    }

    #[test]
    fn check_node_is_worse_than_variable_node() {
        for &m in &[1e-3, 0.1, 0.199, 0.2, 1.0, 5.0, 50.0, 2000.0] {
            let f = check_node_mean(m);
            assert!(f < m && f > 0.0, "m={m} f={f}");
        }
    }

    #[test]
    fn check_node_monotone() {
        let mut prev = 0.0;
        for i in 1..5000 {
            let m = i as f64 * 0.01;
            let f = check_node_mean(m);
            assert!(f >= prev, "m={m}");
            prev = f;
        }
    }

    #[test]
    fn order_is_permutation() {
        let ord = ReliabilityOrder::gaussian_approximation(1024, 2.365, 0.5).unwrap();
        let mut sorted = ord.order().to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..1024).collect::<Vec<_>>());
        // u_0 is the worst channel, u_{N-1} the best.
        assert_eq!(ord.order()[0], 0);
        assert_eq!(*ord.order().last().unwrap(), 1023);
    }

    #[test]
    fn rejects_bad_permutation() {
        assert!(ReliabilityOrder::from_permutation(vec![0, 0], OrderSource::Imported).is_err());
        assert!(ReliabilityOrder::from_permutation(vec![0, 2], OrderSource::Imported).is_err());
    }
}
