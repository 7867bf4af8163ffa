//! Threshold calibration for the early-stopping gate.
//!
//! The ungated DSCF decoder is run over many codewords and the metric `phi`
//! of each codeword is accumulated into a bin chosen by the outcome: the
//! number of trials `t` that led to a correct decode, or a failure bin for
//! codewords whose decoded payload differs from the transmitted one (this
//! includes CRC false positives). The threshold at an SNR point is the mean
//! `phi` of the failure bin.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::channel::ChannelConfig;
use crate::code::CodeSpec;
use crate::crc::CrcSpec;
use crate::error::{io_err, Error, Result};
use crate::flip::{DecodeOutcome, FlipDecoder};
use crate::sim::{par_indexed, thread_pool, Simulator, BATCH_SIZE};

/// Accumulated `phi` per outcome bin: `0..=T` then the failure bin.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricDistribution {
    snr_db: f64,
    max_trials: usize,
    phi_sums: Vec<f64>,
    phi_sq_sums: Vec<f64>,
    counts: Vec<u64>,
}

impl MetricDistribution {
    pub fn new(snr_db: f64, max_trials: usize) -> Self {
        Self {
            snr_db,
            max_trials,
            phi_sums: vec![0.0; max_trials + 2],
            phi_sq_sums: vec![0.0; max_trials + 2],
            counts: vec![0; max_trials + 2],
        }
    }

    /// Builds a distribution from raw accumulators (`T + 2` bins each).
    /// Standard errors are unavailable for such a distribution.
    pub fn from_parts(snr_db: f64, phi_sums: Vec<f64>, counts: Vec<u64>) -> Result<Self> {
        if phi_sums.len() != counts.len() || counts.len() < 2 {
            return Err(Error::LengthMismatch {
                expected: counts.len().max(2),
                actual: phi_sums.len(),
            });
        }
        Ok(Self {
            snr_db,
            max_trials: counts.len() - 2,
            phi_sq_sums: vec![f64::NAN; phi_sums.len()],
            phi_sums,
            counts,
        })
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    pub fn max_trials(&self) -> usize {
        self.max_trials
    }

    pub fn failure_bin(&self) -> usize {
        self.max_trials + 1
    }

    /// Adds one codeword: `trials` is ignored when `failed`.
    pub fn record(&mut self, trials: usize, failed: bool, phi: f64) {
        let bin = if failed { self.failure_bin() } else { trials };
        assert!(bin <= self.failure_bin(), "trial count above T");
        self.phi_sums[bin] += phi;
        self.phi_sq_sums[bin] += phi * phi;
        self.counts[bin] += 1;
    }

    pub fn phi_sums(&self) -> &[f64] {
        &self.phi_sums
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Mean `phi` per bin; `None` for empty bins.
    pub fn normalized(&self) -> Vec<Option<f64>> {
        self.phi_sums
            .iter()
            .zip(&self.counts)
            .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
            .collect()
    }

    /// Standard error of each bin mean; `None` for bins with fewer than two
    /// samples.
    pub fn standard_errors(&self) -> Vec<Option<f64>> {
        (0..self.counts.len())
            .map(|b| {
                let n = self.counts[b] as f64;
                if self.counts[b] < 2 {
                    return None;
                }
                let mean = self.phi_sums[b] / n;
                let var = ((self.phi_sq_sums[b] - n * mean * mean) / (n - 1.0)).max(0.0);
                Some((var / n).sqrt())
            })
            .collect()
    }

    pub fn failure_value(&self) -> Option<f64> {
        self.normalized()[self.failure_bin()]
    }
}

/// Decodes one codeword with ungated DSCF and bins its `phi`.
///
/// `payload` is the transmitted payload (information bits and CRC); a decoded
/// payload that differs from it lands in the failure bin whatever the CRC says.
pub fn record_codeword(
    dist: &mut MetricDistribution,
    decoder: &mut FlipDecoder<'_>,
    payload: &[u8],
    alpha_ch: &[f64],
    c: f64,
) -> Result<DecodeOutcome> {
    let outcome = decoder.decode_dscf_with_phi(alpha_ch, dist.max_trials(), c);
    let phi = outcome.phi.ok_or(Error::TooFewMetrics(dist.max_trials()))?;
    dist.record(outcome.trials_used, outcome.payload_hat != payload, phi);
    Ok(outcome)
}

/// Runs the ungated DSCF decoder on `codewords` codewords and bins `phi`.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_distribution(
    spec: &CodeSpec,
    crc: &CrcSpec,
    channel: &ChannelConfig,
    max_trials: usize,
    c: f64,
    codewords: u64,
    workers: usize,
) -> Result<MetricDistribution> {
    if codewords < 1 {
        return Err(Error::Config("need at least one codeword".into()));
    }
    if max_trials < 2 {
        return Err(Error::Config("phi needs T >= 2".into()));
    }
    if c.is_nan() || c <= 0.0 {
        return Err(Error::Config(format!("c must be positive, got {c}")));
    }
    Simulator::new(spec, crc, *channel)?;
    let pool = thread_pool(workers)?;
    let mut dist = MetricDistribution::new(channel.snr_db(), max_trials);
    let mut next = 0;
    while next < codewords {
        let end = (next + BATCH_SIZE).min(codewords);
        let batch = pool.install(|| {
            par_indexed(
                next..end,
                || Simulator::new(spec, crc, *channel).expect("validated"),
                |sim, i| {
                    let rec = sim.run_with(i, |dec, llr| dec.decode_dscf_with_phi(llr, max_trials, c));
                    let phi = rec.outcome.phi.expect("T >= 2");
                    (rec.outcome.trials_used, rec.frame_error, phi)
                },
            )
        });
        for (t, failed, phi) in batch {
            dist.record(t, failed, phi);
        }
        next = end;
    }
    Ok(dist)
}

/// Threshold for one SNR point: mean `phi` of the failure bin.
pub fn extract_threshold(dist: &MetricDistribution) -> Result<f64> {
    dist.failure_value().ok_or(Error::EmptyFailureBin)
}

/// Per-SNR thresholds plus the reduced trial budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdTable {
    rows: Vec<(f64, f64)>,
    t_reduced: usize,
}

impl ThresholdTable {
    pub fn new(rows: Vec<(f64, f64)>, t_reduced: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyTable);
        }
        for w in rows.windows(2) {
            if w[0].0.is_nan() || w[1].0.is_nan() || w[0].0 >= w[1].0 {
                return Err(Error::InvalidTable(format!(
                    "SNR values must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(snr, phi)) = rows.iter().find(|(_, p)| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidTable(format!("threshold {phi} at {snr} dB must be positive")));
        }
        Ok(Self { rows, t_reduced })
    }

    pub fn rows(&self) -> &[(f64, f64)] {
        &self.rows
    }

    pub fn t_reduced(&self) -> usize {
        self.t_reduced
    }

    /// Exact match, else linear interpolation, clamped outside the range.
    pub fn lookup(&self, snr_db: f64) -> Result<f64> {
        let rows = &self.rows;
        let (first, last) = match (rows.first(), rows.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::EmptyTable),
        };
        if snr_db <= first.0 {
            return Ok(first.1);
        }
        if snr_db >= last.0 {
            return Ok(last.1);
        }
        let hi = rows.partition_point(|&(s, _)| s < snr_db);
        let (s1, p1) = rows[hi];
        if s1 == snr_db {
            return Ok(p1);
        }
        let (s0, p0) = rows[hi - 1];
        Ok(p0 + (p1 - p0) * (snr_db - s0) / (s1 - s0))
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# t_red={}\nsnr_db,phi_thr\n", self.t_reduced);
        for (s, p) in &self.rows {
            let _ = writeln!(out, "{s},{p}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut t_red = None;
        let mut header = false;
        let mut rows = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let bad = |reason: String| Error::Parse {
                line: lineno + 1,
                reason,
            };
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("t_red=") {
                    t_red = Some(v.trim().parse().map_err(|_| bad(format!("bad t_red {v:?}")))?);
                }
                continue;
            }
            if !header {
                if line != "snr_db,phi_thr" {
                    return Err(bad("expected header snr_db,phi_thr".into()));
                }
                header = true;
                continue;
            }
            let (s, p) = line
                .split_once(',')
                .ok_or_else(|| bad("expected two fields".into()))?;
            let s: f64 = s.trim().parse().map_err(|_| bad(format!("bad SNR {s:?}")))?;
            let p: f64 = p.trim().parse().map_err(|_| bad(format!("bad threshold {p:?}")))?;
            rows.push((s, p));
        }
        let t_red = t_red.ok_or_else(|| Error::InvalidTable("missing '# t_red=<int>' line".into()))?;
        Self::new(rows, t_red)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(io_err(path))
    }
}

/// `snr_db,bin,count,phi_avg` rows; empty bins have an empty `phi_avg`.
pub fn distributions_to_csv(dists: &[MetricDistribution]) -> String {
    let mut out = String::from("snr_db,bin,count,phi_avg\n");
    for d in dists {
        for (bin, (avg, count)) in d.normalized().iter().zip(d.counts()).enumerate() {
            let label = if bin == d.failure_bin() {
                "fail".to_string()
            } else {
                bin.to_string()
            };
            let avg = avg.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{label},{count},{avg}", d.snr_db());
        }
    }
    out
}

pub fn write_distributions(dists: &[MetricDistribution], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, distributions_to_csv(dists)).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_examples() {
        let table = ThresholdTable::new(vec![(2.0, 10.0), (2.5, 8.0)], 3).unwrap();
        assert_eq!(table.lookup(2.25).unwrap(), 9.0);
        assert_eq!(table.lookup(3.0).unwrap(), 8.0);
        assert_eq!(table.lookup(2.0).unwrap(), 10.0);
        assert_eq!(table.lookup(2.5).unwrap(), 8.0);
        assert_eq!(table.lookup(1.0).unwrap(), 10.0);
        let three = ThresholdTable::new(vec![(1.0, 4.0), (2.0, 6.0), (3.0, 5.0)], 2).unwrap();
        assert_eq!(three.lookup(2.0).unwrap(), 6.0);
        assert_eq!(three.lookup(2.5).unwrap(), 5.5);
    }

    #[test]
    fn table_validation() {
        assert!(matches!(ThresholdTable::new(vec![], 3), Err(Error::EmptyTable)));
        assert!(ThresholdTable::new(vec![(2.0, 1.0), (2.0, 1.0)], 3).is_err());
        assert!(ThresholdTable::new(vec![(2.0, 0.0)], 3).is_err());
    }

    #[test]
    fn table_csv_round_trip() {
        let table = ThresholdTable::new(vec![(1.0, 12.5), (2.25, 9.038701419455)], 3).unwrap();
        let text = table.to_csv();
        assert!(text.starts_with("# t_red=3\nsnr_db,phi_thr\n"));
        assert_eq!(ThresholdTable::parse(&text).unwrap(), table);
        assert!(ThresholdTable::parse("snr_db,phi_thr\n1,2\n").is_err());
        assert!(ThresholdTable::parse("# t_red=3\nsnr,phi\n1,2\n").is_err());
    }

    #[test]
    fn synthetic_threshold() {
        let mut dist = MetricDistribution::new(2.25, 10);
        dist.record(0, false, 5.0);
        dist.record(7, true, 10.0);
        dist.record(10, true, 8.0);
        assert_eq!(dist.counts()[11], 2);
        assert_eq!(extract_threshold(&dist).unwrap(), 9.0);
        assert_eq!(dist.total(), 3);
        let norm = dist.normalized();
        assert_eq!(norm[0], Some(5.0));
        assert!(norm[1..11].iter().all(Option::is_none));
        let se = dist.standard_errors();
        assert_eq!(se[11], Some(1.0));
        assert_eq!(se[0], None);
    }

    #[test]
    fn empty_failure_bin() {
        let mut dist = MetricDistribution::new(2.25, 10);
        dist.record(0, false, 1.0);
        assert!(matches!(extract_threshold(&dist), Err(Error::EmptyFailureBin)));
    }

    #[test]
    fn failure_value_from_sums() {
        let mut sums = vec![0.0; 12];
        let mut counts = vec![0; 12];
        sums[11] = 9.04 * 4.0;
        counts[11] = 4;
        let dist = MetricDistribution::from_parts(2.25, sums, counts).unwrap();
        assert!((extract_threshold(&dist).unwrap() - 9.04).abs() < 1e-12);
    }

    #[test]
    fn dump_format() {
        let mut dist = MetricDistribution::new(2.0, 2);
        dist.record(0, false, 1.5);
        dist.record(0, true, 4.0);
        let text = distributions_to_csv(&[dist]);
        assert_eq!(
            text,
            "snr_db,bin,count,phi_avg\n2,0,1,1.5\n2,1,0,\n2,2,0,\n2,fail,1,4\n"
        );
    }
}
