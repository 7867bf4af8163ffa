//! SC-flip and dynamic SC-flip (order one) decoding, and the variance-based
//! early-stopping gate for DSCF.
//!
//! Every decoder starts with one plain SC pass. If its CRC fails, a flip list
//! of candidate bit indices is built once from that pass's decision LLRs and
//! trial `t` re-runs SC with candidate `t` flipped, stopping at the first CRC
//! success. The gated DSCF decoder computes the sample variance `phi` of the
//! candidate metrics and drops the trial budget to `T_red` when `phi` exceeds a
//! calibrated threshold.

use std::fmt;
use std::str::FromStr;

use crate::code::CodeSpec;
use crate::crc::CrcSpec;
use crate::error::{Error, Result};
use crate::sc::ScDecoder;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlipFlavor {
    /// `M_i = |alpha_dec[i]|`
    Scf,
    /// `M_i = |alpha_dec[i]| + (1/c) sum_{j <= i, j in A} ln(1 + exp(-c |alpha_dec[j]|))`
    Dscf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipCandidate {
    pub bit_index: usize,
    pub metric: f64,
}

/// Flip candidates in ascending metric order, ties broken by ascending index.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipList {
    entries: Vec<FlipCandidate>,
    flavor: FlipFlavor,
}

impl FlipList {
    /// Keeps the `t` smallest of `(index, metric)` pairs.
    fn select(mut entries: Vec<FlipCandidate>, t: usize, flavor: FlipFlavor) -> Self {
        let cmp = |a: &FlipCandidate, b: &FlipCandidate| {
            a.metric
                .total_cmp(&b.metric)
                .then(a.bit_index.cmp(&b.bit_index))
        };
        let t = t.min(entries.len());
        if t == 0 {
            entries.clear();
        } else if t < entries.len() {
            entries.select_nth_unstable_by(t - 1, cmp);
            entries.truncate(t);
        }
        entries.sort_unstable_by(cmp);
        Self { entries, flavor }
    }

    pub fn entries(&self) -> &[FlipCandidate] {
        &self.entries
    }

    pub fn flavor(&self) -> FlipFlavor {
        self.flavor
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|e| e.bit_index)
    }

    pub fn metrics(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.metric).collect()
    }
}

/// SCF flip list: the `t` non-frozen bits with the smallest `|alpha_dec|`.
pub fn scf_metrics(alpha_dec: &[f64], spec: &CodeSpec, t: usize) -> FlipList {
    let entries = spec
        .info_set()
        .iter()
        .map(|&i| FlipCandidate {
            bit_index: i,
            metric: alpha_dec[i].abs(),
        })
        .collect();
    FlipList::select(entries, t, FlipFlavor::Scf)
}

/// `ln(1 + exp(-x))` for `x >= 0`.
#[inline]
pub fn softplus_neg(x: f64) -> f64 {
    (-x).exp().ln_1p()
}

/// DSCF-1 metric for every non-frozen bit, in ascending index order.
pub fn dscf_all_metrics(alpha_dec: &[f64], spec: &CodeSpec, c: f64) -> Result<Vec<f64>> {
    if c.is_nan() || c <= 0.0 {
        return Err(Error::Config(format!("DSCF parameter c must be positive, got {c}")));
    }
    let inv_c = 1.0 / c;
    let mut acc = 0.0;
    Ok(spec
        .info_set()
        .iter()
        .map(|&i| {
            let a = alpha_dec[i].abs();
            acc += softplus_neg(c * a);
            a + inv_c * acc
        })
        .collect())
}

/// DSCF-1 flip list: the `t` smallest metrics of [`dscf_all_metrics`].
pub fn dscf_metrics(alpha_dec: &[f64], spec: &CodeSpec, t: usize, c: f64) -> Result<FlipList> {
    let metrics = dscf_all_metrics(alpha_dec, spec, c)?;
    let entries = spec
        .info_set()
        .iter()
        .zip(metrics)
        .map(|(&bit_index, metric)| FlipCandidate { bit_index, metric })
        .collect();
    Ok(FlipList::select(entries, t, FlipFlavor::Dscf))
}

/// Sample variance with divisor `len - 1`.
pub fn sample_variance(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::TooFewMetrics(values.len()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(ss / (n - 1.0))
}

/// Early-stopping metric `phi`: sample variance of the flip-list metrics.
pub fn early_stop_metric(flip_list: &FlipList) -> Result<f64> {
    sample_variance(&flip_list.metrics())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyStopConfig {
    pub phi_threshold: f64,
    pub t_reduced: usize,
    pub enabled: bool,
}

impl EarlyStopConfig {
    pub fn new(phi_threshold: f64, t_reduced: usize) -> Self {
        Self {
            phi_threshold,
            t_reduced,
            enabled: true,
        }
    }

    pub fn disabled() -> Self {
        Self {
            phi_threshold: f64::INFINITY,
            t_reduced: 0,
            enabled: false,
        }
    }

    pub fn validate(&self, max_trials: usize) -> Result<()> {
        if self.t_reduced > max_trials {
            return Err(Error::Config(format!(
                "T_red ({}) exceeds T ({max_trials})",
                self.t_reduced
            )));
        }
        if self.enabled && (self.phi_threshold.is_nan() || self.phi_threshold < 0.0) {
            return Err(Error::Config(format!(
                "threshold {} must be non-negative",
                self.phi_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub payload_hat: Vec<u8>,
    pub u_hat: Vec<u8>,
    /// Extra SC passes beyond the first.
    pub trials_used: usize,
    pub crc_ok: bool,
    pub early_stopped: bool,
    pub phi: Option<f64>,
}

impl DecodeOutcome {
    /// The first `k` payload bits.
    pub fn message<'a>(&'a self, spec: &CodeSpec) -> &'a [u8] {
        &self.payload_hat[..spec.k_info()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    Sc,
    Scf,
    Dscf,
    DscfEs,
}

impl DecoderKind {
    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::Sc => "sc",
            DecoderKind::Scf => "scf",
            DecoderKind::Dscf => "dscf",
            DecoderKind::DscfEs => "dscf-es",
        }
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sc" => Ok(Self::Sc),
            "scf" => Ok(Self::Scf),
            "dscf" => Ok(Self::Dscf),
            "dscf-es" => Ok(Self::DscfEs),
            other => Err(Error::Config(format!("unknown decoder {other:?}"))),
        }
    }
}

/// Decoding parameters shared by all flavours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderParams {
    pub kind: DecoderKind,
    pub max_trials: usize,
    pub c: f64,
    pub early_stop: EarlyStopConfig,
}

impl DecoderParams {
    pub fn new(kind: DecoderKind, max_trials: usize, c: f64) -> Self {
        Self {
            kind,
            max_trials,
            c,
            early_stop: EarlyStopConfig::disabled(),
        }
    }

    pub fn with_early_stop(mut self, es: EarlyStopConfig) -> Self {
        self.early_stop = es;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if matches!(self.kind, DecoderKind::Dscf | DecoderKind::DscfEs) && (self.c.is_nan() || self.c <= 0.0) {
            return Err(Error::Config(format!("c must be positive, got {}", self.c)));
        }
        self.early_stop.validate(self.max_trials)
    }
}

/// Flip decoder for one code, with per-worker scratch.
#[derive(Debug, Clone)]
pub struct FlipDecoder<'a> {
    spec: &'a CodeSpec,
    crc: &'a CrcSpec,
    sc: ScDecoder,
    payload: Vec<u8>,
}

impl<'a> FlipDecoder<'a> {
    pub fn new(spec: &'a CodeSpec, crc: &'a CrcSpec) -> Result<Self> {
        if crc.degree() > spec.payload_len() {
            return Err(Error::CrcLongerThanPayload {
                non_frozen: spec.payload_len(),
                r_crc: crc.degree(),
            });
        }
        if crc.degree() != spec.r_crc() {
            return Err(Error::Config(format!(
                "CRC degree {} does not match code r = {}",
                crc.degree(),
                spec.r_crc()
            )));
        }
        Ok(Self {
            spec,
            crc,
            sc: ScDecoder::new(spec.n_bits()),
            payload: Vec::with_capacity(spec.payload_len()),
        })
    }

    pub fn spec(&self) -> &CodeSpec {
        self.spec
    }

    /// One SC pass; returns whether the CRC of the estimate passes.
    fn pass(&mut self, alpha_ch: &[f64], flips: &[usize]) -> bool {
        self.sc.run(alpha_ch, self.spec.frozen_mask(), flips);
        self.payload.clear();
        let u = self.sc.u_hat();
        self.payload.extend(self.spec.info_set().iter().map(|&i| u[i]));
        self.crc.check(&self.payload).expect("payload longer than CRC")
    }

    fn outcome(&self, trials_used: usize, crc_ok: bool, early_stopped: bool, phi: Option<f64>) -> DecodeOutcome {
        DecodeOutcome {
            payload_hat: self.payload.clone(),
            u_hat: self.sc.u_hat().to_vec(),
            trials_used,
            crc_ok,
            early_stopped,
            phi,
        }
    }

    /// Decision LLRs of the most recent pass.
    pub fn alpha_dec(&self) -> &[f64] {
        self.sc.alpha_dec()
    }

    /// Plain SC.
    pub fn decode_sc(&mut self, alpha_ch: &[f64]) -> DecodeOutcome {
        let ok = self.pass(alpha_ch, &[]);
        self.outcome(0, ok, false, None)
    }

    /// Trial loop: pass `t` flips entry `t` of `flip_list`, `t = 1..=budget`.
    ///
    /// Returns at the first CRC success. On failure `trials_used` is the
    /// number of passes actually run and the estimate is that of the last
    /// pass. With a zero budget this is a single unflipped SC pass.
    pub fn scf_decode(&mut self, alpha_ch: &[f64], flip_list: &FlipList, budget: usize) -> DecodeOutcome {
        self.trial_loop(alpha_ch, flip_list, budget, false, None)
    }

    fn trial_loop(
        &mut self,
        alpha_ch: &[f64],
        flip_list: &FlipList,
        budget: usize,
        early_stopped: bool,
        phi: Option<f64>,
    ) -> DecodeOutcome {
        let budget = budget.min(flip_list.len());
        if budget == 0 {
            let ok = self.pass(alpha_ch, &[]);
            return self.outcome(0, ok, early_stopped, phi);
        }
        for (t, idx) in flip_list.indices().take(budget).enumerate() {
            if self.pass(alpha_ch, &[idx]) {
                return self.outcome(t + 1, true, early_stopped, phi);
            }
        }
        self.outcome(budget, false, early_stopped, phi)
    }

    /// SCF with the `|alpha_dec|` candidate metric.
    pub fn decode_scf(&mut self, alpha_ch: &[f64], max_trials: usize) -> DecodeOutcome {
        if self.pass(alpha_ch, &[]) {
            return self.outcome(0, true, false, None);
        }
        let list = scf_metrics(self.sc.alpha_dec(), self.spec, max_trials);
        self.trial_loop(alpha_ch, &list, max_trials, false, None)
    }

    /// DSCF-1 with the optional early-stopping gate.
    ///
    /// `phi` is only evaluated when the first pass fails its CRC and the flip
    /// list holds at least two candidates; without it the gate stays open.
    pub fn decode_dscf(
        &mut self,
        alpha_ch: &[f64],
        max_trials: usize,
        c: f64,
        es: &EarlyStopConfig,
    ) -> DecodeOutcome {
        if self.pass(alpha_ch, &[]) {
            return self.outcome(0, true, false, None);
        }
        let list = dscf_metrics(self.sc.alpha_dec(), self.spec, max_trials, c).expect("c > 0");
        let phi = early_stop_metric(&list).ok();
        let mut budget = max_trials;
        let mut early_stopped = false;
        if es.enabled {
            if let Some(p) = phi {
                if p > es.phi_threshold {
                    budget = es.t_reduced;
                    early_stopped = true;
                }
            }
        }
        self.trial_loop(alpha_ch, &list, budget, early_stopped, phi)
    }

    /// Ungated DSCF-1 that reports `phi` for every codeword, including those
    /// whose first pass already succeeds. Used to collect metric statistics.
    pub fn decode_dscf_with_phi(&mut self, alpha_ch: &[f64], max_trials: usize, c: f64) -> DecodeOutcome {
        let ok = self.pass(alpha_ch, &[]);
        let list = dscf_metrics(self.sc.alpha_dec(), self.spec, max_trials, c).expect("c > 0");
        let phi = early_stop_metric(&list).ok();
        if ok {
            return self.outcome(0, true, false, phi);
        }
        self.trial_loop(alpha_ch, &list, max_trials, false, phi)
    }

    pub fn decode(&mut self, alpha_ch: &[f64], params: &DecoderParams) -> DecodeOutcome {
        match params.kind {
            DecoderKind::Sc => self.decode_sc(alpha_ch),
            DecoderKind::Scf => self.decode_scf(alpha_ch, params.max_trials),
            DecoderKind::Dscf => {
                self.decode_dscf(alpha_ch, params.max_trials, params.c, &EarlyStopConfig::disabled())
            }
            DecoderKind::DscfEs => {
                self.decode_dscf(alpha_ch, params.max_trials, params.c, &params.early_stop)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p8() -> CodeSpec {
        CodeSpec::construct(8, 4, 0, 2.365).unwrap()
    }

    #[test]
    fn scf_list_examples() {
        let spec = p8();
        let mut alpha = vec![9.0; 8];
        for (&i, a) in spec.info_set().iter().zip([3.0, -1.0, 2.0, -5.0]) {
            alpha[i] = a;
        }
        let list = scf_metrics(&alpha, &spec, 2);
        assert_eq!(
            list.entries(),
            &[
                FlipCandidate { bit_index: 5, metric: 1.0 },
                FlipCandidate { bit_index: 6, metric: 2.0 }
            ]
        );
        assert!(scf_metrics(&alpha, &spec, 0).is_empty());
        assert_eq!(scf_metrics(&alpha, &spec, 50).len(), 4);

        alpha[6] = -1.0;
        let list = scf_metrics(&alpha, &spec, 2);
        assert_eq!(list.indices().collect::<Vec<_>>(), vec![5, 6]);
    }

    #[test]
    fn dscf_metric_examples() {
        let ln2_over_c = std::f64::consts::LN_2 / 0.3;
        let single = CodeSpec::parse_frozen_set("0\n", 2, 0).unwrap();
        let m = dscf_all_metrics(&[7.0, 0.0], &single, 0.3).unwrap();
        assert!((m[0] - ln2_over_c).abs() <= 1e-12 * ln2_over_c);
        assert!((m[0] - 2.31049060187).abs() < 1e-10);

        let two = CodeSpec::parse_frozen_set("0\n1\n", 4, 0).unwrap();
        let m = dscf_all_metrics(&[5.0, 5.0, 0.0, 0.0], &two, 0.3).unwrap();
        assert!((m[1] - 2.0 * ln2_over_c).abs() <= 1e-12 * m[1]);
        assert!(dscf_all_metrics(&[0.0; 4], &two, 0.0).is_err());
    }

    #[test]
    fn softplus_stable() {
        assert_eq!(softplus_neg(1e6), 0.0);
        assert!((softplus_neg(0.0) - std::f64::consts::LN_2).abs() < 1e-16);
        assert!((softplus_neg(40.0) - (-40f64).exp()).abs() < 1e-30);
    }

    #[test]
    fn phi_examples() {
        assert_eq!(sample_variance(&[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(sample_variance(&[4.5; 7]).unwrap(), 0.0);
        assert_eq!(sample_variance(&[0.0, 10.0]).unwrap(), 50.0);
        assert!(matches!(sample_variance(&[1.0]), Err(Error::TooFewMetrics(1))));
    }

    #[test]
    fn decoder_names_round_trip() {
        for k in [DecoderKind::Sc, DecoderKind::Scf, DecoderKind::Dscf, DecoderKind::DscfEs] {
            assert_eq!(k.name().parse::<DecoderKind>().unwrap(), k);
        }
        assert!("scl".parse::<DecoderKind>().is_err());
    }

    #[test]
    fn early_stop_validation() {
        assert!(EarlyStopConfig::new(1.0, 11).validate(10).is_err());
        assert!(EarlyStopConfig::new(-1.0, 3).validate(10).is_err());
        assert!(EarlyStopConfig::new(1.0, 3).validate(10).is_ok());
        assert!(EarlyStopConfig::disabled().validate(0).is_ok());
    }

    #[test]
    fn crc_must_match_code() {
        let spec = CodeSpec::construct(64, 24, 8, 3.0).unwrap();
        assert!(FlipDecoder::new(&spec, &CrcSpec::crc16()).is_err());
        let crc8 = CrcSpec::new(8, 0x07).unwrap();
        assert!(FlipDecoder::new(&spec, &crc8).is_ok());
    }
}
