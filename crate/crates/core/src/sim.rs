//! Monte Carlo campaigns: random payload, CRC, encode, BPSK/AWGN, decode.
//!
//! Codeword `i` at a given SNR is a pure function of `(seed, i)`. Campaigns
//! run in fixed-size batches of consecutive indices; within a batch codewords
//! are decoded in parallel and the results are folded in index order, and the
//! error-count stopping rule is only checked between batches. The simulated
//! count and every aggregate are therefore independent of the worker count.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::RngCore;
use rayon::prelude::*;

use crate::calibration::ThresholdTable;
use crate::channel::{codeword_rng, ChannelConfig, SnrType, StreamDomain};
use crate::code::{polar_transform, CodeSpec};
use crate::crc::CrcSpec;
use crate::error::{io_err, Error, Result};
use crate::flip::{DecodeOutcome, DecoderKind, DecoderParams, EarlyStopConfig, FlipDecoder};

/// Codewords per scheduling batch.
pub const BATCH_SIZE: u64 = 1024;

/// Generates, transmits and decodes individual codewords.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    spec: &'a CodeSpec,
    crc: &'a CrcSpec,
    channel: ChannelConfig,
    decoder: FlipDecoder<'a>,
    u: Vec<u8>,
    x: Vec<u8>,
    llr: Vec<f64>,
}

/// One simulated codeword.
#[derive(Debug, Clone, PartialEq)]
pub struct CodewordRecord {
    pub index: u64,
    /// Transmitted payload (information bits followed by CRC).
    pub payload: Vec<u8>,
    pub outcome: DecodeOutcome,
    /// Decoded payload differs from the transmitted one.
    pub frame_error: bool,
}

impl<'a> Simulator<'a> {
    pub fn new(spec: &'a CodeSpec, crc: &'a CrcSpec, channel: ChannelConfig) -> Result<Self> {
        if channel.noise_sigma() <= 0.0 {
            return Err(Error::ZeroNoise);
        }
        let n = spec.n_bits();
        Ok(Self {
            spec,
            crc,
            channel,
            decoder: FlipDecoder::new(spec, crc)?,
            u: vec![0; n],
            x: vec![0; n],
            llr: vec![0.0; n],
        })
    }

    pub fn channel(&self) -> &ChannelConfig {
        &self.channel
    }

    /// Random information bits plus CRC for codeword `index`.
    pub fn payload(&self, index: u64) -> Vec<u8> {
        let mut rng = codeword_rng(self.channel.seed(), StreamDomain::Payload, index);
        let k = self.spec.k_info();
        let mut info = Vec::with_capacity(k);
        while info.len() < k {
            let word = rng.next_u64();
            let take = (k - info.len()).min(64);
            info.extend((0..take).map(|b| ((word >> b) & 1) as u8));
        }
        self.crc.append(&info)
    }

    /// Channel LLRs received for codeword `index`; also returns its payload.
    pub fn received(&mut self, index: u64) -> (Vec<u8>, &[f64]) {
        let payload = self.payload(index);
        self.u.fill(0);
        for (&i, &b) in self.spec.info_set().iter().zip(&payload) {
            self.u[i] = b;
        }
        self.x.copy_from_slice(&self.u);
        polar_transform(&mut self.x);
        self.channel.fill_noise(&mut self.llr, index);
        let scale = 2.0 / self.channel.noise_variance();
        for (l, &b) in self.llr.iter_mut().zip(&self.x) {
            *l = scale * (*l + 1.0 - 2.0 * b as f64);
        }
        (payload, &self.llr)
    }

    pub fn run(&mut self, index: u64, params: &DecoderParams) -> CodewordRecord {
        self.run_with(index, |dec, llr| dec.decode(llr, params))
    }

    /// Decodes codeword `index` with an arbitrary decoding routine.
    pub fn run_with<F>(&mut self, index: u64, decode: F) -> CodewordRecord
    where
        F: FnOnce(&mut FlipDecoder<'a>, &[f64]) -> DecodeOutcome,
    {
        let (payload, _) = self.received(index);
        let outcome = decode(&mut self.decoder, &self.llr);
        let frame_error = outcome.payload_hat != payload;
        CodewordRecord {
            index,
            payload,
            outcome,
            frame_error,
        }
    }
}

/// Runs `work` on indices `range` in parallel, results in index order.
pub(crate) fn par_indexed<T, S, I, F>(range: std::ops::Range<u64>, init: I, work: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, u64) -> T + Sync + Send,
{
    range.into_par_iter().map_init(init, work).collect()
}

pub(crate) fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Exact integer accumulator for trial counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrialStats {
    pub count: u64,
    pub sum: u64,
    pub sum_sq: u128,
}

impl TrialStats {
    pub fn push(&mut self, t: usize) {
        self.count += 1;
        self.sum += t as u64;
        self.sum_sq += (t as u128) * (t as u128);
    }

    pub fn merge(&mut self, other: &TrialStats) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    /// Mean number of trials; `None` when empty.
    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum as f64 / self.count as f64)
    }

    /// Sample variance (divisor `S - 1`), evaluated from exact integer sums.
    pub fn variance(&self) -> Option<f64> {
        if self.count < 2 {
            return None;
        }
        let s = self.count as u128;
        let num = s * self.sum_sq - (self.sum as u128) * (self.sum as u128);
        Some(num as f64 / (s * (s - 1)) as f64)
    }
}

/// Mean and sample variance of per-codeword trial counts.
pub fn compute_stats(trials: &[usize]) -> (f64, Option<f64>) {
    let mut stats = TrialStats::default();
    for &t in trials {
        stats.push(t);
    }
    (stats.mean().unwrap_or(0.0), stats.variance())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub spec: CodeSpec,
    pub crc: CrcSpec,
    pub snr_type: SnrType,
    pub snr_points: Vec<f64>,
    pub decoder: DecoderParams,
    /// Required for [`DecoderKind::DscfEs`]; `t_red` comes from the table.
    pub thresholds: Option<ThresholdTable>,
    pub max_codewords: u64,
    /// Stop an SNR point once this many frame errors are seen; 0 disables.
    pub min_frame_errors: u64,
    /// Per-SNR overrides of `min_frame_errors`, matched to within 1e-9 dB.
    pub min_errors_overrides: Vec<(f64, u64)>,
    pub seed: u64,
    /// Worker threads; 0 picks the number of CPUs.
    pub workers: usize,
}

impl CampaignConfig {
    pub fn new(spec: CodeSpec, crc: CrcSpec, decoder: DecoderParams, snr_points: Vec<f64>) -> Self {
        Self {
            spec,
            crc,
            snr_type: SnrType::EbN0,
            snr_points,
            decoder,
            thresholds: None,
            max_codewords: 100_000,
            min_frame_errors: 100,
            min_errors_overrides: Vec::new(),
            seed: 0,
            workers: 0,
        }
    }

    pub fn min_errors_at(&self, snr_db: f64) -> u64 {
        self.min_errors_overrides
            .iter()
            .find(|(s, _)| (s - snr_db).abs() < 1e-9)
            .map_or(self.min_frame_errors, |&(_, m)| m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_codewords < 1 {
            return Err(Error::Config("max_codewords must be at least 1".into()));
        }
        if self.snr_points.is_empty() {
            return Err(Error::Config("no SNR points".into()));
        }
        if self.crc.degree() != self.spec.r_crc() {
            return Err(Error::Config(format!(
                "CRC degree {} does not match code r = {}",
                self.crc.degree(),
                self.spec.r_crc()
            )));
        }
        self.decoder.validate()?;
        if self.decoder.kind == DecoderKind::DscfEs {
            let table = self
                .thresholds
                .as_ref()
                .ok_or_else(|| Error::Config("dscf-es needs a threshold table".into()))?;
            if table.t_reduced() > self.decoder.max_trials {
                return Err(Error::Config(format!(
                    "T_red ({}) exceeds T ({})",
                    table.t_reduced(),
                    self.decoder.max_trials
                )));
            }
            if self.decoder.max_trials < 2 {
                return Err(Error::Config("dscf-es needs T >= 2 to evaluate phi".into()));
            }
        }
        Ok(())
    }

    /// Decoder parameters at one SNR point (threshold looked up for dscf-es).
    pub fn params_at(&self, snr_db: f64) -> Result<DecoderParams> {
        let mut params = self.decoder;
        if params.kind == DecoderKind::DscfEs {
            let table = self
                .thresholds
                .as_ref()
                .ok_or_else(|| Error::Config("dscf-es needs a threshold table".into()))?;
            params.early_stop = EarlyStopConfig::new(table.lookup(snr_db)?, table.t_reduced());
        }
        Ok(params)
    }

    pub fn channel_at(&self, snr_db: f64) -> Result<ChannelConfig> {
        ChannelConfig::new(snr_db, self.spec.energy_rate(self.snr_type), self.seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrResult {
    pub snr_db: f64,
    pub codewords: u64,
    pub frame_errors: u64,
    pub fer: f64,
    pub t_av: f64,
    /// `None` with fewer than two codewords.
    pub v_t: Option<f64>,
    pub early_stops: u64,
    pub decoder: DecoderKind,
}

/// Simulates one SNR point.
pub fn run_snr_point(cfg: &CampaignConfig, snr_db: f64, pool: &rayon::ThreadPool) -> Result<SnrResult> {
    let params = cfg.params_at(snr_db)?;
    let channel = cfg.channel_at(snr_db)?;
    // Fail early on construction errors rather than inside a worker.
    Simulator::new(&cfg.spec, &cfg.crc, channel)?;
    let min_errors = cfg.min_errors_at(snr_db);

    let mut stats = TrialStats::default();
    let mut frame_errors = 0u64;
    let mut early_stops = 0u64;
    let mut next = 0u64;
    while next < cfg.max_codewords {
        let end = (next + BATCH_SIZE).min(cfg.max_codewords);
        let batch = pool.install(|| {
            par_indexed(
                next..end,
                || Simulator::new(&cfg.spec, &cfg.crc, channel).expect("validated"),
                |sim, i| {
                    let rec = sim.run(i, &params);
                    (rec.outcome.trials_used, rec.frame_error, rec.outcome.early_stopped)
                },
            )
        });
        for (t, err, es) in batch {
            stats.push(t);
            frame_errors += err as u64;
            early_stops += es as u64;
        }
        next = end;
        if min_errors > 0 && frame_errors >= min_errors {
            break;
        }
    }
    Ok(SnrResult {
        snr_db,
        codewords: stats.count,
        frame_errors,
        fer: frame_errors as f64 / stats.count as f64,
        t_av: stats.mean().unwrap_or(0.0),
        v_t: stats.variance(),
        early_stops,
        decoder: params.kind,
    })
}

/// Runs every SNR point of the campaign in order.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<Vec<SnrResult>> {
    cfg.validate()?;
    let pool = thread_pool(cfg.workers)?;
    cfg.snr_points
        .iter()
        .map(|&snr| run_snr_point(cfg, snr, &pool))
        .collect()
}

pub const RESULTS_HEADER: &str = "snr_db,codewords,frame_errors,fer,t_av,v_t,early_stops,decoder";

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |v| v.to_string())
}

pub fn results_to_csv(results: &[SnrResult]) -> Result<String> {
    if results.is_empty() {
        return Err(Error::EmptyResults);
    }
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.snr_db,
            r.codewords,
            r.frame_errors,
            r.fer,
            r.t_av,
            fmt_opt(r.v_t),
            r.early_stops,
            r.decoder
        );
    }
    Ok(out)
}

/// Writes the results CSV.
pub fn emit_results(results: &[SnrResult], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = results_to_csv(results)?;
    fs::write(path, text).map_err(io_err(path))
}

pub fn parse_results(text: &str) -> Result<Vec<SnrResult>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == RESULTS_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                reason: format!("expected header {RESULTS_HEADER:?}"),
            })
        }
    }
    let mut out = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| Error::Parse {
            line: lineno + 1,
            reason,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 8 {
            return Err(bad(format!("expected 8 fields, found {}", fields.len())));
        }
        let f = |i: usize| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .map_err(|_| bad(format!("bad number {:?}", fields[i])))
        };
        let u = |i: usize| -> Result<u64> {
            fields[i]
                .parse::<u64>()
                .map_err(|_| bad(format!("bad count {:?}", fields[i])))
        };
        let v_t = f(5)?;
        out.push(SnrResult {
            snr_db: f(0)?,
            codewords: u(1)?,
            frame_errors: u(2)?,
            fer: f(3)?,
            t_av: f(4)?,
            v_t: (!v_t.is_nan()).then_some(v_t),
            early_stops: u(6)?,
            decoder: fields[7].parse().map_err(|e: Error| bad(e.to_string()))?,
        });
    }
    Ok(out)
}

pub fn load_results(path: impl AsRef<Path>) -> Result<Vec<SnrResult>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_results(&text)
}

/// Two-column `snr value` files for plotting average trials, trial variance
/// and FER against SNR (`t_av.dat`, `v_t.dat`, `fer.dat`).
pub fn emit_figure_data(results: &[SnrResult], dir: impl AsRef<Path>) -> Result<()> {
    if results.is_empty() {
        return Err(Error::EmptyResults);
    }
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    type Column = fn(&SnrResult) -> String;
    let series: [(&str, Column); 3] = [
        ("t_av.dat", |r| r.t_av.to_string()),
        ("v_t.dat", |r| fmt_opt(r.v_t)),
        ("fer.dat", |r| r.fer.to_string()),
    ];
    for (name, value) in series {
        let mut text = format!("# snr_db {} decoder={}\n", name.trim_end_matches(".dat"), results[0].decoder);
        for r in results {
            let _ = writeln!(text, "{} {}", r.snr_db, value(r));
        }
        let path = dir.join(name);
        fs::write(&path, text).map_err(io_err(&path))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_examples() {
        let (m, v) = compute_stats(&[0, 0, 2]);
        assert_eq!(m, 2.0 / 3.0);
        assert_eq!(v, Some(4.0 / 3.0));
        assert_eq!(compute_stats(&[0; 10]), (0.0, Some(0.0)));
        assert_eq!(compute_stats(&[10]), (10.0, None));
    }

    #[test]
    fn stats_merge_matches_push() {
        let ts = [3usize, 0, 0, 10, 1, 2, 0, 7];
        let mut all = TrialStats::default();
        ts.iter().for_each(|&t| all.push(t));
        let mut a = TrialStats::default();
        let mut b = TrialStats::default();
        ts[..3].iter().for_each(|&t| a.push(t));
        ts[3..].iter().for_each(|&t| b.push(t));
        b.merge(&a);
        assert_eq!(all, b);
    }

    fn sample(decoder: DecoderKind) -> SnrResult {
        SnrResult {
            snr_db: 2.25,
            codewords: 100_000,
            frame_errors: 779,
            fer: 779.0 / 100_000.0,
            t_av: 0.1837200783,
            v_t: Some(1.0693552038103877),
            early_stops: 0,
            decoder,
        }
    }

    #[test]
    fn csv_single_row() {
        let text = results_to_csv(&[sample(DecoderKind::Dscf)]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], RESULTS_HEADER);
        assert_eq!(lines[1].split(',').count(), 8);
        assert!(matches!(results_to_csv(&[]), Err(Error::EmptyResults)));
    }

    #[test]
    fn csv_round_trip() {
        let mut rows = vec![sample(DecoderKind::Dscf), sample(DecoderKind::DscfEs)];
        rows[1].v_t = None;
        rows[1].snr_db = 0.1 + 0.2;
        let back = parse_results(&results_to_csv(&rows).unwrap()).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn emit_empty_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        assert!(emit_results(&[], &path).is_err());
        assert!(!path.exists());
    }

    #[test]
    fn emit_reports_path() {
        let err = emit_results(&[sample(DecoderKind::Sc)], "/nonexistent-dir/x.csv").unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
    }
}
