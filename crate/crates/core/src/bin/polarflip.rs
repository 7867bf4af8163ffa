//! `polarflip` command-line front end.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use polarflip::calibration::{calibrate_distribution, extract_threshold, write_distributions};
use polarflip::sim::{emit_figure_data, emit_results, run_campaign};
use polarflip::{
    CampaignConfig, ChannelConfig, CodeSpec, CrcSpec, DecoderKind, DecoderParams, SnrType,
    ThresholdTable,
};

#[derive(Parser)]
#[command(name = "polarflip", version, about = "Polar-code SC/SCF/DSCF simulation with early stopping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a frozen set and write it to a file.
    Construct {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a frame-error-rate / execution-time campaign.
    Simulate(SimulateArgs),
    /// Derive per-SNR early-stopping thresholds.
    Calibrate(CalibrateArgs),
}

#[derive(Args)]
struct CodeArgs {
    /// Code length N.
    #[arg(long, default_value_t = 1024)]
    n: usize,
    /// Information bits k.
    #[arg(long, default_value_t = 512)]
    k: usize,
    /// CRC length r.
    #[arg(long, default_value_t = 16)]
    crc_bits: u32,
    /// CRC generator without the leading term, hex.
    #[arg(long, default_value = "0x8005", value_parser = parse_hex)]
    crc_poly: u64,
    /// Design SNR in dB for the built-in construction.
    #[arg(long, default_value_t = 2.365)]
    design_snr: f64,
    /// Import the frozen set instead of constructing it.
    #[arg(long)]
    frozen_file: Option<PathBuf>,
    /// SNR convention: ebn0 (R = k/N), ebn0-coded (R = (k+r)/N) or esn0.
    #[arg(long, default_value = "ebn0")]
    snr_type: SnrType,
}

impl CodeArgs {
    fn spec(&self) -> Result<CodeSpec> {
        let r = self.crc_bits as usize;
        let spec = match &self.frozen_file {
            Some(path) => {
                let spec = CodeSpec::load_frozen_set(path, self.n, r)?;
                if spec.k_info() != self.k {
                    bail!(
                        "{} leaves {} non-frozen bits, expected k + r = {}",
                        path.display(),
                        spec.payload_len(),
                        self.k + r
                    );
                }
                spec
            }
            None => CodeSpec::construct_with(self.n, self.k, r, self.design_snr, self.snr_type)?,
        };
        Ok(spec)
    }

    fn crc(&self) -> Result<CrcSpec> {
        Ok(CrcSpec::new(self.crc_bits, self.crc_poly)?)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// SNR points in dB: `start:step:stop` or a comma list.
    #[arg(long, default_value = "1.0:0.25:2.75", value_parser = parse_snr_list)]
    snr: SnrList,
    #[arg(long, default_value = "dscf")]
    decoder: DecoderKind,
    /// Maximum trials T beyond the first SC pass.
    #[arg(long, default_value_t = 10)]
    max_trials: usize,
    /// Reduced budget T_red; overrides the threshold file's value.
    #[arg(long)]
    t_red: Option<usize>,
    /// DSCF metric constant c.
    #[arg(long, default_value_t = 0.3)]
    c_param: f64,
    /// Threshold table (required for dscf-es).
    #[arg(long)]
    threshold_file: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Frame errors after which an SNR point stops (0 = run max-codewords).
    #[arg(long, default_value_t = 100)]
    min_errors: u64,
    /// Per-SNR overrides, e.g. `2.5=500,2.75=300`.
    #[arg(long, value_parser = parse_overrides)]
    min_errors_at: Option<Overrides>,
    #[arg(long, default_value_t = 100_000)]
    max_codewords: u64,
    /// Worker threads (0 = all CPUs).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write t_av.dat, v_t.dat and fer.dat here.
    #[arg(long)]
    figure_dir: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[arg(long, default_value = "1.0:0.25:2.75", value_parser = parse_snr_list)]
    snr: SnrList,
    #[arg(long, default_value_t = 10)]
    max_trials: usize,
    /// Reduced budget stored in the table.
    #[arg(long, default_value_t = 3)]
    t_red: usize,
    #[arg(long, default_value_t = 0.3)]
    c_param: f64,
    /// Codewords per SNR point.
    #[arg(long, default_value_t = 100_000)]
    codewords: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Threshold table output.
    #[arg(long)]
    out: PathBuf,
    /// Optional dump of the binned metric distributions.
    #[arg(long)]
    dist_out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct SnrList(Vec<f64>);

#[derive(Clone, Debug)]
struct Overrides(Vec<(f64, u64)>);

fn parse_hex(s: &str) -> Result<u64, String> {
    let digits = s.trim_start_matches("0x").trim_start_matches("0X");
    u64::from_str_radix(digits, 16).map_err(|e| format!("bad hex value {s:?}: {e}"))
}

fn parse_snr_list(s: &str) -> Result<SnrList, String> {
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("bad SNR {v:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    let points = match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if step.is_nan() || step <= 0.0 || stop < start {
                return Err(format!("bad range {s:?}"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..count)
                .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
                .collect()
        }
        [_] => s.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(format!("bad SNR list {s:?}")),
    };
    if points.windows(2).any(|w| w[0] >= w[1]) {
        return Err("SNR points must be strictly increasing".into());
    }
    Ok(SnrList(points))
}

fn parse_overrides(s: &str) -> Result<Overrides, String> {
    s.split(',')
        .map(|item| {
            let (snr, count) = item
                .split_once('=')
                .ok_or_else(|| format!("expected snr=count, got {item:?}"))?;
            let snr = snr.trim().parse().map_err(|_| format!("bad SNR {snr:?}"))?;
            let count = count.trim().parse().map_err(|_| format!("bad count {count:?}"))?;
            Ok((snr, count))
        })
        .collect::<Result<_, String>>()
        .map(Overrides)
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let spec = args.code.spec()?;
    let crc = args.code.crc()?;
    let mut decoder = DecoderParams::new(args.decoder, args.max_trials, args.c_param);
    let thresholds = match &args.threshold_file {
        Some(path) => {
            let table = ThresholdTable::load(path)?;
            let t_red = args.t_red.unwrap_or(table.t_reduced());
            Some(ThresholdTable::new(table.rows().to_vec(), t_red)?)
        }
        None => None,
    };
    if args.decoder == DecoderKind::DscfEs && thresholds.is_none() {
        bail!("--decoder dscf-es requires --threshold-file");
    }
    if let (Some(t_red), None) = (args.t_red, &thresholds) {
        decoder.early_stop.t_reduced = t_red;
    }
    let mut cfg = CampaignConfig::new(spec, crc, decoder, args.snr.0);
    cfg.snr_type = args.code.snr_type;
    cfg.thresholds = thresholds;
    cfg.max_codewords = args.max_codewords;
    cfg.min_frame_errors = args.min_errors;
    cfg.min_errors_overrides = args.min_errors_at.map(|o| o.0).unwrap_or_default();
    cfg.seed = args.seed;
    cfg.workers = args.workers;

    let results = run_campaign(&cfg)?;
    for r in &results {
        eprintln!(
            "{:>6} dB  S={:<8} errors={:<6} fer={:.3e}  t_av={:.5}  v_t={}  early_stops={}",
            r.snr_db,
            r.codewords,
            r.frame_errors,
            r.fer,
            r.t_av,
            r.v_t.map_or("n/a".to_string(), |v| format!("{v:.5}")),
            r.early_stops
        );
    }
    emit_results(&results, &args.out)?;
    if let Some(dir) = &args.figure_dir {
        emit_figure_data(&results, dir)?;
    }
    Ok(())
}

fn calibrate(args: CalibrateArgs) -> Result<()> {
    let spec = args.code.spec()?;
    let crc = args.code.crc()?;
    if args.t_red > args.max_trials {
        bail!("--t-red {} exceeds --max-trials {}", args.t_red, args.max_trials);
    }
    let rate = spec.energy_rate(args.code.snr_type);
    let mut rows = Vec::new();
    let mut dists = Vec::new();
    for &snr in &args.snr.0 {
        let channel = ChannelConfig::new(snr, rate, args.seed)?;
        let dist = calibrate_distribution(
            &spec,
            &crc,
            &channel,
            args.max_trials,
            args.c_param,
            args.codewords,
            args.workers,
        )
        .with_context(|| format!("calibrating at {snr} dB"))?;
        match extract_threshold(&dist) {
            Ok(phi) => {
                eprintln!("{snr:>6} dB  phi_thr={phi:.5}  failures={}", dist.counts()[dist.failure_bin()]);
                rows.push((snr, phi));
            }
            Err(e) => eprintln!("{snr:>6} dB  skipped: {e}"),
        }
        dists.push(dist);
    }
    if let Some(path) = &args.dist_out {
        write_distributions(&dists, path)?;
    }
    let table = ThresholdTable::new(rows, args.t_red).context("no SNR point produced a threshold")?;
    table.save(&args.out)?;
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Construct { code, out } => {
            let spec = code.spec()?;
            spec.write_frozen_set(&out)?;
            eprintln!(
                "wrote {} frozen indices (N={}, k+r={}) to {}",
                spec.frozen_set().len(),
                spec.n_bits(),
                spec.payload_len(),
                out.display()
            );
        }
        Command::Simulate(args) => simulate(args)?,
        Command::Calibrate(args) => calibrate(args)?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_ranges() {
        assert_eq!(parse_snr_list("1.0:0.25:2.0").unwrap().0, vec![1.0, 1.25, 1.5, 1.75, 2.0]);
        assert_eq!(parse_snr_list("2.0,2.125").unwrap().0, vec![2.0, 2.125]);
        assert_eq!(parse_snr_list("2.25").unwrap().0, vec![2.25]);
        assert_eq!(parse_snr_list("1:0.1:1.3").unwrap().0, vec![1.0, 1.1, 1.2, 1.3]);
        assert!(parse_snr_list("2:0:3").is_err());
        assert!(parse_snr_list("2,1").is_err());
    }

    #[test]
    fn hex_and_overrides() {
        assert_eq!(parse_hex("0x8005").unwrap(), 0x8005);
        assert_eq!(parse_hex("8005").unwrap(), 0x8005);
        let o = parse_overrides("2.5=500,2.75=300").unwrap().0;
        assert_eq!(o, vec![(2.5, 500), (2.75, 300)]);
        assert!(parse_overrides("2.5").is_err());
    }
}
