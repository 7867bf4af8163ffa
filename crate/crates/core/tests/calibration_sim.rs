use std::process::Command;

use polarflip::calibration::{calibrate_distribution, extract_threshold, record_codeword};
use polarflip::channel::modulate;
use polarflip::sim::{load_results, run_campaign, BATCH_SIZE};
use polarflip::{
    CampaignConfig, ChannelConfig, CodeSpec, CrcSpec, DecoderKind, DecoderParams, EarlyStopConfig,
    FlipDecoder, MetricDistribution, Simulator, ThresholdTable,
};

fn small_code() -> (CodeSpec, CrcSpec) {
    (CodeSpec::construct(128, 56, 8, 2.0).unwrap(), CrcSpec::new(8, 0x07).unwrap())
}

fn reference_code() -> (CodeSpec, CrcSpec) {
    (CodeSpec::construct(1024, 512, 16, 2.365).unwrap(), CrcSpec::crc16())
}

#[test]
fn noiseless_calibration_fills_bin_zero() {
    let (spec, crc) = reference_code();
    let channel = ChannelConfig::new(20.0, 0.5, 1).unwrap();
    let dist = calibrate_distribution(&spec, &crc, &channel, 10, 0.3, 100, 1).unwrap();
    assert_eq!(dist.counts()[0], 100);
    assert_eq!(dist.total(), 100);
    assert!(dist.failure_value().is_none());
    assert!(extract_threshold(&dist).is_err());
}

#[test]
fn false_positive_lands_in_failure_bin() {
    let (spec, crc) = small_code();
    let mut dec = FlipDecoder::new(&spec, &crc).unwrap();
    let mut dist = MetricDistribution::new(3.0, 5);
    let sent = crc.append(&[1, 0, 1, 1, 0, 0, 1, 0].repeat(7));
    let other = crc.append(&[0, 1, 1, 0, 1, 0, 0, 1].repeat(7));
    let llr_of = |payload: &[u8]| -> Vec<f64> {
        let x = spec.encode(&spec.insert_payload(payload).unwrap()).unwrap();
        modulate(&x).iter().map(|s| 4.0 * s).collect()
    };
    let ok = record_codeword(&mut dist, &mut dec, &sent, &llr_of(&sent), 0.3).unwrap();
    assert_eq!((ok.trials_used, ok.crc_ok), (0, true));
    // The received word is another valid codeword: the CRC passes but the frame is wrong.
    let fp = record_codeword(&mut dist, &mut dec, &sent, &llr_of(&other), 0.3).unwrap();
    assert_eq!((fp.trials_used, fp.crc_ok), (0, true));
    assert_eq!(dist.counts(), &[1, 0, 0, 0, 0, 0, 1]);
    assert!(dist.failure_value().unwrap() >= 0.0);
}

#[test]
fn threshold_table_round_trips_through_file() {
    let table = ThresholdTable::new(vec![(2.0, 1.5), (2.5, 0.75)], 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("thr.csv");
    table.save(&path).unwrap();
    assert_eq!(ThresholdTable::load(&path).unwrap(), table);
    assert!((table.lookup(2.25).unwrap() - 1.125).abs() < 1e-12);
}

#[test]
fn high_snr_campaign_is_error_free() {
    let (spec, crc) = reference_code();
    let mut cfg = CampaignConfig::new(spec, crc, DecoderParams::new(DecoderKind::Dscf, 10, 0.3), vec![20.0]);
    cfg.max_codewords = 500;
    let r = &run_campaign(&cfg).unwrap()[0];
    assert_eq!((r.codewords, r.frame_errors), (500, 0));
    assert_eq!((r.fer, r.t_av, r.v_t), (0.0, 0.0, Some(0.0)));
}

fn small_campaign(kind: DecoderKind, snr: f64) -> CampaignConfig {
    let (spec, crc) = small_code();
    let mut cfg = CampaignConfig::new(spec, crc, DecoderParams::new(kind, 8, 0.3), vec![snr]);
    cfg.max_codewords = 4000;
    cfg.min_frame_errors = 0;
    cfg.seed = 11;
    cfg
}

#[test]
fn results_independent_of_worker_count() {
    let mut cfg = small_campaign(DecoderKind::DscfEs, 1.5);
    cfg.thresholds = Some(ThresholdTable::new(vec![(1.5, 2.0)], 2).unwrap());
    cfg.min_frame_errors = 150;
    cfg.max_codewords = 20_000;
    cfg.workers = 1;
    let one = run_campaign(&cfg).unwrap();
    cfg.workers = 3;
    let three = run_campaign(&cfg).unwrap();
    assert_eq!(one, three);
    // The stop rule is checked between batches.
    assert_eq!(one[0].codewords % BATCH_SIZE, 0);
    assert!(one[0].codewords < 20_000 && one[0].frame_errors >= 150);
}

#[test]
fn decoder_ordering_on_shared_noise() {
    let (spec, crc) = reference_code();
    let channel = ChannelConfig::new(2.0, 0.5, 5).unwrap();
    let mut sim = Simulator::new(&spec, &crc, channel).unwrap();
    let es = EarlyStopConfig::new(1.0, 3);
    let mut errors = [0u32; 4];
    let mut trials = [0usize; 2];
    for i in 0..3000 {
        let sc = sim.run(i, &DecoderParams::new(DecoderKind::Sc, 0, 0.3));
        let scf = sim.run(i, &DecoderParams::new(DecoderKind::Scf, 10, 0.3));
        let dscf = sim.run(i, &DecoderParams::new(DecoderKind::Dscf, 10, 0.3));
        let gated = sim.run(i, &DecoderParams::new(DecoderKind::DscfEs, 10, 0.3).with_early_stop(es));
        // Flipping only runs after a failed first pass, and the gate only truncates trials.
        assert!(sc.frame_error || !scf.frame_error);
        assert!(sc.frame_error || !dscf.frame_error);
        assert!(gated.frame_error || !dscf.frame_error);
        assert!(gated.outcome.trials_used <= dscf.outcome.trials_used);
        for (e, r) in errors.iter_mut().zip([&sc, &scf, &dscf, &gated]) {
            *e += r.frame_error as u32;
        }
        trials[0] += dscf.outcome.trials_used;
        trials[1] += gated.outcome.trials_used;
    }
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
    assert!(errors[3] >= errors[2]);
    assert!(trials[1] < trials[0]);
}

#[test]
fn cli_calibrate_then_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_polarflip");
    let code = ["--n", "128", "--k", "56", "--crc-bits", "8", "--crc-poly", "0x07", "--design-snr", "2.0"];
    let frozen = dir.path().join("frozen.txt");
    let thr = dir.path().join("thr.csv");
    let dist = dir.path().join("dist.csv");
    let out = dir.path().join("res.csv");
    let figs = dir.path().join("figs");
    let run = |args: &[&str]| {
        let status = Command::new(bin).args(args).args(code).output().unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    };
    run(&["construct", "--out", frozen.to_str().unwrap()]);
    assert_eq!(std::fs::read_to_string(&frozen).unwrap().lines().filter(|l| !l.starts_with('#')).count(), 64);
    run(&["calibrate", "--snr", "1.5,2.0", "--max-trials", "8", "--t-red", "2", "--codewords", "3000",
        "--out", thr.to_str().unwrap(), "--dist-out", dist.to_str().unwrap()]);
    let table = ThresholdTable::load(&thr).unwrap();
    assert_eq!(table.t_reduced(), 2);
    assert_eq!(table.rows().len(), 2);
    run(&["simulate", "--snr", "1.5:0.5:2.0", "--decoder", "dscf-es", "--max-trials", "8",
        "--threshold-file", thr.to_str().unwrap(), "--frozen-file", frozen.to_str().unwrap(),
        "--min-errors", "20", "--max-codewords", "5000", "--out", out.to_str().unwrap(),
        "--figure-dir", figs.to_str().unwrap()]);
    let results = load_results(&out).unwrap();
    assert_eq!(results.len(), 2);
    assert!(results.iter().all(|r| r.decoder == DecoderKind::DscfEs));
    for f in ["t_av.dat", "v_t.dat", "fer.dat"] {
        assert!(figs.join(f).exists());
    }
}
