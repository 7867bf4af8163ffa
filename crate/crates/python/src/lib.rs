//! Python bindings: code construction, encoding, CRC, channel, decoders,
//! Monte Carlo campaigns and threshold calibration.

use polarflip::calibration::{calibrate_distribution, extract_threshold};
use polarflip::flip::{dscf_metrics as dscf_list, sample_variance, scf_metrics as scf_list};
use polarflip::sim::{compute_stats as stats, run_campaign as campaign};
use polarflip::{
    CampaignConfig, ChannelConfig, CodeSpec, CrcSpec, DecodeOutcome, DecoderKind, DecoderParams,
    EarlyStopConfig, Error, FlipDecoder, SnrType, ThresholdTable,
};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

/// Bit vectors go to Python as lists of ints (a `Vec<u8>` would become `bytes`).
fn bit_list(bits: Vec<u8>) -> Vec<u32> {
    bits.into_iter().map(u32::from).collect()
}

fn check_len(what: &str, got: usize, want: usize) -> PyResult<()> {
    if got != want {
        return Err(PyValueError::new_err(format!("{what} has length {got}, expected {want}")));
    }
    Ok(())
}

#[pyclass(name = "CodeSpec", module = "polarflip_py", frozen)]
struct PyCodeSpec(CodeSpec);

#[pymethods]
impl PyCodeSpec {
    /// Builds a code by Gaussian-approximation construction at `design_snr_db`.
    #[staticmethod]
    #[pyo3(signature = (n_bits, k_info, r_crc, design_snr_db=2.365, snr_type="ebn0"))]
    fn construct(n_bits: usize, k_info: usize, r_crc: usize, design_snr_db: f64, snr_type: &str) -> PyResult<Self> {
        CodeSpec::construct_with(n_bits, k_info, r_crc, design_snr_db, parse::<SnrType>(snr_type)?)
            .map(Self)
            .map_err(py_err)
    }

    #[staticmethod]
    fn from_frozen_set(n_bits: usize, k_info: usize, r_crc: usize, frozen_set: Vec<usize>) -> PyResult<Self> {
        CodeSpec::from_frozen_set(n_bits, k_info, r_crc, frozen_set, None).map(Self).map_err(py_err)
    }

    /// Loads a frozen-set file (one index per line).
    #[staticmethod]
    fn load(path: &str, n_bits: usize, r_crc: usize) -> PyResult<Self> {
        CodeSpec::load_frozen_set(path, n_bits, r_crc).map(Self).map_err(py_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.0.write_frozen_set(path).map_err(py_err)
    }

    #[getter]
    fn n_bits(&self) -> usize {
        self.0.n_bits()
    }

    #[getter]
    fn k_info(&self) -> usize {
        self.0.k_info()
    }

    #[getter]
    fn r_crc(&self) -> usize {
        self.0.r_crc()
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.0.rate()
    }

    #[getter]
    fn frozen_set(&self) -> Vec<usize> {
        self.0.frozen_set().to_vec()
    }

    #[getter]
    fn info_set(&self) -> Vec<usize> {
        self.0.info_set().to_vec()
    }

    fn encode(&self, u: Vec<u8>) -> PyResult<Vec<u32>> {
        self.0.encode(&u).map(bit_list).map_err(py_err)
    }

    fn insert_payload(&self, payload: Vec<u8>) -> PyResult<Vec<u32>> {
        self.0.insert_payload(&payload).map(bit_list).map_err(py_err)
    }

    fn extract_payload(&self, u: Vec<u8>) -> PyResult<Vec<u32>> {
        self.0.extract_payload(&u).map(bit_list).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("CodeSpec(n_bits={}, k_info={}, r_crc={})", self.0.n_bits(), self.0.k_info(), self.0.r_crc())
    }
}

#[pyclass(name = "CrcSpec", module = "polarflip_py", frozen)]
struct PyCrcSpec(CrcSpec);

#[pymethods]
impl PyCrcSpec {
    /// Generator polynomial without its leading term, e.g. 0x8005 for CRC-16.
    #[new]
    #[pyo3(signature = (degree=16, polynomial=0x8005))]
    fn new(degree: u32, polynomial: u64) -> PyResult<Self> {
        CrcSpec::new(degree, polynomial).map(Self).map_err(py_err)
    }

    #[getter]
    fn degree(&self) -> usize {
        self.0.degree()
    }

    fn compute(&self, message: Vec<u8>) -> Vec<u32> {
        bit_list(self.0.compute(&message))
    }

    fn append(&self, message: Vec<u8>) -> Vec<u32> {
        bit_list(self.0.append(&message))
    }

    fn check(&self, payload: Vec<u8>) -> PyResult<bool> {
        self.0.check(&payload).map_err(py_err)
    }
}

#[pyclass(name = "Channel", module = "polarflip_py", frozen)]
struct PyChannel(ChannelConfig);

#[pymethods]
impl PyChannel {
    /// BPSK/AWGN channel at `snr_db` for the given code and SNR convention.
    #[new]
    #[pyo3(signature = (spec, snr_db, seed=42, snr_type="ebn0"))]
    fn new(spec: &PyCodeSpec, snr_db: f64, seed: u64, snr_type: &str) -> PyResult<Self> {
        let rate = spec.0.energy_rate(parse::<SnrType>(snr_type)?);
        ChannelConfig::new(snr_db, rate, seed).map(Self).map_err(py_err)
    }

    #[getter]
    fn noise_sigma(&self) -> f64 {
        self.0.noise_sigma()
    }

    /// Noise samples of codeword `index`.
    fn noise(&self, length: usize, index: u64) -> Vec<f64> {
        self.0.noise(length, index)
    }

    /// Modulates `bits`, adds the noise of codeword `index` and returns channel LLRs.
    fn llr(&self, bits: Vec<u8>, index: u64) -> PyResult<Vec<f64>> {
        let y = polarflip::channel::transmit(&polarflip::channel::modulate(&bits), &self.0, index);
        polarflip::channel::channel_llr(&y, &self.0).map_err(py_err)
    }
}

fn outcome_dict<'py>(py: Python<'py>, o: &DecodeOutcome) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("payload", bit_list(o.payload_hat.clone()))?;
    d.set_item("u_hat", bit_list(o.u_hat.clone()))?;
    d.set_item("trials_used", o.trials_used)?;
    d.set_item("crc_ok", o.crc_ok)?;
    d.set_item("early_stopped", o.early_stopped)?;
    d.set_item("phi", o.phi)?;
    Ok(d)
}

#[pyclass(name = "Decoder", module = "polarflip_py")]
struct PyDecoder {
    spec: CodeSpec,
    crc: CrcSpec,
}

#[pymethods]
impl PyDecoder {
    #[new]
    fn new(spec: &PyCodeSpec, crc: &PyCrcSpec) -> PyResult<Self> {
        FlipDecoder::new(&spec.0, &crc.0).map_err(py_err)?;
        Ok(Self { spec: spec.0.clone(), crc: crc.0 })
    }

    /// Decodes channel LLRs. `kind` is one of sc, scf, dscf, dscf-es; the gate
    /// of dscf-es needs `phi_threshold`.
    #[pyo3(signature = (alpha_ch, kind="dscf", max_trials=10, c=0.3, phi_threshold=None, t_reduced=3))]
    #[allow(clippy::too_many_arguments)]
    fn decode<'py>(
        &self,
        py: Python<'py>,
        alpha_ch: Vec<f64>,
        kind: &str,
        max_trials: usize,
        c: f64,
        phi_threshold: Option<f64>,
        t_reduced: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        check_len("alpha_ch", alpha_ch.len(), self.spec.n_bits())?;
        let kind: DecoderKind = parse(kind)?;
        let mut params = DecoderParams::new(kind, max_trials, c);
        if kind == DecoderKind::DscfEs {
            let thr = phi_threshold.ok_or_else(|| PyValueError::new_err("dscf-es needs phi_threshold"))?;
            params = params.with_early_stop(EarlyStopConfig::new(thr, t_reduced));
        }
        params.validate().map_err(py_err)?;
        let mut dec = FlipDecoder::new(&self.spec, &self.crc).map_err(py_err)?;
        outcome_dict(py, &dec.decode(&alpha_ch, &params))
    }
}

/// Plain SC decoding with optional forced flips; returns (u_hat, alpha_dec).
#[pyfunction]
#[pyo3(signature = (alpha_ch, spec, flips=Vec::new()))]
fn sc_decode(alpha_ch: Vec<f64>, spec: &PyCodeSpec, flips: Vec<usize>) -> PyResult<(Vec<u32>, Vec<f64>)> {
    check_len("alpha_ch", alpha_ch.len(), spec.0.n_bits())?;
    let r = polarflip::sc::sc_decode(&alpha_ch, &spec.0, &flips).map_err(py_err)?;
    Ok((bit_list(r.u_hat), r.alpha_dec))
}

/// The `t` least reliable non-frozen bits as (index, metric) pairs, SCF ranking.
#[pyfunction]
fn scf_metrics(alpha_dec: Vec<f64>, spec: &PyCodeSpec, t: usize) -> PyResult<Vec<(usize, f64)>> {
    check_len("alpha_dec", alpha_dec.len(), spec.0.n_bits())?;
    let list = scf_list(&alpha_dec, &spec.0, t);
    Ok(list.entries().iter().map(|e| (e.bit_index, e.metric)).collect())
}

/// Same as `scf_metrics` with the DSCF metric.
#[pyfunction]
#[pyo3(signature = (alpha_dec, spec, t, c=0.3))]
fn dscf_metrics(alpha_dec: Vec<f64>, spec: &PyCodeSpec, t: usize, c: f64) -> PyResult<Vec<(usize, f64)>> {
    check_len("alpha_dec", alpha_dec.len(), spec.0.n_bits())?;
    let list = dscf_list(&alpha_dec, &spec.0, t, c).map_err(py_err)?;
    Ok(list.entries().iter().map(|e| (e.bit_index, e.metric)).collect())
}

/// Sample variance of flip metrics.
#[pyfunction]
fn early_stop_metric(metrics: Vec<f64>) -> PyResult<f64> {
    sample_variance(&metrics).map_err(py_err)
}

/// (t_av, v_t) of a list of trial counts; v_t is None for fewer than two.
#[pyfunction]
fn compute_stats(trials: Vec<usize>) -> (f64, Option<f64>) {
    stats(&trials)
}

/// Runs a Monte Carlo campaign; returns one dict per SNR point.
#[pyfunction]
#[pyo3(signature = (
    spec, crc, snr_points, decoder="dscf", max_trials=10, c=0.3, thresholds=None, t_reduced=3,
    max_codewords=100_000, min_errors=100, seed=42, workers=0, snr_type="ebn0"
))]
#[allow(clippy::too_many_arguments)]
fn run_campaign<'py>(
    py: Python<'py>,
    spec: &PyCodeSpec,
    crc: &PyCrcSpec,
    snr_points: Vec<f64>,
    decoder: &str,
    max_trials: usize,
    c: f64,
    thresholds: Option<Vec<(f64, f64)>>,
    t_reduced: usize,
    max_codewords: u64,
    min_errors: u64,
    seed: u64,
    workers: usize,
    snr_type: &str,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut cfg = CampaignConfig::new(
        spec.0.clone(),
        crc.0,
        DecoderParams::new(parse(decoder)?, max_trials, c),
        snr_points,
    );
    cfg.thresholds = thresholds.map(|rows| ThresholdTable::new(rows, t_reduced)).transpose().map_err(py_err)?;
    cfg.max_codewords = max_codewords;
    cfg.min_frame_errors = min_errors;
    cfg.seed = seed;
    cfg.workers = workers;
    cfg.snr_type = parse(snr_type)?;
    let results = py.detach(|| campaign(&cfg)).map_err(py_err)?;
    results
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("snr_db", r.snr_db)?;
            d.set_item("codewords", r.codewords)?;
            d.set_item("frame_errors", r.frame_errors)?;
            d.set_item("fer", r.fer)?;
            d.set_item("t_av", r.t_av)?;
            d.set_item("v_t", r.v_t)?;
            d.set_item("early_stops", r.early_stops)?;
            d.set_item("decoder", r.decoder.name())?;
            Ok(d)
        })
        .collect()
}

/// Calibrates one SNR point: bins `phi` by trial count with ungated DSCF and
/// returns counts, normalized bins (last one is the failure bin) and the
/// threshold (None if no codeword failed).
#[pyfunction]
#[pyo3(signature = (spec, crc, snr_db, max_trials=10, c=0.3, codewords=100_000, seed=42, workers=0, snr_type="ebn0"))]
#[allow(clippy::too_many_arguments)]
fn calibrate<'py>(
    py: Python<'py>,
    spec: &PyCodeSpec,
    crc: &PyCrcSpec,
    snr_db: f64,
    max_trials: usize,
    c: f64,
    codewords: u64,
    seed: u64,
    workers: usize,
    snr_type: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let rate = spec.0.energy_rate(parse::<SnrType>(snr_type)?);
    let channel = ChannelConfig::new(snr_db, rate, seed).map_err(py_err)?;
    FlipDecoder::new(&spec.0, &crc.0).map_err(py_err)?;
    let dist = py
        .detach(|| calibrate_distribution(&spec.0, &crc.0, &channel, max_trials, c, codewords, workers))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("snr_db", snr_db)?;
    d.set_item("counts", dist.counts().to_vec())?;
    d.set_item("normalized", dist.normalized())?;
    d.set_item("threshold", extract_threshold(&dist).ok())?;
    Ok(d)
}

#[pymodule]
fn polarflip_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCodeSpec>()?;
    m.add_class::<PyCrcSpec>()?;
    m.add_class::<PyChannel>()?;
    m.add_class::<PyDecoder>()?;
    m.add_function(wrap_pyfunction!(sc_decode, m)?)?;
    m.add_function(wrap_pyfunction!(scf_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(dscf_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(early_stop_metric, m)?)?;
    m.add_function(wrap_pyfunction!(compute_stats, m)?)?;
    m.add_function(wrap_pyfunction!(run_campaign, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    Ok(())
}
