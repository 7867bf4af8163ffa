//! Polar codes decoded by successive cancellation (SC), SC-flip (SCF) and
//! dynamic SC-flip of order one (DSCF-1), with a variance-based early-stopping
//! gate for DSCF and the Monte Carlo machinery to calibrate its thresholds and
//! measure frame-error rate and execution-time statistics.
//!
//! Bits are stored as `u8` values in `{0, 1}`. LLRs are `f64`; a positive LLR
//! favours bit 0.

pub mod calibration;
pub mod channel;
pub mod code;
pub mod construction;
pub mod crc;
mod error;
pub mod flip;
pub mod sc;
pub mod sim;


pub use channel::{ChannelConfig, SnrType};
pub use code::CodeSpec;
pub use crc::CrcSpec;
pub use error::{Error, Result};

pub use flip::{DecodeOutcome, DecoderKind, DecoderParams, EarlyStopConfig, FlipDecoder, FlipFlavor, FlipList};
pub use calibration::{MetricDistribution, ThresholdTable};
pub use sim::{CampaignConfig, CodewordRecord, Simulator, SnrResult};
pub use sc::{ScDecoder, ScResult};

