//! Monte Carlo simulation of the slotted phase-adjustment protocol.

mod frame;
mod rng;
mod stats;
mod sweep;

pub use frame::{
    run_adjustment_frame, FrequencyDraw, ImpairmentConfig, NoiseModel, Scenario, SlotModel, TrialRecord, WaveformTag,
};
pub use rng::{stream, Role};
pub use stats::{
    bisect_log, estimate_alpha_distribution, ref_cdf, simulate, AlphaEstimate, EmpiricalDistribution, HistogramBin,
    RefCdf,
};
pub use sweep::{tag_regime_sweep, RegimeRow, RegimeSweep, SnrPolicy};
