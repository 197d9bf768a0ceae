use std::sync::Arc;

use super::frame::{ImpairmentConfig, NoiseModel, Scenario, SlotModel, WaveformTag};
use super::stats::estimate_alpha_distribution;
use crate::link::{downlink_gain, gamma2, noise_psd, tag_input_amplitude, SystemParams, TagModel};
use crate::tag::{ExactHarmonicTable, TagParams};
use crate::{Error, Execution, Result};

/// How the noise level is chosen at each distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SnrPolicy {
    /// Receiver noise from the system; `γ₂` follows the link budget.
    Physical,
    /// Both models run at this `γ₂` regardless of distance.
    Fixed(f64),
}

#[derive(Clone, Debug)]
pub struct RegimeSweep {
    pub helpers: usize,
    pub slot_duration: f64,
    pub trials: usize,
    pub seed: u64,
    /// Samples per slot for the exact-tag waveform integrals.
    pub samples: usize,
    pub snr: SnrPolicy,
    pub impairments: ImpairmentConfig,
}

/// Percentiles of `α̃_M` under both tag models at one distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeRow {
    pub distance: f64,
    pub amplitude: f64,
    pub gamma2_quadratic: f64,
    pub gamma2_exact: f64,
    pub quadratic_p10: f64,
    pub quadratic_p50: f64,
    pub exact_p10: f64,
    pub exact_p50: f64,
}

impl RegimeRow {
    pub fn delta_p10(&self) -> f64 {
        self.exact_p10 - self.quadratic_p10
    }

    pub fn delta_p50(&self) -> f64 {
        self.exact_p50 - self.quadratic_p50
    }
}

/// Runs the adjustment with the quadratic (envelope) and exact
/// (sampled Lambert-W) tags at each distance.
pub fn tag_regime_sweep(
    distances: &[f64],
    sys: &SystemParams,
    tag: &TagParams,
    cfg: &RegimeSweep,
    exec: Execution,
) -> Result<Vec<RegimeRow>> {
    let n0 = noise_psd(sys);
    distances
        .iter()
        .map(|&d| {
            if !(d > 0.0) {
                return Err(Error::invalid("distance", "must be positive"));
            }
            let a_r = tag_input_amplitude(d, sys, tag);
            let g_quad = gamma2(d, cfg.slot_duration, sys, tag, TagModel::Quadratic)?;
            let g_exact = gamma2(d, cfg.slot_duration, sys, tag, TagModel::Exact)?;
            let base = Scenario {
                helpers: cfg.helpers,
                amplitudes: Vec::new(),
                slot_duration: cfg.slot_duration,
                ranging_duration: 0.0,
                carrier: sys.omega0(),
                impairments: cfg.impairments.clone(),
                delay_errors: Vec::new(),
                slot: SlotModel::Envelope {
                    gamma2: match cfg.snr {
                        SnrPolicy::Physical => g_quad,
                        SnrPolicy::Fixed(g) => g,
                    },
                    noise: NoiseModel::Integrator,
                },
            };
            let quad = estimate_alpha_distribution(&base, cfg.trials, cfg.seed, exec)?;

            // the partial sum reaches M·A_r and the helper adds one more
            let table = Arc::new(ExactHarmonicTable::new(tag, 1.05 * (cfg.helpers + 1) as f64 * a_r)?);
            let scale = downlink_gain(d, sys, tag)
                * (tag.output_efficiency * tag.harmonic_resistance * sys.resistance_rx).sqrt();
            let wtag = WaveformTag::Exact { table, scale };
            let slot = match cfg.snr {
                SnrPolicy::Physical => SlotModel::Waveform {
                    samples: cfg.samples,
                    reference_amplitude: a_r,
                    slot_duration: cfg.slot_duration,
                    noise_psd: n0,
                    tag: wtag,
                },
                SnrPolicy::Fixed(g) => SlotModel::waveform_at_snr(cfg.samples, a_r, cfg.slot_duration, wtag, g)?,
            };
            let exact = estimate_alpha_distribution(&Scenario { slot, ..base }, cfg.trials, cfg.seed, exec)?;
            Ok(RegimeRow {
                distance: d,
                amplitude: a_r,
                gamma2_quadratic: g_quad,
                gamma2_exact: g_exact,
                quadratic_p10: quad.p10(),
                quadratic_p50: quad.p50(),
                exact_p10: exact.p10(),
                exact_p50: exact.p50(),
            })
        })
        .collect()
}
