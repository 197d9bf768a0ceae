use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use super::rng::{stream, Role};
use crate::coherence::{
    apply_adjustment, complex_normal, estimate_phase_offset, slot_integrals, slot_integrals_waveform, wrap_phase,
    SlotInput, SlotObservation, TagResponse,
};
use crate::tag::ExactHarmonicTable;
use crate::{Error, Result};

/// How each helper's LO frequency error is drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyDraw {
    /// Uniform on `[-ω_er, ω_er]`, per trial and helper.
    #[default]
    Uniform,
    /// `±ω_er` alternating over the helpers, the worst pairwise spread.
    Fixed,
}

/// Oscillator and propagation impairments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpairmentConfig {
    /// `p_e`, parts per million.
    #[serde(default)]
    pub ppm_error: f64,
    /// Add `θ_d = 2πd/(cT_s)` to every phase estimate.
    #[serde(default)]
    pub delay_error: bool,
    #[serde(default)]
    pub frequency_draw: FrequencyDraw,
    /// Keep drifting through the ranging interval before `α_M` is taken.
    #[serde(default)]
    pub drift_includes_ranging: bool,
}

impl Default for ImpairmentConfig {
    fn default() -> Self {
        ImpairmentConfig {
            ppm_error: 0.0,
            delay_error: false,
            frequency_draw: FrequencyDraw::Uniform,
            drift_includes_ranging: false,
        }
    }
}

impl ImpairmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ppm_error >= 0.0 && self.ppm_error.is_finite()) {
            return Err(Error::invalid("impairments.ppm_error", "must be non-negative"));
        }
        Ok(())
    }

    /// `ω_er = 10⁻⁶ p_e ω₀`.
    pub fn frequency_error(&self, omega0: f64) -> f64 {
        1e-6 * self.ppm_error * omega0
    }
}

/// Noise model of the envelope-mode slot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    /// Independent noise on each integrator; the estimator sees the true
    /// product `G₀G₁*`.
    #[default]
    Integrator,
    /// `G₀G₁*` replaced by its mean plus circular Gaussian noise of the
    /// same variance, the model behind the analytic phase-error law.
    GaussianProduct,
}

/// Tag used by a sampled slot.
#[derive(Clone, Debug)]
pub enum WaveformTag {
    Quadratic { eta: f64 },
    Exact { table: Arc<ExactHarmonicTable>, scale: f64 },
}

impl WaveformTag {
    fn response(&self) -> TagResponse<'_> {
        match self {
            WaveformTag::Quadratic { eta } => TagResponse::Quadratic { eta: *eta },
            WaveformTag::Exact { table, scale } => TagResponse::Exact { table, scale: *scale },
        }
    }
}

/// Fidelity of the slot simulation.
#[derive(Clone, Debug)]
pub enum SlotModel {
    /// Integrator-level slot normalised to `A_r = η = T_s = 1`, noise
    /// `N₀ = 1/γ₂`. An infinite `γ₂` is noise free.
    Envelope { gamma2: f64, noise: NoiseModel },
    /// Sampled slot in physical units.
    Waveform {
        samples: usize,
        /// `A_r` at the tag, V; helper amplitudes scale with it.
        reference_amplitude: f64,
        /// Integration time of the sampled slot, s.
        slot_duration: f64,
        noise_psd: f64,
        tag: WaveformTag,
    },
}

impl SlotModel {
    /// Sampled slot whose first-slot `γ₂ = |Ġ₂|²/(T_s N₀)` equals `gamma2`.
    pub fn waveform_at_snr(
        samples: usize,
        reference_amplitude: f64,
        slot_duration: f64,
        tag: WaveformTag,
        gamma2: f64,
    ) -> Result<Self> {
        let a = Complex64::new(reference_amplitude, 0.0);
        let probe = SlotInput {
            partial: a,
            helper: a,
            eta: 1.0,
            slot_duration,
            round_trip_phase: 0.0,
            noise_psd: 1.0,
        };
        let obs = slot_integrals_waveform::<rand_chacha::ChaCha8Rng>(&probe, tag.response(), samples, None)?;
        let noise_psd = obs.g2.norm_sqr() / (slot_duration * gamma2);
        Ok(SlotModel::Waveform {
            samples,
            reference_amplitude,
            slot_duration,
            noise_psd,
            tag,
        })
    }
}

/// Everything one adjustment frame needs.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub helpers: usize,
    /// Helper amplitudes relative to `A_r`; missing entries are 1.
    pub amplitudes: Vec<f64>,
    /// `T_s`, s, for the drift clock.
    pub slot_duration: f64,
    /// `T_r`, s.
    pub ranging_duration: f64,
    /// `ω₀`, rad/s.
    pub carrier: f64,
    pub impairments: ImpairmentConfig,
    /// `θ_d` per helper, rad; missing entries are 0. Only used when
    /// `impairments.delay_error` is set.
    pub delay_errors: Vec<f64>,
    pub slot: SlotModel,
}

impl Scenario {
    /// Equal unit helpers, no impairments, envelope slots at `gamma2`.
    pub fn normalised(helpers: usize, gamma2: f64) -> Self {
        Scenario {
            helpers,
            amplitudes: Vec::new(),
            slot_duration: 1e-6,
            ranging_duration: 0.0,
            carrier: 2.0 * PI * 9.3e9,
            impairments: ImpairmentConfig::default(),
            delay_errors: Vec::new(),
            slot: SlotModel::Envelope {
                gamma2,
                noise: NoiseModel::Integrator,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.helpers < 1 {
            return Err(Error::invalid("frame.helpers", "need at least one helper"));
        }
        if !(self.slot_duration > 0.0 && self.slot_duration < 1.0) {
            return Err(Error::invalid("frame.slot_duration_s", "must lie in (0, 1 s)"));
        }
        if self.amplitudes.iter().any(|a| !(*a >= 0.0)) {
            return Err(Error::invalid("amplitudes", "must be non-negative"));
        }
        self.impairments.validate()?;
        match &self.slot {
            SlotModel::Envelope { gamma2, .. } if !(*gamma2 > 0.0) => {
                Err(Error::invalid("gamma2", format!("must be positive, got {gamma2}")))
            }
            SlotModel::Waveform { samples, .. } if *samples < 64 => {
                Err(Error::invalid("waveform_samples", "need at least 64 per slot"))
            }
            _ => Ok(()),
        }
    }

    fn amplitude(&self, m: usize) -> f64 {
        self.amplitudes.get(m).copied().unwrap_or(1.0)
    }

    fn delay_error(&self, m: usize) -> f64 {
        if self.impairments.delay_error {
            self.delay_errors.get(m).copied().unwrap_or(0.0)
        } else {
            0.0
        }
    }
}

/// Outcome of one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    /// `α_1 … α_{M-1}` at the start of each slot, then `α_M` at the end of
    /// the adjustment interval.
    pub alphas: Vec<f64>,
    /// `φ_er,i`: phase of the newly set helper relative to the partial sum
    /// it was aligned to, one per slot.
    pub phase_errors: Vec<f64>,
    /// K-factor of each slot's estimator statistic.
    pub k_factors: Vec<f64>,
}

impl TrialRecord {
    pub fn alpha_final(&self) -> f64 {
        *self.alphas.last().expect("at least one helper")
    }

    /// `ζ_pa = ∛(2α_M)`.
    pub fn zeta(&self) -> f64 {
        (2.0 * self.alpha_final()).cbrt()
    }
}

fn estimate(s: &Scenario, partial: Complex64, helper: Complex64, slot: usize, seed: u64, trial: u64) -> Result<(f64, f64)> {
    let mut noise = stream(seed, trial, slot, Role::Noise);
    let (obs, phi): (SlotObservation, Option<f64>) = match &s.slot {
        SlotModel::Envelope { gamma2, noise: model } => {
            let input = SlotInput::normalised(partial, helper, *gamma2);
            match model {
                NoiseModel::Integrator => {
                    let draws = [complex_normal(&mut noise), complex_normal(&mut noise), complex_normal(&mut noise)];
                    let draws = if gamma2.is_finite() { Some(draws) } else { None };
                    (slot_integrals(&input, draws), None)
                }
                NoiseModel::GaussianProduct => {
                    let obs = slot_integrals(&input, None);
                    let s2 = obs.sigma_n2;
                    let var = s2 * (obs.g0.norm_sqr() + obs.g1.norm_sqr()) + s2 * s2;
                    let stat = obs.g0 * obs.g1.conj() + complex_normal(&mut noise) * var.sqrt();
                    (obs, Some(stat.arg()))
                }
            }
        }
        SlotModel::Waveform {
            samples,
            reference_amplitude,
            slot_duration,
            noise_psd,
            tag,
        } => {
            let input = SlotInput {
                partial: partial * *reference_amplitude,
                helper: helper * *reference_amplitude,
                eta: 1.0,
                slot_duration: *slot_duration,
                round_trip_phase: 0.0,
                noise_psd: *noise_psd,
            };
            let rng = (*noise_psd > 0.0).then_some(&mut noise);
            (slot_integrals_waveform(&input, tag.response(), *samples, rng)?, None)
        }
    };
    let phi = match phi {
        Some(p) => p,
        // a degenerate slot leaves the helper where it is
        None => estimate_phase_offset(&obs).unwrap_or(0.0),
    };
    Ok((phi, obs.k_factor()))
}

/// Runs the adjustment protocol once.
///
/// Helper 1 starts the partial sum. In slot `i` helpers `1..=i` transmit,
/// helper `i+1` sweeps and is then set to the estimated partial-sum phase
/// plus `θ_d`. Helper `m`, set at `t_m = (m-1)T_s`, drifts by
/// `ω_m (t - t_m)`; the partial sum of slot `i` is formed at its start
/// `(i-1)T_s` and `α_M` at `(M-1)T_s` (plus `T_r` if configured).
pub fn run_adjustment_frame(s: &Scenario, seed: u64, trial: u64) -> Result<TrialRecord> {
    let m = s.helpers;
    let mut init = stream(seed, trial, 0, Role::Init);
    let mut freq = stream(seed, trial, 0, Role::Freq);
    let mut phases: Vec<f64> = (0..m).map(|_| rand::Rng::random_range(&mut init, -PI..PI)).collect();
    let w_er = s.impairments.frequency_error(s.carrier);
    let omegas: Vec<f64> = (0..m)
        .map(|k| match s.impairments.frequency_draw {
            _ if w_er == 0.0 => 0.0,
            FrequencyDraw::Uniform => rand::Rng::random_range(&mut freq, -w_er..=w_er),
            FrequencyDraw::Fixed => {
                if k % 2 == 0 {
                    w_er
                } else {
                    -w_er
                }
            }
        })
        .collect();

    let t_s = s.slot_duration;
    let partial_at = |count: usize, t: f64, phases: &[f64]| -> Complex64 {
        (0..count)
            .map(|k| Complex64::from_polar(s.amplitude(k), phases[k] + omegas[k] * (t - k as f64 * t_s)))
            .sum()
    };

    let mut alphas = Vec::with_capacity(m);
    let mut phase_errors = Vec::with_capacity(m.saturating_sub(1));
    let mut k_factors = Vec::with_capacity(m.saturating_sub(1));
    for i in 1..m {
        let vp = partial_at(i, (i - 1) as f64 * t_s, &phases);
        alphas.push(vp.norm());
        let vh = Complex64::from_polar(s.amplitude(i), phases[i]);
        let (phi, k) = estimate(s, vp, vh, i, seed, trial)?;
        phases[i] = apply_adjustment(phases[i], phi, s.delay_error(i), 0.0);
        phase_errors.push(wrap_phase(phases[i] - vp.arg()));
        k_factors.push(k);
    }
    let mut t_end = (m - 1) as f64 * t_s;
    if s.impairments.drift_includes_ranging {
        t_end += s.ranging_duration;
    }
    alphas.push(partial_at(m, t_end, &phases).norm());
    Ok(TrialRecord {
        alphas,
        phase_errors,
        k_factors,
    })
}
