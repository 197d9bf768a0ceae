//! The diode transponder.
//!
//! The tag is an antenna pair loaded by a Schottky diode. Driven by the
//! bandpass voltage `ṽ(t) = Re{v(t)e^{jω₀t}}` across the fundamental-port
//! resistance `R_F`, the diode current obeys
//!
//! ```text
//! ṽ = n_i V_T ln(1 + ĩ/I_s) + R_F ĩ
//! ```
//!
//! which has the explicit solution `ĩ = (W₀(ρ e^{ρ + ṽ/n_i V_T})/ρ - 1) I_s`
//! with `ρ = I_s R_F/(n_i V_T)`. The second-harmonic envelope `i₂ = a₂ - j b₂`
//! is what the tag re-radiates at `2ω₀`.

mod lambert;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub use lambert::{lambert_w0, lambert_w0_exp};

use crate::units::Gain;
use crate::{Error, Result};

/// How the small-signal coefficient `β` is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaMode {
    /// Full alternating series in `ρe^ρ`, summed in closed form.
    #[default]
    Series,
    /// Leading term `ρ/(4 n_i V_T)`.
    Simplified,
}

/// File representation of [`TagParams`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TagSection {
    saturation_current_a: f64,
    ideality: f64,
    thermal_voltage_v: f64,
    fundamental_resistance_ohm: f64,
    harmonic_resistance_ohm: f64,
    input_efficiency: f64,
    output_efficiency: f64,
    gain_fundamental_dbi: Gain,
    gain_harmonic_dbi: Gain,
    #[serde(default)]
    beta_mode: BetaMode,
}

/// Diode constants, port resistances, transfer efficiencies and antenna
/// gains of the tag. `ρ` is derived at construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TagSection", into = "TagSection")]
pub struct TagParams {
    pub saturation_current: f64,
    pub ideality: f64,
    pub thermal_voltage: f64,
    pub fundamental_resistance: f64,
    pub harmonic_resistance: f64,
    pub input_efficiency: f64,
    pub output_efficiency: f64,
    pub gain_fundamental: Gain,
    pub gain_harmonic: Gain,
    pub beta_mode: BetaMode,
    rho: f64,
}

impl TryFrom<TagSection> for TagParams {
    type Error = Error;

    fn try_from(s: TagSection) -> Result<Self> {
        TagParams::new(
            s.saturation_current_a,
            s.ideality,
            s.thermal_voltage_v,
            s.fundamental_resistance_ohm,
            s.harmonic_resistance_ohm,
            s.input_efficiency,
            s.output_efficiency,
            s.gain_fundamental_dbi,
            s.gain_harmonic_dbi,
        )
        .map(|t| t.with_beta_mode(s.beta_mode))
    }
}

impl From<TagParams> for TagSection {
    fn from(t: TagParams) -> Self {
        TagSection {
            saturation_current_a: t.saturation_current,
            ideality: t.ideality,
            thermal_voltage_v: t.thermal_voltage,
            fundamental_resistance_ohm: t.fundamental_resistance,
            harmonic_resistance_ohm: t.harmonic_resistance,
            input_efficiency: t.input_efficiency,
            output_efficiency: t.output_efficiency,
            gain_fundamental_dbi: t.gain_fundamental,
            gain_harmonic_dbi: t.gain_harmonic,
            beta_mode: t.beta_mode,
        }
    }
}

impl TagParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        saturation_current: f64,
        ideality: f64,
        thermal_voltage: f64,
        fundamental_resistance: f64,
        harmonic_resistance: f64,
        input_efficiency: f64,
        output_efficiency: f64,
        gain_fundamental: Gain,
        gain_harmonic: Gain,
    ) -> Result<Self> {
        let positive = |name: &str, x: f64| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("tag.{name}"), format!("must be positive, got {x}")))
            }
        };
        positive("saturation_current_a", saturation_current)?;
        positive("thermal_voltage_v", thermal_voltage)?;
        positive("fundamental_resistance_ohm", fundamental_resistance)?;
        positive("harmonic_resistance_ohm", harmonic_resistance)?;
        if !(ideality >= 1.0 && ideality.is_finite()) {
            return Err(Error::invalid("tag.ideality", format!("must be at least 1, got {ideality}")));
        }
        for (name, k) in [("input_efficiency", input_efficiency), ("output_efficiency", output_efficiency)] {
            if !(0.0..=1.0).contains(&k) {
                return Err(Error::invalid(format!("tag.{name}"), format!("must lie in [0, 1], got {k}")));
            }
        }
        let rho = saturation_current * fundamental_resistance / (ideality * thermal_voltage);
        Ok(TagParams {
            saturation_current,
            ideality,
            thermal_voltage,
            fundamental_resistance,
            harmonic_resistance,
            input_efficiency,
            output_efficiency,
            gain_fundamental,
            gain_harmonic,
            beta_mode: BetaMode::default(),
            rho,
        })
    }

    /// SMS7630-040 Schottky diode with the X-band tag antenna of the bundled
    /// preset.
    pub fn sms7630() -> Self {
        TagParams::new(
            5e-6,
            1.05,
            0.026,
            132.0,
            146.0,
            1.0,
            1.0,
            Gain::from_dbi(2.2),
            Gain::from_dbi(3.15),
        )
        .expect("preset is valid")
    }

    pub fn with_beta_mode(mut self, mode: BetaMode) -> Self {
        self.beta_mode = mode;
        self
    }

    /// `ρ = I_s R_F/(n_i V_T)`.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `n_i V_T`, the voltage scale of the junction.
    pub fn junction_voltage(&self) -> f64 {
        self.ideality * self.thermal_voltage
    }

    /// Upper edge `v/(n_i V_T) < -1 - ln ρ - ρ` of the small-signal region,
    /// in volts. Advisory only.
    pub fn small_signal_limit(&self) -> f64 {
        (-1.0 - self.rho.ln() - self.rho) * self.junction_voltage()
    }

    /// `β` evaluated with the configured [`BetaMode`].
    pub fn beta(&self) -> f64 {
        beta_coefficient(self, self.beta_mode)
    }
}

/// Instantaneous diode current for the instantaneous port voltage `v`.
pub fn diode_current(v: f64, p: &TagParams) -> f64 {
    let rho = p.rho();
    let u = v / p.junction_voltage();
    let w = lambert_w0_exp(rho.ln() + rho + u);
    (w / rho - 1.0) * p.saturation_current
}

/// Residual of the implicit diode equation in units of `I_s`:
/// `i/I_s - (exp(v/n_i V_T - ρ i/I_s) - 1)`.
///
/// The exponential form stays well conditioned under deep reverse bias,
/// where `1 + i/I_s` is far below the rounding error of `i/I_s`.
pub fn diode_residual(v: f64, i: f64, p: &TagParams) -> f64 {
    let y = i / p.saturation_current;
    y - (v / p.junction_voltage() - p.rho() * y).exp_m1()
}

/// Small-signal coefficient `β` in V⁻¹.
pub fn beta_coefficient(p: &TagParams, mode: BetaMode) -> f64 {
    let scale = 1.0 / (4.0 * p.junction_voltage());
    let rho = p.rho();
    match mode {
        BetaMode::Simplified => rho * scale,
        // Σ (-1)^{n+1} n^{n+1} xⁿ/n! = (x d/dx)² W₀(x); at x = ρe^ρ this is
        // ρ/(1+ρ)³, which also continues the sum past its radius ρe^{ρ+1} = 1.
        BetaMode::Series => rho / (1.0 + rho).powi(3) * scale,
    }
}

/// Small-signal law `i₂ = β v²/R_F`.
pub fn quadratic_envelope(v_in: Complex64, p: &TagParams) -> Complex64 {
    v_in * v_in * (p.beta() / p.fundamental_resistance)
}

/// Large-signal law `i₂ = (2/3π)|v| e^{j2 arg v}/R_F`.
pub fn large_signal_envelope(v_in: Complex64, p: &TagParams) -> Complex64 {
    let a = v_in.norm();
    if a == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    // v²/|v| has modulus |v| and phase 2 arg v.
    v_in * v_in / a * (2.0 / (3.0 * PI) / p.fundamental_resistance)
}

/// A sampled real bandpass voltage.
#[derive(Clone, Debug)]
pub struct BandpassWaveform {
    pub samples: Vec<f64>,
    /// Hz.
    pub sample_rate: f64,
    /// `ω₀`, rad/s.
    pub carrier: f64,
}

impl BandpassWaveform {
    pub fn new(samples: Vec<f64>, sample_rate: f64, carrier: f64) -> Result<Self> {
        let w = BandpassWaveform {
            samples,
            sample_rate,
            carrier,
        };
        w.validate()?;
        Ok(w)
    }

    /// `Re{v e^{jω₀t}}` sampled at `samples_per_cycle` over `cycles` periods,
    /// endpoints included.
    pub fn tone(envelope: Complex64, carrier_hz: f64, samples_per_cycle: usize, cycles: usize) -> Result<Self> {
        let n = samples_per_cycle * cycles;
        let samples = (0..=n)
            .map(|k| {
                let phase = 2.0 * PI * k as f64 / samples_per_cycle as f64;
                (envelope * Complex64::cis(phase)).re
            })
            .collect();
        Self::new(samples, carrier_hz * samples_per_cycle as f64, 2.0 * PI * carrier_hz)
    }

    pub fn duration(&self) -> f64 {
        self.samples.len().saturating_sub(1) as f64 / self.sample_rate
    }

    pub fn cycles(&self) -> f64 {
        self.duration() * self.carrier / (2.0 * PI)
    }

    fn validate(&self) -> Result<()> {
        if !(self.carrier > 0.0 && self.sample_rate > 0.0) {
            return Err(Error::invalid("waveform", "carrier and sample rate must be positive"));
        }
        let per_cycle = self.sample_rate * 2.0 * PI / self.carrier;
        if per_cycle < 32.0 * (1.0 - 1e-9) {
            return Err(Error::invalid(
                "waveform.sample_rate",
                format!("{per_cycle:.3} samples per carrier cycle, need at least 32"),
            ));
        }
        let cycles = self.cycles();
        if cycles < 0.5 || (cycles - cycles.round()).abs() > 1e-6 * cycles.max(1.0) {
            return Err(Error::invalid(
                "waveform.duration",
                format!("spans {cycles} carrier cycles, need a positive integer"),
            ));
        }
        Ok(())
    }
}

/// Second-harmonic envelope `a₂ - j b₂` of the diode current driven by
/// `waveform`, by trapezoid quadrature over its whole number of cycles.
pub fn second_harmonic_envelope(waveform: &BandpassWaveform, p: &TagParams) -> Result<Complex64> {
    waveform.validate()?;
    let n = waveform.samples.len() - 1;
    let dt = 1.0 / waveform.sample_rate;
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &v) in waveform.samples.iter().enumerate() {
        let weight = if k == 0 || k == n { 0.5 } else { 1.0 };
        let i = diode_current(v, p);
        // a₂ - j b₂ = (2/T)∫ i (cos 2ω₀t - j sin 2ω₀t) dt
        acc += Complex64::cis(-2.0 * waveform.carrier * k as f64 * dt) * (weight * i);
    }
    Ok(acc * (2.0 / n as f64))
}

/// Exact `|i₂|` for a steady tone of amplitude `a` volts, one carrier cycle
/// at `samples_per_cycle` points. The rectangle rule is exact for a
/// periodic integrand up to aliasing of harmonic `samples_per_cycle - 2`.
pub fn tone_harmonic_amplitude(a: f64, p: &TagParams, samples_per_cycle: usize) -> f64 {
    let n = samples_per_cycle;
    let mut acc = 0.0;
    for k in 0..n {
        let theta = 2.0 * PI * k as f64 / n as f64;
        acc += diode_current(a * theta.cos(), p) * (2.0 * theta).cos();
    }
    (2.0 * acc / n as f64).abs()
}

/// Tabulated exact tag response `i₂ = g(|v|) v²` for quasi-static envelopes.
///
/// The diode is memoryless, so a frozen tone of envelope `v` yields
/// `i₂ = |i₂|(|v|) e^{j2 arg v}`. The table stores `g(A) = |i₂|(A)/A²` on a
/// uniform amplitude grid and interpolates linearly; `g(0)` is the
/// small-signal limit `β/R_F` from the full series.
#[derive(Clone, Debug)]
pub struct ExactHarmonicTable {
    step: f64,
    ratio: Vec<f64>,
    slope_beyond: f64,
}

impl ExactHarmonicTable {
    pub const NODES: usize = 2049;
    const SAMPLES_PER_CYCLE: usize = 256;

    pub fn new(p: &TagParams, max_amplitude: f64) -> Result<Self> {
        if !(max_amplitude > 0.0 && max_amplitude.is_finite()) {
            return Err(Error::invalid("max_amplitude", "must be positive"));
        }
        let step = max_amplitude / (Self::NODES - 1) as f64;
        let g0 = beta_coefficient(p, BetaMode::Series) / p.fundamental_resistance;
        let ratio = (0..Self::NODES)
            .map(|k| {
                if k == 0 {
                    g0
                } else {
                    let a = k as f64 * step;
                    tone_harmonic_amplitude(a, p, Self::SAMPLES_PER_CYCLE) / (a * a)
                }
            })
            .collect();
        Ok(ExactHarmonicTable {
            step,
            ratio,
            slope_beyond: 2.0 / (3.0 * PI) / p.fundamental_resistance,
        })
    }

    pub fn max_amplitude(&self) -> f64 {
        self.step * (Self::NODES - 1) as f64
    }

    /// `|i₂|/A²` at amplitude `a`. Beyond the table the large-signal law
    /// takes over, matched to the last node.
    pub fn ratio(&self, a: f64) -> f64 {
        let x = a / self.step;
        let last = Self::NODES - 1;
        if x >= last as f64 {
            let a_max = self.max_amplitude();
            let i_max = self.ratio[last] * a_max * a_max;
            return (i_max + self.slope_beyond * (a - a_max)) / (a * a);
        }
        let k = x.floor() as usize;
        let t = x - k as f64;
        self.ratio[k] * (1.0 - t) + self.ratio[k + 1] * t
    }

    pub fn response(&self, v: Complex64) -> Complex64 {
        v * v * self.ratio(v.norm())
    }
}
