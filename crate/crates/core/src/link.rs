//! Link budget of the ranging node, helpers and tag.
//!
//! Amplitudes are complex envelopes in volts at the stated port
//! resistance; powers follow `P = |v|²/(2R)`. Received envelopes are
//! referred to the receiver resistance `R_rx`, which cancels from every
//! SNR.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::tag::{tone_harmonic_amplitude, TagParams};
use crate::units::{db_to_linear, Gain, BOLTZMANN, SPEED_OF_LIGHT};
use crate::{Error, Result};

/// Which `N₀` definition to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFigureMode {
    /// `N₀ = R_rx k_B T_n (F - 1)`: excess noise of the receiver only.
    #[default]
    Excess,
    /// `N₀ = R_rx k_B T_n F`.
    Total,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    carrier_frequency_hz: f64,
    transmit_power_w: f64,
    gain_tx_dbi: Gain,
    gain_rx_dbi: Gain,
    resistance_tx_ohm: f64,
    resistance_rx_ohm: f64,
    bandwidth_hz: f64,
    noise_figure_db: f64,
    noise_temperature_k: f64,
    #[serde(default)]
    noise_figure_mode: NoiseFigureMode,
}

/// Radio constants shared by the ranging node and the helpers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemSection", into = "SystemSection")]
pub struct SystemParams {
    /// `f₀`, Hz.
    pub carrier_frequency: f64,
    /// `P_r`, W. Helpers radiate the same power.
    pub transmit_power: f64,
    pub gain_tx: Gain,
    pub gain_rx: Gain,
    pub resistance_tx: f64,
    pub resistance_rx: f64,
    /// `B_r`, Hz.
    pub bandwidth: f64,
    /// dB.
    pub noise_figure: f64,
    /// K.
    pub noise_temperature: f64,
    pub noise_figure_mode: NoiseFigureMode,
}

impl TryFrom<SystemSection> for SystemParams {
    type Error = Error;

    fn try_from(s: SystemSection) -> Result<Self> {
        let p = SystemParams {
            carrier_frequency: s.carrier_frequency_hz,
            transmit_power: s.transmit_power_w,
            gain_tx: s.gain_tx_dbi,
            gain_rx: s.gain_rx_dbi,
            resistance_tx: s.resistance_tx_ohm,
            resistance_rx: s.resistance_rx_ohm,
            bandwidth: s.bandwidth_hz,
            noise_figure: s.noise_figure_db,
            noise_temperature: s.noise_temperature_k,
            noise_figure_mode: s.noise_figure_mode,
        };
        p.validate()?;
        Ok(p)
    }
}

impl From<SystemParams> for SystemSection {
    fn from(p: SystemParams) -> Self {
        SystemSection {
            carrier_frequency_hz: p.carrier_frequency,
            transmit_power_w: p.transmit_power,
            gain_tx_dbi: p.gain_tx,
            gain_rx_dbi: p.gain_rx,
            resistance_tx_ohm: p.resistance_tx,
            resistance_rx_ohm: p.resistance_rx,
            bandwidth_hz: p.bandwidth,
            noise_figure_db: p.noise_figure,
            noise_temperature_k: p.noise_temperature,
            noise_figure_mode: p.noise_figure_mode,
        }
    }
}

impl SystemParams {
    /// The X-band harmonic radar of the bundled preset.
    pub fn xband() -> Self {
        SystemParams {
            carrier_frequency: 9.3e9,
            transmit_power: 10.0,
            gain_tx: Gain::from_dbi(15.0),
            gain_rx: Gain::from_dbi(15.0),
            resistance_tx: 50.0,
            resistance_rx: 50.0,
            bandwidth: 125e3,
            noise_figure: 2.5,
            noise_temperature: 290.0,
            noise_figure_mode: NoiseFigureMode::Excess,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("system.transmit_power_w", self.transmit_power),
            ("system.resistance_tx_ohm", self.resistance_tx),
            ("system.resistance_rx_ohm", self.resistance_rx),
            ("system.bandwidth_hz", self.bandwidth),
            ("system.noise_temperature_k", self.noise_temperature),
        ];
        for (field, x) in checks {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::invalid(field, format!("must be positive, got {x}")));
            }
        }
        if !(self.carrier_frequency > 0.0 && self.carrier_frequency < 100e9) {
            return Err(Error::invalid(
                "system.carrier_frequency_hz",
                format!("must lie in (0, 100 GHz), got {}", self.carrier_frequency),
            ));
        }
        if !(self.noise_figure >= 0.0 && self.noise_figure.is_finite()) {
            return Err(Error::invalid("system.noise_figure_db", "must be at least 0 dB"));
        }
        Ok(())
    }

    /// `ω₀ = 2π f₀`.
    pub fn omega0(&self) -> f64 {
        2.0 * PI * self.carrier_frequency
    }
}

/// Positions of the ranging node and helpers relative to the tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    #[serde(rename = "rn_distance_m")]
    pub rn_distance: f64,
    #[serde(rename = "helper_distances_m", default)]
    pub helper_distances: Vec<f64>,
    #[serde(rename = "lo_phases_rad", default)]
    pub lo_phases: Vec<f64>,
}

impl Geometry {
    pub fn new(rn_distance: f64) -> Self {
        Geometry {
            rn_distance,
            helper_distances: Vec::new(),
            lo_phases: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rn_distance.is_finite() && self.rn_distance > 0.0) {
            return Err(Error::invalid("geometry.rn_distance_m", "must be positive"));
        }
        if let Some(d) = self.helper_distances.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::invalid(
                "geometry.helper_distances_m",
                format!("distances must be positive, got {d}"),
            ));
        }
        if !self.lo_phases.is_empty() && self.lo_phases.len() != self.helper_distances.len() {
            return Err(Error::invalid(
                "geometry.lo_phases_rad",
                "needs one phase per helper distance",
            ));
        }
        Ok(())
    }

    /// `τ_r = d_r/c`.
    pub fn rn_delay(&self) -> f64 {
        self.rn_distance / SPEED_OF_LIGHT
    }

    /// `θ_r = -ω₀ τ_r`.
    pub fn rn_phase(&self, omega0: f64) -> f64 {
        -omega0 * self.rn_delay()
    }

    /// Distance of helper `m` (0-based); helpers without an explicit entry
    /// sit at the ranging-node distance.
    pub fn helper_distance(&self, m: usize) -> f64 {
        self.helper_distances.get(m).copied().unwrap_or(self.rn_distance)
    }

    /// `θ̄_m = θ_m - ω₀ d_m/c`.
    pub fn helper_phase(&self, m: usize, omega0: f64) -> f64 {
        let lo = self.lo_phases.get(m).copied().unwrap_or(0.0);
        lo - omega0 * self.helper_distance(m) / SPEED_OF_LIGHT
    }

    /// Largest node distance, which sets the delay error of the protocol.
    pub fn max_distance(&self) -> f64 {
        self.helper_distances.iter().copied().fold(self.rn_distance, f64::max)
    }
}

/// Gains and amplitudes of one geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkGains {
    pub h_u: f64,
    pub h_d: f64,
    pub eta: f64,
    /// Ranging amplitude at the tag, V.
    pub a_r: f64,
    /// Helper amplitudes at the tag, V.
    pub a_h: Vec<f64>,
}

impl LinkGains {
    pub fn compute(sys: &SystemParams, tag: &TagParams, geometry: &Geometry, helpers: usize) -> Result<Self> {
        geometry.validate()?;
        let d = geometry.rn_distance;
        Ok(LinkGains {
            h_u: uplink_gain(d, sys, tag),
            h_d: downlink_gain(d, sys, tag),
            eta: link_constant(d, sys, tag),
            a_r: tag_input_amplitude(d, sys, tag),
            a_h: (0..helpers)
                .map(|m| tag_input_amplitude(geometry.helper_distance(m), sys, tag))
                .collect(),
        })
    }
}

/// `h_u(d) = √(G_tx G_tag(ω₀)) c/(2ω₀ d)`.
pub fn uplink_gain(d: f64, sys: &SystemParams, tag: &TagParams) -> f64 {
    (sys.gain_tx.linear() * tag.gain_fundamental.linear()).sqrt() * SPEED_OF_LIGHT / (2.0 * sys.omega0() * d)
}

/// `h_d(d) = √(G_rx G_tag(2ω₀)) c/(4ω₀ d)`, free-space gain at `2ω₀`.
pub fn downlink_gain(d: f64, sys: &SystemParams, tag: &TagParams) -> f64 {
    (sys.gain_rx.linear() * tag.gain_harmonic.linear()).sqrt() * SPEED_OF_LIGHT / (4.0 * sys.omega0() * d)
}

/// Power delivered to the tag, `P_in = h_u² P_r`.
pub fn input_power(d: f64, sys: &SystemParams, tag: &TagParams) -> f64 {
    uplink_gain(d, sys, tag).powi(2) * sys.transmit_power
}

/// `A_r = √(2 R_F k_in P_r) h_u(d)`.
pub fn tag_input_amplitude(d: f64, sys: &SystemParams, tag: &TagParams) -> f64 {
    (2.0 * tag.fundamental_resistance * tag.input_efficiency * sys.transmit_power).sqrt() * uplink_gain(d, sys, tag)
}

/// Combined downlink constant `η = h_d β √(R_H R_rx k_out)/R_F`.
pub fn link_constant(d: f64, sys: &SystemParams, tag: &TagParams) -> f64 {
    downlink_gain(d, sys, tag)
        * tag.beta()
        * (tag.harmonic_resistance * sys.resistance_rx * tag.output_efficiency).sqrt()
        / tag.fundamental_resistance
}

/// Tag model used for the second-harmonic current.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagModel {
    #[default]
    Quadratic,
    Exact,
}

/// Amplitude `I₂` of the second-harmonic tag current at distance `d`.
pub fn harmonic_current(d: f64, sys: &SystemParams, tag: &TagParams, model: TagModel) -> Result<f64> {
    let a_r = tag_input_amplitude(d, sys, tag);
    Ok(match model {
        TagModel::Quadratic => tag.beta() * a_r * a_r / tag.fundamental_resistance,
        TagModel::Exact => tone_harmonic_amplitude(a_r, tag, 256),
    })
}

/// Conventional (no helper) received power `h_d² k_out R_H I₂²/2`, W.
pub fn received_power_conventional(d: f64, sys: &SystemParams, tag: &TagParams, model: TagModel) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::invalid("distance", "must be positive"));
    }
    let i2 = harmonic_current(d, sys, tag, model)?;
    Ok(downlink_gain(d, sys, tag).powi(2) * tag.output_efficiency * tag.harmonic_resistance * i2 * i2 / 2.0)
}

/// `N₀` referred to `R_rx`, V²/Hz.
pub fn noise_psd(sys: &SystemParams) -> f64 {
    let f = db_to_linear(sys.noise_figure);
    let factor = match sys.noise_figure_mode {
        NoiseFigureMode::Excess => f - 1.0,
        NoiseFigureMode::Total => f,
    };
    sys.resistance_rx * BOLTZMANN * sys.noise_temperature * factor
}

/// Noise power `2 B_r N₀` in watts (the `R_rx` scale removed).
pub fn noise_power(sys: &SystemParams) -> f64 {
    2.0 * sys.bandwidth * noise_psd(sys) / sys.resistance_rx
}

/// Integrator SNR `γ₂ = η² T_s A_r⁴/N₀` for a slot of `t_s` seconds, with
/// the helper amplitude equal to the ranging amplitude. Under the exact
/// model the effective `ηA_r²` is taken from the exact `I₂`.
pub fn gamma2(d: f64, t_s: f64, sys: &SystemParams, tag: &TagParams, model: TagModel) -> Result<f64> {
    let envelope_power = 2.0 * received_power_conventional(d, sys, tag, model)?;
    Ok(envelope_power * t_s * sys.resistance_rx / noise_psd(sys))
}

/// The received second-harmonic envelope split into its components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReceivedTerms {
    /// `η v_r²`, conventional ranging return.
    pub ranging: Complex64,
    /// `2η v_r v_h`, the intermodulation term carrying the ranging code.
    pub intermod: Complex64,
    /// `η v_h²`, helper self-product (a tone at `2ω₀`).
    pub helpers: Complex64,
    pub noise: Complex64,
}

impl ReceivedTerms {
    pub fn total(&self) -> Complex64 {
        self.ranging + self.intermod + self.helpers + self.noise
    }

    /// Intermodulation power normalised to `η`: `4 A_h² A_r²`.
    pub fn intermod_power(&self, eta: f64) -> f64 {
        (self.intermod / eta).norm_sqr()
    }

    /// Ranging power normalised to `η`: `A_r⁴`.
    pub fn ranging_power(&self, eta: f64) -> f64 {
        (self.ranging / eta).norm_sqr()
    }
}

/// Squares `v_r + v_h` through the quadratic tag and splits the result.
/// `ranging` is `A_r e^{jθ_r}` (with the code value folded in) and
/// `helpers` is the helper sum `A_h e^{jθ_h}` at the tag.
pub fn compose_received(ranging: Complex64, helpers: Complex64, eta: f64, noise: Complex64) -> ReceivedTerms {
    ReceivedTerms {
        ranging: ranging * ranging * eta,
        intermod: ranging * helpers * (2.0 * eta),
        helpers: helpers * helpers * eta,
        noise,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{linear_to_db, watts_to_dbm};
    use proptest::prelude::*;

    fn setup() -> (SystemParams, TagParams) {
        (SystemParams::xband(), TagParams::sms7630())
    }

    #[test]
    fn inverse_distance_laws() {
        let (s, t) = setup();
        assert!((uplink_gain(10.0, &s, &t) / uplink_gain(20.0, &s, &t) - 2.0).abs() < 1e-12);
        assert!((downlink_gain(3.0, &s, &t) / downlink_gain(6.0, &s, &t) - 2.0).abs() < 1e-12);
        let mut s4 = s.clone();
        s4.gain_tx = Gain::from_dbi(s.gain_tx.dbi() + linear_to_db(4.0));
        assert!((uplink_gain(5.0, &s4, &t) / uplink_gain(5.0, &s, &t) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn amplitude_scaling() {
        let (s, t) = setup();
        let mut s4 = s.clone();
        s4.transmit_power *= 4.0;
        let a = tag_input_amplitude(15.0, &s, &t);
        assert!((tag_input_amplitude(15.0, &s4, &t) / a - 2.0).abs() < 1e-12);
        assert!((a / tag_input_amplitude(30.0, &s, &t) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_power_follows_sixth_power() {
        let (s, t) = setup();
        let p1 = received_power_conventional(8.0, &s, &t, TagModel::Quadratic).unwrap();
        let p2 = received_power_conventional(16.0, &s, &t, TagModel::Quadratic).unwrap();
        assert!((p1 / p2 - 64.0).abs() < 1e-9);
    }

    #[test]
    fn noise_figure_of_two_gives_ktb() {
        let mut s = SystemParams::xband();
        s.noise_figure = linear_to_db(2.0);
        let expected = 2.0 * s.bandwidth * BOLTZMANN * s.noise_temperature;
        assert!((noise_power(&s) / expected - 1.0).abs() < 1e-12);
        let before = watts_to_dbm(noise_power(&s));
        s.bandwidth *= 2.0;
        assert!((watts_to_dbm(noise_power(&s)) - before - 3.0103).abs() < 1e-4);
    }

    #[test]
    fn stated_noise_formula() {
        let s = SystemParams::xband();
        assert!((watts_to_dbm(noise_power(&s)) + 121.1).abs() < 0.05);
        let mut t = s.clone();
        t.noise_figure_mode = NoiseFigureMode::Total;
        assert!((watts_to_dbm(noise_power(&t)) + 117.5).abs() < 0.05);
    }

    #[test]
    fn gamma2_independent_of_rx_resistance() {
        let (s, t) = setup();
        let g = gamma2(15.0, 1e-6, &s, &t, TagModel::Quadratic).unwrap();
        for k in [0.1, 0.5, 3.0, 10.0] {
            let mut sk = s.clone();
            sk.resistance_rx *= k;
            let gk = gamma2(15.0, 1e-6, &sk, &t, TagModel::Quadratic).unwrap();
            assert!((gk / g - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma2_matches_eta_form() {
        let (s, t) = setup();
        let d = 12.0;
        let eta = link_constant(d, &s, &t);
        let a = tag_input_amplitude(d, &s, &t);
        let direct = eta * eta * 1e-6 * a.powi(4) / noise_psd(&s);
        let g = gamma2(d, 1e-6, &s, &t, TagModel::Quadratic).unwrap();
        assert!((g / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_terms() {
        let a = Complex64::from_polar(0.063, 0.3);
        let zero = Complex64::new(0.0, 0.0);
        let r = compose_received(a, zero, 2.0, zero);
        assert_eq!(r.intermod, zero);
        assert_eq!(r.helpers, zero);

        let r = compose_received(a, a, 2.0, zero);
        let ratio = linear_to_db(r.intermod_power(2.0) / r.ranging_power(2.0));
        assert!((ratio - 6.0206).abs() < 1e-3);

        let m = 4.0;
        let r = compose_received(a, a * m, 1.0, zero);
        assert!((r.intermod_power(1.0) / (4.0 * m * m * 0.063f64.powi(4)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        let mut s = SystemParams::xband();
        s.carrier_frequency = 200e9;
        assert!(s.validate().is_err());
        let mut g = Geometry::new(1.0);
        g.helper_distances = vec![1.0, -2.0];
        assert!(g.validate().is_err());
    }

    proptest! {
        #[test]
        fn intermod_is_geometric_mean(ar in 0.0f64..1.0, ah in 0.0f64..1.0, pr in -3.0f64..3.0, ph in -3.0f64..3.0, eta in 1e-6f64..10.0) {
            let zero = Complex64::new(0.0, 0.0);
            let r = compose_received(Complex64::from_polar(ar, pr), Complex64::from_polar(ah, ph), eta, zero);
            let gm = 2.0 * (r.ranging.norm() * r.helpers.norm()).sqrt();
            prop_assert!((r.intermod.norm() - gm).abs() <= 1e-12 * gm.max(1e-300));
        }

        #[test]
        fn gains_decrease(d in 0.1f64..100.0, dd in 0.01f64..10.0) {
            let (s, t) = setup();
            prop_assert!(uplink_gain(d + dd, &s, &t) < uplink_gain(d, &s, &t));
            prop_assert!(downlink_gain(d + dd, &s, &t) < downlink_gain(d, &s, &t));
        }
    }
}
