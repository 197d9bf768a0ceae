//! One phase-adjustment slot.
//!
//! During slot `i` the already aligned helpers transmit their partial sum
//! `v_p = A_p e^{jθ_p}` as a fixed tone while helper `i+1` sweeps its phase
//! `φ(t) = 2πt/T_s` once. The quadratic tag returns
//! `η(v_p + v_h e^{jφ})² e^{-j2ω₀τ}`, whose three components are separated
//! by the Fourier integrators
//!
//! ```text
//! G_k = ∫₀^{T_s} r(t) e^{-jkφ(t)} dt,   k = 0, 1, 2
//! ```
//!
//! and `arg(G₀G₁*)` recovers the phase offset `θ_p - θ̄` the sweeping helper
//! must add.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use crate::tag::ExactHarmonicTable;
use crate::units::SPEED_OF_LIGHT;
use crate::{Error, Result};

/// Slot schedule of one frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameConfig {
    /// `M`, number of helpers.
    pub helpers: usize,
    /// `T_s`, s.
    #[serde(rename = "slot_duration_s")]
    pub slot_duration: f64,
    /// `T_r`, s.
    #[serde(rename = "ranging_duration_s", default)]
    pub ranging_duration: f64,
}

impl FrameConfig {
    pub fn new(helpers: usize, slot_duration: f64) -> Self {
        FrameConfig {
            helpers,
            slot_duration,
            ranging_duration: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.helpers < 1 {
            return Err(Error::invalid("frame.helpers", "need at least one helper"));
        }
        if !(self.slot_duration > 0.0 && self.slot_duration < 1.0) {
            return Err(Error::invalid(
                "frame.slot_duration_s",
                format!("must lie in (0, 1 s), got {}", self.slot_duration),
            ));
        }
        if !(self.ranging_duration >= 0.0 && self.ranging_duration.is_finite()) {
            return Err(Error::invalid("frame.ranging_duration_s", "must be non-negative"));
        }
        Ok(())
    }

    /// `T_f = (M-1)T_s + T_r`.
    pub fn frame_duration(&self) -> f64 {
        (self.helpers.saturating_sub(1)) as f64 * self.slot_duration + self.ranging_duration
    }

    /// Sweep phase `φ(t) = 2πt/T_s` on `[0, T_s)`.
    pub fn sweep(&self, t: f64) -> f64 {
        TAU * t / self.slot_duration
    }
}

/// Integrator outputs of one slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlotObservation {
    pub g0: Complex64,
    pub g1: Complex64,
    pub g2: Complex64,
    pub gamma0: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// `σ² = T_s N₀`, variance of each integrator's noise.
    pub sigma_n2: f64,
}

impl SlotObservation {
    /// K-factor of `G₀G₁*` under the Gaussian model of the product noise,
    /// `γ₀γ₁/(γ₀ + γ₁ + 1)`.
    pub fn k_factor(&self) -> f64 {
        let p = self.gamma0 * self.gamma1;
        if p == 0.0 {
            0.0
        } else if p.is_infinite() {
            f64::INFINITY
        } else {
            p / (self.gamma0 + self.gamma1 + 1.0)
        }
    }
}

/// Deterministic inputs of one slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlotInput {
    /// Partial sum `A_p e^{jθ_p}` at the tag, V.
    pub partial: Complex64,
    /// Sweeping helper `A_h e^{jθ̄}` at the tag (sweep phase excluded), V.
    pub helper: Complex64,
    pub eta: f64,
    pub slot_duration: f64,
    /// `2ω₀τ` of the tag-to-receiver round trip.
    pub round_trip_phase: f64,
    /// `N₀`.
    pub noise_psd: f64,
}

impl SlotInput {
    /// Normalised slot: `A_r = η = T_s = 1`, `N₀ = 1/γ₂`.
    pub fn normalised(partial: Complex64, helper: Complex64, gamma2: f64) -> Self {
        SlotInput {
            partial,
            helper,
            eta: 1.0,
            slot_duration: 1.0,
            round_trip_phase: 0.0,
            noise_psd: 1.0 / gamma2,
        }
    }

    pub fn sigma_n2(&self) -> f64 {
        self.slot_duration * self.noise_psd
    }

    /// Noise-free `(Ġ₀, Ġ₁, Ġ₂)`.
    pub fn clean_integrals(&self) -> [Complex64; 3] {
        let c = Complex64::cis(-self.round_trip_phase) * (self.eta * self.slot_duration);
        [
            c * self.partial * self.partial,
            c * self.partial * self.helper * 2.0,
            c * self.helper * self.helper,
        ]
    }
}

/// Circular complex Gaussian with `E|n|² = 1`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * FRAC_1_SQRT_2
}

fn observation(clean: [Complex64; 3], noisy: [Complex64; 3], sigma_n2: f64) -> SlotObservation {
    let snr = |g: Complex64| g.norm_sqr() / sigma_n2;
    SlotObservation {
        g0: noisy[0],
        g1: noisy[1],
        g2: noisy[2],
        gamma0: snr(clean[0]),
        gamma1: snr(clean[1]),
        gamma2: snr(clean[2]),
        sigma_n2,
    }
}

/// Integrator-level slot: closed-form integrals plus `noise`, given as
/// unit-variance complex Gaussians scaled here to `σ² = T_s N₀`.
pub fn slot_integrals(input: &SlotInput, noise: Option<[Complex64; 3]>) -> SlotObservation {
    let clean = input.clean_integrals();
    let sigma = input.sigma_n2().sqrt();
    let noisy = match noise {
        Some(n) => [clean[0] + n[0] * sigma, clean[1] + n[1] * sigma, clean[2] + n[2] * sigma],
        None => clean,
    };
    observation(clean, noisy, input.sigma_n2())
}

/// How the tag turns its input envelope into the received envelope.
#[derive(Clone, Copy, Debug)]
pub enum TagResponse<'a> {
    /// `η v²`.
    Quadratic { eta: f64 },
    /// `scale · i₂(v)` with the exact diode current; `scale` is
    /// `h_d √(k_out R_H R_rx)`.
    Exact { table: &'a ExactHarmonicTable, scale: f64 },
}

impl TagResponse<'_> {
    pub fn envelope(&self, v: Complex64) -> Complex64 {
        match *self {
            TagResponse::Quadratic { eta } => v * v * eta,
            TagResponse::Exact { table, scale } => table.response(v) * scale,
        }
    }
}

/// Sampled slot: the sweep is evaluated at `samples` points with the tag
/// frozen per sample, and integrated by the rectangle rule (exact for the
/// trigonometric polynomial of the quadratic tag). Per-sample noise has
/// variance `N₀/Δt`, so each integrator again sees `T_s N₀`.
///
/// `input.eta` is ignored in favour of `tag`.
pub fn slot_integrals_waveform<R: Rng + ?Sized>(
    input: &SlotInput,
    tag: TagResponse<'_>,
    samples: usize,
    noise: Option<&mut R>,
) -> Result<SlotObservation> {
    if samples < 64 {
        return Err(Error::invalid("waveform_samples", format!("need at least 64 per slot, got {samples}")));
    }
    let dt = input.slot_duration / samples as f64;
    let rotation = Complex64::cis(-input.round_trip_phase);
    let sample_sigma = (input.noise_psd / dt).sqrt();
    let mut clean = [Complex64::new(0.0, 0.0); 3];
    let mut noisy = clean;
    let mut rng = noise;
    for k in 0..samples {
        let phi = TAU * k as f64 / samples as f64;
        let sweep = Complex64::cis(phi);
        let r = tag.envelope(input.partial + input.helper * sweep) * rotation;
        let n = match rng.as_deref_mut() {
            Some(g) => complex_normal(g) * sample_sigma,
            None => Complex64::new(0.0, 0.0),
        };
        let mut basis = Complex64::new(dt, 0.0);
        for j in 0..3 {
            clean[j] += r * basis;
            noisy[j] += (r + n) * basis;
            basis *= sweep.conj();
        }
    }
    Ok(observation(clean, noisy, input.sigma_n2()))
}

/// `φ̂ = arg(G₀ G₁*)` in `(-π, π]`.
pub fn estimate_phase_offset(obs: &SlotObservation) -> Result<f64> {
    if obs.g0.norm_sqr() == 0.0 {
        return Err(Error::Degenerate("G0 is zero"));
    }
    if obs.g1.norm_sqr() == 0.0 {
        return Err(Error::Degenerate("G1 is zero"));
    }
    Ok(wrap_phase((obs.g0 * obs.g1.conj()).arg()))
}

/// Wraps to `(-π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// New transmit phase `θ + φ̂ + θ_d + drift`, wrapped.
pub fn apply_adjustment(theta: f64, offset: f64, delay_error: f64, drift: f64) -> f64 {
    wrap_phase(theta + offset + delay_error + drift)
}

/// Delay error `θ_d = 2π d/(c T_s)` of a sweep that ignores the propagation
/// delay over distance `d`.
pub fn delay_phase_error(distance: f64, slot_duration: f64) -> f64 {
    TAU * distance / (SPEED_OF_LIGHT * slot_duration)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use proptest::prelude::*;

    fn zero() -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    #[test]
    fn frame_bookkeeping() {
        let f = FrameConfig {
            helpers: 5,
            slot_duration: 1e-6,
            ranging_duration: 3e-6,
        };
        assert!((f.frame_duration() - 7e-6).abs() < 1e-18);
        assert!((f.sweep(0.5e-6) - PI).abs() < 1e-12);
        assert!(FrameConfig::new(0, 1e-6).validate().is_err());
        assert!(FrameConfig::new(2, 2.0).validate().is_err());
    }

    #[test]
    fn silent_helper() {
        let input = SlotInput::normalised(Complex64::new(1.0, 0.0), zero(), 1.0);
        let obs = slot_integrals(&input, None);
        assert_eq!(obs.g1, zero());
        assert_eq!(obs.g2, zero());
        assert!(matches!(estimate_phase_offset(&obs), Err(Error::Degenerate(_))));
    }

    #[test]
    fn equal_amplitudes_ratio_two() {
        let input = SlotInput::normalised(Complex64::from_polar(0.7, 0.4), Complex64::from_polar(0.7, -1.1), 3.0);
        let obs = slot_integrals(&input, None);
        assert!((obs.g1.norm() / obs.g0.norm() - 2.0).abs() < 1e-12);
        assert!((obs.gamma1 - 4.0 * (obs.gamma0 * obs.gamma2).sqrt()).abs() < 1e-9 * obs.gamma1);
        let k = crate::dist::k_factor(1.0, 3.0 * 0.7f64.powi(4));
        assert!((obs.k_factor() / k - 1.0).abs() < 1e-12);
    }

    #[test]
    fn offset_arithmetic() {
        let obs = SlotObservation {
            g0: Complex64::cis(0.5),
            g1: Complex64::cis(0.2),
            g2: zero(),
            gamma0: 0.0,
            gamma1: 0.0,
            gamma2: 0.0,
            sigma_n2: 1.0,
        };
        assert!((estimate_phase_offset(&obs).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn noise_free_offset_and_alignment() {
        let mut input = SlotInput::normalised(Complex64::cis(1.0), Complex64::cis(0.25), 1.0);
        input.round_trip_phase = 12.345;
        let obs = slot_integrals(&input, None);
        let phi = estimate_phase_offset(&obs).unwrap();
        assert!((phi - 0.75).abs() < 1e-12);
        let theta = apply_adjustment(0.25, phi, 0.0, 0.0);
        let sum = input.partial + Complex64::cis(theta);
        assert!((sum.norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn delay_error_value() {
        assert!((delay_phase_error(15.0, 1e-6) - 0.3144).abs() < 1e-4);
    }

    #[test]
    fn wrap_convention() {
        assert_eq!(wrap_phase(PI), PI);
        assert!((wrap_phase(-PI) - PI).abs() < 1e-15);
        assert!((wrap_phase(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn waveform_matches_closed_form() {
        let mut input = SlotInput::normalised(Complex64::from_polar(1.3, 0.2), Complex64::from_polar(0.8, 2.0), 1.0);
        input.eta = 0.37;
        input.slot_duration = 1e-6;
        input.round_trip_phase = 0.9;
        let obs = slot_integrals_waveform::<ChaCha8Rng>(&input, TagResponse::Quadratic { eta: 0.37 }, 4096, None).unwrap();
        let clean = input.clean_integrals();
        for (g, c) in [obs.g0, obs.g1, obs.g2].iter().zip(clean) {
            assert!((g - c).norm() <= 1e-6 * c.norm());
        }
    }

    #[test]
    fn waveform_noise_has_integrator_variance() {
        let input = SlotInput::normalised(zero(), zero(), 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 4000;
        let mut acc = [0.0; 3];
        for _ in 0..n {
            let obs = slot_integrals_waveform(&input, TagResponse::Quadratic { eta: 1.0 }, 64, Some(&mut rng)).unwrap();
            acc[0] += obs.g0.norm_sqr();
            acc[1] += obs.g1.norm_sqr();
            acc[2] += obs.g2.norm_sqr();
        }
        for a in acc {
            assert!((a / n as f64 / input.sigma_n2() - 1.0).abs() < 0.06);
        }
    }

    #[test]
    fn envelope_noise_is_white_across_integrators() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut cov = [[Complex64::new(0.0, 0.0); 3]; 3];
        for _ in 0..n {
            let d = [complex_normal(&mut rng), complex_normal(&mut rng), complex_normal(&mut rng)];
            for a in 0..3 {
                for b in 0..3 {
                    cov[a][b] += d[a] * d[b].conj();
                }
            }
        }
        for (a, row) in cov.iter().enumerate() {
            for (b, c) in row.iter().enumerate() {
                let c = c / n as f64;
                if a == b {
                    assert!((c.re - 1.0).abs() < 0.05);
                } else {
                    assert!(c.norm() < 0.05);
                }
            }
        }
    }

    #[test]
    fn unbiased_at_high_snr() {
        // γ₂ = 20 dB with A_p = A_h gives K ≈ 23 dB.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let input = SlotInput::normalised(Complex64::cis(0.4), Complex64::cis(-0.3), 100.0);
        let n = 10_000;
        let errs: Vec<f64> = (0..n)
            .map(|_| {
                let noise = [complex_normal(&mut rng), complex_normal(&mut rng), complex_normal(&mut rng)];
                let obs = slot_integrals(&input, Some(noise));
                wrap_phase(estimate_phase_offset(&obs).unwrap() - 0.7)
            })
            .collect();
        let mean = errs.iter().sum::<f64>() / n as f64;
        let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 3.0 * (var / n as f64).sqrt());
    }

    proptest! {
        #[test]
        fn round_trip_phase_cancels(tau in 0.0f64..1e3, tp in -3.0f64..3.0, th in -3.0f64..3.0) {
            let mut input = SlotInput::normalised(Complex64::cis(tp), Complex64::from_polar(0.5, th), 1.0);
            let base = estimate_phase_offset(&slot_integrals(&input, None)).unwrap();
            input.round_trip_phase = tau;
            let shifted = estimate_phase_offset(&slot_integrals(&input, None)).unwrap();
            prop_assert!(wrap_phase(base - shifted).abs() < 1e-9);
        }

        #[test]
        fn wrap_range(x in -1e4f64..1e4) {
            let w = wrap_phase(x);
            prop_assert!(w > -PI && w <= PI);
            prop_assert!(((x - w) / TAU - ((x - w) / TAU).round()).abs() < 1e-9);
        }
    }
}
