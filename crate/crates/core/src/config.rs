//! Experiment configuration: TOML files, JSON import/export and the bundled
//! presets.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::coherence::{delay_phase_error, FrameConfig};
use crate::link::{downlink_gain, gamma2, link_constant, noise_psd, tag_input_amplitude, Geometry, SystemParams, TagModel};
use crate::montecarlo::{ImpairmentConfig, NoiseModel, Scenario, SlotModel, WaveformTag};
use crate::tag::{ExactHarmonicTable, TagParams};
use crate::{Error, Result};

const PRESETS: &[(&str, &str)] = &[("xband-sto2020", include_str!("../presets/xband-sto2020.toml"))];

/// Fidelity of the Monte Carlo slot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimulationMode {
    #[default]
    Envelope,
    Waveform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub mode: SimulationMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub noise_model: NoiseModel,
    /// Tag used in waveform mode.
    #[serde(default)]
    pub tag_model: TagModel,
    #[serde(default = "default_samples")]
    pub waveform_samples: usize,
}

fn default_samples() -> usize {
    256
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemParams,
    pub tag: TagParams,
    pub geometry: Geometry,
    pub frame: FrameConfig,
    pub impairments: ImpairmentConfig,
    pub run: RunConfig,
}

impl ExperimentConfig {
    pub fn preset_names() -> impl Iterator<Item = &'static str> {
        PRESETS.iter().map(|(n, _)| *n)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::invalid("preset", format!("unknown preset `{name}`")))?;
        Self::from_toml_str(text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if is_json(path) {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = if is_json(path) { self.to_json()? } else { self.to_toml()? };
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.geometry.validate()?;
        self.frame.validate()?;
        self.impairments.validate()?;
        let m = self.frame.helpers;
        if self.geometry.helper_distances.len() > m {
            return Err(Error::invalid(
                "geometry.helper_distances_m",
                format!("{} entries for {m} helpers", self.geometry.helper_distances.len()),
            ));
        }
        if self.geometry.lo_phases.len() > m {
            return Err(Error::invalid("geometry.lo_phases_rad", format!("more than {m} entries")));
        }
        if self.run.trials == 0 {
            return Err(Error::invalid("run.trials", "must be at least 1"));
        }
        if self.run.waveform_samples < 64 {
            return Err(Error::invalid("run.waveform_samples", "need at least 64"));
        }
        let g = self.gamma2()?;
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::invalid("gamma2", format!("derived slot SNR {g} is not positive")));
        }
        Ok(())
    }

    /// `γ₂` of one slot at the ranging-node distance.
    pub fn gamma2(&self) -> Result<f64> {
        gamma2(
            self.geometry.rn_distance,
            self.frame.slot_duration,
            &self.system,
            &self.tag,
            self.run.tag_model,
        )
    }

    /// Monte Carlo scenario; `gamma2` overrides the link-budget SNR.
    pub fn scenario(&self, gamma2_override: Option<f64>) -> Result<Scenario> {
        let d_r = self.geometry.rn_distance;
        let m = self.frame.helpers;
        let a_r = tag_input_amplitude(d_r, &self.system, &self.tag);
        let amplitudes = (0..m)
            .map(|k| tag_input_amplitude(self.geometry.helper_distance(k), &self.system, &self.tag) / a_r)
            .collect();
        let delay_errors = (0..m)
            .map(|k| delay_phase_error(self.geometry.helper_distance(k), self.frame.slot_duration))
            .collect();
        let gamma2 = match gamma2_override {
            Some(g) => g,
            None => self.gamma2()?,
        };
        let slot = match self.run.mode {
            SimulationMode::Envelope => SlotModel::Envelope {
                gamma2,
                noise: self.run.noise_model,
            },
            SimulationMode::Waveform => {
                let tag = match self.run.tag_model {
                    TagModel::Quadratic => WaveformTag::Quadratic {
                        eta: link_constant(d_r, &self.system, &self.tag),
                    },
                    TagModel::Exact => {
                        let reach = (m + 1) as f64 * a_r * amplitudes_max(&self.geometry, &self.system, &self.tag, m, a_r);
                        WaveformTag::Exact {
                            table: Arc::new(ExactHarmonicTable::new(&self.tag, 1.05 * reach)?),
                            scale: downlink_gain(d_r, &self.system, &self.tag)
                                * (self.tag.output_efficiency * self.tag.harmonic_resistance * self.system.resistance_rx)
                                    .sqrt(),
                        }
                    }
                };
                match gamma2_override {
                    Some(g) => SlotModel::waveform_at_snr(
                        self.run.waveform_samples,
                        a_r,
                        self.frame.slot_duration,
                        tag,
                        g,
                    )?,
                    None => SlotModel::Waveform {
                        samples: self.run.waveform_samples,
                        reference_amplitude: a_r,
                        slot_duration: self.frame.slot_duration,
                        noise_psd: noise_psd(&self.system),
                        tag,
                    },
                }
            }
        };
        let s = Scenario {
            helpers: m,
            amplitudes,
            slot_duration: self.frame.slot_duration,
            ranging_duration: self.frame.ranging_duration,
            carrier: self.system.omega0(),
            impairments: self.impairments.clone(),
            delay_errors,
            slot,
        };
        s.validate()?;
        Ok(s)
    }
}

fn amplitudes_max(g: &Geometry, sys: &SystemParams, tag: &TagParams, m: usize, a_r: f64) -> f64 {
    (0..m)
        .map(|k| tag_input_amplitude(g.helper_distance(k), sys, tag) / a_r)
        .fold(1.0, f64::max)
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}
