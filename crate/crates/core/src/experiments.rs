//! Experiment drivers behind the `hrsim` subcommands. Each returns a
//! [`CsvTable`] and is deterministic for a given configuration and seed.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::config::ExperimentConfig;
use crate::csv::{CsvTable, Value};
use crate::dist::{alpha2_pdf, k_factor, ref_coherent, ref_conventional, slot_bounds, AlphaRecursion, SlotBoundsInput};
use crate::link::{
    downlink_gain, gamma2, input_power, link_constant, noise_power, noise_psd,
    received_power_conventional, tag_input_amplitude, uplink_gain, NoiseFigureMode, SystemParams, TagModel,
};
use crate::montecarlo::{
    bisect_log, estimate_alpha_distribution, simulate, tag_regime_sweep, AlphaEstimate, RefCdf, RegimeSweep,
    Scenario, SlotModel, SnrPolicy,
};
use crate::tag::{large_signal_envelope, TagParams};
use crate::units::{db_to_linear, linear_to_db, watts_to_dbm};
use crate::{Execution, Result};

/// Largest tolerated phase drift across a frame when none is given.
pub const DEFAULT_MAX_PHASE_DRIFT: f64 = PI / 8.0;

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

/// Link budget at the ranging-node distance.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkBudget {
    pub distance: f64,
    pub uplink_gain: f64,
    pub downlink_gain: f64,
    pub input_power_dbm: f64,
    pub amplitude: f64,
    pub rho: f64,
    pub beta: f64,
    pub eta: f64,
    pub received_quadratic_dbm: f64,
    pub received_exact_dbm: f64,
    pub noise_psd: f64,
    pub noise_power_dbm: f64,
    /// Noise power with the total noise factor `F` in place of `F-1`.
    pub noise_power_total_dbm: f64,
    pub gamma2_db: f64,
}

impl LinkBudget {
    pub fn compute(cfg: &ExperimentConfig) -> Result<Self> {
        let (sys, tag) = (&cfg.system, &cfg.tag);
        let d = cfg.geometry.rn_distance;
        let total = SystemParams {
            noise_figure_mode: NoiseFigureMode::Total,
            ..sys.clone()
        };
        let excess = SystemParams {
            noise_figure_mode: NoiseFigureMode::Excess,
            ..sys.clone()
        };
        Ok(LinkBudget {
            distance: d,
            uplink_gain: uplink_gain(d, sys, tag),
            downlink_gain: downlink_gain(d, sys, tag),
            input_power_dbm: watts_to_dbm(input_power(d, sys, tag)),
            amplitude: tag_input_amplitude(d, sys, tag),
            rho: tag.rho(),
            beta: tag.beta(),
            eta: link_constant(d, sys, tag),
            received_quadratic_dbm: watts_to_dbm(received_power_conventional(d, sys, tag, TagModel::Quadratic)?),
            received_exact_dbm: watts_to_dbm(received_power_conventional(d, sys, tag, TagModel::Exact)?),
            noise_psd: noise_psd(sys),
            noise_power_dbm: watts_to_dbm(noise_power(&excess)),
            noise_power_total_dbm: watts_to_dbm(noise_power(&total)),
            gamma2_db: linear_to_db(cfg.gamma2()?),
        })
    }

    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new("link-budget", &["quantity", "value", "unit"]);
        let rows: [(&str, f64, &str); 14] = [
            ("distance", self.distance, "m"),
            ("uplink_gain", self.uplink_gain, "1"),
            ("downlink_gain", self.downlink_gain, "1"),
            ("input_power", self.input_power_dbm, "dBm"),
            ("tag_amplitude", self.amplitude, "V"),
            ("rho", self.rho, "1"),
            ("beta", self.beta, "1/V"),
            ("eta", self.eta, "1/V"),
            ("received_power_quadratic", self.received_quadratic_dbm, "dBm"),
            ("received_power_exact", self.received_exact_dbm, "dBm"),
            ("noise_psd", self.noise_psd, "V2/Hz"),
            ("noise_power", self.noise_power_dbm, "dBm"),
            ("noise_power_total_factor", self.noise_power_total_dbm, "dBm"),
            ("gamma2", self.gamma2_db, "dB"),
        ];
        for (q, v, u) in rows {
            t.push(vec![q.into(), v.into(), u.into()]);
        }
        t
    }
}

/// Conventional received power under the large-signal (linear) tag law.
pub fn received_power_large_signal(d: f64, sys: &SystemParams, tag: &TagParams) -> f64 {
    let i2 = large_signal_envelope(Complex64::new(tag_input_amplitude(d, sys, tag), 0.0), tag).norm();
    downlink_gain(d, sys, tag).powi(2) * tag.output_efficiency * tag.harmonic_resistance * i2 * i2 / 2.0
}

/// Received power and SNR against distance under the three tag laws.
pub fn sweep_distance(cfg: &ExperimentConfig, distances: &[f64]) -> Result<CsvTable> {
    let (sys, tag) = (&cfg.system, &cfg.tag);
    let noise_dbm = watts_to_dbm(noise_power(sys));
    let mut t = CsvTable::new(
        "sweep-distance",
        &[
            "distance_m",
            "input_power_dbm",
            "amplitude_v",
            "p_rec_quadratic_dbm",
            "p_rec_exact_dbm",
            "p_rec_large_signal_dbm",
            "noise_power_dbm",
            "gamma2_db",
        ],
    );
    for &d in distances {
        t.push(vec![
            d.into(),
            watts_to_dbm(input_power(d, sys, tag)).into(),
            tag_input_amplitude(d, sys, tag).into(),
            watts_to_dbm(received_power_conventional(d, sys, tag, TagModel::Quadratic)?).into(),
            watts_to_dbm(received_power_conventional(d, sys, tag, TagModel::Exact)?).into(),
            watts_to_dbm(received_power_large_signal(d, sys, tag)).into(),
            noise_dbm.into(),
            linear_to_db(gamma2(d, cfg.frame.slot_duration, sys, tag, cfg.run.tag_model)?).into(),
        ]);
    }
    Ok(t)
}

/// Log-log slope of the conventional received power between `d1` and `d2`.
pub fn received_power_slope(d1: f64, d2: f64, sys: &SystemParams, tag: &TagParams, model: TagModel) -> Result<f64> {
    let p1 = received_power_conventional(d1, sys, tag, model)?;
    let p2 = received_power_conventional(d2, sys, tag, model)?;
    Ok((p2 / p1).ln() / (d2 / d1).ln())
}

/// Distance at which the local slope of the exact received power passes
/// `-5`, halfway between the quadratic (`-6`) and linear (`-4`) regimes.
pub fn regime_knee(sys: &SystemParams, tag: &TagParams) -> Result<Option<f64>> {
    let slope = |d: f64| received_power_slope(d / 1.01, d * 1.01, sys, tag, TagModel::Exact);
    bisect_log(0.05, 100.0, 1e-4, true, |d| Ok(slope(d)? < -5.0))
}

/// Density and CDF of `α_slot` at `γ₂` from the recursion, with the closed
/// form for slot 2.
pub fn pdf_alpha(slot: usize, gamma2: f64, points_per_unit: usize, exec: Execution) -> Result<CsvTable> {
    let r = AlphaRecursion::with_resolution(gamma2, slot, points_per_unit, exec)?;
    let pdf = r.stage(slot).expect("stage computed");
    let k1 = k_factor(1.0, gamma2);
    let mut t = CsvTable::new("pdf-alpha", &["alpha", "pdf", "cdf", "closed_form"]);
    for ((&x, &f), &c) in pdf.grid().iter().zip(pdf.density()).zip(pdf.cdf()) {
        let exact = if slot == 2 { alpha2_pdf(x, k1) } else { f64::NAN };
        t.push(vec![x.into(), f.into(), c.into(), exact.into()]);
    }
    Ok(t)
}

/// Options of the percentile experiment.
#[derive(Clone, Debug)]
pub struct PercentileOptions {
    pub helpers: Vec<usize>,
    pub gamma2_db: Vec<f64>,
    pub percentiles: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Recursion resolution; `None` skips the analytic column.
    pub points_per_unit: Option<usize>,
}

/// Percentiles of `α̃_M = α_M/M` against `γ₂` (and the slot duration that
/// gives it at the ranging-node distance).
pub fn percentiles(cfg: &ExperimentConfig, opts: &PercentileOptions, exec: Execution) -> Result<CsvTable> {
    let g_cfg = cfg.gamma2()?;
    let max_m = opts.helpers.iter().copied().max().unwrap_or(1);
    let mut t = CsvTable::new("percentiles", &["M", "gamma2_db", "ts_s", "p", "analytic", "montecarlo"]);
    for &g_db in &opts.gamma2_db {
        let g = db_to_linear(g_db);
        let recursion = match opts.points_per_unit {
            Some(n) if max_m >= 2 => Some(AlphaRecursion::with_resolution(g, max_m, n, exec)?),
            _ => None,
        };
        for &m in &opts.helpers {
            let mut c = cfg.clone();
            c.frame.helpers = m;
            let est = estimate_alpha_distribution(&c.scenario(Some(g))?, opts.trials, opts.seed, exec)?;
            for &p in &opts.percentiles {
                let analytic = match (&recursion, m) {
                    (_, 1) => 1.0,
                    (Some(r), _) => r.stage(m).expect("stage computed").percentile(p)? / m as f64,
                    (None, _) => f64::NAN,
                };
                t.push(vec![
                    m.into(),
                    g_db.into(),
                    (cfg.frame.slot_duration * g / g_cfg).into(),
                    p.into(),
                    analytic.into(),
                    est.normalised_percentile(p).into(),
                ]);
            }
        }
    }
    Ok(t)
}

/// `true` when the `p`-th percentile of `2α_M` exceeds `M+1`, i.e. the
/// helpers beat a conventional radar given their power in `p`% of frames
/// or fewer.
pub fn beats_conventional(est: &AlphaEstimate, p: f64) -> bool {
    2.0 * est.alpha.percentile(p) > (est.helpers + 1) as f64
}

/// Smallest `γ₂` for which the unimpaired protocol with `M` helpers beats
/// the conventional radar at percentile `p`, by bisection on common random
/// numbers. `None` for a single helper or if no `γ₂ ≤ 10⁴` qualifies.
pub fn gamma2_min(helpers: usize, p: f64, trials: usize, seed: u64, exec: Execution) -> Result<Option<f64>> {
    if helpers < 2 {
        return Ok(None);
    }
    bisect_log(1e-4, 1e4, 1e-3, true, |g| {
        let est = estimate_alpha_distribution(&Scenario::normalised(helpers, g), trials, seed, exec)?;
        Ok(beats_conventional(&est, p))
    })
}

#[derive(Clone, Debug)]
pub struct SlotBoundOptions {
    pub helpers: Vec<usize>,
    pub ppm: Vec<f64>,
    pub max_phase_drift: f64,
    pub percentile: f64,
    pub trials: usize,
    pub seed: u64,
    /// Also search the largest workable `T_s` by simulation.
    pub simulate: bool,
}

/// Slot-duration bounds against `M` and `p_e`. The noise bound uses `γ₂,min`
/// from simulation and the weakest helper at the farthest distance.
pub fn slot_bounds_table(cfg: &ExperimentConfig, opts: &SlotBoundOptions, exec: Execution) -> Result<CsvTable> {
    let (sys, tag) = (&cfg.system, &cfg.tag);
    let d = cfg.geometry.max_distance();
    let helper_power = 2.0 * sys.resistance_rx * received_power_conventional(d, sys, tag, cfg.run.tag_model)?;
    let mut t = CsvTable::new(
        "slot-bounds",
        &["M", "ppm", "gamma2_min_db", "ts_min_s", "ts_max_s", "feasible", "ts_max_sim_s"],
    );
    for &m in &opts.helpers {
        let g_min = gamma2_min(m, opts.percentile, opts.trials, opts.seed, exec)?;
        for &ppm in &opts.ppm {
            let Some(g_min) = g_min else {
                t.push(vec![m.into(), ppm.into(), f64::NAN.into(), f64::NAN.into(), f64::INFINITY.into(), true.into(), f64::NAN.into()]);
                continue;
            };
            let b = slot_bounds(&SlotBoundsInput {
                helpers: m,
                max_phase_drift: opts.max_phase_drift,
                max_frequency_error: 1e-6 * ppm * sys.omega0(),
                gamma2_min: g_min,
                noise_psd: noise_psd(sys),
                helper_power_min: helper_power,
            })?;
            let sim = if opts.simulate && ppm > 0.0 {
                max_slot_duration_sim(cfg, m, ppm, b.t_min, opts, exec)?
            } else {
                None
            };
            t.push(vec![
                m.into(),
                ppm.into(),
                linear_to_db(g_min).into(),
                b.t_min.into(),
                b.t_max.into(),
                b.feasible.into(),
                sim.unwrap_or(f64::NAN).into(),
            ]);
        }
    }
    Ok(t)
}

/// Largest `T_s` at which the impaired protocol (link-budget SNR, drift at
/// `ppm`) still beats the conventional radar, searched upward from four
/// times the noise bound.
fn max_slot_duration_sim(
    cfg: &ExperimentConfig,
    m: usize,
    ppm: f64,
    t_min: f64,
    opts: &SlotBoundOptions,
    exec: Execution,
) -> Result<Option<f64>> {
    let mut c = cfg.clone();
    c.frame.helpers = m;
    c.impairments.ppm_error = ppm;
    let holds = |ts: f64| -> Result<bool> {
        let mut c = c.clone();
        c.frame.slot_duration = ts;
        let est = estimate_alpha_distribution(&c.scenario(None)?, opts.trials, opts.seed, exec)?;
        Ok(beats_conventional(&est, opts.percentile))
    };
    bisect_log((4.0 * t_min).min(0.1), 0.5, 1e-3, false, holds)
}

/// Per-trial and summary tables of one Monte Carlo run.
pub struct MonteCarloOutput {
    pub trials: CsvTable,
    pub summary: CsvTable,
}

pub fn montecarlo(cfg: &ExperimentConfig, gamma2_override: Option<f64>, trace: bool, exec: Execution) -> Result<MonteCarloOutput> {
    let s = cfg.scenario(gamma2_override)?;
    let records = simulate(&s, cfg.run.trials, cfg.run.seed, exec)?;
    let m = s.helpers;
    let mut cols: Vec<String> = vec!["trial".into(), "alpha_M".into(), "zeta_pa".into()];
    if trace {
        cols.extend((1..m).map(|i| format!("alpha_{i}")));
        cols.extend((1..m).map(|i| format!("phi_err_{i}")));
        cols.extend((1..m).map(|i| format!("k_{i}")));
    }
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut trials = CsvTable::new("montecarlo", &col_refs);
    for (k, r) in records.iter().enumerate() {
        let mut row: Vec<Value> = vec![k.into(), r.alpha_final().into(), r.zeta().into()];
        if trace {
            row.extend(r.alphas[..m - 1].iter().map(|&a| Value::from(a)));
            row.extend(r.phase_errors.iter().map(|&a| Value::from(a)));
            row.extend(r.k_factors.iter().map(|&a| Value::from(a)));
        }
        trials.push(row);
    }
    let est = AlphaEstimate::from_records(m, &records)?;
    let refs = RefCdf::from_records(m, &records)?;
    let g = match &s.slot {
        SlotModel::Envelope { gamma2, .. } => *gamma2,
        SlotModel::Waveform { .. } => gamma2_override.map_or_else(|| cfg.gamma2(), Ok)?,
    };
    let mut summary = CsvTable::new(
        "montecarlo-summary",
        &["M", "gamma2_dB", "Ts_s", "ppm", "p10", "p50", "frac_exceeding_conventional"],
    );
    summary.push(vec![
        m.into(),
        linear_to_db(g).into(),
        cfg.frame.slot_duration.into(),
        cfg.impairments.ppm_error.into(),
        est.p10().into(),
        est.p50().into(),
        refs.fraction_exceeding_conventional().into(),
    ]);
    Ok(MonteCarloOutput { trials, summary })
}

/// Empirical CDF of `ζ_pa` for each `M`, with the coherent and conventional
/// markers.
pub fn ref_cdf_table(
    cfg: &ExperimentConfig,
    helpers: &[usize],
    points: usize,
    gamma2_override: Option<f64>,
    exec: Execution,
) -> Result<CsvTable> {
    let mut t = CsvTable::new(
        "ref-cdf",
        &["M", "zeta", "cdf", "zeta_coh", "zeta_conv", "frac_exceeding_conventional"],
    );
    for &m in helpers {
        let mut c = cfg.clone();
        c.frame.helpers = m;
        let records = simulate(&c.scenario(gamma2_override)?, c.run.trials, c.run.seed, exec)?;
        let r = RefCdf::from_records(m, &records)?;
        let frac = r.fraction_exceeding_conventional();
        for (z, f) in r.table(points) {
            t.push(vec![
                m.into(),
                z.into(),
                f.into(),
                ref_coherent(m).into(),
                ref_conventional(m).into(),
                frac.into(),
            ]);
        }
    }
    Ok(t)
}

/// Quadratic against exact tag percentiles across distances.
pub fn regime_sweep(
    cfg: &ExperimentConfig,
    distances: &[f64],
    gamma2_fixed: Option<f64>,
    exec: Execution,
) -> Result<CsvTable> {
    let sweep = RegimeSweep {
        helpers: cfg.frame.helpers,
        slot_duration: cfg.frame.slot_duration,
        trials: cfg.run.trials,
        seed: cfg.run.seed,
        samples: cfg.run.waveform_samples,
        snr: gamma2_fixed.map_or(SnrPolicy::Physical, SnrPolicy::Fixed),
        impairments: cfg.impairments.clone(),
    };
    let rows = tag_regime_sweep(distances, &cfg.system, &cfg.tag, &sweep, exec)?;
    let mut t = CsvTable::new(
        "regime-sweep",
        &[
            "distance_m",
            "amplitude_v",
            "gamma2_quadratic_db",
            "gamma2_exact_db",
            "quadratic_p10",
            "quadratic_p50",
            "exact_p10",
            "exact_p50",
            "delta_p10",
            "delta_p50",
        ],
    );
    for r in rows {
        t.push(vec![
            r.distance.into(),
            r.amplitude.into(),
            linear_to_db(r.gamma2_quadratic).into(),
            linear_to_db(r.gamma2_exact).into(),
            r.quadratic_p10.into(),
            r.quadratic_p50.into(),
            r.exact_p10.into(),
            r.exact_p50.into(),
            r.delta_p10().into(),
            r.delta_p50().into(),
        ]);
    }
    Ok(t)
}
