use hrsim_core::config::ExperimentConfig;
use proptest::prelude::*;

fn preset() -> ExperimentConfig {
    ExperimentConfig::preset("xband-sto2020").unwrap()
}

#[test]
fn file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let c = preset();
    for name in ["cfg.toml", "cfg.json"] {
        let p = dir.path().join(name);
        c.save(&p).unwrap();
        assert_eq!(ExperimentConfig::load(&p).unwrap(), c);
    }
}

#[test]
fn json_import_converts_to_toml() {
    let c = preset();
    let from_json = ExperimentConfig::from_json_str(&c.to_json().unwrap()).unwrap();
    assert_eq!(from_json.to_toml().unwrap(), c.to_toml().unwrap());
}

#[test]
fn errors_name_the_problem() {
    let toml = preset().to_toml().unwrap();
    let broken = toml.replace("ideality = 1.05", "ideality = 0.5");
    let err = ExperimentConfig::from_toml_str(&broken).unwrap_err().to_string();
    assert!(err.contains("ideality"), "{err}");
    let unknown = toml.replace("[run]", "[run]\nbogus = 1");
    let err = ExperimentConfig::from_toml_str(&unknown).unwrap_err().to_string();
    assert!(err.contains("bogus"), "{err}");
    let bad_ppm = toml.replace("ppm_error = 1.0", "ppm_error = -1.0");
    assert!(ExperimentConfig::from_toml_str(&bad_ppm).is_err());
    assert!(ExperimentConfig::load(std::path::Path::new("/nonexistent/cfg.toml")).is_err());
}

#[test]
fn helper_distances_are_bounded_by_helpers() {
    let mut c = preset();
    c.geometry.helper_distances = vec![10.0; 5];
    assert!(c.validate().is_err());
    c.geometry.helper_distances = vec![10.0, 12.0];
    c.validate().unwrap();
    let s = c.scenario(None).unwrap();
    assert!(s.amplitudes[0] > 1.0 && s.amplitudes[2] == 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn perturbed_configs_round_trip(
        d in 0.5f64..30.0,
        ts in 1e-9f64..1e-3,
        ppm in 0.0f64..10.0,
        m in 1usize..12,
        seed in any::<u64>(),
        nf in 0.5f64..10.0,
        is in 1e-7f64..1e-4,
    ) {
        let mut c = preset();
        c.geometry.rn_distance = d;
        c.frame.slot_duration = ts;
        c.frame.helpers = m;
        c.impairments.ppm_error = ppm;
        c.run.seed = seed;
        c.system.noise_figure = nf;
        c.tag = hrsim_core::tag::TagParams::new(
            is, c.tag.ideality, c.tag.thermal_voltage, c.tag.fundamental_resistance,
            c.tag.harmonic_resistance, 1.0, 1.0, c.tag.gain_fundamental, c.tag.gain_harmonic,
        ).unwrap();
        c.validate().unwrap();
        prop_assert_eq!(&ExperimentConfig::from_toml_str(&c.to_toml().unwrap()).unwrap(), &c);
        prop_assert_eq!(&ExperimentConfig::from_json_str(&c.to_json().unwrap()).unwrap(), &c);
    }
}
