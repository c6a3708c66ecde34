use bsgni_cli::config::{
    apply_overrides, exact_from_raw, parse_norm, parse_number, ConfigError, ExperimentConfig, Mode, RawConfig,
    StepSpec, PRESETS,
};

fn preset(name: &str) -> RawConfig {
    RawConfig::preset(name).unwrap()
}

#[test]
fn table_presets_validate() {
    for (name, _) in PRESETS {
        let raw = preset(name);
        if raw.get("mode").is_some() {
            let cfg = ExperimentConfig::from_raw(raw).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(cfg.label, *name);
        }
    }
}

#[test]
fn data_presets_name_exact_solutions() {
    for name in ["bs-solitary", "bbm-traveling", "bneqd-solitary"] {
        exact_from_raw(&preset(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn table_modes_and_settings() {
    let t1 = ExperimentConfig::from_raw(preset("table1")).unwrap();
    assert_eq!(t1.mode, Mode::Time);
    assert_eq!(t1.ns, vec![512]);
    assert_eq!(t1.step, StepSpec::Absolute(vec![0.125, 0.0625, 0.03125]));
    assert_eq!(t1.schemes.len(), 2);
    assert!((t1.params.theta2.unwrap() - 9.0 / 11.0).abs() < 1e-15);

    let t6 = ExperimentConfig::from_raw(preset("table6")).unwrap();
    assert_eq!(t6.mode, Mode::Space);
    assert_eq!(t6.norms.len(), 2);
    assert_eq!(t6.ns, vec![16, 32, 64, 128, 256, 512, 1024]);

    let t5bs = ExperimentConfig::from_raw(preset("table5-bs")).unwrap();
    assert_eq!(t5bs.norms[0].label(), "H1xL2");
    assert!((t5bs.params.theta2.unwrap() - 9.0 / 11.0).abs() < 1e-15);

    let t4 = ExperimentConfig::from_raw(preset("table4")).unwrap();
    assert_eq!(t4.step, StepSpec::Absolute(vec![6.25e-4]));
    assert!(t4.snapshots.is_empty());
}

#[test]
fn fractions_and_numbers() {
    assert_eq!(parse_number("9/11").unwrap(), 9.0 / 11.0);
    assert_eq!(parse_number(" -0.25 ").unwrap(), -0.25);
    assert!(parse_number("1/0").is_err());
    assert!(parse_number("abc").is_err());
    assert!(parse_number("inf").is_err());
}

#[test]
fn norm_labels_round_trip() {
    for label in ["L2xL2", "H1xL2", "H2xH1", "H2xH2"] {
        assert_eq!(parse_norm(label).unwrap().label(), label);
    }
    assert!(parse_norm("H3xL2").is_err());
    assert!(parse_norm("H1").is_err());
}

#[test]
fn includes_are_overridden_by_local_keys() {
    let raw = RawConfig::parse("include-preset = bs-solitary\nx0 = 3 # shifted\n", "inline").unwrap();
    assert_eq!(raw.get("x0"), Some("3"));
    assert_eq!(raw.get("theta2"), Some("9/11"));
}

#[test]
fn syntax_errors_are_located() {
    match RawConfig::parse("left = -1\nnonsense\n", "f.cfg") {
        Err(ConfigError::Syntax { line, source_name, .. }) => {
            assert_eq!(line, 2);
            assert_eq!(source_name, "f.cfg");
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        RawConfig::parse("colour = red", "f"),
        Err(ConfigError::Syntax { .. })
    ));
    assert!(matches!(
        RawConfig::parse("n = 1\nn = 2", "f"),
        Err(ConfigError::Syntax { .. })
    ));
    assert!(matches!(
        RawConfig::parse("include-preset = nope", "f"),
        Err(ConfigError::UnknownPreset(_))
    ));
}

#[test]
fn overrides_apply_and_validate() {
    let mut raw = preset("table1");
    apply_overrides(&mut raw, &["n=128".to_string(), "k = 0.5, 0.25".to_string()]).unwrap();
    let cfg = ExperimentConfig::from_raw(raw.clone()).unwrap();
    assert_eq!(cfg.ns, vec![128]);
    assert_eq!(cfg.step, StepSpec::Absolute(vec![0.5, 0.25]));
    assert!(apply_overrides(&mut raw, &["colour=red".to_string()]).is_err());
    assert!(apply_overrides(&mut raw, &["n".to_string()]).is_err());
}

fn invalid(overrides: &[&str]) -> ConfigError {
    let mut raw = preset("table1");
    let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    apply_overrides(&mut raw, &overrides).unwrap();
    ExperimentConfig::from_raw(raw).unwrap_err()
}

fn key_of(e: ConfigError) -> String {
    match e {
        ConfigError::Field { key, .. } => key,
        other => panic!("{other:?}"),
    }
}

#[test]
fn invalid_fields_are_rejected() {
    assert_eq!(key_of(invalid(&["right=-40"])), "right");
    assert_eq!(key_of(invalid(&["mu=1"])), "mu");
    assert_eq!(key_of(invalid(&["n=1"])), "n");
    assert_eq!(key_of(invalid(&["n=12.5"])), "n");
    assert_eq!(key_of(invalid(&["k=-0.1, 0.05"])), "k");
    assert_eq!(key_of(invalid(&["k-mesh=0.1"])), "k");
    assert_eq!(key_of(invalid(&["gamma=0.3"])), "gamma");
    assert_eq!(key_of(invalid(&["t-end=0"])), "t-end");
    assert_eq!(key_of(invalid(&["theta2=0.5"])), "theta2");
    assert_eq!(key_of(invalid(&["snapshots=3"])), "snapshots");
    assert_eq!(key_of(invalid(&["norm=H3xL2"])), "norm");
    assert_eq!(key_of(invalid(&["label=a/b"])), "label");
    assert_eq!(key_of(invalid(&["mode=fast"])), "mode");
    assert_eq!(key_of(invalid(&["solution=none"])), "initial");
    assert_eq!(key_of(invalid(&["solution=bneqd-solitary", "eta0=1"])), "system");
    assert_eq!(key_of(invalid(&["k=0.1"])), "k");
}

#[test]
fn space_mode_needs_a_doubling_chain() {
    assert_eq!(key_of(invalid(&["mode=space", "n=64", "k=0.1"])), "n");
    assert_eq!(key_of(invalid(&["mode=space", "n=64,128,192", "k=0.1"])), "n");
    assert_eq!(key_of(invalid(&["mode=space", "n=64,128,256"])), "k");
    assert_eq!(key_of(invalid(&["mode=space", "n=64,128,256", "k=0.1"])), "gamma");
}
