use acqkd_core::harness::{
    csv_string, parse_config, run_scenario, ConfigError, Scenario, CSV_HEADER,
};
use proptest::prelude::*;

#[test]
fn every_scenario_name_round_trips() {
    for s in Scenario::ALL {
        assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        let cfg = parse_config(&format!("seed = 1\nscenario = {}", s.name())).unwrap();
        assert_eq!(cfg.scenario, s);
    }
}

#[test]
fn config_errors_carry_line_numbers() {
    assert!(matches!(
        parse_config("scenario = otp"),
        Err(ConfigError::MissingSeed)
    ));
    assert!(matches!(
        parse_config("seed = 1\n\nq_tol = 1.5"),
        Err(ConfigError::BadValue { line: 3, .. })
    ));
    assert!(matches!(
        parse_config("seed = 1\nseed = 2"),
        Err(ConfigError::BadValue { line: 2, .. })
    ));
    assert!(matches!(
        parse_config("seed = 1\ncolour = red"),
        Err(ConfigError::UnknownKey { line: 2, .. })
    ));
}

#[test]
fn scenario_csv_is_reproducible() {
    let cfg = "seed = 7\nscenario = metrics-suite\ntrials = 5";
    let a = csv_string(&run_scenario(&parse_config(cfg).unwrap()).unwrap()).unwrap();
    let b = csv_string(&run_scenario(&parse_config(cfg).unwrap()).unwrap()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.lines().next().unwrap(), CSV_HEADER.join(","));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn parsed_values_are_kept(seed in any::<u64>(), q in 0.0..=1.0f64, trials in 1usize..1000) {
        let cfg = parse_config(&format!("# comment\nseed = {seed}\nq_tol = {q}\ntrials = {trials}\n")).unwrap();
        prop_assert_eq!(cfg.seed, seed);
        prop_assert_eq!(cfg.q_tol, Some(q));
        prop_assert_eq!(cfg.trials, trials);
    }

    #[test]
    fn out_of_range_noise_is_rejected(q in 1.0001..10.0f64) {
        let bad = parse_config(&format!("seed = 1\nnoise = 0,{q}"));
        prop_assert!(matches!(bad, Err(ConfigError::BadValue { line: 2, .. })), "{bad:?}");
    }
}
