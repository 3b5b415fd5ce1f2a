use incsafe::barrier::boundary_extract;
use incsafe::checker::{check_nominal, Verdict};
use incsafe::cli::{execute, Pipeline, RunFlags};
use incsafe::config::Outcome;
use incsafe::flow::falsify;
use incsafe::scenarios::{builtin, builtin_config, BUILTIN_NAMES};
use incsafe::svmap::PerturbedSystem;

#[test]
fn every_builtin_meets_its_expectations() {
    for name in BUILTIN_NAMES {
        let cfg = builtin_config(name).unwrap();
        let (b, _) = execute(&cfg, Pipeline::All, &RunFlags::default()).unwrap();
        assert!(b.errors.is_empty(), "{name}: {:?}", b.errors);
        assert!(!b.expectations.is_empty(), "{name}");
        for e in &b.expectations {
            assert!(e.met, "{name}: {} expected {:?}, observed {:?} {:?}", e.key, e.expected, e.observed, e.observed_value);
        }
        let falsified = b.falsify.iter().any(|f| f.falsified);
        let expected_code = i32::from(falsified);
        assert_eq!(b.exit_code, expected_code, "{name}");
        for f in &b.falsify {
            let key = format!("falsify-{}", serde_json::to_value(f.mode).unwrap().as_str().unwrap());
            if let Some(e) = cfg.expect.get(&key) {
                assert_eq!(f.falsified, e.outcome == Outcome::Falsified, "{name} {key}");
            }
        }
    }
}

// a passing nominal check and an escaping nominal solution cannot coexist
#[test]
fn nominal_checker_and_falsifier_agree() {
    for name in BUILTIN_NAMES {
        let b = builtin(name).unwrap();
        let s = b.scenario();
        let g = boundary_extract(s).unwrap();
        let report = check_nominal(s, &g).unwrap();
        if report.verdict != Verdict::Pass {
            continue;
        }
        let nominal = PerturbedSystem::nominal(s.map.clone());
        let out = falsify(&nominal, s, &b.config.falsify, &[]).unwrap();
        assert!(!out.falsified, "{name}: nominal pass but witness {:?}", out.witness.map(|w| w.start));
    }
}
