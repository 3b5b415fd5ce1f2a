//! Built-in scenario corpus.
//!
//! Each builtin is a [`ScenarioConfig`], so the same definitions are
//! written out as config files and exercised through the CLI.

use std::collections::BTreeMap;

use crate::barrier::{ClarkeOptions, SafetyScenario, Smoothness, Tolerances};
use crate::config::{
    BarrierConfig, BoxConfig, Compiled, ConfigError, Expected, HintConfig, ImageConfig,
    MarginConfig, ModulusConfig, Outcome, PerturbationConfig, PieceConfig, PolicyConfig, Scalar,
    ScenarioConfig, SetsConfig,
};
use crate::convexset::ConvexCompactSet;
use crate::error::{Error, Result};
use crate::flow::{Budget, Hint};
use crate::linalg::dist;
use crate::svmap::{PerturbMode, DEFAULT_DENSITY};

pub const BUILTIN_NAMES: &[&str] = &["example1", "example2", "noisy-loop", "linear-stable"];

/// A compiled scenario with its declared expectations.
#[derive(Clone, Debug)]
pub struct ScenarioBundle {
    pub name: String,
    pub config: ScenarioConfig,
    pub compiled: Compiled,
    pub expected: BTreeMap<String, Expected>,
    pub hints: Vec<Hint>,
    pub notes: Vec<String>,
}

impl ScenarioBundle {
    pub fn from_config(config: ScenarioConfig) -> std::result::Result<Self, ConfigError> {
        let compiled = config.compile()?;
        Ok(Self {
            name: config.name.clone(),
            expected: config.expect.clone(),
            hints: compiled.hints.clone(),
            notes: config.notes.clone(),
            compiled,
            config,
        })
    }

    pub fn scenario(&self) -> &SafetyScenario {
        &self.compiled.scenario
    }
}

pub fn builtin(name: &str) -> Result<ScenarioBundle> {
    let cfg = builtin_config(name)?;
    ScenarioBundle::from_config(cfg).map_err(|e| Error::InvalidArgument(e.to_string()))
}

pub fn builtin_config(name: &str) -> Result<ScenarioConfig> {
    match name {
        "example1" => Ok(example1()),
        "example2" => Ok(example2_with("0")),
        "noisy-loop" => Ok(noisy_loop(&["-x1"], 0.1, 0.1)),
        "linear-stable" => Ok(linear_stable()),
        other => Err(Error::UnknownScenario(other.to_string())),
    }
}

fn interval(lo: f64, hi: f64) -> ImageConfig {
    ImageConfig::Constant {
        set: ConvexCompactSet::interval(lo, hi).expect("ordered bounds"),
    }
}

fn point(components: &[&str]) -> ImageConfig {
    ImageConfig::Point {
        components: components.iter().map(|s| s.to_string()).collect(),
        radius: 0.0,
    }
}

fn expect(outcome: Outcome) -> Expected {
    Expected {
        outcome,
        value: None,
        tol: None,
    }
}

fn expect_value(outcome: Outcome, value: f64, tol: f64) -> Expected {
    Expected {
        outcome,
        value: Some(value),
        tol: Some(tol),
    }
}

fn base(name: &str, dim: usize, dynamics: Vec<PieceConfig>, barrier: BarrierConfig, sets: SetsConfig, lo: Vec<f64>, hi: Vec<f64>, grid: Vec<usize>) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        dim,
        dynamics,
        barrier,
        sets,
        region: BoxConfig { lo, hi },
        grid,
        tolerances: Tolerances::default(),
        collar_width: None,
        boundary_points: None,
        perturbation: PerturbationConfig::default(),
        clarke: ClarkeOptions::default(),
        margin: MarginConfig::default(),
        modulus: ModulusConfig::default(),
        falsify: Budget::default(),
        hints: Vec::new(),
        checks: Vec::new(),
        expect: BTreeMap::new(),
        notes: Vec::new(),
    }
}

fn c2_barrier(value: &str, gradient: &[&str]) -> BarrierConfig {
    BarrierConfig {
        value: value.into(),
        gradient: Some(gradient.iter().map(|s| s.to_string()).collect()),
        tag: Smoothness::C2,
        singular: None,
    }
}

fn sets(initial: &str, unsafe_set: &str) -> SetsConfig {
    SetsConfig {
        initial: initial.into(),
        unsafe_set: unsafe_set.into(),
    }
}

/// Discontinuous scalar field that is safe and robustly safe but not
/// strongly robustly safe.
pub fn example1() -> ScenarioConfig {
    let mut c = base(
        "example1",
        1,
        vec![
            PieceConfig { region: Some("x1 <= 0".into()), image: interval(2.0, 2.0) },
            PieceConfig { region: Some("x1 == 0".into()), image: interval(-1.0, 2.0) },
            PieceConfig { region: Some("x1 >= 0".into()), image: interval(-1.0, -1.0) },
        ],
        c2_barrier("x1*(x1+2)", &["2*x1+2"]),
        sets("-2 <= x1 <= 0", "x1 < -2 or x1 > 0"),
        vec![-3.0],
        vec![3.0],
        vec![1001],
    );
    c.perturbation.eps = Scalar::Value(0.5);
    c.hints.push(HintConfig {
        start: vec![Scalar::Value(0.0)],
        policy: PolicyConfig::Constant { velocity: vec![Scalar::Value(1.0)] },
    });
    c.expect = BTreeMap::from([
        ("nominal".into(), expect(Outcome::Pass)),
        ("robust-strict".into(), expect_value(Outcome::Fail, -4.0, 1e-6)),
        ("clarke".into(), expect(Outcome::Fail)),
        ("eqexp2".into(), expect(Outcome::Fail)),
        ("margin".into(), expect_value(Outcome::Fail, 0.0, 0.0)),
        ("falsify-none".into(), expect(Outcome::NotFalsified)),
        ("falsify-image".into(), expect(Outcome::NotFalsified)),
        ("falsify-strong".into(), expect(Outcome::Falsified)),
    ]);
    c.notes = vec![
        "X_u is the complement of X_o, so their closures meet at -2 and 0".into(),
        "no expectations rely on disjoint closures".into(),
    ];
    c
}

/// Planar system `x' = (F1(x), -1 + x1^2 x2)` with `B = x2`; `f1` is the
/// first component, which no check depends on.
pub fn example2_with(f1: &str) -> ScenarioConfig {
    let mut c = base(
        "example2",
        2,
        vec![PieceConfig { region: None, image: point(&[f1, "-1 + x1^2*x2"]) }],
        c2_barrier("x2", &["0", "1"]),
        sets("x2 <= 0", "x2 > 0"),
        vec![-10.0, -1.0],
        vec![10.0, 1.0],
        vec![41, 41],
    );
    // the collar must stay below x2 = 1/x1^2 on the box
    c.collar_width = Some(0.005);
    c.perturbation = PerturbationConfig {
        mode: PerturbMode::Strong,
        eps: Scalar::Value(0.04),
        sensing: None,
        density: DEFAULT_DENSITY,
    };
    c.hints.push(HintConfig {
        start: vec![Scalar::Expr("1/sqrt(eps)".into()), Scalar::Value(0.0)],
        policy: PolicyConfig::Shifted { mu: vec![0.0, 1.0] },
    });
    c.falsify = Budget {
        starts: 20,
        horizon: 0.5,
        step: 1e-3,
        ..Budget::default()
    };
    c.modulus.samples = Some(200);
    c.expect = BTreeMap::from([
        ("nominal".into(), expect(Outcome::Pass)),
        ("robust-strict".into(), expect(Outcome::Pass)),
        ("clarke".into(), expect(Outcome::Pass)),
        ("eqexp2".into(), expect_value(Outcome::Pass, 1.0, 1e-6)),
        ("falsify-strong".into(), expect(Outcome::Falsified)),
    ]);
    c.notes = vec![
        format!("first component F1 = {f1}"),
        "uniformly robustly safe but not uniformly strongly robustly safe on unbounded boxes".into(),
        "the closures of X_o and X_u meet along x2 = 0".into(),
    ];
    c
}

/// `x' = u`, `u = k(x)` read through a sensing error and applied with an
/// actuation error: `x' ∈ co k(x + s B) + a B`.
pub fn noisy_loop(feedback: &[&str], sensing: f64, actuation: f64) -> ScenarioConfig {
    let mut c = base(
        "noisy-loop",
        1,
        vec![PieceConfig { region: None, image: point(feedback) }],
        c2_barrier("x1^2 - 1", &["2*x1"]),
        sets("abs(x1) <= 1", "abs(x1) >= 2"),
        vec![-3.0],
        vec![3.0],
        vec![601],
    );
    c.perturbation = PerturbationConfig {
        mode: PerturbMode::Strong,
        eps: Scalar::Value(actuation),
        sensing: Some(Scalar::Value(sensing)),
        density: DEFAULT_DENSITY,
    };
    c.falsify = Budget {
        starts: 100,
        horizon: 3.0,
        ..Budget::default()
    };
    c.margin.delta_max = 1.0;
    c.expect = BTreeMap::from([
        ("nominal".into(), expect(Outcome::Pass)),
        ("robust-strict".into(), expect(Outcome::Pass)),
        ("clarke".into(), expect(Outcome::Pass)),
        ("eqexp2".into(), expect(Outcome::Pass)),
        ("margin".into(), expect_value(Outcome::Pass, 0.5, 0.01)),
        ("falsify-strong".into(), expect(Outcome::NotFalsified)),
    ]);
    c.notes = vec![format!(
        "sensing radius {sensing}, actuation radius {actuation}"
    )];
    c
}

/// `x' = -x`, `B = x - 1`.
pub fn linear_stable() -> ScenarioConfig {
    let mut c = base(
        "linear-stable",
        1,
        vec![PieceConfig { region: None, image: point(&["-x1"]) }],
        c2_barrier("x1 - 1", &["1"]),
        sets("0 <= x1 <= 1", "x1 >= 2"),
        vec![-3.0],
        vec![3.0],
        vec![401],
    );
    c.perturbation.eps = Scalar::Value(0.25);
    c.margin.delta_max = 1.0;
    c.falsify = Budget {
        starts: 50,
        horizon: 3.0,
        ..Budget::default()
    };
    c.expect = BTreeMap::from([
        ("nominal".into(), expect(Outcome::Pass)),
        ("robust-strict".into(), expect(Outcome::Pass)),
        ("clarke".into(), expect(Outcome::Pass)),
        ("eqexp2".into(), expect_value(Outcome::Pass, 1.0, 1e-6)),
        ("margin".into(), expect_value(Outcome::Pass, 0.5, 0.01)),
        ("falsify-none".into(), expect(Outcome::NotFalsified)),
    ]);
    c
}

/// Probe for `cl(X_o) ∩ cl(X_u) ≠ ∅`: grid nodes in both sets, or grid
/// edges joining the sets whose transition bisects down to a point.
pub fn closure_contact(s: &SafetyScenario) -> Option<Vec<f64>> {
    let n = s.dim();
    let lo = &s.region.lo;
    let step = s.region.spacing(&s.resolution);
    for x in s.grid() {
        let a = s.in_initial(&x);
        let u = s.in_unsafe(&x);
        if a && u {
            return Some(x);
        }
        if !(a || u) {
            continue;
        }
        for i in 0..n {
            let mut y = x.clone();
            y[i] += step[i];
            if y[i] > s.region.hi[i] + 1e-12 || y[i] < lo[i] {
                continue;
            }
            let (ya, yu) = (s.in_initial(&y), s.in_unsafe(&y));
            let (mut p, mut q) = if a && yu {
                (x.clone(), y)
            } else if u && ya {
                (y, x.clone())
            } else {
                continue;
            };
            // p in X_o, q in X_u
            let mut gap = false;
            for _ in 0..80 {
                let m: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 0.5 * (a + b)).collect();
                if s.in_initial(&m) {
                    p = m;
                } else if s.in_unsafe(&m) {
                    q = m;
                } else {
                    gap = true;
                    break;
                }
            }
            if !gap && dist(&p, &q) <= 1e-12 * (1.0 + crate::linalg::norm(&p)) {
                return Some(p);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_builtins_compile_and_pass_candidate_check() {
        for name in BUILTIN_NAMES {
            let b = builtin(name).unwrap();
            let r = crate::barrier::candidate_check(b.scenario()).unwrap();
            assert!(r.pass, "{name}: {r:?}");
        }
        assert!(matches!(builtin("nope"), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn closure_contacts() {
        let p = closure_contact(builtin("example1").unwrap().scenario()).unwrap();
        assert!((p[0] + 2.0).abs() < 1e-9 || p[0].abs() < 1e-9, "{p:?}");
        assert!(closure_contact(builtin("example2").unwrap().scenario()).is_some());
        assert!(closure_contact(builtin("noisy-loop").unwrap().scenario()).is_none());
        assert!(closure_contact(builtin("linear-stable").unwrap().scenario()).is_none());
    }

    #[test]
    fn example2_hint_start() {
        let b = builtin("example2").unwrap();
        let h = &b.hints[0];
        assert!((h.start[0] - 5.0).abs() < 1e-12);
        assert_eq!(h.start[1], 0.0);
        let alt = ScenarioBundle::from_config(example2_with("x1 - x2")).unwrap();
        assert_eq!(alt.compiled.system.base().image(&[1.0, 2.0]).unwrap().point_list()[0], vec![-1.0, 1.0]);
    }

    #[test]
    fn configs_round_trip() {
        for name in BUILTIN_NAMES {
            let c = builtin_config(name).unwrap();
            let back = ScenarioConfig::from_json(&c.to_json()).unwrap();
            assert_eq!(back, c);
            assert_eq!(back.hash(), c.hash());
        }
    }
}
