//! Scenario configuration files.
//!
//! A scenario is a JSON document. Loading collects every unknown key and
//! every semantic problem before reporting, so a broken file is fixed in
//! one pass. Expressions are strings over `x1..xn` (and `x` in 1-D).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::barrier::{BarrierCandidate, ClarkeOptions, SafetyScenario, Smoothness, Tolerances};
use crate::convexset::ConvexCompactSet;
use crate::expr::{Expr, Predicate, VarTable};
use crate::flow::{Budget, Hint, SelectionPolicy};
use crate::linalg::BoxRegion;
use crate::modulus::ModulusOptions;
use crate::svmap::{
    ImageSpec, Margin, MarginSearch, PerturbMode, PerturbedSystem, Piece, SetValuedMap,
    DEFAULT_DENSITY,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario:\n  - {}", .0.join("\n  - "))]
    Schema(Vec<String>),
}

/// A number or an expression string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Value(f64),
    Expr(String),
}

impl Scalar {
    fn compile(&self, vars: &VarTable) -> Result<Expr, String> {
        match self {
            Scalar::Value(v) => Ok(Expr::constant(*v)),
            Scalar::Expr(s) => Expr::parse(s, vars).map_err(|e| e.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ImageConfig {
    Constant { set: ConvexCompactSet },
    Affine {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        #[serde(default)]
        radius: f64,
    },
    Point {
        components: Vec<String>,
        #[serde(default)]
        radius: f64,
    },
    Hull {
        points: Vec<Vec<String>>,
        #[serde(default)]
        radius: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceConfig {
    /// Closed region predicate; omitted means everywhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    pub image: ImageConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierConfig {
    pub value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<Vec<String>>,
    pub tag: Smoothness,
    /// Predicate of the set where `B` is not differentiable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub singular: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetsConfig {
    pub initial: String,
    #[serde(rename = "unsafe")]
    pub unsafe_set: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbationConfig {
    pub mode: PerturbMode,
    /// Margin `ε(x)` (actuation radius in strong mode).
    pub eps: Scalar,
    /// Separate argument radius for strong mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sensing: Option<Scalar>,
    /// Lattice points per axis in the argument ball.
    pub density: usize,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            mode: PerturbMode::None,
            eps: Scalar::Value(0.1),
            sensing: None,
            density: DEFAULT_DENSITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarginConfig {
    pub delta_max: f64,
    pub rel_tol: f64,
    pub density: usize,
}

impl Default for MarginConfig {
    fn default() -> Self {
        let m = MarginSearch::default();
        Self {
            delta_max: m.delta_max,
            rel_tol: m.rel_tol,
            density: m.density,
        }
    }
}

/// Modulus construction settings; unset fields take dimension defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModulusConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_max: Option<f64>,
    /// Random `(x, δ)` pairs for the containment check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

impl ModulusConfig {
    pub const DEFAULT_SAMPLES: usize = 1000;

    pub fn options(&self, dim: usize, region: BoxRegion) -> ModulusOptions {
        let mut o = ModulusOptions::for_dim(dim).with_region(region);
        if let Some(v) = self.a_max {
            o.a_max = v;
        }
        if let Some(v) = self.a_step {
            o.a_step = v;
        }
        if let Some(v) = self.density {
            o.density = v;
        }
        if let Some(v) = self.delta_max {
            o.delta_max = v;
        }
        o
    }

    pub fn samples(&self) -> usize {
        self.samples.unwrap_or(Self::DEFAULT_SAMPLES)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolicyConfig {
    BAscent,
    RandomExtreme { seed: u64 },
    Constant { velocity: Vec<Scalar> },
    Custom { velocity: Vec<String> },
    Shifted { mu: Vec<f64> },
}

/// Declared witness; `start` and constant velocities may use `eps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HintConfig {
    pub start: Vec<Scalar>,
    pub policy: PolicyConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
    Falsified,
    NotFalsified,
    /// The check refuses to run (unsupported tag, violated precondition).
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expected {
    pub outcome: Outcome,
    /// Expected `σ` (checks) or `ε*` (margin).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

/// Check identifiers accepted in `checks` and by `--check`.
pub const CHECK_IDS: &[&str] = &[
    "nominal",
    "robust-strict",
    "clarke",
    "eqexp2",
    "uniform-c1",
    "uniform-c2",
    "uniform-c3",
    "uniform-c4",
];

/// Keys accepted in `expect` besides the check ids.
pub const OUTCOME_KEYS: &[&str] = &["margin", "falsify-none", "falsify-image", "falsify-strong"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub dim: usize,
    pub dynamics: Vec<PieceConfig>,
    pub barrier: BarrierConfig,
    pub sets: SetsConfig,
    #[serde(rename = "box")]
    pub region: BoxConfig,
    /// Grid nodes per axis.
    pub grid: Vec<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collar_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_points: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub perturbation: PerturbationConfig,
    #[serde(default)]
    pub clarke: ClarkeOptions,
    #[serde(default)]
    pub margin: MarginConfig,
    #[serde(default)]
    pub modulus: ModulusConfig,
    #[serde(default)]
    pub falsify: Budget,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hints: Vec<HintConfig>,
    /// Checks run by `verify`; empty means every check the tag supports,
    /// without the weighted ones.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub expect: BTreeMap<String, Expected>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Runtime objects built from a validated configuration.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub scenario: SafetyScenario,
    pub system: PerturbedSystem,
    pub hints: Vec<Hint>,
    pub margin: MarginSearch,
    pub modulus: ModulusOptions,
}

fn parse_json(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut unknown = Vec::new();
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ScenarioConfig = serde_ignored::deserialize(de, |path| {
        unknown.push(format!("unknown key '{path}'"))
    })
    .map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut problems = unknown;
    problems.extend(cfg.problems());
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Schema(problems))
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        parse_json(text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        parse_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// SHA-256 of the compact re-serialization.
    pub fn hash(&self) -> String {
        let s = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(s.as_bytes()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Schema(p))
        }
    }

    /// Constant value of the perturbation margin (expressions evaluated at
    /// the box center).
    pub fn eps_value(&self) -> f64 {
        let c: Vec<f64> = self
            .region
            .lo
            .iter()
            .zip(&self.region.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        match self.perturbation.eps.compile(&VarTable::state(self.dim)) {
            Ok(e) => e.eval(&c),
            Err(_) => f64::NAN,
        }
    }

    /// Every problem with the file, in a stable order.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.dim;
        if n == 0 {
            out.push("dim must be >= 1".into());
            return out;
        }
        let vars = VarTable::state(n);
        let expr = |what: String, src: &str, out: &mut Vec<String>| {
            if let Err(e) = Expr::parse(src, &vars) {
                out.push(format!("{what}: {e}"));
            }
        };
        if self.dynamics.is_empty() {
            out.push("dynamics: at least one piece is required".into());
        }
        for (i, p) in self.dynamics.iter().enumerate() {
            if let Some(r) = &p.region {
                if let Err(e) = Predicate::parse(r, &vars) {
                    out.push(format!("dynamics[{i}].region: {e}"));
                }
            }
            let radius = match &p.image {
                ImageConfig::Constant { set } => {
                    if set.dim() != n {
                        out.push(format!("dynamics[{i}].image.set: dimension {} != {n}", set.dim()));
                    }
                    0.0
                }
                ImageConfig::Affine { a, b, radius } => {
                    if a.len() != n || b.len() != n || a.iter().any(|r| r.len() != n) {
                        out.push(format!("dynamics[{i}].image: affine map must be {n}x{n} with {n} offsets"));
                    }
                    *radius
                }
                ImageConfig::Point { components, radius } => {
                    if components.len() != n {
                        out.push(format!("dynamics[{i}].image.components: expected {n}, found {}", components.len()));
                    }
                    for (j, c) in components.iter().enumerate() {
                        expr(format!("dynamics[{i}].image.components[{j}]"), c, &mut out);
                    }
                    *radius
                }
                ImageConfig::Hull { points, radius } => {
                    if points.is_empty() {
                        out.push(format!("dynamics[{i}].image.points: empty"));
                    }
                    for (k, pt) in points.iter().enumerate() {
                        if pt.len() != n {
                            out.push(format!("dynamics[{i}].image.points[{k}]: expected {n} components"));
                        }
                        for (j, c) in pt.iter().enumerate() {
                            expr(format!("dynamics[{i}].image.points[{k}][{j}]"), c, &mut out);
                        }
                    }
                    *radius
                }
            };
            if !(radius >= 0.0) {
                out.push(format!("dynamics[{i}].image.radius must be >= 0"));
            }
        }

        expr("barrier.value".into(), &self.barrier.value, &mut out);
        if let Some(g) = &self.barrier.gradient {
            if g.len() != n {
                out.push(format!("barrier.gradient: expected {n} components, found {}", g.len()));
            }
            for (j, c) in g.iter().enumerate() {
                expr(format!("barrier.gradient[{j}]"), c, &mut out);
            }
        }
        if let Some(sg) = &self.barrier.singular {
            if let Err(e) = Predicate::parse(sg, &vars) {
                out.push(format!("barrier.singular: {e}"));
            }
            if self.barrier.tag.at_least_c1() {
                out.push("barrier.singular: c1/c2 barriers have no singular set".into());
            }
        }
        for (what, src) in [("sets.initial", &self.sets.initial), ("sets.unsafe", &self.sets.unsafe_set)] {
            if let Err(e) = Predicate::parse(src, &vars) {
                out.push(format!("{what}: {e}"));
            }
        }

        if self.region.lo.len() != n || self.region.hi.len() != n {
            out.push(format!("box: lo and hi need {n} components"));
        } else if self.region.lo.iter().zip(&self.region.hi).any(|(a, b)| !(a < b)) {
            out.push("box: need lo < hi on every axis".into());
        }
        if self.grid.len() != n {
            out.push(format!("grid: expected {n} entries, found {}", self.grid.len()));
        }
        if self.grid.iter().any(|g| *g < 2) {
            out.push("grid: at least 2 nodes per axis".into());
        }
        let t = &self.tolerances;
        for (what, v) in [
            ("strict", t.strict),
            ("nominal", t.nominal),
            ("boundary", t.boundary),
            ("gradient", t.gradient),
        ] {
            if !(v >= 0.0) {
                out.push(format!("tolerances.{what} must be >= 0"));
            }
        }
        if let Some(w) = self.collar_width {
            if !(w > 0.0) {
                out.push("collar_width must be > 0".into());
            }
        }
        if let Some(pts) = &self.boundary_points {
            if pts.iter().any(|p| p.len() != n) {
                out.push(format!("boundary_points: every point needs {n} components"));
            }
        }

        let pert = &self.perturbation;
        match pert.eps.compile(&vars) {
            Err(e) => out.push(format!("perturbation.eps: {e}")),
            Ok(_) => {
                if pert.mode != PerturbMode::None && !(self.eps_value() > 0.0) {
                    out.push("perturbation.eps must be > 0 when mode is not none".into());
                }
            }
        }
        if let Some(s) = &pert.sensing {
            if let Err(e) = s.compile(&vars) {
                out.push(format!("perturbation.sensing: {e}"));
            }
        }
        if pert.density < 2 {
            out.push("perturbation.density must be >= 2".into());
        }
        if let Some(r) = self.clarke.rho {
            if !(r > 0.0) {
                out.push("clarke.rho must be > 0".into());
            }
        }
        if self.clarke.samples == 0 {
            out.push("clarke.samples must be >= 1".into());
        }
        let m = &self.margin;
        if !(m.delta_max > 0.0) || !(m.rel_tol > 0.0 && m.rel_tol < 1.0) || m.density < 2 {
            out.push("margin: need delta_max > 0, 0 < rel_tol < 1, density >= 2".into());
        }
        let mo = &self.modulus;
        if mo.a_max.is_some_and(|v| !(v > 0.0))
            || mo.a_step.is_some_and(|v| !(v > 0.0))
            || mo.delta_max.is_some_and(|v| !(v > 0.0))
            || mo.density.is_some_and(|v| v < 2)
        {
            out.push("modulus: a_max, a_step, delta_max must be > 0 and density >= 2".into());
        }
        let b = &self.falsify;
        if !(b.step > 0.0) || !(b.horizon >= 0.0) {
            out.push("falsify: need step > 0 and horizon >= 0".into());
        }

        let params = VarTable::with_params(0, &["eps"]);
        for (i, h) in self.hints.iter().enumerate() {
            if h.start.len() != n {
                out.push(format!("hints[{i}].start: expected {n} components"));
            }
            for (j, c) in h.start.iter().enumerate() {
                if let Err(e) = c.compile(&params) {
                    out.push(format!("hints[{i}].start[{j}]: {e}"));
                }
            }
            match &h.policy {
                PolicyConfig::Constant { velocity } => {
                    if velocity.len() != n {
                        out.push(format!("hints[{i}].policy.velocity: expected {n} components"));
                    }
                    for (j, c) in velocity.iter().enumerate() {
                        if let Err(e) = c.compile(&params) {
                            out.push(format!("hints[{i}].policy.velocity[{j}]: {e}"));
                        }
                    }
                }
                PolicyConfig::Custom { velocity } => {
                    if velocity.len() != n {
                        out.push(format!("hints[{i}].policy.velocity: expected {n} components"));
                    }
                    for (j, c) in velocity.iter().enumerate() {
                        expr(format!("hints[{i}].policy.velocity[{j}]"), c, &mut out);
                    }
                }
                PolicyConfig::Shifted { mu } => {
                    if mu.len() != n {
                        out.push(format!("hints[{i}].policy.mu: expected {n} components"));
                    } else if crate::linalg::norm(mu) > 1.0 + 1e-12 {
                        out.push(format!("hints[{i}].policy.mu: must lie in the unit ball"));
                    }
                }
                PolicyConfig::BAscent | PolicyConfig::RandomExtreme { .. } => {}
            }
        }
        for c in &self.checks {
            if !CHECK_IDS.contains(&c.as_str()) {
                out.push(format!("checks: unknown check '{c}' (known: {})", CHECK_IDS.join(", ")));
            }
        }
        for k in self.expect.keys() {
            if !CHECK_IDS.contains(&k.as_str()) && !OUTCOME_KEYS.contains(&k.as_str()) {
                out.push(format!("expect: unknown key '{k}'"));
            }
        }
        out
    }

    /// Checks run by `verify` when none are requested explicitly.
    pub fn default_checks(&self) -> Vec<String> {
        if !self.checks.is_empty() {
            return self.checks.clone();
        }
        let tag = self.barrier.tag;
        let mut c = Vec::new();
        if tag.at_least_c1() {
            c.extend(["nominal", "robust-strict"]);
        }
        if tag.at_least_lipschitz() {
            c.push("clarke");
        }
        if tag.at_least_c1() {
            c.push("eqexp2");
        }
        c.into_iter().map(String::from).collect()
    }

    pub fn map(&self) -> Result<SetValuedMap, ConfigError> {
        let vars = VarTable::state(self.dim);
        let e = |s: &str| Expr::parse(s, &vars).map_err(|e| ConfigError::Schema(vec![e.to_string()]));
        let mut pieces = Vec::new();
        for p in &self.dynamics {
            let image = match &p.image {
                ImageConfig::Constant { set } => ImageSpec::Constant(set.clone()),
                ImageConfig::Affine { a, b, radius } => ImageSpec::Affine {
                    a: a.clone(),
                    b: b.clone(),
                    radius: *radius,
                },
                ImageConfig::Point { components, radius } => ImageSpec::Point {
                    components: components.iter().map(|c| e(c)).collect::<Result<_, _>>()?,
                    radius: *radius,
                },
                ImageConfig::Hull { points, radius } => ImageSpec::Hull {
                    points: points
                        .iter()
                        .map(|pt| pt.iter().map(|c| e(c)).collect::<Result<Vec<_>, _>>())
                        .collect::<Result<_, _>>()?,
                    radius: *radius,
                },
            };
            let piece = match &p.region {
                Some(r) => Piece::new(
                    Predicate::parse(r, &vars).map_err(|e| ConfigError::Schema(vec![e.to_string()]))?,
                    image,
                ),
                None => Piece::everywhere(image),
            };
            pieces.push(piece);
        }
        SetValuedMap::new(self.dim, pieces).map_err(|e| ConfigError::Schema(vec![e.to_string()]))
    }

    /// Build the runtime objects. Validates first.
    pub fn compile(&self) -> Result<Compiled, ConfigError> {
        self.validate()?;
        let schema = |e: crate::Error| ConfigError::Schema(vec![e.to_string()]);
        let vars = VarTable::state(self.dim);
        let parse = |s: &str| Expr::parse(s, &vars).expect("validated");
        let pred = |s: &str| Predicate::parse(s, &vars).expect("validated");
        let map = self.map()?;
        let barrier = BarrierCandidate::new(
            self.dim,
            parse(&self.barrier.value),
            self.barrier
                .gradient
                .as_ref()
                .map(|g| g.iter().map(|c| parse(c)).collect()),
            self.barrier.singular.as_deref().map(pred),
            self.barrier.tag,
        )
        .map_err(schema)?;
        let region = BoxRegion::new(self.region.lo.clone(), self.region.hi.clone()).map_err(schema)?;
        let mut scenario = SafetyScenario::new(
            map.clone(),
            barrier,
            pred(&self.sets.initial),
            pred(&self.sets.unsafe_set),
            region.clone(),
            self.grid.clone(),
        )
        .map_err(schema)?;
        scenario.tol = self.tolerances.clone();
        scenario.collar_width = self.collar_width;
        scenario.boundary_points = self.boundary_points.clone();

        let pert = &self.perturbation;
        let margin = match &pert.eps {
            Scalar::Value(v) => Margin::Constant(*v),
            Scalar::Expr(s) => Margin::Field(parse(s)),
        };
        let mut system = PerturbedSystem::new(map, margin, pert.mode)
            .with_density(pert.density)
            .map_err(schema)?;
        if let Some(s) = &pert.sensing {
            system = system.with_sensing(match s {
                Scalar::Value(v) => Margin::Constant(*v),
                Scalar::Expr(e) => Margin::Field(parse(e)),
            });
        }

        let eps = self.eps_value();
        let params = VarTable::with_params(0, &["eps"]);
        let at_eps = |c: &Scalar| c.compile(&params).expect("validated").eval(&[eps]);
        let hints = self
            .hints
            .iter()
            .map(|h| Hint {
                start: h.start.iter().map(at_eps).collect(),
                policy: match &h.policy {
                    PolicyConfig::BAscent => SelectionPolicy::BAscent,
                    PolicyConfig::RandomExtreme { seed } => SelectionPolicy::RandomExtreme { seed: *seed },
                    PolicyConfig::Constant { velocity } => {
                        SelectionPolicy::Constant(velocity.iter().map(at_eps).collect())
                    }
                    PolicyConfig::Custom { velocity } => {
                        SelectionPolicy::Custom(velocity.iter().map(|c| parse(c)).collect())
                    }
                    PolicyConfig::Shifted { mu } => SelectionPolicy::Shifted { mu: mu.clone() },
                },
            })
            .collect();
        let margin = MarginSearch {
            delta_max: self.margin.delta_max,
            rel_tol: self.margin.rel_tol,
            density: self.margin.density,
            ..MarginSearch::default()
        };
        Ok(Compiled {
            scenario,
            system,
            hints,
            margin,
            modulus: self.modulus.options(self.dim, region),
        })
    }
}

