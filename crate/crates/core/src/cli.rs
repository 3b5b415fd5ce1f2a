//! Command-line front end: loads a scenario, runs a pipeline, writes the
//! report bundle and witness trajectories.
//!
//! Precedence of settings: flags, then the config file, then defaults.
//! Exit codes: 0 when every executed check passed or matched its declared
//! outcome and nothing was falsified, 1 on a failure or falsification, 2
//! on configuration errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::barrier::{boundary_extract, candidate_check, BoundaryGrid};
use crate::checker::{
    check_clarke, check_nominal, check_robust_strict, check_strong_at, check_uniform_unweighted,
    check_uniform_weighted, synthesize_margin, CheckReport, Verdict, WeightedVariant,
};
use crate::config::{Compiled, ConfigError, Outcome, ScenarioConfig, CHECK_IDS};
use crate::flow::falsify;
use crate::modulus::{build_modulus, random_pairs, verify_modulus, Modulus, ModulusPair};
use crate::report::{
    BoundarySummary, CheckError, ExpectationResult, FalsifyRecord, ModulusSummary, ReportBundle,
};
use crate::scenarios::{builtin_config, closure_contact, BUILTIN_NAMES};
use crate::svmap::PerturbMode;

/// Prefix selecting a builtin scenario instead of a file.
pub const BUILTIN_PREFIX: &str = "builtin:";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid flag: {0}")]
    Flag(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pipeline {
    Verify,
    Falsify,
    Margin,
    Modulus,
    All,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Verify => "verify",
            Pipeline::Falsify => "falsify",
            Pipeline::Margin => "margin",
            Pipeline::Modulus => "modulus",
            Pipeline::All => "all",
        }
    }

    fn runs(self, step: Pipeline) -> bool {
        self == step || self == Pipeline::All
    }
}

fn parse_mode(s: &str) -> Result<PerturbMode, String> {
    match s {
        "none" => Ok(PerturbMode::None),
        "image" => Ok(PerturbMode::Image),
        "strong" => Ok(PerturbMode::Strong),
        _ => Err(format!("expected none, image or strong, got '{s}'")),
    }
}

fn mode_name(m: PerturbMode) -> &'static str {
    match m {
        PerturbMode::None => "none",
        PerturbMode::Image => "image",
        PerturbMode::Strong => "strong",
    }
}

#[derive(Args, Clone, Debug, Default)]
pub struct RunFlags {
    /// Run only this check (repeatable).
    #[arg(long = "check", value_name = "ID")]
    pub checks: Vec<String>,
    /// Perturbation mode: none, image or strong.
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<PerturbMode>,
    /// Constant perturbation margin.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Seed for falsification, Clarke sampling and modulus samples.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scale the search box about its center, keeping the grid spacing.
    #[arg(long = "box-scale")]
    pub box_scale: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Argument-ball lattice points per axis.
    #[arg(long)]
    pub density: Option<usize>,
}

#[derive(Args, Clone, Debug)]
pub struct RunArgs {
    /// Scenario file, or builtin:<name>.
    pub config: String,
    #[command(flatten)]
    pub flags: RunFlags,
}

#[derive(Subcommand, Clone, Debug)]
pub enum Command {
    /// Barrier checks on the boundary grid.
    Verify(RunArgs),
    /// Search for escaping solutions.
    Falsify(RunArgs),
    /// Per-cell strong margins and the uniform margin.
    Margin(RunArgs),
    /// Build and verify the continuity modulus.
    Modulus(RunArgs),
    /// Everything above.
    All(RunArgs),
    /// Write the builtin scenarios as config files.
    Export {
        #[arg(long, default_value = "scenarios")]
        out: PathBuf,
    },
}

#[derive(Parser, Debug)]
#[command(name = "incsafe", version, about = "Barrier certificates and falsification for differential inclusions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

pub fn load_config(arg: &str) -> Result<ScenarioConfig, ConfigError> {
    if let Some(name) = arg.strip_prefix(BUILTIN_PREFIX) {
        return builtin_config(name).map_err(|_| {
            ConfigError::Schema(vec![format!(
                "unknown builtin '{name}' (known: {})",
                BUILTIN_NAMES.join(", ")
            )])
        });
    }
    ScenarioConfig::load(Path::new(arg))
}

/// Apply flags to the config; returns the overrides as text.
pub fn apply_flags(
    cfg: &mut ScenarioConfig,
    flags: &RunFlags,
) -> Result<BTreeMap<String, String>, CliError> {
    let mut o = BTreeMap::new();
    for c in &flags.checks {
        if !CHECK_IDS.contains(&c.as_str()) {
            return Err(CliError::Flag(format!(
                "unknown check '{c}' (known: {})",
                CHECK_IDS.join(", ")
            )));
        }
    }
    if !flags.checks.is_empty() {
        cfg.checks = flags.checks.clone();
        o.insert("check".into(), flags.checks.join(","));
    }
    if let Some(m) = flags.mode {
        cfg.perturbation.mode = m;
        o.insert("mode".into(), mode_name(m).into());
    }
    if let Some(e) = flags.eps {
        if !(e > 0.0) {
            return Err(CliError::Flag(format!("--eps must be > 0, got {e}")));
        }
        cfg.perturbation.eps = crate::config::Scalar::Value(e);
        o.insert("eps".into(), format!("{e}"));
    }
    if let Some(s) = flags.seed {
        cfg.falsify.seed = s;
        cfg.clarke.seed = s;
        o.insert("seed".into(), s.to_string());
    }
    if let Some(k) = flags.box_scale {
        if !(k > 0.0) {
            return Err(CliError::Flag(format!("--box-scale must be > 0, got {k}")));
        }
        let r = &mut cfg.region;
        for i in 0..r.lo.len().min(r.hi.len()) {
            let c = 0.5 * (r.lo[i] + r.hi[i]);
            let h = 0.5 * (r.hi[i] - r.lo[i]) * k;
            r.lo[i] = c - h;
            r.hi[i] = c + h;
        }
        for g in cfg.grid.iter_mut() {
            *g = ((((*g).max(2) - 1) as f64 * k).round() as usize).max(1) + 1;
        }
        o.insert("box-scale".into(), format!("{k}"));
    }
    if let Some(m) = flags.density {
        if m < 2 {
            return Err(CliError::Flag(format!("--density must be >= 2, got {m}")));
        }
        cfg.perturbation.density = m;
        cfg.margin.density = m;
        o.insert("density".into(), m.to_string());
    }
    cfg.validate()?;
    Ok(o)
}

fn verdict_outcome(v: Verdict) -> Outcome {
    match v {
        Verdict::Pass => Outcome::Pass,
        Verdict::Fail => Outcome::Fail,
        Verdict::Inconclusive => Outcome::Inconclusive,
    }
}

struct Run<'a> {
    cfg: &'a ScenarioConfig,
    c: &'a Compiled,
    bundle: ReportBundle,
    observed: BTreeMap<String, (Outcome, Option<f64>)>,
    modulus: Option<ModulusPair>,
    files: Vec<(String, String)>,
}

impl<'a> Run<'a> {
    fn error(&mut self, id: &str, e: impl ToString) {
        self.bundle.errors.push(CheckError {
            id: id.into(),
            message: e.to_string(),
        });
        self.observed.insert(id.into(), (Outcome::Error, None));
    }

    fn modulus(&mut self) -> crate::Result<&ModulusPair> {
        if self.modulus.is_none() {
            self.modulus = Some(build_modulus(&self.c.scenario.map, &self.c.modulus)?);
        }
        Ok(self.modulus.as_ref().unwrap())
    }

    fn one_check(&mut self, id: &str, g: &BoundaryGrid) -> crate::Result<CheckReport> {
        let s = &self.c.scenario;
        let clarke = &self.cfg.clarke;
        let variant = match id {
            "nominal" => return check_nominal(s, g),
            "robust-strict" => return check_robust_strict(s, g),
            "clarke" => return check_clarke(s, g, clarke),
            "eqexp2" => return check_uniform_unweighted(s, g),
            "uniform-c1" => WeightedVariant::C1,
            "uniform-c2" => WeightedVariant::C2,
            "uniform-c3" => WeightedVariant::C3,
            "uniform-c4" => WeightedVariant::C4,
            other => return Err(crate::Error::InvalidArgument(format!("unknown check '{other}'"))),
        };
        let m = self.modulus()?.clone();
        check_uniform_weighted(&self.c.scenario, g, &m, variant, clarke)
    }

    fn verify(&mut self, g: &BoundaryGrid) {
        for id in self.cfg.default_checks() {
            match self.one_check(&id, g) {
                Ok(r) => {
                    self.observed
                        .insert(id.clone(), (verdict_outcome(r.verdict), Some(r.sigma)));
                    self.bundle.checks.push(r);
                }
                Err(e) => self.error(&id, e),
            }
        }
    }

    fn margin(&mut self, g: &BoundaryGrid) {
        let s = &self.c.scenario;
        match synthesize_margin(s, g, &self.c.margin, &self.cfg.clarke) {
            Ok(m) => {
                let outcome = if m.pass { Outcome::Pass } else { Outcome::Fail };
                self.observed.insert("margin".into(), (outcome, Some(m.eps_star)));
                if m.pass && m.eps_star.is_finite() {
                    match check_strong_at(s, g, m.eps_star / 2.0, self.c.margin.density, &self.cfg.clarke) {
                        Ok(r) => {
                            self.observed.insert(
                                "strong-recheck".into(),
                                (verdict_outcome(r.verdict), Some(r.sigma)),
                            );
                            self.bundle.strong_recheck = Some(r);
                        }
                        Err(e) => self.error("strong-recheck", e),
                    }
                }
                self.bundle.margin = Some(m);
            }
            Err(e) => self.error("margin", e),
        }
    }

    fn modulus_step(&mut self) {
        let seed = self.cfg.falsify.seed;
        let samples = self.cfg.modulus.samples();
        let pair = match self.modulus() {
            Ok(p) => p.clone(),
            Err(e) => return self.error("modulus", e),
        };
        let s = &self.c.scenario;
        let pairs = random_pairs(&s.region, pair.options.delta_max, samples, seed);
        let check = verify_modulus(&s.map, &pair, &pairs, pair.options.density, 1e-9);
        let lambda2_min = s
            .grid()
            .iter()
            .map(|x| pair.lambda2(x))
            .fold(f64::INFINITY, f64::min);
        let summary = ModulusSummary {
            lambda1_at_zero: pair.lambda1(0.0),
            lambda2_min,
            c_monotone: pair.c_monotone(),
            check: check.as_ref().ok().cloned(),
            pair,
        };
        let ok = summary.lambda1_at_zero == 0.0
            && summary.lambda2_min >= 1.0
            && summary.c_monotone
            && summary.check.as_ref().is_some_and(|c| c.pass);
        let worst = summary.check.as_ref().map(|c| c.worst_slack);
        self.bundle.modulus = Some(summary);
        match check {
            Ok(_) => {
                let o = if ok { Outcome::Pass } else { Outcome::Fail };
                self.observed.insert("modulus".into(), (o, worst));
            }
            Err(e) => self.error("modulus", e),
        }
    }

    fn falsify_step(&mut self) {
        let s = &self.c.scenario;
        let mode = self.cfg.perturbation.mode;
        let key = format!("falsify-{}", mode_name(mode));
        match falsify(&self.c.system, s, &self.cfg.falsify, &self.c.hints) {
            Ok(out) => {
                let file = out.witness.as_ref().map(|w| {
                    let name = format!("{}-witness-{}.tsv", self.cfg.name, mode_name(mode));
                    self.files.push((name.clone(), w.trajectory.to_columns()));
                    name
                });
                let o = if out.falsified {
                    Outcome::Falsified
                } else {
                    Outcome::NotFalsified
                };
                self.observed.insert(key, (o, Some(out.deepest)));
                self.bundle
                    .falsify
                    .push(FalsifyRecord::new(mode, self.cfg.eps_value(), &out, file));
            }
            Err(e) => self.error(&key, e),
        }
    }

    /// Compare with the declared outcomes and set the exit code.
    fn settle(&mut self) {
        let mut failed = self.bundle.candidate.as_ref().is_some_and(|c| !c.pass);
        for (key, (outcome, value)) in &self.observed {
            let expected = self.cfg.expect.get(key);
            if let Some(e) = expected {
                let value_ok = match (e.value, value) {
                    (Some(v), Some(o)) => (o - v).abs() <= e.tol.unwrap_or(0.0),
                    (Some(_), None) => false,
                    _ => true,
                };
                let met = e.outcome == *outcome && value_ok;
                failed |= !met;
                self.bundle.expectations.push(ExpectationResult {
                    key: key.clone(),
                    expected: e.clone(),
                    observed: *outcome,
                    observed_value: *value,
                    met,
                });
            }
            failed |= match outcome {
                Outcome::Pass | Outcome::NotFalsified => false,
                Outcome::Falsified => true,
                other => expected.map_or(true, |e| e.outcome != *other),
            };
        }
        self.bundle.exit_code = i32::from(failed);
    }
}

/// Run a pipeline on a loaded config without touching the filesystem.
/// Returns the bundle and the trajectory files as `(name, contents)`.
pub fn execute(
    loaded: &ScenarioConfig,
    pipeline: Pipeline,
    flags: &RunFlags,
) -> Result<(ReportBundle, Vec<(String, String)>), CliError> {
    loaded.validate()?;
    let config_hash = loaded.hash();
    let mut cfg = loaded.clone();
    let overrides = apply_flags(&mut cfg, flags)?;
    let compiled = cfg.compile()?;
    let bundle = ReportBundle {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: pipeline.name().into(),
        scenario: cfg.name.clone(),
        config_hash,
        effective_config_hash: cfg.hash(),
        seed: cfg.falsify.seed,
        overrides,
        candidate: None,
        closure_contact: None,
        boundary: None,
        checks: Vec::new(),
        errors: Vec::new(),
        margin: None,
        strong_recheck: None,
        modulus: None,
        falsify: Vec::new(),
        expectations: Vec::new(),
        exit_code: 0,
        generated_at_unix: 0,
    };
    let mut run = Run {
        cfg: &cfg,
        c: &compiled,
        bundle,
        observed: BTreeMap::new(),
        modulus: None,
        files: Vec::new(),
    };
    let s = &compiled.scenario;
    match candidate_check(s) {
        Ok(r) => run.bundle.candidate = Some(r),
        Err(e) => run.error("candidate", e),
    }
    run.bundle.closure_contact = closure_contact(s);

    if pipeline.runs(Pipeline::Verify) || pipeline.runs(Pipeline::Margin) {
        match boundary_extract(s) {
            Ok(g) => {
                run.bundle.boundary = Some(BoundarySummary {
                    cells: g.cells.len(),
                    cell_diameter: g.cell_diameter,
                    representatives: g.representatives(),
                });
                if pipeline.runs(Pipeline::Verify) {
                    run.verify(&g);
                }
                if pipeline.runs(Pipeline::Margin) {
                    run.margin(&g);
                }
            }
            Err(e) => run.error("boundary", e),
        }
    }
    if pipeline.runs(Pipeline::Modulus) {
        run.modulus_step();
    } else if let Some(pair) = run.modulus.clone() {
        // built for a weighted check
        run.bundle.modulus = Some(ModulusSummary {
            lambda1_at_zero: pair.lambda1(0.0),
            lambda2_min: s.grid().iter().map(|x| pair.lambda2(x)).fold(f64::INFINITY, f64::min),
            c_monotone: pair.c_monotone(),
            check: None,
            pair,
        });
    }
    if pipeline.runs(Pipeline::Falsify) {
        run.falsify_step();
    }
    run.settle();
    Ok((run.bundle, run.files))
}

fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let err = |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    };
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let mut f = std::fs::File::create(&tmp).map_err(err)?;
    f.write_all(contents.as_bytes()).map_err(err)?;
    f.sync_all().map_err(err)?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(err)
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub bundle: ReportBundle,
    pub bundle_path: PathBuf,
    pub trajectory_paths: Vec<PathBuf>,
}

/// Load, execute and write the bundle (`<out>/<scenario>-<command>.json`)
/// and any witness trajectories.
pub fn run(config: &str, pipeline: Pipeline, flags: &RunFlags) -> Result<RunOutput, CliError> {
    let loaded = load_config(config)?;
    let (mut bundle, files) = execute(&loaded, pipeline, flags)?;
    bundle.generated_at_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let out = flags.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).map_err(|source| CliError::Write {
        path: out.clone(),
        source,
    })?;
    let mut trajectory_paths = Vec::new();
    for (name, contents) in &files {
        let p = out.join(name);
        write_atomic(&p, contents)?;
        trajectory_paths.push(p);
    }
    let bundle_path = out.join(format!("{}-{}.json", bundle.scenario, pipeline.name()));
    write_atomic(&bundle_path, &bundle.to_json())?;
    Ok(RunOutput {
        bundle,
        bundle_path,
        trajectory_paths,
    })
}

/// Write every builtin scenario as `<dir>/<name>.json`.
pub fn export_builtins(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for name in BUILTIN_NAMES {
        let cfg = builtin_config(name).expect("builtin exists");
        let p = dir.join(format!("{name}.json"));
        write_atomic(&p, &cfg.to_json())?;
        out.push(p);
    }
    Ok(out)
}

fn summarize(b: &ReportBundle) -> String {
    let mut s = String::new();
    if let Some(c) = &b.candidate {
        s.push_str(&format!("candidate: {}\n", if c.pass { "ok" } else { "FAILED" }));
    }
    for c in &b.checks {
        s.push_str(&format!("{:<14} {:<13} sigma = {:.6e}\n", c.id, c.verdict.as_str(), c.sigma));
    }
    if let Some(m) = &b.margin {
        s.push_str(&format!("margin         eps* = {:.6e} over {} cells\n", m.eps_star, m.cells.len()));
    }
    if let Some(r) = &b.strong_recheck {
        s.push_str(&format!("{:<14} {:<13} sigma = {:.6e}\n", r.id, r.verdict.as_str(), r.sigma));
    }
    if let Some(m) = &b.modulus {
        if let Some(c) = &m.check {
            s.push_str(&format!(
                "modulus        {:<13} worst slack = {:.3e} on {} samples\n",
                if c.pass { "pass" } else { "fail" },
                c.worst_slack,
                c.samples
            ));
        }
    }
    for f in &b.falsify {
        match &f.witness {
            Some(w) => s.push_str(&format!(
                "falsify/{:<6} falsified     depth = {:.4e} > tau = {:.4e}, escape at t = {:.4e} ({})\n",
                mode_name(f.mode), w.exit_depth, w.tau_exit, w.escape_time, w.policy
            )),
            None => s.push_str(&format!(
                "falsify/{:<6} no witness    {} runs, deepest {:.3e}\n",
                mode_name(f.mode), f.runs, f.deepest
            )),
        }
    }
    for e in &b.errors {
        s.push_str(&format!("{:<14} error         {}\n", e.id, e.message));
    }
    for e in b.expectations.iter().filter(|e| !e.met) {
        s.push_str(&format!("unmet expectation for {}: observed {:?}\n", e.key, e.observed));
    }
    s
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (args, pipeline) = match cli.command {
        Command::Export { out } => {
            return match export_builtins(&out) {
                Ok(paths) => {
                    for p in paths {
                        println!("{}", p.display());
                    }
                    0
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    2
                }
            };
        }
        Command::Verify(a) => (a, Pipeline::Verify),
        Command::Falsify(a) => (a, Pipeline::Falsify),
        Command::Margin(a) => (a, Pipeline::Margin),
        Command::Modulus(a) => (a, Pipeline::Modulus),
        Command::All(a) => (a, Pipeline::All),
    };
    match run(&args.config, pipeline, &args.flags) {
        Ok(out) => {
            print!("{}", summarize(&out.bundle));
            println!("report: {}", out.bundle_path.display());
            for p in &out.trajectory_paths {
                println!("trajectory: {}", p.display());
            }
            out.bundle.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
