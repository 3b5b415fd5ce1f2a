//! Sampled solutions, monotonicity tests, falsification and a 1-D
//! reachability tube.
//!
//! Solutions are explicit Euler chains `x_{k+1} = x_k + h η_k` with
//! `η_k` selected from the image of the integrated system at `x_k`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barrier::{BarrierCandidate, SafetyScenario};
use crate::error::{check_dim, Error, Result};
use crate::expr::Expr;
use crate::linalg::{dot, lex_cmp, norm, BoxRegion, Directions};
use crate::svmap::PerturbedSystem;

/// Exit threshold factor: `τ_exit = EXIT_FACTOR · h · (velocity bound)`.
pub const EXIT_FACTOR: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `velocities[k]` moves `states[k]` to `states[k + 1]`.
    pub velocities: Vec<Vec<f64>>,
    /// `B` at every state; empty without a barrier.
    pub b_values: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has an initial state")
    }

    /// `max_k |η_k|`.
    pub fn velocity_bound(&self) -> f64 {
        self.velocities.iter().map(|v| norm(v)).fold(0.0, f64::max)
    }

    /// Whitespace-separated columns `t x1 .. xn [B]`, one line per state.
    pub fn to_columns(&self) -> String {
        let n = self.states.first().map_or(0, |s| s.len());
        let mut out = String::from("# t");
        for i in 1..=n {
            out.push_str(&format!(" x{i}"));
        }
        if !self.b_values.is_empty() {
            out.push_str(" B");
        }
        out.push('\n');
        for (k, (t, x)) in self.times.iter().zip(&self.states).enumerate() {
            out.push_str(&format!("{t:e}"));
            for v in x {
                out.push_str(&format!(" {v:e}"));
            }
            if let Some(b) = self.b_values.get(k) {
                out.push_str(&format!(" {b:e}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Rule choosing `η ∈ image(x)` at each step.
#[derive(Clone, Debug)]
pub enum SelectionPolicy {
    /// Image extreme point maximizing `⟨∇B(x), η⟩`.
    BAscent,
    /// Uniformly random image extreme point.
    RandomExtreme { seed: u64 },
    /// Fixed velocity, checked for admissibility at every step.
    Constant(Vec<f64>),
    /// `η = f(x)` from expressions, checked for admissibility.
    Custom(Vec<Expr>),
    /// `argmax_{η ∈ F(x + εμ)} ⟨∇B(x), η⟩ + εμ` with `ε` the system margin:
    /// a selection of the strong perturbation shifted along `μ`.
    Shifted { mu: Vec<f64> },
}

impl SelectionPolicy {
    pub fn label(&self) -> String {
        match self {
            SelectionPolicy::BAscent => "b-ascent".into(),
            SelectionPolicy::RandomExtreme { seed } => format!("random-extreme(seed={seed})"),
            SelectionPolicy::Constant(v) => format!("constant{v:?}"),
            SelectionPolicy::Custom(e) => {
                let parts: Vec<&str> = e.iter().map(|x| x.source()).collect();
                format!("custom[{}]", parts.join(", "))
            }
            SelectionPolicy::Shifted { mu } => format!("shifted{mu:?}"),
        }
    }

    fn checked(&self) -> bool {
        matches!(
            self,
            SelectionPolicy::Constant(_) | SelectionPolicy::Custom(_) | SelectionPolicy::Shifted { .. }
        )
    }
}

/// Why an integration ended.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Horizon,
    VelocityNotAdmissible,
    LeftDomain,
}

fn ascent_direction(barrier: Option<&BarrierCandidate>, x: &[f64]) -> Result<Vec<f64>> {
    let b = barrier.ok_or_else(|| {
        Error::InvalidArgument("this selection policy needs a barrier gradient".into())
    })?;
    Ok(b.gradient(x).unwrap_or_else(|| b.fd_gradient(x)))
}

fn argmax<'a>(points: &'a [Vec<f64>], d: &[f64]) -> &'a [f64] {
    let mut best = &points[0];
    let mut val = dot(best, d);
    for p in &points[1..] {
        let v = dot(p, d);
        if v > val {
            val = v;
            best = p;
        }
    }
    best
}

struct Stepper<'a> {
    system: &'a PerturbedSystem,
    barrier: Option<&'a BarrierCandidate>,
    region: &'a BoxRegion,
    policy: &'a SelectionPolicy,
    rng: ChaCha8Rng,
}

impl<'a> Stepper<'a> {
    /// Selected velocity, or `None` if a checked velocity is not admissible.
    fn select(&mut self, x: &[f64]) -> Result<Option<Vec<f64>>> {
        let img = self.system.image(x)?;
        let v = match self.policy {
            SelectionPolicy::BAscent => {
                let d = ascent_direction(self.barrier, x)?;
                argmax(&img.extreme_points(), &d).to_vec()
            }
            SelectionPolicy::RandomExtreme { .. } => {
                let pts = img.extreme_points();
                let k = self.rng.gen_range(0..pts.len());
                pts[k].clone()
            }
            SelectionPolicy::Constant(v) => v.clone(),
            SelectionPolicy::Custom(e) => e.iter().map(|f| f.eval(x)).collect(),
            SelectionPolicy::Shifted { mu } => {
                let eps = self.system.margin().at(x);
                let shifted: Vec<f64> = x.iter().zip(mu).map(|(a, m)| a + eps * m).collect();
                let d = ascent_direction(self.barrier, x)?;
                let base = self.system.base().image(&shifted)?;
                let eta = argmax(&base.extreme_points(), &d).to_vec();
                eta.iter().zip(mu).map(|(e, m)| e + eps * m).collect()
            }
        };
        check_dim(x.len(), v.len())?;
        if self.policy.checked() {
            let tol = 1e-9 * (1.0 + norm(&v));
            if !img.contains(&v, tol)? {
                return Ok(None);
            }
        }
        Ok(Some(v))
    }
}

/// Integrate until the horizon, stopping (without error) on an
/// inadmissible checked velocity or on leaving the box.
fn run(
    system: &PerturbedSystem,
    barrier: Option<&BarrierCandidate>,
    region: &BoxRegion,
    x0: &[f64],
    horizon: f64,
    h: f64,
    policy: &SelectionPolicy,
) -> Result<(Trajectory, StopReason, usize)> {
    check_dim(system.dim(), x0.len())?;
    if !(h > 0.0) || !(horizon >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need h > 0 and T >= 0, got h = {h}, T = {horizon}"
        )));
    }
    if !region.contains(x0) {
        return Err(Error::LeftDomain {
            step: 0,
            state: x0.to_vec(),
        });
    }
    let seed = match policy {
        SelectionPolicy::RandomExtreme { seed } => *seed,
        _ => 0,
    };
    let mut st = Stepper {
        system,
        barrier,
        region,
        policy,
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let steps = (horizon / h).round() as usize;
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![x0.to_vec()],
        velocities: Vec::new(),
        b_values: barrier.map(|b| vec![b.value(x0)]).unwrap_or_default(),
    };
    let mut x = x0.to_vec();
    for k in 0..steps {
        let v = match st.select(&x)? {
            Some(v) => v,
            None => return Ok((traj, StopReason::VelocityNotAdmissible, k)),
        };
        let next: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + h * b).collect();
        traj.velocities.push(v);
        if !st.region.contains(&next) {
            return Ok((traj, StopReason::LeftDomain, k + 1));
        }
        traj.times.push((k + 1) as f64 * h);
        if let Some(b) = barrier {
            traj.b_values.push(b.value(&next));
        }
        traj.states.push(next.clone());
        x = next;
    }
    Ok((traj, StopReason::Horizon, steps))
}

/// Explicit Euler solution of `system` from `x0` on `[0, T]`.
///
/// Errors if a checked velocity becomes inadmissible or the state leaves
/// `region`.
pub fn integrate(
    system: &PerturbedSystem,
    barrier: Option<&BarrierCandidate>,
    region: &BoxRegion,
    x0: &[f64],
    horizon: f64,
    h: f64,
    policy: &SelectionPolicy,
) -> Result<Trajectory> {
    let (mut traj, stop, step) = run(system, barrier, region, x0, horizon, h, policy)?;
    match stop {
        StopReason::Horizon => Ok(traj),
        StopReason::VelocityNotAdmissible => {
            let state = traj.last_state().to_vec();
            let velocity = match policy {
                SelectionPolicy::Constant(v) => v.clone(),
                SelectionPolicy::Custom(e) => e.iter().map(|f| f.eval(&state)).collect(),
                _ => Vec::new(),
            };
            Err(Error::VelocityNotAdmissible {
                step,
                state,
                velocity,
            })
        }
        StopReason::LeftDomain => {
            let last = traj.last_state().to_vec();
            let v = traj.velocities.pop().unwrap_or_default();
            let state = last.iter().zip(&v).map(|(a, b)| a + h * b).collect();
            Err(Error::LeftDomain { step, state })
        }
    }
}

/// Collar `U(∂K)` used by the monotonicity test.
#[derive(Clone, Debug)]
pub enum Collar {
    /// `|B(x)| <= width`.
    LevelBand(f64),
    /// Within `width` of one of the points.
    NearPoints { points: Vec<Vec<f64>>, width: f64 },
    /// The whole state space.
    Everywhere,
}

impl Collar {
    fn contains(&self, b: &BarrierCandidate, x: &[f64], bx: f64) -> bool {
        let _ = b;
        match self {
            Collar::LevelBand(w) => bx.abs() <= *w,
            Collar::NearPoints { points, width } => {
                points.iter().any(|p| crate::linalg::dist(p, x) <= *width)
            }
            Collar::Everywhere => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub pass: bool,
    /// Observed Lipschitz rate of `t ↦ B(φ(t))`.
    pub rate: f64,
    pub tolerance: f64,
    pub windows: usize,
    /// `(first index, violating index, increase)` of the first violation.
    pub violation: Option<(usize, usize, f64)>,
}

/// Check that `B` is non-increasing (up to `C_B · h`) on every maximal
/// time window spent in the collar.
pub fn monotonicity_test(
    b: &BarrierCandidate,
    traj: &Trajectory,
    collar: &Collar,
) -> MonotonicityReport {
    let vals: Vec<f64> = if traj.b_values.len() == traj.states.len() {
        traj.b_values.clone()
    } else {
        traj.states.iter().map(|x| b.value(x)).collect()
    };
    let mut rate = 0.0f64;
    let mut h = 0.0f64;
    for k in 1..vals.len() {
        let dt = traj.times[k] - traj.times[k - 1];
        if dt > 0.0 {
            rate = rate.max((vals[k] - vals[k - 1]).abs() / dt);
            h = h.max(dt);
        }
    }
    let tol = rate * h;
    let mut windows = 0;
    let mut start: Option<usize> = None;
    let mut running_min = f64::INFINITY;
    for (k, (x, v)) in traj.states.iter().zip(&vals).enumerate() {
        if collar.contains(b, x, *v) {
            if start.is_none() {
                start = Some(k);
                windows += 1;
                running_min = f64::INFINITY;
            }
            running_min = running_min.min(*v);
            let rise = v - running_min;
            if rise > tol {
                return MonotonicityReport {
                    pass: false,
                    rate,
                    tolerance: tol,
                    windows,
                    violation: Some((start.unwrap(), k, rise)),
                };
            }
        } else {
            start = None;
        }
    }
    MonotonicityReport {
        pass: true,
        rate,
        tolerance: tol,
        windows,
        violation: None,
    }
}

/// Depth of `x` inside the unsafe set: the smallest, over sampled
/// directions, of the first `r` at which `x + r d` leaves it (capped at
/// `cap`). Zero outside the unsafe set.
pub fn exit_depth(s: &SafetyScenario, x: &[f64], cap: f64) -> f64 {
    if !s.in_unsafe(x) {
        return 0.0;
    }
    let n = x.len();
    let dirs = Directions::new(n, if n == 1 { 2 } else { 32 });
    let mut y = x.to_vec();
    let mut depth = cap;
    for d in dirs.iter() {
        let mut unsafe_at = |r: f64| {
            for i in 0..n {
                y[i] = x[i] + r * d[i];
            }
            s.in_unsafe(&y)
        };
        // march to the first safe sample, then bisect back
        let step = cap / 256.0;
        let mut lo = 0.0;
        let mut hi = None;
        while lo < depth {
            let r = (lo + step).min(depth);
            if !unsafe_at(r) {
                hi = Some(r);
                break;
            }
            lo = r;
        }
        let Some(mut hi) = hi else { continue };
        while hi - lo > 1e-12 * (1.0 + hi) {
            let mid = 0.5 * (lo + hi);
            if unsafe_at(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        depth = depth.min(lo);
    }
    depth
}

/// Declared witness start and policy, tried before the sampled starts.
#[derive(Clone, Debug)]
pub struct Hint {
    pub start: Vec<f64>,
    pub policy: SelectionPolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budget {
    /// Sampled starts (hints come on top).
    pub starts: usize,
    pub horizon: f64,
    pub step: f64,
    /// Try the gradient-ascent selection.
    pub b_ascent: bool,
    /// Number of seeded random-extreme selections per start.
    pub random_runs: usize,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            starts: 200,
            horizon: 5.0,
            step: 1e-2,
            b_ascent: true,
            random_runs: 1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub run: usize,
    pub start: Vec<f64>,
    pub policy: String,
    pub exit_depth: f64,
    /// First time the depth exceeds `tau_exit`.
    pub escape_time: f64,
    pub tau_exit: f64,
    pub stop: StopReason,
    pub trajectory: Trajectory,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FalsifyOutcome {
    pub falsified: bool,
    pub runs: usize,
    /// Largest depth into the unsafe set over all runs, with its threshold.
    pub deepest: f64,
    pub deepest_tau: f64,
    pub witness: Option<Witness>,
    pub inner_approximation: bool,
}

struct RunResult {
    depth: f64,
    tau: f64,
    witness: Option<Witness>,
}

/// Search for a solution from the sampled initial set that enters the
/// unsafe set deeper than `τ_exit = 10 h v`, with `v` the largest selected
/// speed of that run.
pub fn falsify(
    system: &PerturbedSystem,
    s: &SafetyScenario,
    budget: &Budget,
    hints: &[Hint],
) -> Result<FalsifyOutcome> {
    let mut starts: Vec<(Vec<f64>, f64)> = s
        .grid()
        .into_iter()
        .filter(|x| s.in_initial(x))
        .map(|x| {
            let b = s.barrier.value(&x).abs();
            (x, b)
        })
        .collect();
    starts.sort_by(|a, b| a.1.total_cmp(&b.1).then(lex_cmp(&a.0, &b.0)));
    let mut jobs: Vec<(Vec<f64>, SelectionPolicy)> = hints
        .iter()
        .map(|h| (h.start.clone(), h.policy.clone()))
        .collect();
    for (k, (x, _)) in starts.into_iter().take(budget.starts).enumerate() {
        if budget.b_ascent {
            jobs.push((x.clone(), SelectionPolicy::BAscent));
        }
        for r in 0..budget.random_runs {
            let seed = budget
                .seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add((k * budget.random_runs + r) as u64);
            jobs.push((x.clone(), SelectionPolicy::RandomExtreme { seed }));
        }
    }
    let cap = s.region.diameter();
    let results: Vec<RunResult> = jobs
        .par_iter()
        .enumerate()
        .map(|(idx, (x0, policy))| {
            let (traj, stop, _) = run(
                system,
                Some(&s.barrier),
                &s.region,
                x0,
                budget.horizon,
                budget.step,
                policy,
            )?;
            let tau = EXIT_FACTOR * budget.step * traj.velocity_bound();
            let mut depth = 0.0f64;
            let mut escape = None;
            for (t, x) in traj.times.iter().zip(&traj.states) {
                let d = exit_depth(s, x, cap);
                if d > tau && escape.is_none() {
                    escape = Some(*t);
                }
                depth = depth.max(d);
            }
            let witness = escape.map(|escape_time| Witness {
                run: idx,
                start: x0.clone(),
                policy: policy.label(),
                exit_depth: depth,
                escape_time,
                tau_exit: tau,
                stop,
                trajectory: traj,
            });
            Ok(RunResult {
                depth,
                tau,
                witness,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut deepest = 0.0;
    let mut deepest_tau = 0.0;
    for r in &results {
        if r.depth > deepest {
            deepest = r.depth;
            deepest_tau = r.tau;
        }
    }
    let witness = results.into_iter().find_map(|r| r.witness);
    Ok(FalsifyOutcome {
        falsified: witness.is_some(),
        runs: jobs.len(),
        deepest,
        deepest_tau,
        witness,
        inner_approximation: system.is_inner_approximation(),
    })
}

/// Interval tube `R_0 = X0`, `R_{k+1} = R_k ∪ hull{x + h F(x)}` over
/// samples `x` of `R_k` (endpoints included), for 1-D systems.
pub fn reach_interval_1d(
    system: &PerturbedSystem,
    x0: (f64, f64),
    horizon: f64,
    h: f64,
) -> Result<Vec<(f64, f64)>> {
    if system.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: system.dim(),
        });
    }
    if !(x0.0 <= x0.1) || !(h > 0.0) || !(horizon >= 0.0) {
        return Err(Error::InvalidArgument("need lo <= hi, h > 0 and T >= 0".into()));
    }
    let steps = (horizon / h).round() as usize;
    let mut tube = Vec::with_capacity(steps + 1);
    let (mut lo, mut hi) = x0;
    tube.push((lo, hi));
    for _ in 0..steps {
        let count = ((hi - lo) / h).clamp(64.0, 512.0) as usize;
        let (mut nlo, mut nhi) = (lo, hi);
        for k in 0..=count {
            let x = if k == count {
                hi
            } else {
                lo + (hi - lo) * k as f64 / count as f64
            };
            let (a, b) = system.image(&[x])?.interval_bounds().expect("1-D image");
            nlo = nlo.min(x + h * a);
            nhi = nhi.max(x + h * b);
        }
        lo = nlo;
        hi = nhi;
        tube.push((lo, hi));
    }
    Ok(tube)
}
