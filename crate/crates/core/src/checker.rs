//! Sampled evaluation of the barrier inequalities.
//!
//! Every check reduces to `σ = min` of a quantity over a sample set, with
//! the sign convention "positive means satisfied strictly". Verdicts are
//! numerical: `pass-numeric` never claims a proof.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barrier::{
    clarke_with, collar_samples, proximal_subdifferential, BoundaryGrid, ClarkeOptions,
    CollarSide, SafetyScenario, Smoothness, GRADIENT_FLOOR,
};
use crate::convexset::ConvexCompactSet;
use crate::error::{Error, Result};
use crate::linalg::{lex_cmp, norm, BoxRegion};
use crate::modulus::Modulus;
use crate::svmap::{Margin, MarginSearch, PerturbMode, PerturbedSystem};

/// Box scales of the trend diagnostic.
pub const TREND_SCALES: [f64; 3] = [0.25, 0.5, 1.0];

/// Relative drop of `σ` per scale step that flags a vanishing infimum.
pub const TREND_DROP: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "pass-numeric")]
    Pass,
    #[serde(rename = "fail")]
    Fail,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass-numeric",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// `σ` on one of the nested boxes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub scale: f64,
    pub sigma: Option<f64>,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub id: String,
    pub verdict: Verdict,
    pub sigma: f64,
    pub witness_point: Option<Vec<f64>>,
    pub witness_velocity: Option<Vec<f64>>,
    pub samples: usize,
    pub tolerance: f64,
    /// The images used are inner approximations (lattice-sampled balls).
    pub inner_approximation: bool,
    /// The images used are outer approximations.
    pub outer_approximation: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub trend: Vec<TrendPoint>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
    /// `(x, value)` for every sample, in sample order.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub trace: Vec<(Vec<f64>, f64)>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Value of the checked quantity at one sample and the velocity that
/// attains it.
struct Eval {
    value: f64,
    velocity: Vec<f64>,
}

struct Fold {
    sigma: f64,
    point: Option<Vec<f64>>,
    velocity: Option<Vec<f64>>,
    trace: Vec<(Vec<f64>, f64)>,
}

/// Parallel evaluation with an order-independent minimum: ties go to the
/// lexicographically smallest point.
fn fold_min(
    samples: &[Vec<f64>],
    eval: impl Fn(&[f64]) -> Result<Eval> + Sync,
) -> Result<Fold> {
    let evals: Vec<Eval> = samples
        .par_iter()
        .map(|x| eval(x))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<usize> = None;
    for (k, e) in evals.iter().enumerate() {
        best = match best {
            None => Some(k),
            Some(b) => {
                let eb = &evals[b];
                if e.value < eb.value
                    || (e.value == eb.value && lex_cmp(&samples[k], &samples[b]).is_lt())
                {
                    Some(k)
                } else {
                    Some(b)
                }
            }
        };
    }
    let trace = samples
        .iter()
        .zip(&evals)
        .map(|(x, e)| (x.clone(), e.value))
        .collect();
    Ok(match best {
        None => Fold {
            sigma: f64::INFINITY,
            point: None,
            velocity: None,
            trace,
        },
        Some(k) => Fold {
            sigma: evals[k].value,
            point: Some(samples[k].clone()),
            velocity: Some(evals[k].velocity.clone()),
            trace,
        },
    })
}

/// `min_η <ζ, -η>` over `η ∈ S` with the attaining `η`.
fn inward(s: &ConvexCompactSet, zeta: &[f64]) -> Eval {
    Eval {
        value: -s.support_unchecked(zeta),
        velocity: s.maximizer(zeta),
    }
}

fn require(tag: Smoothness, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::UnsupportedSmoothness(format!(
            "{what} is not available for a {} barrier",
            tag.name()
        )))
    }
}

fn gradient_at(s: &SafetyScenario, x: &[f64]) -> Result<Vec<f64>> {
    s.barrier.gradient(x).ok_or_else(|| Error::AllSamplesSingular {
        point: x.to_vec(),
        samples: 1,
    })
}

fn unit_gradient(s: &SafetyScenario, x: &[f64]) -> Result<(Vec<f64>, f64)> {
    let g = gradient_at(s, x)?;
    let n = norm(&g);
    if n < GRADIENT_FLOOR {
        return Err(Error::DegenerateGradient {
            point: x.to_vec(),
            norm: n,
        });
    }
    Ok((g, n))
}

fn report(id: &str, fold: Fold, samples: usize, tol: f64, strict: bool) -> CheckReport {
    let ok = if strict {
        fold.sigma > tol
    } else {
        fold.sigma >= -tol
    };
    let verdict = if ok { Verdict::Pass } else { Verdict::Fail };
    CheckReport {
        id: id.to_string(),
        verdict,
        sigma: fold.sigma,
        witness_point: fold.point,
        witness_velocity: fold.velocity,
        samples,
        tolerance: tol,
        inner_approximation: false,
        outer_approximation: false,
        trend: Vec::new(),
        notes: Vec::new(),
        trace: fold.trace,
    }
}

fn nonempty(samples: &[Vec<f64>], what: &str) -> Result<()> {
    if samples.is_empty() {
        Err(Error::EmptySample(what.to_string()))
    } else {
        Ok(())
    }
}

/// Boundary check with the nested-box trend diagnostic. `eval` gives the
/// quantity at one representative.
fn boundary_check(
    id: &str,
    s: &SafetyScenario,
    reps: &[Vec<f64>],
    eval: impl Fn(&[f64]) -> Result<Eval> + Sync,
) -> Result<CheckReport> {
    nonempty(reps, "boundary representatives")?;
    let fold = fold_min(reps, &eval)?;
    let mut r = report(id, fold, reps.len(), s.tol.strict, true);
    apply_trend(&mut r, s, reps);
    Ok(r)
}

fn apply_trend(r: &mut CheckReport, s: &SafetyScenario, reps: &[Vec<f64>]) {
    let values: Vec<f64> = r.trace.iter().map(|(_, v)| *v).collect();
    r.trend = trend(&s.region, reps, &values);
    if r.verdict == Verdict::Pass && trend_vanishes(&r.trend) && touches_edge(s, reps) {
        r.verdict = Verdict::Inconclusive;
        r.notes.push(
            "sigma decreases on nested boxes and the boundary reaches the box edge; \
             the infimum over the unbounded boundary may vanish"
                .into(),
        );
    }
}

fn trend(region: &BoxRegion, points: &[Vec<f64>], values: &[f64]) -> Vec<TrendPoint> {
    TREND_SCALES
        .iter()
        .map(|&k| {
            let b = region.scaled(k * (1.0 + 1e-12));
            let mut sigma: Option<f64> = None;
            let mut count = 0;
            for (p, v) in points.iter().zip(values) {
                if b.contains(p) {
                    count += 1;
                    sigma = Some(sigma.map_or(*v, |s: f64| s.min(*v)));
                }
            }
            TrendPoint {
                scale: k,
                sigma,
                samples: count,
            }
        })
        .collect()
}

fn trend_vanishes(t: &[TrendPoint]) -> bool {
    let s: Vec<f64> = t.iter().filter_map(|p| p.sigma).collect();
    s.len() == t.len() && s.windows(2).all(|w| w[1] < (1.0 - TREND_DROP) * w[0])
}

fn touches_edge(s: &SafetyScenario, reps: &[Vec<f64>]) -> bool {
    let h = s.region.spacing(&s.resolution);
    reps.iter().any(|p| {
        p.iter()
            .enumerate()
            .any(|(i, v)| (v - s.region.lo[i]).abs() <= h[i] || (s.region.hi[i] - v).abs() <= h[i])
    })
}

/// `⟨∇B(x), η⟩ <= 0` on the outer collar: `σ = min -h_{F(x)}(∇B(x))`.
pub fn check_nominal(s: &SafetyScenario, g: &BoundaryGrid) -> Result<CheckReport> {
    let tag = s.barrier.tag();
    require(tag, tag.at_least_c1(), "the nominal gradient check")?;
    let samples = collar_samples(s, g, s.collar(), CollarSide::Outer);
    nonempty(&samples, "outer collar")?;
    let fold = fold_min(&samples, |x| {
        let grad = gradient_at(s, x)?;
        Ok(inward(&s.map.image(x)?, &grad))
    })?;
    Ok(report("nominal", fold, samples.len(), s.tol.nominal, false))
}

/// `⟨∇B(x), η⟩ < 0` on the boundary representatives.
pub fn check_robust_strict(s: &SafetyScenario, g: &BoundaryGrid) -> Result<CheckReport> {
    let tag = s.barrier.tag();
    require(tag, tag.at_least_c1(), "the strict gradient check")?;
    let reps = g.representatives();
    boundary_check("robust-strict", s, &reps, |x| {
        let grad = gradient_at(s, x)?;
        Ok(inward(&s.map.image(x)?, &grad))
    })
}

/// Worst vertex of the Clarke hull.
fn worst_over(
    zetas: &ConvexCompactSet,
    f: &ConvexCompactSet,
    normalize: bool,
) -> Result<Eval> {
    let mut best: Option<Eval> = None;
    for z in zetas.extreme_points() {
        let n = norm(&z);
        if normalize && n < GRADIENT_FLOOR {
            return Err(Error::DegenerateGradient {
                point: z.clone(),
                norm: n,
            });
        }
        let mut e = inward(f, &z);
        if normalize {
            e.value /= n;
        }
        if best.as_ref().map_or(true, |b| e.value < b.value) {
            best = Some(e);
        }
    }
    Ok(best.expect("convex sets have at least one extreme point"))
}

/// `⟨ζ, η⟩ < 0` for every `ζ` in the sampled Clarke gradient.
pub fn check_clarke(
    s: &SafetyScenario,
    g: &BoundaryGrid,
    clarke: &ClarkeOptions,
) -> Result<CheckReport> {
    let tag = s.barrier.tag();
    require(tag, tag.at_least_lipschitz(), "the Clarke check")?;
    let reps = g.representatives();
    boundary_check("clarke", s, &reps, |x| {
        let z = clarke_with(&s.barrier, x, clarke)?;
        worst_over(&z, &s.map.image(x)?, false)
    })
}

/// `inf ⟨∇B, -F⟩ / |∇B| > 0` over the boundary.
pub fn check_uniform_unweighted(s: &SafetyScenario, g: &BoundaryGrid) -> Result<CheckReport> {
    let tag = s.barrier.tag();
    require(tag, tag.at_least_c1(), "the normalized gradient check")?;
    let reps = g.representatives();
    boundary_check("eqexp2", s, &reps, |x| {
        let (grad, n) = unit_gradient(s, x)?;
        let mut e = inward(&s.map.image(x)?, &grad);
        e.value /= n;
        Ok(e)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightedVariant {
    /// Gradient on the boundary.
    C1,
    /// Clarke gradient on the boundary.
    C2,
    /// Proximal subdifferential on the two-sided collar.
    C3,
    /// Proximal subdifferential of `-B` on the two-sided collar, with the
    /// closure of `K` kept away from `X_u`.
    C4,
}

impl WeightedVariant {
    pub fn id(self) -> &'static str {
        match self {
            WeightedVariant::C1 => "uniform-c1",
            WeightedVariant::C2 => "uniform-c2",
            WeightedVariant::C3 => "uniform-c3",
            WeightedVariant::C4 => "uniform-c4",
        }
    }
}

/// Probe `cl(K) ∩ X_u = ∅` near the boundary representatives.
fn closure_meets_unsafe(s: &SafetyScenario, reps: &[Vec<f64>]) -> Option<Vec<f64>> {
    let dirs = crate::linalg::Directions::new(s.dim(), if s.dim() == 1 { 2 } else { 16 });
    for r in reps {
        if s.in_unsafe(r) {
            return Some(r.clone());
        }
        for d in dirs.iter() {
            let y: Vec<f64> = r.iter().zip(d).map(|(a, b)| a + 1e-6 * b).collect();
            if s.in_unsafe(&y) {
                return Some(r.clone());
            }
        }
    }
    None
}

/// Normalized inward quantity divided by `1 + λ2(x)`.
pub fn check_uniform_weighted(
    s: &SafetyScenario,
    g: &BoundaryGrid,
    m: &(dyn Modulus + Sync),
    variant: WeightedVariant,
    clarke: &ClarkeOptions,
) -> Result<CheckReport> {
    let tag = s.barrier.tag();
    let reps = g.representatives();
    let weight = |x: &[f64]| 1.0 + m.lambda2(x);
    let id = variant.id();
    let mut r = match variant {
        WeightedVariant::C1 => {
            require(tag, tag.at_least_c1(), "variant C1")?;
            boundary_check(id, s, &reps, |x| {
                let (grad, n) = unit_gradient(s, x)?;
                let mut e = inward(&s.map.image(x)?, &grad);
                e.value /= n * weight(x);
                Ok(e)
            })?
        }
        WeightedVariant::C2 => {
            require(tag, tag.at_least_lipschitz(), "variant C2")?;
            boundary_check(id, s, &reps, |x| {
                let z = clarke_with(&s.barrier, x, clarke)?;
                let mut e = worst_over(&z, &s.map.image(x)?, true)?;
                e.value /= weight(x);
                Ok(e)
            })?
        }
        WeightedVariant::C3 | WeightedVariant::C4 => {
            if variant == WeightedVariant::C4 {
                require(tag, matches!(tag, Smoothness::C2 | Smoothness::Usc), "variant C4")?;
                if let Some(p) = closure_meets_unsafe(s, &reps) {
                    return Err(Error::PreconditionViolated(format!(
                        "the closure of K meets the unsafe set near {p:?}"
                    )));
                }
            } else {
                require(tag, tag == Smoothness::C2, "variant C3")?;
            }
            let samples = collar_samples(s, g, s.collar(), CollarSide::Both);
            nonempty(&samples, "two-sided collar")?;
            let fold = fold_min(&samples, |x| {
                let zeta = if variant == WeightedVariant::C3 {
                    proximal_subdifferential(&s.barrier, x)?.point_list().remove(0)
                } else {
                    // ∂_P(-B) = {-∇B}; ⟨ζ, η⟩ > 0 is the same inequality.
                    gradient_at(s, x)?
                };
                let n = norm(&zeta);
                if n < GRADIENT_FLOOR {
                    return Err(Error::DegenerateGradient {
                        point: x.to_vec(),
                        norm: n,
                    });
                }
                let mut e = inward(&s.map.image(x)?, &zeta);
                e.value /= n * weight(x);
                Ok(e)
            })?;
            let mut r = report(id, fold, samples.len(), s.tol.strict, true);
            apply_trend(&mut r, s, &samples);
            r
        }
    };
    r.notes.push("weighted by 1 + lambda2(x)".into());
    Ok(r)
}

/// Margin of one boundary cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellMargin {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub delta: f64,
    /// Representative and velocity violating the inequality at the first
    /// rejected radius.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub cells: Vec<CellMargin>,
    /// `min_i δ_i`: a uniform strong margin when `∂K` is bounded in the box.
    pub eps_star: f64,
    pub pass: bool,
    pub witness_point: Option<Vec<f64>>,
    pub bracket: [f64; 2],
    pub density: usize,
    pub inner_approximation: bool,
}

impl MarginReport {
    /// `ε_o(x) = min { δ_i : x ∈ D_i }`, `None` outside every cell.
    pub fn eps_o(&self, x: &[f64]) -> Option<f64> {
        self.cells
            .iter()
            .filter(|c| {
                x.iter()
                    .zip(c.lo.iter().zip(&c.hi))
                    .all(|(v, (a, b))| *a <= *v && *v <= *b)
            })
            .map(|c| c.delta)
            .reduce(f64::min)
    }
}

fn strong_system(s: &SafetyScenario, density: usize) -> Result<PerturbedSystem> {
    PerturbedSystem::new(s.map.clone(), Margin::Constant(1.0), PerturbMode::Strong)
        .with_density(density)
}

/// Smallest inward quantity over the Clarke vertices at `x` for the
/// constant-`δ` strong image.
fn strong_margin_at(
    s: &SafetyScenario,
    sys: &PerturbedSystem,
    x: &[f64],
    delta: f64,
    clarke: &ClarkeOptions,
) -> Result<Eval> {
    let z = clarke_with(&s.barrier, x, clarke)?;
    let img = sys.strong_at(x, delta, delta)?;
    worst_over(&z, &img, false)
}

/// Per-cell bisection of the largest `δ_i` with
/// `⟨ζ, η⟩ < 0` for all `η ∈ co F(x + δ_i B) + δ_i B` and all Clarke
/// vertices `ζ`, at every representative of the cell.
pub fn synthesize_margin(
    s: &SafetyScenario,
    g: &BoundaryGrid,
    search: &MarginSearch,
    clarke: &ClarkeOptions,
) -> Result<MarginReport> {
    let tag = s.barrier.tag();
    require(tag, tag.at_least_lipschitz(), "margin synthesis")?;
    if g.is_empty() {
        return Err(Error::EmptySample("boundary cells".into()));
    }
    let sys = strong_system(s, search.density)?;
    let tol = s.tol.strict;
    let cells = g
        .cells
        .par_iter()
        .map(|cell| {
            let mut err = None;
            let (delta, witness) =
                crate::linalg::bisect_largest(search.delta_max, search.rel_tol, |d| {
                    for x in &cell.reps {
                        match strong_margin_at(s, &sys, x, d, clarke) {
                            Ok(e) if e.value > tol => {}
                            Ok(e) => return Err((x.clone(), e.velocity)),
                            Err(e) => {
                                err.get_or_insert(e);
                                return Err((x.clone(), vec![]));
                            }
                        }
                    }
                    Ok(())
                });
            if let Some(e) = err {
                return Err(e);
            }
            Ok(CellMargin {
                lo: cell.lo.clone(),
                hi: cell.hi.clone(),
                delta,
                witness,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut eps_star = f64::INFINITY;
    let mut witness_point = None;
    for c in &cells {
        if c.delta < eps_star {
            eps_star = c.delta;
            if c.delta == 0.0 {
                witness_point = c.witness.as_ref().map(|w| w.0.clone());
            }
        }
    }
    Ok(MarginReport {
        pass: eps_star > 0.0,
        cells,
        eps_star,
        witness_point,
        bracket: [0.0, search.delta_max],
        density: search.density,
        inner_approximation: true,
    })
}

/// Clarke check against the strong image with constant margin `δ`.
pub fn check_strong_at(
    s: &SafetyScenario,
    g: &BoundaryGrid,
    delta: f64,
    density: usize,
    clarke: &ClarkeOptions,
) -> Result<CheckReport> {
    let tag = s.barrier.tag();
    require(tag, tag.at_least_lipschitz(), "the strong re-check")?;
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("margin must be > 0, got {delta}")));
    }
    let sys = strong_system(s, density)?;
    let reps = g.representatives();
    let mut r = boundary_check("strong-recheck", s, &reps, |x| {
        strong_margin_at(s, &sys, x, delta, clarke)
    })?;
    r.inner_approximation = true;
    r.notes.push(format!("strong image with constant margin {delta}"));
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::tests::{barrier, example1};
    use crate::barrier::{boundary_extract, BarrierCandidate};
    use crate::expr::{Expr, Predicate, VarTable};
    use crate::svmap::{ImageSpec, SetValuedMap};

    fn scenario_1d(f: &str, b: BarrierCandidate, init: &str, uns: &str, lo: f64, hi: f64) -> SafetyScenario {
        let v = VarTable::state(1);
        let map = SetValuedMap::uniform(
            1,
            ImageSpec::Point {
                components: vec![Expr::parse(f, &v).unwrap()],
                radius: 0.0,
            },
        )
        .unwrap();
        SafetyScenario::new(
            map,
            b,
            Predicate::parse(init, &v).unwrap(),
            Predicate::parse(uns, &v).unwrap(),
            BoxRegion::new(vec![lo], vec![hi]).unwrap(),
            vec![401],
        )
        .unwrap()
    }

    #[test]
    fn example1_nominal_passes_with_margin_two() {
        let mut s = example1();
        s.collar_width = Some(0.1);
        let g = boundary_extract(&s).unwrap();
        let r = check_nominal(&s, &g).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.sigma >= 2.0 - 1e-6, "{}", r.sigma);
        // spot values on both collar sides
        let at = |x: f64| r.trace.iter().find(|(p, _)| (p[0] - x).abs() < 1e-9).map(|t| t.1);
        if let Some(v) = at(0.1) {
            assert!((v - 2.2).abs() < 1e-9);
        }
    }

    #[test]
    fn example1_strict_fails_at_zero() {
        let s = example1();
        let g = boundary_extract(&s).unwrap();
        let r = check_robust_strict(&s, &g).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.witness_point.as_ref().unwrap()[0].abs() < 1e-8);
        assert!((r.sigma + 4.0).abs() < 1e-6);
    }

    #[test]
    fn inward_constant_field() {
        let s = scenario_1d("-1", barrier(1, "x1", Some(&["1"]), None, Smoothness::C2), "x1 <= -1", "x1 >= 1", -2.0, 2.0);
        let g = boundary_extract(&s).unwrap();
        let r = check_robust_strict(&s, &g).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!((r.sigma - 1.0).abs() < 1e-12);
        let m = synthesize_margin(&s, &g, &MarginSearch::default(), &ClarkeOptions::default()).unwrap();
        assert!((m.eps_star - 1.0).abs() < 0.01, "{}", m.eps_star);
    }

    #[test]
    fn clarke_abs_barrier() {
        let abs = || barrier(1, "abs(x1) - 1", Some(&["sign(x1)"]), Some("x1 == 0"), Smoothness::Lipschitz);
        let s = scenario_1d("-1", abs(), "abs(x1) <= 0.5", "abs(x1) >= 1.5", -2.0, 2.0);
        let g = boundary_extract(&s).unwrap();
        let r = check_clarke(&s, &g, &ClarkeOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!((r.witness_point.as_ref().unwrap()[0] + 1.0).abs() < 1e-8);
        let s = scenario_1d("-x1", abs(), "abs(x1) <= 0.5", "abs(x1) >= 1.5", -2.0, 2.0);
        let g = boundary_extract(&s).unwrap();
        let r = check_clarke(&s, &g, &ClarkeOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!((r.sigma - 1.0).abs() < 1e-6);
    }

    #[test]
    fn linear_stable_margin_and_weighted() {
        let s = scenario_1d("-x1", barrier(1, "x1 - 1", Some(&["1"]), None, Smoothness::C2), "0 <= x1 <= 1", "x1 >= 2", -3.0, 3.0);
        let g = boundary_extract(&s).unwrap();
        let r = check_uniform_unweighted(&s, &g).unwrap();
        assert!((r.sigma - 1.0).abs() < 1e-7);
        let search = MarginSearch {
            delta_max: 1.0,
            ..MarginSearch::default()
        };
        let m = synthesize_margin(&s, &g, &search, &ClarkeOptions::default()).unwrap();
        assert!((m.eps_star - 0.5).abs() < 0.01, "{}", m.eps_star);
        assert!(m.eps_o(&[1.0]).is_some());
        let re = check_strong_at(&s, &g, m.eps_star / 2.0, 9, &ClarkeOptions::default()).unwrap();
        assert_eq!(re.verdict, Verdict::Pass);

        struct One;
        impl Modulus for One {
            fn lambda1(&self, d: f64) -> f64 {
                d
            }
            fn lambda2(&self, _: &[f64]) -> f64 {
                1.0
            }
        }
        let w = check_uniform_weighted(&s, &g, &One, WeightedVariant::C1, &ClarkeOptions::default()).unwrap();
        assert!((w.sigma - 0.5).abs() < 1e-7);
        assert_eq!(w.verdict, Verdict::Pass);
    }

    #[test]
    fn example1_margin_is_zero_at_origin() {
        let s = example1();
        let g = boundary_extract(&s).unwrap();
        let search = MarginSearch {
            delta_max: 1.0,
            ..MarginSearch::default()
        };
        let m = synthesize_margin(&s, &g, &search, &ClarkeOptions::default()).unwrap();
        assert!(!m.pass);
        assert_eq!(m.eps_o(&[0.0]), Some(0.0));
        assert!(m.witness_point.unwrap()[0].abs() < 1e-8);
    }

    #[test]
    fn scaled_barrier_keeps_normalized_sigma() {
        let s = example1();
        let g = boundary_extract(&s).unwrap();
        let mut t = s.clone();
        t.barrier = barrier(1, "10*x1*(x1+2)", Some(&["20*x1+20"]), None, Smoothness::C2);
        let gt = boundary_extract(&t).unwrap();
        let a = check_uniform_unweighted(&s, &g).unwrap();
        let b = check_uniform_unweighted(&t, &gt).unwrap();
        assert!((a.sigma - b.sigma).abs() < 1e-9);
        assert_eq!(a.verdict, b.verdict);
        assert_eq!(
            check_robust_strict(&s, &g).unwrap().verdict,
            check_robust_strict(&t, &gt).unwrap().verdict
        );
    }
}
