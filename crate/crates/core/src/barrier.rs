//! Barrier candidates, safety scenarios and the boundary of `K = {B <= 0}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convexset::ConvexCompactSet;
use crate::error::{check_dim, Error, Result};
use crate::expr::{Expr, Predicate};
use crate::linalg::{grid_indices, lex_cmp, norm, unit_ball_samples, BoxRegion, Directions};
use crate::svmap::SetValuedMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothness {
    /// Lower semicontinuous.
    Lsc,
    /// Upper semicontinuous.
    Usc,
    /// Locally Lipschitz.
    Lipschitz,
    C1,
    C2,
}

impl Smoothness {
    pub fn is_continuous(self) -> bool {
        !matches!(self, Smoothness::Lsc | Smoothness::Usc)
    }

    pub fn at_least_c1(self) -> bool {
        matches!(self, Smoothness::C1 | Smoothness::C2)
    }

    pub fn at_least_lipschitz(self) -> bool {
        matches!(self, Smoothness::Lipschitz | Smoothness::C1 | Smoothness::C2)
    }

    pub fn name(self) -> &'static str {
        match self {
            Smoothness::Lsc => "lsc",
            Smoothness::Usc => "usc",
            Smoothness::Lipschitz => "lipschitz",
            Smoothness::C1 => "c1",
            Smoothness::C2 => "c2",
        }
    }
}

/// Gradients shorter than this are treated as zero.
pub const GRADIENT_FLOOR: f64 = 1e-12;

/// Scalar barrier `B` with a gradient oracle defined off a singular set.
#[derive(Clone, Debug)]
pub struct BarrierCandidate {
    dim: usize,
    value: Expr,
    gradient: Option<Vec<Expr>>,
    singular: Option<Predicate>,
    tag: Smoothness,
}

impl BarrierCandidate {
    /// `gradient = None` falls back to central differences.
    pub fn new(
        dim: usize,
        value: Expr,
        gradient: Option<Vec<Expr>>,
        singular: Option<Predicate>,
        tag: Smoothness,
    ) -> Result<Self> {
        if let Some(g) = &gradient {
            check_dim(dim, g.len())?;
        }
        if tag.at_least_c1() && singular.is_some() {
            return Err(Error::InvalidArgument(format!(
                "a {} barrier cannot declare a singular set",
                tag.name()
            )));
        }
        Ok(Self {
            dim,
            value,
            gradient,
            singular,
            tag,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tag(&self) -> Smoothness {
        self.tag
    }

    pub fn expression(&self) -> &Expr {
        &self.value
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        self.value.eval(x)
    }

    pub fn is_singular(&self, x: &[f64]) -> bool {
        self.singular.as_ref().is_some_and(|p| p.holds(x))
    }

    /// `∇B(x)`; `None` on the singular set.
    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        if self.is_singular(x) {
            return None;
        }
        Some(match &self.gradient {
            Some(g) => g.iter().map(|e| e.eval(x)).collect(),
            None => self.fd_gradient(x),
        })
    }

    /// Central finite differences with step `1e-6 (1 + |x_i|)`.
    pub fn fd_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        (0..self.dim)
            .map(|i| {
                let h = 1e-6 * (1.0 + x[i].abs());
                y[i] = x[i] + h;
                let up = self.value(&y);
                y[i] = x[i] - h;
                let down = self.value(&y);
                y[i] = x[i];
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    /// Largest mismatch between the gradient oracle and finite differences,
    /// relative to `1 + |∇B|`, over the given points (singular ones skipped).
    pub fn gradient_consistency(&self, points: &[Vec<f64>]) -> f64 {
        points
            .iter()
            .filter_map(|x| {
                let g = self.gradient(x)?;
                let fd = self.fd_gradient(x);
                let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
                Some(norm(&diff) / (1.0 + norm(&g)))
            })
            .fold(0.0, f64::max)
    }
}

/// Numerical tolerances of the checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Slack required by strict inequalities.
    pub strict: f64,
    /// Allowed violation of the non-strict (nominal) inequality.
    pub nominal: f64,
    /// `|B|` at boundary representatives after edge bisection.
    pub boundary: f64,
    /// Gradient oracle vs finite differences, relative to `1 + |∇B|`.
    pub gradient: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            strict: 1e-6,
            nominal: 1e-6,
            boundary: 1e-8,
            gradient: 1e-4,
        }
    }
}

/// `(X_o, X_u, B, F)` on a search box.
#[derive(Clone, Debug)]
pub struct SafetyScenario {
    pub map: SetValuedMap,
    pub barrier: BarrierCandidate,
    pub initial: Predicate,
    pub unsafe_set: Predicate,
    pub region: BoxRegion,
    /// Grid nodes per axis.
    pub resolution: Vec<usize>,
    pub tol: Tolerances,
    /// Half-width of the collar `U(∂K)`; defaults to two cell diameters.
    pub collar_width: Option<f64>,
    /// Explicit boundary points, required for semicontinuous barriers.
    pub boundary_points: Option<Vec<Vec<f64>>>,
}

impl SafetyScenario {
    pub fn new(
        map: SetValuedMap,
        barrier: BarrierCandidate,
        initial: Predicate,
        unsafe_set: Predicate,
        region: BoxRegion,
        resolution: Vec<usize>,
    ) -> Result<Self> {
        let n = map.dim();
        check_dim(n, barrier.dim())?;
        check_dim(n, region.dim())?;
        check_dim(n, resolution.len())?;
        if resolution.iter().any(|r| *r < 2) {
            return Err(Error::InvalidArgument("grid resolution must be >= 2 per axis".into()));
        }
        Ok(Self {
            map,
            barrier,
            initial,
            unsafe_set,
            region,
            resolution,
            tol: Tolerances::default(),
            collar_width: None,
            boundary_points: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    pub fn in_initial(&self, x: &[f64]) -> bool {
        self.initial.holds(x)
    }

    pub fn in_unsafe(&self, x: &[f64]) -> bool {
        self.unsafe_set.holds(x)
    }

    pub fn grid(&self) -> Vec<Vec<f64>> {
        self.region.grid(&self.resolution)
    }

    pub fn cell_diameter(&self) -> f64 {
        norm(&self.region.spacing(&self.resolution))
    }

    pub fn collar(&self) -> f64 {
        self.collar_width.unwrap_or(2.0 * self.cell_diameter())
    }

    /// Same scenario on a box scaled about its center, keeping the grid
    /// spacing.
    pub fn rescaled(&self, k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::InvalidArgument(format!("box scale must be > 0, got {k}")));
        }
        let mut s = self.clone();
        s.region = self.region.scaled(k);
        s.resolution = self
            .resolution
            .iter()
            .map(|r| (((*r - 1) as f64 * k).round() as usize).max(1) + 1)
            .collect();
        Ok(s)
    }
}

/// Extreme sample of a sign check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extreme {
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub pass: bool,
    pub initial_samples: usize,
    pub unsafe_samples: usize,
    /// Largest `B` over sampled `X_o` (must be `<= 0`).
    pub worst_initial: Extreme,
    /// Smallest `B` over sampled `X_u` (must be `> 0`).
    pub worst_unsafe: Extreme,
    /// Sampled points in both `X_o` and `X_u`.
    pub overlap: usize,
    pub witness: Option<Vec<f64>>,
}

fn better(a: &Extreme, b: &Extreme, larger: bool) -> bool {
    if a.value == b.value {
        lex_cmp(&a.point, &b.point).is_lt()
    } else if larger {
        a.value > b.value
    } else {
        a.value < b.value
    }
}

/// Sign conditions of the candidate on the grid samples of `X_o` and `X_u`.
pub fn candidate_check(s: &SafetyScenario) -> Result<CandidateReport> {
    let grid = s.grid();
    let mut worst_i: Option<Extreme> = None;
    let mut worst_u: Option<Extreme> = None;
    let (mut ni, mut nu, mut overlap) = (0, 0, 0);
    for x in &grid {
        let (i, u) = (s.in_initial(x), s.in_unsafe(x));
        if i && u {
            overlap += 1;
        }
        if !(i || u) {
            continue;
        }
        let e = Extreme {
            point: x.clone(),
            value: s.barrier.value(x),
        };
        if i {
            ni += 1;
            if worst_i.as_ref().map_or(true, |w| better(&e, w, true)) {
                worst_i = Some(e.clone());
            }
        }
        if u {
            nu += 1;
            if worst_u.as_ref().map_or(true, |w| better(&e, w, false)) {
                worst_u = Some(e);
            }
        }
    }
    let worst_initial =
        worst_i.ok_or_else(|| Error::EmptySample("no grid point lies in the initial set".into()))?;
    let worst_unsafe =
        worst_u.ok_or_else(|| Error::EmptySample("no grid point lies in the unsafe set".into()))?;
    let bad_i = worst_initial.value > 0.0;
    let bad_u = !(worst_unsafe.value > 0.0);
    let witness = if bad_i {
        Some(worst_initial.point.clone())
    } else if bad_u {
        Some(worst_unsafe.point.clone())
    } else {
        None
    };
    Ok(CandidateReport {
        pass: !bad_i && !bad_u && overlap == 0,
        initial_samples: ni,
        unsafe_samples: nu,
        worst_initial,
        worst_unsafe,
        overlap,
        witness,
    })
}

/// One grid cell crossed by `∂K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCell {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Points of the cell edges where `B` changes sign, refined to
    /// `|B| <= tol.boundary` when `B` is continuous there.
    pub reps: Vec<Vec<f64>>,
}

impl BoundaryCell {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }
}

/// Cells `D_i` covering the sampled boundary of `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryGrid {
    pub cells: Vec<BoundaryCell>,
    pub cell_diameter: f64,
}

impl BoundaryGrid {
    /// Distinct representatives in lexicographic order.
    pub fn representatives(&self) -> Vec<Vec<f64>> {
        let mut all: Vec<Vec<f64>> = self.cells.iter().flat_map(|c| c.reps.clone()).collect();
        all.sort_by(|a, b| lex_cmp(a, b));
        all.dedup();
        all
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Bisect the edge `[a, b]` (with `a` in `K`, `b` outside) to a point
/// where `|B| <= tol`, keeping the in-`K` end.
fn refine_edge(bar: &BarrierCandidate, a: &[f64], b: &[f64], tol: f64) -> Vec<f64> {
    let mut lo = a.to_vec();
    let mut hi = b.to_vec();
    let mut mid = lo.clone();
    for _ in 0..200 {
        if bar.value(&lo).abs() <= tol {
            return lo;
        }
        if bar.value(&hi).abs() <= tol && bar.value(&hi) <= 0.0 {
            return hi;
        }
        for i in 0..mid.len() {
            mid[i] = 0.5 * (lo[i] + hi[i]);
        }
        if mid == lo || mid == hi {
            break;
        }
        if bar.value(&mid) <= 0.0 {
            lo.clone_from(&mid);
        } else {
            hi.clone_from(&mid);
        }
    }
    lo
}

/// Cells of the scenario grid whose corners straddle `∂K`, with
/// representatives refined by edge bisection. Semicontinuous barriers
/// need explicit boundary points.
pub fn boundary_extract(s: &SafetyScenario) -> Result<BoundaryGrid> {
    let n = s.dim();
    let diam = s.cell_diameter();
    if let Some(points) = &s.boundary_points {
        if points.is_empty() {
            return Err(Error::EmptySample("explicit boundary point list is empty".into()));
        }
        let h = s.region.spacing(&s.resolution);
        let cells = points
            .iter()
            .map(|p| {
                check_dim(n, p.len())?;
                Ok(BoundaryCell {
                    lo: p.iter().zip(&h).map(|(v, d)| v - 0.5 * d).collect(),
                    hi: p.iter().zip(&h).map(|(v, d)| v + 0.5 * d).collect(),
                    reps: vec![p.clone()],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(BoundaryGrid {
            cells,
            cell_diameter: diam,
        });
    }
    if !s.barrier.tag().is_continuous() {
        return Err(Error::UnsupportedSmoothness(format!(
            "sign-change extraction needs a continuous barrier (tag {}); supply boundary points",
            s.barrier.tag().name()
        )));
    }
    let res = &s.resolution;
    let nodes = s.grid();
    let inside: Vec<bool> = nodes.iter().map(|x| s.barrier.value(x) <= 0.0).collect();
    let flat = |idx: &[usize]| -> usize {
        let mut k = 0;
        let mut stride = 1;
        for (i, r) in idx.iter().zip(res) {
            k += i * stride;
            stride *= r;
        }
        k
    };
    let cell_res: Vec<usize> = res.iter().map(|r| r - 1).collect();
    let tol = s.tol.boundary;
    let cells: Vec<BoundaryCell> = grid_indices(&cell_res)
        .par_iter()
        .filter_map(|cidx| {
            // corners of the cell
            let corners: Vec<usize> = (0..(1usize << n))
                .map(|mask| {
                    let idx: Vec<usize> = cidx
                        .iter()
                        .enumerate()
                        .map(|(i, &c)| c + ((mask >> i) & 1))
                        .collect();
                    flat(&idx)
                })
                .collect();
            let first = inside[corners[0]];
            if corners.iter().all(|&k| inside[k] == first) {
                return None;
            }
            let mut reps = Vec::new();
            for mask in 0..(1usize << n) {
                for axis in 0..n {
                    if (mask >> axis) & 1 == 1 {
                        continue;
                    }
                    let (ka, kb) = (corners[mask], corners[mask | (1 << axis)]);
                    if inside[ka] == inside[kb] {
                        continue;
                    }
                    let (a, b) = if inside[ka] { (ka, kb) } else { (kb, ka) };
                    reps.push(refine_edge(&s.barrier, &nodes[a], &nodes[b], tol));
                }
            }
            reps.sort_by(|a, b| lex_cmp(a, b));
            reps.dedup();
            let lo = nodes[corners[0]].clone();
            let hi = nodes[corners[(1 << n) - 1]].clone();
            Some(BoundaryCell { lo, hi, reps })
        })
        .collect();
    if cells.is_empty() {
        return Err(Error::EmptySample(
            "B does not change sign on the grid: the boundary of K misses the box".into(),
        ));
    }
    Ok(BoundaryGrid {
        cells,
        cell_diameter: diam,
    })
}

/// Gradient-sampling settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClarkeOptions {
    /// Sampling radius; `None` means `1e-3 (1 + |x|)`.
    pub rho: Option<f64>,
    pub samples: usize,
    pub seed: u64,
}

impl Default for ClarkeOptions {
    fn default() -> Self {
        Self {
            rho: None,
            samples: 64,
            seed: 0,
        }
    }
}

/// Convex hull of gradients sampled in `x + ρB` off the singular set;
/// the singleton `{∇B(x)}` for C1/C2 barriers.
pub fn clarke_gradient(
    b: &BarrierCandidate,
    x: &[f64],
    rho: f64,
    samples: usize,
    seed: u64,
) -> Result<ConvexCompactSet> {
    check_dim(b.dim(), x.len())?;
    if !b.tag().at_least_lipschitz() {
        return Err(Error::UnsupportedSmoothness(format!(
            "Clarke gradient needs a locally Lipschitz barrier, tag is {}",
            b.tag().name()
        )));
    }
    if b.tag().at_least_c1() {
        let g = b.gradient(x).ok_or_else(|| Error::AllSamplesSingular {
            point: x.to_vec(),
            samples: 1,
        })?;
        return Ok(ConvexCompactSet::singleton(&g));
    }
    if !(rho > 0.0) || samples == 0 {
        return Err(Error::InvalidArgument("Clarke sampling needs rho > 0 and N >= 1".into()));
    }
    let mut y = x.to_vec();
    let grads: Vec<Vec<f64>> = unit_ball_samples(b.dim(), samples, seed)
        .iter()
        .filter_map(|u| {
            for ((yi, xi), ui) in y.iter_mut().zip(x).zip(u) {
                *yi = xi + rho * ui;
            }
            b.gradient(&y)
        })
        .collect();
    if grads.is_empty() {
        return Err(Error::AllSamplesSingular {
            point: x.to_vec(),
            samples,
        });
    }
    ConvexCompactSet::new(grads, 0.0)
}

/// Clarke gradient with default radius `1e-3 (1 + |x|)` unless overridden.
pub fn clarke_with(b: &BarrierCandidate, x: &[f64], o: &ClarkeOptions) -> Result<ConvexCompactSet> {
    let rho = o.rho.unwrap_or(1e-3 * (1.0 + norm(x)));
    clarke_gradient(b, x, rho, o.samples, o.seed)
}

/// `∂_P B(x) = {∇B(x)}` for C2 barriers; other tags are unsupported.
pub fn proximal_subdifferential(b: &BarrierCandidate, x: &[f64]) -> Result<ConvexCompactSet> {
    check_dim(b.dim(), x.len())?;
    if b.tag() != Smoothness::C2 {
        return Err(Error::UnsupportedSmoothness(format!(
            "proximal subdifferential is only available for C2 barriers, tag is {}",
            b.tag().name()
        )));
    }
    let g = b.gradient(x).expect("C2 barriers have no singular set");
    Ok(ConvexCompactSet::singleton(&g))
}

/// Which part of the collar `U(∂K)` to sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CollarSide {
    /// `U(∂K) \ K` (where `B > 0`).
    Outer,
    /// Both sides.
    Both,
}

/// Samples of the collar of half-width `width` around the boundary
/// representatives: grid nodes within `width` of a representative, plus
/// points along the (normalized) gradient ray through each representative.
pub fn collar_samples(
    s: &SafetyScenario,
    g: &BoundaryGrid,
    width: f64,
    side: CollarSide,
) -> Vec<Vec<f64>> {
    const RAY: usize = 8;
    let reps = g.representatives();
    let keep = |x: &[f64]| -> bool {
        s.region.contains(x)
            && match side {
                CollarSide::Outer => s.barrier.value(x) > 0.0,
                CollarSide::Both => true,
            }
    };
    let mut out: Vec<Vec<f64>> = s
        .grid()
        .into_par_iter()
        .filter(|x| keep(x) && reps.iter().any(|r| crate::linalg::dist(x, r) <= width))
        .collect();
    for r in &reps {
        let d = match s.barrier.gradient(r) {
            Some(v) if norm(&v) > GRADIENT_FLOOR => v,
            _ => s.barrier.fd_gradient(r),
        };
        let nd = norm(&d);
        let dirs: Vec<Vec<f64>> = if nd > GRADIENT_FLOOR {
            vec![d.iter().map(|v| v / nd).collect()]
        } else {
            Directions::new(s.dim(), 8).iter().map(|v| v.to_vec()).collect()
        };
        for dir in &dirs {
            for k in 1..=RAY {
                let t = width * k as f64 / RAY as f64;
                for sign in [1.0, -1.0] {
                    let x: Vec<f64> = r.iter().zip(dir).map(|(a, b)| a + sign * t * b).collect();
                    if keep(&x) {
                        out.push(x);
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| lex_cmp(a, b));
    out.dedup();
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::expr::VarTable;
    use crate::svmap::{ImageSpec, Piece};

    pub(crate) fn barrier(dim: usize, b: &str, grad: Option<&[&str]>, sing: Option<&str>, tag: Smoothness) -> BarrierCandidate {
        let v = VarTable::state(dim);
        BarrierCandidate::new(
            dim,
            Expr::parse(b, &v).unwrap(),
            grad.map(|g| g.iter().map(|e| Expr::parse(e, &v).unwrap()).collect()),
            sing.map(|p| Predicate::parse(p, &v).unwrap()),
            tag,
        )
        .unwrap()
    }

    pub(crate) fn example1() -> SafetyScenario {
        let v = VarTable::state(1);
        let p = |s: &str| Predicate::parse(s, &v).unwrap();
        let c = |lo: f64, hi: f64| ImageSpec::Constant(ConvexCompactSet::interval(lo, hi).unwrap());
        let f = SetValuedMap::new(
            1,
            vec![
                Piece::new(p("x1 <= 0"), c(2.0, 2.0)),
                Piece::new(p("x1 == 0"), c(-1.0, 2.0)),
                Piece::new(p("x1 >= 0"), c(-1.0, -1.0)),
            ],
        )
        .unwrap();
        SafetyScenario::new(
            f,
            barrier(1, "x1*(x1+2)", Some(&["2*x1+2"]), None, Smoothness::C2),
            p("-2 <= x1 <= 0"),
            p("x1 < -2 or x1 > 0"),
            BoxRegion::new(vec![-3.0], vec![3.0]).unwrap(),
            vec![1001],
        )
        .unwrap()
    }

    #[test]
    fn example1_candidate_and_boundary() {
        let s = example1();
        assert!(candidate_check(&s).unwrap().pass);
        let g = boundary_extract(&s).unwrap();
        let reps = g.representatives();
        assert_eq!(reps.len(), 2);
        assert!((reps[0][0] + 2.0).abs() < 1e-8);
        assert!(reps[1][0].abs() < 1e-8);
        for r in &reps {
            assert!(s.barrier.value(r).abs() <= 1e-8);
        }
    }

    #[test]
    fn constant_barrier_fails_candidate_check() {
        let mut s = example1();
        s.barrier = barrier(1, "1", Some(&["0"]), None, Smoothness::C2);
        let r = candidate_check(&s).unwrap();
        assert!(!r.pass);
        assert!(s.in_initial(r.witness.as_ref().unwrap()));
    }

    #[test]
    fn circle_boundary() {
        let v = VarTable::state(2);
        let f = SetValuedMap::uniform(2, ImageSpec::Constant(ConvexCompactSet::singleton(&[0.0, 0.0]))).unwrap();
        let s = SafetyScenario::new(
            f,
            barrier(2, "x1^2 + x2^2 - 1", Some(&["2*x1", "2*x2"]), None, Smoothness::C2),
            Predicate::parse("x1^2 + x2^2 <= 0.25", &v).unwrap(),
            Predicate::parse("x1^2 + x2^2 >= 4", &v).unwrap(),
            BoxRegion::new(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap(),
            vec![41, 41],
        )
        .unwrap();
        let g = boundary_extract(&s).unwrap();
        assert!(!g.is_empty());
        for r in g.representatives() {
            assert!((norm(&r) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn clarke_examples() {
        let abs = barrier(1, "abs(x1)", Some(&["sign(x1)"]), Some("x1 == 0"), Smoothness::Lipschitz);
        let c = clarke_gradient(&abs, &[0.0], 0.01, 64, 0).unwrap();
        assert_eq!(c.interval_bounds(), Some((-1.0, 1.0)));
        let c = clarke_gradient(&abs, &[1.0], 0.01, 64, 0).unwrap();
        assert_eq!(c.interval_bounds(), Some((1.0, 1.0)));
        let mx = barrier(
            2,
            "max(x1, x2)",
            Some(&["(1 + sign(x1 - x2))/2", "(1 - sign(x1 - x2))/2"]),
            Some("x1 == x2"),
            Smoothness::Lipschitz,
        );
        let c = clarke_gradient(&mx, &[0.0, 0.0], 0.01, 64, 0).unwrap();
        let target = ConvexCompactSet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], 0.0).unwrap();
        assert!(c.hausdorff(&target).unwrap() < 1e-12);
    }

    #[test]
    fn clarke_all_singular() {
        let b = barrier(1, "abs(x1)", Some(&["sign(x1)"]), Some("true"), Smoothness::Lipschitz);
        assert!(matches!(
            clarke_gradient(&b, &[0.0], 0.01, 8, 0),
            Err(Error::AllSamplesSingular { .. })
        ));
    }

    #[test]
    fn proximal_examples() {
        let sq = barrier(1, "x1^2", Some(&["2*x1"]), None, Smoothness::C2);
        assert_eq!(proximal_subdifferential(&sq, &[3.0]).unwrap().point_list(), vec![vec![6.0]]);
        let lin = barrier(2, "x2", Some(&["0", "1"]), None, Smoothness::C2);
        assert_eq!(
            proximal_subdifferential(&lin, &[4.0, -1.0]).unwrap().point_list(),
            vec![vec![0.0, 1.0]]
        );
        let lip = barrier(1, "abs(x1)", None, None, Smoothness::Lipschitz);
        assert!(matches!(
            proximal_subdifferential(&lip, &[1.0]),
            Err(Error::UnsupportedSmoothness(_))
        ));
    }

    #[test]
    fn fd_gradient_matches_oracle() {
        let s = example1();
        let pts: Vec<Vec<f64>> = (0..20).map(|k| vec![-3.0 + 0.3 * k as f64]).collect();
        assert!(s.barrier.gradient_consistency(&pts) < 1e-4);
    }

    #[test]
    fn collar_outer_side_only() {
        let s = example1();
        let g = boundary_extract(&s).unwrap();
        let c = collar_samples(&s, &g, 0.1, CollarSide::Outer);
        assert!(!c.is_empty());
        assert!(c.iter().all(|x| s.barrier.value(x) > 0.0));
        assert!(c.iter().any(|x| x[0] > 0.0) && c.iter().any(|x| x[0] < -2.0));
    }
}
