//! Piecewise set-valued maps and their perturbations.
//!
//! A [`SetValuedMap`] is an ordered list of pieces, each a closed region
//! predicate paired with an image rule. Where several predicates hold the
//! image is the convex hull of all matching piece images, which keeps every
//! image convex. [`PerturbedSystem`] adds the image-inflated and the
//! argument-and-image ("strong") perturbations.

use crate::convexset::ConvexCompactSet;
use crate::error::{check_dim, Error, Result};
use crate::expr::{Expr, Predicate};
use crate::linalg::{bisect_largest, unit_ball_lattice, BoxRegion, Directions};
use crate::modulus::Modulus;

/// Default number of lattice points per axis for argument-ball sampling.
pub const DEFAULT_DENSITY: usize = 9;

/// Relative tolerance of the margin bisections.
pub const MARGIN_REL_TOL: f64 = 1e-3;

/// How a piece produces its image set from the state.
#[derive(Clone, Debug)]
pub enum ImageSpec {
    /// A fixed set, independent of `x`.
    Constant(ConvexCompactSet),
    /// `{A x + b} ⊕ r·B`, with `A` given row by row.
    Affine {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        radius: f64,
    },
    /// `{(f_1(x), .., f_n(x))} ⊕ r·B` for componentwise expressions.
    Point { components: Vec<Expr>, radius: f64 },
    /// Hull of several expression-valued points, inflated by `r`.
    Hull { points: Vec<Vec<Expr>>, radius: f64 },
}

impl ImageSpec {
    fn eval(&self, x: &[f64]) -> Result<ConvexCompactSet> {
        match self {
            ImageSpec::Constant(s) => Ok(s.clone()),
            ImageSpec::Affine { a, b, radius } => {
                let p: Vec<f64> = a
                    .iter()
                    .zip(b)
                    .map(|(row, bi)| crate::linalg::dot(row, x) + bi)
                    .collect();
                ConvexCompactSet::new(vec![p], *radius)
            }
            ImageSpec::Point { components, radius } => {
                let p = components.iter().map(|e| e.eval(x)).collect();
                ConvexCompactSet::new(vec![p], *radius)
            }
            ImageSpec::Hull { points, radius } => {
                let pts = points
                    .iter()
                    .map(|c| c.iter().map(|e| e.eval(x)).collect())
                    .collect();
                ConvexCompactSet::new(pts, *radius)
            }
        }
    }

    fn output_dim(&self) -> Option<usize> {
        match self {
            ImageSpec::Constant(s) => Some(s.dim()),
            ImageSpec::Affine { a, b, .. } => {
                if a.len() == b.len() {
                    Some(b.len())
                } else {
                    None
                }
            }
            ImageSpec::Point { components, .. } => Some(components.len()),
            ImageSpec::Hull { points, .. } => {
                let n = points.first()?.len();
                points.iter().all(|p| p.len() == n).then_some(n)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Piece {
    pub region: Predicate,
    pub image: ImageSpec,
}

impl Piece {
    pub fn new(region: Predicate, image: ImageSpec) -> Self {
        Self { region, image }
    }

    /// A piece valid everywhere.
    pub fn everywhere(image: ImageSpec) -> Self {
        Self::new(Predicate::always(), image)
    }
}

/// Piecewise set-valued right-hand side `F : R^n ⇉ R^n`.
#[derive(Clone, Debug)]
pub struct SetValuedMap {
    dim: usize,
    pieces: Vec<Piece>,
}

impl SetValuedMap {
    pub fn new(dim: usize, pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidArgument("a map needs at least one piece".into()));
        }
        for (i, p) in pieces.iter().enumerate() {
            let out = p.image.output_dim().ok_or_else(|| {
                Error::InvalidArgument(format!("piece {i}: inconsistent image dimensions"))
            })?;
            check_dim(dim, out)?;
            if let ImageSpec::Affine { a, .. } = &p.image {
                if a.iter().any(|row| row.len() != dim) {
                    return Err(Error::InvalidArgument(format!(
                        "piece {i}: affine matrix must be {dim}x{dim}"
                    )));
                }
            }
        }
        Ok(Self { dim, pieces })
    }

    /// Single-piece map.
    pub fn uniform(dim: usize, image: ImageSpec) -> Result<Self> {
        Self::new(dim, vec![Piece::everywhere(image)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Hull of the images of every piece whose predicate holds at `x`.
    pub fn image(&self, x: &[f64]) -> Result<ConvexCompactSet> {
        check_dim(self.dim, x.len())?;
        let mut hits = Vec::with_capacity(2);
        for p in &self.pieces {
            if p.region.holds(x) {
                hits.push(p.image.eval(x)?);
            }
        }
        match hits.len() {
            0 => Err(Error::NoPieceMatches { point: x.to_vec() }),
            1 => Ok(hits.pop().unwrap()),
            _ => ConvexCompactSet::hull_all(&hits),
        }
    }

    /// Hull of `F(c + r u)` over the lattice points `u` (unit-ball lattice).
    pub fn image_over(
        &self,
        c: &[f64],
        r: f64,
        lattice: &[Vec<f64>],
    ) -> Result<ConvexCompactSet> {
        if r == 0.0 {
            return self.image(c);
        }
        let mut y = vec![0.0; self.dim];
        let sets = lattice
            .iter()
            .map(|u| {
                for ((yi, ci), ui) in y.iter_mut().zip(c).zip(u) {
                    *yi = ci + r * ui;
                }
                self.image(&y)
            })
            .collect::<Result<Vec<_>>>()?;
        ConvexCompactSet::hull_all(&sets)
    }
}

/// Perturbation radius `ε(x)`.
#[derive(Clone, Debug)]
pub enum Margin {
    Constant(f64),
    Field(Expr),
}

impl Margin {
    pub fn at(&self, x: &[f64]) -> f64 {
        match self {
            Margin::Constant(c) => *c,
            Margin::Field(e) => e.eval(x),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbMode {
    /// `F(x)`.
    None,
    /// `F(x) + ε(x) B`.
    Image,
    /// `co F(x + ε(x) B) + ε(x) B`.
    Strong,
}

/// A set-valued map together with a perturbation rule.
///
/// In strong mode the argument ball may use its own radius (`sensing`),
/// which models independent measurement and actuation noise; by default
/// both radii equal the margin.
#[derive(Clone, Debug)]
pub struct PerturbedSystem {
    base: SetValuedMap,
    margin: Margin,
    sensing: Option<Margin>,
    mode: PerturbMode,
    density: usize,
    reverse: bool,
    lattice: Vec<Vec<f64>>,
}

impl PerturbedSystem {
    pub fn new(base: SetValuedMap, margin: Margin, mode: PerturbMode) -> Self {
        let lattice = centered_lattice(base.dim(), DEFAULT_DENSITY);
        Self {
            base,
            margin,
            sensing: None,
            mode,
            density: DEFAULT_DENSITY,
            reverse: false,
            lattice,
        }
    }

    /// The unperturbed system.
    pub fn nominal(base: SetValuedMap) -> Self {
        Self::new(base, Margin::Constant(0.0), PerturbMode::None)
    }

    pub fn with_density(mut self, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidArgument(format!(
                "argument-ball density must be at least 2, got {m}"
            )));
        }
        self.density = m;
        self.lattice = centered_lattice(self.base.dim(), m);
        Ok(self)
    }

    pub fn with_sensing(mut self, sensing: Margin) -> Self {
        self.sensing = Some(sensing);
        self
    }

    /// Backward system `ẋ ∈ -F(x)` (perturbations applied before negation).
    pub fn reversed(mut self) -> Self {
        self.reverse = !self.reverse;
        self
    }

    pub fn base(&self) -> &SetValuedMap {
        &self.base
    }

    pub fn mode(&self) -> PerturbMode {
        self.mode
    }

    pub fn margin(&self) -> &Margin {
        &self.margin
    }

    pub fn density(&self) -> usize {
        self.density
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// `true` when the images are inner approximations of the exact sets.
    pub fn is_inner_approximation(&self) -> bool {
        self.mode == PerturbMode::Strong
    }

    fn eps_at(&self, x: &[f64]) -> Result<f64> {
        let e = self.margin.at(x);
        if self.mode != PerturbMode::None && !(e > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "perturbation margin must be > 0, got {e} at {x:?}"
            )));
        }
        Ok(e)
    }

    fn sensing_at(&self, x: &[f64], eps: f64) -> Result<f64> {
        match &self.sensing {
            None => Ok(eps),
            Some(m) => {
                let s = m.at(x);
                if s < 0.0 || !s.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "sensing margin must be >= 0, got {s} at {x:?}"
                    )));
                }
                Ok(s)
            }
        }
    }

    fn oriented(&self, s: ConvexCompactSet) -> ConvexCompactSet {
        if self.reverse {
            s.negate()
        } else {
            s
        }
    }

    /// Image of the system in its configured mode.
    pub fn image(&self, x: &[f64]) -> Result<ConvexCompactSet> {
        match self.mode {
            PerturbMode::None => Ok(self.oriented(self.base.image(x)?)),
            PerturbMode::Image => self.image_perturbed(x),
            PerturbMode::Strong => self.image_strong(x),
        }
    }

    /// `F(x) + ε(x) B`.
    pub fn image_perturbed(&self, x: &[f64]) -> Result<ConvexCompactSet> {
        let eps = self.eps_at(x)?;
        Ok(self.oriented(self.base.image(x)?.inflate(eps)))
    }

    /// Lattice inner approximation of `co F(x + ε(x) B) + ε(x) B`.
    pub fn image_strong(&self, x: &[f64]) -> Result<ConvexCompactSet> {
        let eps = self.eps_at(x)?;
        let arg = self.sensing_at(x, eps)?;
        self.strong_at(x, arg, eps)
    }

    /// Strong image with explicit argument radius and image inflation.
    pub fn strong_at(&self, x: &[f64], arg: f64, inflate: f64) -> Result<ConvexCompactSet> {
        let hull = self.base.image_over(x, arg, &self.lattice)?;
        Ok(self.oriented(hull.inflate(inflate)))
    }

    /// Outer bound of the strong image: the lattice hull inflated by the
    /// modulus bound for the lattice covering radius.
    pub fn image_strong_outer(&self, x: &[f64], m: &dyn Modulus) -> Result<ConvexCompactSet> {
        let eps = self.eps_at(x)?;
        let arg = self.sensing_at(x, eps)?;
        let n = self.dim() as f64;
        let cover = arg * 2.0 / (self.density - 1) as f64 * n.sqrt();
        let mut y = vec![0.0; self.dim()];
        let mut l2 = 0.0f64;
        for u in &self.lattice {
            for ((yi, xi), ui) in y.iter_mut().zip(x).zip(u) {
                *yi = xi + arg * ui;
            }
            l2 = l2.max(m.lambda2(&y));
        }
        let hull = self.base.image_over(x, arg, &self.lattice)?;
        Ok(self.oriented(hull.inflate(eps + m.lambda1(cover) * l2)))
    }
}

/// `unit_ball_lattice` with the origin forced in (even densities omit it).
pub(crate) fn centered_lattice(dim: usize, m: usize) -> Vec<Vec<f64>> {
    let mut l = unit_ball_lattice(dim, m);
    if m % 2 == 0 {
        l.push(vec![0.0; dim]);
    }
    l
}

/// Outcome of a margin bisection.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginEstimate {
    pub delta: f64,
    /// A sample that failed at the first rejected radius, if any radius was
    /// rejected: the base point and the offending perturbed velocity.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

/// Settings shared by the margin searches.
#[derive(Clone, Debug)]
pub struct MarginSearch {
    /// `[0, delta_max]`.
    pub delta_max: f64,
    pub rel_tol: f64,
    /// Lattice density for argument balls.
    pub density: usize,
    /// Containment tolerance.
    pub tol: f64,
}

impl Default for MarginSearch {
    fn default() -> Self {
        Self {
            delta_max: 2.0,
            rel_tol: MARGIN_REL_TOL,
            density: DEFAULT_DENSITY,
            tol: 1e-9,
        }
    }
}

/// Largest `δ` with `graph(F) + δB ⊂ graph(F_ε)` on the sampled box, where
/// `F_ε` is the strong perturbation with constant margin `ε`.
///
/// Graph points are grid nodes `x` of `region` paired with the extreme
/// points of `F(x)`; the `(u, v)` perturbations sample the unit ball of
/// `R^{2n}` by a lattice plus sphere points.
pub fn graph_inflation_margin(
    f: &SetValuedMap,
    eps: f64,
    region: &BoxRegion,
    res: &[usize],
    search: &MarginSearch,
) -> Result<MarginEstimate> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be > 0, got {eps}")));
    }
    if !(search.delta_max > 0.0) {
        return Err(Error::InvalidArgument("bracket upper end must be > 0".into()));
    }
    let n = f.dim();
    check_dim(n, region.dim())?;
    let mut graph = Vec::new();
    for x in region.grid(res) {
        for y in f.image(&x)?.extreme_points() {
            graph.push((x.clone(), y));
        }
    }
    if graph.is_empty() {
        return Err(Error::EmptySample("graph of F over the box".into()));
    }
    let mut uv = unit_ball_lattice(2 * n, if n == 1 { 9 } else { 5 });
    uv.extend(Directions::new(2 * n, 64).iter().map(|d| d.to_vec()));
    let sys = PerturbedSystem::new(f.clone(), Margin::Constant(eps), PerturbMode::Strong)
        .with_density(search.density)?;
    let dirs = Directions::default_for(n);

    let mut err = None;
    let (delta, witness) = bisect_largest(search.delta_max, search.rel_tol, |delta| {
        let mut xu = vec![0.0; n];
        let mut yv = vec![0.0; n];
        for (x, y) in &graph {
            for w in &uv {
                for i in 0..n {
                    xu[i] = x[i] + delta * w[i];
                    yv[i] = y[i] + delta * w[n + i];
                }
                let target = match sys.strong_at(&xu, eps, eps) {
                    Ok(s) => s,
                    Err(e) => {
                        err.get_or_insert(e);
                        return Err((x.clone(), yv.clone()));
                    }
                };
                if !target.contains_with(&yv, search.tol, &dirs).unwrap_or(false) {
                    return Err((x.clone(), yv.clone()));
                }
            }
        }
        Ok(())
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(MarginEstimate { delta, witness })
}

/// Largest `δ(x)` with `F(x + δB) ⊂ F(x) + ε(x)B`, checked through
/// one-sided support containment over sampled directions.
pub fn continuity_margin(
    f: &SetValuedMap,
    eps_target: &Margin,
    x: &[f64],
    search: &MarginSearch,
) -> Result<MarginEstimate> {
    check_dim(f.dim(), x.len())?;
    let eps = eps_target.at(x);
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("target margin must be > 0, got {eps}")));
    }
    let base = f.image(x)?;
    let dirs = Directions::default_for(f.dim());
    let lattice = centered_lattice(f.dim(), search.density);
    let mut err = None;
    let (delta, witness) = bisect_largest(search.delta_max, search.rel_tol, |delta| {
        let spread = match f.image_over(x, delta, &lattice) {
            Ok(s) => s,
            Err(e) => {
                err.get_or_insert(e);
                return Err((x.to_vec(), vec![]));
            }
        };
        for d in dirs.iter() {
            if spread.support_unchecked(d) > base.support_unchecked(d) + eps + search.tol {
                return Err((x.to_vec(), spread.maximizer(d)));
            }
        }
        Ok(())
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(MarginEstimate { delta, witness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::VarTable;

    pub(crate) fn example1() -> SetValuedMap {
        let v = VarTable::state(1);
        let p = |s: &str| Predicate::parse(s, &v).unwrap();
        let c = |lo: f64, hi: f64| ImageSpec::Constant(ConvexCompactSet::interval(lo, hi).unwrap());
        SetValuedMap::new(
            1,
            vec![
                Piece::new(p("x1 <= 0"), c(2.0, 2.0)),
                Piece::new(p("x1 == 0"), c(-1.0, 2.0)),
                Piece::new(p("x1 >= 0"), c(-1.0, -1.0)),
            ],
        )
        .unwrap()
    }

    fn point_map(src: &str) -> SetValuedMap {
        let e = Expr::parse(src, &VarTable::state(1)).unwrap();
        SetValuedMap::uniform(
            1,
            ImageSpec::Point {
                components: vec![e],
                radius: 0.0,
            },
        )
        .unwrap()
    }

    fn bounds(s: &ConvexCompactSet) -> (f64, f64) {
        s.interval_bounds().unwrap()
    }

    #[test]
    fn example1_branches() {
        let f = example1();
        assert_eq!(bounds(&f.image(&[-3.0]).unwrap()), (2.0, 2.0));
        assert_eq!(bounds(&f.image(&[0.0]).unwrap()), (-1.0, 2.0));
        assert_eq!(bounds(&f.image(&[1.0]).unwrap()), (-1.0, -1.0));
    }

    #[test]
    fn no_piece_is_an_error() {
        let v = VarTable::state(1);
        let f = SetValuedMap::new(
            1,
            vec![Piece::new(
                Predicate::parse("x1 <= 0", &v).unwrap(),
                ImageSpec::Constant(ConvexCompactSet::singleton(&[1.0])),
            )],
        )
        .unwrap();
        assert!(matches!(f.image(&[1.0]), Err(Error::NoPieceMatches { .. })));
    }

    #[test]
    fn perturbed_images_example1() {
        let p = PerturbedSystem::new(example1(), Margin::Constant(1.0), PerturbMode::Image);
        assert_eq!(bounds(&p.image(&[-3.0]).unwrap()), (1.0, 3.0));
        assert_eq!(bounds(&p.image(&[1.0]).unwrap()), (-2.0, 0.0));
        assert_eq!(bounds(&p.image(&[0.0]).unwrap()), (-2.0, 3.0));
    }

    #[test]
    fn strong_images_example1() {
        let p = PerturbedSystem::new(example1(), Margin::Constant(0.5), PerturbMode::Strong);
        assert_eq!(bounds(&p.image(&[-1.0]).unwrap()), (1.5, 2.5));
        assert_eq!(bounds(&p.image(&[0.0]).unwrap()), (-1.5, 2.5));
        assert_eq!(bounds(&p.image(&[1.0]).unwrap()), (-1.5, -0.5));
    }

    #[test]
    fn reverse_negates() {
        let p = PerturbedSystem::nominal(example1()).reversed();
        assert_eq!(bounds(&p.image(&[-3.0]).unwrap()), (-2.0, -2.0));
    }

    #[test]
    fn nonpositive_margin_rejected() {
        let p = PerturbedSystem::new(example1(), Margin::Constant(0.0), PerturbMode::Image);
        assert!(p.image(&[0.0]).is_err());
    }

    #[test]
    fn graph_inflation_examples() {
        let region = BoxRegion::new(vec![-2.0], vec![2.0]).unwrap();
        let s = MarginSearch::default();
        let zero = point_map("0");
        let d = graph_inflation_margin(&zero, 1.0, &region, &[9], &s).unwrap();
        assert!((d.delta - 1.0).abs() < 2e-3, "{}", d.delta);
        let d = graph_inflation_margin(&zero, 0.1, &region, &[9], &s).unwrap();
        assert!((d.delta - 0.1).abs() < 2e-4, "{}", d.delta);
        let id = point_map("x1");
        let d = graph_inflation_margin(&id, 1.0, &region, &[9], &s).unwrap();
        assert!((d.delta - 2f64.sqrt()).abs() < 3e-3, "{}", d.delta);
    }

    #[test]
    fn continuity_margin_examples() {
        let s = MarginSearch::default();
        let one = Margin::Constant(1.0);
        let d = continuity_margin(&point_map("x1"), &one, &[0.7], &s).unwrap();
        assert!((d.delta - 1.0).abs() < 2e-3);
        let d = continuity_margin(&point_map("2*x1"), &one, &[-0.3], &s).unwrap();
        assert!((d.delta - 0.5).abs() < 1e-3);
        let d = continuity_margin(&point_map("3"), &one, &[5.0], &s).unwrap();
        assert_eq!(d.delta, s.delta_max);
        assert!(d.witness.is_none());
    }
}
