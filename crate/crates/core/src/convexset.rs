//! Nonempty convex compact sets represented as `hull(points) ⊕ r·B`.
//!
//! Every set-valued image in this crate has this form, and the form is
//! closed under Minkowski sums. Support functions are the computational
//! primitive: containment, Hausdorff distance and inner-product bounds
//! are all phrased through them. In 1-D every operation is exact; for
//! `n >= 2` containment and Hausdorff distance use a sampled direction set
//! (see [`Directions`]).

use std::f64::consts::PI;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, norm, Directions};

/// Angular resolution used when an unequal-radius ball is replaced by a
/// circumscribed polygon in 2-D.
pub const HULL_UNION_ANGLE: f64 = PI / 32.0;

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexCompactSet {
    dim: usize,
    coords: Vec<f64>,
    radius: f64,
}

impl ConvexCompactSet {
    pub fn new(points: Vec<Vec<f64>>, radius: f64) -> Result<Self> {
        let dim = points
            .first()
            .map(|p| p.len())
            .ok_or_else(|| Error::InvalidSet("point list is empty".into()))?;
        if dim == 0 {
            return Err(Error::InvalidSet("points must have positive dimension".into()));
        }
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::InvalidSet(format!("radius must be finite and >= 0, got {radius}")));
        }
        let mut coords = Vec::with_capacity(dim * points.len());
        for p in &points {
            check_dim(dim, p.len())?;
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidSet(format!("non-finite point {p:?}")));
            }
            coords.extend_from_slice(p);
        }
        let mut s = Self { dim, coords, radius };
        s.reduce();
        Ok(s)
    }

    pub fn singleton(p: &[f64]) -> Self {
        Self {
            dim: p.len(),
            coords: p.to_vec(),
            radius: 0.0,
        }
    }

    /// `center ⊕ r·B`.
    pub fn ball(center: &[f64], radius: f64) -> Result<Self> {
        Self::new(vec![center.to_vec()], radius)
    }

    /// Closed interval `[lo, hi]` in 1-D.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::InvalidSet(format!("empty interval [{lo}, {hi}]")));
        }
        Self::new(vec![vec![lo], vec![hi]], 0.0)
    }

    pub(crate) fn from_flat(dim: usize, coords: Vec<f64>, radius: f64) -> Self {
        debug_assert!(!coords.is_empty() && coords.len() % dim == 0);
        let mut s = Self { dim, coords, radius };
        s.reduce();
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn num_points(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn point_list(&self) -> Vec<Vec<f64>> {
        self.points().map(|p| p.to_vec()).collect()
    }

    pub fn is_singleton(&self) -> bool {
        self.radius == 0.0 && self.num_points() == 1
    }

    /// `max_{p} <p, d> + r |d|`.
    pub fn support(&self, d: &[f64]) -> Result<f64> {
        check_dim(self.dim, d.len())?;
        if d.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite direction {d:?}")));
        }
        Ok(self.support_unchecked(d))
    }

    #[inline]
    pub(crate) fn support_unchecked(&self, d: &[f64]) -> f64 {
        let best = self
            .points()
            .map(|p| dot(p, d))
            .fold(f64::NEG_INFINITY, f64::max);
        if self.radius > 0.0 {
            best + self.radius * norm(d)
        } else {
            best
        }
    }

    /// A point of the set attaining `support(d)`; ties go to the first
    /// stored point.
    pub fn maximizer(&self, d: &[f64]) -> Vec<f64> {
        let mut best = f64::NEG_INFINITY;
        let mut arg = self.points().next().unwrap();
        for p in self.points() {
            let v = dot(p, d);
            if v > best {
                best = v;
                arg = p;
            }
        }
        let n = norm(d);
        if self.radius > 0.0 && n > 0.0 {
            arg.iter().zip(d).map(|(p, di)| p + self.radius * di / n).collect()
        } else {
            arg.to_vec()
        }
    }

    /// `[min, max]` of a 1-D set.
    pub fn interval_bounds(&self) -> Option<(f64, f64)> {
        if self.dim != 1 {
            return None;
        }
        Some((-self.support_unchecked(&[-1.0]), self.support_unchecked(&[1.0])))
    }

    pub fn inflate(&self, r: f64) -> Self {
        Self {
            dim: self.dim,
            coords: self.coords.clone(),
            radius: self.radius + r.max(0.0),
        }
    }

    pub fn translate(&self, v: &[f64]) -> Self {
        let coords = self
            .coords
            .chunks_exact(self.dim)
            .flat_map(|p| p.iter().zip(v).map(|(a, b)| a + b))
            .collect();
        Self {
            dim: self.dim,
            coords,
            radius: self.radius,
        }
    }

    pub fn negate(&self) -> Self {
        Self::from_flat(self.dim, self.coords.iter().map(|x| -x).collect(), self.radius)
    }

    /// `A ⊕ B`: pairwise point sums, radii add.
    pub fn minkowski_sum(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let mut coords = Vec::with_capacity(self.coords.len() * other.num_points());
        for p in self.points() {
            for q in other.points() {
                coords.extend(p.iter().zip(q).map(|(a, b)| a + b));
            }
        }
        Ok(Self::from_flat(self.dim, coords, self.radius + other.radius))
    }

    /// Smallest set of this representation containing `A ∪ B` (up to the
    /// polygonal outer approximation used when the radii differ in 2-D).
    ///
    /// With unequal radii the result keeps the smaller radius; the excess
    /// radius of the other operand is replaced by explicit points (exact in
    /// 1-D, a circumscribed polygon at [`HULL_UNION_ANGLE`] in 2-D). For
    /// `n >= 3` the larger radius is kept instead.
    pub fn hull_union(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        if self.radius == other.radius {
            let mut coords = self.coords.clone();
            coords.extend_from_slice(&other.coords);
            return Ok(Self::from_flat(self.dim, coords, self.radius));
        }
        let (small, large) = if self.radius < other.radius {
            (self, other)
        } else {
            (other, self)
        };
        let excess = large.radius - small.radius;
        let mut coords = small.coords.clone();
        match self.dim {
            1 => {
                for p in large.points() {
                    coords.push(p[0] - excess);
                    coords.push(p[0] + excess);
                }
                Ok(Self::from_flat(1, coords, small.radius))
            }
            2 => {
                let k = (2.0 * PI / HULL_UNION_ANGLE).round() as usize;
                let outer = excess / (HULL_UNION_ANGLE / 2.0).cos();
                for p in large.points() {
                    for j in 0..k {
                        let th = 2.0 * PI * j as f64 / k as f64;
                        coords.push(p[0] + outer * th.cos());
                        coords.push(p[1] + outer * th.sin());
                    }
                }
                Ok(Self::from_flat(2, coords, small.radius))
            }
            _ => {
                coords.extend_from_slice(&large.coords);
                Ok(Self::from_flat(self.dim, coords, large.radius))
            }
        }
    }

    /// Extreme points of the set: the hull vertices when `r = 0`, the two
    /// endpoints in 1-D, and otherwise each vertex pushed out by `r` along
    /// 16 sampled directions.
    pub fn extreme_points(&self) -> Vec<Vec<f64>> {
        if self.dim == 1 {
            let (lo, hi) = self.interval_bounds().expect("1-D set");
            return if lo == hi { vec![vec![lo]] } else { vec![vec![lo], vec![hi]] };
        }
        if self.radius == 0.0 {
            return self.point_list();
        }
        let dirs = Directions::new(self.dim, 16);
        let mut coords = Vec::new();
        for p in self.points() {
            for d in dirs.iter() {
                coords.extend(p.iter().zip(d).map(|(a, b)| a + self.radius * b));
            }
        }
        Self::from_flat(self.dim, coords, 0.0).point_list()
    }

    /// Hull of the union of several sets; equivalent to folding
    /// [`hull_union`](Self::hull_union) but reduces only once when all radii
    /// agree.
    pub fn hull_all<'a>(sets: impl IntoIterator<Item = &'a Self>) -> Result<Self> {
        let mut iter = sets.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::InvalidSet("hull of an empty family".into()))?;
        let mut coords = first.coords.clone();
        let mut rest = Vec::new();
        for s in iter {
            check_dim(first.dim, s.dim)?;
            if s.radius == first.radius {
                coords.extend_from_slice(&s.coords);
            } else {
                rest.push(s);
            }
        }
        let mut acc = Self::from_flat(first.dim, coords, first.radius);
        for s in rest {
            acc = acc.hull_union(s)?;
        }
        Ok(acc)
    }

    /// Hausdorff distance using the default direction set for this
    /// dimension (exact in 1-D and when either set is a single point).
    pub fn hausdorff(&self, other: &Self) -> Result<f64> {
        let dirs = Directions::default_for(self.dim);
        self.hausdorff_with(other, &dirs)
    }

    /// `max_d |h_A(d) - h_B(d)|` over the sampled directions.
    pub fn hausdorff_with(&self, other: &Self, dirs: &Directions) -> Result<f64> {
        check_dim(self.dim, other.dim)?;
        check_dim(self.dim, dirs.dim())?;
        if other.is_singleton() {
            return Ok(self.farthest_from(&other.coords));
        }
        if self.is_singleton() {
            return Ok(other.farthest_from(&self.coords));
        }
        Ok(dirs
            .iter()
            .map(|d| (self.support_unchecked(d) - other.support_unchecked(d)).abs())
            .fold(0.0, f64::max))
    }

    /// One-sided excess `max_d (h_A(d) - h_B(d))^+` of `self` over `other`.
    pub fn excess_over(&self, other: &Self, dirs: &Directions) -> Result<f64> {
        check_dim(self.dim, other.dim)?;
        check_dim(self.dim, dirs.dim())?;
        Ok(dirs
            .iter()
            .map(|d| self.support_unchecked(d) - other.support_unchecked(d))
            .fold(0.0, f64::max))
    }

    /// Exact Hausdorff distance from a single point `q`: the farthest
    /// point of a convex set from `q` is a hull vertex pushed out by `r`.
    fn farthest_from(&self, q: &[f64]) -> f64 {
        let far = self
            .points()
            .map(|p| crate::linalg::dist(p, q))
            .fold(0.0, f64::max);
        far + self.radius
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        let dirs = Directions::default_for(self.dim);
        self.contains_with(x, tol, &dirs)
    }

    /// `<x, d> <= h_S(d) + tol` for every sampled unit direction `d`.
    pub fn contains_with(&self, x: &[f64], tol: f64, dirs: &Directions) -> Result<bool> {
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, dirs.dim())?;
        if !(tol >= 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be >= 0, got {tol}")));
        }
        Ok(dirs
            .iter()
            .all(|d| dot(x, d) <= self.support_unchecked(d) + tol))
    }

    /// Drop points that cannot attain the support in any direction.
    fn reduce(&mut self) {
        let n = self.num_points();
        if n <= 1 {
            return;
        }
        match self.dim {
            1 => {
                let lo = self.coords.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = self.coords.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                self.coords = if lo == hi { vec![lo] } else { vec![lo, hi] };
            }
            2 => self.coords = convex_hull_2d(&self.coords),
            _ => {
                let mut pts: Vec<&[f64]> = self.coords.chunks_exact(self.dim).collect();
                pts.sort_by(|a, b| crate::linalg::lex_cmp(a, b));
                pts.dedup();
                self.coords = pts.concat();
            }
        }
    }
}

/// Andrew's monotone chain; returns the strict hull vertices (collinear
/// points dropped) as flat coordinates, counter-clockwise.
fn convex_hull_2d(coords: &[f64]) -> Vec<f64> {
    let mut pts: Vec<[f64; 2]> = coords.chunks_exact(2).map(|p| [p[0], p[1]]).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() <= 2 {
        return pts.concat();
    }
    let cross = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for p in pts.iter() {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(*p);
    }
    let lower_len = hull.len() + 1;
    for p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    hull.concat()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetRepr {
    points: Vec<Vec<f64>>,
    radius: f64,
}

impl Serialize for ConvexCompactSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SetRepr {
            points: self.point_list(),
            radius: self.radius,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConvexCompactSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = SetRepr::deserialize(d)?;
        ConvexCompactSet::new(r.points, r.radius).map_err(serde::de::Error::custom)
    }
}
