//! Small dense-vector helpers and deterministic direction / ball samplers.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of sampled unit directions for `n >= 2`.
pub const DEFAULT_DIRECTIONS: usize = 256;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[inline]
pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `a + s * b`
#[inline]
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Lexicographic order on coordinates, used for deterministic tie-breaking.
pub fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// A finite set of unit directions in `R^n`.
///
/// 1-D uses `{-1, +1}` exactly. 2-D uses equally spaced angles, 3-D a
/// Fibonacci sphere, and higher dimensions seeded Gaussian directions.
#[derive(Clone, Debug)]
pub struct Directions {
    dim: usize,
    coords: Vec<f64>,
}

impl Directions {
    pub fn new(dim: usize, count: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        let mut coords = Vec::new();
        match dim {
            1 => coords.extend_from_slice(&[-1.0, 1.0]),
            2 => {
                let count = count.max(4);
                for k in 0..count {
                    let th = 2.0 * PI * k as f64 / count as f64;
                    coords.push(th.cos());
                    coords.push(th.sin());
                }
            }
            3 => {
                let count = count.max(6);
                let golden = PI * (3.0 - 5f64.sqrt());
                for k in 0..count {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = golden * k as f64;
                    coords.extend_from_slice(&[r * th.cos(), r * th.sin(), z]);
                }
            }
            _ => {
                // Coordinate axes first, then seeded Gaussian directions.
                for i in 0..dim {
                    for s in [-1.0, 1.0] {
                        let mut v = vec![0.0; dim];
                        v[i] = s;
                        coords.extend(v);
                    }
                }
                let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_d1ec + dim as u64);
                let extra = count.saturating_sub(2 * dim);
                for _ in 0..extra {
                    let v = gaussian_vec(&mut rng, dim);
                    let n = norm(&v);
                    coords.extend(v.iter().map(|x| x / n));
                }
            }
        }
        Self { dim, coords }
    }

    /// Shared default direction set for `dim` (cached for small dimensions).
    pub fn default_for(dim: usize) -> Arc<Directions> {
        static CACHE: OnceLock<Vec<Arc<Directions>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| {
            (1..=6)
                .map(|d| Arc::new(Directions::new(d, DEFAULT_DIRECTIONS)))
                .collect()
        });
        if (1..=6).contains(&dim) {
            cache[dim - 1].clone()
        } else {
            Arc::new(Directions::new(dim, DEFAULT_DIRECTIONS))
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }
}

pub(crate) fn gaussian_vec(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    // Box-Muller; avoids pulling in a distributions crate for one call site.
    (0..dim)
        .map(|_| {
            let u1: f64 = rng.gen::<f64>().max(1e-300);
            let u2: f64 = rng.gen();
            (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
        })
        .collect()
}

/// Centered lattice with `m` points per axis on `[-1, 1]^n`, restricted to
/// the closed unit ball. Always contains the origin when `m` is odd.
pub fn unit_ball_lattice(dim: usize, m: usize) -> Vec<Vec<f64>> {
    assert!(m >= 2, "lattice density must be at least 2");
    let ticks: Vec<f64> = (0..m)
        .map(|k| -1.0 + 2.0 * k as f64 / (m - 1) as f64)
        .collect();
    let total = m.pow(dim as u32);
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let p: Vec<f64> = idx.iter().map(|&i| ticks[i]).collect();
        if dot(&p, &p) <= 1.0 + 1e-12 {
            out.push(p);
        }
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < m {
                break;
            }
            *slot = 0;
        }
    }
    out
}

/// `count` deterministic points in the closed unit ball.
///
/// 1-D: midpoints of `count` equal cells of `[-1, 1]`; 2-D: sunflower
/// (Vogel) spiral; higher dimensions: seeded uniform samples.
pub fn unit_ball_samples(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    match dim {
        1 => (0..count)
            .map(|k| vec![-1.0 + 2.0 * (k as f64 + 0.5) / count as f64])
            .collect(),
        2 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let r = ((k as f64 + 0.5) / count as f64).sqrt();
                    let th = golden * k as f64;
                    vec![r * th.cos(), r * th.sin()]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| {
                    let v = gaussian_vec(&mut rng, dim);
                    let n = norm(&v);
                    let r: f64 = rng.gen::<f64>().powf(1.0 / dim as f64);
                    v.iter().map(|x| x / n * r).collect()
                })
                .collect()
        }
    }
}

/// Axis-aligned box `[lo, hi]` in `R^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "box bounds must be nonempty and of equal length ({} vs {})",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "box bounds must be finite with lo <= hi: {lo:?} / {hi:?}"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Box scaled by `k` about its center.
    pub fn scaled(&self, k: f64) -> BoxRegion {
        let c = self.center();
        let lo = c
            .iter()
            .zip(&self.lo)
            .map(|(c, a)| c + k * (a - c))
            .collect();
        let hi = c
            .iter()
            .zip(&self.hi)
            .map(|(c, b)| c + k * (b - c))
            .collect();
        BoxRegion { lo, hi }
    }

    pub fn diameter(&self) -> f64 {
        dist(&self.lo, &self.hi)
    }

    /// Largest Euclidean norm of a point of the box.
    pub fn max_norm(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| a.abs().max(b.abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Grid spacing per axis for `res` nodes per axis.
    pub fn spacing(&self, res: &[usize]) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(res)
            .map(|((a, b), &n)| if n > 1 { (b - a) / (n - 1) as f64 } else { 0.0 })
            .collect()
    }

    /// Coordinate of grid node `idx` (computed as `lo + (hi-lo)*k/(n-1)`).
    pub fn node(&self, res: &[usize], idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .enumerate()
            .map(|(i, &k)| {
                let n = res[i];
                if n <= 1 {
                    0.5 * (self.lo[i] + self.hi[i])
                } else {
                    self.lo[i] + (self.hi[i] - self.lo[i]) * k as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    /// All grid nodes in row-major order (first axis fastest).
    pub fn grid(&self, res: &[usize]) -> Vec<Vec<f64>> {
        grid_indices(res)
            .into_iter()
            .map(|idx| self.node(res, &idx))
            .collect()
    }

    /// Largest `t >= 0` such that `t * d` stays in the box (assumes the
    /// origin is inside the box).
    pub fn ray_limit(&self, d: &[f64]) -> f64 {
        let mut t = f64::INFINITY;
        for (i, &di) in d.iter().enumerate() {
            if di > 0.0 {
                t = t.min(self.hi[i] / di);
            } else if di < 0.0 {
                t = t.min(self.lo[i] / di);
            }
        }
        t.max(0.0)
    }
}

/// Multi-indices of a grid with `res[i]` nodes per axis (first axis fastest).
pub fn grid_indices(res: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = res.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; res.len()];
    for _ in 0..total {
        out.push(idx.clone());
        for (slot, &n) in idx.iter_mut().zip(res) {
            *slot += 1;
            if *slot < n {
                break;
            }
            *slot = 0;
        }
    }
    out
}

/// Largest value in `[0, max]` at which `holds` is true, by bisection.
///
/// `holds` is assumed monotone (true below a threshold). Returns the largest
/// verified value together with the last failing witness, if any.
pub(crate) fn bisect_largest<W>(
    max: f64,
    rel_tol: f64,
    mut holds: impl FnMut(f64) -> std::result::Result<(), W>,
) -> (f64, Option<W>) {
    let witness = match holds(max) {
        Ok(()) => return (max, None),
        Err(w) => w,
    };
    let floor = max * rel_tol;
    let mut last = witness;
    match holds(floor) {
        Ok(()) => {}
        Err(w) => return (0.0, Some(w)),
    }
    let (mut lo, mut hi) = (floor, max);
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        match holds(mid) {
            Ok(()) => lo = mid,
            Err(w) => {
                hi = mid;
                last = w;
            }
        }
    }
    (lo, Some(last))
}
