//! Factored continuity moduli for set-valued maps.
//!
//! Given `F`, [`build_modulus`] tabulates
//!
//! ```text
//! g(y, s)    = H(F(y + sB), F(y)) - H(F(sB), F(0))
//! β(r, δ)    = max { g(y, s) : |y| <= r, s <= δ }
//! c(a, b)    = ln β(e^a, e^b)
//! ```
//!
//! on a logarithmic grid and runs the `ā → g_o → g → h → α` chain, ending
//! with `λ1(δ) = max(α(δ), H(F(δB), F(0)))` and `λ2(x) = α(|x|) + 1`, so that
//! `F(x + δB) ⊂ F(x) + λ1(δ) λ2(x) B`.
//!
//! Tabulation is conservative: `β` at node `(i, j)` holds the sampled value
//! at `(i + 1, j + 1)`, so the bound between nodes uses the cell's upper
//! corner. Values below [`BETA_ZERO`] count as zero and map to
//! [`C_FLOOR`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convexset::ConvexCompactSet;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{norm, BoxRegion, Directions};
use crate::svmap::{centered_lattice, SetValuedMap};

/// `ln 0` stand-in.
pub const C_FLOOR: f64 = -1e6;

/// Gap values at or below this are treated as exactly zero.
pub const BETA_ZERO: f64 = 1e-12;

/// Root-finding tolerance for `ā` and `g_o`.
pub const ROOT_TOL: f64 = 1e-6;

/// Anything that bounds `F(x + δB) ⊂ F(x) + λ1(δ) λ2(x) B`.
pub trait Modulus {
    fn lambda1(&self, delta: f64) -> f64;
    fn lambda2(&self, x: &[f64]) -> f64;

    fn bound(&self, x: &[f64], delta: f64) -> f64 {
        self.lambda1(delta) * self.lambda2(x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulusOptions {
    /// Log-grid half width: `a, b ∈ [-A, A]`.
    pub a_max: f64,
    /// Log-grid step.
    pub a_step: f64,
    /// Lattice points per axis for argument balls.
    pub density: usize,
    /// Directions per shell when sampling `|y| = r` (n >= 2).
    pub shell_directions: usize,
    /// Directions used for Hausdorff distances (n >= 2).
    pub hausdorff_directions: usize,
    /// Largest argument radius `s` sampled.
    pub delta_max: f64,
    /// Domain the samples `y` are clamped to.
    pub region: Option<BoxRegion>,
}

impl ModulusOptions {
    pub fn for_dim(dim: usize) -> Self {
        let fine = dim == 1;
        Self {
            a_max: 20.0,
            a_step: if fine { 0.25 } else { 0.5 },
            density: if fine { 9 } else { 5 },
            shell_directions: 16,
            hausdorff_directions: 32,
            delta_max: 1.0,
            region: None,
        }
    }

    pub fn with_region(mut self, region: BoxRegion) -> Self {
        self.region = Some(region);
        self
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if !(self.a_max > 0.0) || !(self.a_step > 0.0) || self.a_step > self.a_max {
            return Err(Error::InvalidArgument(format!(
                "log grid needs 0 < step <= A, got A = {}, step = {}",
                self.a_max, self.a_step
            )));
        }
        if self.density < 2 {
            return Err(Error::InvalidArgument("lattice density must be >= 2".into()));
        }
        if !(self.delta_max > 0.0) {
            return Err(Error::InvalidArgument("delta_max must be > 0".into()));
        }
        if let Some(r) = &self.region {
            check_dim(dim, r.dim())?;
        }
        Ok(())
    }
}

/// Shared sampling state for gap evaluations.
struct GapSampler<'a> {
    f: &'a SetValuedMap,
    lattice: Vec<Vec<f64>>,
    dirs: Directions,
}

impl<'a> GapSampler<'a> {
    fn new(f: &'a SetValuedMap, density: usize, hausdorff_directions: usize) -> Self {
        let n = f.dim();
        let count = if n == 1 { 2 } else { hausdorff_directions };
        Self {
            f,
            lattice: centered_lattice(n, density),
            dirs: Directions::new(n, count),
        }
    }

    /// `H(F(y + sB), F(y))`.
    fn spread(&self, y: &[f64], s: f64) -> Result<f64> {
        let here = self.f.image(y)?;
        let around = self.f.image_over(y, s, &self.lattice)?;
        hausdorff(&around, &here, &self.dirs)
    }

    fn origin_spread(&self, s: f64) -> Result<f64> {
        self.spread(&vec![0.0; self.f.dim()], s)
    }
}

fn hausdorff(a: &ConvexCompactSet, b: &ConvexCompactSet, dirs: &Directions) -> Result<f64> {
    a.hausdorff_with(b, dirs)
}

/// `g(y, s) = H(F(y + sB), F(y)) - H(F(sB), F(0))` with lattice-sampled
/// argument balls.
pub fn local_gap(f: &SetValuedMap, y: &[f64], s: f64, opts: &ModulusOptions) -> Result<f64> {
    check_dim(f.dim(), y.len())?;
    if !(s >= 0.0) {
        return Err(Error::InvalidArgument(format!("s must be >= 0, got {s}")));
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    let g = GapSampler::new(f, opts.density, opts.hausdorff_directions);
    Ok(g.spread(y, s)? - g.origin_spread(s)?)
}

/// Sample points on the sphere `|y| = r` (clamped into `region`).
fn shell(dim: usize, r: f64, count: usize, region: Option<&BoxRegion>) -> Vec<Vec<f64>> {
    let raw: Vec<Vec<f64>> = if dim == 1 {
        vec![vec![-r], vec![r]]
    } else {
        Directions::new(dim, count)
            .iter()
            .map(|d| d.iter().map(|v| v * r).collect())
            .collect()
    };
    match region {
        None => raw,
        Some(b) => raw
            .into_iter()
            .map(|y| {
                y.iter()
                    .zip(b.lo.iter().zip(&b.hi))
                    .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
                    .collect()
            })
            .collect(),
    }
}

/// Grid maximum of [`local_gap`] over `|y| <= r` and `s <= δ`, using 16
/// radii and 16 argument radii. `β(0, ·) = β(·, 0) = 0` exactly.
pub fn beta(f: &SetValuedMap, r: f64, delta: f64, opts: &ModulusOptions) -> Result<f64> {
    if !(r >= 0.0) || !(delta >= 0.0) {
        return Err(Error::InvalidArgument("beta needs r, delta >= 0".into()));
    }
    if r == 0.0 || delta == 0.0 {
        return Ok(0.0);
    }
    const K: usize = 16;
    let g = GapSampler::new(f, opts.density, opts.hausdorff_directions);
    let mut best = 0.0f64;
    for js in 1..=K {
        let s = delta * js as f64 / K as f64;
        let h0 = g.origin_spread(s)?;
        for ir in 1..=K {
            let rr = r * ir as f64 / K as f64;
            for y in shell(f.dim(), rr, opts.shell_directions, opts.region.as_ref()) {
                best = best.max(g.spread(&y, s)? - h0);
            }
        }
    }
    Ok(best)
}

/// Evaluable `(λ1, λ2)` with every intermediate of the construction.
///
/// Tabulated functions use linear interpolation between nodes of
/// `grid` (for `g`, `h`, `G = max{g, h}`) or of `h0_delta` (for the origin
/// spread `H(F(δB), F(0))`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulusPair {
    pub options: ModulusOptions,
    /// `β` vanished on the whole grid: `λ1 = H0`, `λ2 = 1`.
    pub degenerate: bool,
    /// Log-grid nodes shared by both arguments of `c`.
    pub grid: Vec<f64>,
    /// Scale applied to `β` so that `c(0, 0) > 0`.
    pub kappa: f64,
    pub abar: f64,
    /// `c(·, 0) > 0` on the whole grid; `ā` was clamped to `-A`.
    pub abar_clamped: bool,
    /// `g_o` at the grid nodes `a <= ā` followed by `ā` itself.
    pub g_o: Vec<[f64; 2]>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    /// Running maximum of `max{g, h}` (nondecreasing).
    pub big_g: Vec<f64>,
    /// Smallest drop of `c(a, b) - g(a)` from its maximum to the grid ends,
    /// over all `b`. Large values mean the truncated sup is the true sup.
    pub h_tail_gap: Option<f64>,
    pub h0_delta: Vec<f64>,
    pub h0: Vec<f64>,
    /// `c` on the grid, row `i` = `a_i`. Not serialized.
    #[serde(skip)]
    pub c: Vec<Vec<f64>>,
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = xs.partition_point(|v| *v <= x) - 1;
    let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + t * (ys[k + 1] - ys[k])
}

impl ModulusPair {
    /// `α(s) = exp(G(ln s))`, zero for `s <= e^{-A}`.
    pub fn alpha(&self, s: f64) -> f64 {
        if self.degenerate || !(s > (-self.options.a_max).exp()) {
            return 0.0;
        }
        interp(&self.grid, &self.big_g, s.ln()).exp()
    }

    /// `H(F(δB), F(0))`, linear between tabulated nodes and extended
    /// linearly past the last one.
    pub fn origin_spread(&self, delta: f64) -> f64 {
        let xs = &self.h0_delta;
        let ys = &self.h0;
        let n = xs.len();
        if delta <= xs[n - 1] {
            return interp(xs, ys, delta.max(0.0));
        }
        let slope = ((ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2])).max(0.0);
        ys[n - 1] + slope * (delta - xs[n - 1])
    }

    /// `c` is nondecreasing along both grid axes.
    pub fn c_monotone(&self) -> bool {
        let m = self.c.len();
        (0..m).all(|i| {
            (0..m).all(|j| {
                (i + 1 == m || self.c[i][j] <= self.c[i + 1][j])
                    && (j + 1 == m || self.c[i][j] <= self.c[i][j + 1])
            })
        })
    }

    /// `G = max{g, h}` at `a` (linear between nodes).
    pub fn big_g_at(&self, a: f64) -> f64 {
        interp(&self.grid, &self.big_g, a)
    }
}

impl Modulus for ModulusPair {
    fn lambda1(&self, delta: f64) -> f64 {
        if delta <= 0.0 {
            return 0.0;
        }
        self.alpha(delta).max(self.origin_spread(delta))
    }

    fn lambda2(&self, x: &[f64]) -> f64 {
        if self.degenerate {
            return 1.0;
        }
        self.alpha(norm(x)) + 1.0
    }
}

/// Upper crossing of zero of the nondecreasing piecewise-linear `ys`.
fn upper_zero(xs: &[f64], ys: &[f64]) -> Option<f64> {
    // last node with value <= 0
    let k = ys.iter().rposition(|v| *v <= 0.0)?;
    if k + 1 == ys.len() {
        return Some(xs[k]);
    }
    let (mut lo, mut hi) = (xs[k], xs[k + 1]);
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if interp(xs, ys, mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Root of the increasing `b ↦ c(a, b) + b` on the grid. Past the last
/// node `c` is held constant (argument radii are capped), so a root beyond
/// the grid is `-c(a, A)`.
fn g_o_root(grid: &[f64], row: &[f64], at: f64) -> Result<f64> {
    let phi = |b: f64| interp(grid, row, b) + b;
    let (mut lo, mut hi) = (grid[0], grid[grid.len() - 1]);
    if phi(lo) > 0.0 {
        return Err(Error::BracketExhausted { what: "g_o", at });
    }
    if phi(hi) < 0.0 {
        return Ok(-row[row.len() - 1]);
    }
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Construct `(λ1, λ2)` for `f`.
pub fn build_modulus(f: &SetValuedMap, opts: &ModulusOptions) -> Result<ModulusPair> {
    let n = f.dim();
    opts.validate(n)?;
    let steps = (opts.a_max / opts.a_step).round() as i64;
    let grid: Vec<f64> = (-steps..=steps).map(|k| k as f64 * opts.a_step).collect();
    let m = grid.len();
    let sampler = GapSampler::new(f, opts.density, opts.hausdorff_directions);

    // Argument radii are capped at delta_max; columns past the cap repeat.
    let radii: Vec<f64> = grid.iter().map(|b| b.exp().min(opts.delta_max)).collect();
    let n_cols = radii.iter().position(|s| *s >= opts.delta_max).map_or(m, |k| k + 1);
    let h0_cols = radii[..n_cols]
        .iter()
        .map(|&s| sampler.origin_spread(s))
        .collect::<Result<Vec<_>>>()?;

    // Shell maxima, one row per radius.
    let region = opts.region.as_ref();
    let shells: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|a| {
            let ys = shell(n, a.exp(), opts.shell_directions, region);
            (0..n_cols)
                .map(|j| {
                    let mut best = f64::NEG_INFINITY;
                    for y in &ys {
                        best = best.max(sampler.spread(y, radii[j])? - h0_cols[j]);
                    }
                    Ok(best)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    // 2-D prefix max, then shift one node up in both arguments.
    let mut beta = vec![vec![0.0f64; m]; m];
    for i in 0..m {
        for j in 0..m {
            let own = shells[i][j.min(n_cols - 1)].max(0.0);
            let left = if i > 0 { beta[i - 1][j] } else { 0.0 };
            let down = if j > 0 { beta[i][j - 1] } else { 0.0 };
            beta[i][j] = own.max(left).max(down);
        }
    }
    let beta_hat: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| beta[(i + 1).min(m - 1)][(j + 1).min(m - 1)]).collect())
        .collect();

    let mut h0_delta = vec![0.0];
    let mut h0 = vec![0.0];
    for (s, v) in radii[..n_cols].iter().zip(&h0_cols) {
        if *s > *h0_delta.last().unwrap() {
            h0_delta.push(*s);
            h0.push(v.max(0.0));
        }
    }
    // keep the tabulated spread nondecreasing
    for k in 1..h0.len() {
        h0[k] = h0[k].max(h0[k - 1]);
    }

    let degenerate = beta_hat.iter().flatten().all(|v| *v <= BETA_ZERO);
    let zero = m / 2;
    let mut pair = ModulusPair {
        options: opts.clone(),
        degenerate,
        grid: grid.clone(),
        kappa: 1.0,
        abar: 0.0,
        abar_clamped: false,
        g_o: Vec::new(),
        g: Vec::new(),
        h: Vec::new(),
        big_g: vec![C_FLOOR; m],
        h_tail_gap: None,
        h0_delta,
        h0,
        c: Vec::new(),
    };
    if degenerate {
        pair.c = vec![vec![C_FLOOR; m]; m];
        return Ok(pair);
    }

    let b00 = beta_hat[zero][zero];
    if b00 > BETA_ZERO && b00.ln() <= 0.0 {
        pair.kappa = 2.0 / b00;
    }
    let lk = pair.kappa.ln();
    let c: Vec<Vec<f64>> = beta_hat
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| if *v > BETA_ZERO { v.ln() + lk } else { C_FLOOR })
                .collect()
        })
        .collect();

    // ā: upper crossing of c(·, 0).
    let col0: Vec<f64> = c.iter().map(|row| row[zero]).collect();
    let abar = match upper_zero(&grid, &col0) {
        Some(a) => a,
        None => {
            pair.abar_clamped = true;
            grid[0]
        }
    };
    pair.abar = abar;

    // g_o on nodes a <= ā and at ā.
    let row_at = |a: f64| -> Vec<f64> {
        (0..m)
            .map(|j| {
                let col: Vec<f64> = c.iter().map(|row| row[j]).collect();
                interp(&grid, &col, a)
            })
            .collect()
    };
    let mut g_o = Vec::new();
    for (i, &a) in grid.iter().enumerate() {
        if a < abar {
            g_o.push([a, g_o_root(&grid, &c[i], a)?]);
        }
    }
    let g_o_abar = g_o_root(&grid, &row_at(abar), abar)?;
    g_o.push([abar, g_o_abar]);

    // g, continuous at ā.
    let diag = |a: f64| -> f64 { interp(&grid, &row_at(a), a) };
    let c_abar = diag(abar);
    let g_abar = -0.5 * g_o_abar;
    let go_a: Vec<f64> = g_o.iter().map(|p| p[0]).collect();
    let go_v: Vec<f64> = g_o.iter().map(|p| p[1]).collect();
    let g: Vec<f64> = grid
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            if a <= abar {
                -0.5 * interp(&go_a, &go_v, a)
            } else {
                g_abar + c[i][i] - c_abar + a - abar
            }
        })
        .collect();

    // h(b) = max_a [c(a, b) - g(a)].
    let mut h = vec![f64::NEG_INFINITY; m];
    let mut tail: Option<f64> = None;
    for j in 0..m {
        let vals: Vec<f64> = (0..m).map(|i| c[i][j] - g[i]).collect();
        let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        h[j] = top;
        if c[0][j] > C_FLOOR || c[m - 1][j] > C_FLOOR {
            let drop = top - vals[0].max(vals[m - 1]);
            tail = Some(tail.map_or(drop, |t| t.min(drop)));
        }
    }
    for j in 1..m {
        h[j] = h[j].max(h[j - 1]);
    }

    let mut big_g: Vec<f64> = g.iter().zip(&h).map(|(a, b)| a.max(*b)).collect();
    for i in 1..m {
        big_g[i] = big_g[i].max(big_g[i - 1]);
    }
    pair.g_o = g_o;
    pair.g = g;
    pair.h = h;
    pair.big_g = big_g;
    pair.h_tail_gap = tail;
    pair.c = c;
    Ok(pair)
}

/// Result of checking the containment bound on samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusCheck {
    pub samples: usize,
    /// `min (λ1(δ) λ2(x) - excess)` over the samples.
    pub worst_slack: f64,
    pub worst: Option<(Vec<f64>, f64)>,
    /// First sample with slack below `-tol`.
    pub violator: Option<(Vec<f64>, f64)>,
    pub tol: f64,
    pub pass: bool,
}

/// Check `F(x + δB) ⊂ F(x) + λ1(δ) λ2(x) B` at each `(x, δ)` through
/// one-sided support containment.
pub fn verify_modulus(
    f: &SetValuedMap,
    m: &dyn Modulus,
    samples: &[(Vec<f64>, f64)],
    density: usize,
    tol: f64,
) -> Result<ModulusCheck> {
    let n = f.dim();
    let lattice = centered_lattice(n, density.max(2));
    let dirs = Directions::new(n, if n == 1 { 2 } else { 64 });
    let slacks = samples
        .iter()
        .map(|(x, delta)| {
            check_dim(n, x.len())?;
            let here = f.image(x)?;
            let around = f.image_over(x, *delta, &lattice)?;
            let excess = around.excess_over(&here, &dirs)?;
            Ok(m.bound(x, *delta) - excess)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut worst_slack = f64::INFINITY;
    let mut worst = None;
    let mut violator = None;
    for ((x, d), s) in samples.iter().zip(&slacks) {
        if *s < worst_slack {
            worst_slack = *s;
            worst = Some((x.clone(), *d));
        }
        if *s < -tol && violator.is_none() {
            violator = Some((x.clone(), *d));
        }
    }
    Ok(ModulusCheck {
        samples: samples.len(),
        worst_slack,
        worst,
        pass: violator.is_none(),
        violator,
        tol,
    })
}

/// Seeded uniform `(x, δ)` pairs with `x` in `region`, `δ ∈ (0, delta_max]`.
pub fn random_pairs(region: &BoxRegion, delta_max: f64, count: usize, seed: u64) -> Vec<(Vec<f64>, f64)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x = region
                .lo
                .iter()
                .zip(&region.hi)
                .map(|(a, b)| a + (b - a) * rng.gen::<f64>())
                .collect();
            let d = delta_max * (1.0 - rng.gen::<f64>());
            (x, d)
        })
        .collect()
}
