//! Finite nets of the unit sphere and enumeration of their Cartesian powers.
//!
//! A net with radius `eps/2` guarantees that every unit vector lies within
//! Euclidean distance `eps/2` of a net point. The solver scans every `k`-tuple
//! of net points, so the enumeration order is fixed (lexicographic by point
//! index) and index ranges can be split across workers.

use std::collections::HashSet;
use std::io::Write;
use std::ops::Range;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SpcaError};

/// Entries with magnitude at or below this are treated as zero when choosing
/// the sign representative of an antipodal pair.
const SIGN_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetConstruction {
    /// Deterministic grid in generalized spherical coordinates.
    AngularGrid,
    /// Farthest-point cover of a seeded random pool. Coverage is only
    /// certified statistically via [`covering_check`].
    GreedyCover { seed: u64 },
}

/// A finite set of unit vectors in `R^r` covering the sphere at a given radius.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereNet {
    dim: usize,
    radius: f64,
    /// Row-major, `len * dim` entries.
    points: Vec<f64>,
    construction: NetConstruction,
    antipodal_reduced: bool,
}

impl SphereNet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Covering radius, `eps / 2`.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn construction(&self) -> NetConstruction {
        self.construction
    }

    pub fn is_antipodal_reduced(&self) -> bool {
        self.antipodal_reduced
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    /// `|net| / (4/eps)^r`: how far the net is from the textbook volumetric
    /// count.
    pub fn construction_constant(&self) -> f64 {
        let eps = 2.0 * self.radius;
        self.len() as f64 / (4.0 / eps).powi(self.dim as i32)
    }

    /// Removes every point except `keep`; used to build negative controls.
    pub fn retain_indices(&self, keep: impl Fn(usize) -> bool) -> SphereNet {
        let mut out = self.clone();
        out.points = self
            .points()
            .enumerate()
            .filter(|(i, _)| keep(*i))
            .flat_map(|(_, p)| p.iter().copied())
            .collect();
        out
    }

    /// One point per line, space-separated, 17 significant digits.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for p in self.points() {
            let line: Vec<String> = p.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Angular step for the grid so that rounding every angle to the grid moves
/// the point by at most `eps/2`.
///
/// Rounding each of the `r-1` angles moves the point by at most
/// `sqrt(r-1) * step / 2` along the sphere, and the chord for arc length
/// `2 asin(eps/4)` is `eps/2`.
pub fn grid_step(r: usize, eps: f64) -> f64 {
    let arc = 2.0 * (eps / 4.0).asin();
    if r <= 1 {
        return arc;
    }
    arc.min(2.0 * arc / ((r - 1) as f64).sqrt())
}

/// Builds an `eps/2`-net of `S^{r-1}` with the angular grid construction.
pub fn build_sphere_net(r: usize, eps: f64) -> Result<SphereNet> {
    build_sphere_net_with(r, eps, NetConstruction::AngularGrid)
}

pub fn build_sphere_net_with(r: usize, eps: f64, construction: NetConstruction) -> Result<SphereNet> {
    if r == 0 {
        return invalid("net dimension must be at least 1");
    }
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("eps must lie in (0, 1), got {eps}"));
    }
    let points = if r == 1 {
        vec![1.0, -1.0]
    } else {
        match construction {
            NetConstruction::AngularGrid => angular_grid(r, grid_step(r, eps)),
            NetConstruction::GreedyCover { seed } => greedy_cover(r, eps, seed),
        }
    };
    Ok(SphereNet {
        dim: r,
        radius: eps / 2.0,
        points,
        construction,
        antipodal_reduced: false,
    })
}

fn angular_grid(r: usize, step: f64) -> Vec<f64> {
    let polar = (std::f64::consts::PI / step).ceil() as usize;
    let mut azimuth = (2.0 * std::f64::consts::PI / step).ceil() as usize;
    // an even azimuth count keeps the grid closed under negation
    azimuth += azimuth % 2;
    let mut out = Vec::new();
    let mut coords = vec![0.0; r];
    grid_level(r, 0, 1.0, polar, azimuth, &mut coords, &mut out);
    out
}

/// Fills coordinate `level` onward; `sin_prod` is the product of the sines of
/// the angles already fixed.
fn grid_level(
    r: usize,
    level: usize,
    sin_prod: f64,
    polar: usize,
    azimuth: usize,
    coords: &mut [f64],
    out: &mut Vec<f64>,
) {
    use std::f64::consts::PI;
    if level == r - 2 {
        // last angle is periodic
        for j in 0..azimuth {
            let phi = 2.0 * PI * j as f64 / azimuth as f64;
            coords[r - 2] = sin_prod * phi.cos();
            coords[r - 1] = sin_prod * phi.sin();
            out.extend_from_slice(coords);
        }
        return;
    }
    for j in 0..=polar {
        let (c, s) = if j == 0 {
            (1.0, 0.0)
        } else if j == polar {
            (-1.0, 0.0)
        } else {
            let phi = PI * j as f64 / polar as f64;
            (phi.cos(), phi.sin())
        };
        coords[level] = sin_prod * c;
        if s == 0.0 {
            // pole: the remaining angles do not matter
            for v in coords[level + 1..].iter_mut() {
                *v = 0.0;
            }
            out.extend_from_slice(coords);
        } else {
            grid_level(r, level + 1, sin_prod * s, polar, azimuth, coords, out);
        }
    }
}

fn sample_unit(rng: &mut ChaCha8Rng, r: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..r).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn greedy_cover(r: usize, eps: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let volumetric = (4.0 / eps).powi(r as i32);
    let pool_size = (32.0 * volumetric).clamp(2_000.0, 20_000.0) as usize;
    let pool: Vec<Vec<f64>> = (0..pool_size).map(|_| sample_unit(&mut rng, r)).collect();
    // tighter than eps/2 since the pool only samples the sphere
    let target = 0.75 * eps / 2.0;
    let mut chosen = vec![0usize];
    let mut gap: Vec<f64> = pool.iter().map(|p| dist(p, &pool[0])).collect();
    loop {
        let (far, &worst) = gap
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("non-empty pool");
        if worst <= target {
            break;
        }
        chosen.push(far);
        for (g, p) in gap.iter_mut().zip(&pool) {
            *g = g.min(dist(p, &pool[far]));
        }
    }
    chosen.into_iter().flat_map(|i| pool[i].clone()).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Keeps one representative of each `{p, -p}` pair: every point is flipped so
/// its first nonzero coordinate is positive and duplicates are dropped, in
/// first-occurrence order.
pub fn antipodal_reduce(net: &SphereNet) -> SphereNet {
    let mut seen = HashSet::new();
    let mut points = Vec::with_capacity(net.points.len() / 2 + net.dim);
    for p in net.points() {
        let flip = p.iter().find(|v| v.abs() > SIGN_ZERO_TOL).is_some_and(|&v| v < 0.0);
        let canon: Vec<f64> = p.iter().map(|&v| if flip { -v } else { v }).collect();
        let key: Vec<i64> = canon.iter().map(|v| (v * 1e9).round() as i64).collect();
        if seen.insert(key) {
            points.extend(canon);
        }
    }
    SphereNet {
        points,
        antipodal_reduced: true,
        ..net.clone()
    }
}

/// An `r x k` matrix whose columns are net points.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateBasis {
    /// Net index of each column.
    pub indices: Vec<usize>,
    pub columns: Array2<f64>,
}

impl CandidateBasis {
    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn count(&self) -> usize {
        self.columns.ncols()
    }
}

/// The `k`-th Cartesian power of a net, enumerated lexicographically with the
/// first column as the most significant digit.
#[derive(Debug, Clone, Copy)]
pub struct CartesianPower<'a> {
    net: &'a SphereNet,
    k: usize,
    total: u64,
}

impl<'a> CartesianPower<'a> {
    pub fn new(net: &'a SphereNet, k: usize) -> Result<Self> {
        if k == 0 {
            return invalid("number of components must be at least 1");
        }
        let exact = (net.len() as u128).checked_pow(k as u32);
        match exact.and_then(|c| u64::try_from(c).ok()) {
            Some(total) => Ok(Self { net, k, total }),
            None => Err(SpcaError::CapacityExceeded {
                what: "candidate bases (|net|^k)",
                count: exact.unwrap_or(u128::MAX),
                limit: u64::MAX as u128,
            }),
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn net(&self) -> &'a SphereNet {
        self.net
    }

    /// Net indices of the basis at position `idx`.
    pub fn indices(&self, mut idx: u64) -> Vec<usize> {
        let base = self.net.len() as u64;
        let mut out = vec![0; self.k];
        for slot in out.iter_mut().rev() {
            *slot = (idx % base) as usize;
            idx /= base;
        }
        out
    }

    pub fn basis(&self, idx: u64) -> CandidateBasis {
        self.basis_from_indices(self.indices(idx))
    }

    fn basis_from_indices(&self, indices: Vec<usize>) -> CandidateBasis {
        let r = self.net.dim();
        let columns = Array2::from_shape_fn((r, self.k), |(a, j)| self.net.point(indices[j])[a]);
        CandidateBasis { indices, columns }
    }

    /// Index tuples for positions in `range`, in order.
    pub fn index_range(&self, range: Range<u64>) -> IndexTuples {
        let end = range.end.min(self.total);
        let start = range.start.min(end);
        IndexTuples {
            next: self.indices(start),
            base: self.net.len(),
            remaining: end - start,
        }
    }

    pub fn range(&self, range: Range<u64>) -> impl Iterator<Item = CandidateBasis> + '_ {
        self.index_range(range).map(move |ix| self.basis_from_indices(ix))
    }

    pub fn iter(&self) -> impl Iterator<Item = CandidateBasis> + '_ {
        self.range(0..self.total)
    }

    /// Splits `[0, total)` into at most `parts` contiguous, disjoint ranges.
    pub fn split(&self, parts: usize) -> Vec<Range<u64>> {
        split_range(self.total, parts)
    }
}

pub(crate) fn split_range(total: u64, parts: usize) -> Vec<Range<u64>> {
    let parts = (parts.max(1) as u64).min(total.max(1));
    let step = total / parts;
    let extra = total % parts;
    let mut out = Vec::with_capacity(parts as usize);
    let mut start = 0;
    for p in 0..parts {
        let len = step + u64::from(p < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}

/// Odometer over net-index tuples.
#[derive(Debug, Clone)]
pub struct IndexTuples {
    next: Vec<usize>,
    base: usize,
    remaining: u64,
}

impl Iterator for IndexTuples {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let out = self.next.clone();
        for slot in self.next.iter_mut().rev() {
            *slot += 1;
            if *slot < self.base {
                break;
            }
            *slot = 0;
        }
        Some(out)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub violations: usize,
    pub max_gap: f64,
    pub trials: usize,
}

/// Monte-Carlo check of the covering property: samples uniform unit vectors
/// and measures the distance to the nearest net point (up to sign for
/// antipodally reduced nets).
pub fn covering_check(net: &SphereNet, eps: f64, trials: usize, seed: u64) -> CoveringReport {
    let r = net.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<Vec<f64>> = (0..trials).map(|_| sample_unit(&mut rng, r)).collect();
    let gaps: Vec<f64> = samples
        .par_iter()
        .map(|x| {
            let best = net
                .points()
                .map(|p| {
                    let dot: f64 = p.iter().zip(x).map(|(a, b)| a * b).sum();
                    if net.is_antipodal_reduced() {
                        dot.abs()
                    } else {
                        dot
                    }
                })
                .fold(f64::NEG_INFINITY, f64::max);
            (2.0 - 2.0 * best.min(1.0)).max(0.0).sqrt()
        })
        .collect();
    let limit = eps / 2.0 + 1e-12;
    CoveringReport {
        violations: gaps.iter().filter(|&&g| g > limit).count(),
        max_gap: gaps.iter().copied().fold(0.0, f64::max),
        trials,
    }
}
