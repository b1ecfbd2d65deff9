//! Support selection by maximum-weight bipartite matching.
//!
//! The left side holds `s` interchangeable placeholders for each of the `k`
//! components, the right side holds the `d` variables, and the edge from any
//! placeholder of group `j` to variable `i` weighs `W[i, j]^2`. A perfect
//! matching of the placeholders is exactly a choice of `k` disjoint supports of
//! size `s`, and its weight is the Cauchy-Schwarz upper bound of the local
//! objective for those supports.
//!
//! The graph is stored compactly as one weight row per group. The solver is
//! the rectangular Hungarian algorithm (shortest augmenting paths with
//! potentials) over the `s*k` placeholder rows, `O(d (s k)^2)`.
//!
//! Ties between optimal matchings are broken by minimizing
//! `sum_j sum_{i in I_j} (k - j) * i`, so lower variable indices are preferred
//! and lower groups get them first. The rule is part of the contract: it
//! makes the output independent of how candidate scans are scheduled.

use std::ops::{Add, AddAssign, Sub, SubAssign};

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpcaError};

/// Bipartite graph between `k` placeholder groups of size `s` and `d` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedBipartiteGraph {
    k: usize,
    s: usize,
    d: usize,
    /// Row-major `k x d`: `weights[j * d + i] = W[i, j]^2`.
    weights: Vec<f64>,
}

impl WeightedBipartiteGraph {
    pub fn groups(&self) -> usize {
        self.k
    }

    pub fn group_size(&self) -> usize {
        self.s
    }

    pub fn variables(&self) -> usize {
        self.d
    }

    /// Weight of every edge between a placeholder of group `j` and variable `i`.
    pub fn weight(&self, j: usize, i: usize) -> f64 {
        self.weights[j * self.d + i]
    }

    /// From already-squared, row-major `k x d` weights.
    pub(crate) fn from_squared(k: usize, s: usize, d: usize, weights: Vec<f64>) -> Self {
        debug_assert_eq!(weights.len(), k * d);
        Self { k, s, d, weights }
    }
}

/// Builds the placeholder graph from a `d x k` weight matrix.
pub fn gen_bigraph(w: ArrayView2<f64>, s: usize) -> Result<WeightedBipartiteGraph> {
    let (d, k) = w.dim();
    check_sparsity(d, k, s)?;
    if w.iter().any(|v| !v.is_finite()) {
        return Err(SpcaError::InvalidInput(
            "weight matrix contains non-finite entries".into(),
        ));
    }
    let mut weights = Vec::with_capacity(k * d);
    for j in 0..k {
        weights.extend(w.column(j).iter().map(|v| v * v));
    }
    Ok(WeightedBipartiteGraph { k, s, d, weights })
}

pub(crate) fn check_sparsity(d: usize, k: usize, s: usize) -> Result<()> {
    if k == 0 || s == 0 {
        return Err(SpcaError::InvalidInput("k and s must be at least 1".into()));
    }
    match s.checked_mul(k) {
        Some(sk) if sk <= d => Ok(()),
        _ => Err(SpcaError::InfeasibleSparsity { s, k, d }),
    }
}

/// A perfect matching of the placeholders, collapsed to variable -> group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    /// `assignment[i]` is the group that variable `i` is matched into, if any.
    pub assignment: Vec<Option<usize>>,
    pub total_weight: f64,
}

/// `k` pairwise-disjoint supports, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SupportSet {
    sets: Vec<Vec<usize>>,
}

impl SupportSet {
    /// Validates disjointness and range; sorts each set.
    pub fn new(mut sets: Vec<Vec<usize>>, d: usize) -> Result<Self> {
        let mut used = vec![false; d];
        for set in &mut sets {
            set.sort_unstable();
            for &i in set.iter() {
                if i >= d {
                    return Err(SpcaError::InvalidInput(format!(
                        "support index {i} out of range for dimension {d}"
                    )));
                }
                if std::mem::replace(&mut used[i], true) {
                    return Err(SpcaError::InvalidInput(format!("support index {i} appears twice")));
                }
            }
        }
        Ok(Self { sets })
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn into_sets(self) -> Vec<Vec<usize>> {
        self.sets
    }
}

/// Lexicographic (primary, tie-break) cost; the primary part is the negated
/// edge weight.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
struct Cost(f64, i64);

impl Cost {
    const ZERO: Cost = Cost(0.0, 0);
    const INF: Cost = Cost(f64::INFINITY, 0);
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, o: Cost) -> Cost {
        Cost(self.0 + o.0, self.1 + o.1)
    }
}

impl Sub for Cost {
    type Output = Cost;
    fn sub(self, o: Cost) -> Cost {
        Cost(self.0 - o.0, self.1 - o.1)
    }
}

impl AddAssign for Cost {
    fn add_assign(&mut self, o: Cost) {
        *self = *self + o;
    }
}

impl SubAssign for Cost {
    fn sub_assign(&mut self, o: Cost) {
        *self = *self - o;
    }
}

/// Maximum-weight perfect matching of the placeholders.
pub fn max_weight_perfect_matching(g: &WeightedBipartiteGraph) -> Matching {
    let (k, s, d) = (g.k, g.s, g.d);
    let rows = k * s;
    let cost = |row: usize, col: usize| -> Cost {
        let j = row / s;
        Cost(-g.weight(j, col), (col * (k - j)) as i64)
    };

    // 1-based potentials and column owners, index 0 is the virtual column
    let mut u = vec![Cost::ZERO; rows + 1];
    let mut v = vec![Cost::ZERO; d + 1];
    let mut owner = vec![0usize; d + 1];
    let mut way = vec![0usize; d + 1];
    let mut minv = vec![Cost::INF; d + 1];
    let mut used = vec![false; d + 1];

    for row in 1..=rows {
        owner[0] = row;
        let mut j0 = 0usize;
        minv.fill(Cost::INF);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = Cost::INF;
            let mut j1 = 0usize;
            for j in 1..=d {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=d {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![None; d];
    let mut total_weight = 0.0;
    for col in 1..=d {
        if owner[col] > 0 {
            let j = (owner[col] - 1) / s;
            assignment[col - 1] = Some(j);
        }
    }
    // summed in variable order so the value does not depend on path history
    for (i, a) in assignment.iter().enumerate() {
        if let Some(j) = *a {
            total_weight += g.weight(j, i);
        }
    }
    Matching {
        assignment,
        total_weight,
    }
}

/// Neighborhood of each placeholder group under the matching.
pub fn supports_from_matching(m: &Matching, k: usize, s: usize) -> Result<SupportSet> {
    let mut sets = vec![Vec::with_capacity(s); k];
    for (i, a) in m.assignment.iter().enumerate() {
        if let Some(j) = *a {
            if j >= k {
                return Err(SpcaError::InternalInvariantViolation(format!(
                    "variable {i} matched to group {j} but only {k} groups exist"
                )));
            }
            sets[j].push(i);
        }
    }
    if let Some((j, set)) = sets.iter().enumerate().find(|(_, set)| set.len() != s) {
        return Err(SpcaError::InternalInvariantViolation(format!(
            "group {j} received {} variables, expected {s}",
            set.len()
        )));
    }
    SupportSet::new(sets, m.assignment.len()).map_err(|e| SpcaError::InternalInvariantViolation(e.to_string()))
}
