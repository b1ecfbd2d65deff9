//! Joint extraction of `k` disjoint-support, `s`-sparse components.
//!
//! For every candidate basis `C` drawn from the `k`-th power of a sphere net,
//! the weight matrix `W = U diag(sqrt(lambda)) C` defines a local problem
//! `max sum_j <X^j, W^j>^2` over the feasible set. It is solved exactly by a
//! bipartite matching (supports) followed by Cauchy-Schwarz (values). The best
//! candidate by `Tr(X^T A X)` is returned; a complete scan is within a factor
//! `1 - eps` of the optimum of the factored matrix.

use std::time::{Duration, Instant};

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SpcaError};
use crate::linalg::{block_top_eigenpair, quad_form_sparse, EigFactor, PsdMatrix};
use crate::matching::{
    check_sparsity, gen_bigraph, max_weight_perfect_matching, supports_from_matching, SupportSet,
    WeightedBipartiteGraph,
};
use crate::net::{antipodal_reduce, build_sphere_net_with, CartesianPower, NetConstruction};

/// Candidate bases per scheduling unit. Fixed so that chunk boundaries, and
/// therefore results, do not depend on the worker count.
const SCAN_CHUNK: u64 = 2048;

/// One sparse unit-norm column: values on `support`, zero elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseColumn {
    pub support: Vec<usize>,
    pub values: Vec<f64>,
}

/// A `d x k` matrix with unit columns and pairwise-disjoint supports of size
/// exactly `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSet {
    dim: usize,
    sparsity: usize,
    columns: Vec<SparseColumn>,
}

impl ComponentSet {
    pub fn new(dim: usize, sparsity: usize, mut columns: Vec<SparseColumn>) -> Result<Self> {
        let mut used = vec![false; dim];
        for (j, col) in columns.iter_mut().enumerate() {
            if col.support.len() != sparsity || col.values.len() != sparsity {
                return invalid(format!(
                    "column {j} has {} indices, expected exactly {sparsity}",
                    col.support.len()
                ));
            }
            for &i in &col.support {
                if i >= dim {
                    return invalid(format!("column {j} index {i} out of range"));
                }
                if std::mem::replace(&mut used[i], true) {
                    return invalid(format!("index {i} is shared by two columns"));
                }
            }
            let norm = col.values.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 || !norm.is_finite() {
                return invalid(format!("column {j} has norm {norm}, expected 1"));
            }
            let mut pairs: Vec<(usize, f64)> = col.support.iter().copied().zip(col.values.iter().copied()).collect();
            pairs.sort_by_key(|p| p.0);
            (col.support, col.values) = pairs.into_iter().unzip();
        }
        Ok(Self { dim, sparsity, columns })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.columns.len()
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    pub fn columns(&self) -> &[SparseColumn] {
        &self.columns
    }

    pub fn supports(&self) -> SupportSet {
        SupportSet::new(self.columns.iter().map(|c| c.support.clone()).collect(), self.dim)
            .expect("validated at construction")
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut x = Array2::zeros((self.dim, self.columns.len()));
        for (j, col) in self.columns.iter().enumerate() {
            for (&i, &v) in col.support.iter().zip(&col.values) {
                x[[i, j]] = v;
            }
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eps: f64,
    pub k: usize,
    pub s: usize,
    /// Caps the rank of the factor used to generate candidates.
    pub rank_cap: Option<usize>,
    pub time_budget: Option<Duration>,
    /// Re-fit each winning support with the leading eigenvector of its block.
    pub polish: bool,
    pub antipodal_reduce: bool,
    pub net_construction: NetConstruction,
    pub workers: usize,
}

impl SolverConfig {
    pub fn new(k: usize, s: usize, eps: f64) -> Self {
        Self {
            eps,
            k,
            s,
            rank_cap: None,
            time_budget: None,
            polish: false,
            antipodal_reduce: true,
            net_construction: NetConstruction::AngularGrid,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return invalid(format!("eps must lie in (0, 1), got {}", self.eps));
        }
        if self.k == 0 || self.s == 0 {
            return invalid("k and s must be at least 1");
        }
        if self.workers == 0 {
            return invalid("workers must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Complete,
    TimeBudget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub best: ComponentSet,
    pub objective: f64,
    pub per_component: Vec<f64>,
    /// Rank of the factor the net was built over.
    pub rank: usize,
    pub net_cardinality: usize,
    /// Candidate bases in the full scan, `|net|^k`.
    pub net_points_total: u64,
    pub net_points_examined: u64,
    /// `1 - eps` for a complete scan, 0 when the time budget cut it short.
    pub guarantee_factor: f64,
    pub elapsed: Duration,
    pub termination: Termination,
}

/// Local objective `sum_j <X^j, W^j>^2`.
pub fn local_objective(x: &ComponentSet, w: ArrayView2<f64>) -> f64 {
    x.columns()
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let ip: f64 = c.support.iter().zip(&c.values).map(|(&i, &v)| v * w[[i, j]]).sum();
            ip * ip
        })
        .sum()
}

/// Exact maximizer of `sum_j <X^j, W^j>^2` over unit columns with disjoint
/// `s`-supports.
pub fn candidate_solution(w: ArrayView2<f64>, s: usize) -> Result<ComponentSet> {
    let g = gen_bigraph(w, s)?;
    let supports = supports_from_matching(&max_weight_perfect_matching(&g), g.groups(), s)?;
    let columns = supports
        .into_sets()
        .into_iter()
        .enumerate()
        .map(|(j, support)| {
            let values = colinear_unit(&support, |i| w[[i, j]]);
            SparseColumn { support, values }
        })
        .collect();
    ComponentSet::new(w.nrows(), s, columns)
}

/// `w[I] / ||w[I]||`, or `e_{min I}` when the restriction vanishes.
fn colinear_unit(support: &[usize], w: impl Fn(usize) -> f64) -> Vec<f64> {
    let raw: Vec<f64> = support.iter().map(|&i| w(i)).collect();
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 && norm.is_finite() {
        raw.into_iter().map(|v| v / norm).collect()
    } else {
        let mut e = vec![0.0; support.len()];
        e[0] = 1.0;
        e
    }
}

/// Leading eigenvector of each principal block `A[I_j, I_j]`.
pub fn polish(a: &PsdMatrix, supports: &SupportSet) -> Result<ComponentSet> {
    let s = supports.sets().first().map_or(0, Vec::len);
    let columns = supports
        .sets()
        .iter()
        .map(|set| {
            if set.iter().any(|&i| i >= a.dim()) {
                return invalid("support index out of range for matrix");
            }
            let (_, mut v) = block_top_eigenpair(a, set);
            crate::linalg::fix_sign(&mut v);
            Ok(SparseColumn {
                support: set.clone(),
                values: v.to_vec(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ComponentSet::new(a.dim(), s, columns)
}

/// Best candidate found in a range of the scan.
#[derive(Debug, Clone)]
struct Best {
    objective: f64,
    index: u64,
    columns: Vec<SparseColumn>,
}

impl Best {
    fn better(a: Best, b: Best) -> Best {
        if b.objective > a.objective || (b.objective == a.objective && b.index < a.index) {
            b
        } else {
            a
        }
    }
}

/// Scans the `k`-th power of an `eps/2`-net over the span of `factor`, scoring
/// candidates on `a_eval`.
pub fn solve_multi_spca(factor: &EigFactor, a_eval: &PsdMatrix, cfg: &SolverConfig) -> Result<SolveReport> {
    let start = Instant::now();
    cfg.validate()?;
    let d = a_eval.dim();
    if factor.dim() != d {
        return invalid(format!(
            "factor dimension {} does not match evaluation matrix dimension {d}",
            factor.dim()
        ));
    }
    check_sparsity(d, cfg.k, cfg.s)?;
    let rank = cfg.rank_cap.map_or(factor.rank(), |c| c.min(factor.rank()));
    if rank == 0 {
        return Err(SpcaError::ZeroMatrix);
    }

    let mut net = build_sphere_net_with(rank, cfg.eps, cfg.net_construction)?;
    if cfg.antipodal_reduce {
        net = antipodal_reduce(&net);
    }
    let power = CartesianPower::new(&net, cfg.k)?;
    let total = power.total();

    // projections of every net point: column p of sqrt_factor * N
    let sqrt_factor = factor.sqrt_factor();
    let sqrt_factor = sqrt_factor.slice(ndarray::s![.., ..rank]);
    let mut proj = vec![0.0; net.len() * d];
    for (p, point) in net.points().enumerate() {
        for i in 0..d {
            proj[p * d + i] = (0..rank).map(|a| sqrt_factor[[i, a]] * point[a]).sum();
        }
    }
    let proj = &proj;

    let deadline = cfg.time_budget.map(|b| start + b);
    let chunks = total.div_ceil(SCAN_CHUNK);
    let scan_chunk = |c: u64| -> Result<Option<(Best, u64)>> {
        if c > 0 && deadline.is_some_and(|t| Instant::now() >= t) {
            return Ok(None);
        }
        let range = c * SCAN_CHUNK..((c + 1) * SCAN_CHUNK).min(total);
        let len = range.end - range.start;
        let mut best: Option<Best> = None;
        let mut weights = vec![0.0; cfg.k * d];
        for (offset, tuple) in power.index_range(range.clone()).enumerate() {
            for (j, &p) in tuple.iter().enumerate() {
                for i in 0..d {
                    let w = proj[p * d + i];
                    weights[j * d + i] = w * w;
                }
            }
            let g = WeightedBipartiteGraph::from_squared(cfg.k, cfg.s, d, weights.clone());
            let supports = supports_from_matching(&max_weight_perfect_matching(&g), cfg.k, cfg.s)?;
            let columns: Vec<SparseColumn> = supports
                .into_sets()
                .into_iter()
                .zip(&tuple)
                .map(|(support, &p)| {
                    let values = colinear_unit(&support, |i| proj[p * d + i]);
                    SparseColumn { support, values }
                })
                .collect();
            let objective: f64 = columns
                .iter()
                .map(|c| quad_form_sparse(a_eval.values(), &c.support, &c.values))
                .sum();
            let cand = Best {
                objective,
                index: range.start + offset as u64,
                columns,
            };
            best = Some(match best {
                None => cand,
                Some(b) => Best::better(b, cand),
            });
        }
        Ok(best.map(|b| (b, len)))
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| SpcaError::InternalInvariantViolation(format!("thread pool: {e}")))?;
    let results: Vec<Option<(Best, u64)>> =
        pool.install(|| (0..chunks).into_par_iter().map(scan_chunk).collect::<Result<Vec<_>>>())?;

    let mut examined = 0;
    let mut best: Option<Best> = None;
    for (b, len) in results.into_iter().flatten() {
        examined += len;
        best = Some(match best {
            None => b,
            Some(prev) => Best::better(prev, b),
        });
    }
    let best = best.ok_or_else(|| SpcaError::InternalInvariantViolation("scan examined no candidates".into()))?;
    let termination = if examined == total {
        Termination::Complete
    } else {
        Termination::TimeBudget
    };

    let mut components =
        ComponentSet::new(d, cfg.s, best.columns).map_err(|e| SpcaError::InternalInvariantViolation(e.to_string()))?;
    let mut per_component = per_column(a_eval, &components);
    if cfg.polish {
        let polished = polish(a_eval, &components.supports())?;
        let polished_per = per_column(a_eval, &polished);
        if polished_per.iter().sum::<f64>() >= per_component.iter().sum::<f64>() {
            components = polished;
            per_component = polished_per;
        }
    }

    Ok(SolveReport {
        objective: per_component.iter().sum(),
        per_component,
        best: components,
        rank,
        net_cardinality: net.len(),
        net_points_total: total,
        net_points_examined: examined,
        guarantee_factor: match termination {
            Termination::Complete => 1.0 - cfg.eps,
            Termination::TimeBudget => 0.0,
        },
        elapsed: start.elapsed(),
        termination,
    })
}

fn per_column(a: &PsdMatrix, x: &ComponentSet) -> Vec<f64> {
    x.columns()
        .iter()
        .map(|c| quad_form_sparse(a.values(), &c.support, &c.values))
        .collect()
}
