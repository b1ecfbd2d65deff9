//! Reference points for the joint solver: an exhaustive optimum for small
//! instances, greedy deflation with a single-component solver, and the 4x4
//! instance on which deflation loses almost half of the optimum.

use ndarray::{array, Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SpcaError};
use crate::linalg::{block_top_eigenpair, fix_sign, PsdMatrix};
use crate::matching::{check_sparsity, SupportSet};
use crate::solver::{ComponentSet, SparseColumn};

/// Largest number of support tuples the exhaustive oracle will visit.
pub const ORACLE_BUDGET: u128 = 10_000_000;

/// The 4x4 matrix `[[1,0,0,e],[0,d,0,0],[0,0,d,0],[e,0,0,1]]` with
/// `e, d > 0`, `e + d < 1`. Deflation with an exact single-component solver
/// captures `1 + e + d` with two 2-sparse components; the optimum is 2.
pub fn appendix_example(eps: f64, delta: f64) -> Result<PsdMatrix> {
    if !(eps > 0.0 && delta > 0.0 && eps + delta < 1.0) {
        return invalid(format!("need eps > 0, delta > 0, eps + delta < 1 (got {eps}, {delta})"));
    }
    PsdMatrix::new(array![
        [1.0, 0.0, 0.0, eps],
        [0.0, delta, 0.0, 0.0],
        [0.0, 0.0, delta, 0.0],
        [eps, 0.0, 0.0, 1.0],
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub opt_value: f64,
    pub opt_supports: SupportSet,
    pub instances_enumerated: u64,
}

impl OracleResult {
    /// Components attaining the optimum: leading eigenvectors of each block.
    pub fn components(&self, a: &PsdMatrix) -> Result<ComponentSet> {
        crate::solver::polish(a, &self.opt_supports)
    }
}

fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    (0..r).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of unordered `k`-tuples of disjoint `s`-subsets of `d` items.
pub fn support_tuple_count(d: usize, k: usize, s: usize) -> u128 {
    let mut count = 1u128;
    for j in 0..k {
        count = count.saturating_mul(binomial(d - j * s, s));
    }
    count / (1..=k as u128).product::<u128>()
}

/// Exact optimum by enumerating every unordered tuple of disjoint supports,
/// each scored by the sum of the top eigenvalues of its blocks. Ties keep the
/// lexicographically smallest tuple (sets ordered by their smallest element).
pub fn brute_force_opt(a: &PsdMatrix, k: usize, s: usize) -> Result<OracleResult> {
    let d = a.dim();
    check_sparsity(d, k, s)?;
    let count = support_tuple_count(d, k, s);
    if count > ORACLE_BUDGET {
        return Err(SpcaError::CapacityExceeded {
            what: "support tuples for the exhaustive oracle",
            count,
            limit: ORACLE_BUDGET,
        });
    }
    let subsets = all_subsets(d, s);
    let scores: Vec<f64> = subsets.iter().map(|set| block_top_eigenpair(a, set).0).collect();

    struct Search<'a> {
        subsets: &'a [Vec<usize>],
        scores: &'a [f64],
        k: usize,
        used: Vec<bool>,
        stack: Vec<usize>,
        best: Option<(f64, Vec<usize>)>,
        visited: u64,
    }

    impl Search<'_> {
        fn go(&mut self, from: usize, acc: f64) {
            if self.stack.len() == self.k {
                self.visited += 1;
                if self.best.as_ref().is_none_or(|(b, _)| acc > *b) {
                    self.best = Some((acc, self.stack.clone()));
                }
                return;
            }
            // each later set starts above the previous set's minimum; subsets
            // are in lexicographic order so their minimum is nondecreasing
            for idx in from..self.subsets.len() {
                let set = &self.subsets[idx];
                if let Some(&prev) = self.stack.last() {
                    if set[0] <= self.subsets[prev][0] {
                        continue;
                    }
                }
                if set.iter().any(|&i| self.used[i]) {
                    continue;
                }
                for &i in set {
                    self.used[i] = true;
                }
                self.stack.push(idx);
                self.go(idx + 1, acc + self.scores[idx]);
                self.stack.pop();
                for &i in set {
                    self.used[i] = false;
                }
            }
        }
    }

    let mut search = Search {
        subsets: &subsets,
        scores: &scores,
        k,
        used: vec![false; d],
        stack: Vec::with_capacity(k),
        best: None,
        visited: 0,
    };
    search.go(0, 0.0);
    let (opt_value, picks) = search
        .best
        .ok_or_else(|| SpcaError::InternalInvariantViolation("oracle found no feasible tuple".into()))?;
    let sets = picks.into_iter().map(|i| subsets[i].clone()).collect();
    Ok(OracleResult {
        opt_value,
        opt_supports: SupportSet::new(sets, d)?,
        instances_enumerated: search.visited,
    })
}

/// All `s`-subsets of `0..d` in lexicographic order.
fn all_subsets(d: usize, s: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..s).collect();
    if s > d {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut p = s;
        loop {
            if p == 0 {
                return out;
            }
            p -= 1;
            if cur[p] < d - s + p {
                break;
            }
        }
        cur[p] += 1;
        for q in (p + 1)..s {
            cur[q] = cur[q - 1] + 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TPowerSettings {
    pub iters: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for TPowerSettings {
    fn default() -> Self {
        Self {
            iters: 200,
            restarts: 20,
            seed: 0,
        }
    }
}

/// An `s`-sparse unit vector and its captured variance.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    pub column: SparseColumn,
    pub value: f64,
}

/// One truncated power run from `x0`. Returns the final iterate and the
/// objective after each iteration.
pub fn tpower_run(a: &PsdMatrix, s: usize, x0: &Array1<f64>, iters: usize) -> (SparseVector, Vec<f64>) {
    let d = a.dim();
    let mut x = truncate_top(&a.values().dot(x0), s).unwrap_or_else(|| best_diagonal_start(a, s));
    let mut value = rayleigh(a.values(), &x);
    let mut history = vec![value];
    for _ in 1..iters {
        let Some(next) = truncate_top(&a.values().dot(&x), s) else {
            break;
        };
        let next_value = rayleigh(a.values(), &next);
        let same_support = (0..d).all(|i| (x[i] == 0.0) == (next[i] == 0.0));
        let change = (next_value - value).abs();
        x = next;
        value = next_value;
        history.push(value);
        if same_support && change < 1e-10 {
            break;
        }
    }
    (to_sparse(&x, s, value), history)
}

/// Best of `restarts` truncated power runs from seeded random unit starts.
/// Heuristic; no optimality guarantee.
pub fn tpower_single(a: &PsdMatrix, s: usize, settings: TPowerSettings) -> Result<SparseVector> {
    let d = a.dim();
    if s == 0 || s > d {
        return invalid(format!("sparsity {s} must lie in 1..={d}"));
    }
    if settings.iters == 0 || settings.restarts == 0 {
        return invalid("iters and restarts must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut best: Option<SparseVector> = None;
    for _ in 0..settings.restarts {
        let mut x0: Array1<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = x0.dot(&x0).sqrt();
        x0 /= n;
        let (cand, _) = tpower_run(a, s, &x0, settings.iters);
        if best.as_ref().is_none_or(|b| cand.value > b.value) {
            best = Some(cand);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

fn rayleigh(a: &Array2<f64>, x: &Array1<f64>) -> f64 {
    x.dot(&a.dot(x))
}

/// Keeps the `s` largest-magnitude entries (lowest index on ties) and
/// normalizes. `None` when the kept part vanishes.
fn truncate_top(y: &Array1<f64>, s: usize) -> Option<Array1<f64>> {
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&i, &j| y[j].abs().total_cmp(&y[i].abs()).then(i.cmp(&j)));
    let mut x = Array1::zeros(y.len());
    for &i in &order[..s] {
        x[i] = y[i];
    }
    let n = x.dot(&x).sqrt();
    (n > 0.0).then(|| x / n)
}

fn best_diagonal_start(a: &PsdMatrix, s: usize) -> Array1<f64> {
    let diag = a.values().diag().to_owned();
    truncate_top(&diag, s).unwrap_or_else(|| {
        let mut e = Array1::zeros(a.dim());
        e[0] = 1.0;
        e
    })
}

/// Support is padded with the lowest unused indices if the vector has fewer
/// than `s` nonzeros.
fn to_sparse(x: &Array1<f64>, s: usize, value: f64) -> SparseVector {
    let mut support: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
    for i in 0..x.len() {
        if support.len() >= s {
            break;
        }
        if x[i] == 0.0 {
            support.push(i);
        }
    }
    support.sort_unstable();
    let mut values: Array1<f64> = support.iter().map(|&i| x[i]).collect();
    fix_sign(&mut values);
    SparseVector {
        column: SparseColumn {
            support,
            values: values.to_vec(),
        },
        value,
    }
}

/// Single-component solver used inside deflation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingleSolver {
    TPower(TPowerSettings),
    Exact,
}

fn solve_single(a: &PsdMatrix, s: usize, single: SingleSolver) -> Result<SparseColumn> {
    match single {
        SingleSolver::TPower(settings) => Ok(tpower_single(a, s, settings)?.column),
        SingleSolver::Exact => {
            let opt = brute_force_opt(a, 1, s)?;
            let set = opt.opt_supports.sets()[0].clone();
            let (_, mut v) = block_top_eigenpair(a, &set);
            fix_sign(&mut v);
            Ok(SparseColumn {
                support: set,
                values: v.to_vec(),
            })
        }
    }
}

/// Greedy extraction: solve one component, remove its variables, repeat.
pub fn deflate_greedy(a: &PsdMatrix, k: usize, s: usize, single: SingleSolver) -> Result<ComponentSet> {
    let d = a.dim();
    check_sparsity(d, k, s)?;
    let mut alive: Vec<usize> = (0..d).collect();
    let mut columns = Vec::with_capacity(k);
    for _ in 0..k {
        let sub = a.restrict(&alive);
        let local = solve_single(&sub, s, single)?;
        let support: Vec<usize> = local.support.iter().map(|&i| alive[i]).collect();
        alive.retain(|i| !support.contains(i));
        columns.push(SparseColumn {
            support,
            values: local.values,
        });
    }
    ComponentSet::new(d, s, columns)
}
