//! Experiment driver: runs one algorithm on a dataset and produces a
//! machine-readable report, cumulative-variance table and topic listings;
//! compares several algorithms side by side.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::baselines::{brute_force_opt, deflate_greedy, SingleSolver, TPowerSettings};
use crate::error::{invalid, Result};
use crate::io::{Dataset, DatasetMatrix};
use crate::linalg::{explained_variance, sym_eig_truncated, DEFAULT_REL_TOL};
use crate::net::NetConstruction;
use crate::sketch::{sketch_error_term, SketchMethod, SketchSpec};
use crate::solver::{solve_multi_spca, ComponentSet, SolverConfig, Termination};

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Joint,
    DeflateTpower,
    DeflateExact,
    Oracle,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Joint => "joint",
            Algorithm::DeflateTpower => "deflate_tpower",
            Algorithm::DeflateExact => "deflate_exact",
            Algorithm::Oracle => "oracle",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub dataset: String,
    pub algorithm: Algorithm,
    pub k: usize,
    pub s: usize,
    pub eps: f64,
    /// Sketch used by the joint solver; `None` factors the full covariance.
    pub sketch: Option<SketchSpec>,
    pub time_budget_ms: Option<u64>,
    pub seed: u64,
    pub polish: bool,
    pub antipodal_reduce: bool,
    pub workers: usize,
    /// `None` picks the dataset's default (center sample data, not corpora).
    pub center: Option<bool>,
    pub tpower_iters: usize,
    pub tpower_restarts: usize,
}

impl RunSpec {
    /// Defaults of the command-line driver: rank-4 truncated-SVD sketch,
    /// polishing and antipodal reduction on.
    pub fn new(dataset: impl Into<String>, algorithm: Algorithm, k: usize, s: usize, eps: f64) -> Self {
        let tp = TPowerSettings::default();
        Self {
            dataset: dataset.into(),
            algorithm,
            k,
            s,
            eps,
            sketch: Some(SketchSpec {
                method: SketchMethod::TruncatedSvd,
                target_rank: 4,
                seed: 0,
            }),
            time_budget_ms: None,
            seed: 0,
            polish: true,
            antipodal_reduce: true,
            workers: 1,
            center: None,
            tpower_iters: tp.iters,
            tpower_restarts: tp.restarts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SketchSummary {
    pub method: SketchMethod,
    pub r: usize,
    pub seed: Option<u64>,
    /// `2 k max(lambda_1(A - A_bar), 0)`, an upper bound on the additive loss.
    pub error_lambda1_bound: f64,
    /// Random source of the Gaussian sketch.
    pub sampler: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicWord {
    pub word: String,
    pub index: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub spec: RunSpec,
    pub objective: f64,
    pub per_component: Vec<f64>,
    pub supports: Vec<Vec<usize>>,
    pub values: Vec<Vec<f64>>,
    pub net_points_total: u64,
    pub net_points_examined: u64,
    pub guarantee_factor: f64,
    pub elapsed_ms: f64,
    pub termination: Termination,
    pub sketch: Option<SketchSummary>,
    pub covariance_scaling: String,
    pub library_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topics: Option<Vec<Vec<TopicWord>>>,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| crate::error::SpcaError::ParseError {
            line: e.line(),
            col: Some(e.column()),
            msg: e.to_string(),
        })
    }

    /// Rebuilds the component matrix from the reported supports and values.
    pub fn components(&self, dim: usize) -> Result<ComponentSet> {
        let columns = self
            .supports
            .iter()
            .zip(&self.values)
            .map(|(s, v)| crate::solver::SparseColumn {
                support: s.clone(),
                values: v.clone(),
            })
            .collect();
        ComponentSet::new(dim, self.spec.s, columns)
    }

    /// `j,<variance captured by the first j components>` for `j = 1..k`.
    pub fn cumulative_csv(&self) -> String {
        let mut acc = 0.0;
        let mut out = String::new();
        for (j, v) in self.per_component.iter().enumerate() {
            acc += v;
            out.push_str(&format!("{},{:?}\n", j + 1, acc));
        }
        out
    }

    /// One line per component: the words of its support, highest `|value|`
    /// first.
    pub fn topics_text(&self) -> Option<String> {
        let topics = self.topics.as_ref()?;
        let mut out = String::new();
        for (j, t) in topics.iter().enumerate() {
            let words: Vec<&str> = t.iter().map(|w| w.word.as_str()).collect();
            out.push_str(&format!("topic {}: {}\n", j + 1, words.join(" ")));
        }
        Some(out)
    }
}

/// Per component, the support's words ordered by decreasing `|value|` (ties
/// by index).
pub fn topic_listing(x: &ComponentSet, vocabulary: &[String]) -> Vec<Vec<TopicWord>> {
    x.columns()
        .iter()
        .map(|c| {
            let mut words: Vec<TopicWord> = c
                .support
                .iter()
                .zip(&c.values)
                .map(|(&i, &v)| TopicWord {
                    word: vocabulary[i].clone(),
                    index: i,
                    value: v,
                })
                .collect();
            words.sort_by(|a, b| b.value.abs().total_cmp(&a.value.abs()).then(a.index.cmp(&b.index)));
            words
        })
        .collect()
}

/// Runs `spec` on `ds`.
pub fn run(ds: &Dataset, spec: &RunSpec) -> Result<Report> {
    let start = Instant::now();
    let a = ds.covariance(spec.center)?;
    let center = spec.center.unwrap_or(ds.default_center());
    let covariance_scaling = match &ds.matrix {
        DatasetMatrix::Data(_) if center => "(1/n) S^T S, columns centered",
        DatasetMatrix::Data(_) => "(1/n) S^T S, uncentered",
        DatasetMatrix::Covariance(_) => "covariance given",
    }
    .to_owned();
    let mut sketch = None;
    let mut net_points = (0, 0);
    let mut guarantee_factor = 0.0;
    let mut termination = Termination::Complete;

    let components = match spec.algorithm {
        Algorithm::Joint => {
            let (factor, summary) = match spec.sketch {
                Some(sk_spec) => {
                    let sk = sk_spec.apply(&a)?;
                    let summary = SketchSummary {
                        method: sk.method,
                        r: sk.rank,
                        seed: sk.seed,
                        error_lambda1_bound: sketch_error_term(&sk, spec.k),
                        sampler: (sk.method == SketchMethod::GaussianJl)
                            .then(|| "ChaCha8Rng, rand_distr::Normal (ziggurat)".to_owned()),
                    };
                    (sk.factor()?, Some(summary))
                }
                None => (sym_eig_truncated(&a, None, DEFAULT_REL_TOL)?, None),
            };
            sketch = summary;
            let cfg = SolverConfig {
                eps: spec.eps,
                k: spec.k,
                s: spec.s,
                rank_cap: None,
                time_budget: spec.time_budget_ms.map(Duration::from_millis),
                polish: spec.polish,
                antipodal_reduce: spec.antipodal_reduce,
                net_construction: NetConstruction::AngularGrid,
                workers: spec.workers,
            };
            let rep = solve_multi_spca(&factor, &a, &cfg)?;
            net_points = (rep.net_points_total, rep.net_points_examined);
            guarantee_factor = rep.guarantee_factor;
            termination = rep.termination;
            rep.best
        }
        Algorithm::DeflateTpower => deflate_greedy(
            &a,
            spec.k,
            spec.s,
            SingleSolver::TPower(TPowerSettings {
                iters: spec.tpower_iters,
                restarts: spec.tpower_restarts,
                seed: spec.seed,
            }),
        )?,
        Algorithm::DeflateExact => deflate_greedy(&a, spec.k, spec.s, SingleSolver::Exact)?,
        Algorithm::Oracle => {
            guarantee_factor = 1.0;
            brute_force_opt(&a, spec.k, spec.s)?.components(&a)?
        }
    };

    let variance = explained_variance(&a, &components)?;
    // report components in decreasing order of captured variance
    let mut order: Vec<usize> = (0..components.count()).collect();
    order.sort_by(|&i, &j| variance.per_component[j].total_cmp(&variance.per_component[i]));
    let cols = components.columns();
    let sorted = ComponentSet::new(
        components.dim(),
        components.sparsity(),
        order.iter().map(|&j| cols[j].clone()).collect(),
    )?;
    let topics = ds.vocabulary.as_deref().map(|v| topic_listing(&sorted, v));

    Ok(Report {
        spec: spec.clone(),
        objective: variance.total,
        per_component: order.iter().map(|&j| variance.per_component[j]).collect(),
        supports: sorted.columns().iter().map(|c| c.support.clone()).collect(),
        values: sorted.columns().iter().map(|c| c.values.clone()).collect(),
        net_points_total: net_points.0,
        net_points_examined: net_points.1,
        guarantee_factor,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        termination,
        sketch,
        covariance_scaling,
        library_version: LIBRARY_VERSION.to_owned(),
        topics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub algorithm: Algorithm,
    pub objective: f64,
    pub per_component: Vec<f64>,
    pub elapsed_ms: f64,
    pub guarantee_factor: f64,
    pub termination: Termination,
    pub spec: RunSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub dataset: String,
    pub k: usize,
    pub s: usize,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("comparison serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("algorithm,objective,per_component,elapsed_ms,guarantee_factor,termination,eps\n");
        for r in &self.rows {
            let per: Vec<String> = r.per_component.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&format!(
                "{},{:?},{},{:.3},{:?},{},{:?}\n",
                r.algorithm,
                r.objective,
                per.join(";"),
                r.elapsed_ms,
                r.guarantee_factor,
                match r.termination {
                    Termination::Complete => "complete",
                    Termination::TimeBudget => "time_budget",
                },
                r.spec.eps
            ));
        }
        out
    }
}

/// Runs each spec on the same dataset; all specs must agree on dataset, `k`
/// and `s`.
pub fn compare(ds: &Dataset, specs: &[RunSpec]) -> Result<Comparison> {
    let Some(first) = specs.first() else {
        return invalid("compare needs at least one run");
    };
    if let Some(bad) = specs
        .iter()
        .find(|s| s.dataset != first.dataset || s.k != first.k || s.s != first.s)
    {
        return invalid(format!(
            "run for {} ({}, k={}, s={}) does not match {} (k={}, s={})",
            bad.algorithm, bad.dataset, bad.k, bad.s, first.dataset, first.k, first.s
        ));
    }
    let rows = specs
        .iter()
        .map(|spec| {
            let rep = run(ds, spec)?;
            Ok(ComparisonRow {
                algorithm: spec.algorithm,
                objective: rep.objective,
                per_component: rep.per_component,
                elapsed_ms: rep.elapsed_ms,
                guarantee_factor: rep.guarantee_factor,
                termination: rep.termination,
                spec: spec.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison {
        dataset: first.dataset.clone(),
        k: first.k,
        s: first.s,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::appendix_example;

    fn appendix() -> Dataset {
        Dataset::from_covariance("appendix", appendix_example(0.1, 0.1).unwrap())
    }

    #[test]
    fn oracle_run() {
        let rep = run(&appendix(), &RunSpec::new("appendix", Algorithm::Oracle, 2, 2, 0.9)).unwrap();
        assert!((rep.objective - 2.0).abs() < 1e-12);
        assert_eq!(rep.supports, vec![vec![0, 1], vec![2, 3]]);
        assert!(rep.sketch.is_none());
    }

    #[test]
    fn deflate_exact_run() {
        let rep = run(
            &appendix(),
            &RunSpec::new("appendix", Algorithm::DeflateExact, 2, 2, 0.9),
        )
        .unwrap();
        assert!((rep.objective - 1.2).abs() < 1e-12);
        assert_eq!(rep.supports[0], vec![0, 3]);
    }

    #[test]
    fn joint_run_and_cumulative() {
        let rep = run(&appendix(), &RunSpec::new("appendix", Algorithm::Joint, 2, 2, 0.9)).unwrap();
        assert!((rep.objective - 2.0).abs() < 1e-9);
        let csv = rep.cumulative_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "2,2.0");
        assert!(lines[0].starts_with("1,"));
        assert_eq!(rep.guarantee_factor, 1.0 - 0.9);
        assert_eq!(rep.sketch.as_ref().unwrap().error_lambda1_bound, 0.0);
    }

    #[test]
    fn report_round_trip() {
        let ds = appendix();
        let a = ds.covariance(None).unwrap();
        let rep = run(&ds, &RunSpec::new("appendix", Algorithm::Joint, 2, 2, 0.9)).unwrap();
        let back = Report::from_json(&rep.to_json()).unwrap();
        let x = back.components(4).unwrap();
        let ev = explained_variance(&a, &x).unwrap();
        assert!((ev.total - back.objective).abs() < 1e-9);
        for (p, q) in ev.per_component.iter().zip(&back.per_component) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn compare_rows() {
        let ds = appendix();
        let specs: Vec<RunSpec> = [Algorithm::Joint, Algorithm::DeflateExact, Algorithm::Oracle]
            .into_iter()
            .map(|alg| RunSpec::new("appendix", alg, 2, 2, 0.9))
            .collect();
        let cmp = compare(&ds, &specs).unwrap();
        let objs: Vec<f64> = cmp.rows.iter().map(|r| r.objective).collect();
        assert!((objs[0] - 2.0).abs() < 1e-9);
        assert!((objs[1] - 1.2).abs() < 1e-12);
        assert!((objs[2] - 2.0).abs() < 1e-12);
        assert_eq!(cmp.to_csv().lines().count(), 4);

        let one = compare(&ds, &specs[..1]).unwrap();
        assert_eq!(one.rows.len(), 1);

        let mut bad = specs.clone();
        bad[1].s = 1;
        assert!(compare(&ds, &bad).is_err());
        assert!(compare(&ds, &[]).is_err());
    }

    #[test]
    fn topics_are_ordered() {
        let mut x = ndarray::Array2::<f64>::zeros((3, 5));
        for (t, row) in x.rows_mut().into_iter().enumerate() {
            let _ = (t, row);
        }
        x[[0, 0]] = 1.0;
        x[[0, 1]] = 3.0;
        x[[1, 2]] = 2.0;
        x[[2, 3]] = -4.0;
        x[[2, 4]] = 0.5;
        let s = crate::linalg::DataMatrix::new(x).unwrap();
        let vocab: Vec<String> = ["a", "b", "c", "d", "e"].iter().map(|w| w.to_string()).collect();
        let ds = Dataset::from_data("toy", s, Some(vocab)).unwrap();
        let mut spec = RunSpec::new("toy", Algorithm::DeflateExact, 2, 2, 0.5);
        spec.center = Some(false);
        let rep = run(&ds, &spec).unwrap();
        for topic in rep.topics.as_ref().unwrap() {
            for w in topic.windows(2) {
                assert!(w[0].value.abs() >= w[1].value.abs());
            }
        }
        assert!(rep.topics_text().unwrap().starts_with("topic 1: d"));
    }
}
