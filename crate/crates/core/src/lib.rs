//! Sparse principal components with disjoint supports.
//!
//! Given a PSD matrix `A`, find `k` unit vectors, each with exactly `s`
//! nonzero entries and pairwise-disjoint supports, maximizing the captured
//! variance `Tr(X^T A X)`. The joint solver enumerates a net over the
//! low-rank span of `A` and solves a bipartite matching per net point; with a
//! complete scan it is within a factor `1 - eps` of the optimum of its input
//! matrix.
//!
//! ```
//! use spca_core::{appendix_example, solve_multi_spca, sym_eig_truncated, SolverConfig};
//!
//! let a = appendix_example(0.1, 0.1).unwrap();
//! let factor = sym_eig_truncated(&a, None, 1e-12).unwrap();
//! let mut cfg = SolverConfig::new(2, 2, 0.9);
//! cfg.polish = true;
//! let report = solve_multi_spca(&factor, &a, &cfg).unwrap();
//! assert!((report.objective - 2.0).abs() < 1e-9);
//! ```

pub mod baselines;
pub mod error;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod matching;
pub mod net;
pub mod sketch;
pub mod solver;

pub use baselines::{
    appendix_example, brute_force_opt, deflate_greedy, tpower_single, OracleResult, SingleSolver, SparseVector,
    TPowerSettings,
};
pub use error::{Result, SpcaError};
pub use experiment::{compare, run, Algorithm, Comparison, Report, RunSpec};
pub use io::{load_covariance_csv, load_dense_csv, load_uci_bow, Dataset, DatasetMatrix};
pub use linalg::{
    explained_variance, gram_from_data, principal_submatrix_lambda_max, sym_eig_truncated, DataMatrix, EigFactor,
    PsdMatrix, Variance,
};
pub use matching::{gen_bigraph, max_weight_perfect_matching, supports_from_matching, Matching, SupportSet};
pub use net::{
    antipodal_reduce, build_sphere_net, build_sphere_net_with, covering_check, CandidateBasis, CartesianPower,
    CoveringReport, NetConstruction, SphereNet,
};
pub use sketch::{
    gaussian_sketch, gaussian_sketch_psd, sketch_error_term, svd_sketch, SketchMethod, SketchResult, SketchSpec,
};
pub use solver::{
    candidate_solution, local_objective, polish, solve_multi_spca, ComponentSet, SolveReport, SolverConfig,
    SparseColumn, Termination,
};
