//! Mixed linear regression through a regularized big-M mixed-integer program.

pub mod assign;
pub mod diagnostics;
pub mod error;
pub mod heuristic;
pub mod linalg;
pub mod milp;
pub mod numfmt;
pub mod regress;
pub mod synth;
pub mod types;

pub use assign::{assignment_violations, best_assignment, match_permutation, objective, weighted_objective, Matching};
pub use diagnostics::{rate_slope, rate_trace, RateRow};
pub use error::{Error, Result};
pub use heuristic::{alternate_minimize, multistart, AmOptions, Init};
pub use linalg::{eigen_extremes, gram, solve_ls, LsSolution, Matrix, SymMatrix};
pub use milp::{branch_and_bound, brute_force, build_model, export_lp, parse_lp, MilpModel, SolveOptions};
pub use regress::{fit, fit_weighted, FitReport};
pub use synth::{counterexample, generate, read_csv, write_csv, CounterexampleSpec, GeneratorSpec};
pub use types::{
    Assignment, ClusterReg, CoefficientSet, Dataset, LossConfig, RegConstraint, RegKind, SolveResult, Truth,
};
