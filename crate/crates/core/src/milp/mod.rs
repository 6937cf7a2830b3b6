//! The mixed-integer model: explicit big-M rows, LP-file export and parse,
//! and two exact solvers (enumeration and branch-and-bound).

mod bnb;
mod brute;
mod lp_format;
mod model;

pub use bnb::{branch_and_bound, branch_and_bound_observed, NodeObserver, SolveOptions, ZERO_OBJECTIVE};
pub use brute::{brute_force, brute_force_weighted, BRUTE_FORCE_GUARD};
pub use lp_format::{export_lp, parse_lp};
pub use model::{build_model, holder_big_m, Constraint, MilpModel, Objective, Sense, VarKind, Variable};
