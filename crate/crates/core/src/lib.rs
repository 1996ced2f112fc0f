//! Limiting-subdifferential calculus for composite nonsmooth functions,
//! represented as unions of convex polytopes in vertex form, plus the
//! LP machinery that decides robust Fritz-John/KKT certificates,
//! constraint qualifications, pseudo-convexity falsification and
//! Mond-Weir duality audits for uncertain multiobjective problems.

pub mod apps;
pub mod certify;
pub mod expr;
pub mod polyset;
pub mod robust;
pub mod subdiff;
pub mod verify;

pub use apps::{builtin_example, AupSpec, CulSpec, Fixture};
pub use certify::{Certificate, Verdict, VerdictStatus};
pub use expr::Expr;
pub use polyset::{LpStatus, LpWitness, PolyUnion, Polytope};
pub use robust::{RobustProblem, UncertaintySet};
pub use subdiff::{Exactness, SubdiffResult};
pub use verify::{DualPoint, EfficiencyReport, PseudoConvexityReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("point {0:?} lies outside the declared evaluation box")]
    OutsideBox(Vec<f64>),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("candidate point is not robust-feasible: {0}")]
    Infeasible(String),
    #[error("LP iteration cap exceeded ({0} iterations)")]
    IterationCap(usize),
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Activity tolerance for max branches / active uncertainty detection.
pub const EPS_ACT: f64 = 1e-8;
/// Membership tolerance for polytope membership LPs.
pub const TOL_MEMBER: f64 = 1e-8;
/// LP feasibility tolerance.
pub const TOL_LP: f64 = 1e-9;
/// Vertex deduplication tolerance.
pub const TOL_VERTEX: f64 = 1e-10;
/// Kink detection tolerance on a primitive's scalar argument.
pub const TOL_KINK: f64 = 1e-12;
