//! Least-squares solver for the two-dimensional Dirichlet Monge-Ampere
//! problem `det[D^2 u] = f`, `u = 0` on the boundary, `u` convex.
//!
//! The problem is recast as the minimization of the residual functional
//! `J(g) = 1/2 * integral (det D^2 u^g - f)^2` over nonnegative source
//! shifts `g`, where `u^g` solves the Poisson problem
//! `laplace u = 2 sqrt(f) + g` with zero Dirichlet data. Any `u` solving
//! the original problem satisfies `laplace u >= 2 sqrt(f)` (the Hessian
//! eigenvalues have sum `laplace u` and product `f`), so the true solution
//! is recovered at the minimizer.
//!
//! Pipeline, one module per stage:
//! - [`mesh`]: disk triangulations, mesh files, patch areas `A_k`;
//! - [`fem`]: P1 Galerkin operators and the Dirichlet Poisson solve;
//! - [`hessian`]: vertex-rule discrete second derivatives and the
//!   discrete determinant;
//! - [`objective`]: the discrete functional `J_h`, its adjoint gradient,
//!   and a finite-difference oracle;
//! - [`optimizer`]: conjugate-gradient descent (Polak-Ribiere or
//!   Fletcher-Reeves beta) with Armijo backtracking;
//! - [`problems`]: built-in benchmark problems on the unit disk and the
//!   discrete L2 error norm.

pub mod fem;
pub mod hessian;
pub mod mesh;
pub mod objective;
pub mod optimizer;
pub mod problems;
pub mod util;

pub use fem::{FemContext, FemError, NodalField, SparseOperator, Support};
pub use hessian::DiscreteHessian;
pub use mesh::{generate_disk_mesh, Mesh, MeshError, MeshWarning};
pub use objective::{ObjectiveError, ObjectiveState};
pub use optimizer::{
    ArmijoParams, BetaRule, IterationRecord, OptimizerConfig, OptimizerError, RunReport,
    TerminationReason,
};
pub use problems::{builtin_problem, l2_error, BuiltinProblem, ProblemSpec};
