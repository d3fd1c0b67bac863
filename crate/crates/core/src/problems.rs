//! Benchmark Monge-Ampere problems on the unit disk with analytic source
//! densities and exact solutions, plus the discrete L2 error norm.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

use crate::fem::{NodalField, Support};
use crate::mesh::Mesh;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("problem `{0}` has no exact solution to compare against")]
    NoExactSolution(String),
}

/// Which domain a problem is posed on. Built-in problems live on the unit
/// disk; library users may pose a custom problem on any mesh they load.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    UnitDisk,
    External,
}

type PointFn = Box<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
type HessianFn = Box<dyn Fn([f64; 2]) -> [[f64; 2]; 2] + Send + Sync>;

/// A Monge-Ampere problem: a positive source density `f`, the domain, and
/// (when known) the exact convex solution with its analytic Hessian.
pub struct ProblemSpec {
    name: String,
    domain: Domain,
    f: PointFn,
    exact_u: Option<PointFn>,
    exact_hessian: Option<HessianFn>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("has_exact", &self.exact_u.is_some())
            .finish()
    }
}

impl ProblemSpec {
    /// A caller-defined problem without a known exact solution.
    pub fn custom(
        name: impl Into<String>,
        domain: Domain,
        f: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ProblemSpec {
            name: name.into(),
            domain,
            f: Box::new(f),
            exact_u: None,
            exact_hessian: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Source density at a point.
    pub fn f(&self, p: [f64; 2]) -> f64 {
        (self.f)(p)
    }

    pub fn has_exact(&self) -> bool {
        self.exact_u.is_some()
    }

    pub fn exact_u(&self, p: [f64; 2]) -> Option<f64> {
        self.exact_u.as_ref().map(|u| u(p))
    }

    pub fn exact_hessian(&self, p: [f64; 2]) -> Option<[[f64; 2]; 2]> {
        self.exact_hessian.as_ref().map(|h| h(p))
    }

    /// Nodal interpolant of `f` on a mesh.
    pub fn f_nodal(&self, mesh: &Mesh) -> NodalField {
        NodalField::full_from_fn(mesh, |p| self.f(p))
    }

    /// Nodal interpolant of the exact solution.
    pub fn exact_u_nodal(&self, mesh: &Mesh) -> Result<NodalField, ProblemError> {
        let u = self
            .exact_u
            .as_ref()
            .ok_or_else(|| ProblemError::NoExactSolution(self.name.clone()))?;
        Ok(NodalField::full_from_fn(mesh, u))
    }
}

/// The three benchmark problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinProblem {
    /// `f = 4 (1 + 2|x|^2) exp(2(|x|^2 - 1))`, `u = exp(|x|^2 - 1) - 1`.
    Test1,
    /// Trigonometric density, `u = -(4/5) sin(pi/2 (1 - |x|^2))`.
    Test2,
    /// `f = 1`, `u = (|x|^2 - 1) / 2`.
    Test3,
}

impl BuiltinProblem {
    pub const ALL: [BuiltinProblem; 3] = [
        BuiltinProblem::Test1,
        BuiltinProblem::Test2,
        BuiltinProblem::Test3,
    ];

    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "test1" | "1" => Some(BuiltinProblem::Test1),
            "test2" | "2" => Some(BuiltinProblem::Test2),
            "test3" | "3" => Some(BuiltinProblem::Test3),
            _ => None,
        }
    }
}

impl fmt::Display for BuiltinProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BuiltinProblem::Test1 => write!(f, "test1"),
            BuiltinProblem::Test2 => write!(f, "test2"),
            BuiltinProblem::Test3 => write!(f, "test3"),
        }
    }
}

fn rho(p: [f64; 2]) -> f64 {
    p[0] * p[0] + p[1] * p[1]
}

/// Builds one of the named benchmark problems on the unit disk.
pub fn builtin_problem(id: BuiltinProblem) -> ProblemSpec {
    match id {
        BuiltinProblem::Test1 => ProblemSpec {
            name: "test1".into(),
            domain: Domain::UnitDisk,
            f: Box::new(|p| 4.0 * (1.0 + 2.0 * rho(p)) * (2.0 * (rho(p) - 1.0)).exp()),
            exact_u: Some(Box::new(|p| (rho(p) - 1.0).exp() - 1.0)),
            exact_hessian: Some(Box::new(|p| {
                let e = (rho(p) - 1.0).exp();
                [
                    [(2.0 + 4.0 * p[0] * p[0]) * e, 4.0 * p[0] * p[1] * e],
                    [4.0 * p[0] * p[1] * e, (2.0 + 4.0 * p[1] * p[1]) * e],
                ]
            })),
        },
        BuiltinProblem::Test2 => ProblemSpec {
            name: "test2".into(),
            domain: Domain::UnitDisk,
            f: Box::new(|p| {
                let r = rho(p);
                let theta = 0.5 * PI * (1.0 - r);
                (0.8 * PI).powi(2) * (theta.cos().powi(2) + 0.5 * PI * r * (PI * (1.0 - r)).sin())
            }),
            exact_u: Some(Box::new(|p| -0.8 * (0.5 * PI * (1.0 - rho(p))).sin())),
            exact_hessian: Some(Box::new(|p| {
                let theta = 0.5 * PI * (1.0 - rho(p));
                let (sin, cos) = theta.sin_cos();
                let c = 0.8 * PI;
                [
                    [
                        c * (cos + PI * p[0] * p[0] * sin),
                        c * PI * p[0] * p[1] * sin,
                    ],
                    [
                        c * PI * p[0] * p[1] * sin,
                        c * (cos + PI * p[1] * p[1] * sin),
                    ],
                ]
            })),
        },
        BuiltinProblem::Test3 => ProblemSpec {
            name: "test3".into(),
            domain: Domain::UnitDisk,
            f: Box::new(|_| 1.0),
            exact_u: Some(Box::new(|p| 0.5 * (rho(p) - 1.0))),
            exact_hessian: Some(Box::new(|_| [[1.0, 0.0], [0.0, 1.0]])),
        },
    }
}

/// L2 norm of `I_h(exact) - u_h` over the mesh, by exact elementwise
/// integration of the squared P1 difference (the three-midpoint rule is
/// exact for quadratics).
pub fn l2_error(mesh: &Mesh, u_h: &NodalField, problem: &ProblemSpec) -> Result<f64, ProblemError> {
    let exact = problem.exact_u_nodal(mesh)?;
    Ok(l2_distance(mesh, u_h, &exact))
}

/// L2 norm of the difference of two P1 functions given by nodal values.
pub fn l2_distance(mesh: &Mesh, a: &NodalField, b: &NodalField) -> f64 {
    assert_eq!(a.support(), Support::AllVertices);
    assert_eq!(b.support(), Support::AllVertices);
    let e: Vec<f64> = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x - y)
        .collect();
    let mut total = 0.0;
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let (e0, e1, e2) = (e[tri[0]], e[tri[1]], e[tri[2]]);
        // |T|/3 * sum of squared edge-midpoint values
        total += mesh.triangle_area(t) / 12.0
            * ((e0 + e1).powi(2) + (e1 + e2).powi(2) + (e2 + e0).powi(2));
    }
    total.sqrt()
}
