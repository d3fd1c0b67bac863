//! P1 Galerkin operators on a [`Mesh`] and the Dirichlet Poisson
//! subproblem that maps a source shift `g` to the candidate solution
//! `u^g`.
//!
//! All integrals of products of P1 gradients are exact (the gradients are
//! piecewise constant); source terms use the vertex (trapezoidal) rule,
//! which lumps `integral(s w_k)` into `(A_k / 3) s(P_k)`.

mod cholesky;
mod sparse;

pub use cholesky::EnvelopeCholesky;
pub use sparse::SparseOperator;

use thiserror::Error;

use crate::mesh::Mesh;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("mesh has no interior vertices")]
    NoInteriorVertices,
    #[error("field support mismatch: expected {expected:?}, got {got:?}")]
    SupportMismatch { expected: Support, got: Support },
    #[error("stiffness operator is not positive definite (pivot {pivot} failed)")]
    NotPositiveDefinite { pivot: usize },
}

/// Where a nodal coefficient vector lives: one value per mesh vertex, or
/// one per interior vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    AllVertices,
    InteriorOnly,
}

/// A P1 function by its nodal coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    values: Vec<f64>,
    support: Support,
}

impl NodalField {
    pub fn full(mesh: &Mesh, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), mesh.n_vertices(), "full field length");
        NodalField {
            values,
            support: Support::AllVertices,
        }
    }

    pub fn interior(mesh: &Mesh, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), mesh.n_interior(), "interior field length");
        NodalField {
            values,
            support: Support::InteriorOnly,
        }
    }

    /// Full field sampling `f` at every vertex.
    pub fn full_from_fn(mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self::full(mesh, mesh.vertices().iter().map(|&p| f(p)).collect())
    }

    /// Interior field sampling `f` at interior vertices.
    pub fn interior_from_fn(mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self::interior(
            mesh,
            mesh.interior_vertices()
                .iter()
                .map(|&v| f(mesh.vertices()[v]))
                .collect(),
        )
    }

    pub fn constant(mesh: &Mesh, support: Support, value: f64) -> Self {
        match support {
            Support::AllVertices => Self::full(mesh, vec![value; mesh.n_vertices()]),
            Support::InteriorOnly => Self::interior(mesh, vec![value; mesh.n_interior()]),
        }
    }

    pub fn zeros(mesh: &Mesh, support: Support) -> Self {
        Self::constant(mesh, support, 0.0)
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Extends an interior field by zero to all vertices; the result
    /// represents a member of the zero-trace space.
    pub fn extend_to_full(&self, mesh: &Mesh) -> NodalField {
        assert_eq!(self.support, Support::InteriorOnly);
        let mut full = vec![0.0; mesh.n_vertices()];
        for (k, &v) in mesh.interior_vertices().iter().enumerate() {
            full[v] = self.values[k];
        }
        NodalField::full(mesh, full)
    }

    /// Drops boundary components of a full field.
    pub fn restrict_to_interior(&self, mesh: &Mesh) -> NodalField {
        assert_eq!(self.support, Support::AllVertices);
        NodalField::interior(
            mesh,
            mesh.interior_vertices()
                .iter()
                .map(|&v| self.values[v])
                .collect(),
        )
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Coordinate axis of a first derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    fn idx(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }
}

/// Constant gradients of the three barycentric hat functions on triangle
/// `t`, plus the triangle area.
fn p1_gradients(mesh: &Mesh, t: usize) -> ([[f64; 2]; 3], f64) {
    let tri = mesh.triangles()[t];
    let p = [
        mesh.vertices()[tri[0]],
        mesh.vertices()[tri[1]],
        mesh.vertices()[tri[2]],
    ];
    let area = mesh.triangle_area(t);
    let mut grads = [[0.0; 2]; 3];
    for i in 0..3 {
        let b = p[(i + 1) % 3];
        let c = p[(i + 2) % 3];
        grads[i] = [(b[1] - c[1]) / (2.0 * area), (c[0] - b[0]) / (2.0 * area)];
    }
    (grads, area)
}

/// Assembles the full (all-vertex by all-vertex) stiffness matrix
/// `integral(grad w_k . grad w_l)` with no boundary condition applied.
pub fn assemble_full_stiffness(mesh: &Mesh) -> SparseOperator {
    let mut trips = Vec::with_capacity(9 * mesh.triangles().len());
    for t in 0..mesh.triangles().len() {
        let (g, area) = p1_gradients(mesh, t);
        let tri = mesh.triangles()[t];
        for a in 0..3 {
            for b in 0..3 {
                let v = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                trips.push((tri[a], tri[b], v));
            }
        }
    }
    SparseOperator::from_triplets(mesh.n_vertices(), mesh.n_vertices(), trips, true)
}

/// Assembles the interior-by-interior stiffness operator of the
/// zero-trace space, indexed by the mesh's interior numbering.
pub fn assemble_stiffness(mesh: &Mesh) -> Result<SparseOperator, FemError> {
    let n0 = mesh.n_interior();
    if n0 == 0 {
        return Err(FemError::NoInteriorVertices);
    }
    let mut trips = Vec::with_capacity(9 * mesh.triangles().len());
    for t in 0..mesh.triangles().len() {
        let (g, area) = p1_gradients(mesh, t);
        let tri = mesh.triangles()[t];
        for a in 0..3 {
            let Some(row) = mesh.interior_index(tri[a]) else {
                continue;
            };
            for b in 0..3 {
                let Some(col) = mesh.interior_index(tri[b]) else {
                    continue;
                };
                let v = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                trips.push((row, col, v));
            }
        }
    }
    Ok(SparseOperator::from_triplets(n0, n0, trips, true))
}

/// Assembles the directional form `integral((d w_l / d x_i)(d w_k / d x_j))`,
/// symmetrized for mixed axes (`1/2 [d1 . d2 + d2 . d1]`), with interior
/// test rows and all-vertex columns. Swapping the axes returns the same
/// operator.
pub fn assemble_directional_stiffness(mesh: &Mesh, i: Axis, j: Axis) -> SparseOperator {
    directional(mesh, i, j, false)
}

/// All-vertex by all-vertex variant of
/// [`assemble_directional_stiffness`]; element matrices are inspectable
/// directly on single-triangle meshes.
pub fn assemble_directional_stiffness_full(mesh: &Mesh, i: Axis, j: Axis) -> SparseOperator {
    directional(mesh, i, j, true)
}

fn directional(mesh: &Mesh, i: Axis, j: Axis, full_rows: bool) -> SparseOperator {
    let (di, dj) = (i.idx(), j.idx());
    let nrows = if full_rows {
        mesh.n_vertices()
    } else {
        mesh.n_interior()
    };
    let mut trips = Vec::with_capacity(9 * mesh.triangles().len());
    for t in 0..mesh.triangles().len() {
        let (g, area) = p1_gradients(mesh, t);
        let tri = mesh.triangles()[t];
        for a in 0..3 {
            // test function w_k row
            let row = if full_rows {
                tri[a]
            } else {
                match mesh.interior_index(tri[a]) {
                    Some(r) => r,
                    None => continue,
                }
            };
            for b in 0..3 {
                // trial function w_l column
                let v = 0.5 * area * (g[b][di] * g[a][dj] + g[b][dj] * g[a][di]);
                trips.push((row, tri[b], v));
            }
        }
    }
    SparseOperator::from_triplets(nrows, mesh.n_vertices(), trips, full_rows)
}

/// Vertex-rule load: component `k = (A_k / 3) s(P_k)` for each interior
/// vertex. The Poisson right-hand side applies the sign separately.
pub fn lumped_load(mesh: &Mesh, s: &NodalField) -> Result<NodalField, FemError> {
    if s.support() != Support::AllVertices {
        return Err(FemError::SupportMismatch {
            expected: Support::AllVertices,
            got: s.support(),
        });
    }
    Ok(NodalField::interior(
        mesh,
        mesh.interior_vertices()
            .iter()
            .map(|&v| mesh.vertex_area(v) / 3.0 * s.values()[v])
            .collect(),
    ))
}

/// Assembled operators and the reusable factorization for one mesh.
///
/// The stiffness never changes during a minimization run, so it is
/// factored once here; every Poisson and adjoint solve reuses the
/// factors. Immutable after construction and safe to share across
/// concurrent solves.
pub struct FemContext<'m> {
    mesh: &'m Mesh,
    stiffness: SparseOperator,
    cholesky: EnvelopeCholesky,
    k11: SparseOperator,
    k22: SparseOperator,
    k12: SparseOperator,
}

impl<'m> FemContext<'m> {
    pub fn build(mesh: &'m Mesh) -> Result<Self, FemError> {
        let stiffness = assemble_stiffness(mesh)?;
        let cholesky = EnvelopeCholesky::factor(&stiffness)?;
        Ok(FemContext {
            mesh,
            stiffness,
            cholesky,
            k11: assemble_directional_stiffness(mesh, Axis::X, Axis::X),
            k22: assemble_directional_stiffness(mesh, Axis::Y, Axis::Y),
            k12: assemble_directional_stiffness(mesh, Axis::X, Axis::Y),
        })
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn stiffness(&self) -> &SparseOperator {
        &self.stiffness
    }

    pub fn k11(&self) -> &SparseOperator {
        &self.k11
    }

    pub fn k22(&self) -> &SparseOperator {
        &self.k22
    }

    pub fn k12(&self) -> &SparseOperator {
        &self.k12
    }

    /// Solves the interior stiffness system for an arbitrary right-hand
    /// side in interior numbering.
    pub fn solve_interior(&self, rhs: &[f64]) -> Vec<f64> {
        self.cholesky.solve(rhs)
    }

    /// Solves the discrete Dirichlet Poisson problem
    /// `laplace u = source`, `u = 0` on the boundary: the interior
    /// coefficients satisfy `stiffness * u = -lumped_load(source)` and the
    /// boundary values are exactly zero.
    pub fn solve_poisson(&self, source: &NodalField) -> Result<NodalField, FemError> {
        let load = lumped_load(self.mesh, source)?;
        let rhs: Vec<f64> = load.values().iter().map(|v| -v).collect();
        let u_int = self.cholesky.solve(&rhs);
        Ok(NodalField::interior(self.mesh, u_int).extend_to_full(self.mesh))
    }
}

/// One-off Poisson solve; builds and drops a [`FemContext`].
pub fn solve_poisson(mesh: &Mesh, source: &NodalField) -> Result<NodalField, FemError> {
    FemContext::build(mesh)?.solve_poisson(source)
}
