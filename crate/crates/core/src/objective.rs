//! The discrete least-squares functional
//! `J_h(g) = (1/6) sum_k A_k (det_k - f_k)^2`, its residual field, and its
//! exact gradient with respect to the nodal values of `g`.
//!
//! The `1/6` realizes `1/2 * integral((det - f)^2)` under the vertex rule
//! `integral(s) ~ sum_k (A_k / 3) s(P_k)`. The gradient differentiates the
//! frozen discrete pipeline (Poisson solve, discrete Hessian, determinant,
//! weighted sum) by the chain rule and one adjoint solve; the
//! finite-difference oracle [`fd_gradient`] is the ground truth all signs
//! and scalings are verified against.

use thiserror::Error;

use crate::fem::{FemContext, FemError, NodalField, Support};
use crate::hessian::{discrete_determinant, discrete_hessian, DiscreteHessian};
use crate::mesh::Mesh;

#[derive(Debug, Error)]
pub enum ObjectiveError {
    /// The source density must admit a real square root everywhere.
    #[error("source density is negative at vertex {vertex}: f = {value}")]
    NegativeDensity { vertex: usize, value: f64 },
    #[error(transparent)]
    Fem(#[from] FemError),
}

/// Everything the functional evaluation produces for one `g`.
#[derive(Debug, Clone)]
pub struct ObjectiveState {
    /// The source shift this state was evaluated at (interior).
    pub g: NodalField,
    /// Poisson solution `u^g` (full, zero boundary).
    pub u: NodalField,
    pub hessian: DiscreteHessian,
    /// `det_k - f_k` at interior vertices.
    pub residual: NodalField,
    /// Functional value, always nonnegative.
    pub j: f64,
}

/// `(1/6) sum_k A_k r_k^2` over interior vertices.
pub fn functional_value(mesh: &Mesh, residual: &NodalField) -> f64 {
    assert_eq!(residual.support(), Support::InteriorOnly);
    residual
        .values()
        .iter()
        .enumerate()
        .map(|(k, r)| mesh.vertex_area(mesh.interior_vertex(k)) * r * r)
        .sum::<f64>()
        / 6.0
}

fn check_density(f: &NodalField) -> Result<(), ObjectiveError> {
    for (vertex, &value) in f.values().iter().enumerate() {
        if value < 0.0 {
            return Err(ObjectiveError::NegativeDensity { vertex, value });
        }
    }
    Ok(())
}

/// Runs the pipeline `g -> u^g -> D^2_h -> det -> J` once.
///
/// `f` holds the nodal values of the source density; it must be
/// nonnegative everywhere (the Poisson source is `2 sqrt(f) + g`).
pub fn evaluate(
    ctx: &FemContext,
    f: &NodalField,
    g: &NodalField,
) -> Result<ObjectiveState, ObjectiveError> {
    let mesh = ctx.mesh();
    if f.support() != Support::AllVertices {
        return Err(FemError::SupportMismatch {
            expected: Support::AllVertices,
            got: f.support(),
        }
        .into());
    }
    if g.support() != Support::InteriorOnly {
        return Err(FemError::SupportMismatch {
            expected: Support::InteriorOnly,
            got: g.support(),
        }
        .into());
    }
    check_density(f)?;

    let g_full = g.extend_to_full(mesh);
    let source = NodalField::full(
        mesh,
        f.values()
            .iter()
            .zip(g_full.values())
            .map(|(fv, gv)| 2.0 * fv.sqrt() + gv)
            .collect(),
    );
    let u = ctx.solve_poisson(&source)?;
    let hessian = discrete_hessian(ctx, &u)?;
    let det = discrete_determinant(mesh, &hessian);
    let residual = NodalField::interior(
        mesh,
        det.values()
            .iter()
            .enumerate()
            .map(|(k, d)| d - f.values()[mesh.interior_vertex(k)])
            .collect(),
    );
    let j = functional_value(mesh, &residual);
    Ok(ObjectiveState {
        g: g.clone(),
        u,
        hessian,
        residual,
        j,
    })
}

/// Exact gradient of `J_h` at the state's `g`, by the adjoint of the
/// discrete pipeline.
///
/// With `r` the residual and `d11/d22/d12` the Hessian fields, the
/// determinant's sensitivity to `u` transposes into the all-vertex load
/// `K11^T(r d22) + K22^T(r d11) - 2 K12^T(r d12)`; restricting to interior
/// rows, solving once more with the factored stiffness, and scaling by the
/// lumping weights `A_k / 3` yields the gradient. Verified against
/// [`fd_gradient`].
pub fn gradient_from_state(ctx: &FemContext, state: &ObjectiveState) -> NodalField {
    let mesh = ctx.mesh();
    let r = state.residual.values();
    let weight = |other: &NodalField, factor: f64| -> Vec<f64> {
        r.iter()
            .zip(other.values())
            .map(|(rv, ov)| factor * rv * ov)
            .collect()
    };
    let s11 = weight(&state.hessian.d22, 1.0);
    let s22 = weight(&state.hessian.d11, 1.0);
    let s12 = weight(&state.hessian.d12, -2.0);

    let mut load = ctx.k11().apply_transpose(&s11);
    for (l, v) in ctx.k22().apply_transpose(&s22).iter().enumerate() {
        load[l] += v;
    }
    for (l, v) in ctx.k12().apply_transpose(&s12).iter().enumerate() {
        load[l] += v;
    }
    let load_int: Vec<f64> = mesh.interior_vertices().iter().map(|&v| load[v]).collect();
    let lambda = ctx.solve_interior(&load_int);
    NodalField::interior(
        mesh,
        lambda
            .iter()
            .enumerate()
            .map(|(k, l)| mesh.vertex_area(mesh.interior_vertex(k)) / 3.0 * l)
            .collect(),
    )
}

/// Evaluates the functional and its gradient together (one extra solve on
/// top of [`evaluate`]).
pub fn evaluate_with_gradient(
    ctx: &FemContext,
    f: &NodalField,
    g: &NodalField,
) -> Result<(ObjectiveState, NodalField), ObjectiveError> {
    let state = evaluate(ctx, f, g)?;
    let grad = gradient_from_state(ctx, &state);
    Ok((state, grad))
}

/// Gradient of `J_h` at `g`.
pub fn gradient(
    ctx: &FemContext,
    f: &NodalField,
    g: &NodalField,
) -> Result<NodalField, ObjectiveError> {
    Ok(evaluate_with_gradient(ctx, f, g)?.1)
}

/// Central finite-difference gradient: component `k` is
/// `(J(g + eps e_k) - J(g - eps e_k)) / (2 eps)`. Costs two full
/// evaluations per interior vertex; coarse meshes only.
pub fn fd_gradient(
    ctx: &FemContext,
    f: &NodalField,
    g: &NodalField,
    eps: f64,
) -> Result<NodalField, ObjectiveError> {
    assert!(eps > 0.0, "finite-difference step must be positive");
    let mesh = ctx.mesh();
    let mut out = Vec::with_capacity(g.len());
    let mut probe = g.clone();
    for k in 0..g.len() {
        let base = g.values()[k];
        probe.values_mut()[k] = base + eps;
        let j_plus = evaluate(ctx, f, &probe)?.j;
        probe.values_mut()[k] = base - eps;
        let j_minus = evaluate(ctx, f, &probe)?.j;
        probe.values_mut()[k] = base;
        out.push((j_plus - j_minus) / (2.0 * eps));
    }
    Ok(NodalField::interior(mesh, out))
}
