//! Discrete second derivatives of P1 functions at interior vertices, and
//! the discrete Monge-Ampere determinant built from them.
//!
//! The fields are recovered weakly: integrating the second derivative
//! against an interior hat function, moving one derivative onto the hat,
//! and evaluating the left side with the vertex rule turns
//! `integral(D_ij u, w_k)` into `(A_k / 3) D_ij(P_k)`, giving
//!
//! ```text
//! d_ii(P_k)  = -(3 / A_k)   * integral((du/dx_i)(dw_k/dx_i))
//! d_12(P_k)  = -(3 / (2A_k))* integral(du/dx1 dw_k/dx2 + du/dx2 dw_k/dx1)
//! ```
//!
//! The integrals are rows of the directional stiffness operators, so one
//! sparse apply per field evaluates all interior vertices at once.

use crate::fem::{FemContext, FemError, NodalField, Support};
use crate::mesh::Mesh;

/// The three distinct components of the recovered Hessian; `d12` doubles
/// as `d21` by the symmetrized construction.
#[derive(Debug, Clone)]
pub struct DiscreteHessian {
    pub d11: NodalField,
    pub d22: NodalField,
    pub d12: NodalField,
}

impl DiscreteHessian {
    /// Assembles a Hessian from precomputed interior fields (test and
    /// diagnostics hook).
    pub fn from_fields(d11: NodalField, d22: NodalField, d12: NodalField) -> Self {
        assert!(
            d11.support() == Support::InteriorOnly
                && d22.support() == Support::InteriorOnly
                && d12.support() == Support::InteriorOnly,
            "Hessian fields live on interior vertices"
        );
        assert!(d11.len() == d22.len() && d22.len() == d12.len());
        DiscreteHessian { d11, d22, d12 }
    }
}

/// Evaluates the three discrete second-derivative fields of `phi`.
pub fn discrete_hessian(ctx: &FemContext, phi: &NodalField) -> Result<DiscreteHessian, FemError> {
    if phi.support() != Support::AllVertices {
        return Err(FemError::SupportMismatch {
            expected: Support::AllVertices,
            got: phi.support(),
        });
    }
    let mesh = ctx.mesh();
    let scale = |raw: Vec<f64>| -> NodalField {
        NodalField::interior(
            mesh,
            raw.into_iter()
                .enumerate()
                .map(|(k, v)| -3.0 / mesh.vertex_area(mesh.interior_vertex(k)) * v)
                .collect(),
        )
    };
    Ok(DiscreteHessian {
        d11: scale(ctx.k11().apply(phi.values())),
        d22: scale(ctx.k22().apply(phi.values())),
        // k12 already carries the 1/2 symmetrization, so the same -3/A_k
        // factor realizes the -3/(2 A_k) of the mixed formula.
        d12: scale(ctx.k12().apply(phi.values())),
    })
}

/// Pointwise determinant `d11 d22 - d12^2` at interior vertices.
pub fn discrete_determinant(mesh: &Mesh, hessian: &DiscreteHessian) -> NodalField {
    NodalField::interior(
        mesh,
        hessian
            .d11
            .values()
            .iter()
            .zip(hessian.d22.values())
            .zip(hessian.d12.values())
            .map(|((a, b), c)| a * b - c * c)
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble_full_stiffness;
    use crate::mesh::generate_disk_mesh;
    use crate::util::SplitMix64;
    use proptest::prelude::*;

    #[test]
    fn affine_fields_have_zero_hessian() {
        let mesh = generate_disk_mesh(0.3).unwrap();
        let ctx = FemContext::build(&mesh).unwrap();
        let phi = NodalField::full_from_fn(&mesh, |p| 2.5 + 0.3 * p[0] - 1.7 * p[1]);
        let h = discrete_hessian(&ctx, &phi).unwrap();
        assert!(h.d11.norm_inf() < 1e-12, "d11 {}", h.d11.norm_inf());
        assert!(h.d22.norm_inf() < 1e-12, "d22 {}", h.d22.norm_inf());
        assert!(h.d12.norm_inf() < 1e-12, "d12 {}", h.d12.norm_inf());
        let det = discrete_determinant(&mesh, &h);
        assert!(det.norm_inf() < 1e-24);
    }

    #[test]
    fn interior_support_is_rejected() {
        let mesh = generate_disk_mesh(0.4).unwrap();
        let ctx = FemContext::build(&mesh).unwrap();
        let phi = NodalField::zeros(&mesh, Support::InteriorOnly);
        assert!(matches!(
            discrete_hessian(&ctx, &phi),
            Err(FemError::SupportMismatch { .. })
        ));
    }

    #[test]
    fn determinant_is_pointwise_arithmetic() {
        let mesh = generate_disk_mesh(0.45).unwrap();
        let n0 = mesh.n_interior();
        let h = DiscreteHessian::from_fields(
            NodalField::constant(&mesh, Support::InteriorOnly, 2.0),
            NodalField::constant(&mesh, Support::InteriorOnly, 2.0),
            NodalField::zeros(&mesh, Support::InteriorOnly),
        );
        let det = discrete_determinant(&mesh, &h);
        assert_eq!(det.values(), vec![4.0; n0]);
    }

    #[test]
    fn trace_matches_stiffness_rows() {
        // d11 + d22 at P_k = -(3/A_k) * (stiffness row of w_k applied to phi)
        let mesh = generate_disk_mesh(0.25).unwrap();
        let ctx = FemContext::build(&mesh).unwrap();
        let full = assemble_full_stiffness(&mesh);
        let phi = NodalField::full_from_fn(&mesh, |p| (p[0] - 0.2).powi(2) * (p[1] + 0.4));
        let h = discrete_hessian(&ctx, &phi).unwrap();
        let stiff_phi = full.apply(phi.values());
        for k in 0..mesh.n_interior() {
            let v = mesh.interior_vertex(k);
            let expected = -3.0 / mesh.vertex_area(v) * stiff_phi[v];
            let got = h.d11.values()[k] + h.d22.values()[k];
            assert!(
                (got - expected).abs() < 1e-10 * (1.0 + expected.abs()),
                "vertex {v}"
            );
        }
    }

    #[test]
    fn coordinate_swap_exchanges_diagonal_components() {
        let mesh = generate_disk_mesh(0.3).unwrap();
        let swapped_vertices: Vec<[f64; 2]> =
            mesh.vertices().iter().map(|&[x, y]| [y, x]).collect();
        let (swapped, _) =
            Mesh::from_parts(swapped_vertices, mesh.triangles().to_vec(), Some(mesh.h())).unwrap();
        // same vertex order, so the same nodal values define phi on both
        let phi_fn = |p: [f64; 2]| p[0] * p[0] * 0.8 + 0.5 * p[0] * p[1] - 0.1 * p[1] * p[1] * p[1];
        let phi = NodalField::full_from_fn(&mesh, phi_fn);
        let phi_swapped = NodalField::full(&swapped, phi.values().to_vec());

        let ctx = FemContext::build(&mesh).unwrap();
        let ctx_swapped = FemContext::build(&swapped).unwrap();
        let h = discrete_hessian(&ctx, &phi).unwrap();
        let hs = discrete_hessian(&ctx_swapped, &phi_swapped).unwrap();
        for k in 0..mesh.n_interior() {
            assert!((h.d11.values()[k] - hs.d22.values()[k]).abs() < 1e-12);
            assert!((h.d22.values()[k] - hs.d11.values()[k]).abs() < 1e-12);
            assert!((h.d12.values()[k] - hs.d12.values()[k]).abs() < 1e-12);
        }
    }

    fn mean_abs_deviation(vals: &[f64], target: f64) -> f64 {
        vals.iter().map(|v| (v - target).abs()).sum::<f64>() / vals.len() as f64
    }

    // The vertex-rule recovery is not pointwise consistent on irregular
    // patches (boundary-adjacent vertices and ring-count junctions keep an
    // O(1) deviation), so the refinement oracle below tracks the mean
    // absolute deviation over interior vertices, which does decay.
    #[test]
    fn quadratic_interpolant_mean_deviation_decays() {
        let mut d11_dev = Vec::new();
        let mut d12_dev = Vec::new();
        let mut det_dev = Vec::new();
        for h in [0.2, 0.1, 0.05] {
            let mesh = generate_disk_mesh(h).unwrap();
            let ctx = FemContext::build(&mesh).unwrap();

            let xsq = NodalField::full_from_fn(&mesh, |p| p[0] * p[0]);
            let hx = discrete_hessian(&ctx, &xsq).unwrap();
            d11_dev.push(mean_abs_deviation(hx.d11.values(), 2.0));
            assert!(hx.d11.values().iter().all(|v| (v - 2.0).abs() < 0.5));

            let xy = NodalField::full_from_fn(&mesh, |p| p[0] * p[1]);
            let hxy = discrete_hessian(&ctx, &xy).unwrap();
            d12_dev.push(mean_abs_deviation(hxy.d12.values(), 1.0));

            // interpolated paraboloid: discrete determinant approaches 1
            let par = NodalField::full_from_fn(&mesh, |p| 0.5 * (p[0] * p[0] + p[1] * p[1] - 1.0));
            let hp = discrete_hessian(&ctx, &par).unwrap();
            let det = discrete_determinant(&mesh, &hp);
            det_dev.push(mean_abs_deviation(det.values(), 1.0));
        }
        for devs in [&d11_dev, &d12_dev, &det_dev] {
            assert!(
                devs[0] > devs[1] && devs[1] > devs[2],
                "mean deviations failed to decay: {devs:?}"
            );
        }
        // calibrated magnitudes on the generated mesh family
        assert!(d11_dev[2] < 0.05, "{d11_dev:?}");
        assert!(det_dev[2] < 0.08, "{det_dev:?}");
    }

    proptest! {
        // linearity of the Hessian map in phi
        #[test]
        fn prop_hessian_is_linear(seed in 0u64..200) {
            let mesh = generate_disk_mesh(0.35).unwrap();
            let ctx = FemContext::build(&mesh).unwrap();
            let mut rng = SplitMix64::new(seed);
            let n = mesh.n_vertices();
            let a = NodalField::full(&mesh, (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect());
            let b = NodalField::full(&mesh, (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect());
            let (ca, cb) = (rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
            let combo = NodalField::full(
                &mesh,
                a.values().iter().zip(b.values()).map(|(x, y)| ca * x + cb * y).collect(),
            );
            let ha = discrete_hessian(&ctx, &a).unwrap();
            let hb = discrete_hessian(&ctx, &b).unwrap();
            let hc = discrete_hessian(&ctx, &combo).unwrap();
            for k in 0..mesh.n_interior() {
                for (fa, fb, fc) in [
                    (&ha.d11, &hb.d11, &hc.d11),
                    (&ha.d22, &hb.d22, &hc.d22),
                    (&ha.d12, &hb.d12, &hc.d12),
                ] {
                    let lin = ca * fa.values()[k] + cb * fb.values()[k];
                    prop_assert!((lin - fc.values()[k]).abs() < 1e-10 * (1.0 + lin.abs()));
                }
            }
        }
    }
}
