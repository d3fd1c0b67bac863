//! Field export and import.
//!
//! Two text formats, both deterministic byte-for-byte given the same
//! inputs (floats print in Rust's shortest round-trip form, so re-parsing
//! restores identical bits):
//!
//! - csv-points: one `x y value` line per vertex, in vertex order;
//! - vtk-like text: vertex block, triangle block, then one scalar per
//!   vertex, enough for any external contour plotter.

use ma_core::fem::{NodalField, Support};
use ma_core::mesh::Mesh;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    CsvPoints,
    VtkLikeText,
}

/// Renders `field` on `mesh`. Interior fields are extended by zero to
/// the boundary so every vertex gets a value.
pub fn export_field(mesh: &Mesh, field: &NodalField, format: ExportFormat) -> String {
    let extended;
    let values: &[f64] = match field.support() {
        Support::AllVertices => field.values(),
        Support::InteriorOnly => {
            extended = field.extend_to_full(mesh);
            extended.values()
        }
    };
    match format {
        ExportFormat::CsvPoints => {
            let mut out = String::new();
            for (v, p) in mesh.vertices().iter().enumerate() {
                out.push_str(&format!("{} {} {}\n", p[0], p[1], values[v]));
            }
            out
        }
        ExportFormat::VtkLikeText => {
            let mut out = String::from("ma-field 1\n");
            out.push_str(&format!("vertices {}\n", mesh.n_vertices()));
            for p in mesh.vertices() {
                out.push_str(&format!("{} {}\n", p[0], p[1]));
            }
            out.push_str(&format!("triangles {}\n", mesh.triangles().len()));
            for t in mesh.triangles() {
                out.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
            }
            out.push_str(&format!("scalars {}\n", values.len()));
            for v in values {
                out.push_str(&format!("{v}\n"));
            }
            out
        }
    }
}

/// Parses a csv-points file back into a full nodal field on `mesh`,
/// checking the vertex count and coordinates.
pub fn import_field(mesh: &Mesh, text: &str) -> Result<NodalField, CliError> {
    let mut values = Vec::with_capacity(mesh.n_vertices());
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(CliError::Config(format!(
                "field file line {}: expected `x y value`",
                lineno + 1
            )));
        }
        let parse = |s: &str| -> Result<f64, CliError> {
            s.parse().map_err(|_| {
                CliError::Config(format!("field file line {}: bad number `{s}`", lineno + 1))
            })
        };
        let (x, y, value) = (parse(toks[0])?, parse(toks[1])?, parse(toks[2])?);
        if !value.is_finite() {
            return Err(CliError::Config(format!(
                "field file line {}: non-finite value `{}`",
                lineno + 1,
                toks[2]
            )));
        }
        let v = values.len();
        if v >= mesh.n_vertices() {
            return Err(CliError::Config(format!(
                "field file has more rows than the mesh has vertices ({})",
                mesh.n_vertices()
            )));
        }
        let p = mesh.vertices()[v];
        if (p[0] - x).abs() > 1e-9 || (p[1] - y).abs() > 1e-9 {
            return Err(CliError::Config(format!(
                "field file line {}: point ({x}, {y}) does not match mesh vertex {v} at ({}, {})",
                lineno + 1,
                p[0],
                p[1]
            )));
        }
        values.push(value);
    }
    if values.len() != mesh.n_vertices() {
        return Err(CliError::Config(format!(
            "field file has {} values, mesh has {} vertices",
            values.len(),
            mesh.n_vertices()
        )));
    }
    Ok(NodalField::full(mesh, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ma_core::generate_disk_mesh;
    use ma_core::mesh::Mesh;
    use ma_core::util::SplitMix64;

    fn tiny_mesh() -> Mesh {
        Mesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            None,
        )
        .unwrap()
        .0
    }

    #[test]
    fn csv_points_lists_vertices_in_order() {
        let mesh = tiny_mesh();
        let field = NodalField::full(&mesh, vec![0.0, 1.0, 2.0]);
        let out = export_field(&mesh, &field, ExportFormat::CsvPoints);
        assert_eq!(out, "0 0 0\n1 0 1\n0 1 2\n");
    }

    #[test]
    fn round_trip_is_bitwise_identical() {
        let mesh = generate_disk_mesh(0.4).unwrap();
        let mut rng = SplitMix64::new(17);
        let field = NodalField::full(
            &mesh,
            (0..mesh.n_vertices())
                .map(|_| rng.uniform(-1.0, 1.0) * 1e-7)
                .collect(),
        );
        let out = export_field(&mesh, &field, ExportFormat::CsvPoints);
        let back = import_field(&mesh, &out).unwrap();
        for (a, b) in field.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        // and the re-export is byte-identical
        assert_eq!(out, export_field(&mesh, &back, ExportFormat::CsvPoints));
    }

    #[test]
    fn interior_fields_extend_by_zero() {
        let mesh = generate_disk_mesh(0.5).unwrap();
        let field = NodalField::constant(&mesh, Support::InteriorOnly, 3.5);
        let out = export_field(&mesh, &field, ExportFormat::CsvPoints);
        let back = import_field(&mesh, &out).unwrap();
        for v in 0..mesh.n_vertices() {
            let expected = if mesh.is_boundary(v) { 0.0 } else { 3.5 };
            assert_eq!(back.values()[v], expected);
        }
    }

    #[test]
    fn vtk_text_carries_mesh_and_scalars() {
        let mesh = tiny_mesh();
        let field = NodalField::full(&mesh, vec![0.5, -1.0, 0.25]);
        let out = export_field(&mesh, &field, ExportFormat::VtkLikeText);
        assert!(out.starts_with("ma-field 1\nvertices 3\n"));
        assert!(out.contains("triangles 1\n0 1 2\n"));
        assert!(out.ends_with("scalars 3\n0.5\n-1\n0.25\n"));
    }

    #[test]
    fn import_rejects_wrong_mesh() {
        let mesh = tiny_mesh();
        let other = generate_disk_mesh(0.5).unwrap();
        let field = NodalField::full(&mesh, vec![1.0, 2.0, 3.0]);
        let out = export_field(&mesh, &field, ExportFormat::CsvPoints);
        assert!(import_field(&other, &out).is_err());
    }
}
