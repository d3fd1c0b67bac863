//! Conforming triangulations and the per-vertex geometry used by the
//! vertex-rule quadrature.
//!
//! A [`Mesh`] is immutable after construction. It knows, for every vertex,
//! whether it lies on the boundary (derived from edge topology, never
//! trusted from input files) and the area `A_k` of the patch of triangles
//! sharing it. Interior vertices are numbered `0..n_interior()` in vertex
//! order; that numbering fixes the ordering of every linear system built
//! on the mesh.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

/// Relative tolerance for the patch-area consistency check.
const AREA_CONSISTENCY_RTOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid target edge length h = {0}; require 0 < h < 1")]
    InvalidH(f64),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("mesh invariant violated ({invariant}): {detail}")]
    Invariant {
        invariant: &'static str,
        detail: String,
    },
}

/// Non-fatal repairs applied while constructing a mesh from raw data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MeshWarning {
    /// A clockwise triangle was repaired by swapping two of its indices.
    OrientationRepaired { triangle: usize },
}

impl fmt::Display for MeshWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshWarning::OrientationRepaired { triangle } => {
                write!(f, "triangle {triangle}: clockwise orientation repaired")
            }
        }
    }
}

/// Element-quality summary reported by validation; no hard threshold is
/// imposed.
#[derive(Debug, Clone, Copy)]
pub struct MeshQuality {
    pub min_angle_rad: f64,
    pub min_edge: f64,
    pub max_edge: f64,
}

/// A conforming triangulation with counterclockwise elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    /// Per-vertex interior index (`None` on the boundary).
    interior_index: Vec<Option<usize>>,
    /// Interior index -> vertex index.
    interior_vertices: Vec<usize>,
    vertex_areas: Vec<f64>,
    h: f64,
}

impl Mesh {
    /// Builds a mesh from raw vertices and connectivity, repairing
    /// clockwise triangles and checking every invariant. Boundary flags
    /// are computed from edge topology. When `h` is `None` the maximum
    /// edge length is used as the characteristic size.
    pub fn from_parts(
        vertices: Vec<[f64; 2]>,
        mut triangles: Vec<[usize; 3]>,
        h: Option<f64>,
    ) -> Result<(Self, Vec<MeshWarning>), MeshError> {
        if vertices.is_empty() || triangles.is_empty() {
            return Err(MeshError::Invariant {
                invariant: "non-empty",
                detail: "mesh needs at least one vertex and one triangle".into(),
            });
        }
        let n = vertices.len();
        let mut warnings = Vec::new();

        for (v, p) in vertices.iter().enumerate() {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(MeshError::Invariant {
                    invariant: "finite-coordinates",
                    detail: format!("vertex {v} has non-finite coordinates ({}, {})", p[0], p[1]),
                });
            }
        }

        for (t, tri) in triangles.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= n {
                    return Err(MeshError::Invariant {
                        invariant: "index-bounds",
                        detail: format!(
                            "triangle {t}: vertex index {v} out of range ({n} vertices)"
                        ),
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::Invariant {
                    invariant: "positive-area",
                    detail: format!("triangle {t} repeats a vertex: {tri:?}"),
                });
            }
            let a = signed_area(&vertices, tri);
            #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN areas
            if a < 0.0 {
                tri.swap(1, 2);
                warnings.push(MeshWarning::OrientationRepaired { triangle: t });
            } else if !(a > 0.0) {
                return Err(MeshError::Invariant {
                    invariant: "positive-area",
                    detail: format!("triangle {t} is degenerate: {tri:?}"),
                });
            }
        }

        // Edge topology: each undirected edge may be shared by at most two
        // triangles, and a directed edge must not repeat (that would mean
        // two triangles overlap with the same orientation).
        let mut edge_count: HashMap<(usize, usize), u32> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                let dir = edge_count.entry((a, b)).or_insert(0);
                *dir += 1;
                if *dir > 1 {
                    return Err(MeshError::Invariant {
                        invariant: "edge-manifold",
                        detail: format!("directed edge ({a},{b}) of triangle {t} appears twice"),
                    });
                }
            }
        }
        let mut boundary = vec![false; n];
        let mut any_boundary = false;
        for &(a, b) in edge_count.keys() {
            if !edge_count.contains_key(&(b, a)) {
                boundary[a] = true;
                boundary[b] = true;
                any_boundary = true;
            }
        }
        if !any_boundary {
            return Err(MeshError::Invariant {
                invariant: "boundary-exists",
                detail: "triangulation has no boundary edge".into(),
            });
        }

        let mut referenced = vec![false; n];
        for tri in &triangles {
            for &v in tri {
                referenced[v] = true;
            }
        }
        if let Some(v) = referenced.iter().position(|&r| !r) {
            return Err(MeshError::Invariant {
                invariant: "all-vertices-referenced",
                detail: format!("vertex {v} belongs to no triangle"),
            });
        }

        let vertex_areas = areas_from(&vertices, &triangles);
        let total: f64 = triangles.iter().map(|t| signed_area(&vertices, t)).sum();
        let patch_sum: f64 = vertex_areas.iter().sum();
        if (patch_sum - 3.0 * total).abs() > AREA_CONSISTENCY_RTOL * 3.0 * total {
            return Err(MeshError::Invariant {
                invariant: "patch-area-consistency",
                detail: format!("sum A_k = {patch_sum} vs 3 * area = {}", 3.0 * total),
            });
        }

        let mut interior_index = vec![None; n];
        let mut interior_vertices = Vec::new();
        for v in 0..n {
            if !boundary[v] {
                interior_index[v] = Some(interior_vertices.len());
                interior_vertices.push(v);
            }
        }

        let h = match h {
            Some(h) => {
                if h <= 0.0 {
                    return Err(MeshError::InvalidH(h));
                }
                h
            }
            None => max_edge_len(&vertices, &triangles),
        };

        Ok((
            Mesh {
                vertices,
                triangles,
                boundary,
                interior_index,
                interior_vertices,
                vertex_areas,
                h,
            },
            warnings,
        ))
    }

    /// Parses the text mesh format (`ma-mesh 1` header, vertex and triangle
    /// blocks, `#` comment lines). Boundary flags come from topology, not
    /// the file.
    pub fn parse(text: &str) -> Result<(Self, Vec<MeshWarning>), MeshError> {
        let parse_err = |line: usize, message: String| MeshError::Parse { line, message };
        // (1-based line number, significant content)
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (hline, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty file".into()))?;
        if header.split_whitespace().collect::<Vec<_>>() != ["ma-mesh", "1"] {
            return Err(parse_err(
                hline,
                format!("expected header `ma-mesh 1`, got `{header}`"),
            ));
        }

        let (vline, vdecl) = lines
            .next()
            .ok_or_else(|| parse_err(hline, "missing `vertices N` line".into()))?;
        let nv = parse_count(vdecl, "vertices").map_err(|m| parse_err(vline, m))?;
        let mut vertices = Vec::with_capacity(nv);
        for k in 0..nv {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| parse_err(vline, format!("expected {nv} vertex lines, got {k}")))?;
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(parse_err(
                    ln,
                    format!("vertex {k}: expected `x y`, got `{l}`"),
                ));
            }
            let x: f64 = toks[0]
                .parse()
                .map_err(|_| parse_err(ln, format!("vertex {k}: bad coordinate `{}`", toks[0])))?;
            let y: f64 = toks[1]
                .parse()
                .map_err(|_| parse_err(ln, format!("vertex {k}: bad coordinate `{}`", toks[1])))?;
            vertices.push([x, y]);
        }

        let (tline, tdecl) = lines
            .next()
            .ok_or_else(|| parse_err(vline, "missing `triangles M` line".into()))?;
        let nt = parse_count(tdecl, "triangles").map_err(|m| parse_err(tline, m))?;
        let mut triangles = Vec::with_capacity(nt);
        for k in 0..nt {
            let (ln, l) = lines.next().ok_or_else(|| {
                parse_err(tline, format!("expected {nt} triangle lines, got {k}"))
            })?;
            let toks: Vec<&str> = l.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(parse_err(
                    ln,
                    format!("triangle {k}: expected `i j k`, got `{l}`"),
                ));
            }
            let mut tri = [0usize; 3];
            for (slot, tok) in tri.iter_mut().zip(&toks) {
                *slot = tok
                    .parse()
                    .map_err(|_| parse_err(ln, format!("triangle {k}: bad index `{tok}`")))?;
                if *slot >= nv {
                    return Err(parse_err(
                        ln,
                        format!("triangle {k}: vertex index {slot} out of range ({nv} vertices)"),
                    ));
                }
            }
            triangles.push(tri);
        }
        if let Some((ln, l)) = lines.next() {
            return Err(parse_err(ln, format!("unexpected trailing content `{l}`")));
        }

        Self::from_parts(vertices, triangles, None)
    }

    /// Serializes in the same text format accepted by [`Mesh::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::from("ma-mesh 1\n");
        out.push_str(&format!("vertices {}\n", self.vertices.len()));
        for v in &self.vertices {
            out.push_str(&format!("{} {}\n", v[0], v[1]));
        }
        out.push_str(&format!("triangles {}\n", self.triangles.len()));
        for t in &self.triangles {
            out.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
        }
        out
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_interior(&self) -> usize {
        self.interior_vertices.len()
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    /// Interior index of vertex `v`, or `None` when `v` is on the boundary.
    pub fn interior_index(&self, v: usize) -> Option<usize> {
        self.interior_index[v]
    }

    /// Vertex index of interior DOF `k`.
    pub fn interior_vertex(&self, k: usize) -> usize {
        self.interior_vertices[k]
    }

    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior_vertices
    }

    /// Patch area `A_k` of vertex `k`.
    pub fn vertex_area(&self, v: usize) -> f64 {
        self.vertex_areas[v]
    }

    pub fn vertex_areas(&self) -> &[f64] {
        &self.vertex_areas
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        signed_area(&self.vertices, &self.triangles[t])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .sum()
    }

    /// Recomputes `A_k = sum of areas of triangles containing vertex k`
    /// from scratch; matches [`Mesh::vertex_areas`] exactly.
    pub fn recompute_vertex_areas(&self) -> Vec<f64> {
        areas_from(&self.vertices, &self.triangles)
    }

    pub fn quality(&self) -> MeshQuality {
        let mut min_angle = f64::INFINITY;
        let mut min_edge = f64::INFINITY;
        let mut max_edge = 0.0f64;
        for tri in &self.triangles {
            let p = [
                self.vertices[tri[0]],
                self.vertices[tri[1]],
                self.vertices[tri[2]],
            ];
            for i in 0..3 {
                let a = p[i];
                let b = p[(i + 1) % 3];
                let c = p[(i + 2) % 3];
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let nu = (u[0] * u[0] + u[1] * u[1]).sqrt();
                let nv = (v[0] * v[0] + v[1] * v[1]).sqrt();
                min_edge = min_edge.min(nu);
                max_edge = max_edge.max(nu);
                let cosang = ((u[0] * v[0] + u[1] * v[1]) / (nu * nv)).clamp(-1.0, 1.0);
                min_angle = min_angle.min(cosang.acos());
            }
        }
        MeshQuality {
            min_angle_rad: min_angle,
            min_edge,
            max_edge,
        }
    }
}

/// Generates a deterministic triangulation of the unit disk from
/// concentric rings of near-uniform spacing. Ring `i` of `m = ceil(1/h)`
/// sits at radius `i/m`; the outermost ring lies exactly on the unit
/// circle. Adjacent rings are triangulated by an angular merge walk.
pub fn generate_disk_mesh(h: f64) -> Result<Mesh, MeshError> {
    if !(h > 0.0 && h < 1.0) {
        return Err(MeshError::InvalidH(h));
    }
    let m = (1.0 / h).ceil() as usize;

    let mut vertices: Vec<[f64; 2]> = vec![[0.0, 0.0]];
    let mut ring_start = Vec::with_capacity(m + 1); // first vertex index of each ring
    let mut ring_count = Vec::with_capacity(m + 1);
    ring_start.push(0);
    ring_count.push(1); // ring 0 is the center vertex
    for i in 1..=m {
        // direct division keeps the outermost radius exactly 1
        let radius = i as f64 / m as f64;
        let n_i = ((2.0 * PI * radius) / h).ceil() as usize;
        // stagger alternate rings by a quarter spacing; measured to give
        // the most symmetric patches (and the smallest solve errors) of
        // the offset families tried
        let offset = 0.25 * (i % 2) as f64;
        ring_start.push(vertices.len());
        ring_count.push(n_i);
        for j in 0..n_i {
            let theta = 2.0 * PI * (j as f64 + offset) / n_i as f64;
            vertices.push([radius * theta.cos(), radius * theta.sin()]);
        }
    }

    let mut triangles = Vec::new();
    // Center fan against ring 1.
    let (s1, n1) = (ring_start[1], ring_count[1]);
    for j in 0..n1 {
        triangles.push([0, s1 + j, s1 + (j + 1) % n1]);
    }
    // Annuli: walk both rings, at each step creating whichever of the two
    // candidate diagonals is shorter. Both rings start aligned at angle 0,
    // so the walk closes after a + b triangles.
    let dist2 = |p: [f64; 2], q: [f64; 2]| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
    for i in 2..=m {
        let (sa, a) = (ring_start[i - 1], ring_count[i - 1]);
        let (sb, b) = (ring_start[i], ring_count[i]);
        let (mut ja, mut jb) = (0usize, 0usize);
        while ja < a || jb < b {
            let inner = sa + ja % a;
            let outer = sb + jb % b;
            let advance_outer = if ja == a {
                true
            } else if jb == b {
                false
            } else {
                // diagonal created by advancing outer vs advancing inner
                let outer_diag = dist2(vertices[inner], vertices[sb + (jb + 1) % b]);
                let inner_diag = dist2(vertices[sa + (ja + 1) % a], vertices[outer]);
                outer_diag <= inner_diag
            };
            if advance_outer {
                triangles.push([inner, outer, sb + (jb + 1) % b]);
                jb += 1;
            } else {
                triangles.push([inner, outer, sa + (ja + 1) % a]);
                ja += 1;
            }
        }
    }

    let (mesh, warnings) = Mesh::from_parts(vertices, triangles, Some(h))?;
    debug_assert!(warnings.is_empty(), "generator must emit CCW triangles");
    Ok(mesh)
}

fn parse_count(line: &str, keyword: &str) -> Result<usize, String> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() != 2 || toks[0] != keyword {
        return Err(format!("expected `{keyword} N`, got `{line}`"));
    }
    toks[1]
        .parse()
        .map_err(|_| format!("bad {keyword} count `{}`", toks[1]))
}

fn signed_area(vertices: &[[f64; 2]], tri: &[usize; 3]) -> f64 {
    let [a, b, c] = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn areas_from(vertices: &[[f64; 2]], triangles: &[[usize; 3]]) -> Vec<f64> {
    let mut areas = vec![0.0; vertices.len()];
    for tri in triangles {
        let a = signed_area(vertices, tri);
        for &v in tri {
            areas[v] += a;
        }
    }
    areas
}

fn max_edge_len(vertices: &[[f64; 2]], triangles: &[[usize; 3]]) -> f64 {
    let mut max = 0.0f64;
    for tri in triangles {
        for e in 0..3 {
            let a = vertices[tri[e]];
            let b = vertices[tri[(e + 1) % 3]];
            max = max.max(((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt());
        }
    }
    max
}
