//! Triangulations with edge adjacency, uniform refinement, and a plain-text
//! serialization format.
//!
//! Edges are globally oriented from the lower to the higher vertex index; the
//! edge normal is the +90 degree rotation of that direction. Shared
//! normal-derivative degrees of freedom rely on this convention.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

#[derive(Debug)]
pub enum MeshError {
    NonManifoldEdge { vertices: [usize; 2] },
    NonPositiveArea { triangle: usize },
    VertexOutOfRange { line: usize, index: usize },
    Parse { line: usize, message: String },
    Io(std::io::Error),
}

impl fmt::Display for MeshError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshError::NonManifoldEdge { vertices } => write!(
                f,
                "non-manifold edge ({}, {}): more than two adjacent triangles",
                vertices[0], vertices[1]
            ),
            MeshError::NonPositiveArea { triangle } => {
                write!(f, "triangle {triangle} has non-positive signed area")
            }
            MeshError::VertexOutOfRange { line, index } => {
                write!(f, "line {line}: vertex index {index} out of range")
            }
            MeshError::Parse { line, message } => write!(f, "line {line}: {message}"),
            MeshError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for MeshError {}

impl From<std::io::Error> for MeshError {
    fn from(e: std::io::Error) -> Self {
        MeshError::Io(e)
    }
}

/// Describes the true boundary a polygonal mesh approximates. Refinement
/// projects new boundary vertices onto a curved boundary when one is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryGeometry {
    Polygonal,
    Circle { radius: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct Edge {
    /// Endpoint vertex indices, lower first.
    pub vertices: [usize; 2],
    /// Adjacent triangles; second entry absent on boundary edges.
    pub triangles: [Option<usize>; 2],
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.triangles[1].is_none()
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Vertex index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    /// Edges sorted lexicographically by (lower, higher) vertex index.
    pub edges: Vec<Edge>,
    /// Per triangle: global edge index opposite each local vertex.
    pub tri_edges: Vec<[usize; 3]>,
    pub vertex_on_boundary: Vec<bool>,
    /// Max triangle diameter (longest edge over all triangles).
    pub h: f64,
    pub boundary: BoundaryGeometry,
}

impl Mesh {
    /// Builds adjacency (edges, boundary flags, h) from vertices and
    /// triangles. Fails on non-manifold connectivity or inverted triangles.
    pub fn from_cells(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary: BoundaryGeometry,
    ) -> Result<Mesh, MeshError> {
        for (t, tri) in triangles.iter().enumerate() {
            if signed_area(&vertices, tri) <= 0.0 {
                return Err(MeshError::NonPositiveArea { triangle: t });
            }
        }

        // Deterministic edge ordering: lexicographic by sorted vertex pair.
        let mut pairs: Vec<[usize; 2]> = Vec::with_capacity(3 * triangles.len());
        for tri in &triangles {
            for i in 0..3 {
                let a = tri[(i + 1) % 3];
                let b = tri[(i + 2) % 3];
                pairs.push([a.min(b), a.max(b)]);
            }
        }
        pairs.sort_unstable();
        pairs.dedup();

        let edge_index = |pair: [usize; 2]| pairs.binary_search(&pair).expect("edge present");

        let mut edges: Vec<Edge> = pairs
            .iter()
            .map(|&vertices| Edge { vertices, triangles: [None, None] })
            .collect();
        let mut tri_edges = vec![[usize::MAX; 3]; triangles.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let a = tri[(i + 1) % 3];
                let b = tri[(i + 2) % 3];
                let e = edge_index([a.min(b), a.max(b)]);
                tri_edges[t][i] = e;
                let slots = &mut edges[e].triangles;
                if slots[0].is_none() {
                    slots[0] = Some(t);
                } else if slots[1].is_none() {
                    slots[1] = Some(t);
                } else {
                    return Err(MeshError::NonManifoldEdge { vertices: edges[e].vertices });
                }
            }
        }

        let mut vertex_on_boundary = vec![false; vertices.len()];
        for e in &edges {
            if e.is_boundary() {
                vertex_on_boundary[e.vertices[0]] = true;
                vertex_on_boundary[e.vertices[1]] = true;
            }
        }

        let mut h: f64 = 0.0;
        for tri in &triangles {
            for i in 0..3 {
                let a = vertices[tri[i]];
                let b = vertices[tri[(i + 1) % 3]];
                h = h.max(((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt());
            }
        }

        Ok(Mesh { vertices, triangles, edges, tri_edges, vertex_on_boundary, h, boundary })
    }

    pub fn triangle_vertices(&self, t: usize) -> [[f64; 2]; 3] {
        let tri = self.triangles[t];
        [self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        signed_area(&self.vertices, &self.triangles[t])
    }

    /// Unit normal of an edge under the global orientation (lower -> higher
    /// vertex index, rotated +90 degrees).
    pub fn edge_normal(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e].vertices;
        let pa = self.vertices[a];
        let pb = self.vertices[b];
        let dx = pb[0] - pa[0];
        let dy = pb[1] - pa[1];
        let len = (dx * dx + dy * dy).sqrt();
        [-dy / len, dx / len]
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].vertices;
        let pa = self.vertices[a];
        let pb = self.vertices[b];
        ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt()
    }

    pub fn n_interior_vertices(&self) -> usize {
        self.vertex_on_boundary.iter().filter(|&&b| !b).count()
    }

    pub fn n_interior_edges(&self) -> usize {
        self.edges.iter().filter(|e| !e.is_boundary()).count()
    }

    /// Checks the structural invariants; used by tests and after parsing.
    pub fn validate(&self) -> Result<(), MeshError> {
        for t in 0..self.triangles.len() {
            if self.signed_area(t) <= 0.0 {
                return Err(MeshError::NonPositiveArea { triangle: t });
            }
        }
        Ok(())
    }

    /// Euler characteristic #V - #E + #T (1 for a simply connected domain).
    pub fn euler_characteristic(&self) -> isize {
        self.vertices.len() as isize - self.edges.len() as isize + self.triangles.len() as isize
    }
}

fn signed_area(vertices: &[[f64; 2]], tri: &[usize; 3]) -> f64 {
    let a = vertices[tri[0]];
    let b = vertices[tri[1]];
    let c = vertices[tri[2]];
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Triangulation of the regular polygon inscribed in the circle of the given
/// radius: an 8-triangle fan at level 0, then `level` uniform refinements
/// with new boundary vertices projected onto the circle.
pub fn build_disk_mesh(radius: f64, level: usize) -> Mesh {
    assert!(radius > 0.0, "radius must be positive");
    let n = 8;
    let mut vertices = vec![[0.0, 0.0]];
    for k in 0..n {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        vertices.push([radius * theta.cos(), radius * theta.sin()]);
    }
    let triangles: Vec<[usize; 3]> =
        (0..n).map(|k| [0, 1 + k, 1 + (k + 1) % n]).collect();
    let mut mesh = Mesh::from_cells(vertices, triangles, BoundaryGeometry::Circle { radius })
        .expect("fan mesh is manifold");
    for _ in 0..level {
        mesh = refine_uniform(&mesh);
    }
    mesh
}

/// Quadrisects every triangle by its edge midpoints. Midpoints of boundary
/// edges are projected onto the curved boundary when the mesh carries one.
pub fn refine_uniform(mesh: &Mesh) -> Mesh {
    let nv = mesh.vertices.len();
    let mut vertices = mesh.vertices.clone();
    vertices.reserve(mesh.edges.len());
    let mut midpoint = vec![0usize; mesh.edges.len()];
    for (e, edge) in mesh.edges.iter().enumerate() {
        let pa = mesh.vertices[edge.vertices[0]];
        let pb = mesh.vertices[edge.vertices[1]];
        let mut m = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        if edge.is_boundary() {
            if let BoundaryGeometry::Circle { radius } = mesh.boundary {
                let r = (m[0] * m[0] + m[1] * m[1]).sqrt();
                m = [m[0] * radius / r, m[1] * radius / r];
            }
        }
        midpoint[e] = nv + e;
        vertices.push(m);
    }

    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        // midpoint of the edge opposite local vertex i
        let m = [
            midpoint[mesh.tri_edges[t][0]],
            midpoint[mesh.tri_edges[t][1]],
            midpoint[mesh.tri_edges[t][2]],
        ];
        triangles.push([tri[0], m[2], m[1]]);
        triangles.push([tri[1], m[0], m[2]]);
        triangles.push([tri[2], m[1], m[0]]);
        triangles.push([m[0], m[1], m[2]]);
    }

    Mesh::from_cells(vertices, triangles, mesh.boundary)
        .expect("refinement preserves manifoldness and orientation")
}

/// Writes the `.tmesh` text format: `v x y [b]` per vertex (b=1 marks a
/// boundary vertex), `t i j k` per triangle, `#` comments, 0-based indices.
pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# tmesh: {} vertices, {} triangles", mesh.vertices.len(), mesh.triangles.len())?;
    for (i, v) in mesh.vertices.iter().enumerate() {
        if mesh.vertex_on_boundary[i] {
            writeln!(out, "v {} {} 1", v[0], v[1])?;
        } else {
            writeln!(out, "v {} {}", v[0], v[1])?;
        }
    }
    for t in &mesh.triangles {
        writeln!(out, "t {} {} {}", t[0], t[1], t[2])?;
    }
    Ok(())
}

/// Reads the `.tmesh` format and rebuilds adjacency. Boundary flags in the
/// file are informational; flags are recomputed from connectivity.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let mut triangles: Vec<([usize; 3], usize)> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tok = content.split_whitespace();
        match tok.next() {
            Some("v") => {
                let x = parse_f64(tok.next(), lineno)?;
                let y = parse_f64(tok.next(), lineno)?;
                // optional boundary flag, validated but recomputed
                if let Some(b) = tok.next() {
                    if b != "0" && b != "1" {
                        return Err(MeshError::Parse {
                            line: lineno,
                            message: format!("boundary flag must be 0 or 1, got {b:?}"),
                        });
                    }
                }
                vertices.push([x, y]);
            }
            Some("t") => {
                let mut idx = [0usize; 3];
                for slot in &mut idx {
                    *slot = parse_usize(tok.next(), lineno)?;
                }
                triangles.push((idx, lineno));
            }
            Some(other) => {
                return Err(MeshError::Parse {
                    line: lineno,
                    message: format!("unknown record {other:?}"),
                })
            }
            None => {}
        }
    }
    if vertices.is_empty() {
        return Err(MeshError::Parse { line: 0, message: "no vertices".into() });
    }
    if triangles.is_empty() {
        return Err(MeshError::Parse { line: 0, message: "no triangles".into() });
    }
    for &(idx, line) in &triangles {
        if let Some(&index) = idx.iter().find(|&&i| i >= vertices.len()) {
            return Err(MeshError::VertexOutOfRange { line, index });
        }
    }
    let triangles = triangles.into_iter().map(|(idx, _)| idx).collect();
    Mesh::from_cells(vertices, triangles, BoundaryGeometry::Polygonal)
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64, MeshError> {
    let tok = tok.ok_or(MeshError::Parse { line, message: "missing coordinate".into() })?;
    tok.parse().map_err(|_| MeshError::Parse {
        line,
        message: format!("invalid number {tok:?}"),
    })
}

fn parse_usize(tok: Option<&str>, line: usize) -> Result<usize, MeshError> {
    let tok = tok.ok_or(MeshError::Parse { line, message: "missing vertex index".into() })?;
    tok.parse().map_err(|_| MeshError::Parse {
        line,
        message: format!("invalid index {tok:?}"),
    })
}

/// Two right triangles forming the unit square; used by tests.
pub fn unit_square_two_triangles() -> Mesh {
    Mesh::from_cells(
        vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        vec![[0, 1, 2], [0, 2, 3]],
        BoundaryGeometry::Polygonal,
    )
    .unwrap()
}

/// Regular n x n grid triangulation of the unit square (2 n^2 triangles).
pub fn unit_square_grid(n: usize) -> Mesh {
    assert!(n >= 1);
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh::from_cells(vertices, triangles, BoundaryGeometry::Polygonal).unwrap()
}
