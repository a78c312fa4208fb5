//! The bubble-enriched Morley element on a physical triangle.
//!
//! The local space is P2 ⊕ span{bλ1, bλ2, bλ3} with b = λ1λ2λ3 (dimension 9).
//! Degrees of freedom, in fixed order: values at the three vertices, means of
//! the value over the three edges (edge i opposite vertex i), and means of
//! the normal derivative over the same edges. Edge normals follow the global
//! mesh convention (lower vertex index -> higher, rotated +90 degrees), so a
//! basis built from mesh data needs no orientation signs: the two triangles
//! sharing an edge see the same functional.
//!
//! The nodal basis is built directly on the physical triangle by solving the
//! 9x9 duality system over generators expressed in centroid-centered,
//! h_T-scaled coordinates, which keeps the system well conditioned under
//! refinement.

use crate::mesh::Mesh;
use crate::poly::{self, Poly};
use crate::quadrature::edge_rule;
use nalgebra::SMatrix;
use std::fmt;

/// Hard failure threshold on the dual-system condition estimate.
pub const CONDITION_LIMIT: f64 = 1e12;
/// Reporting threshold above which a triangle is flagged as ill-shaped.
/// Well-shaped triangles measure 1e2..5e3 after centroid/diameter scaling;
/// aspect ratios beyond ~30 push past 2e4.
pub const CONDITION_FLAG: f64 = 2e4;

#[derive(Debug, Clone)]
pub enum ElementError {
    DegenerateTriangle { vertices: [[f64; 2]; 3] },
    IllConditioned { condition: f64 },
}

impl fmt::Display for ElementError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementError::DegenerateTriangle { vertices } => {
                write!(f, "degenerate triangle {vertices:?}")
            }
            ElementError::IllConditioned { condition } => write!(
                f,
                "element dual system condition estimate {condition:.3e} exceeds {CONDITION_LIMIT:.0e}"
            ),
        }
    }
}

impl std::error::Error for ElementError {}

/// Triangle vertices plus the unit normal of each edge (edge i opposite
/// vertex i) under the global orientation convention.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub vertices: [[f64; 2]; 3],
    pub edge_normals: [[f64; 2]; 3],
}

impl ElementGeometry {
    /// Geometry of mesh triangle `t`, with normals taken from the global
    /// edge orientation.
    pub fn from_mesh(mesh: &Mesh, t: usize) -> Self {
        let vertices = mesh.triangle_vertices(t);
        let mut edge_normals = [[0.0; 2]; 3];
        for i in 0..3 {
            edge_normals[i] = mesh.edge_normal(mesh.tri_edges[t][i]);
        }
        ElementGeometry { vertices, edge_normals }
    }

    /// Standalone geometry applying the same orientation rule to local
    /// indices (edge i runs from min to max of its local endpoints).
    pub fn from_vertices(vertices: [[f64; 2]; 3]) -> Self {
        let mut edge_normals = [[0.0; 2]; 3];
        for i in 0..3 {
            let a = (i + 1) % 3;
            let b = (i + 2) % 3;
            let (lo, hi) = (a.min(b), a.max(b));
            let d = [vertices[hi][0] - vertices[lo][0], vertices[hi][1] - vertices[lo][1]];
            let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
            edge_normals[i] = [-d[1] / len, d[0] / len];
        }
        ElementGeometry { vertices, edge_normals }
    }

    pub fn centroid(&self) -> [f64; 2] {
        let v = &self.vertices;
        [(v[0][0] + v[1][0] + v[2][0]) / 3.0, (v[0][1] + v[1][1] + v[2][1]) / 3.0]
    }

    /// Triangle diameter (longest edge).
    pub fn diameter(&self) -> f64 {
        let mut h: f64 = 0.0;
        for i in 0..3 {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % 3];
            h = h.max(((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt());
        }
        h
    }

    pub fn signed_area(&self) -> f64 {
        crate::quadrature::triangle_area(&self.vertices)
    }

    /// Endpoints of edge i (opposite vertex i).
    pub fn edge_endpoints(&self, i: usize) -> ([f64; 2], [f64; 2]) {
        (self.vertices[(i + 1) % 3], self.vertices[(i + 2) % 3])
    }
}

/// Values, gradients and Hessians of the 9 nodal functions at one point.
/// Hessians are stored as [xx, xy, yy].
#[derive(Debug, Clone, Copy)]
pub struct BasisEval {
    pub values: [f64; 9],
    pub gradients: [[f64; 2]; 9],
    pub hessians: [[f64; 3]; 9],
}

impl BasisEval {
    pub fn laplacian(&self, j: usize) -> f64 {
        self.hessians[j][0] + self.hessians[j][2]
    }
}

/// Nodal basis of the enriched Morley element on one triangle.
///
/// Polynomials are stored over the 15 monomials of degree <= 4 in
/// centroid-centered coordinates scaled by the triangle diameter.
#[derive(Debug, Clone)]
pub struct LocalBasis {
    pub geom: ElementGeometry,
    centroid: [f64; 2],
    scale: f64,
    value: [Poly; 9],
    grad_x: [Poly; 9],
    grad_y: [Poly; 9],
    hess_xx: [Poly; 9],
    hess_xy: [Poly; 9],
    hess_yy: [Poly; 9],
}

/// Scaled-coordinate image of a physical point.
fn to_scaled(p: [f64; 2], centroid: [f64; 2], scale: f64) -> [f64; 2] {
    [(p[0] - centroid[0]) / scale, (p[1] - centroid[1]) / scale]
}

/// Generator polynomials in scaled coordinates:
/// {1, X, Y, X^2, XY, Y^2, bλ1, bλ2, bλ3} with b = λ1λ2λ3.
fn generators(scaled_vertices: &[[f64; 2]; 3]) -> Option<[Poly; 9]> {
    // barycentric coordinates as affine functions of the scaled point
    let v = scaled_vertices;
    let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
    if det.abs() < 1e-12 {
        return None;
    }
    let mut lambda = [poly::ZERO; 3];
    for i in 0..3 {
        let a = v[(i + 1) % 3];
        let b = v[(i + 2) % 3];
        // affine vanishing on edge (a,b), equal to 1 at vertex i
        let cx = (a[1] - b[1]) / det;
        let cy = (b[0] - a[0]) / det;
        let c0 = (a[0] * b[1] - b[0] * a[1]) / det;
        lambda[i] = poly::affine(c0, cx, cy);
    }
    let bubble = poly::mul(&poly::mul(&lambda[0], &lambda[1]), &lambda[2]);

    let mut gens = [poly::ZERO; 9];
    gens[0] = poly::affine(1.0, 0.0, 0.0);
    gens[1] = poly::affine(0.0, 1.0, 0.0);
    gens[2] = poly::affine(0.0, 0.0, 1.0);
    gens[3] = poly::mul(&gens[1], &gens[1]);
    gens[4] = poly::mul(&gens[1], &gens[2]);
    gens[5] = poly::mul(&gens[2], &gens[2]);
    for i in 0..3 {
        gens[6 + i] = poly::mul(&bubble, &lambda[i]);
    }
    Some(gens)
}

/// Applies the 9 DOF functionals to a polynomial in scaled coordinates.
///
/// `scale` converts scaled-coordinate gradients to physical normal
/// derivatives. Edge means use a 3-point Gauss rule, exact for quartics.
fn apply_dofs(
    p: &Poly,
    scaled_vertices: &[[f64; 2]; 3],
    normals: &[[f64; 2]; 3],
    scale: f64,
) -> [f64; 9] {
    let rule = edge_rule(5).expect("degree 5 supported");
    let px = poly::dx(p);
    let py = poly::dy(p);
    let mut out = [0.0; 9];
    for i in 0..3 {
        out[i] = poly::eval(p, scaled_vertices[i][0], scaled_vertices[i][1]);
        let a = scaled_vertices[(i + 1) % 3];
        let b = scaled_vertices[(i + 2) % 3];
        out[3 + i] = rule.mean(a, b, |q| poly::eval(p, q[0], q[1]));
        let n = normals[i];
        out[6 + i] = rule.mean(a, b, |q| {
            (poly::eval(&px, q[0], q[1]) * n[0] + poly::eval(&py, q[0], q[1]) * n[1]) / scale
        });
    }
    out
}

fn dual_matrix(geom: &ElementGeometry) -> Option<(SMatrix<f64, 9, 9>, [Poly; 9], [f64; 2], f64)> {
    let centroid = geom.centroid();
    let scale = geom.diameter();
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    let sv = [
        to_scaled(geom.vertices[0], centroid, scale),
        to_scaled(geom.vertices[1], centroid, scale),
        to_scaled(geom.vertices[2], centroid, scale),
    ];
    let gens = generators(&sv)?;
    let mut g = SMatrix::<f64, 9, 9>::zeros();
    for (j, gen) in gens.iter().enumerate() {
        let dofs = apply_dofs(gen, &sv, &geom.edge_normals, scale);
        for i in 0..9 {
            g[(i, j)] = dofs[i];
        }
    }
    Some((g, gens, centroid, scale))
}

/// Builds the nodal basis dual to the 9 DOFs on the given triangle.
pub fn build_nodal_basis(geom: &ElementGeometry) -> Result<LocalBasis, ElementError> {
    let (g, gens, centroid, scale) = dual_matrix(geom)
        .ok_or(ElementError::DegenerateTriangle { vertices: geom.vertices })?;

    let svd = g.svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(ElementError::IllConditioned { condition });
    }

    let lu = g.lu();
    let inv = lu
        .try_inverse()
        .ok_or(ElementError::IllConditioned { condition: f64::INFINITY })?;

    let mut value = [poly::ZERO; 9];
    for j in 0..9 {
        for (k, gen) in gens.iter().enumerate() {
            poly::axpy(&mut value[j], inv[(k, j)], gen);
        }
    }
    let grad_x = std::array::from_fn(|j| poly::dx(&value[j]));
    let grad_y = std::array::from_fn(|j| poly::dy(&value[j]));
    let hess_xx = std::array::from_fn(|j| poly::dx(&grad_x[j]));
    let hess_xy = std::array::from_fn(|j| poly::dy(&grad_x[j]));
    let hess_yy = std::array::from_fn(|j| poly::dy(&grad_y[j]));

    Ok(LocalBasis {
        geom: *geom,
        centroid,
        scale,
        value,
        grad_x,
        grad_y,
        hess_xx,
        hess_xy,
        hess_yy,
    })
}

impl LocalBasis {
    /// Values, gradients and Hessians of all 9 nodal functions at a physical
    /// point. Derivatives are with respect to physical coordinates.
    pub fn eval(&self, p: [f64; 2]) -> BasisEval {
        let s = to_scaled(p, self.centroid, self.scale);
        let inv = 1.0 / self.scale;
        let inv2 = inv * inv;
        let mut values = [0.0; 9];
        let mut gradients = [[0.0; 2]; 9];
        let mut hessians = [[0.0; 3]; 9];
        for j in 0..9 {
            values[j] = poly::eval(&self.value[j], s[0], s[1]);
            gradients[j] = [
                poly::eval(&self.grad_x[j], s[0], s[1]) * inv,
                poly::eval(&self.grad_y[j], s[0], s[1]) * inv,
            ];
            hessians[j] = [
                poly::eval(&self.hess_xx[j], s[0], s[1]) * inv2,
                poly::eval(&self.hess_xy[j], s[0], s[1]) * inv2,
                poly::eval(&self.hess_yy[j], s[0], s[1]) * inv2,
            ];
        }
        BasisEval { values, gradients, hessians }
    }

    /// Value of the function with local coefficients `coeffs` at `p`.
    pub fn eval_function(&self, coeffs: &[f64; 9], p: [f64; 2]) -> f64 {
        let s = to_scaled(p, self.centroid, self.scale);
        (0..9).map(|j| coeffs[j] * poly::eval(&self.value[j], s[0], s[1])).sum()
    }

    /// Laplacian of the local function as a quadratic polynomial in scaled
    /// coordinates (divide by scale^2 already applied on evaluation).
    pub fn laplacian_poly(&self, coeffs: &[f64; 9]) -> Poly {
        let inv2 = 1.0 / (self.scale * self.scale);
        let mut lap = poly::ZERO;
        for j in 0..9 {
            poly::axpy(&mut lap, coeffs[j] * inv2, &self.hess_xx[j]);
            poly::axpy(&mut lap, coeffs[j] * inv2, &self.hess_yy[j]);
        }
        lap
    }

    /// Evaluates a scaled-coordinate polynomial (as returned by
    /// [`laplacian_poly`](Self::laplacian_poly)) at a physical point.
    pub fn eval_scaled_poly(&self, p: &Poly, at: [f64; 2]) -> f64 {
        let s = to_scaled(at, self.centroid, self.scale);
        poly::eval(p, s[0], s[1])
    }

    /// The 9 DOF functionals applied to a smooth function given by value and
    /// gradient callbacks; edge means use the given quadrature degree.
    pub fn dof_values(
        &self,
        f: impl Fn([f64; 2]) -> f64,
        grad: impl Fn([f64; 2]) -> [f64; 2],
        edge_degree: usize,
    ) -> [f64; 9] {
        local_dof_values(&self.geom, f, grad, edge_degree)
    }
}

/// The 9 DOF functionals of the element applied to a smooth function.
pub fn local_dof_values(
    geom: &ElementGeometry,
    f: impl Fn([f64; 2]) -> f64,
    grad: impl Fn([f64; 2]) -> [f64; 2],
    edge_degree: usize,
) -> [f64; 9] {
    let rule = edge_rule(edge_degree).expect("edge degree supported");
    let mut out = [0.0; 9];
    for i in 0..3 {
        out[i] = f(geom.vertices[i]);
        let (a, b) = geom.edge_endpoints(i);
        out[3 + i] = rule.mean(a, b, &f);
        let n = geom.edge_normals[i];
        out[6 + i] = rule.mean(a, b, |q| {
            let g = grad(q);
            g[0] * n[0] + g[1] * n[1]
        });
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct UnisolvenceReport {
    pub determinant: f64,
    pub condition: f64,
    pub flagged: bool,
}

/// Determinant magnitude and condition estimate of the element dual system.
pub fn check_unisolvence(geom: &ElementGeometry) -> UnisolvenceReport {
    match dual_matrix(geom) {
        None => UnisolvenceReport { determinant: 0.0, condition: f64::INFINITY, flagged: true },
        Some((g, _, _, _)) => {
            let determinant = g.determinant().abs();
            let svd = g.svd(false, false);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
            UnisolvenceReport {
                determinant,
                condition,
                flagged: !condition.is_finite() || condition > CONDITION_FLAG,
            }
        }
    }
}
