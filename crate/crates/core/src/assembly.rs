//! Global DOF management and assembly: the system matrix of the bilinear form
//! beta * sum_T (D^2 v : D^2 w) + (v, w), the reduced load functional
//! (y_d, v) - beta (f, Δ_h v), and the per-element constraint operators
//! (mean gradient, mean Laplacian, projected control bounds).

use crate::element::{build_nodal_basis, ElementError, ElementGeometry, LocalBasis};
use crate::linalg::SparseMatrix;
use crate::mesh::Mesh;
use crate::problem::ProblemSpec;
use crate::quadrature::triangle_rule;
use std::fmt;

/// Quadrature degree used for system and load assembly: basis functions are
/// quartic, so mass integrands have degree 8 and Hessian integrands degree 4.
pub const ASSEMBLY_DEGREE: usize = 10;

#[derive(Debug)]
pub enum AssemblyError {
    Element { triangle: usize, source: ElementError },
    InfeasibleBounds { element: usize, lower: f64, upper: f64 },
}

impl fmt::Display for AssemblyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssemblyError::Element { triangle, source } => {
                write!(f, "triangle {triangle}: {source}")
            }
            AssemblyError::InfeasibleBounds { element, lower, upper } => write!(
                f,
                "element {element}: projected control bounds infeasible (lower {lower} >= upper {upper})"
            ),
        }
    }
}

impl std::error::Error for AssemblyError {}

/// Which degrees of freedom are eliminated on the boundary.
///
/// `Clamped` eliminates every boundary DOF (vertex values, edge value means,
/// edge normal-derivative means). `SimplySupported` keeps boundary
/// normal-derivative means free, matching problems where only the value is
/// prescribed on the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryCondition {
    #[default]
    Clamped,
    SimplySupported,
}

/// Second-order term of the bilinear form.
///
/// The two choices agree on functions with vanishing boundary normal
/// derivative but differ by a boundary-curvature term otherwise:
/// int D^2y : D^2y = int (Δy)^2 - int_bdry kappa (dy/dn)^2 ds. `Frobenius`
/// is the plate-type form; `Laplacian` makes the discrete objective equal
/// the reduced control objective 1/2||y - y_d||^2 + beta/2 ||Δ_h y + f||^2
/// the reduced control objective 1/2||y - y_d||^2 + beta/2 ||Δ_h y + f||^2
/// elementwise, which matters on curved domains with free boundary normals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HessianForm {
    #[default]
    Frobenius,
    Laplacian,
}

/// Global numbering: interior vertices, then edge-value DOFs, then
/// edge-normal DOFs, each in entity-index order. Edge-mean DOFs are shared
/// across the two triangles of an interior edge.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub vertex_dof: Vec<Option<usize>>,
    pub edge_value_dof: Vec<Option<usize>>,
    pub edge_normal_dof: Vec<Option<usize>>,
    pub n_dofs: usize,
    /// Per triangle: global index of each of the 9 local DOFs (vertex values,
    /// edge value means, edge normal means; edge i opposite vertex i).
    pub cell_dofs: Vec<[Option<usize>; 9]>,
    pub bc: BoundaryCondition,
}

/// DOF map with every boundary DOF eliminated.
pub fn build_dof_map(mesh: &Mesh) -> DofMap {
    build_dof_map_with(mesh, BoundaryCondition::Clamped)
}

pub fn build_dof_map_with(mesh: &Mesh, bc: BoundaryCondition) -> DofMap {
    let mut next = 0usize;
    let vertex_dof: Vec<Option<usize>> = mesh
        .vertex_on_boundary
        .iter()
        .map(|&on_boundary| {
            if on_boundary {
                None
            } else {
                let id = next;
                next += 1;
                Some(id)
            }
        })
        .collect();
    let edge_value_dof: Vec<Option<usize>> = mesh
        .edges
        .iter()
        .map(|e| {
            if e.is_boundary() {
                None
            } else {
                let id = next;
                next += 1;
                Some(id)
            }
        })
        .collect();
    let edge_normal_dof: Vec<Option<usize>> = mesh
        .edges
        .iter()
        .map(|e| {
            if e.is_boundary() && bc == BoundaryCondition::Clamped {
                None
            } else {
                let id = next;
                next += 1;
                Some(id)
            }
        })
        .collect();

    let cell_dofs = (0..mesh.triangles.len())
        .map(|t| {
            let tri = mesh.triangles[t];
            let edges = mesh.tri_edges[t];
            [
                vertex_dof[tri[0]],
                vertex_dof[tri[1]],
                vertex_dof[tri[2]],
                edge_value_dof[edges[0]],
                edge_value_dof[edges[1]],
                edge_value_dof[edges[2]],
                edge_normal_dof[edges[0]],
                edge_normal_dof[edges[1]],
                edge_normal_dof[edges[2]],
            ]
        })
        .collect();

    DofMap { vertex_dof, edge_value_dof, edge_normal_dof, n_dofs: next, cell_dofs, bc }
}

/// Coefficient vector of a discrete state over a [`DofMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField {
    pub coeffs: Vec<f64>,
}

impl DiscreteField {
    pub fn zeros(dofmap: &DofMap) -> Self {
        DiscreteField { coeffs: vec![0.0; dofmap.n_dofs] }
    }

    pub fn from_coeffs(coeffs: Vec<f64>, dofmap: &DofMap) -> Self {
        assert_eq!(coeffs.len(), dofmap.n_dofs, "coefficient length mismatch");
        DiscreteField { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Local coefficients on triangle `t`; eliminated DOFs contribute zero.
    pub fn local_coeffs(&self, dofmap: &DofMap, t: usize) -> [f64; 9] {
        let mut local = [0.0; 9];
        for (slot, dof) in local.iter_mut().zip(dofmap.cell_dofs[t]) {
            if let Some(g) = dof {
                *slot = self.coeffs[g];
            }
        }
        local
    }
}

pub fn element_basis(mesh: &Mesh, t: usize) -> Result<LocalBasis, AssemblyError> {
    build_nodal_basis(&ElementGeometry::from_mesh(mesh, t))
        .map_err(|source| AssemblyError::Element { triangle: t, source })
}

/// Assembles the symmetric system matrix with entries
/// beta * sum_T int_T D^2 phi_i : D^2 phi_j + int phi_i phi_j.
pub fn assemble_system(
    mesh: &Mesh,
    dofmap: &DofMap,
    spec: &ProblemSpec,
) -> Result<SparseMatrix, AssemblyError> {
    assemble_system_with(mesh, dofmap, spec, HessianForm::Frobenius)
}

pub fn assemble_system_with(
    mesh: &Mesh,
    dofmap: &DofMap,
    spec: &ProblemSpec,
    form: HessianForm,
) -> Result<SparseMatrix, AssemblyError> {
    let rule = triangle_rule(ASSEMBLY_DEGREE).expect("assembly degree supported");
    let beta = spec.beta;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for t in 0..mesh.triangles.len() {
        let basis = element_basis(mesh, t)?;
        let mut local = [[0.0; 9]; 9];
        for (p, w) in rule.mapped(&basis.geom.vertices) {
            let e = basis.eval(p);
            for i in 0..9 {
                let hi = e.hessians[i];
                let vi = e.values[i];
                for j in i..9 {
                    let hj = e.hessians[j];
                    let second = match form {
                        HessianForm::Frobenius => {
                            hi[0] * hj[0] + 2.0 * hi[1] * hj[1] + hi[2] * hj[2]
                        }
                        HessianForm::Laplacian => (hi[0] + hi[2]) * (hj[0] + hj[2]),
                    };
                    local[i][j] += w * (beta * second + vi * e.values[j]);
                }
            }
        }
        for i in 0..9 {
            for j in i..9 {
                local[j][i] = local[i][j];
            }
        }
        let dofs = dofmap.cell_dofs[t];
        for i in 0..9 {
            let Some(gi) = dofs[i] else { continue };
            for j in 0..9 {
                let Some(gj) = dofs[j] else { continue };
                triplets.push((gi, gj, local[i][j]));
            }
        }
    }
    Ok(SparseMatrix::from_triplets(dofmap.n_dofs, &triplets).expect("indices in range"))
}

/// Assembles the load vector b_i = int y_d phi_i - beta int f Δ_h phi_i.
pub fn assemble_load(
    mesh: &Mesh,
    dofmap: &DofMap,
    spec: &ProblemSpec,
) -> Result<Vec<f64>, AssemblyError> {
    assemble_load_with_degree(mesh, dofmap, spec, ASSEMBLY_DEGREE)
}

pub fn assemble_load_with_degree(
    mesh: &Mesh,
    dofmap: &DofMap,
    spec: &ProblemSpec,
    degree: usize,
) -> Result<Vec<f64>, AssemblyError> {
    let rule = triangle_rule(degree).expect("load degree supported");
    let mut b = vec![0.0; dofmap.n_dofs];
    for t in 0..mesh.triangles.len() {
        let basis = element_basis(mesh, t)?;
        let mut local = [0.0; 9];
        for (p, w) in rule.mapped(&basis.geom.vertices) {
            let e = basis.eval(p);
            let yd = (spec.desired_state)(p);
            let f = (spec.source)(p);
            for j in 0..9 {
                local[j] += w * (yd * e.values[j] - spec.beta * f * e.laplacian(j));
            }
        }
        for (j, dof) in dofmap.cell_dofs[t].iter().enumerate() {
            if let Some(g) = dof {
                b[*g] += local[j];
            }
        }
    }
    Ok(b)
}

/// Per-element constraint data: the mean-gradient rows realizing the bound
/// |I_h grad v| <= g, the mean-Laplacian row realizing the projected control
/// box, and the projected bounds themselves.
#[derive(Debug, Clone)]
pub struct ElementConstraint {
    pub element: usize,
    pub area: f64,
    pub dofs: [Option<usize>; 9],
    /// Column j: (1/|T|) int_T grad phi_j.
    pub mean_grad: [[f64; 2]; 9],
    /// Entry j: (1/|T|) int_T Δ phi_j.
    pub mean_lap: [f64; 9],
    /// a_T: elementwise projection of u_a + f.
    pub lower: f64,
    /// b_T: elementwise projection of u_b + f.
    pub upper: f64,
}

impl ElementConstraint {
    /// Mean of -Δ_h y over the element (the constrained control proxy).
    pub fn control_value(&self, y: &[f64]) -> f64 {
        let mut c = 0.0;
        for (j, dof) in self.dofs.iter().enumerate() {
            if let Some(g) = dof {
                c -= self.mean_lap[j] * y[*g];
            }
        }
        c
    }

    /// Elementwise mean gradient I_h grad y (2-vector).
    pub fn mean_gradient(&self, y: &[f64]) -> [f64; 2] {
        let mut g = [0.0, 0.0];
        for (j, dof) in self.dofs.iter().enumerate() {
            if let Some(i) = dof {
                g[0] += self.mean_grad[j][0] * y[*i];
                g[1] += self.mean_grad[j][1] * y[*i];
            }
        }
        g
    }
}

#[derive(Debug, Clone)]
pub struct ConstraintSet {
    pub elements: Vec<ElementConstraint>,
    pub grad_bound: f64,
}

/// Builds the constraint operators. Means of gradients and Laplacians of the
/// quartic basis are exact with a degree-4 rule; the projected bounds use the
/// single-point centroid rule (exact for the piecewise-constant projection of
/// affine data).
pub fn build_constraints(
    mesh: &Mesh,
    dofmap: &DofMap,
    spec: &ProblemSpec,
) -> Result<ConstraintSet, AssemblyError> {
    let rule = triangle_rule(4).expect("degree 4 supported");
    let mut elements = Vec::with_capacity(mesh.triangles.len());
    for t in 0..mesh.triangles.len() {
        let basis = element_basis(mesh, t)?;
        let area = basis.geom.signed_area();
        let mut mean_grad = [[0.0; 2]; 9];
        let mut mean_lap = [0.0; 9];
        for (p, w) in rule.mapped(&basis.geom.vertices) {
            let e = basis.eval(p);
            for j in 0..9 {
                mean_grad[j][0] += w * e.gradients[j][0];
                mean_grad[j][1] += w * e.gradients[j][1];
                mean_lap[j] += w * e.laplacian(j);
            }
        }
        for j in 0..9 {
            mean_grad[j][0] /= area;
            mean_grad[j][1] /= area;
            mean_lap[j] /= area;
        }
        let centroid = basis.geom.centroid();
        let shift = (spec.source)(centroid);
        let lower = (spec.control_lower)(centroid) + shift;
        let upper = (spec.control_upper)(centroid) + shift;
        if lower >= upper {
            return Err(AssemblyError::InfeasibleBounds { element: t, lower, upper });
        }
        elements.push(ElementConstraint {
            element: t,
            area,
            dofs: dofmap.cell_dofs[t],
            mean_grad,
            mean_lap,
            lower,
            upper,
        });
    }
    Ok(ConstraintSet { elements, grad_bound: spec.grad_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_disk_mesh, unit_square_two_triangles, BoundaryGeometry, Mesh};
    use crate::problem::ProblemSpec;

    fn constant_spec(beta: f64) -> ProblemSpec {
        ProblemSpec::new(
            "test",
            beta,
            1.0,
            Box::new(|_| 0.0),
            Box::new(|_| 0.0),
            Box::new(|_| -2.0),
            Box::new(|_| 2.0),
        )
    }

    #[test]
    fn dof_counts() {
        let single = Mesh::from_cells(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            BoundaryGeometry::Polygonal,
        )
        .unwrap();
        assert_eq!(build_dof_map(&single).n_dofs, 0);

        let two = unit_square_two_triangles();
        let map = build_dof_map(&two);
        assert_eq!(map.n_dofs, 2);

        let disk = build_disk_mesh(2.0, 2);
        let map = build_dof_map(&disk);
        assert_eq!(map.n_dofs, disk.n_interior_vertices() + 2 * disk.n_interior_edges());

        let ss = build_dof_map_with(&disk, BoundaryCondition::SimplySupported);
        let boundary_edges = disk.edges.len() - disk.n_interior_edges();
        assert_eq!(ss.n_dofs, map.n_dofs + boundary_edges);
    }

    #[test]
    fn numbering_is_deterministic_and_ordered() {
        let mesh = build_disk_mesh(2.0, 1);
        let map = build_dof_map(&mesh);
        let mut seen = vec![false; map.n_dofs];
        let mut expect = 0usize;
        for dof in map
            .vertex_dof
            .iter()
            .chain(&map.edge_value_dof)
            .chain(&map.edge_normal_dof)
            .flatten()
        {
            assert_eq!(*dof, expect, "entity-order numbering");
            expect += 1;
            seen[*dof] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn system_is_symmetric_and_positive() {
        use rand::{Rng, SeedableRng};
        let mesh = build_disk_mesh(2.0, 1);
        let map = build_dof_map(&mesh);
        let spec = constant_spec(1.0);
        let a = assemble_system(&mesh, &map, &spec).unwrap();
        let mut max_entry: f64 = 0.0;
        let mut max_asym: f64 = 0.0;
        for (i, j, v) in a.rows() {
            max_entry = max_entry.max(v.abs());
            max_asym = max_asym.max((v - a.entry(j, i)).abs());
        }
        assert!(max_asym <= 1e-12 * max_entry);

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let v: Vec<f64> = (0..map.n_dofs).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let av = a.apply(&v);
            let vav = crate::linalg::dot(&v, &av);
            assert!(vav > 0.0, "coercivity violated: {vav}");
        }
    }

    #[test]
    fn load_zero_data_is_zero() {
        let mesh = build_disk_mesh(2.0, 1);
        let map = build_dof_map(&mesh);
        let spec = constant_spec(1.0);
        let b = assemble_load(&mesh, &map, &spec).unwrap();
        assert!(b.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn load_is_integral_of_test_function() {
        // with y_d = 1, f = 0: b^T c = int v_h for the field with coeffs c
        use rand::{Rng, SeedableRng};
        let mesh = build_disk_mesh(2.0, 1);
        let map = build_dof_map(&mesh);
        let spec = ProblemSpec::new(
            "ones",
            1.0,
            1.0,
            Box::new(|_| 1.0),
            Box::new(|_| 0.0),
            Box::new(|_| -2.0),
            Box::new(|_| 2.0),
        );
        let b = assemble_load(&mesh, &map, &spec).unwrap();
        let rule = triangle_rule(10).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let field = DiscreteField::from_coeffs(
                (0..map.n_dofs).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                &map,
            );
            let direct = crate::linalg::dot(&b, &field.coeffs);
            let mut integral = 0.0;
            for t in 0..mesh.triangles.len() {
                let basis = element_basis(&mesh, t).unwrap();
                let local = field.local_coeffs(&map, t);
                integral += rule.integrate(&basis.geom.vertices, |p| {
                    let e = basis.eval(p);
                    (0..9).map(|j| local[j] * e.values[j]).sum::<f64>()
                });
            }
            assert!(
                (direct - integral).abs() < 1e-10 * integral.abs().max(1.0),
                "{direct} vs {integral}"
            );
        }
    }

    #[test]
    fn mean_gradient_exact_for_linear_interpolant() {
        let mesh = build_disk_mesh(2.0, 1);
        // simply supported so the interpolant of a linear keeps its boundary
        // normal data; interior elements of a clamped map behave identically
        let map = build_dof_map_with(&mesh, BoundaryCondition::SimplySupported);
        let spec = constant_spec(1.0);
        let cons = build_constraints(&mesh, &map, &spec).unwrap();
        // build the discrete interpolant of l(x, y) = x by assigning DOFs
        let mut y = vec![0.0; map.n_dofs];
        for (v, dof) in map.vertex_dof.iter().enumerate() {
            if let Some(g) = dof {
                y[*g] = mesh.vertices[v][0];
            }
        }
        let rule = crate::quadrature::edge_rule(4).unwrap();
        for (e, edge) in mesh.edges.iter().enumerate() {
            let a = mesh.vertices[edge.vertices[0]];
            let b = mesh.vertices[edge.vertices[1]];
            if let Some(g) = map.edge_value_dof[e] {
                y[g] = rule.mean(a, b, |p| p[0]);
            }
            if let Some(g) = map.edge_normal_dof[e] {
                let n = mesh.edge_normal(e);
                y[g] = n[0]; // grad l = (1, 0)
            }
        }
        for elem in &cons.elements {
            // skip elements touching eliminated (boundary-value) entities:
            // their local representation of l is incomplete by construction
            if elem.dofs.iter().any(|d| d.is_none()) {
                continue;
            }
            let g = elem.mean_gradient(&y);
            assert!((g[0] - 1.0).abs() < 1e-12 && g[1].abs() < 1e-12, "mean grad {g:?}");
        }
    }

    #[test]
    fn constant_bounds_projected_exactly() {
        let mesh = build_disk_mesh(2.0, 1);
        let map = build_dof_map(&mesh);
        let spec = constant_spec(1.0);
        let cons = build_constraints(&mesh, &map, &spec).unwrap();
        for elem in &cons.elements {
            assert_eq!(elem.lower, -2.0);
            assert_eq!(elem.upper, 2.0);
        }
    }

    #[test]
    fn piecewise_source_shifts_bounds_by_centroid_value() {
        let mesh = build_disk_mesh(2.0, 2);
        let map = build_dof_map(&mesh);
        let spec = ProblemSpec::new(
            "shifted",
            1.0,
            1.0,
            Box::new(|_| 0.0),
            Box::new(|p: [f64; 2]| if (p[0] * p[0] + p[1] * p[1]).sqrt() <= 1.0 { 2.0 } else { 0.0 }),
            Box::new(|_| -2.0),
            Box::new(|_| 2.0),
        );
        let cons = build_constraints(&mesh, &map, &spec).unwrap();
        for elem in &cons.elements {
            assert!(elem.lower == 0.0 || elem.lower == -2.0, "a_T = {}", elem.lower);
            assert_eq!(elem.upper, elem.lower + 4.0);
        }
    }

    #[test]
    fn infeasible_bounds_name_the_element() {
        let mesh = unit_square_two_triangles();
        let map = build_dof_map(&mesh);
        let spec = ProblemSpec::new(
            "bad",
            1.0,
            1.0,
            Box::new(|_| 0.0),
            Box::new(|_| 0.0),
            Box::new(|_| 1.0),
            Box::new(|_| -1.0),
        );
        match build_constraints(&mesh, &map, &spec) {
            Err(AssemblyError::InfeasibleBounds { element, .. }) => assert_eq!(element, 0),
            other => panic!("expected infeasible bounds, got {other:?}"),
        }
    }
}
