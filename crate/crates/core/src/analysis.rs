//! Interpolation onto the discrete space, error norms against exact
//! solutions, discrete control recovery, and empirical convergence orders.

use crate::assembly::{element_basis, AssemblyError, DiscreteField, DofMap};
use crate::mesh::Mesh;
use crate::poly::Poly;
use crate::problem::ProblemSpec;
use crate::quadrature::{edge_rule, triangle_rule};
use std::fmt;

/// Quadrature degree for error norms.
pub const ERROR_DEGREE: usize = 10;
/// Edge quadrature degree for the interpolation operator's edge means.
pub const INTERP_EDGE_DEGREE: usize = 8;

#[derive(Debug)]
pub enum AnalysisError {
    MissingExactField { field: &'static str },
    Assembly(AssemblyError),
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::MissingExactField { field } => {
                write!(f, "problem has no exact {field}; cannot compute errors")
            }
            AnalysisError::Assembly(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for AnalysisError {}

impl From<AssemblyError> for AnalysisError {
    fn from(e: AssemblyError) -> Self {
        AnalysisError::Assembly(e)
    }
}

/// Interpolation matching vertex values, edge means of the value, and edge
/// means of the normal derivative on every entity that carries a DOF.
/// Boundary entities without DOFs are dropped (the discrete space pins them
/// to zero), so faithful interpolation needs fields whose eliminated
/// boundary data vanishes.
pub fn interpolate(
    mesh: &Mesh,
    dofmap: &DofMap,
    f: impl Fn([f64; 2]) -> f64,
    grad: impl Fn([f64; 2]) -> [f64; 2],
) -> DiscreteField {
    let rule = edge_rule(INTERP_EDGE_DEGREE).expect("edge degree supported");
    let mut coeffs = vec![0.0; dofmap.n_dofs];
    for (v, dof) in dofmap.vertex_dof.iter().enumerate() {
        if let Some(g) = dof {
            coeffs[*g] = f(mesh.vertices[v]);
        }
    }
    for (e, edge) in mesh.edges.iter().enumerate() {
        let a = mesh.vertices[edge.vertices[0]];
        let b = mesh.vertices[edge.vertices[1]];
        if let Some(g) = dofmap.edge_value_dof[e] {
            coeffs[g] = rule.mean(a, b, &f);
        }
        if let Some(g) = dofmap.edge_normal_dof[e] {
            let n = mesh.edge_normal(e);
            coeffs[g] = rule.mean(a, b, |p| {
                let gr = grad(p);
                gr[0] * n[0] + gr[1] * n[1]
            });
        }
    }
    DiscreteField { coeffs }
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy)]
pub struct ErrorReport {
    pub h: f64,
    pub n_dofs: usize,
    /// sqrt(beta * sum_T |y*-y_h|^2_{H2(T)} + ||y*-y_h||^2_{L2}).
    pub energy_err: f64,
    /// sqrt(sum_T |y*-y_h|^2_{H1(T)} + ||y*-y_h||^2_{L2}).
    pub h1_err: f64,
    pub l2_err: f64,
    /// ||u* - (-Δ_h y_h - f)||_{L2}.
    pub control_l2_err: f64,
}

/// Errors of a discrete state against the problem's exact fields,
/// elementwise by a degree-10 rule with piecewise-exact formulas evaluated
/// pointwise (elements straddling data interfaces commit an O(h)-measure
/// quadrature crime that does not alter measured orders).
pub fn error_norms(
    mesh: &Mesh,
    dofmap: &DofMap,
    y_h: &DiscreteField,
    spec: &ProblemSpec,
) -> Result<ErrorReport, AnalysisError> {
    let exact = spec
        .exact_state
        .as_ref()
        .ok_or(AnalysisError::MissingExactField { field: "state" })?;
    let exact_grad = spec
        .exact_state_grad
        .as_ref()
        .ok_or(AnalysisError::MissingExactField { field: "state gradient" })?;
    let exact_hess = spec
        .exact_state_hess
        .as_ref()
        .ok_or(AnalysisError::MissingExactField { field: "state Hessian" })?;
    let exact_control = spec
        .exact_control
        .as_ref()
        .ok_or(AnalysisError::MissingExactField { field: "control" })?;

    let rule = triangle_rule(ERROR_DEGREE).expect("error degree supported");
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    let mut h2 = 0.0;
    let mut ctl = 0.0;
    for t in 0..mesh.triangles.len() {
        let basis = element_basis(mesh, t)?;
        let local = y_h.local_coeffs(dofmap, t);
        for (p, w) in rule.mapped(&basis.geom.vertices) {
            let e = basis.eval(p);
            let mut value = 0.0;
            let mut grad = [0.0; 2];
            let mut hess = [0.0; 3];
            for j in 0..9 {
                value += local[j] * e.values[j];
                grad[0] += local[j] * e.gradients[j][0];
                grad[1] += local[j] * e.gradients[j][1];
                hess[0] += local[j] * e.hessians[j][0];
                hess[1] += local[j] * e.hessians[j][1];
                hess[2] += local[j] * e.hessians[j][2];
            }
            let dv = exact(p) - value;
            let ge = exact_grad(p);
            let dg = [ge[0] - grad[0], ge[1] - grad[1]];
            let he = exact_hess(p);
            let dh = [he[0] - hess[0], he[1] - hess[1], he[2] - hess[2]];
            let u_h = -(hess[0] + hess[2]) - (spec.source)(p);
            let du = exact_control(p) - u_h;
            l2 += w * dv * dv;
            h1 += w * (dg[0] * dg[0] + dg[1] * dg[1]);
            h2 += w * (dh[0] * dh[0] + 2.0 * dh[1] * dh[1] + dh[2] * dh[2]);
            ctl += w * du * du;
        }
    }
    Ok(ErrorReport {
        h: mesh.h,
        n_dofs: dofmap.n_dofs,
        energy_err: (spec.beta * h2 + l2).sqrt(),
        h1_err: (h1 + l2).sqrt(),
        l2_err: l2.sqrt(),
        control_l2_err: ctl.sqrt(),
    })
}

/// Broken energy norm of a discrete field, computed by quadrature
/// (independent of the assembled matrix).
pub fn broken_energy_norm(
    mesh: &Mesh,
    dofmap: &DofMap,
    y_h: &DiscreteField,
    beta: f64,
) -> Result<f64, AssemblyError> {
    let rule = triangle_rule(ERROR_DEGREE).expect("error degree supported");
    let mut l2 = 0.0;
    let mut h2 = 0.0;
    for t in 0..mesh.triangles.len() {
        let basis = element_basis(mesh, t)?;
        let local = y_h.local_coeffs(dofmap, t);
        for (p, w) in rule.mapped(&basis.geom.vertices) {
            let e = basis.eval(p);
            let mut value = 0.0;
            let mut hess = [0.0; 3];
            for j in 0..9 {
                value += local[j] * e.values[j];
                hess[0] += local[j] * e.hessians[j][0];
                hess[1] += local[j] * e.hessians[j][1];
                hess[2] += local[j] * e.hessians[j][2];
            }
            l2 += w * value * value;
            h2 += w * (hess[0] * hess[0] + 2.0 * hess[1] * hess[1] + hess[2] * hess[2]);
        }
    }
    Ok((beta * h2 + l2).sqrt())
}

/// Piecewise quadratic -Δ_h y_h; the recovered control is this minus the
/// source evaluated pointwise.
#[derive(Debug, Clone)]
pub struct ControlField {
    pub elements: Vec<ControlElement>,
}

#[derive(Debug, Clone)]
pub struct ControlElement {
    pub vertices: [[f64; 2]; 3],
    centroid: [f64; 2],
    scale: f64,
    neg_lap: Poly,
}

impl ControlElement {
    /// -Δ_h y_h at a point of this element.
    pub fn eval_neg_laplacian(&self, p: [f64; 2]) -> f64 {
        let s = [(p[0] - self.centroid[0]) / self.scale, (p[1] - self.centroid[1]) / self.scale];
        crate::poly::eval(&self.neg_lap, s[0], s[1])
    }
}

pub fn recover_control(
    mesh: &Mesh,
    dofmap: &DofMap,
    y_h: &DiscreteField,
) -> Result<ControlField, AssemblyError> {
    let mut elements = Vec::with_capacity(mesh.triangles.len());
    for t in 0..mesh.triangles.len() {
        let basis = element_basis(mesh, t)?;
        let local = y_h.local_coeffs(dofmap, t);
        let mut neg_lap = basis.laplacian_poly(&local);
        for c in neg_lap.iter_mut() {
            *c = -*c;
        }
        elements.push(ControlElement {
            vertices: basis.geom.vertices,
            centroid: basis.geom.centroid(),
            scale: basis.geom.diameter(),
            neg_lap,
        });
    }
    Ok(ControlField { elements })
}

/// Empirical orders log(e_{k-1}/e_k) / log(h_{k-1}/h_k); the first entry and
/// pairs with a vanishing error are `None`.
pub fn estimate_orders(errors: &[f64], hs: &[f64]) -> Vec<Option<f64>> {
    assert_eq!(errors.len(), hs.len());
    assert!(errors.len() >= 2, "need at least two levels");
    assert!(hs.windows(2).all(|w| w[1] < w[0]), "h must be strictly decreasing");
    let mut orders = vec![None; errors.len()];
    for k in 1..errors.len() {
        if errors[k - 1] > 0.0 && errors[k] > 0.0 {
            orders[k] = Some((errors[k - 1] / errors[k]).ln() / (hs[k - 1] / hs[k]).ln());
        }
    }
    orders
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{build_dof_map_with, BoundaryCondition};
    use crate::mesh::build_disk_mesh;

    #[test]
    fn order_estimates() {
        let orders = estimate_orders(&[0.8118, 0.3407], &[0.25, 0.125]);
        assert!(orders[0].is_none());
        assert!((orders[1].unwrap() - 1.2527).abs() < 1e-3, "{:?}", orders[1]);

        let orders = estimate_orders(&[1.0, 0.5, 0.25], &[0.4, 0.2, 0.1]);
        assert!((orders[1].unwrap() - 1.0).abs() < 1e-12);
        assert!((orders[2].unwrap() - 1.0).abs() < 1e-12);

        let orders = estimate_orders(&[4.0, 1.0], &[0.2, 0.1]);
        assert!((orders[1].unwrap() - 2.0).abs() < 1e-12);

        let orders = estimate_orders(&[1.0, 0.0], &[0.2, 0.1]);
        assert!(orders[1].is_none());
    }

    #[test]
    fn interpolation_reproduces_quadratics_where_dofs_are_complete() {
        let mesh = build_disk_mesh(2.0, 2);
        let map = build_dof_map_with(&mesh, BoundaryCondition::SimplySupported);
        let q = |p: [f64; 2]| 0.5 * p[0] * p[0] - p[0] * p[1] + p[1] + 0.25;
        let grad = |p: [f64; 2]| [p[0] - p[1], -p[0] + 1.0];
        let field = interpolate(&mesh, &map, q, grad);
        let mut checked = 0;
        for t in 0..mesh.triangles.len() {
            if map.cell_dofs[t].iter().any(|d| d.is_none()) {
                continue;
            }
            let basis = element_basis(&mesh, t).unwrap();
            let local = field.local_coeffs(&map, t);
            let c = basis.geom.centroid();
            for point in [c, [0.9 * c[0], 0.9 * c[1]]] {
                let got = basis.eval_function(&local, point);
                assert!((got - q(point)).abs() < 1e-9, "element {t}: {got} vs {}", q(point));
            }
            checked += 1;
        }
        assert!(checked > 10, "expected interior elements, got {checked}");
    }

    #[test]
    fn control_recovery_for_quadratic_state() {
        // y = interpolant of q => -Δ_h y = -Δq constant on interior elements
        let mesh = build_disk_mesh(2.0, 2);
        let map = build_dof_map_with(&mesh, BoundaryCondition::SimplySupported);
        let q = |p: [f64; 2]| p[0] * p[0] + 2.0 * p[1] * p[1];
        let grad = |p: [f64; 2]| [2.0 * p[0], 4.0 * p[1]];
        let field = interpolate(&mesh, &map, q, grad);
        let control = recover_control(&mesh, &map, &field).unwrap();
        for t in 0..mesh.triangles.len() {
            if map.cell_dofs[t].iter().any(|d| d.is_none()) {
                continue;
            }
            let c = control.elements[t].eval_neg_laplacian(control.elements[t].centroid);
            assert!((c - (-6.0)).abs() < 1e-9, "element {t}: {c}");
        }
    }

    #[test]
    fn missing_exact_fields_are_named() {
        let mesh = build_disk_mesh(2.0, 0);
        let map = crate::assembly::build_dof_map(&mesh);
        let spec = ProblemSpec::new(
            "plain",
            1.0,
            1.0,
            Box::new(|_| 0.0),
            Box::new(|_| 0.0),
            Box::new(|_| -1.0),
            Box::new(|_| 1.0),
        );
        let y = DiscreteField::zeros(&map);
        match error_norms(&mesh, &map, &y, &spec) {
            Err(AnalysisError::MissingExactField { field }) => assert_eq!(field, "state"),
            other => panic!("expected missing-field error, got {other:?}"),
        }
    }
}
