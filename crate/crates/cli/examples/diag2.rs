use morley_oc::analysis::{error_norms, interpolate};
use morley_oc::assembly::*;
use morley_oc::linalg::dot;
use morley_oc::mesh::build_disk_mesh;
use morley_oc::quadrature::triangle_rule;
use morley_oc::solver::{uzawa_solve, SolverConfig};
use morley_oc_cli::problems::schiela_disk;

fn main() {
    // exact shift: J_full(v) = J_h(v) + 1/2||y_d||^2 + 1/2||f||^2 for beta=1
    // J(y*) = pi/2
    for level in 1..=4 {
        let spec = schiela_disk(1.0, 0.5);
        let mesh = build_disk_mesh(2.0, level);
        let map = build_dof_map_with(&mesh, BoundaryCondition::SimplySupported);
        let a = assemble_system(&mesh, &map, &spec).unwrap();
        let b = assemble_load(&mesh, &map, &spec).unwrap();
        let cons = build_constraints(&mesh, &map, &spec).unwrap();
        let rule = triangle_rule(12).unwrap();
        let mut shift = 0.0;
        for t in 0..mesh.triangles.len() {
            let verts = mesh.triangle_vertices(t);
            shift += 0.5
                * rule.integrate(&verts, |p| {
                    let yd = (spec.desired_state)(p);
                    let f = (spec.source)(p);
                    yd * yd + f * f
                });
        }
        let jh = |v: &[f64]| 0.5 * dot(v, &a.apply(v)) - dot(&b, v);

        let mut cfg = SolverConfig::for_beta(1.0);
        cfg.rho_grad = 10.0;
        cfg.max_outer = 60000;
        cfg.tol_feas = 1e-7;
        cfg.tol_comp = 1e-7;
        let sol = uzawa_solve(&a, &b, &cons, &cfg).unwrap();

        let ystar = spec.exact_state.as_ref().unwrap();
        let gstar = spec.exact_state_grad.as_ref().unwrap();
        let pi_y = interpolate(&mesh, &map, ystar, gstar);

        // pointwise gradient max over quadrature points
        let rule4 = triangle_rule(6).unwrap();
        let mut pw_max: f64 = 0.0;
        for t in 0..mesh.triangles.len() {
            let basis = element_basis(&mesh, t).unwrap();
            let local = sol.y.local_coeffs(&map, t);
            for (p, _) in rule4.mapped(&basis.geom.vertices) {
                let e = basis.eval(p);
                let mut g = [0.0, 0.0];
                for j in 0..9 {
                    g[0] += local[j] * e.gradients[j][0];
                    g[1] += local[j] * e.gradients[j][1];
                }
                pw_max = pw_max.max((g[0] * g[0] + g[1] * g[1]).sqrt());
            }
        }
        let active = sol.state.mu.iter().filter(|&&m| m > 1e-6).count();
        let err = error_norms(&mesh, &map, &sol.y, &spec).unwrap();
        println!(
            "L{level}: J(y_h) = {:.5} J(pi y*) = {:.5} (J* = {:.5}) | pw|grad| {:.3} active {} | energyE {:.3} L2E {:.4} conv {}",
            jh(&sol.y.coeffs) + shift,
            jh(&pi_y.coeffs) + shift,
            std::f64::consts::FRAC_PI_2,
            pw_max,
            active,
            err.energy_err,
            err.l2_err,
            sol.state.converged,
        );
    }
}
