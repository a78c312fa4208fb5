use morley_oc::analysis::{broken_energy_norm, error_norms, interpolate};
use morley_oc::assembly::*;
use morley_oc::linalg::dot;
use morley_oc::mesh::build_disk_mesh;
use morley_oc::solver::{uzawa_solve, SolverConfig};
use morley_oc_cli::problems::schiela_disk;

fn main() {
    let level = 3;
    let spec = schiela_disk(1.0, 0.5);
    let mesh = build_disk_mesh(2.0, level);
    let map = build_dof_map_with(&mesh, BoundaryCondition::SimplySupported);
    let a = assemble_system(&mesh, &map, &spec).unwrap();
    let b = assemble_load(&mesh, &map, &spec).unwrap();
    let cons = build_constraints(&mesh, &map, &spec).unwrap();

    // interpolant of the exact state
    let ystar = spec.exact_state.as_ref().unwrap();
    let gstar = spec.exact_state_grad.as_ref().unwrap();
    let pi_y = interpolate(&mesh, &map, ystar, gstar);

    // feasibility of the interpolant
    let mut gmax: f64 = 0.0;
    let mut box_viol: f64 = 0.0;
    for elem in &cons.elements {
        let g = elem.mean_gradient(&pi_y.coeffs);
        gmax = gmax.max((g[0] * g[0] + g[1] * g[1]).sqrt());
        let c = elem.control_value(&pi_y.coeffs);
        box_viol = box_viol.max(c - elem.upper).max(elem.lower - c);
    }
    println!("pi_h y*: max |G| = {gmax:.6} (bound 0.5), max box violation = {box_viol:.3e}");

    // objective values: J_h(v) = 1/2 v'Av - b'v
    let jh = |v: &[f64]| 0.5 * dot(v, &a.apply(v)) - dot(&b, v);
    println!("J_h(pi_h y*) = {:.8}", jh(&pi_y.coeffs));

    let mut cfg = SolverConfig::for_beta(1.0);
    cfg.rho_grad = 10.0;
    cfg.max_outer = 40000;
    cfg.tol_feas = 1e-7;
    cfg.tol_comp = 1e-7;
    let sol = uzawa_solve(&a, &b, &cons, &cfg).unwrap();
    println!("solver converged {} in {} iters, max mu {:.3}", sol.state.converged, sol.state.iterations, sol.report.max_mu);
    println!("J_h(y_h)     = {:.8}", jh(&sol.y.coeffs));

    // errors of interpolant and of solution
    let e_pi = error_norms(&mesh, &map, &pi_y, &spec).unwrap();
    println!("errors of pi_h y*: energy {:.4e}, H1 {:.4e}, L2 {:.4e}", e_pi.energy_err, e_pi.h1_err, e_pi.l2_err);
    let e_sol = error_norms(&mesh, &map, &sol.y, &spec).unwrap();
    println!("errors of y_h:     energy {:.4e}, H1 {:.4e}, L2 {:.4e}", e_sol.energy_err, e_sol.h1_err, e_sol.l2_err);

    let diff = DiscreteField::from_coeffs(
        sol.y.coeffs.iter().zip(&pi_y.coeffs).map(|(a, b)| a - b).collect(), &map);
    println!("||y_h - pi_h y*||_h = {:.4e}", broken_energy_norm(&mesh, &map, &diff, 1.0).unwrap());

    // how many elements have active gradient constraint
    let active = sol.state.mu.iter().filter(|&&m| m > 1e-6).count();
    println!("active gradient elements: {active} of {}", cons.elements.len());
    // max |G y_h|
    let mut gmax_sol: f64 = 0.0;
    for elem in &cons.elements {
        let g = elem.mean_gradient(&sol.y.coeffs);
        gmax_sol = gmax_sol.max((g[0] * g[0] + g[1] * g[1]).sqrt());
    }
    println!("max |G y_h| = {gmax_sol:.6}");
}
