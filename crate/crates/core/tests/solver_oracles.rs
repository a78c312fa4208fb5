//! Independent optimality oracles for the Uzawa solver on a small instance
//! with artificially active bounds: the discrete variational inequality
//! sampled over random feasible points, and agreement with a quadratic
//! penalty minimization driven by safeguarded gradient descent.

use morley_oc::analysis::broken_energy_norm;
use morley_oc::assembly::{
    assemble_load, assemble_system, build_constraints, build_dof_map, ConstraintSet,
    DiscreteField,
};
use morley_oc::linalg::{dot, norm, spd_solve, SparseMatrix};
use morley_oc::mesh::{build_disk_mesh, Mesh};
use morley_oc::problem::ProblemSpec;
use morley_oc::solver::{uzawa_solve, SolverConfig};
use rand::{Rng, SeedableRng};

/// 17-DOF instance (8-triangle disk) whose unconstrained solution violates
/// both the control box and the gradient bound.
fn active_instance() -> (Mesh, morley_oc::assembly::DofMap, SparseMatrix, Vec<f64>, ConstraintSet)
{
    let mesh = build_disk_mesh(2.0, 0);
    let map = build_dof_map(&mesh);
    assert!(map.n_dofs <= 50, "oracle instance must stay small, N = {}", map.n_dofs);

    let wide = ProblemSpec::new(
        "wide",
        1.0,
        1e6,
        Box::new(|p: [f64; 2]| {
            5.0 * (1.0 - 0.25 * (p[0] * p[0] + p[1] * p[1]) + 0.8 * p[0] + 0.4 * p[0] * p[1])
        }),
        Box::new(|_| 0.0),
        Box::new(|_| -1e6),
        Box::new(|_| 1e6),
    );
    let a = assemble_system(&mesh, &map, &wide).unwrap();
    let b = assemble_load(&mesh, &map, &wide).unwrap();
    let cons_wide = build_constraints(&mesh, &map, &wide).unwrap();
    let y_unc = spd_solve(&a, &b, 1e-12, 10 * map.n_dofs).unwrap();

    let mut cmax: f64 = 0.0;
    let mut cmin: f64 = 0.0;
    let mut gmax: f64 = 0.0;
    for elem in &cons_wide.elements {
        let c = elem.control_value(&y_unc);
        cmax = cmax.max(c);
        cmin = cmin.min(c);
        let g = elem.mean_gradient(&y_unc);
        gmax = gmax.max((g[0] * g[0] + g[1] * g[1]).sqrt());
    }
    assert!(cmax > 1e-3 && gmax > 1e-3, "instance not rich enough: {cmax}, {gmax}");

    // bounds cutting into the unconstrained solution, with 0 still feasible;
    // mild cuts keep the multipliers O(1) so the penalty oracle's eps-bias
    // stays well under the agreement tolerance
    let upper = 0.75 * cmax;
    let lower = if cmin < -1e-3 { 0.75 * cmin } else { -upper };
    let grad_bound = 0.9 * gmax;
    let tight = ProblemSpec::new(
        "tight",
        1.0,
        grad_bound,
        Box::new(|p: [f64; 2]| {
            5.0 * (1.0 - 0.25 * (p[0] * p[0] + p[1] * p[1]) + 0.8 * p[0] + 0.4 * p[0] * p[1])
        }),
        Box::new(|_| 0.0),
        Box::new(move |_| lower),
        Box::new(move |_| upper),
    );
    let cons = build_constraints(&mesh, &map, &tight).unwrap();
    (mesh, map, a, b, cons)
}

fn project_feasible(v: &[f64], cons: &ConstraintSet) -> Vec<f64> {
    // constraints are positively homogeneous around zero when the box
    // contains zero, so shrinking toward zero reaches feasibility
    let mut s = 1.0f64;
    for elem in &cons.elements {
        let c = elem.control_value(v);
        if c > elem.upper {
            s = s.min(elem.upper / c);
        }
        if c < elem.lower {
            s = s.min(elem.lower / c);
        }
        let g = elem.mean_gradient(v);
        let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
        if gn > cons.grad_bound {
            s = s.min(cons.grad_bound / gn);
        }
    }
    s *= 1.0 - 1e-12;
    v.iter().map(|x| s * x).collect()
}

#[test]
fn variational_inequality_sampled_over_feasible_points() {
    let (_mesh, map, a, b, cons) = active_instance();
    for elem in &cons.elements {
        assert!(elem.lower <= 0.0 && 0.0 <= elem.upper, "zero must be feasible");
    }

    let mut config = SolverConfig::for_beta(1.0);
    config.max_outer = 50_000;
    config.tol_feas = 1e-10;
    config.tol_comp = 1e-10;
    // the squared-gradient residual is O(1e-2) here; a larger dual step
    // keeps the runtime of the oracle reasonable
    config.rho_grad = 100.0;
    let sol = uzawa_solve(&a, &b, &cons, &config).unwrap();
    assert!(sol.state.converged, "solver did not converge: {:?}", sol.report);
    assert!(
        sol.state.mu.iter().any(|&m| m > 1e-8)
            || sol.state.lambda_plus.iter().any(|&m| m > 1e-8),
        "instance should have active constraints"
    );
    // dual feasibility
    assert!(sol.state.mu.iter().all(|&m| m >= 0.0));
    assert!(sol.state.lambda_plus.iter().all(|&m| m >= 0.0));
    assert!(sol.state.lambda_minus.iter().all(|&m| m >= 0.0));

    let y = &sol.y.coeffs;
    let ay = a.apply(y);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut active_samples = 0;
    for trial in 0..500 {
        let raw: Vec<f64> = (0..map.n_dofs).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let v = project_feasible(&raw, &cons);
        if v.iter().map(|x| x.abs()).fold(0.0, f64::max) > 1e-6 {
            active_samples += 1;
        }
        let d: Vec<f64> = v.iter().zip(y).map(|(vi, yi)| vi - yi).collect();
        // A_h(y, v - y) - l(v - y) >= 0 up to tolerance
        let lhs = dot(&ay, &d) - dot(&b, &d);
        let scale = (norm(&ay) + norm(&b)) * norm(&d);
        assert!(lhs >= -1e-8 * scale.max(1.0), "trial {trial}: VI violated, lhs {lhs}");
    }
    assert!(active_samples > 400, "samples degenerate: {active_samples}");
}

/// Quadratic-penalty objective value and gradient.
fn penalty_objective(
    a: &SparseMatrix,
    b: &[f64],
    cons: &ConstraintSet,
    eps: f64,
    v: &[f64],
) -> (f64, Vec<f64>) {
    let av = a.apply(v);
    let mut value = 0.5 * dot(v, &av) - dot(b, v);
    let mut grad: Vec<f64> = av.iter().zip(b).map(|(x, y)| x - y).collect();
    let g2 = cons.grad_bound * cons.grad_bound;
    for elem in &cons.elements {
        let c = elem.control_value(v);
        let g = elem.mean_gradient(v);
        let gnorm2 = g[0] * g[0] + g[1] * g[1];
        let r_up = (c - elem.upper).max(0.0);
        let r_lo = (elem.lower - c).max(0.0);
        let r_g = (gnorm2 - g2).max(0.0);
        value += elem.area / eps * (r_up * r_up + r_lo * r_lo + r_g * r_g);
        for (j, dof) in elem.dofs.iter().enumerate() {
            let Some(i) = dof else { continue };
            // dc/dv_j = -mean_lap[j]
            grad[*i] += elem.area / eps
                * (2.0 * r_up * (-elem.mean_lap[j]) + 2.0 * r_lo * elem.mean_lap[j]);
            if r_g > 0.0 {
                grad[*i] += elem.area / eps
                    * (4.0 * r_g * (elem.mean_grad[j][0] * g[0] + elem.mean_grad[j][1] * g[1]));
            }
        }
    }
    (value, grad)
}

/// Barzilai-Borwein gradient descent with a nonmonotone (Grippo) Armijo
/// safeguard; plain fixed-step descent stalls on the 1/eps curvature.
fn penalty_minimize(
    a: &SparseMatrix,
    b: &[f64],
    cons: &ConstraintSet,
    eps: f64,
    x0: &[f64],
) -> Vec<f64> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = penalty_objective(a, b, cons, eps, &x);
    let gscale = norm(&g).max(1.0);
    let mut step = 1e-7;
    let mut x_prev = x.clone();
    let mut g_prev = g.clone();
    let mut recent = std::collections::VecDeque::from([fx]);
    for it in 0..500_000 {
        if it > 0 {
            let mut sy = 0.0;
            let mut ss = 0.0;
            for i in 0..n {
                let s = x[i] - x_prev[i];
                let ybb = g[i] - g_prev[i];
                sy += s * ybb;
                ss += s * s;
            }
            if sy > 0.0 && ss > 0.0 {
                step = (ss / sy).clamp(1e-12, 1e3);
            }
        }
        x_prev.copy_from_slice(&x);
        g_prev.copy_from_slice(&g);

        let gnorm2 = dot(&g, &g);
        if gnorm2.sqrt() <= 1e-11 * gscale {
            break;
        }
        let fmax = recent.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut t = step;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = (0..n).map(|i| x[i] - t * g[i]).collect();
            let (ft, gt) = penalty_objective(a, b, cons, eps, &trial);
            if ft <= fmax - 1e-4 * t * gnorm2 {
                x = trial;
                fx = ft;
                g = gt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        recent.push_back(fx);
        if recent.len() > 15 {
            recent.pop_front();
        }
    }
    x
}

#[test]
fn penalty_oracle_agreement() {
    let (mesh, map, a, b, cons) = active_instance();
    let mut config = SolverConfig::for_beta(1.0);
    config.max_outer = 50_000;
    config.tol_feas = 1e-10;
    config.tol_comp = 1e-10;
    config.rho_grad = 100.0;
    let sol = uzawa_solve(&a, &b, &cons, &config).unwrap();
    assert!(sol.state.converged);

    let x0 = spd_solve(&a, &b, 1e-12, 10 * map.n_dofs).unwrap();
    let eps = 1e-6;
    let x = penalty_minimize(&a, &b, &cons, eps, &x0);

    let diff = DiscreteField::from_coeffs(
        sol.y.coeffs.iter().zip(&x).map(|(u, v)| u - v).collect(),
        &map,
    );
    let dist = broken_energy_norm(&mesh, &map, &diff, 1.0).unwrap();
    assert!(dist < 1e-4, "Uzawa vs penalty distance {dist}");
}
