//! Registry of built-in problem instances with exact solution fields.

use crate::CliError;
use morley_oc::problem::ProblemSpec;

pub const REGISTERED: &[&str] = &["schiela-disk"];

/// Constructs a registered problem. `beta` and `grad_bound` override the
/// instance defaults when given.
pub fn builtin_problem(
    name: &str,
    beta: Option<f64>,
    grad_bound: Option<f64>,
) -> Result<ProblemSpec, CliError> {
    match name {
        "schiela-disk" => Ok(schiela_disk(beta.unwrap_or(1.0), grad_bound.unwrap_or(1.0))),
        other => Err(CliError::UnknownProblem {
            name: other.to_string(),
            registered: REGISTERED.iter().map(|s| s.to_string()).collect(),
        }),
    }
}

/// Radially symmetric benchmark on the disk of radius 2.
///
/// The state formula is logarithmic outside the unit disk and quadratic
/// inside; the source jumps across |x| = 1 and the optimal control is -1
/// inside, 0 outside, with control bounds [-2, 2]. The state's gradient
/// magnitude peaks at 1/2 on |x| = 1, so the gradient constraint is active
/// only when the bound is tightened to 0.5.
pub fn schiela_disk(beta: f64, grad_bound: f64) -> ProblemSpec {
    let half_log2 = 0.5 * 2.0_f64.ln();
    let state = move |p: [f64; 2]| -> f64 {
        let r2 = p[0] * p[0] + p[1] * p[1];
        if r2 <= 1.0 {
            0.25 + half_log2 - 0.25 * r2
        } else {
            half_log2 - 0.25 * r2.ln()
        }
    };
    let state_grad = |p: [f64; 2]| -> [f64; 2] {
        let r2 = p[0] * p[0] + p[1] * p[1];
        if r2 <= 1.0 {
            [-0.5 * p[0], -0.5 * p[1]]
        } else {
            [-0.5 * p[0] / r2, -0.5 * p[1] / r2]
        }
    };
    let state_hess = |p: [f64; 2]| -> [f64; 3] {
        let r2 = p[0] * p[0] + p[1] * p[1];
        if r2 <= 1.0 {
            [-0.5, 0.0, -0.5]
        } else {
            // D^2 of -(1/4) ln(x^2 + y^2)
            let r4 = r2 * r2;
            [
                (2.0 * p[0] * p[0] - r2) / (2.0 * r4),
                p[0] * p[1] / r4,
                (2.0 * p[1] * p[1] - r2) / (2.0 * r4),
            ]
        }
    };
    let source =
        |p: [f64; 2]| -> f64 { if p[0] * p[0] + p[1] * p[1] <= 1.0 { 2.0 } else { 0.0 } };
    let control =
        |p: [f64; 2]| -> f64 { if p[0] * p[0] + p[1] * p[1] <= 1.0 { -1.0 } else { 0.0 } };

    let mut spec = ProblemSpec::new(
        "schiela-disk",
        beta,
        grad_bound,
        Box::new(state),
        Box::new(source),
        Box::new(|_| -2.0),
        Box::new(|_| 2.0),
    );
    spec.exact_state = Some(Box::new(state));
    spec.exact_state_grad = Some(Box::new(state_grad));
    spec.exact_state_hess = Some(Box::new(state_hess));
    spec.exact_control = Some(Box::new(control));
    spec
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_equation_holds_in_both_regions() {
        // -Δ y* = u* + f: inner 1 = -1 + 2, outer 0 = 0 + 0
        let spec = schiela_disk(1.0, 1.0);
        let hess = spec.exact_state_hess.as_ref().unwrap();
        let control = spec.exact_control.as_ref().unwrap();
        for p in [[0.3, 0.2], [-0.5, 0.4], [1.3, 0.2], [0.0, -1.7], [1.2, -1.1]] {
            let h = hess(p);
            let neg_lap = -(h[0] + h[2]);
            let want = control(p) + (spec.source)(p);
            assert!((neg_lap - want).abs() < 1e-12, "at {p:?}: {neg_lap} vs {want}");
        }
    }

    #[test]
    fn state_vanishes_on_outer_boundary() {
        let spec = schiela_disk(1.0, 1.0);
        let state = spec.exact_state.as_ref().unwrap();
        for theta in [0.0, 0.7, 2.1, 4.5] {
            let p = [2.0 * f64::cos(theta), 2.0 * f64::sin(theta)];
            assert!(state(p).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_magnitude_peaks_at_one_half() {
        let spec = schiela_disk(1.0, 1.0);
        let grad = spec.exact_state_grad.as_ref().unwrap();
        let mut max: f64 = 0.0;
        for i in 0..=400 {
            let r = 2.0 * i as f64 / 400.0;
            let g = grad([r * 0.6, r * 0.8]);
            max = max.max((g[0] * g[0] + g[1] * g[1]).sqrt());
        }
        assert!((max - 0.5).abs() < 1e-12, "max |grad| = {max}");
        // attained at |x| = 1
        let g_in = grad([0.6, 0.8]);
        assert!(((g_in[0].powi(2) + g_in[1].powi(2)).sqrt() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let spec = schiela_disk(1.0, 1.0);
        let state = spec.exact_state.as_ref().unwrap();
        let grad = spec.exact_state_grad.as_ref().unwrap();
        let hess = spec.exact_state_hess.as_ref().unwrap();
        let eps = 1e-6;
        for p in [[0.4, 0.1], [1.4, 0.3], [-0.9, 1.2]] {
            let g = grad(p);
            let fd = [
                (state([p[0] + eps, p[1]]) - state([p[0] - eps, p[1]])) / (2.0 * eps),
                (state([p[0], p[1] + eps]) - state([p[0], p[1] - eps])) / (2.0 * eps),
            ];
            assert!((g[0] - fd[0]).abs() < 1e-8 && (g[1] - fd[1]).abs() < 1e-8);
            let h = hess(p);
            let gxp = grad([p[0] + eps, p[1]]);
            let gxm = grad([p[0] - eps, p[1]]);
            let gyp = grad([p[0], p[1] + eps]);
            let gym = grad([p[0], p[1] - eps]);
            let hfd = [
                (gxp[0] - gxm[0]) / (2.0 * eps),
                (gyp[0] - gym[0]) / (2.0 * eps),
                (gyp[1] - gym[1]) / (2.0 * eps),
            ];
            for k in 0..3 {
                assert!((h[k] - hfd[k]).abs() < 1e-7, "at {p:?}, entry {k}");
            }
        }
    }

    #[test]
    fn unknown_problem_lists_registry() {
        let msg = match builtin_problem("nope", None, None) {
            Err(e) => e.to_string(),
            Ok(_) => panic!("expected an error for an unregistered problem"),
        };
        assert!(msg.contains("schiela-disk"), "{msg}");
    }
}
