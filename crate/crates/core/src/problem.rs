//! Problem data: regularization weight, desired state, source, control
//! bounds, gradient bound, and (optionally) exact solution fields for error
//! measurement.

pub type ScalarField = Box<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
pub type VectorField = Box<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;
/// Symmetric 2x2 field returned as [xx, xy, yy].
pub type HessianField = Box<dyn Fn([f64; 2]) -> [f64; 3] + Send + Sync>;

/// Data of one control problem instance.
///
/// The control is eliminated through the state equation (-Δy = u + f), so the
/// bounds enter the reduced problem as u_a + f <= -Δy <= u_b + f and the
/// recovered control is u = -Δ_h y_h - f.
pub struct ProblemSpec {
    pub name: String,
    /// Regularization weight on the control; weights the Hessian term of the
    /// bilinear form.
    pub beta: f64,
    /// Euclidean bound on the elementwise mean state gradient.
    pub grad_bound: f64,
    pub desired_state: ScalarField,
    /// Source term of the state equation (zero for the plain problem).
    pub source: ScalarField,
    pub control_lower: ScalarField,
    pub control_upper: ScalarField,
    pub exact_state: Option<ScalarField>,
    pub exact_state_grad: Option<VectorField>,
    pub exact_state_hess: Option<HessianField>,
    pub exact_control: Option<ScalarField>,
}

impl ProblemSpec {
    /// Plain instance without exact fields; bounds and data are constants or
    /// closures supplied by the caller.
    pub fn new(
        name: impl Into<String>,
        beta: f64,
        grad_bound: f64,
        desired_state: ScalarField,
        source: ScalarField,
        control_lower: ScalarField,
        control_upper: ScalarField,
    ) -> Self {
        assert!(beta > 0.0, "beta must be positive");
        assert!(grad_bound > 0.0, "gradient bound must be positive");
        ProblemSpec {
            name: name.into(),
            beta,
            grad_bound,
            desired_state,
            source,
            control_lower,
            control_upper,
            exact_state: None,
            exact_state_grad: None,
            exact_state_hess: None,
            exact_control: None,
        }
    }
}
