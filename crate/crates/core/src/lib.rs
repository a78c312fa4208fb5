//! Finite element solver for elliptic optimal control problems with pointwise
//! bounds on the control and on the gradient of the state.
//!
//! The control is eliminated through the state equation, which turns the
//! problem into the minimization of a fourth-order quadratic functional over a
//! convex set of states. The state is discretized with the bubble-enriched
//! Morley element (P2 plus three quartic bubbles, 9 degrees of freedom per
//! triangle: vertex values, edge means of the value, edge means of the normal
//! derivative). The discrete variational inequality is solved with a Uzawa
//! multiplier iteration: per-triangle multipliers for the control box bounds
//! and for the Euclidean bound on the mean gradient, with a preconditioned
//! conjugate gradient inner solve.
//!
//! Modules follow the pipeline: [`mesh`] → [`quadrature`] / [`element`] →
//! [`assembly`] → [`linalg`] / [`solver`] → [`analysis`].

pub mod analysis;
pub mod assembly;
pub mod element;
pub mod linalg;
pub mod mesh;
mod poly;
pub mod problem;
pub mod quadrature;
pub mod solver;
