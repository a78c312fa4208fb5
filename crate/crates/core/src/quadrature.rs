//! Quadrature rules on triangles and segments, exact to a requested
//! polynomial degree.
//!
//! Triangle rules are stored in barycentric coordinates with weights
//! normalized to sum to one, so integrating over a physical triangle is
//! `area * sum(w_i * f(p_i))`. Degrees 1 and 2 use the classic symmetric
//! centroid and three-point rules; higher degrees use conical product rules
//! (Gauss-Legendre on the collapsed square), which have strictly interior
//! points and positive weights for every degree.

use std::fmt;

pub const MIN_DEGREE: usize = 1;
pub const MAX_DEGREE: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub enum QuadratureError {
    UnsupportedDegree { degree: usize },
}

impl fmt::Display for QuadratureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadratureError::UnsupportedDegree { degree } => write!(
                f,
                "unsupported quadrature degree {degree}: supported range is {MIN_DEGREE}..={MAX_DEGREE}"
            ),
        }
    }
}

impl std::error::Error for QuadratureError {}

/// Quadrature rule on the (barycentric) reference triangle.
///
/// Weights sum to 1; points are barycentric triples in [0,1].
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

/// Gauss rule on a segment, parametrized over [0,1]; weights sum to 1.
#[derive(Debug, Clone)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss-Legendre nodes and weights on [0,1], exact for degree <= 2n-1.
///
/// Nodes by Newton iteration on P_n with the three-term recurrence.
fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev initial guess on [-1,1]
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // evaluate P_n(x) and P_n'(x)
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = (n as f64) * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Symmetric rule exact for polynomials of total degree <= `degree` on a
/// triangle, in barycentric coordinates with unit weight sum.
pub fn triangle_rule(degree: usize) -> Result<TriangleRule, QuadratureError> {
    if !(MIN_DEGREE..=MAX_DEGREE).contains(&degree) {
        return Err(QuadratureError::UnsupportedDegree { degree });
    }
    match degree {
        1 => Ok(TriangleRule {
            points: vec![[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]],
            weights: vec![1.0],
        }),
        2 => {
            let a = 2.0 / 3.0;
            let b = 1.0 / 6.0;
            Ok(TriangleRule {
                points: vec![[a, b, b], [b, a, b], [b, b, a]],
                weights: vec![1.0 / 3.0; 3],
            })
        }
        d => {
            // Collapsed square: lam2 = u, lam3 = v(1-u), jacobian (1-u).
            // The u-integrand picks up one extra degree from the jacobian.
            let nu = (d + 2).div_ceil(2);
            let nv = (d + 1).div_ceil(2);
            let (un, uw) = gauss_legendre_unit(nu);
            let (vn, vw) = gauss_legendre_unit(nv);
            let mut points = Vec::with_capacity(nu * nv);
            let mut weights = Vec::with_capacity(nu * nv);
            for (&u, &wu) in un.iter().zip(&uw) {
                for (&v, &wv) in vn.iter().zip(&vw) {
                    let l2 = u;
                    let l3 = v * (1.0 - u);
                    points.push([1.0 - l2 - l3, l2, l3]);
                    // factor 2 normalizes the reference area 1/2 to 1
                    weights.push(2.0 * wu * wv * (1.0 - u));
                }
            }
            Ok(TriangleRule { points, weights })
        }
    }
}

/// Gauss rule on [0,1] exact for polynomials of degree <= `degree`.
pub fn edge_rule(degree: usize) -> Result<EdgeRule, QuadratureError> {
    if !(MIN_DEGREE..=MAX_DEGREE).contains(&degree) {
        return Err(QuadratureError::UnsupportedDegree { degree });
    }
    let n = (degree + 1).div_ceil(2);
    let (points, weights) = gauss_legendre_unit(n);
    Ok(EdgeRule { points, weights })
}

impl TriangleRule {
    /// Integrate `f` over the physical triangle with vertices `tri`.
    pub fn integrate(&self, tri: &[[f64; 2]; 3], f: impl Fn([f64; 2]) -> f64) -> f64 {
        let area = triangle_area(tri);
        let mut sum = 0.0;
        for (p, w) in self.points.iter().zip(&self.weights) {
            let x = p[0] * tri[0][0] + p[1] * tri[1][0] + p[2] * tri[2][0];
            let y = p[0] * tri[0][1] + p[1] * tri[1][1] + p[2] * tri[2][1];
            sum += w * f([x, y]);
        }
        area * sum
    }

    /// Physical quadrature points and point weights (already scaled by area).
    pub fn mapped(&self, tri: &[[f64; 2]; 3]) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        let area = triangle_area(tri);
        let tri = *tri;
        self.points.iter().zip(self.weights.iter()).map(move |(p, w)| {
            let x = p[0] * tri[0][0] + p[1] * tri[1][0] + p[2] * tri[2][0];
            let y = p[0] * tri[0][1] + p[1] * tri[1][1] + p[2] * tri[2][1];
            ([x, y], w * area)
        })
    }
}

impl EdgeRule {
    /// Integrate `f` along the segment from `a` to `b`.
    pub fn integrate(&self, a: [f64; 2], b: [f64; 2], f: impl Fn([f64; 2]) -> f64) -> f64 {
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let mut sum = 0.0;
        for (&t, &w) in self.points.iter().zip(&self.weights) {
            sum += w * f([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
        len * sum
    }

    /// Mean of `f` along the segment (length-independent).
    pub fn mean(&self, a: [f64; 2], b: [f64; 2], f: impl Fn([f64; 2]) -> f64) -> f64 {
        let mut sum = 0.0;
        for (&t, &w) in self.points.iter().zip(&self.weights) {
            sum += w * f([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
        sum
    }
}

pub fn triangle_area(tri: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1])
        - (tri[2][0] - tri[0][0]) * (tri[1][1] - tri[0][1]))
}

/// Integrate a scalar field over a triangle with a rule of the given degree.
pub fn integrate_on_triangle(
    f: impl Fn([f64; 2]) -> f64,
    tri: &[[f64; 2]; 3],
    degree: usize,
) -> Result<f64, QuadratureError> {
    Ok(triangle_rule(degree)?.integrate(tri, f))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact integral of x^a y^b over the reference triangle {x,y>=0, x+y<=1}:
    /// a! b! / (a+b+2)!.
    fn simplex_monomial(a: u32, b: u32) -> f64 {
        let fact = |n: u32| (1..=n).map(|k| k as f64).product::<f64>().max(1.0);
        fact(a) * fact(b) / fact(a + b + 2)
    }

    const REF: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    #[test]
    fn weights_sum_to_one_and_points_inside() {
        for d in MIN_DEGREE..=MAX_DEGREE {
            let rule = triangle_rule(d).unwrap();
            let s: f64 = rule.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-14, "degree {d}: weight sum {s}");
            assert!(rule.weights.iter().all(|&w| w > 0.0), "degree {d}: negative weight");
            for p in &rule.points {
                assert!(p.iter().all(|&l| (0.0..=1.0).contains(&l)), "degree {d}: point {p:?}");
            }
            let er = edge_rule(d).unwrap();
            let s: f64 = er.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn monomial_exactness_all_degrees() {
        for d in MIN_DEGREE..=MAX_DEGREE {
            let rule = triangle_rule(d).unwrap();
            for a in 0..=d as u32 {
                for b in 0..=(d as u32 - a) {
                    let exact = simplex_monomial(a, b);
                    let got = rule.integrate(&REF, |p| p[0].powi(a as i32) * p[1].powi(b as i32));
                    assert!(
                        (got - exact).abs() <= 1e-13 * exact.abs().max(1.0),
                        "degree {d}, x^{a} y^{b}: got {got}, exact {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn degree_one_is_centroid_rule() {
        let rule = triangle_rule(1).unwrap();
        assert_eq!(rule.points.len(), 1);
        assert_eq!(rule.points[0], [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(rule.weights[0], 1.0);
        // f == c integrates to c * area
        let tri = [[1.0, 1.0], [4.0, 2.0], [2.0, 5.0]];
        let area = triangle_area(&tri);
        let got = rule.integrate(&tri, |_| 3.25);
        assert!((got - 3.25 * area).abs() < 1e-14);
    }

    #[test]
    fn integrate_one_over_reference_is_half() {
        for d in [1, 4, 10] {
            let got = integrate_on_triangle(|_| 1.0, &REF, d).unwrap();
            assert!((got - 0.5).abs() < 1e-14, "degree {d}: {got}");
        }
    }

    #[test]
    fn barycentric_coordinate_integrates_to_third_of_area() {
        let tri = [[0.0, 0.0], [2.0, 0.0], [0.0, 3.0]];
        let area = triangle_area(&tri);
        // lambda_1 is the barycentric coordinate of vertex 0: affine, 1 at v0.
        let l1 = |p: [f64; 2]| 1.0 - p[0] / 2.0 - p[1] / 3.0;
        let got = integrate_on_triangle(l1, &tri, 2).unwrap();
        assert!((got - area / 3.0).abs() < 1e-13);
    }

    #[test]
    fn quartic_monomial_against_factorial_formula() {
        let rule = triangle_rule(10).unwrap();
        let got = rule.integrate(&REF, |p| p[0].powi(4) * p[1].powi(4));
        let exact = simplex_monomial(4, 4);
        assert!((got - exact).abs() < 1e-16 + 1e-13 * exact);
    }

    #[test]
    fn affine_invariance() {
        // integrating f∘F over the reference equals integrating f over the
        // physical triangle divided by |det DF|
        let tri = [[1.0, -2.0], [3.5, 0.5], [0.5, 2.0]];
        let fmap = |p: [f64; 2]| {
            [
                tri[0][0] + (tri[1][0] - tri[0][0]) * p[0] + (tri[2][0] - tri[0][0]) * p[1],
                tri[0][1] + (tri[1][1] - tri[0][1]) * p[0] + (tri[2][1] - tri[0][1]) * p[1],
            ]
        };
        let det = 2.0 * triangle_area(&tri);
        let f = |p: [f64; 2]| (p[0] + 0.3 * p[1]).powi(3) - p[1] * p[0];
        let lhs = integrate_on_triangle(|p| f(fmap(p)), &REF, 8).unwrap();
        let rhs = integrate_on_triangle(f, &tri, 8).unwrap() / det;
        assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn exp_self_convergence() {
        let tri = [[0.1, 0.2], [1.3, 0.4], [0.5, 1.7]];
        let f = |p: [f64; 2]| (p[0] + p[1]).exp();
        let a = integrate_on_triangle(f, &tri, 10).unwrap();
        let b = integrate_on_triangle(f, &tri, 12).unwrap();
        assert!((a - b).abs() < 1e-10, "degree 10 vs 12: {a} vs {b}");
    }

    #[test]
    fn edge_rule_exactness() {
        // degree 1, integrand 1 on the unit segment
        let r = edge_rule(1).unwrap();
        let got = r.integrate([0.0, 0.0], [1.0, 0.0], |_| 1.0);
        assert!((got - 1.0).abs() < 1e-15);
        // degree 5, x^5 on [0,1]
        let r = edge_rule(5).unwrap();
        let got = r.integrate([0.0, 0.0], [1.0, 0.0], |p| p[0].powi(5));
        assert!((got - 1.0 / 6.0).abs() < 1e-15);
        // sin(x) on [0,1] with degree 11
        let r = edge_rule(11).unwrap();
        let got = r.integrate([0.0, 0.0], [1.0, 0.0], |p| p[0].sin());
        assert!((got - (1.0 - 1.0_f64.cos())).abs() < 1e-12);
    }

    #[test]
    fn unsupported_degree_lists_range() {
        let err = triangle_rule(0).unwrap_err();
        assert!(err.to_string().contains("1..=12"));
        assert!(triangle_rule(13).is_err());
        assert!(edge_rule(0).is_err());
        assert!(edge_rule(13).is_err());
    }
}
