//! Bivariate polynomials of total degree <= 4 over a fixed monomial basis,
//! used by the element module for nodal basis construction and evaluation.
//!
//! Monomial order: (0,0) | (1,0) (0,1) | (2,0) (1,1) (0,2) | (3,0) (2,1)
//! (1,2) (0,3) | (4,0) (3,1) (2,2) (1,3) (0,4).

pub const N_MONOMIALS: usize = 15;

pub const POWERS: [(u32, u32); N_MONOMIALS] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
    (4, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 4),
];

pub type Poly = [f64; N_MONOMIALS];

pub const ZERO: Poly = [0.0; N_MONOMIALS];

fn index_of(a: u32, b: u32) -> usize {
    let d = a + b;
    debug_assert!(d <= 4);
    (d * (d + 1) / 2 + b) as usize
}

/// Affine polynomial c0 + cx*x + cy*y.
pub fn affine(c0: f64, cx: f64, cy: f64) -> Poly {
    let mut p = ZERO;
    p[0] = c0;
    p[1] = cx;
    p[2] = cy;
    p
}

pub fn mul(p: &Poly, q: &Poly) -> Poly {
    let mut out = ZERO;
    for (i, &pi) in p.iter().enumerate() {
        if pi == 0.0 {
            continue;
        }
        let (pa, pb) = POWERS[i];
        for (j, &qj) in q.iter().enumerate() {
            if qj == 0.0 {
                continue;
            }
            let (qa, qb) = POWERS[j];
            out[index_of(pa + qa, pb + qb)] += pi * qj;
        }
    }
    out
}

pub fn eval(p: &Poly, x: f64, y: f64) -> f64 {
    // Horner-free direct evaluation over 15 terms; the power table is tiny.
    let x2 = x * x;
    let y2 = y * y;
    p[0] + p[1] * x
        + p[2] * y
        + p[3] * x2
        + p[4] * x * y
        + p[5] * y2
        + p[6] * x2 * x
        + p[7] * x2 * y
        + p[8] * x * y2
        + p[9] * y2 * y
        + p[10] * x2 * x2
        + p[11] * x2 * x * y
        + p[12] * x2 * y2
        + p[13] * x * y2 * y
        + p[14] * y2 * y2
}

pub fn dx(p: &Poly) -> Poly {
    let mut out = ZERO;
    for (i, &pi) in p.iter().enumerate() {
        let (a, b) = POWERS[i];
        if a > 0 && pi != 0.0 {
            out[index_of(a - 1, b)] += a as f64 * pi;
        }
    }
    out
}

pub fn dy(p: &Poly) -> Poly {
    let mut out = ZERO;
    for (i, &pi) in p.iter().enumerate() {
        let (a, b) = POWERS[i];
        if b > 0 && pi != 0.0 {
            out[index_of(a, b - 1)] += b as f64 * pi;
        }
    }
    out
}

pub fn axpy(out: &mut Poly, alpha: f64, p: &Poly) {
    for (o, &pi) in out.iter_mut().zip(p.iter()) {
        *o += alpha * pi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_and_derivatives() {
        // (1 + x)(x + y^2) = x + y^2 + x^2 + x y^2
        let p = affine(1.0, 1.0, 0.0);
        let mut q = ZERO;
        q[1] = 1.0;
        q[5] = 1.0;
        let r = mul(&p, &q);
        for (x, y) in [(0.3, -0.7), (1.2, 0.4)] {
            let want = (1.0 + x) * (x + y * y);
            assert!((eval(&r, x, y) - want).abs() < 1e-14);
        }
        let rx = dx(&r);
        let want = |x: f64, y: f64| 1.0 + 2.0 * x + y * y;
        assert!((eval(&rx, 0.3, -0.7) - want(0.3, -0.7)).abs() < 1e-14);
        let ry = dy(&r);
        assert!((eval(&ry, 0.3, -0.7) - (2.0 * -0.7 * 1.3)).abs() < 1e-14);
    }

    #[test]
    fn quartic_product_of_affines() {
        let l1 = affine(0.1, 1.0, 2.0);
        let l2 = affine(-0.2, 0.5, 1.0);
        let l3 = affine(0.3, -1.0, 0.7);
        let l4 = affine(1.0, 0.2, -0.4);
        let p = mul(&mul(&l1, &l2), &mul(&l3, &l4));
        let (x, y) = (0.25, -0.5);
        let want = (0.1 + x + 2.0 * y)
            * (-0.2 + 0.5 * x + y)
            * (0.3 - x + 0.7 * y)
            * (1.0 + 0.2 * x - 0.4 * y);
        assert!((eval(&p, x, y) - want).abs() < 1e-13);
    }
}
