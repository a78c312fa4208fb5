//! CSR sparse matrices and a Jacobi-preconditioned conjugate gradient solver
//! for the SPD systems arising in the Uzawa inner iteration.

use std::fmt;

#[derive(Debug)]
pub enum LinalgError {
    IndexOutOfRange { row: usize, col: usize, n: usize },
    BadDiagonal { index: usize, value: f64 },
    NoConvergence { iterations: usize, residual: f64 },
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::IndexOutOfRange { row, col, n } => {
                write!(f, "triplet ({row}, {col}) out of range for dimension {n}")
            }
            LinalgError::BadDiagonal { index, value } => {
                write!(f, "preconditioner diagonal entry {index} is {value}")
            }
            LinalgError::NoConvergence { iterations, residual } => write!(
                f,
                "conjugate gradient did not converge in {iterations} iterations (relative residual {residual:.3e})"
            ),
        }
    }
}

impl std::error::Error for LinalgError {}

/// Square sparse matrix in CSR form with sorted, unique column indices.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds CSR from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(
        n: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<SparseMatrix, LinalgError> {
        for &(r, c, _) in triplets {
            if r >= n || c >= n {
                return Err(LinalgError::IndexOutOfRange { row: r, col: c, n });
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(sorted.len());
        for (r, c, v) in sorted {
            match entries.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => entries.push((r, c, v)),
            }
        }

        let mut row_ptr = vec![0usize; n + 1];
        for &(r, _, _) in &entries {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx = entries.iter().map(|&(_, c, _)| c).collect();
        let values = entries.iter().map(|&(_, _, v)| v).collect();
        Ok(SparseMatrix { n, row_ptr, col_idx, values })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut sum = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                sum += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = sum;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[k] == i {
                    d[i] = self.values[k];
                }
            }
        }
        d
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        for k in self.row_ptr[row]..self.row_ptr[row + 1] {
            if self.col_idx[k] == col {
                return self.values[k];
            }
        }
        0.0
    }

    pub fn rows(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }
}

/// Abstract SPD operator: the system matrix possibly augmented by low-rank
/// multiplier terms that change every outer iteration.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply_into(x, &mut y);
        y
    }
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y);
    }
}

#[derive(Debug, Clone)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Preconditioned conjugate gradient with the given diagonal preconditioner.
///
/// Stops when ||Ax - b|| <= tol * ||b|| (or ||Ax - b|| <= tol when b = 0).
pub fn pcg(
    op: &impl LinearOperator,
    diag: &[f64],
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<CgSolution, LinalgError> {
    let n = op.dim();
    if n == 0 {
        return Ok(CgSolution { x: Vec::new(), iterations: 0, residual: 0.0 });
    }
    for (i, &d) in diag.iter().enumerate() {
        if !(d > 0.0) || !d.is_finite() {
            return Err(LinalgError::BadDiagonal { index: i, value: d });
        }
    }
    let bnorm = norm(b);
    let target = if bnorm > 0.0 { tol * bnorm } else { tol };

    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    let mut r = vec![0.0; n];
    op.apply_into(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut rnorm = norm(&r);
    if rnorm <= target {
        return Ok(CgSolution { x, iterations: 0, residual: rnorm / bnorm.max(1e-300) });
    }

    let mut z: Vec<f64> = r.iter().zip(diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for it in 1..=max_iter {
        op.apply_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            // loss of positive definiteness signals a broken operator
            return Err(LinalgError::NoConvergence { iterations: it, residual: rnorm / bnorm.max(1e-300) });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rnorm = norm(&r);
        if rnorm <= target {
            return Ok(CgSolution { x, iterations: it, residual: rnorm / bnorm.max(1e-300) });
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(LinalgError::NoConvergence { iterations: max_iter, residual: rnorm / bnorm.max(1e-300) })
}

/// Solves A x = b for SPD A with Jacobi-preconditioned CG.
pub fn spd_solve(
    a: &SparseMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>, LinalgError> {
    let diag = a.diagonal();
    Ok(pcg(a, &diag, b, None, tol, max_iter)?.x)
}
