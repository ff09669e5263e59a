//! Small dense linear algebra: vectors as `&[f64]`, row-major matrices,
//! ℓp norms and a power-iteration spectral norm estimate.

use crate::{Error, Result};

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "matrix shape {rows}x{cols} does not match {} entries",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter("ragged matrix rows".into()));
        }
        Matrix::new(m, n, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ y`.
    pub fn t_matvec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "t_matvec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, yi) in y.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += yi * a;
            }
        }
        out
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// Convex combination `λ a + (1-λ) b`.
pub fn convex_combination(a: &[f64], b: &[f64], lambda: f64) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(x, y)| lambda * x + (1.0 - lambda) * y)
        .collect()
}

/// ℓp norm for `p ∈ [1, ∞]` (`p = f64::INFINITY` selects the max norm).
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    debug_assert!(p >= 1.0);
    if p.is_infinite() {
        x.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    } else if p == 1.0 {
        x.iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    } else {
        x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

pub fn lp_dist(x: &[f64], y: &[f64], p: f64) -> f64 {
    lp_norm(&sub(x, y), p)
}

/// Exponent of the dual norm: `1/p + 1/q = 1` with the `1 ↔ ∞` convention.
pub fn dual_exponent(p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

/// Certified upper bound on the spectral norm `σ_max(A)`.
///
/// Runs power iteration on `AᵀA` until the Rayleigh quotient is stable to
/// `rel_tol`, then inflates the estimate by `100·rel_tol` so the returned
/// value sits above the true norm. Loose by construction: a slightly larger
/// operator norm only loosens downstream Lipschitz bounds.
pub fn spectral_norm_upper(a: &Matrix, rel_tol: f64) -> f64 {
    let n = a.cols();
    // Deterministic, non-degenerate start.
    let mut v: Vec<f64> = (0..n).map(|j| 1.0 + (j as f64) / (n as f64 + 1.0)).collect();
    let nv = lp_norm(&v, 2.0);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut lambda_prev = 0.0;
    for _ in 0..100_000 {
        let w = a.t_matvec(&a.matvec(&v));
        let lambda = dot(&w, &v);
        let nw = lp_norm(&w, 2.0);
        if nw == 0.0 {
            return 0.0;
        }
        v = scale(&w, 1.0 / nw);
        if (lambda - lambda_prev).abs() <= rel_tol * lambda.abs() {
            lambda_prev = lambda;
            break;
        }
        lambda_prev = lambda;
    }
    lambda_prev.max(0.0).sqrt() * (1.0 + 100.0 * rel_tol)
}
