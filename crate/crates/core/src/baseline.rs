//! Independent textbook proximal-gradient (ISTA) baseline for the ℓ2–ℓ1
//! problem: plain gradient step `x - s·Aᵀ(Ax - c)` followed by
//! soft-thresholding at `s·λ`. Used to cross-check the solver's `p = 2`
//! reduction; deliberately shares no code with the telescoping prox path.

use crate::linalg::Matrix;

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// All iterates `x_1 = x0, x_2, …, x_iters` of ISTA with fixed step `s`.
pub fn ista_iterates(
    a: &Matrix,
    c: &[f64],
    lambda: f64,
    step: f64,
    x0: &[f64],
    iters: usize,
) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(iters);
    let mut x = x0.to_vec();
    out.push(x.clone());
    for _ in 1..iters {
        let r: Vec<f64> = a
            .matvec(&x)
            .iter()
            .zip(c)
            .map(|(axi, ci)| axi - ci)
            .collect();
        let g = a.t_matvec(&r);
        for (xj, gj) in x.iter_mut().zip(&g) {
            *xj = soft_threshold(*xj - step * gj, step * lambda);
        }
        out.push(x.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_shrinks_toward_zero() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
    }

    #[test]
    fn single_coordinate_fixed_point() {
        // min 0.5 (x - 5)^2 + 2|x| has the minimizer 3.
        let a = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let xs = ista_iterates(&a, &[5.0], 2.0, 1.0, &[0.0], 50);
        assert!((xs.last().unwrap()[0] - 3.0).abs() < 1e-12);
    }
}
