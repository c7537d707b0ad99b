//! Small dense helpers for the `R x R` systems that show up in every
//! row-wise least-squares step.

use nalgebra::{DMatrix, DVector};

/// Diagonal jitter used when a Gram matrix is not numerically positive definite.
pub const JITTER: f64 = 1e-10;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Symmetric positive-definite `R x R` system, stored row-major.
pub struct SpdSystem {
    pub dim: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl SpdSystem {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            a: vec![0.0; dim * dim],
            b: vec![0.0; dim],
        }
    }

    pub fn reset(&mut self) {
        self.a.fill(0.0);
        self.b.fill(0.0);
    }

    /// `A += w * v v^T`, `b += r * v`.
    #[inline]
    pub fn accumulate(&mut self, v: &[f64], w: f64, r: f64) {
        let d = self.dim;
        for j in 0..d {
            let wv = w * v[j];
            for k in 0..d {
                self.a[j * d + k] += wv * v[k];
            }
            self.b[j] += r * v[j];
        }
    }

    pub fn add_diagonal(&mut self, value: f64) {
        for j in 0..self.dim {
            self.a[j * self.dim + j] += value;
        }
    }

    pub fn cholesky(&self) -> nalgebra::Cholesky<f64, nalgebra::Dyn> {
        let d = self.dim;
        let m = DMatrix::from_row_slice(d, d, &self.a);
        match m.clone().cholesky() {
            Some(c) => c,
            None => {
                let mut jittered = m;
                for j in 0..d {
                    jittered[(j, j)] += JITTER;
                }
                jittered
                    .clone()
                    .cholesky()
                    .unwrap_or_else(|| fallback_cholesky(jittered))
            }
        }
    }

    /// Solves `A x = b`, jittering the diagonal if `A` is degenerate.
    pub fn solve(&self) -> Vec<f64> {
        let chol = self.cholesky();
        chol.solve(&DVector::from_column_slice(&self.b))
            .iter()
            .copied()
            .collect()
    }
}

// Indefinite only through accumulated rounding on a near-zero matrix; grow the
// jitter until the factorization succeeds.
fn fallback_cholesky(mut m: DMatrix<f64>) -> nalgebra::Cholesky<f64, nalgebra::Dyn> {
    let d = m.nrows();
    let scale = (0..d).map(|j| m[(j, j)].abs()).fold(1.0, f64::max);
    let mut jitter = JITTER * scale;
    loop {
        for j in 0..d {
            m[(j, j)] += jitter;
        }
        if let Some(c) = m.clone().cholesky() {
            return c;
        }
        jitter *= 10.0;
    }
}

pub fn solve_with(chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>, rhs: &[f64]) -> Vec<f64> {
    chol.solve(&DVector::from_column_slice(rhs))
        .iter()
        .copied()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let mut s = SpdSystem::new(2);
        s.a = vec![4.0, 1.0, 1.0, 3.0];
        s.b = vec![1.0, 2.0];
        let x = s.solve();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-12);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_is_jittered() {
        let s = SpdSystem::new(3);
        assert_eq!(s.solve(), vec![0.0; 3]);
    }
}
