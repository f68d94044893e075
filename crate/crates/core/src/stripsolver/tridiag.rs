//! Complex tridiagonal systems solved by single-sweep elimination.
//!
//! The depth discretization couples each node only to its two neighbours, so
//! every mode solve reduces to one tridiagonal system per transverse
//! frequency. Elimination without pivoting is exact for these systems as long
//! as no pivot collapses; a vanishing pivot is reported as a singular system
//! rather than silently producing infinities.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tridiagonal system `A w = b` with complex coefficients.
///
/// Row `i` reads `lower[i] w_{i-1} + diag[i] w_i + upper[i] w_{i+1} = rhs[i]`,
/// with `lower[0]` and `upper[n-1]` ignored.
#[derive(Debug, Clone)]
pub(crate) struct Tridiag {
    pub lower: Vec<Complex64>,
    pub diag: Vec<Complex64>,
    pub upper: Vec<Complex64>,
    pub rhs: Vec<Complex64>,
}

impl Tridiag {
    pub fn new(n: usize) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Tridiag {
            lower: vec![zero; n],
            diag: vec![zero; n],
            upper: vec![zero; n],
            rhs: vec![zero; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    /// Thomas elimination. Returns the solution vector, or a singularity
    /// error if a pivot underflows relative to the row scale.
    pub fn solve(&self) -> Result<Vec<Complex64>> {
        let n = self.len();
        if n == 0 {
            return Err(Error::invalid("system", "empty tridiagonal system"));
        }
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        let mut d = vec![Complex64::new(0.0, 0.0); n];

        let scale0 = self.diag[0].norm() + self.upper[0].norm();
        if self.diag[0].norm() <= 1e-300 * scale0.max(1e-300) {
            return Err(Error::Singular("zero pivot in first row".into()));
        }
        c[0] = self.upper[0] / self.diag[0];
        d[0] = self.rhs[0] / self.diag[0];
        for i in 1..n {
            let denom = self.diag[i] - self.lower[i] * c[i - 1];
            let scale =
                self.diag[i].norm() + self.lower[i].norm() * c[i - 1].norm() + self.upper[i].norm();
            if denom.norm() <= 1e-14 * scale.max(1e-300) {
                return Err(Error::Singular(format!(
                    "pivot collapse at row {i} of {n}: |pivot| = {:.3e}, row scale = {:.3e}",
                    denom.norm(),
                    scale
                )));
            }
            c[i] = self.upper[i] / denom;
            d[i] = (self.rhs[i] - self.lower[i] * d[i - 1]) / denom;
        }
        let mut w = d;
        for i in (0..n - 1).rev() {
            let next = w[i + 1];
            w[i] -= c[i] * next;
        }
        Ok(w)
    }

    /// Relative residual `max_i |(A w - b)_i| / (||A||_inf ||w||_inf + ||b||_inf)`.
    pub fn residual(&self, w: &[Complex64]) -> f64 {
        let n = self.len();
        let mut num: f64 = 0.0;
        let mut row_norm: f64 = 0.0;
        let mut b_norm: f64 = 0.0;
        let w_norm = w.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        for i in 0..n {
            let mut ax = self.diag[i] * w[i];
            let mut row = self.diag[i].norm();
            if i > 0 {
                ax += self.lower[i] * w[i - 1];
                row += self.lower[i].norm();
            }
            if i + 1 < n {
                ax += self.upper[i] * w[i + 1];
                row += self.upper[i].norm();
            }
            num = num.max((ax - self.rhs[i]).norm());
            row_norm = row_norm.max(row);
            b_norm = b_norm.max(self.rhs[i].norm());
        }
        let denom = row_norm * w_norm + b_norm;
        if denom == 0.0 {
            if num == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            num / denom
        }
    }
}
