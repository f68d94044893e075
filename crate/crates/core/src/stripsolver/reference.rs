//! Piecewise-exact oracle for the per-mode depth problems.
//!
//! On every interval between adjacent breakpoints (layer boundaries, source
//! knots) the coefficients are constant and the right-hand side is linear, so
//! the exact solution is
//!
//! ```text
//! w(x) = A e^{-beta (x - a)} + B e^{-beta (b - x)} - q(x) / beta^2,
//! ```
//!
//! with one `(A, B)` pair per interval (both exponentials are written in
//! their decaying-from-an-endpoint form so nothing overflows for thick
//! pieces).  Closure, continuity, and conormal-flux rows couple the pairs
//! into a small dense complex system, solved by Gaussian elimination with
//! partial pivoting.  Up to roundoff this is the exact solution of the
//! continuous problem, independent of the finite-difference grid.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::symbols::beta;

use super::{Closure, ModeProblem};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// One constant-coefficient interval with a linear right-hand side.
struct Piece {
    a: f64,
    b: f64,
    alpha: f64,
    beta: Complex64,
    /// Right-hand side at the ends; linear in between.
    qa: Complex64,
    qb: Complex64,
}

impl Piece {
    fn len(&self) -> f64 {
        self.b - self.a
    }

    /// `e^{-beta (b - a)}`.
    fn damp(&self) -> Complex64 {
        (-self.beta * self.len()).exp()
    }

    fn q_at(&self, x: f64) -> Complex64 {
        let t = (x - self.a) / self.len();
        self.qa * (1.0 - t) + self.qb * t
    }

    /// Particular solution `P(x) = -q(x) / beta^2`.
    fn part(&self, x: f64) -> Complex64 {
        -self.q_at(x) / (self.beta * self.beta)
    }

    /// `P'(x) = -q'(x) / beta^2` (constant on the piece).
    fn part_deriv(&self) -> Complex64 {
        -((self.qb - self.qa) / self.len()) / (self.beta * self.beta)
    }

    /// Homogeneous part at `x` given the coefficient pair.
    fn homogeneous(&self, aa: Complex64, bb: Complex64, x: f64) -> Complex64 {
        aa * (-self.beta * (x - self.a)).exp() + bb * (-self.beta * (self.b - x)).exp()
    }

    fn value(&self, aa: Complex64, bb: Complex64, x: f64) -> Complex64 {
        self.homogeneous(aa, bb, x) + self.part(x)
    }

    /// Derivative of the full solution at `x`.  Used by the flux-continuity
    /// oracle; the closed-form value path never needs it.
    #[cfg(test)]
    fn deriv(&self, aa: Complex64, bb: Complex64, x: f64) -> Complex64 {
        -self.beta * aa * (-self.beta * (x - self.a)).exp()
            + self.beta * bb * (-self.beta * (self.b - x)).exp()
            + self.part_deriv()
    }
}

/// Breakpoints of the piecewise description: grid segment breaks merged with
/// the source knots (the grid construction already aligns interior knots
/// with breaks, but the oracle does not rely on that).
fn piece_bounds(problem: &ModeProblem) -> Vec<f64> {
    let mut bounds = problem.grid.breaks.clone();
    for &k in &problem.source.knots {
        if k > bounds[0] && k < *bounds.last().unwrap()
            && bounds.iter().all(|&b| (b - k).abs() > 1e-12)
        {
            bounds.push(k);
        }
    }
    bounds.sort_by(|x, y| x.partial_cmp(y).unwrap());
    bounds
}

fn build_pieces(problem: &ModeProblem) -> Vec<Piece> {
    let bounds = piece_bounds(problem);
    bounds
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            let layer = problem.layer_at(0.5 * (a + b));
            Piece {
                a,
                b,
                alpha: problem.alpha(layer),
                beta: beta(&problem.params, layer, problem.s, problem.xi),
                qa: problem.rhs_at(a, layer),
                qb: problem.rhs_at(b, layer),
            }
        })
        .collect()
}

/// Dense complex linear solve by Gaussian elimination with partial pivoting.
fn dense_solve(mut a: Vec<Vec<Complex64>>, mut rhs: Vec<Complex64>) -> Result<Vec<Complex64>> {
    let n = rhs.len();
    let amax = a
        .iter()
        .flat_map(|row| row.iter())
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    for col in 0..n {
        let (pivot_row, pivot_norm) = (col..n)
            .map(|r| (r, a[r][col].norm()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if pivot_norm <= 1e-14 * amax.max(1e-300) {
            return Err(Error::Singular(format!("zero pivot at column {col}")));
        }
        a.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f == ZERO {
                continue;
            }
            for c in col..n {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
            let v = rhs[col];
            rhs[r] -= f * v;
        }
    }
    let mut x = vec![ZERO; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for c in row + 1..n {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

/// Solve for the per-piece coefficient pairs `(A_j, B_j)`.
fn solve_coefficients(problem: &ModeProblem) -> Result<(Vec<Piece>, Vec<Complex64>)> {
    problem.validate()?;
    let pieces = build_pieces(problem);
    let np = pieces.len();
    let n = 2 * np;
    let mut mat = vec![vec![ZERO; n]; n];
    let mut rhs = vec![ZERO; n];
    let (g_bot, g_top) = problem.boundary_data.unwrap_or((ZERO, ZERO));

    // Bottom closure on piece 0 at x = a.
    {
        let p = &pieces[0];
        let e = p.damp();
        match problem.closure(crate::model::Layer::Lower)? {
            // D w - kappa w = g at the bottom plane.
            Closure::Robin(kappa) => {
                mat[0][0] = -p.beta - kappa;
                mat[0][1] = (p.beta - kappa) * e;
                rhs[0] = g_bot - p.part_deriv() + kappa * p.part(p.a);
            }
            Closure::Dirichlet => {
                mat[0][0] = Complex64::new(1.0, 0.0);
                mat[0][1] = e;
                rhs[0] = g_bot - p.part(p.a);
            }
            Closure::Neumann => {
                mat[0][0] = -p.beta;
                mat[0][1] = p.beta * e;
                rhs[0] = g_bot - p.part_deriv();
            }
        }
    }

    // Junction rows between consecutive pieces.
    for j in 0..np - 1 {
        let (lo, hi) = (&pieces[j], &pieces[j + 1]);
        let (el, eh) = (lo.damp(), hi.damp());
        let row_val = 1 + 2 * j;
        let row_flx = 2 + 2 * j;
        // Value continuity: w_j(b) = w_{j+1}(a).
        mat[row_val][2 * j] = el;
        mat[row_val][2 * j + 1] = Complex64::new(1.0, 0.0);
        mat[row_val][2 * j + 2] = Complex64::new(-1.0, 0.0);
        mat[row_val][2 * j + 3] = -eh;
        rhs[row_val] = hi.part(hi.a) - lo.part(lo.b);
        // Conormal flux continuity: alpha_j^{-1} w_j'(b) = alpha_{j+1}^{-1} w_{j+1}'(a).
        mat[row_flx][2 * j] = -lo.beta * el / lo.alpha;
        mat[row_flx][2 * j + 1] = lo.beta / lo.alpha;
        mat[row_flx][2 * j + 2] = hi.beta / hi.alpha;
        mat[row_flx][2 * j + 3] = -hi.beta * eh / hi.alpha;
        rhs[row_flx] = hi.part_deriv() / hi.alpha - lo.part_deriv() / lo.alpha;
    }

    // Top closure on the last piece at x = b.
    {
        let p = &pieces[np - 1];
        let e = p.damp();
        let row = n - 1;
        match problem.closure(crate::model::Layer::Upper)? {
            // D w + kappa w = g at the top plane.
            Closure::Robin(kappa) => {
                mat[row][n - 2] = (-p.beta + kappa) * e;
                mat[row][n - 1] = p.beta + kappa;
                rhs[row] = g_top - p.part_deriv() - kappa * p.part(p.b);
            }
            Closure::Dirichlet => {
                mat[row][n - 2] = e;
                mat[row][n - 1] = Complex64::new(1.0, 0.0);
                rhs[row] = g_top - p.part(p.b);
            }
            Closure::Neumann => {
                mat[row][n - 2] = -p.beta * e;
                mat[row][n - 1] = p.beta;
                rhs[row] = g_top - p.part_deriv();
            }
        }
    }

    let coeffs = dense_solve(mat, rhs)?;
    Ok((pieces, coeffs))
}

/// Exact solution values at arbitrary depth coordinates `xs` (each must lie
/// inside the problem's depth span).
pub fn reference_values(problem: &ModeProblem, xs: &[f64]) -> Result<Vec<Complex64>> {
    let (pieces, coeffs) = solve_coefficients(problem)?;
    let lo = pieces[0].a;
    let hi = pieces[pieces.len() - 1].b;
    let tol = 1e-9 * (hi - lo);
    xs.iter()
        .map(|&x| {
            if x < lo - tol || x > hi + tol {
                return Err(Error::OutOfDomain {
                    value: x,
                    min: lo,
                    max: hi,
                });
            }
            let j = pieces
                .iter()
                .position(|p| x <= p.b + tol)
                .unwrap_or(pieces.len() - 1);
            let p = &pieces[j];
            Ok(p.value(coeffs[2 * j], coeffs[2 * j + 1], x.clamp(p.a, p.b)))
        })
        .collect()
}

/// Exact solution sampled on the problem's own grid nodes.
pub fn reference_solution(problem: &ModeProblem) -> Result<Vec<Complex64>> {
    reference_values(problem, &problem.grid.nodes)
}
