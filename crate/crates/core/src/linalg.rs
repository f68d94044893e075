//! Small dense helpers for 2x2 complex blocks.
//!
//! Everything the boundary symbols need is 2x2, so closed forms are used
//! throughout (no general-purpose matrix library required).

use num_complex::Complex64;

pub(crate) type Mat2 = [[Complex64; 2]; 2];

pub(crate) fn mat_vec(m: &Mat2, v: [Complex64; 2]) -> [Complex64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

pub(crate) fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub(crate) fn mat_sub(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][j] - b[i][j];
        }
    }
    out
}

pub(crate) fn adjoint(a: &Mat2) -> Mat2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

/// Largest singular value of a 2x2 complex matrix, via the closed-form
/// eigenvalues of the Hermitian product `A^H A`.
pub(crate) fn spectral_norm(a: &Mat2) -> f64 {
    let h = mat_mul(&adjoint(a), a);
    let tr = (h[0][0] + h[1][1]).re;
    let det = (h[0][0] * h[1][1] - h[0][1] * h[1][0]).re.max(0.0);
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    (0.5 * (tr + disc)).max(0.0).sqrt()
}
