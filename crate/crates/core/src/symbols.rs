//! Electric-to-magnetic boundary symbols on the transverse frequency plane.
//!
//! After a Laplace transform in time (frequency `s` with `Re s > 0`) and a
//! Fourier transform in the tangential plane (frequency `xi`), each exterior
//! half-space admits an exact transparent closure: the tangential magnetic
//! trace is a 2x2 matrix multiple of the tangential electric trace,
//!
//! ```text
//! M_j(xi, s) = [ eps_j mu_j s^2 I + xi_perp xi_perp^T ] / (mu_j s beta_j),
//! beta_j     = sqrt(eps_j mu_j s^2 + |xi|^2),     xi_perp = (-xi2, xi1),
//! ```
//!
//! with the principal square root (`Re beta_j > 0`).  Truncating the
//! half-space by an absorbing layer of stretched thickness `Ltilde_j`
//! multiplies the symbol by `coth(beta_j Ltilde_j)`, a factor that tends to 1
//! exponentially fast as the layer thickens — the entire truncation error of
//! the layer closure lives in that scalar factor.
//!
//! The symbol is diagonal in the orthonormal frame `(xi_hat, xi_hat_perp)`:
//! the TM eigenvalue `eps_j s / beta_j` acts on `xi_hat` and the TE
//! eigenvalue `beta_j / (mu_j s)` acts on `xi_hat_perp`.  At `xi = 0` both
//! collapse to the wave admittance `sqrt(eps_j/mu_j)` and the frame is taken
//! to be the canonical basis.
//!
//! Symbol differences are measured in the trace-space operator norm: the
//! tangential electric trace carries the weight `C(xi)`, its dual (the
//! magnetic trace) the inverse weight, so the per-mode error of a closure is
//! the spectral norm of `C^{-1/2} (M_exact - M_layer) C^{-1/2}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{stretched_thickness, Layer, LaplaceFrequency, MediumParams, PmlConfig};

/// Tangential Fourier frequency `xi = (xi1, xi2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransverseMode {
    pub xi1: f64,
    pub xi2: f64,
}

impl TransverseMode {
    pub fn new(xi1: f64, xi2: f64) -> Self {
        TransverseMode { xi1, xi2 }
    }

    /// The zero mode (normal incidence).
    pub fn zero() -> Self {
        TransverseMode { xi1: 0.0, xi2: 0.0 }
    }

    /// `|xi|^2`.
    pub fn norm_sq(&self) -> f64 {
        self.xi1 * self.xi1 + self.xi2 * self.xi2
    }

    /// `|xi|`.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Counter-clockwise perpendicular `(-xi2, xi1)`.
    pub fn perp(&self) -> Self {
        TransverseMode {
            xi1: -self.xi2,
            xi2: self.xi1,
        }
    }

    /// Unit vector `xi_hat` (canonical `e1` at the zero mode).
    pub fn unit(&self) -> [f64; 2] {
        let n = self.norm();
        if n == 0.0 {
            [1.0, 0.0]
        } else {
            [self.xi1 / n, self.xi2 / n]
        }
    }

    /// Unit vector `xi_hat_perp` (canonical `e2` at the zero mode).
    pub fn unit_perp(&self) -> [f64; 2] {
        let u = self.unit();
        [-u[1], u[0]]
    }

    /// Rotate by `theta` radians counter-clockwise.
    pub fn rotated(&self, theta: f64) -> Self {
        let (sn, cs) = theta.sin_cos();
        TransverseMode {
            xi1: cs * self.xi1 - sn * self.xi2,
            xi2: sn * self.xi1 + cs * self.xi2,
        }
    }
}

/// Which half-space closure a symbol represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymbolKind {
    /// Exact transparent closure of the unbounded half-space.
    Exact,
    /// Absorbing-layer closure of finite stretched thickness.
    Pml,
}

/// A 2x2 electric-to-magnetic boundary symbol at one `(xi, s)` point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtmSymbol {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
    pub layer: Layer,
    pub kind: SymbolKind,
}

impl EtmSymbol {
    /// Entries as a row-major 2x2 array.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        [[self.m11, self.m12], [self.m21, self.m22]]
    }

    /// Apply the symbol to a tangential trace vector.
    pub fn apply(&self, e: [Complex64; 2]) -> [Complex64; 2] {
        linalg::mat_vec(&self.matrix(), e)
    }

    /// Spectral norm of the difference with another symbol (unweighted).
    pub fn diff_opnorm(&self, other: &EtmSymbol) -> f64 {
        linalg::spectral_norm(&linalg::mat_sub(&self.matrix(), &other.matrix()))
    }

    /// Scale all entries by a complex factor, retagging the kind.
    fn scaled(&self, c: Complex64, kind: SymbolKind) -> EtmSymbol {
        EtmSymbol {
            m11: c * self.m11,
            m12: c * self.m12,
            m21: c * self.m21,
            m22: c * self.m22,
            layer: self.layer,
            kind,
        }
    }
}

/// Principal complex square root with `Re >= 0`, resolving the branch cut on
/// the negative real axis upward: `sgn(Im) = +1` when `Im == 0`.
///
/// For arguments of the form `eps mu s^2 + |xi|^2` with `Re s > 0` the cut is
/// never touched and `Re` is strictly positive.
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    // -0.0 < 0.0 is false, so a signed zero imaginary part maps upward.
    let sgn = if z.im < 0.0 { -1.0 } else { 1.0 };
    // Evaluate the larger component from its stable half-angle form and the
    // smaller one from the product identity 2*re*im = Im z, which avoids the
    // cancellation in (|z| + Re z)/2 near the cut.
    if z.re >= 0.0 {
        let re = ((r + z.re) * 0.5).sqrt();
        Complex64::new(re, z.im / (2.0 * re))
    } else {
        let im = sgn * ((r - z.re) * 0.5).sqrt();
        Complex64::new(z.im / (2.0 * im), im)
    }
}

/// Vertical wavenumber `beta_j = sqrt(eps_j mu_j s^2 + |xi|^2)`.
///
/// `Re beta_j > 0` for every mode; `Im beta_j` carries the sign of `s2`; the
/// real part is minimized over `xi` at the zero mode, where
/// `beta_j = sqrt(eps_j mu_j) * s`.
pub fn beta(params: &MediumParams, layer: Layer, s: LaplaceFrequency, mode: TransverseMode) -> Complex64 {
    let sc = s.as_complex();
    principal_sqrt(params.eps_mu(layer) * sc * sc + mode.norm_sq())
}

/// `coth(w)` evaluated through decaying exponentials,
/// `(1 + e^{-2w}) / (1 - e^{-2w})`, overflow-safe for `Re w > 0`.
pub fn coth_decaying(w: Complex64) -> Complex64 {
    let e = (-2.0 * w).exp();
    (1.0 + e) / (1.0 - e)
}

/// `tanh(w)` evaluated through decaying exponentials,
/// `(1 - e^{-2w}) / (1 + e^{-2w})`, overflow-safe for `Re w > 0`.
pub fn tanh_decaying(w: Complex64) -> Complex64 {
    let e = (-2.0 * w).exp();
    (1.0 - e) / (1.0 + e)
}

/// Exact transparent-closure symbol of the half-space `layer`.
pub fn etm_exact(
    params: &MediumParams,
    layer: Layer,
    s: LaplaceFrequency,
    mode: TransverseMode,
) -> EtmSymbol {
    let sc = s.as_complex();
    let b = beta(params, layer, s, mode);
    let inv = (params.mu(layer) * sc * b).inv();
    let base = params.eps_mu(layer) * sc * sc;
    EtmSymbol {
        m11: (base + mode.xi2 * mode.xi2) * inv,
        m12: -(mode.xi1 * mode.xi2) * inv,
        m21: -(mode.xi1 * mode.xi2) * inv,
        m22: (base + mode.xi1 * mode.xi1) * inv,
        layer,
        kind: SymbolKind::Exact,
    }
}

/// Absorbing-layer closure symbol: the exact symbol times
/// `coth(beta_j Ltilde_j)` with `Ltilde_j` the stretched layer thickness.
pub fn etm_pml(
    params: &MediumParams,
    layer: Layer,
    s: LaplaceFrequency,
    mode: TransverseMode,
    pml: &PmlConfig,
) -> EtmSymbol {
    let b = beta(params, layer, s, mode);
    let lt = stretched_thickness(pml, layer);
    let c = coth_decaying(b * lt);
    etm_exact(params, layer, s, mode).scaled(c, SymbolKind::Pml)
}

/// Eigen-decomposition of a boundary symbol in the `(xi_hat, xi_hat_perp)`
/// frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeTmEigen {
    /// TM eigenvalue (acts on `xi_hat`): `eps_j s / beta_j`, possibly times a
    /// layer factor.
    pub lambda_tm: Complex64,
    /// TE eigenvalue (acts on `xi_hat_perp`): `beta_j / (mu_j s)`, possibly
    /// times a layer factor.
    pub lambda_te: Complex64,
    /// Unit TM direction `xi_hat` (canonical `e1` at the zero mode).
    pub basis_tm: [f64; 2],
    /// Unit TE direction `xi_hat_perp` (canonical `e2` at the zero mode).
    pub basis_te: [f64; 2],
}

/// Eigen-decomposition of the exact closure symbol.
pub fn te_tm_eigen(
    params: &MediumParams,
    layer: Layer,
    s: LaplaceFrequency,
    mode: TransverseMode,
) -> TeTmEigen {
    let sc = s.as_complex();
    let b = beta(params, layer, s, mode);
    TeTmEigen {
        lambda_tm: params.eps(layer) * sc / b,
        lambda_te: b / (params.mu(layer) * sc),
        basis_tm: mode.unit(),
        basis_te: mode.unit_perp(),
    }
}

/// Eigen-decomposition of the absorbing-layer closure symbol: both
/// eigenvalues of the exact symbol times `coth(beta_j Ltilde_j)`.
pub fn te_tm_eigen_pml(
    params: &MediumParams,
    layer: Layer,
    s: LaplaceFrequency,
    mode: TransverseMode,
    pml: &PmlConfig,
) -> TeTmEigen {
    let b = beta(params, layer, s, mode);
    let c = coth_decaying(b * stretched_thickness(pml, layer));
    let e = te_tm_eigen(params, layer, s, mode);
    TeTmEigen {
        lambda_tm: c * e.lambda_tm,
        lambda_te: c * e.lambda_te,
        ..e
    }
}

/// Tangential-trace weight `C(xi) = (1+|xi|^2)^{-1/2} (I + xi_perp xi_perp^T)`.
///
/// Real symmetric positive definite with unit determinant; eigenvalue
/// `(1+|xi|^2)^{-1/2}` on `xi_hat` and `(1+|xi|^2)^{+1/2}` on `xi_hat_perp`.
pub fn curl_trace_weight(mode: TransverseMode) -> [[f64; 2]; 2] {
    let q = 1.0 + mode.norm_sq();
    let w = q.sqrt().recip();
    let p = mode.perp();
    [
        [w * (1.0 + p.xi1 * p.xi1), w * (p.xi1 * p.xi2)],
        [w * (p.xi1 * p.xi2), w * (1.0 + p.xi2 * p.xi2)],
    ]
}

/// Dual-trace weight: the exact inverse of [`curl_trace_weight`],
/// `(1+|xi|^2)^{-1/2} ((1+|xi|^2) I - xi_perp xi_perp^T)`.
pub fn div_trace_weight(mode: TransverseMode) -> [[f64; 2]; 2] {
    let q = 1.0 + mode.norm_sq();
    let w = q.sqrt().recip();
    let p = mode.perp();
    [
        [w * (q - p.xi1 * p.xi1), -w * (p.xi1 * p.xi2)],
        [-w * (p.xi1 * p.xi2), w * (q - p.xi2 * p.xi2)],
    ]
}

/// Inverse square root of the tangential-trace weight:
/// `(1+|xi|^2)^{1/4}` on `xi_hat` plus `(1+|xi|^2)^{-1/4}` on `xi_hat_perp`.
pub fn inv_sqrt_curl_weight(mode: TransverseMode) -> [[f64; 2]; 2] {
    let q = 1.0 + mode.norm_sq();
    let a = q.powf(0.25);
    let c = q.powf(-0.25);
    let u = mode.unit();
    let v = mode.unit_perp();
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = a * u[i] * u[j] + c * v[i] * v[j];
        }
    }
    m
}

fn real_to_complex(m: [[f64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let c = |x: f64| Complex64::new(x, 0.0);
    [[c(m[0][0]), c(m[0][1])], [c(m[1][0]), c(m[1][1])]]
}

/// Trace-space operator norm of the difference of two symbols at one mode:
/// the spectral norm of `C^{-1/2} (A - B) C^{-1/2}`.
///
/// Because both symbols are diagonal in the `(xi_hat, xi_hat_perp)` frame,
/// this equals
/// `max( (1+|xi|^2)^{1/2} |dlambda_TM| , (1+|xi|^2)^{-1/2} |dlambda_TE| )`.
pub fn dual_weighted_opnorm(a: &EtmSymbol, b: &EtmSymbol, mode: TransverseMode) -> f64 {
    let w = real_to_complex(inv_sqrt_curl_weight(mode));
    let d = linalg::mat_sub(&a.matrix(), &b.matrix());
    linalg::spectral_norm(&linalg::mat_mul(&w, &linalg::mat_mul(&d, &w)))
}

/// Real part of the quadratic form `<M v, v>`.
///
/// Both closure kinds are passive: for every mode, every `Re s > 0`, and
/// every trace vector `v`, the form is nonnegative (each eigenvalue has
/// nonnegative real part, and the eigenframe is orthonormal).
pub fn passivity_form(sym: &EtmSymbol, v: [Complex64; 2]) -> f64 {
    let mv = sym.apply(v);
    (mv[0] * v[0].conj() + mv[1] * v[1].conj()).re
}

/// Finite sample of the transverse frequency plane with quadrature weights.
///
/// Used both for suprema (weights ignored) and for quadrature of per-mode
/// quantities (trapezoid weights).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiGrid {
    pub modes: Vec<TransverseMode>,
    pub weights: Vec<f64>,
}

impl XiGrid {
    /// A single mode with unit weight.
    pub fn single(mode: TransverseMode) -> Self {
        XiGrid {
            modes: vec![mode],
            weights: vec![1.0],
        }
    }

    /// Uniform tensor grid on `[-xi_max, xi_max]^2` with `n` nodes per axis
    /// and trapezoid weights.  Choose `n` odd to include the origin.
    pub fn tensor(xi_max: f64, n: usize) -> Result<Self> {
        if !(xi_max.is_finite() && xi_max > 0.0) {
            return Err(Error::invalid("xi_max", "must be finite and > 0"));
        }
        if n < 2 {
            return Err(Error::invalid("n", "tensor grid needs at least 2 nodes per axis"));
        }
        let h = 2.0 * xi_max / (n - 1) as f64;
        let node = |i: usize| -xi_max + h * i as f64;
        let wt = |i: usize| if i == 0 || i == n - 1 { 0.5 * h } else { h };
        let mut modes = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                modes.push(TransverseMode::new(node(i), node(j)));
                weights.push(wt(i) * wt(j));
            }
        }
        Ok(XiGrid { modes, weights })
    }

    /// Uniform sample of `[0, xi_max]` along the `xi1` axis (`n >= 2` nodes,
    /// origin included).  Per-mode norms depend on `xi` only through `|xi|`,
    /// so axis sweeps suffice for suprema at a fraction of the tensor cost.
    pub fn radial_axis(xi_max: f64, n: usize) -> Result<Self> {
        if !(xi_max.is_finite() && xi_max > 0.0) {
            return Err(Error::invalid("xi_max", "must be finite and > 0"));
        }
        if n < 2 {
            return Err(Error::invalid("n", "radial grid needs at least 2 nodes"));
        }
        let h = xi_max / (n - 1) as f64;
        let modes: Vec<_> = (0..n).map(|i| TransverseMode::new(h * i as f64, 0.0)).collect();
        let weights: Vec<_> = (0..n)
            .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
            .collect();
        Ok(XiGrid { modes, weights })
    }

    /// Append an extra mode (e.g. a known extremizer) with the given weight.
    pub fn push(&mut self, mode: TransverseMode, weight: f64) {
        self.modes.push(mode);
        self.weights.push(weight);
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
    }

    fn draw_params(rng: &mut ChaCha8Rng) -> MediumParams {
        MediumParams::new(
            rng.gen_range(0.3..3.0),
            rng.gen_range(0.3..3.0),
            rng.gen_range(0.3..3.0),
            rng.gen_range(0.3..3.0),
        )
        .unwrap()
    }

    fn draw_s(rng: &mut ChaCha8Rng) -> LaplaceFrequency {
        LaplaceFrequency::new(rng.gen_range(0.05..3.0), rng.gen_range(-5.0..5.0)).unwrap()
    }

    fn draw_mode(rng: &mut ChaCha8Rng) -> TransverseMode {
        TransverseMode::new(rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0))
    }

    #[test]
    fn principal_sqrt_squares_back_and_stays_right() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let z = Complex64::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
            let r = principal_sqrt(z);
            assert!(r.re >= 0.0);
            assert!(close(r * r, z, 1e-14), "z={z} r={r}");
            if z.im.abs() > 1e-6 {
                // Agrees with the library principal square root off the cut.
                assert!(close(r, z.sqrt(), 1e-13));
            }
        }
        // On the cut the branch resolves upward.
        let r = principal_sqrt(Complex64::new(-4.0, 0.0));
        assert!(close(r, Complex64::new(0.0, 2.0), 1e-15));
        let r = principal_sqrt(Complex64::new(-4.0, -0.0));
        assert!(close(r, Complex64::new(0.0, 2.0), 1e-15));
        assert!(close(
            principal_sqrt(Complex64::new(2.0, 0.0)),
            Complex64::new(2.0_f64.sqrt(), 0.0),
            1e-15
        ));
    }

    #[test]
    fn beta_has_positive_real_part_and_imaginary_sign_of_s2() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..500 {
            let p = draw_params(&mut rng);
            let s = draw_s(&mut rng);
            let m = draw_mode(&mut rng);
            for layer in Layer::BOTH {
                let b = beta(&p, layer, s, m);
                assert!(b.re > 0.0, "Re beta must be positive, got {b}");
                if s.s2 != 0.0 {
                    assert_eq!(b.im.signum(), s.s2.signum(), "Im beta sign, b={b} s2={}", s.s2);
                }
            }
        }
    }

    #[test]
    fn beta_real_part_is_minimized_at_zero_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let p = draw_params(&mut rng);
            let s = draw_s(&mut rng);
            let at_zero = beta(&p, Layer::Upper, s, TransverseMode::zero()).re;
            // Strictly increasing along any ray in |xi|.
            let mut prev = at_zero;
            for k in 1..=20 {
                let m = TransverseMode::new(0.4 * k as f64, 0.3 * k as f64);
                let r = beta(&p, Layer::Upper, s, m).re;
                assert!(r >= prev - 1e-13, "Re beta not monotone in |xi|");
                prev = r;
            }
            // And at the zero mode it equals sqrt(eps mu) * |s| projected: for
            // real s, exactly sqrt(eps mu) * s1.
            let s_real = LaplaceFrequency::new(s.s1, 0.0).unwrap();
            let b0 = beta(&p, Layer::Upper, s_real, TransverseMode::zero());
            assert!(close(
                b0,
                Complex64::new(p.eps_mu(Layer::Upper).sqrt() * s.s1, 0.0),
                1e-14
            ));
        }
    }

    #[test]
    fn exact_symbol_matches_hand_computation() {
        // eps = mu = 1, s = 1, xi = (1, 0): beta = sqrt(2),
        // M = diag(1, 2)/sqrt(2).
        let p = MediumParams::unit();
        let s = LaplaceFrequency::new(1.0, 0.0).unwrap();
        let m = etm_exact(&p, Layer::Upper, s, TransverseMode::new(1.0, 0.0));
        let r2 = 2.0_f64.sqrt();
        assert!(close(m.m11, Complex64::new(1.0 / r2, 0.0), 1e-15));
        assert!(close(m.m22, Complex64::new(r2, 0.0), 1e-15));
        assert!(m.m12.norm() < 1e-16 && m.m21.norm() < 1e-16);
    }

    #[test]
    fn symbol_is_symmetric_and_even_in_xi() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..200 {
            let p = draw_params(&mut rng);
            let s = draw_s(&mut rng);
            let m = draw_mode(&mut rng);
            let a = etm_exact(&p, Layer::Lower, s, m);
            let b = etm_exact(&p, Layer::Lower, s, TransverseMode::new(-m.xi1, -m.xi2));
            assert_eq!(a.m12, a.m21);
            assert!(close(a.m11, b.m11, 1e-15));
            assert!(close(a.m12, b.m12, 1e-15));
            assert!(close(a.m22, b.m22, 1e-15));
        }
    }

    #[test]
    fn eigenframe_diagonalizes_the_symbol() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..300 {
            let p = draw_params(&mut rng);
            let s = draw_s(&mut rng);
            let m = draw_mode(&mut rng);
            for layer in Layer::BOTH {
                let sym = etm_exact(&p, layer, s, m);
                let eig = te_tm_eigen(&p, layer, s, m);
                let u = [
                    Complex64::new(eig.basis_tm[0], 0.0),
                    Complex64::new(eig.basis_tm[1], 0.0),
                ];
                let v = [
                    Complex64::new(eig.basis_te[0], 0.0),
                    Complex64::new(eig.basis_te[1], 0.0),
                ];
                let mu = sym.apply(u);
                let mv = sym.apply(v);
                assert!(close(mu[0], eig.lambda_tm * u[0], 1e-13));
                assert!(close(mu[1], eig.lambda_tm * u[1], 1e-13));
                assert!(close(mv[0], eig.lambda_te * v[0], 1e-13));
                assert!(close(mv[1], eig.lambda_te * v[1], 1e-13));
                // Rank-one reconstruction from the eigenframe.
                for i in 0..2 {
                    for j in 0..2 {
                        let rec = eig.lambda_tm * (eig.basis_tm[i] * eig.basis_tm[j])
                            + eig.lambda_te * (eig.basis_te[i] * eig.basis_te[j]);
                        assert!(close(rec, sym.matrix()[i][j], 1e-13));
                    }
                }
            }
        }
    }

    #[test]
    fn zero_mode_symbol_is_admittance_times_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..100 {
            let p = draw_params(&mut rng);
            let s1 = rng.gen_range(0.1..3.0);
            let s = LaplaceFrequency::new(s1, 0.0).unwrap();
            for layer in Layer::BOTH {
                let adm = (p.eps(layer) / p.mu(layer)).sqrt();
                let sym = etm_exact(&p, layer, s, TransverseMode::zero());
                assert!(close(sym.m11, Complex64::new(adm, 0.0), 1e-14));
                assert!(close(sym.m22, Complex64::new(adm, 0.0), 1e-14));
                assert!(sym.m12.norm() < 1e-16);
                let eig = te_tm_eigen(&p, layer, s, TransverseMode::zero());
                assert_eq!(eig.basis_tm, [1.0, 0.0]);
                assert_eq!(eig.basis_te, [0.0, 1.0]);
                assert!(close(eig.lambda_tm, eig.lambda_te, 1e-14));
            }
        }
    }

    #[test]
    fn symbol_rotates_covariantly() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let p = draw_params(&mut rng);
            let s = draw_s(&mut rng);
            let m = draw_mode(&mut rng);
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            let (sn, cs) = th.sin_cos();
            let a = etm_exact(&p, Layer::Upper, s, m).matrix();
            let b = etm_exact(&p, Layer::Upper, s, m.rotated(th)).matrix();
            // R A R^T computed entrywise.
            let r = [[cs, -sn], [sn, cs]];
            let mut rar = [[Complex64::new(0.0, 0.0); 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        for l in 0..2 {
                            rar[i][j] += r[i][k] * a[k][l] * r[j][l];
                        }
                    }
                }
            }
            for i in 0..2 {
                for j in 0..2 {
                    assert!(close(b[i][j], rar[i][j], 1e-12));
                }
            }
        }
    }

    #[test]
    fn coth_decaying_agrees_with_cosh_over_sinh() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for _ in 0..200 {
            let w = Complex64::new(rng.gen_range(0.05..3.0), rng.gen_range(-4.0..4.0));
            let direct = w.cosh() / w.sinh();
            assert!(close(coth_decaying(w), direct, 1e-13), "w={w}");
        }
        // Stays finite where cosh/sinh overflow.
        let big = coth_decaying(Complex64::new(900.0, 3.0));
        assert!(close(big, Complex64::new(1.0, 0.0), 1e-15));
    }

    #[test]
    fn tanh_decaying_agrees_with_sinh_over_cosh() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let w = Complex64::new(rng.gen_range(0.05..3.0), rng.gen_range(-4.0..4.0));
            let direct = w.sinh() / w.cosh();
            assert!(close(tanh_decaying(w), direct, 1e-13), "w={w}");
            // tanh * coth = 1.
            let prod = tanh_decaying(w) * coth_decaying(w);
            assert!(close(prod, Complex64::new(1.0, 0.0), 1e-13), "w={w}");
        }
        let big = tanh_decaying(Complex64::new(900.0, 3.0));
        assert!(close(big, Complex64::new(1.0, 0.0), 1e-15));
    }

    #[test]
    fn layer_symbol_is_coth_times_exact_and_converges_exponentially() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..200 {
            let p = draw_params(&mut rng);
            let s = draw_s(&mut rng);
            let m = draw_mode(&mut rng);
            let pml = PmlConfig::new(
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.5..4.0),
                rng.gen_range(0.5..4.0),
                rng.gen_range(1..4),
                s.s1,
            )
            .unwrap();
            for layer in Layer::BOTH {
                let exact = etm_exact(&p, layer, s, m);
                let layered = etm_pml(&p, layer, s, m, &pml);
                assert_eq!(layered.kind, SymbolKind::Pml);
                let b = beta(&p, layer, s, m);
                let c = coth_decaying(b * stretched_thickness(&pml, layer));
                assert!(close(layered.m11, c * exact.m11, 1e-14));
                assert!(close(layered.m22, c * exact.m22, 1e-14));
                // |coth(w) - 1| <= 2 e^{-2 Re w} / (1 - e^{-2 Re w}).
                let w = b * stretched_thickness(&pml, layer);
                let decay = (-2.0 * w.re).exp();
                let envelope = 2.0 * decay / (1.0 - decay);
                // The absolute slack covers the representation floor of
                // forming c - 1 when the deviation sits below one ulp of 1.
                assert!(
                    (c - 1.0).norm() <= envelope * (1.0 + 1e-13) + 3e-16,
                    "coth envelope violated: dev {:.3e} envelope {:.3e}",
                    (c - 1.0).norm(),
                    envelope
                );
            }
        }
    }

    #[test]
    fn trace_weights_are_mutually_inverse_with_unit_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..300 {
            let m = draw_mode(&mut rng);
            let cw = curl_trace_weight(m);
            let dw = div_trace_weight(m);
            let det = cw[0][0] * cw[1][1] - cw[0][1] * cw[1][0];
            assert!((det - 1.0).abs() < 1e-12);
            for i in 0..2 {
                for j in 0..2 {
                    let prod = cw[i][0] * dw[0][j] + cw[i][1] * dw[1][j];
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((prod - expect).abs() < 1e-12);
                }
            }
            // inv_sqrt * inv_sqrt == inverse of the curl weight.
            let h = inv_sqrt_curl_weight(m);
            for i in 0..2 {
                for j in 0..2 {
                    let sq = h[i][0] * h[0][j] + h[i][1] * h[1][j];
                    assert!((sq - dw[i][j]).abs() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn weighted_opnorm_matches_eigenvalue_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..300 {
            let p = draw_params(&mut rng);
            let s = draw_s(&mut rng);
            let m = draw_mode(&mut rng);
            let pml = PmlConfig::symmetric(
                rng.gen_range(0.3..1.5),
                rng.gen_range(0.5..3.0),
                1,
                s.s1,
            )
            .unwrap();
            for layer in Layer::BOTH {
                let a = etm_exact(&p, layer, s, m);
                let b = etm_pml(&p, layer, s, m, &pml);
                let num = dual_weighted_opnorm(&a, &b, m);
                let ea = te_tm_eigen(&p, layer, s, m);
                let eb = te_tm_eigen_pml(&p, layer, s, m, &pml);
                let q = (1.0 + m.norm_sq()).sqrt();
                let closed = (q * (ea.lambda_tm - eb.lambda_tm).norm())
                    .max((ea.lambda_te - eb.lambda_te).norm() / q);
                assert!(
                    (num - closed).abs() <= 1e-11 * (1.0 + closed),
                    "numeric {num} vs closed {closed}"
                );
            }
        }
    }

    #[test]
    fn both_closures_are_passive() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..500 {
            let p = draw_params(&mut rng);
            let s = draw_s(&mut rng);
            let m = draw_mode(&mut rng);
            let pml = PmlConfig::new(
                rng.gen_range(0.2..2.0),
                rng.gen_range(0.2..2.0),
                rng.gen_range(0.3..4.0),
                rng.gen_range(0.3..4.0),
                rng.gen_range(1..3),
                s.s1,
            )
            .unwrap();
            let v = [
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            ];
            for layer in Layer::BOTH {
                let e = etm_exact(&p, layer, s, m);
                let l = etm_pml(&p, layer, s, m, &pml);
                let fe = passivity_form(&e, v);
                let fl = passivity_form(&l, v);
                let scale = v[0].norm_sqr() + v[1].norm_sqr();
                assert!(fe >= -1e-12 * scale, "exact closure lost passivity: {fe}");
                assert!(fl >= -1e-12 * scale, "layer closure lost passivity: {fl}");
            }
        }
    }

    #[test]
    fn tensor_grid_covers_square_with_consistent_weights() {
        let g = XiGrid::tensor(3.0, 7).unwrap();
        assert_eq!(g.len(), 49);
        assert!(g.modes.iter().any(|m| m.xi1 == 0.0 && m.xi2 == 0.0));
        assert!(g.modes.iter().all(|m| m.xi1.abs() <= 3.0 && m.xi2.abs() <= 3.0));
        let total: f64 = g.weights.iter().sum();
        assert!((total - 36.0).abs() < 1e-12);
        assert!(XiGrid::tensor(-1.0, 5).is_err());
        assert!(XiGrid::tensor(1.0, 1).is_err());
    }

    #[test]
    fn radial_grid_spans_axis_from_origin() {
        let g = XiGrid::radial_axis(5.0, 11).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g.modes[0].norm(), 0.0);
        assert!((g.modes[10].norm() - 5.0).abs() < 1e-15);
        let total: f64 = g.weights.iter().sum();
        assert!((total - 5.0).abs() < 1e-12);
    }
}
