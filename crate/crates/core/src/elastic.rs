//! Elastodynamic local operators and interface algebra.
//!
//! Everything here is pointwise: strain/stress algebra on displacement jets,
//! the Navier operator `mu Laplace(u) + (lambda+mu) grad div u`, the traction
//! `2 mu (n.grad)u + lambda n div u + mu n x curl u` (equal to `stress . n`),
//! the two equivalent writings of the elastic energy density, a pointwise
//! coercivity certificate, the electromagnetic/elastic interface identity,
//! and a finite-difference residual for the elastodynamic equation
//! `rho u_tt - div stress(u) = 0`.
//!
//! Jets are complex-valued throughout so Laplace-domain residuals reuse the
//! same code paths as real time-domain fields.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex 3-vector.
pub type Vec3 = [Complex64; 3];
/// Complex 3x3 matrix (row-major).
pub type Mat3 = [[Complex64; 3]; 3];

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Promote a real 3-vector.
pub fn real_vec3(v: [f64; 3]) -> Vec3 {
    [
        Complex64::new(v[0], 0.0),
        Complex64::new(v[1], 0.0),
        Complex64::new(v[2], 0.0),
    ]
}

fn dot(a: &Vec3, b: &Vec3) -> Complex64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Pointwise second-order data of a displacement field: value, gradient
/// `grad[i][j] = d_j u_i`, and second derivatives
/// `hess[i][j][k] = d_j d_k u_i` (symmetric in `j, k`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementJet {
    pub u: Vec3,
    pub grad: Mat3,
    pub hess: [[[Complex64; 3]; 3]; 3],
}

impl DisplacementJet {
    /// The zero jet.
    pub fn zero() -> Self {
        DisplacementJet {
            u: [czero(); 3],
            grad: [[czero(); 3]; 3],
            hess: [[[czero(); 3]; 3]; 3],
        }
    }

    /// Build a jet, symmetrizing the second derivatives in their derivative
    /// indices.
    pub fn new(u: Vec3, grad: Mat3, hess: [[[Complex64; 3]; 3]; 3]) -> Self {
        let mut h = hess;
        for i in 0..3 {
            for j in 0..3 {
                for k in (j + 1)..3 {
                    let sym = 0.5 * (hess[i][j][k] + hess[i][k][j]);
                    h[i][j][k] = sym;
                    h[i][k][j] = sym;
                }
            }
        }
        DisplacementJet { u, grad, hess: h }
    }

    /// Check the derivative-index symmetry of the second derivatives.
    pub fn validate(&self) -> Result<()> {
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    if (self.hess[i][j][k] - self.hess[i][k][j]).norm() > 1e-12 {
                        return Err(Error::invalid(
                            "hess",
                            "second derivatives must be symmetric in the derivative indices",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// `div u = sum_i d_i u_i`.
    pub fn divergence(&self) -> Complex64 {
        self.grad[0][0] + self.grad[1][1] + self.grad[2][2]
    }

    /// `curl u`.
    pub fn curl(&self) -> Vec3 {
        [
            self.grad[2][1] - self.grad[1][2],
            self.grad[0][2] - self.grad[2][0],
            self.grad[1][0] - self.grad[0][1],
        ]
    }
}

/// Linearized strain `eps(u) = (grad u + (grad u)^T) / 2`.
pub fn strain(jet: &DisplacementJet) -> Mat3 {
    let mut e = [[czero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            e[i][j] = 0.5 * (jet.grad[i][j] + jet.grad[j][i]);
        }
    }
    e
}

/// Isotropic stress `sigma = lambda tr(eps) I + 2 mu eps`.
pub fn stress(strain: &Mat3, lambda_e: f64, mu_e: f64) -> Mat3 {
    let tr = strain[0][0] + strain[1][1] + strain[2][2];
    let mut s = [[czero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = 2.0 * mu_e * strain[i][j];
            if i == j {
                s[i][j] += lambda_e * tr;
            }
        }
    }
    s
}

/// Navier operator `mu Laplace(u) + (lambda + mu) grad div u`, equal to the
/// divergence of the stress field on any twice-differentiable displacement.
pub fn lame_apply(jet: &DisplacementJet, lambda_e: f64, mu_e: f64) -> Vec3 {
    let mut out = [czero(); 3];
    for i in 0..3 {
        let laplace = jet.hess[i][0][0] + jet.hess[i][1][1] + jet.hess[i][2][2];
        // (grad div u)_i = sum_j d_i d_j u_j.
        let grad_div = jet.hess[0][i][0] + jet.hess[1][i][1] + jet.hess[2][i][2];
        out[i] = mu_e * laplace + (lambda_e + mu_e) * grad_div;
    }
    out
}

fn require_unit_normal(n: [f64; 3]) -> Result<()> {
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::invalid("n", format!("normal must be unit length, |n| = {norm}")));
    }
    Ok(())
}

/// Surface traction `2 mu (n.grad)u + lambda n div u + mu n x curl u`,
/// identically equal to `stress(strain(u)) . n`.
pub fn traction(jet: &DisplacementJet, n: [f64; 3], lambda_e: f64, mu_e: f64) -> Result<Vec3> {
    require_unit_normal(n)?;
    let nc = real_vec3(n);
    let div = jet.divergence();
    let curl = jet.curl();
    let n_cross_curl = cross(&nc, &curl);
    let mut t = [czero(); 3];
    for i in 0..3 {
        // (n.grad)u_i = sum_j n_j d_j u_i.
        let ngrad = jet.grad[i][0] * n[0] + jet.grad[i][1] * n[1] + jet.grad[i][2] * n[2];
        t[i] = 2.0 * mu_e * ngrad + lambda_e * div * nc[i] + mu_e * n_cross_curl[i];
    }
    Ok(t)
}

/// `stress . n` for cross-checking the traction formula.
pub fn stress_times_normal(jet: &DisplacementJet, n: [f64; 3], lambda_e: f64, mu_e: f64) -> Result<Vec3> {
    require_unit_normal(n)?;
    let s = stress(&strain(jet), lambda_e, mu_e);
    let mut t = [czero(); 3];
    for i in 0..3 {
        t[i] = s[i][0] * n[0] + s[i][1] * n[1] + s[i][2] * n[2];
    }
    Ok(t)
}

/// Elastic energy density of a jet pair, in its two equivalent writings
/// (second argument conjugated):
///
/// ```text
/// line 1:  lambda (div u)(conj div v) + 2 mu eps(u) : conj eps(v)
/// line 2:  lambda (div u)(conj div v) + 2 mu sum_ij d_i u_j conj(d_i v_j)
///                                     - mu curl u . conj curl v
/// ```
///
/// The two agree identically (an integration-by-parts identity holding
/// already pointwise for the gradient contraction).
pub fn energy_density(
    jet_u: &DisplacementJet,
    jet_v: &DisplacementJet,
    lambda_e: f64,
    mu_e: f64,
) -> (Complex64, Complex64) {
    let div_term = lambda_e * jet_u.divergence() * jet_v.divergence().conj();

    let eu = strain(jet_u);
    let ev = strain(jet_v);
    let mut eps_contract = czero();
    let mut grad_contract = czero();
    for i in 0..3 {
        for j in 0..3 {
            eps_contract += eu[i][j] * ev[i][j].conj();
            grad_contract += jet_u.grad[j][i] * jet_v.grad[j][i].conj();
        }
    }
    let cu = jet_u.curl();
    let cv = jet_v.curl();
    let curl_contract = dot(&cu, &[cv[0].conj(), cv[1].conj(), cv[2].conj()]);

    let line1 = div_term + 2.0 * mu_e * eps_contract;
    let line2 = div_term + 2.0 * mu_e * grad_contract - mu_e * curl_contract;
    (line1, line2)
}

/// Pointwise coercivity certificate for the elastic energy density: returns
///
/// ```text
/// ( lambda |tr eps|^2 + 2 mu ||eps||_F^2 ,  c ||eps||_F^2 )
/// c = min(2 mu, lambda + 2 mu / 3)
/// ```
///
/// The value dominates the bound whenever `mu > 0` and `3 lambda + 2 mu > 0`.
/// (`c` is a convenient valid constant, not the sharp one: minimizing the
/// Rayleigh quotient over symmetric strains gives `min(2 mu, 3 lambda + 2 mu)`,
/// which is at least `c` on the admissible cone.)
pub fn pointwise_coercivity(lambda_e: f64, mu_e: f64, strain: &Mat3) -> (f64, f64) {
    let tr = strain[0][0] + strain[1][1] + strain[2][2];
    let mut frob = 0.0;
    for row in strain {
        for v in row {
            frob += v.norm_sqr();
        }
    }
    let value = lambda_e * tr.norm_sqr() + 2.0 * mu_e * frob;
    let c = (2.0 * mu_e).min(lambda_e + 2.0 * mu_e / 3.0);
    (value, c * frob)
}

/// Interface power identity: when the traces satisfy `Tu = n x H` and
/// `E - u_t` is normal (equal tangential parts), the electromagnetic flux
/// through the interface equals the elastic one:
/// `(H x E) . n = Tu . u_t` (bilinear products).
///
/// Returns the pass flag (residual at most `1e-13` times the input scale)
/// and the residual itself.
pub fn interface_identity_check(
    h: &Vec3,
    e: &Vec3,
    u_t: &Vec3,
    n: [f64; 3],
    tu: &Vec3,
) -> Result<(bool, f64)> {
    require_unit_normal(n)?;
    let nc = real_vec3(n);
    let em_flux = dot(&cross(h, e), &nc);
    let elastic_flux = dot(tu, u_t);
    let residual = (em_flux - elastic_flux).norm();
    let vnorm = |v: &Vec3| (v[0].norm_sqr() + v[1].norm_sqr() + v[2].norm_sqr()).sqrt();
    let scale = vnorm(h) * vnorm(e) + vnorm(tu) * vnorm(u_t) + 1.0;
    Ok((residual <= 1e-13 * scale, residual))
}

/// Space-time samples of a 3-vector field on a uniform grid
/// (`t, x1, x2, x3` row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    pub data: Vec<Vec3>,
    /// `(nt, n1, n2, n3)`.
    pub shape: [usize; 4],
    /// `(dt, h1, h2, h3)`.
    pub spacing: [f64; 4],
}

impl SpaceTimeField {
    /// Sample a closure `f(t, x)` on the grid anchored at the origin.
    pub fn sample(
        shape: [usize; 4],
        spacing: [f64; 4],
        f: impl Fn(f64, [f64; 3]) -> Vec3,
    ) -> Result<Self> {
        if shape.iter().any(|&n| n == 0) {
            return Err(Error::Grid("field shape must be nonzero".into()));
        }
        if spacing.iter().any(|&h| !(h.is_finite() && h > 0.0)) {
            return Err(Error::Grid("field spacing must be positive".into()));
        }
        let mut data = Vec::with_capacity(shape.iter().product());
        for it in 0..shape[0] {
            let t = it as f64 * spacing[0];
            for i1 in 0..shape[1] {
                for i2 in 0..shape[2] {
                    for i3 in 0..shape[3] {
                        let x = [
                            i1 as f64 * spacing[1],
                            i2 as f64 * spacing[2],
                            i3 as f64 * spacing[3],
                        ];
                        data.push(f(t, x));
                    }
                }
            }
        }
        Ok(SpaceTimeField { data, shape, spacing })
    }

    fn index(&self, i: [usize; 4]) -> usize {
        ((i[0] * self.shape[1] + i[1]) * self.shape[2] + i[2]) * self.shape[3] + i[3]
    }

    pub fn get(&self, i: [usize; 4]) -> Vec3 {
        self.data[self.index(i)]
    }
}

/// Scalar samples on the interior of a space-time grid (the stencil trims one
/// node from each face).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub data: Vec<f64>,
    pub shape: [usize; 4],
    pub spacing: [f64; 4],
}

impl ScalarField {
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, &b| a.max(b.abs()))
    }
}

/// Second-order finite-difference residual of the elastodynamic equation,
/// `| rho u_tt - (mu Laplace u + (lambda+mu) grad div u) |`, evaluated at
/// every interior node.  For plane waves satisfying the pressure or shear
/// dispersion relation the residual vanishes at second order in the grid
/// spacings.
pub fn elastodynamic_residual(
    field: &SpaceTimeField,
    rho_e: f64,
    lambda_e: f64,
    mu_e: f64,
) -> Result<ScalarField> {
    if field.shape.iter().any(|&n| n < 3) {
        return Err(Error::Grid(
            "residual stencil needs at least 3 samples per axis".into(),
        ));
    }
    let [nt, n1, n2, n3] = field.shape;
    let [dt, h1, h2, h3] = field.spacing;
    let hs = [h1, h2, h3];
    let out_shape = [nt - 2, n1 - 2, n2 - 2, n3 - 2];
    let mut data = Vec::with_capacity(out_shape.iter().product());

    let shift = |i: [usize; 4], axis: usize, by: isize| {
        let mut j = i;
        j[axis] = (j[axis] as isize + by) as usize;
        j
    };

    for it in 1..nt - 1 {
        for i1 in 1..n1 - 1 {
            for i2 in 1..n2 - 1 {
                for i3 in 1..n3 - 1 {
                    let i = [it, i1, i2, i3];
                    let center = field.get(i);

                    // rho u_tt by the central second difference in time.
                    let up = field.get(shift(i, 0, 1));
                    let dn = field.get(shift(i, 0, -1));
                    let mut res = [czero(); 3];
                    for c in 0..3 {
                        res[c] = rho_e * (up[c] - 2.0 * center[c] + dn[c]) / (dt * dt);
                    }

                    // mu Laplace u.
                    for axis in 0..3 {
                        let p = field.get(shift(i, axis + 1, 1));
                        let m = field.get(shift(i, axis + 1, -1));
                        let h2a = hs[axis] * hs[axis];
                        for c in 0..3 {
                            res[c] -= mu_e * (p[c] - 2.0 * center[c] + m[c]) / h2a;
                        }
                    }

                    // (lambda + mu) d_i d_j u_j with mixed central stencils.
                    for i_ax in 0..3 {
                        let mut grad_div = czero();
                        for j_ax in 0..3 {
                            let d2 = if i_ax == j_ax {
                                let p = field.get(shift(i, i_ax + 1, 1));
                                let m = field.get(shift(i, i_ax + 1, -1));
                                (p[j_ax] - 2.0 * center[j_ax] + m[j_ax]) / (hs[i_ax] * hs[i_ax])
                            } else {
                                let pp = field.get(shift(shift(i, i_ax + 1, 1), j_ax + 1, 1));
                                let pm = field.get(shift(shift(i, i_ax + 1, 1), j_ax + 1, -1));
                                let mp = field.get(shift(shift(i, i_ax + 1, -1), j_ax + 1, 1));
                                let mm = field.get(shift(shift(i, i_ax + 1, -1), j_ax + 1, -1));
                                (pp[j_ax] - pm[j_ax] - mp[j_ax] + mm[j_ax])
                                    / (4.0 * hs[i_ax] * hs[j_ax])
                            };
                            grad_div += d2;
                        }
                        res[i_ax] -= (lambda_e + mu_e) * grad_div;
                    }

                    data.push((res[0].norm_sqr() + res[1].norm_sqr() + res[2].norm_sqr()).sqrt());
                }
            }
        }
    }

    Ok(ScalarField {
        data,
        shape: out_shape,
        spacing: field.spacing,
    })
}
