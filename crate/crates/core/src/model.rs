//! Problem data: media, strip geometry, absorbing-layer profile, and the
//! Laplace frequency line.
//!
//! The scatterer occupies the strip `h2 < x3 < h1` around a flat interface
//! `x3 = f0`; medium 1 fills the upper half-space `x3 > f0` and medium 2 the
//! lower one.  Truncation replaces each half-space tail by an absorbing layer
//! of thickness `L_j` in which the depth coordinate is stretched by the real
//! profile
//!
//! ```text
//! sigma(x3) = 1                                   for  h2 <= x3 <= h1
//!             1 + sigma1/s1 * ((x3-h1)/L1)^m      for  h1 < x3 <= h1+L1
//!             1 + sigma2/s1 * ((h2-x3)/L2)^m      for  h2-L2 <= x3 < h2
//! ```
//!
//! Integrating `sigma` gives the stretched coordinate; the stretched layer
//! thicknesses and the decay scale `Lbar_j = sigma_j L_j/(m+1)` govern every
//! truncation-error bound in [`crate::bounds`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which half-space (and absorbing layer) a quantity belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Layer {
    /// Medium 1, above the interface (`x3 > f0`), truncated above `h1`.
    Upper,
    /// Medium 2, below the interface (`x3 < f0`), truncated below `h2`.
    Lower,
}

impl Layer {
    /// Conventional index: 1 for the upper medium, 2 for the lower.
    pub fn index(self) -> usize {
        match self {
            Layer::Upper => 1,
            Layer::Lower => 2,
        }
    }

    /// Both layers, upper first.
    pub const BOTH: [Layer; 2] = [Layer::Upper, Layer::Lower];
}

impl std::fmt::Display for Layer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Lamé parameters and density for the elastic algebra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LameParams {
    /// First Lamé parameter λ (may be negative within admissibility).
    pub lambda: f64,
    /// Shear modulus μ > 0.
    pub mu: f64,
    /// Mass density ρ > 0.
    pub rho: f64,
}

impl LameParams {
    /// Validate `mu > 0`, `3 lambda + 2 mu > 0`, `rho > 0`.
    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() || self.mu <= 0.0 {
            return Err(Error::invalid("mu", format!("must be > 0, got {}", self.mu)));
        }
        if !self.lambda.is_finite() || 3.0 * self.lambda + 2.0 * self.mu <= 0.0 {
            return Err(Error::invalid(
                "lambda",
                format!(
                    "requires 3*lambda + 2*mu > 0, got lambda={} mu={}",
                    self.lambda, self.mu
                ),
            ));
        }
        if !self.rho.is_finite() || self.rho <= 0.0 {
            return Err(Error::invalid("rho", format!("must be > 0, got {}", self.rho)));
        }
        Ok(())
    }
}

/// Electromagnetic material constants of the two media, with optional elastic
/// constants for the lower solid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    /// Permittivity of the upper medium.
    pub eps1: f64,
    /// Permeability of the upper medium.
    pub mu1: f64,
    /// Permittivity of the lower medium.
    pub eps2: f64,
    /// Permeability of the lower medium.
    pub mu2: f64,
    /// Lamé constants of the lower solid, when the elastic coupling is used.
    pub elastic: Option<LameParams>,
}

impl MediumParams {
    /// Electromagnetic constants only; all four must be positive and finite.
    pub fn new(eps1: f64, mu1: f64, eps2: f64, mu2: f64) -> Result<Self> {
        let v = MediumParams {
            eps1,
            mu1,
            eps2,
            mu2,
            elastic: None,
        };
        v.validate()?;
        Ok(v)
    }

    /// Vacuum-normalized constants (all ones) — the default benchmark medium.
    pub fn unit() -> Self {
        MediumParams {
            eps1: 1.0,
            mu1: 1.0,
            eps2: 1.0,
            mu2: 1.0,
            elastic: None,
        }
    }

    /// Attach elastic constants (validated).
    pub fn with_elastic(mut self, lame: LameParams) -> Result<Self> {
        lame.validate()?;
        self.elastic = Some(lame);
        Ok(self)
    }

    /// Validate positivity of the electromagnetic constants.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps1", self.eps1),
            ("mu1", self.mu1),
            ("eps2", self.eps2),
            ("mu2", self.mu2),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if let Some(l) = &self.elastic {
            l.validate()?;
        }
        Ok(())
    }

    /// Permittivity of the requested layer.
    pub fn eps(&self, layer: Layer) -> f64 {
        match layer {
            Layer::Upper => self.eps1,
            Layer::Lower => self.eps2,
        }
    }

    /// Permeability of the requested layer.
    pub fn mu(&self, layer: Layer) -> f64 {
        match layer {
            Layer::Upper => self.mu1,
            Layer::Lower => self.mu2,
        }
    }

    /// Product `eps_j * mu_j` (inverse squared wave speed) of the layer.
    pub fn eps_mu(&self, layer: Layer) -> f64 {
        self.eps(layer) * self.mu(layer)
    }
}

/// Sampled interface profile.  Only the constant profile activates solver
/// paths; non-constant samples are carried as data and rejected by solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSamples {
    /// Interface heights sampled over the tangential plane.
    pub values: Vec<f64>,
}

impl SurfaceSamples {
    /// True when every sample equals `f0` exactly.
    pub fn is_flat(&self, f0: f64) -> bool {
        self.values.iter().all(|&v| v == f0)
    }
}

/// Truncation strip `h2 < x3 < h1` around the interface level `f0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripGeometry {
    /// Upper truncation plane.
    pub h1: f64,
    /// Lower truncation plane.
    pub h2: f64,
    /// Interface level (flat case).
    pub f0: f64,
    /// Optional sampled interface profile; must be flat for solves.
    pub surface: Option<SurfaceSamples>,
}

impl StripGeometry {
    /// Build and validate `h2 < f0 < h1`.
    pub fn new(h1: f64, h2: f64, f0: f64) -> Result<Self> {
        let g = StripGeometry {
            h1,
            h2,
            f0,
            surface: None,
        };
        g.validate()?;
        Ok(g)
    }

    /// Symmetric strip of half-height 1 around a flat interface at 0.
    pub fn unit() -> Self {
        StripGeometry {
            h1: 1.0,
            h2: -1.0,
            f0: 0.0,
            surface: None,
        }
    }

    /// Validate ordering and finiteness.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("h1", self.h1), ("h2", self.h2), ("f0", self.f0)] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if !(self.h2 < self.f0 && self.f0 < self.h1) {
            return Err(Error::invalid(
                "f0",
                format!(
                    "strip ordering requires h2 < f0 < h1, got h2={} f0={} h1={}",
                    self.h2, self.f0, self.h1
                ),
            ));
        }
        Ok(())
    }

    /// Check that any attached surface samples reduce to the flat interface.
    pub fn require_flat(&self) -> Result<()> {
        match &self.surface {
            Some(s) if !s.is_flat(self.f0) => Err(Error::CurvedInterface),
            _ => Ok(()),
        }
    }

    /// Strip height `h1 - h2`.
    pub fn height(&self) -> f64 {
        self.h1 - self.h2
    }
}

/// Absorbing-layer configuration: thicknesses, strengths, profile power, and
/// the real part of the Laplace line that scales the stretch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmlConfig {
    /// Upper layer thickness `L1 > 0`.
    pub l1: f64,
    /// Lower layer thickness `L2 > 0`.
    pub l2: f64,
    /// Upper stretch strength `sigma1 > 0`.
    pub sigma1: f64,
    /// Lower stretch strength `sigma2 > 0`.
    pub sigma2: f64,
    /// Integer profile power `m >= 1`.
    pub m: u32,
    /// Real part of the Laplace line, `s1 > 0`; the stretch scales like
    /// `sigma_j / s1`.
    pub s1: f64,
}

impl PmlConfig {
    /// Build and validate.
    pub fn new(l1: f64, l2: f64, sigma1: f64, sigma2: f64, m: u32, s1: f64) -> Result<Self> {
        let p = PmlConfig {
            l1,
            l2,
            sigma1,
            sigma2,
            m,
            s1,
        };
        p.validate()?;
        Ok(p)
    }

    /// Symmetric configuration with the same thickness and strength on both
    /// sides.
    pub fn symmetric(l: f64, sigma: f64, m: u32, s1: f64) -> Result<Self> {
        Self::new(l, l, sigma, sigma, m, s1)
    }

    /// Validate positivity and `m >= 1`.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("l1", self.l1),
            ("l2", self.l2),
            ("sigma1", self.sigma1),
            ("sigma2", self.sigma2),
            ("s1", self.s1),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if self.m < 1 {
            return Err(Error::invalid("m", "profile power must be >= 1"));
        }
        Ok(())
    }

    /// Thickness `L_j` of the requested layer.
    pub fn thickness(&self, layer: Layer) -> f64 {
        match layer {
            Layer::Upper => self.l1,
            Layer::Lower => self.l2,
        }
    }

    /// Strength `sigma_j` of the requested layer.
    pub fn strength(&self, layer: Layer) -> f64 {
        match layer {
            Layer::Upper => self.sigma1,
            Layer::Lower => self.sigma2,
        }
    }

    /// Largest strength, `max(sigma1, sigma2)`.
    pub fn sigma_max(&self) -> f64 {
        self.sigma1.max(self.sigma2)
    }
}

/// Point on the Laplace inversion line `s = s1 + i s2`, `s1 > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceFrequency {
    /// Real part (fixed along the line).
    pub s1: f64,
    /// Imaginary part (integration variable).
    pub s2: f64,
}

impl LaplaceFrequency {
    /// Build and validate `s1 > 0`.
    pub fn new(s1: f64, s2: f64) -> Result<Self> {
        if !s1.is_finite() || s1 <= 0.0 {
            return Err(Error::invalid("s1", format!("must be finite and > 0, got {s1}")));
        }
        if !s2.is_finite() {
            return Err(Error::invalid("s2", "must be finite"));
        }
        Ok(LaplaceFrequency { s1, s2 })
    }

    /// The complex frequency `s1 + i s2`.
    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.s1, self.s2)
    }

    /// Squared modulus `s1^2 + s2^2`.
    pub fn norm_sq(&self) -> f64 {
        self.s1 * self.s1 + self.s2 * self.s2
    }
}

/// Stretch profile `sigma(x3)` (1 inside the strip, polynomial ramp in the
/// layers).  `x3` must lie in `[h2 - L2, h1 + L1]`.
pub fn pml_profile(x3: f64, geo: &StripGeometry, pml: &PmlConfig) -> Result<f64> {
    let lo = geo.h2 - pml.l2;
    let hi = geo.h1 + pml.l1;
    if !(lo..=hi).contains(&x3) {
        return Err(Error::OutOfDomain {
            value: x3,
            min: lo,
            max: hi,
        });
    }
    let v = if x3 > geo.h1 {
        1.0 + pml.sigma1 / pml.s1 * ((x3 - geo.h1) / pml.l1).powi(pml.m as i32)
    } else if x3 < geo.h2 {
        1.0 + pml.sigma2 / pml.s1 * ((geo.h2 - x3) / pml.l2).powi(pml.m as i32)
    } else {
        1.0
    };
    Ok(v)
}

/// Stretched coordinate: the exact antiderivative of [`pml_profile`],
/// normalized so that the strip maps to itself (`xhat = x3` on
/// `[h2, h1]`).  Inside a layer the polynomial ramp integrates in closed
/// form, e.g. above `h1`:
///
/// ```text
/// xhat = x3 + sigma1/s1 * L1/(m+1) * ((x3-h1)/L1)^(m+1)
/// ```
pub fn stretched_coordinate(x3: f64, geo: &StripGeometry, pml: &PmlConfig) -> Result<f64> {
    let lo = geo.h2 - pml.l2;
    let hi = geo.h1 + pml.l1;
    if !(lo..=hi).contains(&x3) {
        return Err(Error::OutOfDomain {
            value: x3,
            min: lo,
            max: hi,
        });
    }
    let mp1 = (pml.m + 1) as f64;
    let v = if x3 > geo.h1 {
        let u = (x3 - geo.h1) / pml.l1;
        x3 + pml.sigma1 / pml.s1 * pml.l1 / mp1 * u.powi(pml.m as i32 + 1)
    } else if x3 < geo.h2 {
        let u = (geo.h2 - x3) / pml.l2;
        x3 - pml.sigma2 / pml.s1 * pml.l2 / mp1 * u.powi(pml.m as i32 + 1)
    } else {
        x3
    };
    Ok(v)
}

/// Invert [`stretched_coordinate`] within the layer regions by Newton
/// iteration (the map is strictly increasing with derivative `sigma >= 1`).
pub fn physical_coordinate(xhat: f64, geo: &StripGeometry, pml: &PmlConfig) -> Result<f64> {
    let lo = stretched_coordinate(geo.h2 - pml.l2, geo, pml)?;
    let hi = stretched_coordinate(geo.h1 + pml.l1, geo, pml)?;
    if !(lo..=hi).contains(&xhat) {
        return Err(Error::OutOfDomain {
            value: xhat,
            min: lo,
            max: hi,
        });
    }
    if (geo.h2..=geo.h1).contains(&xhat) {
        return Ok(xhat);
    }
    // Newton on g(x) = stretched(x) - xhat, derivative sigma(x) >= 1.
    let mut x = xhat.clamp(geo.h2 - pml.l2, geo.h1 + pml.l1);
    for _ in 0..100 {
        let g = stretched_coordinate(x, geo, pml)? - xhat;
        if g.abs() <= 1e-14 * (1.0 + xhat.abs()) {
            return Ok(x);
        }
        let d = pml_profile(x, geo, pml)?;
        x = (x - g / d).clamp(geo.h2 - pml.l2, geo.h1 + pml.l1);
    }
    Ok(x)
}

/// Stretched thickness of a layer:
/// `Ltilde_j = L_j + sigma_j/s1 * L_j/(m+1)`, always strictly greater than
/// the physical thickness `L_j`.
pub fn stretched_thickness(pml: &PmlConfig, layer: Layer) -> f64 {
    let l = pml.thickness(layer);
    let sigma = pml.strength(layer);
    l + sigma / pml.s1 * l / ((pml.m + 1) as f64)
}

/// Decay scale of a layer: `Lbar_j = sigma_j L_j / (m+1)`.  The truncation
/// error of the layer closure decays like `exp(-2 sqrt(eps mu) Lbar_j)`.
pub fn decay_scale(pml: &PmlConfig, layer: Layer) -> f64 {
    pml.strength(layer) * pml.thickness(layer) / ((pml.m + 1) as f64)
}
