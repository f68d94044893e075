//! Numerical core for time-domain electromagnetic scattering by a two-layer
//! medium separated by a planar interface.
//!
//! The library works in the Laplace domain: a time problem is transformed
//! along a vertical line `s = s1 + i s2` (with fixed `s1 > 0`), each frequency
//! is reduced by a tangential Fourier transform to scalar two-point boundary
//! value problems in the depth coordinate, and time signals are recovered by
//! an FFT-based inversion of the line integral.
//!
//! The unbounded depth directions are closed in two interchangeable ways:
//!
//! * an exact electric-to-magnetic boundary map, applied per tangential mode
//!   as a 2×2 complex symbol ([`symbols`]),
//! * a real coordinate-stretch absorbing layer of finite thickness capped by
//!   a perfect conductor ([`model`], [`stripsolver`]).
//!
//! The difference between the two closures is controlled by explicit,
//! certified operator bounds with exponential decay in the stretched layer
//! thickness ([`bounds`]); the [`harness`] module measures that decay
//! empirically and fits the observed rates.  [`elastic`] carries the algebra
//! used when the lower medium is an elastic solid, and [`timedomain`]
//! implements the transform engine.
//!
//! Shared value types (`MediumParams`, `StripGeometry`, `PmlConfig`,
//! `LaplaceFrequency`, `TransverseMode`, …) are re-exported at the crate
//! root.

pub mod bounds;
pub mod config;
pub mod elastic;
pub mod error;
pub mod harness;
mod linalg;
pub mod model;
pub mod stripsolver;
pub mod symbols;
pub mod timedomain;

pub use config::{fnv1a64, RunConfig};
pub use error::{Error, Result};
pub use model::{Layer, LameParams, LaplaceFrequency, MediumParams, PmlConfig, StripGeometry};
pub use stripsolver::{
    Grid1D, ModeProblem, ModeSolution, Polarization, SourceSpec, Termination,
};
pub use symbols::{EtmSymbol, SymbolKind, TransverseMode, XiGrid};
pub use timedomain::{BromwichGrid, TimeSignal};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
