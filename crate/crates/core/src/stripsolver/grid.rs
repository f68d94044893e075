//! Depth grids for the one-dimensional mode solves.
//!
//! The solve coordinate is the stretched depth: identical to physical depth on
//! the strip, and equal to the complex-stretch antiderivative's real
//! normalization inside an absorbing layer, where the per-mode equation has
//! constant coefficients. A grid is a union of uniform segments whose
//! boundaries are the geometric breakpoints (interface, truncation planes,
//! layer walls, plus any caller-requested alignment points such as source
//! knots), so every kink of the data sits on a node and second-order accuracy
//! of the centered stencils is preserved.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{stretched_thickness, Layer, PmlConfig, StripGeometry};

use super::Termination;

/// Matching tolerance used when deduplicating and locating breakpoints.
const BREAK_TOL: f64 = 1e-12;

/// One-dimensional solver grid: strictly increasing nodes grouped into
/// uniform segments between breakpoints, with the interface on a node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    /// Strictly increasing node coordinates in the solve (stretched) depth.
    pub nodes: Vec<f64>,
    /// Segment boundaries, including both end walls.
    pub breaks: Vec<f64>,
    /// Subintervals per segment.
    pub n_per_segment: usize,
    /// Node index of the material interface.
    pub interface_index: usize,
    /// Node indices of all interior breakpoints (interface included).
    pub junction_indices: Vec<usize>,
}

impl Grid1D {
    /// Builds a grid from explicit breakpoints. `f0` must be one of the
    /// breakpoints; each segment receives `n_per_segment >= 2` uniform
    /// subintervals.
    pub fn from_breakpoints(breaks: &[f64], n_per_segment: usize, f0: f64) -> Result<Self> {
        if breaks.len() < 2 {
            return Err(Error::invalid("breaks", "need at least two breakpoints"));
        }
        if n_per_segment < 2 {
            return Err(Error::invalid(
                "n_per_segment",
                "need at least two subintervals per segment",
            ));
        }
        for pair in breaks.windows(2) {
            if !(pair[1] > pair[0] + BREAK_TOL * pair[0].abs().max(1.0)) {
                return Err(Error::invalid(
                    "breaks",
                    format!("breakpoints must strictly increase, got {pair:?}"),
                ));
            }
        }
        if !breaks.iter().any(|&b| (b - f0).abs() <= BREAK_TOL) {
            return Err(Error::invalid(
                "breaks",
                "the interface depth must be a breakpoint",
            ));
        }

        let mut nodes = Vec::with_capacity(breaks.len() * n_per_segment + 1);
        let mut junction_indices = Vec::new();
        nodes.push(breaks[0]);
        for seg in breaks.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let h = (b - a) / n_per_segment as f64;
            for k in 1..n_per_segment {
                nodes.push(a + h * k as f64);
            }
            nodes.push(b);
            junction_indices.push(nodes.len() - 1);
        }
        // The final entry is the top wall, not an interior junction.
        junction_indices.pop();

        let interface_index = nodes
            .iter()
            .position(|&x| (x - f0).abs() <= BREAK_TOL)
            .expect("interface node exists by construction");

        Ok(Grid1D {
            nodes,
            breaks: breaks.to_vec(),
            n_per_segment,
            interface_index,
            junction_indices,
        })
    }

    /// Standard grid for a mode problem: the two strip segments
    /// `[h2, f0] | [f0, h1]`, extended by the stretched layer segments when
    /// the truncation resolves the absorbing layers explicitly.
    pub fn for_problem(
        geo: &StripGeometry,
        pml: Option<&PmlConfig>,
        termination: Termination,
        n_per_segment: usize,
    ) -> Result<Self> {
        Self::for_problem_with_breaks(geo, pml, termination, n_per_segment, &[])
    }

    /// Like [`Grid1D::for_problem`], with extra alignment breakpoints inside
    /// the strip (typically source knots) merged into the segment list.
    pub fn for_problem_with_breaks(
        geo: &StripGeometry,
        pml: Option<&PmlConfig>,
        termination: Termination,
        n_per_segment: usize,
        extra: &[f64],
    ) -> Result<Self> {
        geo.validate()?;
        let mut breaks = match termination {
            Termination::Tbc | Termination::PmlSymbol => vec![geo.h2, geo.f0, geo.h1],
            Termination::PmlLayer => {
                let pml = pml.ok_or_else(|| {
                    Error::invalid("pml", "layer-resolving truncation requires a layer config")
                })?;
                pml.validate()?;
                let lt1 = stretched_thickness(pml, Layer::Upper);
                let lt2 = stretched_thickness(pml, Layer::Lower);
                vec![geo.h2 - lt2, geo.h2, geo.f0, geo.h1, geo.h1 + lt1]
            }
        };
        for &x in extra {
            if !(x > geo.h2 && x < geo.h1) {
                return Err(Error::invalid(
                    "extra",
                    format!("alignment breakpoint {x} lies outside the strip"),
                ));
            }
            if !breaks.iter().any(|&b| (b - x).abs() <= BREAK_TOL) {
                breaks.push(x);
            }
        }
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Self::from_breakpoints(&breaks, n_per_segment, geo.f0)
    }

    /// Same breakpoints, twice the subintervals per segment: every spacing is
    /// halved and all old breakpoints remain nodes.
    pub fn refine(&self) -> Grid1D {
        Grid1D::from_breakpoints(&self.breaks, 2 * self.n_per_segment, self.interface_x())
            .expect("refinement of a valid grid is valid")
    }

    /// Depth of the interface node.
    pub fn interface_x(&self) -> f64 {
        self.nodes[self.interface_index]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Index of the node matching `x`, if one does (within an absolute and
    /// relative tolerance of `1e-12`).
    pub fn index_of(&self, x: f64) -> Option<usize> {
        self.nodes
            .iter()
            .position(|&n| (n - x).abs() <= BREAK_TOL * n.abs().max(1.0))
    }

    /// True if node `i` sits on an interior breakpoint.
    pub fn is_junction(&self, i: usize) -> bool {
        self.junction_indices.contains(&i)
    }

    /// Trapezoid quadrature weights over the whole grid (segment-wise
    /// trapezoid rule; junction nodes accumulate the half-weights of both
    /// adjacent segments).
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let n = self.nodes.len();
        let mut w = vec![0.0; n];
        for i in 0..n - 1 {
            let h = self.nodes[i + 1] - self.nodes[i];
            w[i] += 0.5 * h;
            w[i + 1] += 0.5 * h;
        }
        w
    }
}
