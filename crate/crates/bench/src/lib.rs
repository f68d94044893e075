//! Shared fixtures for the kernel benchmarks: one moderately contrasting
//! two-layer configuration, reused so numbers are comparable across groups.

use layerwave::{
    LaplaceFrequency, MediumParams, ModeProblem, PmlConfig, Polarization, RunConfig, SourceSpec,
    StripGeometry, Termination, TransverseMode,
};
use num_complex::Complex64;

pub fn medium() -> MediumParams {
    MediumParams::new(2.0, 1.0, 1.5, 2.0).expect("static fixture")
}

pub fn pml(s1: f64) -> PmlConfig {
    PmlConfig::symmetric(1.0, 2.0, 1, s1).expect("static fixture")
}

pub fn frequency() -> LaplaceFrequency {
    LaplaceFrequency::new(0.5, 3.0).expect("static fixture")
}

/// Strip problem matching the `quick` preset's geometry, at a representative
/// interior mode.
pub fn mode_problem(termination: Termination) -> ModeProblem {
    let cfg = RunConfig::preset("quick").expect("static preset");
    let s = frequency();
    let pml = match termination {
        Termination::Tbc => None,
        _ => Some(pml(s.s1)),
    };
    ModeProblem::new(
        TransverseMode::new(0.4, -0.2),
        s,
        Polarization::Te,
        termination,
        medium(),
        StripGeometry::unit(),
        pml,
        SourceSpec::tent(Complex64::new(1.0, 0.0), -0.25, 0.25).expect("static fixture"),
        cfg.n_per_segment,
    )
    .expect("static fixture")
}
