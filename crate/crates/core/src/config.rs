//! Run configuration: one JSON document that pins every knob of a run, plus
//! a stable 64-bit content hash so outputs can be traced back to the exact
//! configuration that produced them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LaplaceFrequency, MediumParams, PmlConfig, StripGeometry};
use crate::stripsolver::{Polarization, Termination};

/// Version of the configuration document layout.  Bumped whenever a field is
/// added, removed, or reinterpreted.
pub const SCHEMA_VERSION: u32 = 1;

/// Which scalar a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    /// Layer thickness (both sides together).
    L,
    /// Absorption strength (both sides together).
    Sigma,
    /// Profile exponent.
    M,
    /// Imaginary part of the Laplace frequency.
    S2,
}

impl std::fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            SweepParameter::L => "l",
            SweepParameter::Sigma => "sigma",
            SweepParameter::M => "m",
            SweepParameter::S2 => "s2",
        };
        write!(f, "{name}")
    }
}

/// Which error a sweep measures at each point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorMetric {
    /// Weighted norm of the difference between the transparent and the
    /// truncated-closure solve of one mode problem.
    ModeError,
    /// Relative `L^2(0, T)` distance between the time-domain probe signals of
    /// the transparent and the truncated runs.
    TimeError,
    /// Grid supremum of the weighted operator-norm error of the boundary
    /// symbol.
    SymbolOpnorm,
}

impl std::fmt::Display for ErrorMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ErrorMetric::ModeError => "mode-error",
            ErrorMetric::TimeError => "time-error",
            ErrorMetric::SymbolOpnorm => "symbol-opnorm",
        };
        write!(f, "{name}")
    }
}

/// Time profile driving a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSettings {
    /// Registered profile name (see the transform module).
    pub profile: String,
    /// Time horizon `T`.
    pub horizon: f64,
    /// Number of time samples of the profile.
    pub samples: usize,
    /// Complex amplitude of the depth source, stored as `(re, im)`.
    pub amplitude: [f64; 2],
    /// Center of the tent-shaped depth profile.
    pub center: f64,
    /// Half-width of the tent-shaped depth profile.
    pub half_width: f64,
}

/// Inversion-line resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSettings {
    /// Half-width of the imaginary-part window.
    pub s_max: f64,
    /// Number of line samples (even).
    pub count: usize,
}

/// Sweep section: parameter, points, and metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub metric: ErrorMetric,
}

/// Complete description of a run.  Field order is part of the canonical
/// serialization and must stay stable; see [`RunConfig::config_hash`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub seed: u64,
    pub medium: MediumParams,
    pub geometry: StripGeometry,
    pub pml: PmlConfig,
    pub polarization: Polarization,
    pub termination: Termination,
    /// Transverse mode `(xi1, xi2)`.
    pub xi: [f64; 2],
    pub s: LaplaceFrequency,
    /// Nodes per grid segment of the depth solver.
    pub n_per_segment: usize,
    pub source: SourceSettings,
    pub line: LineSettings,
    pub sweep: SweepSettings,
}

/// FNV-1a 64-bit hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl RunConfig {
    /// Moderate-cost configuration with contrasting media; the default.
    pub fn quick() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            seed: 7,
            medium: MediumParams::new(2.0, 1.0, 1.5, 2.0).expect("static preset"),
            geometry: StripGeometry::unit(),
            pml: PmlConfig::symmetric(1.0, 2.0, 1, 0.5).expect("static preset"),
            polarization: Polarization::Te,
            termination: Termination::PmlSymbol,
            xi: [0.4, -0.2],
            s: LaplaceFrequency::new(0.5, 0.0).expect("static preset"),
            n_per_segment: 16,
            source: SourceSettings {
                profile: "pulse".into(),
                horizon: 10.0,
                samples: 2001,
                amplitude: [1.0, 0.0],
                center: -0.25,
                half_width: 0.25,
            },
            line: LineSettings {
                s_max: 40.0,
                count: 512,
            },
            sweep: SweepSettings {
                parameter: SweepParameter::L,
                values: vec![0.5, 1.0, 1.5, 2.0, 2.5],
                metric: ErrorMetric::SymbolOpnorm,
            },
        }
    }

    /// Reference reproduction run: unit media, linear profile, horizon 10,
    /// line abscissa `1/T`, thickness sweep against the time-domain error.
    pub fn repro() -> Self {
        let mut cfg = RunConfig::quick();
        cfg.seed = 1;
        cfg.medium = MediumParams::unit();
        cfg.pml = PmlConfig::symmetric(1.0, 2.0, 1, 0.1).expect("static preset");
        cfg.xi = [0.0, 0.0];
        cfg.s = LaplaceFrequency::new(0.1, 0.0).expect("static preset");
        cfg.sweep = SweepSettings {
            parameter: SweepParameter::L,
            values: vec![0.5, 1.0, 1.5, 2.0, 2.5],
            metric: ErrorMetric::TimeError,
        };
        cfg
    }

    /// Look up a named preset.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "quick" => Ok(RunConfig::quick()),
            "repro" => Ok(RunConfig::repro()),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }

    /// Parse a configuration document, then validate it.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical serialization: compact JSON with fields in declaration
    /// order.  This string (not the pretty form) feeds the content hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }

    /// Pretty serialization for files meant to be read by people.
    pub fn pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    /// 64-bit FNV-1a hash of the canonical serialization.
    pub fn config_hash(&self) -> u64 {
        fnv1a64(self.canonical_json().as_bytes())
    }

    /// The hash as fixed-width lowercase hex.
    pub fn config_hash_hex(&self) -> String {
        format!("{:016x}", self.config_hash())
    }

    /// Field-by-field validation, naming the failing key.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version: expected {SCHEMA_VERSION}, found {}",
                self.schema_version
            )));
        }
        self.medium
            .validate()
            .map_err(|e| Error::Config(format!("medium: {e}")))?;
        self.geometry
            .validate()
            .map_err(|e| Error::Config(format!("geometry: {e}")))?;
        self.pml
            .validate()
            .map_err(|e| Error::Config(format!("pml: {e}")))?;
        if (self.pml.s1 - self.s.s1).abs() > 1e-12 * self.s.s1.max(1.0) {
            return Err(Error::Config(
                "pml.s1: must match s.s1 (the stretch is tied to the line abscissa)".into(),
            ));
        }
        if !(self.xi[0].is_finite() && self.xi[1].is_finite()) {
            return Err(Error::Config("xi: components must be finite".into()));
        }
        if self.n_per_segment < 2 {
            return Err(Error::Config("n_per_segment: need at least 2".into()));
        }
        if !(self.source.horizon.is_finite() && self.source.horizon > 0.0) {
            return Err(Error::Config(
                "source.horizon: must be finite and > 0".into(),
            ));
        }
        if self.source.samples < 2 {
            return Err(Error::Config("source.samples: need at least 2".into()));
        }
        if !(self.source.half_width.is_finite() && self.source.half_width > 0.0) {
            return Err(Error::Config(
                "source.half_width: must be finite and > 0".into(),
            ));
        }
        let lo = self.source.center - self.source.half_width;
        let hi = self.source.center + self.source.half_width;
        if lo < self.geometry.h2 || hi > self.geometry.h1 {
            return Err(Error::Config(
                "source.center: tent support must lie inside the strip".into(),
            ));
        }
        if !(self.line.s_max.is_finite() && self.line.s_max > 0.0) {
            return Err(Error::Config("line.s_max: must be finite and > 0".into()));
        }
        if self.line.count < 8 || self.line.count % 2 != 0 {
            return Err(Error::Config(
                "line.count: need an even count of at least 8".into(),
            ));
        }
        if self.sweep.values.is_empty() {
            return Err(Error::Config("sweep.values: must not be empty".into()));
        }
        if self.sweep.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sweep.values: must be finite".into()));
        }
        Ok(())
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::quick()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_matches_published_fnv_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn presets_validate_and_round_trip() {
        for name in ["quick", "repro"] {
            let cfg = RunConfig::preset(name).unwrap();
            cfg.validate().unwrap();
            let back = RunConfig::from_json(&cfg.pretty_json()).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.config_hash(), cfg.config_hash());
        }
        assert!(matches!(
            RunConfig::preset("nope"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let cfg = RunConfig::quick();
        let h = cfg.config_hash_hex();
        assert_eq!(h.len(), 16);
        assert_eq!(h, cfg.clone().config_hash_hex());
        let mut other = cfg.clone();
        other.seed += 1;
        assert_ne!(other.config_hash_hex(), h);
        let mut other = cfg;
        other.sweep.values[0] += 1e-9;
        assert_ne!(other.config_hash_hex(), h);
    }

    #[test]
    fn validation_names_the_failing_key() {
        let mut cfg = RunConfig::quick();
        cfg.line.count = 7;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("line.count"), "{msg}");

        let mut cfg = RunConfig::quick();
        cfg.source.center = 5.0;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("source.center"), "{msg}");

        let mut cfg = RunConfig::quick();
        cfg.pml.s1 = 9.0;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("pml.s1"), "{msg}");

        let mut cfg = RunConfig::quick();
        cfg.schema_version = 99;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("schema_version"), "{msg}");

        let msg = RunConfig::from_json("{not json").unwrap_err().to_string();
        assert!(!msg.is_empty());
    }
}
