//! Convergence harness: sweep one parameter of a pinned configuration,
//! measure a truncation error at every point next to its certified factor,
//! fit the exponential decay rate, and emit machine- and plot-friendly
//! outputs.
//!
//! Sweeps are deterministic: identical configuration and seed reproduce the
//! measured columns byte for byte.  The wall-time column is the one
//! explicitly exempted diagnostic.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::{convergence_prefactor, eta_duality, mj_bound, symbol_error_opnorm, truncation_factor};
use crate::config::{ErrorMetric, RunConfig, SweepParameter};
use crate::error::{Error, Result};
use crate::model::{LaplaceFrequency, Layer};
use crate::stripsolver::{mode_error, ModeProblem, SourceSpec, Termination};
use crate::symbols::{TransverseMode, XiGrid};
use crate::timedomain::{admissible_source, timedomain_mode_solution, BromwichGrid};

/// One sweep: the pinned configuration, the swept parameter with its points,
/// and the error measured at each point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Fixed snapshot every point is derived from.
    pub config: RunConfig,
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub metric: ErrorMetric,
}

impl SweepSpec {
    /// Read the sweep section out of a configuration.
    pub fn from_config(config: &RunConfig) -> Self {
        SweepSpec {
            parameter: config.sweep.parameter,
            values: config.sweep.values.clone(),
            metric: config.sweep.metric,
            config: config.clone(),
        }
    }
}

/// One measured sweep point.  A failed point keeps its row with NaN entries
/// so the sweep's shape is preserved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    /// Swept parameter name.
    pub parameter: String,
    /// Parameter value at this point.
    pub value: f64,
    /// Measured error (NaN when the point failed).
    pub error: f64,
    /// Certified factor evaluated at the same point (NaN when failed).
    pub bound: f64,
    /// Wall time of the point in seconds (diagnostic only; exempt from
    /// reproducibility comparisons).
    pub walltime: f64,
}

/// Exponential fit `error ~ exp(intercept + slope * value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Number of points that entered the fit.
    pub used: usize,
    /// Detected error floor (0 when none was detected).
    pub floor: f64,
}

fn apply_parameter(cfg: &RunConfig, parameter: SweepParameter, v: f64) -> Result<RunConfig> {
    let mut out = cfg.clone();
    match parameter {
        SweepParameter::L => {
            out.pml.l1 = v;
            out.pml.l2 = v;
        }
        SweepParameter::Sigma => {
            out.pml.sigma1 = v;
            out.pml.sigma2 = v;
        }
        SweepParameter::M => {
            if v < 1.0 || v.fract() != 0.0 {
                return Err(Error::invalid("m", "must be an integer of at least 1"));
            }
            out.pml.m = v as u32;
        }
        SweepParameter::S2 => {
            out.s = LaplaceFrequency::new(out.s.s1, v)?;
        }
    }
    out.validate()?;
    Ok(out)
}

fn depth_source(cfg: &RunConfig) -> Result<SourceSpec> {
    SourceSpec::tent(
        num_complex::Complex64::new(cfg.source.amplitude[0], cfg.source.amplitude[1]),
        cfg.source.center,
        cfg.source.half_width,
    )
}

/// Measure the configured error metric and its certified factor at one
/// configuration.
pub fn metric_and_bound(cfg: &RunConfig, metric: ErrorMetric) -> Result<(f64, f64)> {
    let xi = TransverseMode::new(cfg.xi[0], cfg.xi[1]);
    match metric {
        ErrorMetric::SymbolOpnorm => {
            let grid = XiGrid::radial_axis(20.0, 160)?;
            let mut measured: f64 = 0.0;
            let mut bound: f64 = 0.0;
            for &layer in Layer::BOTH.iter() {
                measured =
                    measured.max(symbol_error_opnorm(&cfg.medium, layer, cfg.s, &cfg.pml, &grid));
                bound = bound.max(mj_bound(&cfg.medium, layer, cfg.s, &cfg.pml));
            }
            Ok((measured, bound))
        }
        ErrorMetric::ModeError => {
            let source = depth_source(cfg)?;
            let err = mode_error(
                xi,
                cfg.s,
                &cfg.medium,
                &cfg.geometry,
                &cfg.pml,
                &source,
                cfg.polarization,
                cfg.n_per_segment,
            )?;
            let eta = eta_duality(&cfg.geometry);
            let factor = eta
                * eta
                * Layer::BOTH
                    .iter()
                    .map(|&l| mj_bound(&cfg.medium, l, cfg.s, &cfg.pml))
                    .sum::<f64>();
            Ok((err, factor))
        }
        ErrorMetric::TimeError => {
            let source = depth_source(cfg)?;
            let truncated_termination = match cfg.termination {
                Termination::Tbc => Termination::PmlSymbol,
                other => other,
            };
            let profile = admissible_source(&cfg.source.profile, cfg.source.horizon, cfg.source.samples)?;
            let line = BromwichGrid::new(cfg.s.s1, cfg.line.s_max, cfg.line.count)?;
            let s_line = LaplaceFrequency::new(cfg.s.s1, 0.0)?;
            let exact = ModeProblem::new(
                xi,
                s_line,
                cfg.polarization,
                Termination::Tbc,
                cfg.medium.clone(),
                cfg.geometry.clone(),
                None,
                source.clone(),
                cfg.n_per_segment,
            )?;
            let truncated = ModeProblem::new(
                xi,
                s_line,
                cfg.polarization,
                truncated_termination,
                cfg.medium.clone(),
                cfg.geometry.clone(),
                Some(cfg.pml),
                source,
                cfg.n_per_segment,
            )?;
            let probes = [
                0.5 * (cfg.geometry.h1 + cfg.geometry.f0),
                0.5 * (cfg.geometry.h2 + cfg.geometry.f0),
            ];
            let a = timedomain_mode_solution(&exact, &profile, &line, &probes)?;
            let b = timedomain_mode_solution(&truncated, &profile, &line, &probes)?;
            let horizon = cfg.source.horizon;
            let mut num = 0.0;
            let mut den = 0.0;
            for (sa, sb) in a.signals.iter().zip(&b.signals) {
                for (m, (za, zb)) in sa.samples.iter().zip(&sb.samples).enumerate() {
                    let t = m as f64 * sa.dt;
                    if t > horizon {
                        break;
                    }
                    num += (za - zb).norm_sqr();
                    den += za.norm_sqr();
                }
            }
            let err = if den > 0.0 {
                (num / den).sqrt()
            } else {
                num.sqrt()
            };
            let factor = convergence_prefactor(horizon, cfg.pml.sigma_max())
                * truncation_factor(&cfg.medium, &cfg.pml).sqrt();
            Ok((err, factor))
        }
    }
}

/// Run every point of a sweep in order.  Individual point failures are
/// recorded as NaN rows; the sweep itself only fails on an unusable spec.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    spec.config.validate()?;
    if spec.values.len() < 4 {
        return Err(Error::invalid(
            "values",
            format!("a sweep needs at least 4 points, got {}", spec.values.len()),
        ));
    }
    let mut records = Vec::with_capacity(spec.values.len());
    for &v in &spec.values {
        let t0 = Instant::now();
        let (error, bound) = match apply_parameter(&spec.config, spec.parameter, v)
            .and_then(|cfg| metric_and_bound(&cfg, spec.metric))
        {
            Ok(pair) => pair,
            Err(_) => (f64::NAN, f64::NAN),
        };
        records.push(SweepRecord {
            parameter: spec.parameter.to_string(),
            value: v,
            error,
            bound,
            walltime: t0.elapsed().as_secs_f64(),
        });
    }
    Ok(records)
}

/// Least-squares fit of `ln error` against the parameter value.
///
/// Saturation handling: when the errors at the two largest parameter values
/// differ by less than a factor of 1.5, their mean is taken as the error
/// floor and every point within a factor of 10 of that floor is excluded
/// from the fit.  Fewer than four surviving points is an error.
pub fn fit_decay_rate(records: &[SweepRecord]) -> Result<DecayFit> {
    let mut usable: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.value.is_finite() && r.error.is_finite() && r.error > 0.0)
        .map(|r| (r.value, r.error))
        .collect();
    usable.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));

    let mut floor = 0.0;
    if usable.len() >= 2 {
        let e_last = usable[usable.len() - 1].1;
        let e_prev = usable[usable.len() - 2].1;
        let ratio = e_last.max(e_prev) / e_last.min(e_prev).max(1e-300);
        if ratio < 1.5 {
            floor = 0.5 * (e_last + e_prev);
        }
    }
    let kept: Vec<(f64, f64)> = usable
        .into_iter()
        .filter(|&(_, e)| floor == 0.0 || e >= 10.0 * floor)
        .collect();
    if kept.len() < 4 {
        return Err(Error::NotEnoughData(
            "fewer than four usable sweep points above the error floor",
        ));
    }

    let n = kept.len() as f64;
    let mx = kept.iter().map(|p| p.0).sum::<f64>() / n;
    let my = kept.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxx: f64 = kept.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = kept.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = kept
        .iter()
        .map(|p| {
            let r = p.1.ln() - (intercept + slope * p.0);
            r * r
        })
        .sum();
    let ss_tot: f64 = kept.iter().map(|p| (p.1.ln() - my) * (p.1.ln() - my)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(DecayFit {
        slope,
        intercept,
        r2,
        used: kept.len(),
        floor,
    })
}

/// Paths written by [`emit_outputs`].
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutputs {
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub plot: PathBuf,
}

/// Everything the JSON summary records about a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub parameter: String,
    pub metric: String,
    pub fit: Option<DecayFit>,
    pub records: Vec<SweepRecord>,
}

fn format_record(r: &SweepRecord) -> String {
    format!(
        "{},{:.16e},{:.16e},{:.16e},{:.16e}",
        r.parameter, r.value, r.error, r.bound, r.walltime
    )
}

/// Render the CSV document (header plus one line per record).
pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from("param,value,error,bound,walltime\n");
    for r in records {
        let _ = writeln!(out, "{}", format_record(r));
    }
    out
}

/// Parse a CSV document produced by [`sweep_csv`].
pub fn read_sweep_csv(text: &str) -> Result<Vec<SweepRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some("param,value,error,bound,walltime") => {}
        other => {
            return Err(Error::Config(format!(
                "unexpected sweep CSV header: {other:?}"
            )))
        }
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Config(format!(
                "sweep CSV row {} has {} fields",
                i + 2,
                fields.len()
            )));
        }
        let num = |j: usize| -> Result<f64> {
            fields[j]
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("sweep CSV row {}: {e}", i + 2)))
        };
        records.push(SweepRecord {
            parameter: fields[0].to_string(),
            value: num(1)?,
            error: num(2)?,
            bound: num(3)?,
            walltime: num(4)?,
        });
    }
    Ok(records)
}

fn plot_script(parameter: &str, metric: &str, fit: Option<&DecayFit>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# decay of {metric} against {parameter}");
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set logscale y");
    let _ = writeln!(s, "set xlabel '{parameter}'");
    let _ = writeln!(s, "set ylabel '{metric}'");
    let _ = writeln!(s, "set key top right");
    let mut plot = String::from(
        "plot 'sweep.csv' every ::1 using 2:3 with linespoints title 'measured', \\\n     'sweep.csv' every ::1 using 2:4 with lines title 'certified factor'",
    );
    if let Some(f) = fit {
        let _ = write!(
            plot,
            ", \\\n     exp({:.16e} + {:.16e}*x) with lines dashtype 2 title 'fit'",
            f.intercept, f.slope
        );
    }
    let _ = writeln!(s, "{plot}");
    s
}

/// Write the CSV table, the JSON summary, and a gnuplot script into
/// `out_dir`.  The CSV and the summary (wall times aside) are byte-identical
/// across reruns of the same configuration and seed.
pub fn emit_outputs(
    records: &[SweepRecord],
    fit: Option<&DecayFit>,
    config: &RunConfig,
    out_dir: &Path,
) -> Result<SweepOutputs> {
    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join("sweep.csv");
    std::fs::write(&csv_path, sweep_csv(records))?;

    let summary = SweepSummary {
        schema_version: config.schema_version,
        config_hash: config.config_hash_hex(),
        seed: config.seed,
        parameter: config.sweep.parameter.to_string(),
        metric: config.sweep.metric.to_string(),
        fit: fit.copied(),
        records: records.to_vec(),
    };
    let summary_path = out_dir.join("sweep.json");
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    std::fs::write(&summary_path, text)?;

    let plot_path = out_dir.join("sweep.plt");
    std::fs::write(
        &plot_path,
        plot_script(
            &config.sweep.parameter.to_string(),
            &config.sweep.metric.to_string(),
            fit,
        ),
    )?;
    Ok(SweepOutputs {
        csv: csv_path,
        summary: summary_path,
        plot: plot_path,
    })
}
