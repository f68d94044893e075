//! Subcommand implementations.  Data goes to stdout or files under the run's
//! output directory; progress and diagnostics go to stderr through [`Log`].

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use layerwave::bounds::{bound_report, mj_bound, symbol_error_opnorm, BoundReport};
use layerwave::harness::{emit_outputs, fit_decay_rate, run_sweep, SweepSpec};
use layerwave::stripsolver::{solve_mode, stability_ratios};
use layerwave::symbols::{dual_weighted_opnorm, etm_exact, etm_pml};
use layerwave::timedomain::{admissible_source, timedomain_mode_solution};
use layerwave::{
    BromwichGrid, Error, Layer, LaplaceFrequency, ModeProblem, Polarization, Result, RunConfig,
    SourceSpec, Termination, TransverseMode, XiGrid,
};

use crate::Log;

/// Shared command context: the resolved configuration, the output directory,
/// and the logger.
pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub out: &'a Path,
    pub log: Log,
}

/// What a completed subcommand reports back: the files it wrote (for the run
/// manifest) and whether its numerical checks all passed.
pub struct CmdOutcome {
    pub files: Vec<PathBuf>,
    pub ok: bool,
}

impl CmdOutcome {
    fn ok(files: Vec<PathBuf>) -> Self {
        CmdOutcome { files, ok: true }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum LayerArg {
    Upper,
    Lower,
    Both,
}

impl LayerArg {
    fn layers(self) -> &'static [Layer] {
        match self {
            LayerArg::Upper => &[Layer::Upper],
            LayerArg::Lower => &[Layer::Lower],
            LayerArg::Both => &Layer::BOTH,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum TerminationArg {
    /// Exact transparent boundary map.
    Tbc,
    /// Absorbing layer folded into a Robin closure at the strip walls.
    PmlSymbol,
    /// Absorbing layer resolved as a stretched segment capped by a
    /// perfect conductor.
    PmlLayer,
}

impl From<TerminationArg> for Termination {
    fn from(t: TerminationArg) -> Termination {
        match t {
            TerminationArg::Tbc => Termination::Tbc,
            TerminationArg::PmlSymbol => Termination::PmlSymbol,
            TerminationArg::PmlLayer => Termination::PmlLayer,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum PolarizationArg {
    Te,
    Tm,
}

impl From<PolarizationArg> for Polarization {
    fn from(p: PolarizationArg) -> Polarization {
        match p {
            PolarizationArg::Te => Polarization::Te,
            PolarizationArg::Tm => Polarization::Tm,
        }
    }
}

/// Apply `--s1/--s2` overrides.  The stretch strength scale of the absorbing
/// layer tracks the line abscissa, so overriding `s1` re-anchors the layer
/// configuration as well.
fn override_frequency(cfg: &RunConfig, s1: Option<f64>, s2: Option<f64>) -> Result<RunConfig> {
    let mut out = cfg.clone();
    if let Some(v) = s1 {
        out.s = LaplaceFrequency::new(v, out.s.s2)?;
        out.pml.s1 = v;
    }
    if let Some(v) = s2 {
        out.s = LaplaceFrequency::new(out.s.s1, v)?;
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

fn write_file(out: &Path, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(out)?;
    let path = out.join(name);
    std::fs::write(&path, text)?;
    Ok(path)
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    /// Line abscissa override (also re-anchors the layer stretch scale).
    #[arg(long, value_name = "S1")]
    pub s1: Option<f64>,

    /// Line ordinate override.
    #[arg(long, value_name = "S2")]
    pub s2: Option<f64>,

    /// Which half-space to report.
    #[arg(long, value_enum, default_value_t = LayerArg::Upper)]
    pub layer: LayerArg,

    /// Radius of the tangential-frequency grid used for the measured norm.
    #[arg(long, default_value_t = 20.0, value_name = "R")]
    pub xi_max: f64,

    /// Number of grid modes along the radius.
    #[arg(long, default_value_t = 160, value_name = "N")]
    pub xi_count: usize,
}

pub fn bound(ctx: &Ctx, args: &BoundArgs) -> Result<CmdOutcome> {
    let cfg = override_frequency(ctx.cfg, args.s1, args.s2)?;
    let grid = XiGrid::radial_axis(args.xi_max, args.xi_count)?;
    println!("{}", BoundReport::csv_header());
    for &layer in args.layer.layers() {
        let report = bound_report(&cfg.medium, layer, cfg.s, &cfg.pml, &grid);
        println!("{}", report.csv_row());
        ctx.log.debug(format!(
            "{layer}: measured/certified = {:.16e}",
            report.measured_opnorm / report.m_bound
        ));
    }
    Ok(CmdOutcome::ok(vec![]))
}

#[derive(Args, Debug)]
pub struct SymbolErrorArgs {
    /// Line abscissa override (also re-anchors the layer stretch scale).
    #[arg(long, value_name = "S1")]
    pub s1: Option<f64>,

    /// Line ordinate override.
    #[arg(long, value_name = "S2")]
    pub s2: Option<f64>,

    /// Radius of the tangential-frequency grid.
    #[arg(long, default_value_t = 20.0, value_name = "R")]
    pub xi_max: f64,

    /// Number of grid modes along the radius.
    #[arg(long, default_value_t = 160, value_name = "N")]
    pub xi_count: usize,
}

/// Layer summary on stdout; the per-mode deviation profile goes to
/// `symbol-error.csv` for plotting.
pub fn symbol_error(ctx: &Ctx, args: &SymbolErrorArgs) -> Result<CmdOutcome> {
    let cfg = override_frequency(ctx.cfg, args.s1, args.s2)?;
    let grid = XiGrid::radial_axis(args.xi_max, args.xi_count)?;

    println!("layer,measured_opnorm,certified_factor,ratio");
    for &layer in Layer::BOTH.iter() {
        let measured = symbol_error_opnorm(&cfg.medium, layer, cfg.s, &cfg.pml, &grid);
        let certified = mj_bound(&cfg.medium, layer, cfg.s, &cfg.pml);
        println!(
            "{layer},{measured:.16e},{certified:.16e},{:.16e}",
            measured / certified
        );
    }

    let mut csv = String::from("xi1,xi2,deviation_upper,deviation_lower\n");
    for &mode in &grid.modes {
        let dev = |layer| {
            dual_weighted_opnorm(
                &etm_exact(&cfg.medium, layer, cfg.s, mode),
                &etm_pml(&cfg.medium, layer, cfg.s, mode, &cfg.pml),
                mode,
            )
        };
        csv.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e}\n",
            mode.xi1,
            mode.xi2,
            dev(Layer::Upper),
            dev(Layer::Lower)
        ));
    }
    let path = write_file(ctx.out, "symbol-error.csv", &csv)?;
    ctx.log.info(format!(
        "per-mode deviation profile: {} ({} modes)",
        path.display(),
        grid.modes.len()
    ));
    Ok(CmdOutcome::ok(vec![path]))
}

#[derive(Args, Debug)]
pub struct SolveModeArgs {
    /// Termination override for the strip closure.
    #[arg(long, value_enum)]
    pub termination: Option<TerminationArg>,

    /// Polarization override.
    #[arg(long, value_enum)]
    pub polarization: Option<PolarizationArg>,
}

fn build_problem(
    cfg: &RunConfig,
    xi: TransverseMode,
    termination: Termination,
    polarization: Polarization,
) -> Result<ModeProblem> {
    let pml = match termination {
        Termination::Tbc => None,
        _ => Some(cfg.pml),
    };
    ModeProblem::new(
        xi,
        cfg.s,
        polarization,
        termination,
        cfg.medium.clone(),
        cfg.geometry.clone(),
        pml,
        depth_source(cfg)?,
        cfg.n_per_segment,
    )
}

pub fn solve_mode_cmd(ctx: &Ctx, args: &SolveModeArgs) -> Result<CmdOutcome> {
    let cfg = ctx.cfg;
    let termination = args.termination.map(Into::into).unwrap_or(cfg.termination);
    let polarization = args
        .polarization
        .map(Into::into)
        .unwrap_or(cfg.polarization);
    let xi = TransverseMode::new(cfg.xi[0], cfg.xi[1]);
    let problem = build_problem(cfg, xi, termination, polarization)?;
    let sol = solve_mode(&problem)?;

    let mut csv = String::from("x3,re,im\n");
    for (&x, v) in sol.problem.grid.nodes.iter().zip(&sol.values) {
        csv.push_str(&format!("{x:.16e},{:.16e},{:.16e}\n", v.re, v.im));
    }
    let path = write_file(ctx.out, "mode.csv", &csv)?;

    let (plain, inflated) = stability_ratios(&sol);
    ctx.log.debug(format!(
        "mode xi=({:.16e},{:.16e}): residual {:.16e}, stability {plain:.16e} (inflated {inflated:.16e})",
        xi.xi1, xi.xi2, sol.residual
    ));
    let peak = sol.values.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    ctx.log.info(format!(
        "mode solve: {} depth nodes, residual {:.16e}, peak |u| {peak:.16e} -> {}",
        sol.values.len(),
        sol.residual,
        path.display()
    ));
    Ok(CmdOutcome::ok(vec![path]))
}

#[derive(Args, Debug)]
pub struct SolveStripArgs {
    /// Half-width of the square tangential-frequency lattice.
    #[arg(long, default_value_t = 8.0, value_name = "R")]
    pub xi_max: f64,

    /// Lattice points per axis.
    #[arg(long, default_value_t = 5, value_name = "N")]
    pub per_axis: usize,

    /// Termination override for the strip closure.
    #[arg(long, value_enum)]
    pub termination: Option<TerminationArg>,
}

/// Solve every lattice mode with the configured depth source, writing one
/// CSV with the per-mode depth profiles and a plain-text lattice manifest.
pub fn solve_strip(ctx: &Ctx, args: &SolveStripArgs) -> Result<CmdOutcome> {
    let cfg = ctx.cfg;
    let termination = args.termination.map(Into::into).unwrap_or(cfg.termination);
    let lattice = XiGrid::tensor(args.xi_max, args.per_axis)?;

    let mut profiles: Vec<Vec<num_complex::Complex64>> = Vec::with_capacity(lattice.len());
    let mut nodes: Option<Vec<f64>> = None;
    let mut worst_residual: f64 = 0.0;
    for (k, &mode) in lattice.modes.iter().enumerate() {
        let problem = build_problem(cfg, mode, termination, cfg.polarization)?;
        let sol = solve_mode(&problem)?;
        ctx.log.debug(format!(
            "mode {k} xi=({:.16e},{:.16e}): residual {:.16e}",
            mode.xi1, mode.xi2, sol.residual
        ));
        worst_residual = worst_residual.max(sol.residual);
        if nodes.is_none() {
            nodes = Some(sol.problem.grid.nodes.clone());
        }
        profiles.push(sol.values);
    }
    let nodes = nodes.expect("lattice is nonempty");

    let mut header = String::from("x3");
    for k in 0..profiles.len() {
        header.push_str(&format!(",re_{k},im_{k}"));
    }
    header.push('\n');
    let mut csv = header;
    for (iz, &x) in nodes.iter().enumerate() {
        csv.push_str(&format!("{x:.16e}"));
        for profile in &profiles {
            csv.push_str(&format!(",{:.16e},{:.16e}", profile[iz].re, profile[iz].im));
        }
        csv.push('\n');
    }
    let csv_path = write_file(ctx.out, "strip-modes.csv", &csv)?;

    let mut manifest = String::from("# mode lattice: index xi1 xi2 weight\n");
    for (k, (&mode, &w)) in lattice.modes.iter().zip(&lattice.weights).enumerate() {
        manifest.push_str(&format!(
            "{k} {:.16e} {:.16e} {w:.16e}\n",
            mode.xi1, mode.xi2
        ));
    }
    let lattice_path = write_file(ctx.out, "lattice.txt", &manifest)?;

    ctx.log.info(format!(
        "strip solve: {} modes, worst residual {worst_residual:.16e} -> {}, {}",
        lattice.len(),
        csv_path.display(),
        lattice_path.display()
    ));
    Ok(CmdOutcome::ok(vec![csv_path, lattice_path]))
}

#[derive(Args, Debug)]
pub struct TimeSolveArgs {
    /// Probe depth (repeatable).  Must be a node of the depth grid.
    /// Defaults to the midpoints of the two physical layers.
    #[arg(long = "probe", value_name = "X3")]
    pub probes: Vec<f64>,
}

#[derive(serde::Serialize)]
struct TimeSolveDiagnostics {
    config_hash: String,
    s1: f64,
    s_max: f64,
    line_count: usize,
    dt: f64,
    horizon: f64,
    probes: Vec<f64>,
    edge_ratio: f64,
    aliasing_flagged: bool,
    pre_onset_energy_fraction: f64,
}

pub fn time_solve(ctx: &Ctx, args: &TimeSolveArgs) -> Result<CmdOutcome> {
    let cfg = ctx.cfg;
    let probes: Vec<f64> = if args.probes.is_empty() {
        vec![
            0.5 * (cfg.geometry.h1 + cfg.geometry.f0),
            0.5 * (cfg.geometry.h2 + cfg.geometry.f0),
        ]
    } else {
        args.probes.clone()
    };

    let source = admissible_source(&cfg.source.profile, cfg.source.horizon, cfg.source.samples)?;
    let grid = BromwichGrid::new(cfg.s.s1, cfg.line.s_max, cfg.line.count)?;
    let template = {
        let mut cfg_line = cfg.clone();
        cfg_line.s = LaplaceFrequency::new(cfg.s.s1, 0.0)?;
        build_problem(
            &cfg_line,
            TransverseMode::new(cfg.xi[0], cfg.xi[1]),
            cfg.termination,
            cfg.polarization,
        )?
    };
    let run = timedomain_mode_solution(&template, &source, &grid, &probes)?;

    let mut header = String::from("t");
    for &p in &probes {
        header.push_str(&format!(",re@{p},im@{p}"));
    }
    header.push('\n');
    let mut csv = header;
    let n = run.signals[0].len();
    for m in 0..n {
        csv.push_str(&format!("{:.16e}", m as f64 * run.signals[0].dt));
        for sig in &run.signals {
            csv.push_str(&format!(",{:.16e},{:.16e}", sig.samples[m].re, sig.samples[m].im));
        }
        csv.push('\n');
    }
    let csv_path = write_file(ctx.out, "timeseries.csv", &csv)?;

    // Same threshold as the inversion diagnostics: detectable edge content
    // means the outputs carry line-truncation noise of roughly this ratio,
    // amplified by e^{s1 t} toward the horizon.
    let aliasing_flagged = run.edge_ratio > 1e-8;
    if aliasing_flagged {
        ctx.log.info(format!(
            "warning: spectral content at the line edge is {:.16e} of the peak; \
             widen line.s_max or raise line.count in the configuration",
            run.edge_ratio
        ));
    }
    let diag = TimeSolveDiagnostics {
        config_hash: cfg.config_hash_hex(),
        s1: grid.s1,
        s_max: grid.s_max,
        line_count: grid.count,
        dt: grid.dt(),
        horizon: grid.horizon(),
        probes: probes.clone(),
        edge_ratio: run.edge_ratio,
        aliasing_flagged,
        pre_onset_energy_fraction: run.pre_onset_energy_fraction,
    };
    let mut diag_text = serde_json::to_string_pretty(&diag).expect("diagnostics serialize");
    diag_text.push('\n');
    let diag_path = write_file(ctx.out, "diagnostics.json", &diag_text)?;

    for (p, sig) in probes.iter().zip(&run.signals) {
        ctx.log.debug(format!(
            "probe {p}: peak {:.16e}, imaginary residue {:.16e}",
            sig.peak(),
            sig.max_imag()
        ));
    }
    ctx.log.info(format!(
        "time solve: {} line nodes, horizon {:.16e}, edge ratio {:.16e} -> {}, {}",
        grid.count,
        grid.horizon(),
        run.edge_ratio,
        csv_path.display(),
        diag_path.display()
    ));
    Ok(CmdOutcome::ok(vec![csv_path, diag_path]))
}

pub fn sweep(ctx: &Ctx) -> Result<CmdOutcome> {
    let spec = SweepSpec::from_config(ctx.cfg);
    let records = run_sweep(&spec)?;

    let usable = records.iter().filter(|r| r.error.is_finite()).count();
    if usable == 0 {
        return Err(Error::NotEnoughData("every sweep point failed"));
    }

    let fit = match fit_decay_rate(&records) {
        Ok(fit) => Some(fit),
        Err(err) => {
            ctx.log
                .info(format!("decay-rate fit unavailable: {err}; emitting data only"));
            None
        }
    };
    let outputs = emit_outputs(&records, fit.as_ref(), ctx.cfg, ctx.out)?;

    println!(
        "parameter,{}\npoints,{}\nusable,{usable}",
        spec.parameter,
        records.len()
    );
    if let Some(fit) = &fit {
        println!(
            "slope,{:.16e}\nintercept,{:.16e}\nr2,{:.16e}\nfloor,{:.16e}\nfit_points,{}",
            fit.slope, fit.intercept, fit.r2, fit.floor, fit.used
        );
    }
    ctx.log.info(format!(
        "sweep artifacts: {}, {}, {}",
        outputs.csv.display(),
        outputs.summary.display(),
        outputs.plot.display()
    ));
    Ok(CmdOutcome::ok(vec![outputs.csv, outputs.summary, outputs.plot]))
}
