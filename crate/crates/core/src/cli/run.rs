//! The four experiment pipelines and their artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::{Experiment, InitialSpec, RunConfig};
use super::io;
use crate::energycoords::{forward_transform, solve_region, DirectorInitialData, EnergyGrid};
use crate::initial::{sample_profile, DirectorProfile, PlanarBlowupProfile, Sampling, Vacuum};
use crate::planar::{
    blowup_grid, blowup_initial_data, blowup_time_bound, run_planar, BlowupProfileSpec, PlanarRunOptions,
};
use crate::reconstruct::{
    attainable_time, extract_time_slice, hoelder_fit, integrate_coordinates, l2_distance, ReconstructError,
    TimeSlice,
};
use crate::refsolver::{fd_solve_director, snapshot_difference, uniform_director_state, FdOptions, Snapshot};
use crate::vec3::{lerp, normalize, reject};

#[derive(Debug)]
pub enum RunError {
    /// Bad configuration or input data (exit 2).
    Config(String),
    /// The solver could not complete (exit 3).
    Solver(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "invalid configuration: {m}"),
            RunError::Solver(m) => write!(f, "solver error: {m}"),
        }
    }
}

impl std::error::Error for RunError {}

fn solver<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Solver(e.to_string())
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |e| RunError::Config(format!("cannot write {}: {e}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub limit: f64,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), passed: value <= limit, value, limit }
    }

    fn flag(name: &str, passed: bool) -> Self {
        Self { name: name.into(), passed, value: if passed { 1.0 } else { 0.0 }, limit: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimedEnergy {
    pub t: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub experiment: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub wall_time_s: f64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub energy0: f64,
    pub min_h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_invariant_residual: Option<f64>,
    pub energies: Vec<TimedEnergy>,
}

/// What a pipeline produced, before timing is attached.
struct Summary {
    checks: Vec<Check>,
    energy0: f64,
    min_h: f64,
    max_invariant_residual: Option<f64>,
    energies: Vec<TimedEnergy>,
}

/// Runs the selected experiment, writes its artifacts and `manifest.json`
/// into `out`, and returns the manifest.
pub fn run(cfg: &RunConfig, experiment: Experiment, out: &Path) -> Result<Manifest, RunError> {
    cfg.validate().map_err(|e| RunError::Config(e.to_string()))?;
    if let Some(e) = cfg.experiment {
        if e != experiment {
            return Err(RunError::Config(format!(
                "experiment `{}` does not match subcommand `{}`",
                e.name(),
                experiment.name()
            )));
        }
    }
    std::fs::create_dir_all(out).map_err(io_error(out))?;
    let start = Instant::now();
    let summary = match experiment {
        Experiment::Simulate => simulate(cfg, out)?,
        Experiment::Verify => verify(cfg, out)?,
        Experiment::CompareFd => compare_fd(cfg, out)?,
        Experiment::BlowupDemo => blowup_demo(cfg, out)?,
    };
    let manifest = Manifest {
        experiment: experiment.name(),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
        passed: summary.checks.iter().all(|c| c.passed),
        checks: summary.checks,
        energy0: summary.energy0,
        min_h: summary.min_h,
        max_invariant_residual: summary.max_invariant_residual,
        energies: summary.energies,
    };
    let path = out.join("manifest.json");
    io::write_json(&path, &manifest).map_err(io_error(&path))?;
    Ok(manifest)
}

/// A built-in profile, if the initial data come from one.
fn profile(cfg: &RunConfig) -> Option<Box<dyn DirectorProfile>> {
    let params = cfg.material();
    match &cfg.initial {
        InitialSpec::Vacuum { n } => Some(Box::new(Vacuum { n: *n })),
        InitialSpec::Smooth { energy, shape } => Some(Box::new(match energy {
            Some(e) => shape.with_energy(&params, *e),
            None => *shape,
        })),
        InitialSpec::Blowup { .. } => {
            let spec = cfg.initial.blowup_spec(&params)?;
            Some(Box::new(PlanarBlowupProfile { spec, params }))
        }
        InitialSpec::Csv { .. } => None,
    }
}

/// Initial samples covering the source interval of the solve window.
pub fn initial_data(cfg: &RunConfig) -> Result<DirectorInitialData, RunError> {
    if let InitialSpec::Csv { path, planar } = &cfg.initial {
        return io::load_initial_csv(path, *planar).map_err(|e| RunError::Config(format!("{}: {e}", path.display())));
    }
    let solver_cfg = cfg.solver();
    let h = solver_cfg.step_x().min(solver_cfg.step_y());
    let reach = cfg.domain_radius + 2.0 * solver_cfg.step_x().max(solver_cfg.step_y());
    let step = cfg.sample_step.unwrap_or(h / 4.0);
    let sampling = Sampling { x_min: -reach, x_max: reach, arc_step: step, max_step: step };
    let prof = profile(cfg).expect("built-in profile");
    sample_profile(prof.as_ref(), &cfg.material(), &sampling).map_err(|e| RunError::Config(e.to_string()))
}

/// The solved energy-coordinate grid with its time slices.
pub struct EnergyRun {
    pub grid: EnergyGrid,
    pub times: Vec<f64>,
    pub slices: Vec<TimeSlice>,
}

fn default_times(attainable: f64) -> Vec<f64> {
    (0..10).map(|k| 0.9 * attainable * k as f64 / 9.0).collect()
}

pub fn energy_run(cfg: &RunConfig) -> Result<EnergyRun, RunError> {
    let params = cfg.material();
    let data = initial_data(cfg)?;
    let curve = forward_transform(&data, &params).map_err(|e| RunError::Config(e.to_string()))?;
    let grid = solve_region(&curve, &params, &cfg.solver()).map_err(solver)?;
    let grid = integrate_coordinates(grid).map_err(solver)?;
    let attainable = attainable_time(&grid);
    let times = if cfg.times.is_empty() { default_times(attainable) } else { cfg.times.clone() };
    let slices = times
        .iter()
        .map(|&t| {
            extract_time_slice(&grid, t).map_err(|e| match e {
                ReconstructError::Range { tau, max } => RunError::Config(format!(
                    "times: t = {tau} lies outside the attainable span [0, {max}) of this window"
                )),
                other => solver(other),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EnergyRun { grid, times, slices })
}

impl EnergyRun {
    fn energies(&self) -> Vec<TimedEnergy> {
        self.slices.iter().map(|s| TimedEnergy { t: s.tau, energy: s.energy }).collect()
    }

    /// `p, q > 0` and the row/column integral bound within 5 %.
    fn density_checks(&self) -> Vec<Check> {
        let d = self.grid.density_bounds();
        vec![
            Check::flag("p_q_positive", d.min_p > 0.0 && d.min_q > 0.0),
            Check::at_most("integral_bound_ratio", d.max_integral_ratio, 1.05),
        ]
    }

    /// Energy non-increasing between outputs and never above the initial
    /// value. Slices cover only the window's part of the line, so energy
    /// that leaves the window also counts as a decrease.
    fn energy_checks(&self, tolerance: f64) -> Vec<Check> {
        let e0 = self.grid.curve.energy0;
        let rise = self
            .slices
            .windows(2)
            .map(|w| w[1].energy - w[0].energy)
            .fold(0.0, f64::max);
        let excess = self.slices.iter().map(|s| s.energy - e0).fold(0.0, f64::max);
        vec![
            Check::at_most("energy_increase", rise, tolerance),
            Check::at_most("energy_above_initial", excess, tolerance),
        ]
    }

    fn min_h(&self) -> f64 {
        let (h1, h2) = self.grid.min_h();
        h1.min(h2)
    }

    fn summary(&self, checks: Vec<Check>) -> Summary {
        Summary {
            checks,
            energy0: self.grid.curve.energy0,
            min_h: self.min_h(),
            max_invariant_residual: Some(self.grid.max_invariant_residuals().max_abs()),
            energies: self.energies(),
        }
    }
}

fn slice_file(out: &Path, k: usize) -> PathBuf {
    out.join(format!("slice_{k:03}.csv"))
}

#[derive(Serialize)]
struct SliceIndex<'a> {
    file: String,
    t: f64,
    energy: f64,
    min_h: f64,
    points: usize,
    singular_positions: &'a [f64],
}

fn simulate(cfg: &RunConfig, out: &Path) -> Result<Summary, RunError> {
    let run = energy_run(cfg)?;
    let mut index = Vec::new();
    let singular: Vec<Vec<f64>> = run.slices.iter().map(|s| s.singular_positions()).collect();
    for (k, slice) in run.slices.iter().enumerate() {
        let path = slice_file(out, k);
        io::write_slice_csv(&path, slice).map_err(io_error(&path))?;
        index.push(SliceIndex {
            file: path.file_name().unwrap().to_string_lossy().into_owned(),
            t: slice.tau,
            energy: slice.energy,
            min_h: slice.min_h(),
            points: slice.points.len(),
            singular_positions: &singular[k],
        });
    }
    let path = out.join("slices.json");
    io::write_json(&path, &index).map_err(io_error(&path))?;
    let path = out.join("grid.csv");
    io::write_grid_csv(&path, &run.grid).map_err(io_error(&path))?;
    let path = out.join("grid_stats.json");
    io::write_json(&path, &run.grid.stats).map_err(io_error(&path))?;

    let mut checks = run.density_checks();
    checks.extend(run.energy_checks(cfg.energy_tolerance));
    Ok(run.summary(checks))
}

#[derive(Serialize)]
struct VerifyReport {
    residuals: [f64; 5],
    max_route_gap: f64,
    density: crate::energycoords::DensityBounds,
    lipschitz_ratio: f64,
    hoelder_constant: f64,
    hoelder_worst_excess: f64,
}

fn verify(cfg: &RunConfig, out: &Path) -> Result<Summary, RunError> {
    let run = energy_run(cfg)?;
    let residuals = run.grid.max_invariant_residuals();
    let mut checks = vec![Check::at_most("invariant_residual", residuals.max_abs(), cfg.residual_gate)];
    checks.extend(run.density_checks());
    checks.extend(run.energy_checks(cfg.energy_tolerance));

    // l2 distance of consecutive slices against |dt| sqrt(2 E0)
    let e0 = run.grid.curve.energy0;
    let mut lipschitz_ratio: f64 = 0.0;
    for w in run.slices.windows(2) {
        let allowed = (w[1].tau - w[0].tau) * (2.0 * e0).sqrt();
        let dist = l2_distance(&w[0], &w[1]).map_err(solver)?;
        if allowed > 0.0 {
            lipschitz_ratio = lipschitz_ratio.max(dist / allowed);
        } else if dist > 0.0 {
            lipschitz_ratio = f64::INFINITY;
        }
    }
    checks.push(Check::at_most("lipschitz_ratio", lipschitz_ratio, 1.05));

    // Hoelder-1/2 modulus of the latest slice
    let last = run.slices.last().expect("at least one slice");
    let fit = hoelder_fit(last, 400);
    if fit.constant > 0.0 {
        checks.push(Check::at_most("hoelder_worst_excess", fit.worst_excess, 1.2));
    }

    let report = VerifyReport {
        residuals: residuals.as_array(),
        max_route_gap: run.grid.stats.max_route_gap,
        density: run.grid.density_bounds(),
        lipschitz_ratio,
        hoelder_constant: fit.constant,
        hoelder_worst_excess: fit.worst_excess,
    };
    let path = out.join("verify.json");
    io::write_json(&path, &report).map_err(io_error(&path))?;
    Ok(run.summary(checks))
}

fn slice_snapshot(slice: &TimeSlice) -> Snapshot {
    Snapshot { time: slice.tau, x: slice.x(), values: slice.points.iter().map(|p| p.n).collect() }
}

fn uniform_grid(lo: f64, hi: f64, dx: f64) -> Vec<f64> {
    let cells = ((hi - lo) / dx).floor() as usize;
    (0..=cells).map(|k| lo + k as f64 * dx).collect()
}

/// Reference-solver data on a uniform grid: the non-constant part of a
/// built-in profile plus a margin, or the imported samples interpolated
/// linearly.
fn fd_initial(cfg: &RunConfig) -> Result<crate::refsolver::FdState, RunError> {
    let dx = cfg.fd_dx;
    if let Some(p) = profile(cfg) {
        let (a, b) = p.support();
        let x = uniform_grid((a / dx).floor() * dx - 4.0 * dx, (b / dx).ceil() * dx + 4.0 * dx + 0.5 * dx, dx);
        return Ok(uniform_director_state(x, |x| {
            let (n, nt, _) = p.eval(x);
            (n, nt)
        }));
    }
    let data = initial_data(cfg)?;
    let lo = (data.x[0] / dx).ceil() * dx;
    let x = uniform_grid(lo, data.x[data.len() - 1], dx);
    Ok(uniform_director_state(x, |x| {
        let k = crate::interp::bracket(&data.x, x);
        let w = ((x - data.x[k]) / (data.x[k + 1] - data.x[k])).clamp(0.0, 1.0);
        let n = normalize(lerp(data.n[k], data.n[k + 1], w));
        (n, reject(lerp(data.n_t[k], data.n_t[k + 1], w), n))
    }))
}

fn compare_fd(cfg: &RunConfig, out: &Path) -> Result<Summary, RunError> {
    let run = energy_run(cfg)?;
    let fd_init = fd_initial(cfg)?;
    let opts = FdOptions { dx: cfg.fd_dx, cfl: cfg.fd_cfl, ..Default::default() };
    let fd = fd_solve_director(&fd_init, &run.grid.params, &run.times, &opts).map_err(|e| match e {
        crate::refsolver::FdError::Input(m) => RunError::Config(m),
        other => solver(other),
    })?;
    let diffs = run
        .slices
        .iter()
        .zip(&fd)
        .map(|(s, f)| snapshot_difference(&slice_snapshot(s), &f.snapshot()).map_err(solver))
        .collect::<Result<Vec<_>, _>>()?;
    let path = out.join("compare_fd.csv");
    io::write_compare_csv(&path, &diffs).map_err(io_error(&path))?;
    let worst = diffs.iter().map(|d| d.linf).fold(0.0, f64::max);
    let mut checks = vec![Check::at_most("linf_error", worst, cfg.fd_gate)];
    checks.extend(run.density_checks());
    Ok(run.summary(checks))
}

/// The blowup data of the run: the configured family, or the default one.
pub fn blowup_spec(cfg: &RunConfig) -> BlowupProfileSpec {
    let params = cfg.material();
    cfg.initial.blowup_spec(&params).unwrap_or_else(|| {
        InitialSpec::Blowup { u0: std::f64::consts::FRAC_PI_4, eps: 0.01, amplitude: None, skew: 0.5 }
            .blowup_spec(&params)
            .expect("blowup spec")
    })
}

#[derive(Serialize)]
struct BlowupDemoReport {
    blew_up: bool,
    t_star: Option<f64>,
    x_star: Option<f64>,
    theoretical_bound: f64,
    max_gradient: f64,
    threshold: f64,
    s00: f64,
    spec: BlowupProfileSpec,
    grid_points: usize,
    signs: Option<crate::planar::SignCheck>,
}

fn blowup_demo(cfg: &RunConfig, out: &Path) -> Result<Summary, RunError> {
    let params = cfg.material();
    let spec = blowup_spec(cfg);
    spec.validate(&params).map_err(|e| RunError::Config(format!("initial: {e}")))?;
    let s00 = spec.s00(&params);
    let bound = blowup_time_bound(&params, spec.u0, s00).map_err(|e| RunError::Config(e.to_string()))?;
    let horizon = cfg.planar_t_max.min(bound);
    let pad = params.speed_upper() * horizon + 0.5;
    let x = blowup_grid(&spec, cfg.planar_fine_step, cfg.planar_coarse_step, pad);
    let initial = blowup_initial_data(&params, &spec, &x).map_err(|e| RunError::Config(e.to_string()))?;
    let energy0 = 0.5 * crate::planar::planar_energy(&initial);
    let opts = PlanarRunOptions {
        cfl: cfg.planar_cfl,
        t_max: cfg.planar_t_max,
        threshold_factor: cfg.threshold_factor,
        snapshot_times: Vec::new(),
        sign_region: Some((0.0, spec.outer_radius())),
        ..Default::default()
    };
    let grid_points = initial.len();
    let run = run_planar(initial, &params, &opts);
    let report = run.report(Some(bound));

    let path = out.join("blowup_trace.csv");
    io::write_trace_csv(&path, &run.trace).map_err(io_error(&path))?;
    let demo = BlowupDemoReport {
        blew_up: report.blew_up,
        t_star: report.t_star,
        x_star: report.x_star,
        theoretical_bound: bound,
        max_gradient: report.max_gradient,
        threshold: run.threshold,
        s00,
        spec,
        grid_points,
        signs: run.signs,
    };
    let path = out.join("blowup_report.json");
    io::write_json(&path, &demo).map_err(io_error(&path))?;

    let mut checks = vec![
        Check::flag("blew_up", report.blew_up),
        Check::at_most("t_star", report.t_star.unwrap_or(f64::INFINITY), bound),
    ];
    if let Some(signs) = run.signs {
        checks.push(Check::flag("initial_signs_strict", signs.initial_strict));
        checks.push(Check::at_most("sign_violations", signs.violations as f64, 0.0));
    }
    let final_gradient = run.final_state.max_abs_r().max(run.final_state.max_abs_s());
    let mut energies: Vec<TimedEnergy> = Vec::new();
    for sample in [run.trace.first(), run.trace.last()].into_iter().flatten() {
        if energies.last().map_or(true, |e| e.t != sample.time) {
            energies.push(TimedEnergy { t: sample.time, energy: 0.5 * sample.energy });
        }
    }
    Ok(Summary {
        checks,
        energy0,
        min_h: 1.0 / (1.0 + final_gradient * final_gradient),
        max_invariant_residual: None,
        energies,
    })
}
