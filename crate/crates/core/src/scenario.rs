//! The two benchmark scenarios, run configuration, method drivers and artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{build_mesh, AxisSpec, Rect};
use crate::interface::{
    DdProblem, FieldMonitor, InitialData, LambdaChoice, OuterBc, OuterBoundary, ProblemDef, RobinParams,
};
use crate::mixedfem::Forcing;
use crate::robin_opt::{self, log_space, OptMode, OptimizedRobin};
use crate::solvers::{
    gmres, jacobi_oswr, merged_partition, random_guess, ErrorAccumulator, ErrorMonitor, Hooks, IterOptions,
    ReferenceSummary, SolveReport, StopRule,
};
use crate::timegrid::TimePartition;

/// Seconds per year.
pub const YEAR: f64 = 3.15576e7;

pub fn years_to_seconds(y: f64) -> f64 {
    y * YEAR
}

pub fn seconds_to_years(s: f64) -> f64 {
    s / YEAR
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Monodomain,
    Method1,
    Method2Jacobi,
    #[default]
    Method2Gmres,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monodomain" => Ok(Method::Monodomain),
            "method1" => Ok(Method::Method1),
            "method2-jacobi" => Ok(Method::Method2Jacobi),
            "method2-gmres" => Ok(Method::Method2Gmres),
            _ => Err(Error::Config(format!("unknown method {s:?}"))),
        }
    }
}

fn two_sided() -> OptMode {
    OptMode::TwoSided
}

/// Where the Robin parameters come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RobinSource {
    Explicit {
        alpha12: f64,
        alpha21: f64,
    },
    /// Half-space optimization.
    Opt1 {
        #[serde(default = "two_sided")]
        mode: OptMode,
    },
    /// Optimization with the finite subdomain widths.
    Opt2 {
        #[serde(default = "two_sided")]
        mode: OptMode,
    },
}

impl Default for RobinSource {
    fn default() -> Self {
        RobinSource::Opt1 { mode: OptMode::TwoSided }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Guess {
    #[default]
    Zero,
    /// Uniform in `[-1, 1]` from `seed`.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaSide {
    #[default]
    LargerDiffusion,
    HigherNumbered,
    LowerNumbered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScenarioSpec {
    /// Unit square split at `x = 0.5`.
    Test1 {
        ratio: u32,
        /// Slab counts per subdomain, overriding the scaled defaults.
        #[serde(default)]
        steps: Option<[usize; 2]>,
    },
    /// Nine-subdomain repository problem, times in years.
    Test2 { final_years: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub dt_coarse: f64,
    pub dt_fine: f64,
    /// Number of grids per layout, each halving the previous steps.
    pub levels: usize,
    /// Reference step is `dt_fine / reference_factor`.
    pub reference_factor: usize,
    pub tol: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self { dt_coarse: 1.0 / 40.0, dt_fine: 1.0 / 160.0, levels: 4, reference_factor: 64, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LandscapeConfig {
    pub n: usize,
    pub sweeps: usize,
    /// Parameter range; defaults to a decade beyond the resolved `|d sigma|`.
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        Self { n: 15, sweeps: 20, alpha_min: None, alpha_max: None }
    }
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_tol() -> f64 {
    1e-6
}
fn default_max_iter() -> usize {
    200
}
fn default_stop() -> StopRule {
    StopRule::Residual
}

/// Run configuration, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    /// Divides the mesh resolution and, for the first scenario, the step counts.
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub method: Method,
    /// Neumann-Neumann preconditioning for `method1`.
    #[serde(default = "yes")]
    pub precondition: bool,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_stop")]
    pub stop: StopRule,
    #[serde(default)]
    pub guess: Guess,
    #[serde(default)]
    pub seed: u64,
    /// Zero source and initial data, so the exact solution is zero.
    #[serde(default)]
    pub homogeneous: bool,
    #[serde(default)]
    pub lambda: LambdaSide,
    /// Track errors against a monodomain reference (or zero when homogeneous).
    #[serde(default)]
    pub errors: bool,
    /// Monodomain reference step is the merged subdomain step divided by this.
    #[serde(default = "one_usize")]
    pub reference_refine: usize,
    /// Snapshot times in scenario units.
    #[serde(default)]
    pub snapshots: Vec<f64>,
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub robin: RobinSource,
    #[serde(default)]
    pub study: StudyConfig,
    #[serde(default)]
    pub landscape: LandscapeConfig,
}

fn one_usize() -> usize {
    1
}

impl Config {
    pub fn new(scenario: ScenarioSpec) -> Self {
        Self {
            scale: 1.0,
            method: Method::default(),
            precondition: true,
            tol: default_tol(),
            max_iter: default_max_iter(),
            stop: StopRule::Residual,
            guess: Guess::Zero,
            seed: 0,
            homogeneous: false,
            lambda: LambdaSide::default(),
            errors: false,
            reference_refine: 1,
            snapshots: Vec::new(),
            scenario,
            robin: RobinSource::default(),
            study: StudyConfig::default(),
            landscape: LandscapeConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn iter_options(&self) -> IterOptions {
        IterOptions { tol: self.tol, max_iter: self.max_iter, stop: self.stop }
    }
}

/// Cell whose concentration history is recorded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Probe {
    pub x: f64,
    pub y: f64,
}

/// A fully specified problem plus its presentation data.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub def: ProblemDef,
    /// Seconds per scenario time unit.
    pub time_unit: f64,
    pub probe: Option<Probe>,
}

impl Scenario {
    pub fn problem(&self) -> Result<DdProblem> {
        DdProblem::new(self.def.clone())
    }

    pub fn homogeneous(mut self) -> Self {
        self.def.c0 = InitialData::Zero;
        self.def.forcing = Forcing::Zero;
        self
    }
}

fn scaled(n: f64, scale: f64) -> usize {
    ((n / scale).round() as usize).max(1)
}

/// Diffusion coefficients and step counts for the first scenario.
pub fn test1_row(ratio: u32) -> Result<(f64, usize, f64, usize)> {
    match ratio {
        10 => Ok((0.02, 150, 0.2, 200)),
        100 => Ok((0.002, 50, 0.2, 200)),
        1000 => Ok((0.0002, 20, 0.2, 200)),
        _ => Err(Error::Scenario(format!("unknown diffusion ratio {ratio}"))),
    }
}

/// Unit square, two subdomains, Gaussian-like initial data.
pub fn scenario_test1(ratio: u32, scale: f64) -> Result<Scenario> {
    let (d1, m1, d2, m2) = test1_row(ratio)?;
    if !(scale > 0.0) {
        return Err(Error::Scenario(format!("scale {scale}")));
    }
    let half = scaled(100.0, scale);
    let mesh = crate::geometry::RectMesh::uniform(Rect::new(0.0, 1.0, 0.0, 1.0), 2 * half, 2 * half)?;
    let def = ProblemDef {
        mesh,
        boxes: vec![Rect::new(0.0, 0.5, 0.0, 1.0), Rect::new(0.5, 1.0, 0.0, 1.0)],
        porosity: vec![1.0, 1.0],
        diffusion: vec![d1, d2],
        partitions: vec![
            TimePartition::uniform(1.0, scaled(m1 as f64, scale))?,
            TimePartition::uniform(1.0, scaled(m2 as f64, scale))?,
        ],
        outer: OuterBoundary {
            left: OuterBc::Dirichlet(0.0),
            right: OuterBc::Dirichlet(0.0),
            bottom: OuterBc::Neumann(0.0),
            top: OuterBc::Neumann(0.0),
        },
        c0: InitialData::new(|x, y| ((x - 0.55f64).powi(2) + 0.5 * (y - 0.5f64).powi(2)).exp()),
        forcing: Forcing::Zero,
        lambda: LambdaChoice::LargerDiffusion,
    };
    Ok(Scenario { name: format!("test1-ratio{ratio}"), def, time_unit: 1.0, probe: None })
}

/// Repository box and the source schedule of the second scenario.
pub const REPOSITORY: Rect = Rect { x0: 500.0, x1: 3450.0, y0: 65.0, y1: 75.0 };
pub const SOURCE_RATE: f64 = 1e-5;
pub const SOURCE_END_YEARS: f64 = 1e5;

/// Nuclear waste repository in clay, nine subdomains with the repository in the middle.
pub fn scenario_test2(final_years: f64, scale: f64) -> Result<Scenario> {
    if !(final_years > 0.0) || !(scale > 0.0) {
        return Err(Error::Scenario(format!("final time {final_years} years, scale {scale}")));
    }
    let domain = Rect::new(0.0, 3950.0, 0.0, 140.0);
    let r = REPOSITORY;
    let mesh = build_mesh(
        domain,
        &AxisSpec::Graded { band: (r.x0, r.x1), band_cells: scaled(600.0, scale), factor: 1.05 },
        &AxisSpec::Graded { band: (r.y0, r.y1), band_cells: scaled(30.0, scale), factor: 1.05 },
    )?;
    let xs = [0.0, r.x0, r.x1, 3950.0];
    let ys = [0.0, r.y0, r.y1, 140.0];
    let mut boxes = Vec::new();
    for row in 0..3 {
        for col in 0..3 {
            boxes.push(Rect::new(xs[col], xs[col + 1], ys[row], ys[row + 1]));
        }
    }
    let t = years_to_seconds(final_years);
    let repo_steps = ((final_years / 2000.0).round() as usize).max(1);
    let clay_steps = ((final_years / 10000.0).round() as usize).max(1);
    let partitions = (0..9)
        .map(|i| TimePartition::uniform(t, if i == 4 { repo_steps } else { clay_steps }))
        .collect::<Result<Vec<_>>>()?;
    let t_end = years_to_seconds(SOURCE_END_YEARS);
    let forcing = Forcing::new(move |x, y, t0, t1| {
        if !r.contains(x, y) {
            return 0.0;
        }
        let active = (t1.min(t_end) - t0).max(0.0);
        SOURCE_RATE * active / (t1 - t0)
    });
    let probe_y = mesh.ys().iter().position(|&y| y >= r.y1 - 1e-9).map(|j| 0.5 * (mesh.ys()[j] + mesh.ys()[j + 1]));
    let def = ProblemDef {
        mesh,
        boxes,
        porosity: (0..9).map(|i| if i == 4 { 0.2 } else { 0.05 }).collect(),
        diffusion: (0..9).map(|i| if i == 4 { 2e-9 } else { 5e-12 }).collect(),
        partitions,
        outer: OuterBoundary {
            left: OuterBc::Neumann(0.0),
            right: OuterBc::Neumann(0.0),
            bottom: OuterBc::Dirichlet(0.0),
            top: OuterBc::Dirichlet(0.0),
        },
        c0: InitialData::Zero,
        forcing,
        lambda: LambdaChoice::LargerDiffusion,
    };
    Ok(Scenario {
        name: format!("test2-{final_years}y"),
        def,
        time_unit: YEAR,
        probe: probe_y.map(|y| Probe { x: 0.5 * (r.x0 + r.x1), y }),
    })
}

/// Scenario described by a configuration.
pub fn build_scenario(config: &Config) -> Result<Scenario> {
    let mut s = match &config.scenario {
        ScenarioSpec::Test1 { ratio, steps } => {
            let mut s = scenario_test1(*ratio, config.scale)?;
            if let Some([m1, m2]) = steps {
                s.def.partitions = vec![TimePartition::uniform(1.0, *m1)?, TimePartition::uniform(1.0, *m2)?];
            }
            s
        }
        ScenarioSpec::Test2 { final_years } => scenario_test2(*final_years, config.scale)?,
    };
    s.def.lambda = match config.lambda {
        LambdaSide::LargerDiffusion => LambdaChoice::LargerDiffusion,
        LambdaSide::HigherNumbered => LambdaChoice::HigherNumbered,
        LambdaSide::LowerNumbered => LambdaChoice::LowerNumbered,
    };
    if config.homogeneous {
        s = s.homogeneous();
    }
    Ok(s)
}

/// Robin parameters for every interface.
pub fn robin_params(problem: &DdProblem, source: &RobinSource) -> (RobinParams, Vec<OptimizedRobin>) {
    match *source {
        RobinSource::Explicit { alpha12, alpha21 } => {
            let p = RobinParams { pairs: vec![(alpha12, alpha21); problem.n_interfaces()] };
            (p, Vec::new())
        }
        RobinSource::Opt1 { mode } => robin_opt::problem_params(problem, mode, false),
        RobinSource::Opt2 { mode } => robin_opt::problem_params(problem, mode, true),
    }
}

/// Forwards every slab to several monitors.
pub struct Tee<'a>(pub Vec<&'a mut dyn FieldMonitor>);

impl FieldMonitor for Tee<'_> {
    fn observe(&mut self, sub: usize, slab: usize, c: &[f64], r: &[f64]) {
        for m in self.0.iter_mut() {
            m.observe(sub, slab, c, r);
        }
    }
}

/// Concentration history of one cell.
#[derive(Debug, Clone)]
pub struct ProbeRecorder {
    pub sub: usize,
    pub cell: usize,
    pub partition: Arc<TimePartition>,
    pub values: Vec<f64>,
}

impl ProbeRecorder {
    pub fn new(problem: &DdProblem, probe: Probe) -> Result<Self> {
        let mesh = &problem.mesh;
        let i = mesh.xs().partition_point(|&x| x <= probe.x).saturating_sub(1).min(mesh.nx() - 1);
        let j = mesh.ys().partition_point(|&y| y <= probe.y).saturating_sub(1).min(mesh.ny() - 1);
        let global = mesh.cell(i, j);
        let sub = problem.decomposition.labels[global];
        let cell = problem
            .cell_map(sub)
            .iter()
            .position(|&g| g == global)
            .ok_or_else(|| Error::Scenario("probe cell not found".into()))?;
        let partition = problem.partitions[sub].clone();
        let values = vec![0.0; partition.n_slabs()];
        Ok(Self { sub, cell, partition, values })
    }

    /// `(t_end, value)` per slab.
    pub fn series(&self) -> Vec<(f64, f64)> {
        (0..self.values.len()).map(|m| (self.partition.slab(m).1, self.values[m])).collect()
    }
}

impl FieldMonitor for ProbeRecorder {
    fn observe(&mut self, sub: usize, slab: usize, c: &[f64], _r: &[f64]) {
        if sub == self.sub {
            self.values[slab] = c[self.cell];
        }
    }
}

/// Keeps the concentration slabs containing the requested times.
#[derive(Debug, Clone)]
pub struct SnapshotRecorder {
    pub times: Vec<f64>,
    slabs: Vec<Vec<usize>>,
    data: Vec<Vec<Vec<f64>>>,
}

impl SnapshotRecorder {
    pub fn new(problem: &DdProblem, times: Vec<f64>) -> Self {
        let slabs: Vec<Vec<usize>> =
            problem.partitions.iter().map(|p| times.iter().map(|&t| p.slab_of(t)).collect()).collect();
        let data = (0..problem.n_subdomains()).map(|_| vec![Vec::new(); times.len()]).collect();
        Self { times, slabs, data }
    }

    /// One CSV per time with `t, cell_x, cell_y, c` at cell centres.
    pub fn write(&self, problem: &DdProblem, dir: &Path, time_unit: f64) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        for (k, &t) in self.times.iter().enumerate() {
            let path = dir.join(format!("c_{k:03}.csv"));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["t", "cell_x", "cell_y", "c"])?;
            for i in 0..problem.n_subdomains() {
                let mesh = problem.systems[i].mesh();
                for (local, v) in self.data[i][k].iter().enumerate() {
                    let (x, y) = mesh.cell_centre(local);
                    w.write_record([
                        format!("{:e}", t / time_unit),
                        format!("{x:e}"),
                        format!("{y:e}"),
                        format!("{v:e}"),
                    ])?;
                }
            }
            w.flush()?;
            files.push(path);
        }
        Ok(files)
    }
}

impl FieldMonitor for SnapshotRecorder {
    fn observe(&mut self, sub: usize, slab: usize, c: &[f64], _r: &[f64]) {
        for (k, &s) in self.slabs[sub].iter().enumerate() {
            if s == slab {
                self.data[sub][k] = c.to_vec();
            }
        }
    }
}

/// Everything the iterative drivers need besides the problem.
#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub method: Method,
    pub precondition: bool,
    pub opts: IterOptions,
    pub guess: Guess,
    pub seed: u64,
    /// Reconstruct with zero `f`, `c0` and outer data.
    pub homogeneous: bool,
}

impl Settings {
    pub fn from_config(c: &Config) -> Self {
        Self {
            method: c.method,
            precondition: c.precondition,
            opts: c.iter_options(),
            guess: c.guess,
            seed: c.seed,
            homogeneous: c.homogeneous,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: SolveReport,
    pub x: Vec<f64>,
    /// `(err_c, err_r, linf_c)` of the reconstructed fields, when a reference was given.
    pub errors: Option<(f64, f64, f64)>,
}

fn initial(n: usize, s: &Settings) -> Vec<f64> {
    match s.guess {
        Guess::Zero => vec![0.0; n],
        Guess::Random => random_guess(n, s.seed),
    }
}

/// Iterate one of the decomposition methods, then reconstruct the subdomain
/// fields into `monitor`.
pub fn solve(
    problem: &DdProblem,
    s: &Settings,
    alpha: Option<&RobinParams>,
    reference: Option<&ReferenceSummary>,
    monitor: &mut dyn FieldMonitor,
) -> Result<Outcome> {
    problem.reset_solve_count();
    let hom = s.homogeneous;
    let counter = || problem.solve_count();
    let (x, mut report) = match s.method {
        Method::Monodomain => return Err(Error::Config("monodomain is not an iterative method".into())),
        Method::Method1 => {
            let rhs = if hom { vec![0.0; problem.lambda_len()] } else { problem.compute_chi()? };
            let x0 = initial(problem.lambda_len(), s);
            let mut apply = |x: &[f64]| problem.apply_s(x);
            let mut pc = |x: &[f64]| problem.apply_nn(x);
            let mut err = |x: &[f64]| {
                let mut acc = ErrorAccumulator::new(problem, reference.unwrap())?;
                problem.reconstruct_dirichlet_with(x, hom, &mut acc)?;
                Ok(acc.l2_errors())
            };
            let hooks = Hooks {
                solves: Some(&counter),
                errors: reference.map(|_| &mut err as &mut dyn FnMut(&[f64]) -> Result<(f64, f64)>),
            };
            let precond = if s.precondition { Some(&mut pc as &mut dyn FnMut(&[f64]) -> Result<Vec<f64>>) } else { None };
            let (x, mut rep) = gmres(&mut apply, precond, &rhs, &x0, &s.opts, hooks)?;
            rep.method = if s.precondition { "method1-nn".into() } else { "method1".into() };
            (x, rep)
        }
        Method::Method2Gmres => {
            let alpha = alpha.ok_or_else(|| Error::Config("Robin parameters missing".into()))?;
            let rhs = if hom { vec![0.0; problem.robin_len()] } else { problem.compute_chi_r(alpha)? };
            let x0 = initial(problem.robin_len(), s);
            let mut apply = |x: &[f64]| problem.apply_sr(x, alpha);
            let mut err = |x: &[f64]| {
                let mut acc = ErrorAccumulator::new(problem, reference.unwrap())?;
                problem.reconstruct_robin_with(x, alpha, hom, &mut acc)?;
                Ok(acc.l2_errors())
            };
            let hooks = Hooks {
                solves: Some(&counter),
                errors: reference.map(|_| &mut err as &mut dyn FnMut(&[f64]) -> Result<(f64, f64)>),
            };
            let (x, mut rep) = gmres(&mut apply, None, &rhs, &x0, &s.opts, hooks)?;
            rep.method = "method2-gmres".into();
            (x, rep)
        }
        Method::Method2Jacobi => {
            let alpha = alpha.ok_or_else(|| Error::Config("Robin parameters missing".into()))?;
            let x0 = initial(problem.robin_len(), s);
            let mut acc = match reference {
                Some(r) => Some(ErrorAccumulator::new(problem, r)?),
                None => None,
            };
            let (x, rep) = jacobi_oswr(problem, alpha, &x0, &s.opts, acc.as_mut().map(|a| a as &mut dyn ErrorMonitor))?;
            (x, rep)
        }
    };
    report.seed = Some(s.seed);
    let mut acc = match reference {
        Some(r) => Some(ErrorAccumulator::new(problem, r)?),
        None => None,
    };
    {
        let mut sinks: Vec<&mut dyn FieldMonitor> = vec![monitor];
        if let Some(a) = acc.as_mut() {
            sinks.push(a);
        }
        let mut tee = Tee(sinks);
        match s.method {
            Method::Method1 => problem.reconstruct_dirichlet_with(&x, hom, &mut tee)?,
            _ => problem.reconstruct_robin_with(&x, alpha.unwrap(), hom, &mut tee)?,
        }
    }
    let errors = acc.map(|a| {
        let (c, r) = a.l2_errors();
        (c, r, a.linf_c())
    });
    Ok(Outcome { report, x, errors })
}

/// A monitor that ignores everything.
pub struct Discard;

impl FieldMonitor for Discard {
    fn observe(&mut self, _: usize, _: usize, _: &[f64], _: &[f64]) {}
}

/// Least-squares slope of `log(err)` against `log(dt)`.
pub fn fit_slope(dts: &[f64], errs: &[f64]) -> f64 {
    let n = dts.len() as f64;
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Time-grid layouts of the order study; "coarse" applies to the subdomains
/// below the largest diffusion.
pub const LAYOUTS: [(usize, &str, bool, bool); 4] = [
    (1, "fine-fine", false, false),
    (2, "coarse-fine", true, false),
    (3, "fine-coarse", false, true),
    (4, "coarse-coarse", true, true),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub grid: usize,
    pub level: usize,
    pub dt_coarse: f64,
    pub dt_fine: f64,
    pub err_c: f64,
    pub err_r: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudySlopes {
    pub grid: usize,
    pub slope_c: f64,
    pub slope_r: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Study {
    pub rows: Vec<StudyRow>,
    pub slopes: Vec<StudySlopes>,
}

impl Study {
    pub fn errors(&self, grid: usize) -> Vec<&StudyRow> {
        self.rows.iter().filter(|r| r.grid == grid).collect()
    }

    pub fn write_csv(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let a = dir.join("errors_vs_dt.csv");
        let mut w = csv::Writer::from_path(&a)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        let b = dir.join("slopes.csv");
        let mut w = csv::Writer::from_path(&b)?;
        for s in &self.slopes {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(vec![a, b])
    }
}

fn uniform_steps(t: f64, dt: f64) -> Result<TimePartition> {
    TimePartition::uniform(t, ((t / dt).round() as usize).max(1))
}

/// Errors of all four time-grid layouts over successive halvings of the steps,
/// against a fine monodomain reference.
pub fn time_grid_study(base: &Scenario, config: &Config, progress: &mut dyn FnMut(&StudyRow)) -> Result<Study> {
    let st = &config.study;
    if !(st.dt_coarse > st.dt_fine) || st.levels < 2 {
        return Err(Error::Config(format!(
            "study needs dt_coarse > dt_fine and two levels, got {} {} {}",
            st.dt_coarse, st.dt_fine, st.levels
        )));
    }
    let problem0 = base.problem().map_err(Error::at("scenario"))?;
    let t = problem0.final_time();
    let dmax = problem0.diffusion.iter().cloned().fold(0.0, f64::max);
    let low: Vec<bool> = problem0.diffusion.iter().map(|&d| d < dmax).collect();
    let finest = 1 << (st.levels - 1);
    let q = {
        let c = uniform_steps(t, st.dt_coarse)?.refine(finest);
        let f = uniform_steps(t, st.dt_fine)?.refine(finest);
        Arc::new(merged_partition(&[&c, &f])?)
    };
    let fine = merged_partition(&[&q, &uniform_steps(t, st.dt_fine / st.reference_factor as f64)?])?;
    let reference = ReferenceSummary::from_monodomain(&problem0, q, &fine).map_err(Error::at("reference"))?;
    let mut settings = Settings::from_config(config);
    settings.opts = IterOptions::residual(st.tol, config.max_iter);
    let mut rows = Vec::new();
    for &(grid, _, coarse_low, coarse_high) in &LAYOUTS {
        for level in 0..st.levels {
            let k = 1 << level;
            let pc = uniform_steps(t, st.dt_coarse)?.refine(k);
            let pf = uniform_steps(t, st.dt_fine)?.refine(k);
            let mut def = base.def.clone();
            def.partitions = low
                .iter()
                .map(|&l| if (l && coarse_low) || (!l && coarse_high) { pc.clone() } else { pf.clone() })
                .collect();
            let problem = DdProblem::new(def).map_err(Error::at("scenario"))?;
            let (alpha, _) = robin_params(&problem, &config.robin);
            let out = solve(&problem, &settings, Some(&alpha), Some(&reference), &mut Discard).map_err(Error::at("solve"))?;
            let (err_c, err_r, _) = out.errors.unwrap();
            let row = StudyRow {
                grid,
                level,
                dt_coarse: st.dt_coarse / k as f64,
                dt_fine: st.dt_fine / k as f64,
                err_c,
                err_r,
                iterations: out.report.iterations,
            };
            progress(&row);
            rows.push(row);
        }
    }
    let slopes = LAYOUTS
        .iter()
        .map(|&(grid, _, _, _)| {
            let rs: Vec<&StudyRow> = rows.iter().filter(|r| r.grid == grid).collect();
            let dts: Vec<f64> = rs.iter().map(|r| r.dt_fine).collect();
            let ec: Vec<f64> = rs.iter().map(|r| r.err_c).collect();
            let er: Vec<f64> = rs.iter().map(|r| r.err_r).collect();
            StudySlopes { grid, slope_c: fit_slope(&dts, &ec), slope_r: fit_slope(&dts, &er) }
        })
        .collect();
    Ok(Study { rows, slopes })
}

/// Landscape plus where the optimizer lands on it.
#[derive(Debug, Clone)]
pub struct LandscapeOutcome {
    pub landscape: robin_opt::Landscape,
    pub optimized: (f64, f64),
    pub residual_at_optimized: f64,
}

/// Jacobi residual landscape around the resolved frequency range.
pub fn robin_landscape(scenario: &Scenario, config: &Config) -> Result<LandscapeOutcome> {
    let problem = scenario.problem().map_err(Error::at("scenario"))?;
    if problem.n_interfaces() != 1 {
        return Err(Error::Config("landscape scans need a single interface".into()));
    }
    let (alpha, details) = robin_params(&problem, &config.robin);
    let (lo, hi) = match (config.landscape.alpha_min, config.landscape.alpha_max) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            let g = &problem.decomposition.interfaces[0];
            let freq = robin_opt::FrequencyBox::from_grid(
                problem.final_time(),
                problem.partitions.iter().map(|p| p.min_dt()).fold(f64::INFINITY, f64::min),
                g.length(),
                g.lengths.iter().cloned().fold(f64::INFINITY, f64::min),
            );
            let s = |i: usize| robin_opt::SideData {
                diffusion: problem.diffusion[i],
                porosity: problem.porosity[i],
                width: f64::INFINITY,
            };
            robin_opt::Objective::new(s(g.first), s(g.second), &freq, false).alpha_range()
        }
    };
    let _ = details;
    let grid = log_space(lo, hi, config.landscape.n);
    let x0 = initial(problem.robin_len(), &Settings::from_config(config));
    let sweeps = config.landscape.sweeps;
    let landscape = robin_opt::landscape_scan(&problem, &grid, &grid, &x0, sweeps).map_err(Error::at("landscape"))?;
    let (a12, a21) = alpha.pairs[0];
    let at = robin_opt::jacobi_residual(&problem, a12, a21, &x0, sweeps).map_err(Error::at("landscape"))?;
    Ok(LandscapeOutcome { landscape, optimized: (a12, a21), residual_at_optimized: at })
}

/// What a run wrote and how long each stage took.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub name: String,
    pub verb: String,
    pub config_hash: String,
    pub seed: u64,
    pub versions: BTreeMap<String, String>,
    pub timings: BTreeMap<String, f64>,
    pub files: Vec<String>,
    pub summary: BTreeMap<String, serde_json::Value>,
}

impl Manifest {
    fn new(verb: &str, name: &str, config: &Config) -> Self {
        let mut versions = BTreeMap::new();
        versions.insert("ddtime".into(), env!("CARGO_PKG_VERSION").into());
        Self {
            name: name.into(),
            verb: verb.into(),
            config_hash: config.hash(),
            seed: config.seed,
            versions,
            timings: BTreeMap::new(),
            files: Vec::new(),
            summary: BTreeMap::new(),
        }
    }

    fn time<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(Error::at(stage));
        self.timings.insert(stage.into(), start.elapsed().as_secs_f64());
        out
    }

    fn note(&mut self, key: &str, v: impl Serialize) {
        self.summary.insert(key.into(), serde_json::to_value(v).unwrap_or(serde_json::Value::Null));
    }

    fn add(&mut self, dir: &Path, p: &Path) {
        let rel = p.strip_prefix(dir).unwrap_or(p);
        self.files.push(rel.display().to_string());
    }

    fn finish(mut self, dir: &Path, config: &Config) -> Result<Self> {
        let cfg = dir.join("config.toml");
        std::fs::write(&cfg, config.to_toml())?;
        self.add(dir, &cfg);
        for f in &self.files {
            let meta = std::fs::metadata(dir.join(f))?;
            if meta.len() == 0 {
                return Err(Error::Stage { stage: "output", source: Box::new(Error::Config(format!("{f} is empty"))) });
            }
        }
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&self).expect("manifest serializes"))?;
        Ok(self)
    }
}

fn write_probe(path: &Path, probe: &ProbeRecorder, time_unit: f64) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "c"])?;
    for (t, v) in probe.series() {
        w.write_record([format!("{:e}", t / time_unit), format!("{v:e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// Result of `run`: the manifest and the solve data it summarizes.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub manifest: Manifest,
    pub outcome: Option<Outcome>,
    pub probe: Option<ProbeRecorder>,
    pub alpha: Option<RobinParams>,
}

/// Monodomain reference on the merged subdomain grid, refined by `config.reference_refine`.
fn reference_partition(problem: &DdProblem, config: &Config) -> Result<(Arc<TimePartition>, TimePartition)> {
    let parts: Vec<&TimePartition> = problem.partitions.iter().map(|p| &**p).collect();
    let q = merged_partition(&parts)?;
    let fine = q.refine(config.reference_refine.max(1));
    Ok((Arc::new(q), fine))
}

/// Execute the configured method end to end and write its artifacts into `dir`.
pub fn run(config: &Config, dir: &Path) -> Result<RunResult> {
    std::fs::create_dir_all(dir)?;
    let scenario = build_scenario(config).map_err(Error::at("scenario"))?;
    let mut man = Manifest::new("run", &scenario.name, config);
    let problem = man.time("setup", || scenario.problem())?;
    let times: Vec<f64> = config.snapshots.iter().map(|t| t * scenario.time_unit).collect();
    let mut snaps = SnapshotRecorder::new(&problem, times);
    let mut probe = scenario.probe.map(|p| ProbeRecorder::new(&problem, p)).transpose()?;
    if config.method == Method::Monodomain {
        let (_, fine) = reference_partition(&problem, config)?;
        let system = problem.monodomain_system()?;
        let mut pc = probe.as_ref().map(|p| (problem.cell_map(p.sub)[p.cell], vec![0.0; fine.n_slabs()]));
        let mut snapshots: Vec<(f64, Vec<f64>)> = snaps.times.iter().map(|&t| (t, Vec::new())).collect();
        man.time("solve", || {
            problem.solve_monodomain_streaming(&system, &fine, &mut |m, c, _| {
                if let Some((g, v)) = pc.as_mut() {
                    v[m] = c[*g];
                }
                for (t, s) in snapshots.iter_mut() {
                    if fine.slab_of(*t) == m {
                        *s = c.to_vec();
                    }
                }
            })
        })?;
        let snap_dir = dir.join("snapshots");
        std::fs::create_dir_all(&snap_dir)?;
        for (k, (t, s)) in snapshots.iter().enumerate() {
            let path = snap_dir.join(format!("c_{k:03}.csv"));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["t", "cell_x", "cell_y", "c"])?;
            for (cell, v) in s.iter().enumerate() {
                let (x, y) = problem.mesh.cell_centre(cell);
                w.write_record([format!("{:e}", t / scenario.time_unit), format!("{x:e}"), format!("{y:e}"), format!("{v:e}")])?;
            }
            w.flush()?;
            man.add(dir, &path);
        }
        let report = SolveReport { method: "monodomain".into(), converged: true, rel_residual: vec![0.0], subdomain_solves: vec![1], seed: Some(config.seed), ..Default::default() };
        let path = dir.join("report.csv");
        report.write_csv(&path)?;
        man.add(dir, &path);
        if let (Some(p), Some((_, v))) = (probe.as_mut(), pc) {
            p.partition = Arc::new(fine.clone());
            p.values = v;
            let path = dir.join("probe.csv");
            write_probe(&path, p, scenario.time_unit)?;
            man.add(dir, &path);
        }
        let manifest = man.finish(dir, config)?;
        return Ok(RunResult { manifest, outcome: None, probe, alpha: None });
    }
    let alpha = match config.method {
        Method::Method2Gmres | Method::Method2Jacobi => {
            let (a, details) = man.time("robin", || Ok(robin_params(&problem, &config.robin)))?;
            man.note("robin", &details);
            Some(a)
        }
        _ => None,
    };
    let reference = if config.errors {
        Some(man.time("reference", || {
            if config.homogeneous {
                ReferenceSummary::zero(&problem)
            } else {
                let (q, fine) = reference_partition(&problem, config)?;
                ReferenceSummary::from_monodomain(&problem, q, &fine)
            }
        })?)
    } else {
        None
    };
    let settings = Settings::from_config(config);
    let outcome = man.time("solve", || {
        let mut sinks: Vec<&mut dyn FieldMonitor> = vec![&mut snaps];
        if let Some(p) = probe.as_mut() {
            sinks.push(p);
        }
        solve(&problem, &settings, alpha.as_ref(), reference.as_ref(), &mut Tee(sinks))
    })?;
    let files = man.time("output", || {
        let mut files = Vec::new();
        let path = dir.join("report.csv");
        outcome.report.write_csv(&path)?;
        files.push(path);
        if !snaps.times.is_empty() {
            files.extend(snaps.write(&problem, &dir.join("snapshots"), scenario.time_unit)?);
        }
        if let Some(p) = &probe {
            let path = dir.join("probe.csv");
            write_probe(&path, p, scenario.time_unit)?;
            files.push(path);
        }
        Ok(files)
    })?;
    for f in &files {
        man.add(dir, f);
    }
    man.note("iterations", outcome.report.iterations);
    man.note("converged", outcome.report.converged);
    man.note("rel_residual", outcome.report.final_residual());
    man.note("subdomain_solves", outcome.report.total_solves());
    if let Some(e) = outcome.errors {
        man.note("err_c", e.0);
        man.note("err_r", e.1);
        man.note("linf_c", e.2);
    }
    let manifest = man.finish(dir, config)?;
    Ok(RunResult { manifest, outcome: Some(outcome), probe, alpha })
}

/// Time-order study with artifacts.
pub fn run_study(config: &Config, dir: &Path, progress: &mut dyn FnMut(&StudyRow)) -> Result<(Study, Manifest)> {
    std::fs::create_dir_all(dir)?;
    let scenario = build_scenario(config).map_err(Error::at("scenario"))?;
    let mut man = Manifest::new("study time-order", &scenario.name, config);
    let study = man.time("study", || time_grid_study(&scenario, config, progress))?;
    for f in study.write_csv(dir)? {
        man.add(dir, &f);
    }
    man.note("slopes", &study.slopes);
    let manifest = man.finish(dir, config)?;
    Ok((study, manifest))
}

/// Landscape scan with artifacts.
pub fn run_landscape(config: &Config, dir: &Path) -> Result<(LandscapeOutcome, Manifest)> {
    std::fs::create_dir_all(dir)?;
    let scenario = build_scenario(config).map_err(Error::at("scenario"))?;
    let mut man = Manifest::new("study robin-landscape", &scenario.name, config);
    let out = man.time("landscape", || robin_landscape(&scenario, config))?;
    let path = dir.join("landscape.csv");
    out.landscape.write_csv(&path)?;
    man.add(dir, &path);
    let (i, j, min) = out.landscape.min();
    man.note("grid_min", (out.landscape.alpha12[i], out.landscape.alpha21[j], min));
    man.note("optimized", out.optimized);
    man.note("residual_at_optimized", out.residual_at_optimized);
    let manifest = man.finish(dir, config)?;
    Ok((out, manifest))
}

/// Optimized parameters per interface with artifacts.
pub fn run_optimize(config: &Config, dir: &Path) -> Result<(RobinParams, Vec<OptimizedRobin>, Manifest)> {
    std::fs::create_dir_all(dir)?;
    let scenario = build_scenario(config).map_err(Error::at("scenario"))?;
    let mut man = Manifest::new("optimize-robin", &scenario.name, config);
    let problem = man.time("setup", || scenario.problem())?;
    let (params, details) = man.time("optimize", || Ok(robin_params(&problem, &config.robin)))?;
    let path = dir.join("robin.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["interface", "first", "second", "alpha12", "alpha21", "rho"])?;
    for (k, g) in problem.decomposition.interfaces.iter().enumerate() {
        let (a, b) = params.pairs[k];
        let rho = details.get(k).map_or(f64::NAN, |d| d.rho);
        w.write_record([k.to_string(), g.first.to_string(), g.second.to_string(), format!("{a:e}"), format!("{b:e}"), format!("{rho:e}")])?;
    }
    w.flush()?;
    man.add(dir, &path);
    let manifest = man.finish(dir, config)?;
    Ok((params, details, manifest))
}

/// Monodomain solve with artifacts.
pub fn run_reference(config: &Config, dir: &Path) -> Result<RunResult> {
    let mut c = config.clone();
    c.method = Method::Monodomain;
    run(&c, dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        let s = scenario_test1(10, 1.0).unwrap();
        assert_eq!(s.def.diffusion, vec![0.02, 0.2]);
        assert_eq!(s.def.partitions[0].n_slabs(), 150);
        let s = scenario_test1(1000, 1.0).unwrap();
        assert_eq!(s.def.diffusion[0], 0.0002);
        assert_eq!(s.def.partitions[0].n_slabs(), 20);
        assert!(scenario_test1(7, 1.0).is_err());
    }

    #[test]
    fn scale_divides_mesh_and_steps() {
        let s = scenario_test1(100, 4.0).unwrap();
        assert_eq!(s.def.mesh.nx(), 50);
        assert!((s.def.mesh.xs()[1] - 1.0 / 50.0).abs() < 1e-15);
        assert_eq!(s.def.partitions[1].n_slabs(), 50);
        assert_eq!(s.def.partitions[0].n_slabs(), 13);
    }

    #[test]
    fn repository_layout() {
        let s = scenario_test2(2e5, 2.0).unwrap();
        let p = s.problem().unwrap();
        assert_eq!(p.n_subdomains(), 9);
        assert_eq!(p.n_interfaces(), 12);
        assert_eq!(p.porosity[4], 0.2);
        assert_eq!(p.diffusion[4], 2e-9);
        assert_eq!(p.partitions[4].n_slabs(), 100);
        assert_eq!(p.partitions[0].n_slabs(), 20);
        let r = p.decomposition.subdomains[4].rect();
        assert!((r.width() - 2950.0).abs() < 1e-9 && (r.height() - 10.0).abs() < 1e-9);
        assert_eq!(p.decomposition.subdomains[4].mesh.nx(), 300);
        assert_eq!(p.decomposition.subdomains[4].mesh.ny(), 15);
        let probe = ProbeRecorder::new(&p, s.probe.unwrap()).unwrap();
        assert_eq!(probe.sub, 7);
        let (_, y) = p.systems[7].mesh().cell_centre(probe.cell);
        assert!(y > 75.0 && y < 76.0);
    }

    #[test]
    fn source_switches_off() {
        let s = scenario_test2(2e5, 4.0).unwrap();
        let Forcing::Field(f) = &s.def.forcing else { panic!() };
        let yr = YEAR;
        assert_eq!(f(1000.0, 70.0, 0.0, 1e4 * yr), SOURCE_RATE);
        assert_eq!(f(1000.0, 70.0, 1e5 * yr, 1.1e5 * yr), 0.0);
        assert!((f(1000.0, 70.0, 0.9e5 * yr, 1.1e5 * yr) - 0.5 * SOURCE_RATE).abs() < 1e-20);
        assert_eq!(f(100.0, 70.0, 0.0, 1e4 * yr), 0.0);
    }

    #[test]
    fn year_round_trip() {
        for y in [2000.0, 10000.0, 1e5, 2e5, 1e6] {
            assert_eq!(seconds_to_years(years_to_seconds(y)), y);
        }
    }

    #[test]
    fn slope_of_first_order_data() {
        let dts = [0.1, 0.05, 0.025, 0.0125];
        let errs: Vec<f64> = dts.iter().map(|d| 3.0 * d).collect();
        assert!((fit_slope(&dts, &errs) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_round_trip() {
        let text = r#"
            scale = 4.0
            method = "method1"
            tol = 1e-11
            [scenario]
            kind = "test1"
            ratio = 100
            steps = [40, 40]
            [robin]
            kind = "explicit"
            alpha12 = 1.0
            alpha21 = 2.0
        "#;
        let c = Config::from_toml(text).unwrap();
        assert_eq!(c.method, Method::Method1);
        assert_eq!(c.scenario, ScenarioSpec::Test1 { ratio: 100, steps: Some([40, 40]) });
        assert_eq!(c.robin, RobinSource::Explicit { alpha12: 1.0, alpha21: 2.0 });
        let back = Config::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert!(Config::from_toml("scale = 1.0").is_err());
    }

    #[test]
    fn zero_data_monodomain_is_zero() {
        let mut c = Config::new(ScenarioSpec::Test1 { ratio: 10, steps: Some([4, 4]) });
        c.scale = 20.0;
        c.homogeneous = true;
        c.method = Method::Monodomain;
        c.snapshots = vec![0.5];
        let dir = tempfile::tempdir().unwrap();
        let out = run(&c, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("snapshots/c_000.csv")).unwrap();
        assert!(text.lines().skip(1).all(|l| l.ends_with(",0e0")));
        assert!(out.manifest.files.iter().any(|f| f == "report.csv"));
        assert!(dir.path().join("manifest.json").exists());
    }

    #[test]
    fn rerun_is_bit_identical() {
        let mut c = Config::new(ScenarioSpec::Test1 { ratio: 10, steps: Some([6, 8]) });
        c.scale = 20.0;
        c.guess = Guess::Random;
        c.seed = 3;
        c.max_iter = 5;
        c.snapshots = vec![0.3];
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run(&c, a.path()).unwrap();
        run(&c, b.path()).unwrap();
        for f in ["report.csv", "snapshots/c_000.csv"] {
            assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
        }
    }

    #[test]
    fn stage_tagged_failure() {
        let c = Config::new(ScenarioSpec::Test1 { ratio: 3, steps: None });
        let dir = tempfile::tempdir().unwrap();
        match run(&c, dir.path()) {
            Err(Error::Stage { stage, .. }) => assert_eq!(stage, "scenario"),
            other => panic!("{other:?}"),
        }
    }
}
