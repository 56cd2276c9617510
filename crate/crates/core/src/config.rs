//! Run configuration: a line-oriented `section.key = value` text format with
//! bracketed arrays, validated against a fixed schema (unknown keys are
//! rejected) before anything is allocated, plus the named experiment presets
//! with their published time-step schedules.

use std::path::PathBuf;

use thiserror::Error;

use crate::expr::{Expr, ExprError};
use crate::geom::{ImplicitSurface, SurfaceKind, Vec3};
use crate::model::ModelParams;
use crate::solver::{Method, Preconditioner, SolverConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    BadLine { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: `{key}` wants {want}, got `{got}`")]
    BadValue { line: usize, key: String, want: &'static str, got: String },
    #[error("`{key}`: {why}")]
    Invalid { key: String, why: String },
    #[error("initial condition expression: {0}")]
    Expr(#[from] ExprError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Custom,
    AcValidation,
    ChValidation,
    SphereAc,
    SphereCh,
    SpindleAc,
    SpindleCh,
    CellAc,
    CellCh,
    BetaSweep,
}

impl Experiment {
    fn from_word(w: &str) -> Option<Self> {
        Some(match w {
            "custom" => Experiment::Custom,
            "ac_validation" => Experiment::AcValidation,
            "ch_validation" => Experiment::ChValidation,
            "sphere_ac" => Experiment::SphereAc,
            "sphere_ch" => Experiment::SphereCh,
            "spindle_ac" => Experiment::SpindleAc,
            "spindle_ch" => Experiment::SpindleCh,
            "cell_ac" => Experiment::CellAc,
            "cell_ch" => Experiment::CellCh,
            "beta_sweep" => Experiment::BetaSweep,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    AllenCahn,
    CahnHilliard,
}

#[derive(Debug, Clone)]
pub enum InitialCondition {
    Random { seed: u64 },
    Constant(f64),
    LinearX3PlusHalf,
    Expression(Expr),
}

/// Everything a run needs, fully resolved.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub surface: ImplicitSurface,
    pub level: u32,
    pub max_tets: usize,
    pub model: ModelKind,
    pub params: ModelParams,
    pub t_end: f64,
    /// `(segment_end, dt)` with strictly increasing ends; the last end must
    /// reach `t_end`.
    pub schedule: Vec<(f64, f64)>,
    pub solver: SolverSettings,
    pub out_dir: PathBuf,
    pub vtk_every: usize,
    pub csv_every: usize,
    pub ic: InitialCondition,
}

/// Solver knobs; `method = auto` picks CG for the symmetric positive definite
/// relaxation systems and GMRES for the coupled conserved systems.
#[derive(Debug, Clone)]
pub struct SolverSettings {
    pub method: Option<Method>,
    pub preconditioner: Option<Preconditioner>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iter: usize,
    pub restart: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            method: None,
            preconditioner: None,
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_iter: 20_000,
            restart: 50,
        }
    }
}

impl SolverSettings {
    pub fn resolve(&self, model: ModelKind) -> SolverConfig {
        let base = match model {
            ModelKind::AllenCahn => SolverConfig::cg(),
            ModelKind::CahnHilliard => SolverConfig::gmres(),
        };
        SolverConfig {
            method: self.method.unwrap_or(base.method),
            preconditioner: self.preconditioner.unwrap_or(base.preconditioner),
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_iter: self.max_iter,
            restart: self.restart,
            ..base
        }
    }
}

// Published step schedules. Relaxation on the sphere coarsens over five
// decades, the conserved runs only need small steps through the initial
// separation burst.
const SPHERE_AC_SCHEDULE: [(f64, f64); 6] = [
    (10.0, 1.0),
    (60.0, 5.0),
    (1060.0, 10.0),
    (3560.0, 50.0),
    (13560.0, 100.0),
    (22560.0, 200.0),
];
const CELL_AC_SCHEDULE: [(f64, f64); 3] = [(200.0, 1.0), (500.0, 5.0), (23000.0, 10.0)];

fn ch_schedule(t_end: f64) -> Vec<(f64, f64)> {
    if t_end <= 1.0 {
        vec![(t_end, 0.01)]
    } else {
        vec![(1.0, 0.01), (t_end, 1.0)]
    }
}

/// Truncates a schedule at `t_end`, keeping segment boundaries.
fn truncate_schedule(full: &[(f64, f64)], t_end: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(end, dt) in full {
        if end >= t_end {
            out.push((t_end, dt));
            break;
        }
        out.push((end, dt));
    }
    out
}

impl RunConfig {
    /// The baseline every config starts from: a short relaxation run on the
    /// unit sphere.
    pub fn base() -> Self {
        RunConfig {
            experiment: Experiment::Custom,
            surface: ImplicitSurface::unit_sphere(),
            level: 3,
            max_tets: 40_000_000,
            model: ModelKind::AllenCahn,
            params: ModelParams::default(),
            t_end: 10.0,
            schedule: vec![(10.0, 0.1)],
            solver: SolverSettings::default(),
            out_dir: PathBuf::from("out"),
            vtk_every: 0,
            csv_every: 1,
            ic: InitialCondition::Random { seed: 0 },
        }
    }

    /// Preset for a named experiment. Desk-scale defaults keep sphere runs at
    /// refinement 4 and truncate the long coarsening horizons; `full` restores
    /// the published resolutions and end times (hours of compute).
    pub fn preset(experiment: Experiment, full: bool) -> Self {
        let mut c = RunConfig::base();
        c.experiment = experiment;
        match experiment {
            Experiment::Custom => {}
            Experiment::AcValidation | Experiment::ChValidation => {
                c.level = 3;
                c.params.epsilon = 0.1;
                c.t_end = 5.0;
                c.schedule = vec![(5.0, validation_dt(3))];
                if experiment == Experiment::ChValidation {
                    c.model = ModelKind::CahnHilliard;
                }
            }
            Experiment::SphereAc => {
                c.level = if full { 6 } else { 4 };
                c.params.epsilon = 0.01;
                c.t_end = if full { 22560.0 } else { 400.0 };
                c.schedule = truncate_schedule(&SPHERE_AC_SCHEDULE, c.t_end);
                c.vtk_every = 50;
            }
            Experiment::SphereCh => {
                c.model = ModelKind::CahnHilliard;
                c.level = if full { 6 } else { 4 };
                c.params.epsilon = 0.01;
                c.t_end = if full { 500.0 } else { 20.0 };
                c.schedule = ch_schedule(c.t_end);
                c.vtk_every = 50;
            }
            Experiment::SpindleAc => {
                c.surface = ImplicitSurface::spindle();
                c.level = if full { 7 } else { 4 };
                c.params.epsilon = 0.01;
                c.t_end = if full { 400.0 } else { 40.0 };
                c.schedule = vec![(c.t_end, 1.0)];
                c.vtk_every = 10;
            }
            Experiment::SpindleCh => {
                c.surface = ImplicitSurface::spindle();
                c.model = ModelKind::CahnHilliard;
                c.level = if full { 7 } else { 4 };
                c.params.epsilon = 0.01;
                c.t_end = if full { 400.0 } else { 20.0 };
                c.schedule = ch_schedule(c.t_end);
                c.vtk_every = 50;
            }
            Experiment::CellAc => {
                c.surface = ImplicitSurface::idealized_cell();
                c.level = if full { 6 } else { 4 };
                c.params.epsilon = 0.01;
                c.t_end = if full { 23000.0 } else { 2000.0 };
                c.schedule = truncate_schedule(&CELL_AC_SCHEDULE, c.t_end);
                c.vtk_every = 100;
            }
            Experiment::CellCh => {
                c.surface = ImplicitSurface::idealized_cell();
                c.model = ModelKind::CahnHilliard;
                c.level = if full { 6 } else { 4 };
                c.params.epsilon = 0.01;
                c.t_end = if full { 36000.0 } else { 20.0 };
                c.schedule = ch_schedule(c.t_end);
                c.vtk_every = 50;
            }
            Experiment::BetaSweep => {
                c.level = if full { 6 } else { 4 };
                c.params.epsilon = 0.01;
                c.t_end = 500.0;
                c.schedule = vec![(500.0, 10.0)];
            }
        }
        c
    }

    /// Parses config text over the preset named by its `experiment` key
    /// (default `custom`); explicit keys override preset fields. The whole
    /// schema is checked before any mesh or field exists.
    pub fn from_text(text: &str, full: bool) -> Result<Self, ConfigError> {
        let entries = parse_entries(text)?;
        let mut experiment = Experiment::Custom;
        for e in &entries {
            if e.key == "experiment" {
                experiment = Experiment::from_word(&e.value).ok_or_else(|| {
                    ConfigError::BadValue {
                        line: e.line,
                        key: e.key.clone(),
                        want: "an experiment name",
                        got: e.value.clone(),
                    }
                })?;
            }
        }
        let mut cfg = RunConfig::preset(experiment, full);
        apply_entries(&mut cfg, &entries)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Cross-field checks run after every parse and preset application.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, why: String| {
            Err(ConfigError::Invalid { key: key.to_string(), why })
        };
        if self.level > 12 {
            return bad("mesh.level", format!("{} exceeds the sane maximum 12", self.level));
        }
        for (key, v) in [
            ("model.epsilon", self.params.epsilon),
            ("model.alpha", self.params.alpha),
            ("model.rho", self.params.rho),
            ("model.xi", self.params.xi),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(key, format!("must be positive and finite, got {v}"));
            }
        }
        if !(self.params.beta_s >= 0.0 && self.params.beta_s.is_finite()) {
            return bad("model.beta_s", format!("must be >= 0, got {}", self.params.beta_s));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad("time.t_end", format!("must be positive, got {}", self.t_end));
        }
        if self.schedule.is_empty() {
            return bad("time.dt_schedule", "must have at least one segment".into());
        }
        let mut prev = 0.0;
        for &(end, dt) in &self.schedule {
            if !(end > prev) {
                return bad(
                    "time.dt_schedule",
                    format!("segment ends must increase, got {end} after {prev}"),
                );
            }
            if !(dt > 0.0 && dt.is_finite()) {
                return bad("time.dt_schedule", format!("dt must be positive, got {dt}"));
            }
            prev = end;
        }
        let last = self.schedule.last().unwrap().0;
        if (last - self.t_end).abs() > 1e-9 * self.t_end.max(1.0) {
            return bad(
                "time.dt_schedule",
                format!("schedule ends at {last} but t_end is {}", self.t_end),
            );
        }
        if self.csv_every == 0 {
            return bad("output.csv_every", "must be at least 1".into());
        }
        if !(self.solver.rel_tol > 0.0 && self.solver.abs_tol >= 0.0) {
            return bad("solver.rel_tol", "tolerances must be positive".into());
        }
        if self.solver.max_iter == 0 || self.solver.restart == 0 {
            return bad("solver.max_iter", "iteration limits must be positive".into());
        }
        Ok(())
    }
}

fn validation_dt(level: u32) -> f64 {
    0.5f64.powi(1 + level as i32)
}

/// Per-level settings for a convergence study: halved mesh, halved step.
pub fn validation_level(cfg: &RunConfig, level: u32) -> RunConfig {
    let mut c = cfg.clone();
    c.level = level;
    let dt = validation_dt(level);
    c.schedule = vec![(c.t_end, dt)];
    c
}

struct Entry {
    line: usize,
    key: String,
    value: String,
}

fn parse_entries(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut out: Vec<Entry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            return Err(ConfigError::BadLine { line });
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::BadLine { line });
        }
        if out.iter().any(|e| e.key == key) {
            return Err(ConfigError::DuplicateKey { line, key });
        }
        out.push(Entry { line, key, value });
    }
    Ok(out)
}

fn apply_entries(cfg: &mut RunConfig, entries: &[Entry]) -> Result<(), ConfigError> {
    // ic parts may arrive in any order; assembled at the end
    let mut ic_kind: Option<&str> = None;
    let mut ic_seed: Option<u64> = None;
    let mut ic_value: Option<f64> = None;
    let mut ic_expr: Option<&str> = None;
    let mut ic_line = 0;

    let mut sphere_center: Option<Vec3> = None;
    let mut sphere_radius: Option<f64> = None;
    let mut surface_line = 0;

    for e in entries {
        let ctx = |want: &'static str| ConfigError::BadValue {
            line: e.line,
            key: e.key.clone(),
            want,
            got: e.value.clone(),
        };
        match e.key.as_str() {
            "experiment" => {} // consumed by from_text
            "surface.kind" => {
                surface_line = e.line;
                cfg.surface = match e.value.as_str() {
                    "sphere" => ImplicitSurface::unit_sphere(),
                    "spindle" => ImplicitSurface::spindle(),
                    "idealized_cell" => ImplicitSurface::idealized_cell(),
                    _ => return Err(ctx("sphere | spindle | idealized_cell")),
                };
            }
            "surface.radius" => {
                surface_line = surface_line.max(e.line);
                sphere_radius = Some(parse_f64(e)?);
            }
            "surface.center" => {
                surface_line = surface_line.max(e.line);
                let v = parse_f64_array(e)?;
                if v.len() != 3 {
                    return Err(ctx("a [x, y, z] triple"));
                }
                sphere_center = Some(Vec3::new(v[0], v[1], v[2]));
            }
            "mesh.level" => cfg.level = parse_u64(e)? as u32,
            "mesh.max_tets" => cfg.max_tets = parse_u64(e)? as usize,
            "model.kind" => {
                cfg.model = match e.value.as_str() {
                    "allen_cahn" => ModelKind::AllenCahn,
                    "cahn_hilliard" => ModelKind::CahnHilliard,
                    _ => return Err(ctx("allen_cahn | cahn_hilliard")),
                };
            }
            "model.epsilon" => cfg.params.epsilon = parse_f64(e)?,
            "model.alpha" => cfg.params.alpha = parse_f64(e)?,
            "model.rho" => cfg.params.rho = parse_f64(e)?,
            "model.xi" => cfg.params.xi = parse_f64(e)?,
            "model.beta_s" => cfg.params.beta_s = parse_f64(e)?,
            "model.lumped_nonlinearity" => cfg.params.lumped_nonlinearity = parse_bool(e)?,
            "time.t_end" => {
                cfg.t_end = parse_f64(e)?;
                // a bare t_end with a single-segment schedule stretches it
                if cfg.schedule.len() == 1 {
                    cfg.schedule[0].0 = cfg.t_end;
                }
            }
            "time.dt" => {
                let dt = parse_f64(e)?;
                cfg.schedule = vec![(cfg.t_end, dt)];
            }
            "time.dt_schedule" => {
                cfg.schedule = parse_pair_array(e)?;
                if let Some(&(end, _)) = cfg.schedule.last() {
                    cfg.t_end = end;
                }
            }
            "solver.method" => {
                cfg.solver.method = match e.value.as_str() {
                    "auto" => None,
                    "cg" => Some(Method::ConjugateGradient),
                    "bicgstab" => Some(Method::StabilizedBiCg),
                    "gmres" => Some(Method::Gmres),
                    "direct" => Some(Method::Direct),
                    _ => return Err(ctx("auto | cg | bicgstab | gmres | direct")),
                };
            }
            "solver.preconditioner" => {
                cfg.solver.preconditioner = match e.value.as_str() {
                    "auto" => None,
                    "none" => Some(Preconditioner::None),
                    "jacobi" => Some(Preconditioner::Jacobi),
                    "ilu" => Some(Preconditioner::IncompleteLu),
                    _ => return Err(ctx("auto | none | jacobi | ilu")),
                };
            }
            "solver.rel_tol" => cfg.solver.rel_tol = parse_f64(e)?,
            "solver.abs_tol" => cfg.solver.abs_tol = parse_f64(e)?,
            "solver.max_iter" => cfg.solver.max_iter = parse_u64(e)? as usize,
            "solver.restart" => cfg.solver.restart = parse_u64(e)? as usize,
            "output.out_dir" => cfg.out_dir = PathBuf::from(&e.value),
            "output.vtk_every" => cfg.vtk_every = parse_u64(e)? as usize,
            "output.csv_every" => cfg.csv_every = parse_u64(e)? as usize,
            "initial_condition.kind" => {
                ic_line = e.line;
                ic_kind = Some(e.value.as_str());
            }
            "initial_condition.seed" => {
                ic_line = ic_line.max(e.line);
                ic_seed = Some(parse_u64(e)?);
            }
            "initial_condition.value" => {
                ic_line = ic_line.max(e.line);
                ic_value = Some(parse_f64(e)?);
            }
            "initial_condition.expression" => {
                ic_line = ic_line.max(e.line);
                ic_expr = Some(&e.value);
            }
            _ => {
                return Err(ConfigError::UnknownKey { line: e.line, key: e.key.clone() });
            }
        }
    }

    if sphere_radius.is_some() || sphere_center.is_some() {
        if cfg.surface.kind_word() != "sphere" {
            return Err(ConfigError::Invalid {
                key: "surface.radius".into(),
                why: format!("only applies to spheres (line {surface_line})"),
            });
        }
        let center = sphere_center.unwrap_or_else(Vec3::zeros);
        let radius = sphere_radius.unwrap_or(1.0);
        if !(radius > 0.0) {
            return Err(ConfigError::Invalid {
                key: "surface.radius".into(),
                why: format!("must be positive, got {radius}"),
            });
        }
        cfg.surface = ImplicitSurface::sphere(center, radius);
    }

    if let Some(kind) = ic_kind {
        let stray = |key: &str| ConfigError::Invalid {
            key: key.to_string(),
            why: format!("does not belong to initial_condition.kind = {kind} (line {ic_line})"),
        };
        cfg.ic = match kind {
            "random" => {
                if ic_value.is_some() {
                    return Err(stray("initial_condition.value"));
                }
                if ic_expr.is_some() {
                    return Err(stray("initial_condition.expression"));
                }
                InitialCondition::Random { seed: ic_seed.unwrap_or(0) }
            }
            "constant" => {
                if ic_seed.is_some() {
                    return Err(stray("initial_condition.seed"));
                }
                if ic_expr.is_some() {
                    return Err(stray("initial_condition.expression"));
                }
                let v = ic_value.ok_or_else(|| ConfigError::Invalid {
                    key: "initial_condition.value".into(),
                    why: "required for constant initial data".into(),
                })?;
                InitialCondition::Constant(v)
            }
            "linear_x3_plus_half" => {
                if ic_seed.is_some() || ic_value.is_some() || ic_expr.is_some() {
                    return Err(stray("initial_condition.*"));
                }
                InitialCondition::LinearX3PlusHalf
            }
            "expression" => {
                if ic_seed.is_some() || ic_value.is_some() {
                    return Err(stray("initial_condition.seed"));
                }
                let src = ic_expr.ok_or_else(|| ConfigError::Invalid {
                    key: "initial_condition.expression".into(),
                    why: "required for expression initial data".into(),
                })?;
                InitialCondition::Expression(Expr::parse(src)?)
            }
            _ => {
                return Err(ConfigError::BadValue {
                    line: ic_line,
                    key: "initial_condition.kind".into(),
                    want: "random | constant | linear_x3_plus_half | expression",
                    got: kind.to_string(),
                });
            }
        };
    } else if let Some(seed) = ic_seed {
        // bare seed override keeps the preset's random initial data
        if !matches!(cfg.ic, InitialCondition::Random { .. }) {
            return Err(ConfigError::Invalid {
                key: "initial_condition.seed".into(),
                why: "preset initial data is not random; set initial_condition.kind".into(),
            });
        }
        cfg.ic = InitialCondition::Random { seed };
    } else if ic_value.is_some() || ic_expr.is_some() {
        return Err(ConfigError::Invalid {
            key: "initial_condition.kind".into(),
            why: "must be set when other initial_condition keys are".into(),
        });
    }
    Ok(())
}

impl ImplicitSurface {
    fn kind_word(&self) -> &'static str {
        match self.kind {
            SurfaceKind::Sphere { .. } => "sphere",
            SurfaceKind::Spindle => "spindle",
            SurfaceKind::IdealizedCell => "idealized_cell",
            SurfaceKind::Custom { .. } => "custom",
        }
    }
}

fn parse_f64(e: &Entry) -> Result<f64, ConfigError> {
    e.value.parse().map_err(|_| ConfigError::BadValue {
        line: e.line,
        key: e.key.clone(),
        want: "a number",
        got: e.value.clone(),
    })
}

fn parse_u64(e: &Entry) -> Result<u64, ConfigError> {
    e.value.parse().map_err(|_| ConfigError::BadValue {
        line: e.line,
        key: e.key.clone(),
        want: "a non-negative integer",
        got: e.value.clone(),
    })
}

fn parse_bool(e: &Entry) -> Result<bool, ConfigError> {
    match e.value.as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::BadValue {
            line: e.line,
            key: e.key.clone(),
            want: "true | false",
            got: e.value.clone(),
        }),
    }
}

/// `[a, b, c]`
fn parse_f64_array(e: &Entry) -> Result<Vec<f64>, ConfigError> {
    let bad = |want: &'static str| ConfigError::BadValue {
        line: e.line,
        key: e.key.clone(),
        want,
        got: e.value.clone(),
    };
    let inner = e
        .value
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| bad("a bracketed array"))?;
    inner
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| bad("numbers in the array")))
        .collect()
}

/// `[[end, dt], [end, dt], ...]`
fn parse_pair_array(e: &Entry) -> Result<Vec<(f64, f64)>, ConfigError> {
    let bad = |want: &'static str| ConfigError::BadValue {
        line: e.line,
        key: e.key.clone(),
        want,
        got: e.value.clone(),
    };
    let inner = e
        .value
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| bad("a bracketed array of [end, dt] pairs"))?
        .trim();
    let mut out = Vec::new();
    let mut rest = inner;
    while !rest.is_empty() {
        rest = rest
            .strip_prefix('[')
            .ok_or_else(|| bad("[end, dt] pairs"))?;
        let close = rest.find(']').ok_or_else(|| bad("[end, dt] pairs"))?;
        let body = &rest[..close];
        let nums: Vec<&str> = body.split(',').map(str::trim).collect();
        if nums.len() != 2 {
            return Err(bad("exactly two numbers per pair"));
        }
        let end: f64 = nums[0].parse().map_err(|_| bad("numbers in the pairs"))?;
        let dt: f64 = nums[1].parse().map_err(|_| bad("numbers in the pairs"))?;
        out.push((end, dt));
        rest = rest[close + 1..].trim_start();
        if let Some(r) = rest.strip_prefix(',') {
            rest = r.trim_start();
        } else if !rest.is_empty() {
            return Err(bad("commas between pairs"));
        }
    }
    if out.is_empty() {
        return Err(bad("at least one [end, dt] pair"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_custom_config() {
        let text = "
            # comment lines and blanks are skipped
            surface.kind = sphere
            surface.radius = 2.0
            surface.center = [0.5, 0, 0]
            mesh.level = 4
            model.kind = cahn_hilliard
            model.epsilon = 0.02          # trailing comment
            model.beta_s = 0.5
            time.dt_schedule = [[1, 0.01], [20, 1]]
            solver.method = gmres
            solver.rel_tol = 1e-8
            output.out_dir = /tmp/somewhere
            output.vtk_every = 10
            initial_condition.kind = random
            initial_condition.seed = 7
        ";
        let cfg = RunConfig::from_text(text, false).unwrap();
        assert_eq!(cfg.level, 4);
        assert_eq!(cfg.model, ModelKind::CahnHilliard);
        assert_eq!(cfg.params.epsilon, 0.02);
        assert_eq!(cfg.params.beta_s, 0.5);
        assert_eq!(cfg.t_end, 20.0);
        assert_eq!(cfg.schedule, vec![(1.0, 0.01), (20.0, 1.0)]);
        assert_eq!(cfg.solver.method, Some(Method::Gmres));
        assert_eq!(cfg.out_dir, PathBuf::from("/tmp/somewhere"));
        assert!(matches!(cfg.ic, InitialCondition::Random { seed: 7 }));
        let r = cfg.surface.phi(Vec3::new(2.5, 0.0, 0.0));
        assert!(r.abs() < 1e-12, "radius/center override not applied");
    }

    #[test]
    fn unknown_and_duplicate_keys_are_rejected() {
        let err = RunConfig::from_text("mesh.depth = 3", false).unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { line: 1, .. }), "{err}");
        let err =
            RunConfig::from_text("mesh.level = 3\nmesh.level = 4", false).unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateKey { line: 2, .. }), "{err}");
        let err = RunConfig::from_text("just some words", false).unwrap_err();
        assert!(matches!(err, ConfigError::BadLine { line: 1 }), "{err}");
    }

    #[test]
    fn presets_carry_published_schedules() {
        let desk = RunConfig::preset(Experiment::SphereAc, false);
        assert_eq!(desk.schedule, vec![(10.0, 1.0), (60.0, 5.0), (400.0, 10.0)]);
        assert_eq!(desk.level, 4);
        let full = RunConfig::preset(Experiment::SphereAc, true);
        assert_eq!(full.schedule.last(), Some(&(22560.0, 200.0)));
        assert_eq!(full.level, 6);
        let ch = RunConfig::preset(Experiment::SphereCh, false);
        assert_eq!(ch.schedule[0], (1.0, 0.01));
        let cell = RunConfig::preset(Experiment::CellAc, false);
        assert_eq!(cell.schedule, vec![(200.0, 1.0), (500.0, 5.0), (2000.0, 10.0)]);
        desk.validate().unwrap();
        full.validate().unwrap();
        ch.validate().unwrap();
        cell.validate().unwrap();
        for exp in [
            Experiment::Custom,
            Experiment::AcValidation,
            Experiment::ChValidation,
            Experiment::SphereCh,
            Experiment::SpindleAc,
            Experiment::SpindleCh,
            Experiment::CellCh,
            Experiment::BetaSweep,
        ] {
            RunConfig::preset(exp, false).validate().unwrap();
            RunConfig::preset(exp, true).validate().unwrap();
        }
    }

    #[test]
    fn preset_keys_override_cleanly() {
        let text = "
            experiment = sphere_ac
            model.epsilon = 0.05
            initial_condition.seed = 42
        ";
        let cfg = RunConfig::from_text(text, false).unwrap();
        assert_eq!(cfg.experiment, Experiment::SphereAc);
        assert_eq!(cfg.params.epsilon, 0.05);
        assert!(matches!(cfg.ic, InitialCondition::Random { seed: 42 }));
        // untouched preset fields survive
        assert_eq!(cfg.schedule.last(), Some(&(400.0, 10.0)));
    }

    #[test]
    fn inconsistent_initial_condition_keys_fail() {
        let bad = "initial_condition.kind = constant";
        assert!(RunConfig::from_text(bad, false).is_err());
        let bad = "initial_condition.kind = random\ninitial_condition.value = 0.5";
        assert!(RunConfig::from_text(bad, false).is_err());
        let bad = "initial_condition.value = 0.5";
        assert!(RunConfig::from_text(bad, false).is_err());
        let good = "initial_condition.kind = constant\ninitial_condition.value = 0.5";
        let cfg = RunConfig::from_text(good, false).unwrap();
        assert!(matches!(cfg.ic, InitialCondition::Constant(v) if v == 0.5));
        let good = "initial_condition.kind = expression\ninitial_condition.expression = x3^2 - 0.5";
        let cfg = RunConfig::from_text(good, false).unwrap();
        let InitialCondition::Expression(e) = &cfg.ic else {
            panic!("wrong ic kind")
        };
        assert_eq!(e.eval(Vec3::new(0.0, 0.0, 2.0)), 3.5);
    }

    #[test]
    fn schedule_consistency_is_enforced() {
        let bad = "time.dt_schedule = [[10, 1], [5, 1]]";
        assert!(RunConfig::from_text(bad, false).is_err());
        let bad = "time.dt_schedule = [[10, -1]]";
        assert!(RunConfig::from_text(bad, false).is_err());
        let bad = "time.t_end = 0";
        assert!(RunConfig::from_text(bad, false).is_err());
        let good = "time.t_end = 3\ntime.dt = 0.5";
        let cfg = RunConfig::from_text(good, false).unwrap();
        assert_eq!(cfg.schedule, vec![(3.0, 0.5)]);
    }

    #[test]
    fn validation_levels_halve_the_step() {
        let cfg = RunConfig::preset(Experiment::AcValidation, false);
        let l2 = validation_level(&cfg, 2);
        let l3 = validation_level(&cfg, 3);
        assert_eq!(l2.schedule, vec![(5.0, 0.125)]);
        assert_eq!(l3.schedule, vec![(5.0, 0.0625)]);
    }
}
