//! Experiment drivers: plain time-stepping runs with CSV/VTK artifacts, the
//! manufactured-solution convergence study, and the concurrent stabilization
//! sweep.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write as IoWrite};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{ConfigError, Experiment, InitialCondition, ModelKind, RunConfig, validation_level};
use crate::cut::{CutComplex, CutError};
use crate::diagnostics::{
    CsvWriter, ErrorNorms, TimeSeriesRecord, lyapunov_energy, numerical_energy_ac, observe_ac,
    observe_ch, surface_l2_error,
};
use crate::fe::{AssembleError, interpolate, random_field};
use crate::manufactured;
use crate::mesh::{BackgroundMesh, MeshError};
use crate::model::{AcStepper, ChStepper, ModelError, StepReport};
use crate::vtk::write_surface_vtk;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("mesh: {0}")]
    Mesh(#[from] MeshError),
    #[error("surface extraction: {0}")]
    Cut(#[from] CutError),
    #[error("assembly: {0}")]
    Assemble(#[from] AssembleError),
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("io: {0}")]
    Io(#[from] io::Error),
}

/// What a completed run hands back (everything also lands on disk).
#[derive(Debug)]
pub struct RunSummary {
    pub steps: usize,
    pub final_time: f64,
    pub records: Vec<TimeSeriesRecord>,
    pub out_dir: PathBuf,
}

/// Executes one configured run end to end.
pub fn run(cfg: &RunConfig) -> Result<RunSummary, SimError> {
    cfg.validate()?;
    let cut = build_cut(cfg)?;
    let drive = match cfg.experiment {
        Experiment::AcValidation | Experiment::ChValidation => {
            let mut stepper = manufactured_stepper(cfg, &cut)?;
            drive(&mut stepper, &cut, cfg, None)?
        }
        _ => {
            let mut stepper = configured_stepper(cfg, &cut)?;
            drive(&mut stepper, &cut, cfg, None)?
        }
    };
    Ok(RunSummary {
        steps: drive.steps,
        final_time: drive.final_time,
        records: drive.records,
        out_dir: cfg.out_dir.clone(),
    })
}

/// Background mesh refined toward the surface, banded, and cut.
pub fn build_cut(cfg: &RunConfig) -> Result<CutComplex, SimError> {
    let mut mesh = BackgroundMesh::build_initial(cfg.surface.bbox);
    mesh.refine_toward_surface(&cfg.surface, cfg.level, cfg.max_tets)?;
    let band = mesh.select_band(&cfg.surface)?;
    Ok(CutComplex::build(&mesh, &cfg.surface, &band, 4, 2)?)
}

/// Nodal initial data for the configured initial condition.
pub fn initial_field(cfg: &RunConfig, cut: &CutComplex) -> Vec<f64> {
    match &cfg.ic {
        InitialCondition::Random { seed } => random_field(cut, *seed),
        InitialCondition::Constant(v) => vec![*v; cut.n_dofs()],
        InitialCondition::LinearX3PlusHalf => interpolate(cut, &|x| x.z + 0.5),
        InitialCondition::Expression(e) => interpolate(cut, &|x| e.eval(x)),
    }
}

enum AnyStepper<'a> {
    Ac(AcStepper<'a>),
    Ch(ChStepper<'a>),
}

impl<'a> AnyStepper<'a> {
    fn step(&mut self, dt: f64) -> Result<StepReport, ModelError> {
        match self {
            AnyStepper::Ac(s) => s.step(dt),
            AnyStepper::Ch(s) => s.step(dt),
        }
    }

    fn observe(&self, iters: usize) -> TimeSeriesRecord {
        match self {
            AnyStepper::Ac(s) => observe_ac(s, iters),
            AnyStepper::Ch(s) => observe_ch(s, iters),
        }
    }

    fn time(&self) -> f64 {
        match self {
            AnyStepper::Ac(s) => s.time(),
            AnyStepper::Ch(s) => s.time(),
        }
    }

    /// `(lyapunov, scheme energy)`; the scheme energy is only defined for the
    /// relaxation model and reported as 0 otherwise.
    fn energies(&self) -> (f64, f64) {
        match self {
            AnyStepper::Ac(s) => (
                lyapunov_energy(&s.ops, &s.params, s.state()),
                numerical_energy_ac(&s.ops, &s.params, s.state(), s.previous()),
            ),
            AnyStepper::Ch(s) => {
                (lyapunov_energy(&s.ops, &s.params, s.concentration()), 0.0)
            }
        }
    }

    fn fields(&self) -> Vec<(&'static str, &[f64])> {
        match self {
            AnyStepper::Ac(s) => vec![("eta", s.state())],
            AnyStepper::Ch(s) => vec![("c", s.concentration()), ("mu", s.chemical_potential())],
        }
    }
}

/// Stepper for the configured model and initial condition, no forcing.
fn configured_stepper<'a>(
    cfg: &RunConfig,
    cut: &'a CutComplex,
) -> Result<AnyStepper<'a>, SimError> {
    let u0 = initial_field(cfg, cut);
    Ok(match cfg.model {
        ModelKind::AllenCahn => {
            let mut s = AcStepper::new(cut, cfg.params, u0, 0.0)?;
            s.solver = cfg.solver.resolve(cfg.model);
            AnyStepper::Ac(s)
        }
        ModelKind::CahnHilliard => {
            let mut s = ChStepper::new(cut, cfg.params, u0, 0.0)?;
            s.solver = cfg.solver.resolve(cfg.model);
            AnyStepper::Ch(s)
        }
    })
}

/// Stepper seeded with the known exact solution and carrying its forcing.
fn manufactured_stepper<'a>(
    cfg: &RunConfig,
    cut: &'a CutComplex,
) -> Result<AnyStepper<'a>, SimError> {
    let params = cfg.params;
    let u0 = interpolate(cut, &|x| manufactured::field_star(x, 0.0));
    Ok(match cfg.model {
        ModelKind::AllenCahn => {
            let mut s = AcStepper::new(cut, params, u0, 0.0)?
                .with_forcing(Box::new(move |x, t| manufactured::ac_forcing(&params, x, t)));
            s.solver = cfg.solver.resolve(cfg.model);
            AnyStepper::Ac(s)
        }
        ModelKind::CahnHilliard => {
            let mut s = ChStepper::new(cut, params, u0, 0.0)?
                .with_forcing(Box::new(move |x, t| manufactured::ch_forcing(&params, x, t)));
            s.solver = cfg.solver.resolve(cfg.model);
            AnyStepper::Ch(s)
        }
    })
}

fn segment_steps(start: f64, end: f64, dt: f64) -> Result<usize, SimError> {
    let span = end - start;
    let n = (span / dt).round();
    if n < 1.0 || (n * dt - span).abs() > 1e-9 * span.max(1.0) {
        return Err(ConfigError::Invalid {
            key: "time.dt_schedule".into(),
            why: format!("dt {dt} does not divide the segment ({start}, {end}]"),
        }
        .into());
    }
    Ok(n as usize)
}

struct DriveResult {
    steps: usize,
    final_time: f64,
    records: Vec<TimeSeriesRecord>,
    /// `Some(t)` if the energy watchdog tripped and the run stopped early.
    blew_up_at: Option<f64>,
    /// Largest relative single-step rise, ignoring the two start-up steps.
    max_rise_lyap: f64,
    max_rise_num: f64,
}

/// The shared time loop: walks the schedule, records diagnostics, writes
/// snapshots, and (optionally) aborts once the Lyapunov energy exceeds
/// `blowup_ratio` times its initial value. Failure dumps the state first.
fn drive(
    stepper: &mut AnyStepper,
    cut: &CutComplex,
    cfg: &RunConfig,
    blowup_ratio: Option<f64>,
) -> Result<DriveResult, SimError> {
    fs::create_dir_all(&cfg.out_dir)?;
    let mut csv = CsvWriter::create(&cfg.out_dir.join("diagnostics.csv"))?;
    let mut records = Vec::new();

    let rec0 = stepper.observe(0);
    csv.append(&rec0)?;
    records.push(rec0);
    if cfg.vtk_every > 0 {
        write_surface_vtk(&cfg.out_dir.join("snap_0.vtk"), cut, &stepper.fields())?;
    }

    let mut plan = Vec::new();
    let mut cursor = stepper.time();
    for &(end, dt) in &cfg.schedule {
        plan.push((segment_steps(cursor, end, dt)?, dt));
        cursor = end;
    }
    let total: usize = plan.iter().map(|&(n, _)| n).sum();

    let (e0_lyap, e0_num) = stepper.energies();
    let (mut prev_lyap, mut prev_num) = (e0_lyap, e0_num);
    let mut out = DriveResult {
        steps: 0,
        final_time: stepper.time(),
        records,
        blew_up_at: None,
        max_rise_lyap: 0.0,
        max_rise_num: 0.0,
    };

    let mut k = 0usize;
    'schedule: for (n, dt) in plan {
        for _ in 0..n {
            let report = match stepper.step(dt) {
                Ok(r) => r,
                Err(e) => {
                    let _ = write_surface_vtk(
                        &cfg.out_dir.join("snap_fail.vtk"),
                        cut,
                        &stepper.fields(),
                    );
                    csv.finish()?;
                    return Err(e.into());
                }
            };
            k += 1;

            let (e_lyap, e_num) = stepper.energies();
            if k >= 3 {
                out.max_rise_lyap = out.max_rise_lyap.max(rel_rise(prev_lyap, e_lyap));
                out.max_rise_num = out.max_rise_num.max(rel_rise(prev_num, e_num));
            }
            (prev_lyap, prev_num) = (e_lyap, e_num);

            let tripped =
                blowup_ratio.is_some_and(|r| !e_lyap.is_finite() || e_lyap > r * e0_lyap.abs());
            if k % cfg.csv_every == 0 || k == total || tripped {
                let rec = stepper.observe(report.iters);
                if !rec.is_finite() {
                    let _ = write_surface_vtk(
                        &cfg.out_dir.join("snap_fail.vtk"),
                        cut,
                        &stepper.fields(),
                    );
                    csv.finish()?;
                    return Err(ModelError::NonFinite { t: stepper.time() }.into());
                }
                csv.append(&rec)?;
                out.records.push(rec);
            }
            if cfg.vtk_every > 0 && k % cfg.vtk_every == 0 {
                write_surface_vtk(
                    &cfg.out_dir.join(format!("snap_{k}.vtk")),
                    cut,
                    &stepper.fields(),
                )?;
            }
            if tripped {
                out.blew_up_at = Some(stepper.time());
                break 'schedule;
            }
        }
    }

    csv.finish()?;
    out.steps = k;
    out.final_time = stepper.time();
    Ok(out)
}

fn rel_rise(prev: f64, cur: f64) -> f64 {
    if !prev.is_finite() || !cur.is_finite() {
        return f64::INFINITY;
    }
    (cur - prev) / prev.abs().max(f64::MIN_POSITIVE)
}

/// One row of the convergence study.
#[derive(Debug, Clone)]
pub struct LevelRow {
    pub level: u32,
    pub h: f64,
    pub dt: f64,
    pub dofs: usize,
    pub u_linf_l2: f64,
    pub u_l2_l2: f64,
    pub mu_linf_l2: Option<f64>,
    pub mu_l2_l2: Option<f64>,
}

/// Runs the manufactured-solution study over a range of refinement levels
/// (step size halves with the mesh) and writes `convergence.csv`. Errors are
/// measured against the exact solution after every step; the `mu` columns are
/// only produced by the conserved model.
pub fn run_validation(
    cfg: &RunConfig,
    levels: RangeInclusive<u32>,
) -> Result<Vec<LevelRow>, SimError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for level in levels {
        let lcfg = validation_level(cfg, level);
        let dt = lcfg.schedule[0].1;
        let cut = build_cut(&lcfg)?;
        let n = segment_steps(0.0, lcfg.t_end, dt)?;
        let params = lcfg.params;

        let mut u_norms = ErrorNorms::default();
        let mut mu_norms = ErrorNorms::default();
        match lcfg.model {
            ModelKind::AllenCahn => {
                let u0 = interpolate(&cut, &|x| manufactured::field_star(x, 0.0));
                let mut st = AcStepper::new(&cut, params, u0, 0.0)?.with_forcing(Box::new(
                    move |x, t| manufactured::ac_forcing(&params, x, t),
                ));
                st.solver = lcfg.solver.resolve(lcfg.model);
                for _ in 0..n {
                    st.step(dt)?;
                    let t = st.time();
                    let e = surface_l2_error(&cut, st.state(), &|x| {
                        manufactured::field_star(x, t)
                    });
                    u_norms.push(dt, e);
                }
            }
            ModelKind::CahnHilliard => {
                let c0 = interpolate(&cut, &|x| manufactured::field_star(x, 0.0));
                let mut st = ChStepper::new(&cut, params, c0, 0.0)?.with_forcing(Box::new(
                    move |x, t| manufactured::ch_forcing(&params, x, t),
                ));
                st.solver = lcfg.solver.resolve(lcfg.model);
                for _ in 0..n {
                    st.step(dt)?;
                    let t = st.time();
                    let ec = surface_l2_error(&cut, st.concentration(), &|x| {
                        manufactured::field_star(x, t)
                    });
                    let emu = surface_l2_error(&cut, st.chemical_potential(), &|x| {
                        manufactured::mu_star(&params, x, t)
                    });
                    u_norms.push(dt, ec);
                    mu_norms.push(dt, emu);
                }
            }
        }

        let is_ch = lcfg.model == ModelKind::CahnHilliard;
        rows.push(LevelRow {
            level,
            h: cut.h,
            dt,
            dofs: cut.n_dofs(),
            u_linf_l2: u_norms.linf_l2(),
            u_l2_l2: u_norms.l2_l2(),
            mu_linf_l2: is_ch.then(|| mu_norms.linf_l2()),
            mu_l2_l2: is_ch.then(|| mu_norms.l2_l2()),
        });
    }
    write_convergence_csv(&cfg.out_dir, &rows)?;
    Ok(rows)
}

fn write_convergence_csv(out_dir: &Path, rows: &[LevelRow]) -> io::Result<()> {
    fs::create_dir_all(out_dir)?;
    let f = File::create(out_dir.join("convergence.csv"))?;
    let mut w = BufWriter::new(f);
    writeln!(
        w,
        "level,h,dt,dofs,u_linf_l2,u_l2_l2,mu_linf_l2,mu_l2_l2,\
         rate_u_linf_l2,rate_u_l2_l2,rate_mu_linf_l2,rate_mu_l2_l2"
    )?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    // mesh and step both halve per level, so the observed order is the log2
    // ratio of successive errors
    let rate = |prev: Option<f64>, cur: Option<f64>| match (prev, cur) {
        (Some(p), Some(c)) if p > 0.0 && c > 0.0 => (p / c).log2().to_string(),
        _ => String::new(),
    };
    for (i, r) in rows.iter().enumerate() {
        let prev = i.checked_sub(1).map(|j| &rows[j]);
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.level,
            r.h,
            r.dt,
            r.dofs,
            r.u_linf_l2,
            r.u_l2_l2,
            opt(r.mu_linf_l2),
            opt(r.mu_l2_l2),
            rate(prev.map(|p| p.u_linf_l2), Some(r.u_linf_l2)),
            rate(prev.map(|p| p.u_l2_l2), Some(r.u_l2_l2)),
            rate(prev.and_then(|p| p.mu_linf_l2), r.mu_linf_l2),
            rate(prev.and_then(|p| p.mu_l2_l2), r.mu_l2_l2),
        )?;
    }
    w.flush()
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepStatus {
    Completed { final_time: f64 },
    /// Energy watchdog tripped or the state left the representable range.
    Diverged { t: f64 },
    Failed { reason: String },
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub beta: f64,
    pub status: SweepStatus,
    pub initial_energy: f64,
    pub peak_energy: f64,
    /// Largest relative one-step energy rise past the two start-up steps;
    /// `max_rise_num` tracks the scheme energy (relaxation model only).
    pub max_rise_lyap: f64,
    pub max_rise_num: f64,
    pub out_dir: PathBuf,
}

/// Runs the same configuration once per stabilization value, concurrently
/// (one independent stepper per worker), each into its own subdirectory.
/// A run counts as diverged when its Lyapunov energy exceeds ten times the
/// initial value or the state stops being finite.
pub fn run_beta_sweep(
    base: &RunConfig,
    betas: &[f64],
) -> Result<Vec<SweepOutcome>, SimError> {
    base.validate()?;
    fs::create_dir_all(&base.out_dir)?;
    let outcomes: Vec<SweepOutcome> = std::thread::scope(|scope| {
        let handles: Vec<_> = betas
            .iter()
            .map(|&beta| scope.spawn(move || sweep_worker(base, beta)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });

    let f = File::create(base.out_dir.join("sweep_summary.csv"))?;
    let mut w = BufWriter::new(f);
    writeln!(w, "beta,status,final_or_failure_time,initial_energy,peak_energy")?;
    for o in &outcomes {
        let (status, t) = match &o.status {
            SweepStatus::Completed { final_time } => ("completed", *final_time),
            SweepStatus::Diverged { t } => ("diverged", *t),
            SweepStatus::Failed { .. } => ("failed", f64::NAN),
        };
        writeln!(
            w,
            "{},{},{},{},{}",
            o.beta, status, t, o.initial_energy, o.peak_energy
        )?;
    }
    w.flush()?;
    Ok(outcomes)
}

fn sweep_worker(base: &RunConfig, beta: f64) -> SweepOutcome {
    let mut cfg = base.clone();
    cfg.params.beta_s = beta;
    cfg.out_dir = base.out_dir.join(format!("beta_{beta}"));
    let mut outcome = SweepOutcome {
        beta,
        status: SweepStatus::Failed { reason: "not started".into() },
        initial_energy: f64::NAN,
        peak_energy: f64::NAN,
        max_rise_lyap: f64::NAN,
        max_rise_num: f64::NAN,
        out_dir: cfg.out_dir.clone(),
    };

    let attempt = || -> Result<DriveResult, SimError> {
        let cut = build_cut(&cfg)?;
        let mut stepper = configured_stepper(&cfg, &cut)?;
        drive(&mut stepper, &cut, &cfg, Some(10.0))
    };
    match attempt() {
        Ok(d) => {
            outcome.initial_energy = d.records.first().map_or(f64::NAN, |r| r.e_lyap);
            outcome.peak_energy = d
                .records
                .iter()
                .map(|r| r.e_lyap)
                .fold(f64::NEG_INFINITY, f64::max);
            outcome.max_rise_lyap = d.max_rise_lyap;
            outcome.max_rise_num = d.max_rise_num;
            outcome.status = match d.blew_up_at {
                Some(t) => SweepStatus::Diverged { t },
                None => SweepStatus::Completed { final_time: d.final_time },
            };
        }
        Err(SimError::Model(ModelError::NonFinite { t })) => {
            outcome.status = SweepStatus::Diverged { t };
        }
        Err(e) => {
            outcome.status = SweepStatus::Failed { reason: e.to_string() };
        }
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SolverSettings;
    use tempfile::tempdir;

    fn quick_cfg(out: &Path) -> RunConfig {
        let mut cfg = RunConfig::base();
        cfg.level = 2;
        cfg.t_end = 0.5;
        cfg.schedule = vec![(0.5, 0.1)];
        cfg.out_dir = out.to_path_buf();
        cfg.solver = SolverSettings::default();
        cfg
    }

    #[test]
    fn run_writes_csv_and_snapshots() {
        let dir = tempdir().unwrap();
        let mut cfg = quick_cfg(dir.path());
        cfg.vtk_every = 2;
        cfg.ic = InitialCondition::Random { seed: 3 };
        let summary = run(&cfg).unwrap();
        assert_eq!(summary.steps, 5);
        assert!((summary.final_time - 0.5).abs() < 1e-12);
        // t=0 row plus one per step at csv_every=1
        assert_eq!(summary.records.len(), 6);
        let csv = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
        assert!(csv.starts_with("t,E_lyap,E_num,mass,"));
        assert_eq!(csv.lines().count(), 7);
        for snap in ["snap_0.vtk", "snap_2.vtk", "snap_4.vtk"] {
            assert!(dir.path().join(snap).exists(), "{snap} missing");
        }
        assert!(!dir.path().join("snap_5.vtk").exists());
    }

    #[test]
    fn identical_seeds_give_identical_csv_bytes() {
        let d1 = tempdir().unwrap();
        let d2 = tempdir().unwrap();
        let mut c1 = quick_cfg(d1.path());
        c1.ic = InitialCondition::Random { seed: 11 };
        let mut c2 = quick_cfg(d2.path());
        c2.ic = InitialCondition::Random { seed: 11 };
        run(&c1).unwrap();
        run(&c2).unwrap();
        let a = fs::read(d1.path().join("diagnostics.csv")).unwrap();
        let b = fs::read(d2.path().join("diagnostics.csv")).unwrap();
        assert_eq!(a, b);

        let d3 = tempdir().unwrap();
        let mut c3 = quick_cfg(d3.path());
        c3.ic = InitialCondition::Random { seed: 12 };
        run(&c3).unwrap();
        let c = fs::read(d3.path().join("diagnostics.csv")).unwrap();
        assert_ne!(a, c, "different seeds should change the trajectory");
    }

    #[test]
    fn constant_half_is_a_fixed_point_of_the_conserved_model() {
        let dir = tempdir().unwrap();
        let mut cfg = quick_cfg(dir.path());
        cfg.model = ModelKind::CahnHilliard;
        cfg.ic = InitialCondition::Constant(0.5);
        cfg.vtk_every = 5;
        let summary = run(&cfg).unwrap();
        for rec in &summary.records {
            assert_eq!(rec.min_u, 0.5);
            assert_eq!(rec.max_u, 0.5);
        }
        // homogeneous state: every snapshot identical to the initial one
        let first = fs::read_to_string(dir.path().join("snap_0.vtk")).unwrap();
        let last = fs::read_to_string(dir.path().join("snap_5.vtk")).unwrap();
        assert_eq!(first, last);
    }

    #[test]
    fn schedule_misfit_is_rejected() {
        let dir = tempdir().unwrap();
        let mut cfg = quick_cfg(dir.path());
        cfg.schedule = vec![(0.5, 0.3)]; // 0.3 does not divide 0.5
        assert!(matches!(run(&cfg), Err(SimError::Config(_))));
    }

    #[test]
    fn validation_error_shrinks_with_refinement() {
        let dir = tempdir().unwrap();
        let mut cfg = RunConfig::preset(Experiment::AcValidation, false);
        cfg.t_end = 0.5;
        cfg.schedule = vec![(0.5, cfg.schedule[0].1)];
        cfg.out_dir = dir.path().to_path_buf();
        // level 1 is excluded: its band reaches the origin, where the
        // radially extended exact solution has no value
        let rows = run_validation(&cfg, 2..=3).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[1].u_linf_l2 < 0.5 * rows[0].u_linf_l2, "{rows:?}");
        let csv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
        assert!(csv.lines().count() == 3);
        assert!(csv.lines().nth(1).unwrap().ends_with(",,,,")); // no rates or mu on first row
    }

    #[test]
    fn beta_sweep_runs_workers_into_subdirectories() {
        let dir = tempdir().unwrap();
        let mut cfg = quick_cfg(dir.path());
        cfg.ic = InitialCondition::Random { seed: 5 };
        let outcomes = run_beta_sweep(&cfg, &[0.0, 1.0]).unwrap();
        assert_eq!(outcomes.len(), 2);
        for o in &outcomes {
            assert!(
                matches!(o.status, SweepStatus::Completed { .. }),
                "tiny stable run should complete: {:?}",
                o.status
            );
            assert!(o.out_dir.join("diagnostics.csv").exists());
        }
        assert!(dir.path().join("beta_0").exists());
        assert!(dir.path().join("beta_1").exists());
        assert!(dir.path().join("sweep_summary.csv").exists());
    }
}
