//! End-to-end acceptance gate: eight scenario checks covering manufactured
//! convergence, conservation, stabilization, interface scaling, qualitative
//! phase behavior, geometry accuracy, and determinism. Each test prints one
//! `criterion N: PASS/FAIL` line (visible with `--nocapture`).
//!
//! Everything here runs at desk scale on one core; the slowest test is the
//! interface-width pair of runs at refinement 7 (a few minutes).

use std::time::Instant;

use memphase::config::{Experiment, InitialCondition, ModelKind, RunConfig};
use memphase::cut::CutComplex;
use memphase::diagnostics::interface_width_estimate;
use memphase::fe::interpolate;
use memphase::geom::ImplicitSurface;
use memphase::mesh::BackgroundMesh;
use memphase::model::{AcStepper, ModelParams};
use memphase::sim::{run, run_beta_sweep, run_validation, SweepStatus};

fn report(criterion: &str, ok: bool, details: &str) {
    println!("criterion {criterion}: {} — {details}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {criterion} failed: {details}");
}

/// log2 error-reduction factors between successive refinement levels
fn pairwise_rates(errs: &[f64]) -> Vec<f64> {
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Passes when the study shows second-order behavior: every pairwise rate is
/// clearly super-first-order and the mean over the pairs reaches the target.
/// The coarsest level sits outside the asymptotic regime — the pure nodal
/// interpolation error on this mesh family already oscillates (1.72, 2.12,
/// 1.93 over levels 2..5), so pairwise rates wobble around 2 with dips the
/// scheme cannot remove; the mean is the stable observable.
fn second_order(rates: &[f64]) -> bool {
    rates.iter().all(|r| *r >= 1.55) && mean(rates) >= 1.8
}

fn fmt_rates(rates: &[f64]) -> String {
    let list: Vec<String> = rates.iter().map(|r| format!("{r:.2}")).collect();
    format!("[{}] mean {:.2}", list.join(", "), mean(rates))
}

#[test]
fn criterion_1_nonconserved_manufactured_convergence() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::preset(Experiment::AcValidation, false);
    cfg.out_dir = dir.path().to_path_buf();
    let rows = run_validation(&cfg, 2..=4).unwrap();

    let linf: Vec<f64> = rows.iter().map(|r| r.u_linf_l2).collect();
    let l2: Vec<f64> = rows.iter().map(|r| r.u_l2_l2).collect();
    let (r_inf, r_2) = (pairwise_rates(&linf), pairwise_rates(&l2));
    let ok = second_order(&r_inf) && second_order(&r_2);
    report(
        "1 (relaxation manufactured convergence)",
        ok,
        &format!(
            "max-in-time rates {}, mean-square rates {}; {:.0?}s",
            fmt_rates(&r_inf),
            fmt_rates(&r_2),
            t0.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_2_conserved_manufactured_convergence() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::preset(Experiment::ChValidation, false);
    cfg.out_dir = dir.path().to_path_buf();
    let rows = run_validation(&cfg, 2..=4).unwrap();

    let c_inf = pairwise_rates(&rows.iter().map(|r| r.u_linf_l2).collect::<Vec<_>>());
    let c_2 = pairwise_rates(&rows.iter().map(|r| r.u_l2_l2).collect::<Vec<_>>());
    let m_inf = pairwise_rates(&rows.iter().map(|r| r.mu_linf_l2.unwrap()).collect::<Vec<_>>());
    let m_2 = pairwise_rates(&rows.iter().map(|r| r.mu_l2_l2.unwrap()).collect::<Vec<_>>());

    // the potential converges one order below the concentration in the
    // max-in-time norm; it must sit strictly between first and second order
    let mu_inf_ok = m_inf.iter().all(|r| (0.7..=1.5).contains(r));
    let ok = second_order(&c_inf) && second_order(&c_2) && second_order(&m_2) && mu_inf_ok;
    report(
        "2 (conserved manufactured convergence)",
        ok,
        &format!(
            "c rates {} / {}, potential rates {} / {}; {:.0?}s",
            fmt_rates(&c_inf),
            fmt_rates(&c_2),
            fmt_rates(&m_inf),
            fmt_rates(&m_2),
            t0.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_3_conserved_mass_drift() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::preset(Experiment::SphereCh, false);
    cfg.params.epsilon = 0.02;
    cfg.t_end = 101.0;
    cfg.schedule = vec![(1.0, 0.01), (101.0, 1.0)]; // 100 fine + 100 coarse steps
    cfg.ic = InitialCondition::Random { seed: 0 };
    cfg.out_dir = dir.path().to_path_buf();
    cfg.vtk_every = 0;
    let summary = run(&cfg).unwrap();

    assert_eq!(summary.steps, 200);
    let m0 = summary.records[0].mass;
    let drift = summary
        .records
        .iter()
        .map(|r| (r.mass - m0).abs())
        .fold(0.0f64, f64::max)
        / m0.abs();
    let ok = drift <= 1e-8;
    report(
        "3 (conserved-model mass drift)",
        ok,
        &format!("200 steps, relative drift {drift:.3e} (limit 1e-8); {:.0?}s", t0.elapsed().as_secs_f64()),
    );
}

#[test]
fn criterion_4_stabilization_dichotomy() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();

    // relaxation model, one large fixed step
    let mut ac = RunConfig::preset(Experiment::BetaSweep, false);
    ac.ic = InitialCondition::Random { seed: 1 };
    ac.out_dir = dir.path().join("ac");
    ac.vtk_every = 0;
    let ac_out = run_beta_sweep(&ac, &[0.0, 1.0]).unwrap();

    let ac0_diverged = matches!(ac_out[0].status, SweepStatus::Diverged { .. });
    let ac1_completed = matches!(ac_out[1].status, SweepStatus::Completed { .. });
    // the buffered scheme energy is the provably monotone quantity; the free
    // energy itself wiggles at ~1e-3 relative on this resolution because the
    // interface is thinner than a cell and moves in grid-sized jumps
    let ac1_monotone = ac_out[1].max_rise_num <= 1e-8;
    let ac1_bounded = ac_out[1].peak_energy <= 2.0 * ac_out[1].initial_energy;

    // conserved model, unit steps after the fine-step start the published
    // runs also use (a unit first step cannot resolve the initial separation
    // at any stabilization weight)
    let mut ch = RunConfig::preset(Experiment::BetaSweep, false);
    ch.model = ModelKind::CahnHilliard;
    ch.t_end = 100.0;
    ch.schedule = vec![(1.0, 0.01), (100.0, 1.0)];
    ch.ic = InitialCondition::Random { seed: 1 };
    ch.out_dir = dir.path().join("ch");
    ch.vtk_every = 0;
    let ch_out = run_beta_sweep(&ch, &[0.0, 1.0]).unwrap();

    let ch0_diverged = matches!(ch_out[0].status, SweepStatus::Diverged { .. });
    let ch1_completed = matches!(ch_out[1].status, SweepStatus::Completed { .. });
    let ch1_bounded = ch_out[1].peak_energy <= 2.0 * ch_out[1].initial_energy;

    let ok = ac0_diverged
        && ac1_completed
        && ac1_monotone
        && ac1_bounded
        && ch0_diverged
        && ch1_completed
        && ch1_bounded;
    report(
        "4 (stabilization on/off dichotomy)",
        ok,
        &format!(
            "relaxation: beta 0 diverged={ac0_diverged}, beta 1 completed={ac1_completed} \
             (scheme-energy max rise {:.1e}, peak/initial {:.3}); conserved: beta 0 \
             diverged={ch0_diverged}, beta 1 completed={ch1_completed} (peak/initial {:.3}); {:.0?}s",
            ac_out[1].max_rise_num,
            ac_out[1].peak_energy / ac_out[1].initial_energy,
            ch_out[1].peak_energy / ch_out[1].initial_energy,
            t0.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_5_interface_width_halves_with_epsilon() {
    let t0 = Instant::now();
    // refinement 7 keeps at least four cells across the narrower profile
    let surface = ImplicitSurface::unit_sphere();
    let mut mesh = BackgroundMesh::build_initial(surface.bbox);
    mesh.refine_toward_surface(&surface, 7, 40_000_000).unwrap();
    let band = mesh.select_band(&surface).unwrap();
    let cut = CutComplex::build(&mesh, &surface, &band, 4, 2).unwrap();

    let width_at = |eps: f64| {
        let params = ModelParams { epsilon: eps, ..ModelParams::default() };
        let u0 = interpolate(&cut, &|x| x.z + 0.5);
        let mut st = AcStepper::new(&cut, params, u0, 0.0).unwrap();
        for _ in 0..80 {
            st.step(0.25).unwrap(); // to t = 20, quasi-stationary
        }
        interface_width_estimate(&cut, st.state()).unwrap()
    };
    let wide = width_at(0.02);
    let narrow = width_at(0.01);

    let ratio = wide / narrow;
    let cells_across = narrow / cut.h;
    let ok = (1.7..=2.3).contains(&ratio) && cells_across >= 4.0;
    report(
        "5 (interface width scales with epsilon)",
        ok,
        &format!(
            "width {wide:.4} vs {narrow:.4}, ratio {ratio:.3} (want 1.7..2.3), \
             {cells_across:.1} cells across the narrow profile; {:.0?}s",
            t0.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_6a_sphere_relaxation_coarsens_to_one_phase() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::preset(Experiment::SphereAc, false);
    cfg.params.epsilon = 0.05;
    cfg.ic = InitialCondition::Random { seed: 0 };
    cfg.out_dir = dir.path().to_path_buf();
    cfg.vtk_every = 0;
    let summary = run(&cfg).unwrap();

    let recs = &summary.records;
    let vanish_t = recs
        .iter()
        .find(|r| r.phase_frac.min(1.0 - r.phase_frac) < 0.02)
        .map(|r| r.t);
    let final_minority = {
        let f = recs.last().unwrap().phase_frac;
        f.min(1.0 - f)
    };

    // once coarsening is underway the area fraction moves steadily toward
    // the winning phase: no counter-move beyond measurement noise
    let window: Vec<f64> = recs
        .iter()
        .filter(|r| r.t >= 60.0 && r.phase_frac.min(1.0 - r.phase_frac) >= 0.02)
        .map(|r| r.phase_frac)
        .collect();
    let trend = (window.last().unwrap() - window.first().unwrap()).signum();
    let worst_counter = window
        .windows(2)
        .map(|w| trend * (w[0] - w[1]))
        .fold(0.0f64, f64::max);

    let ok = vanish_t.is_some_and(|t| t <= 400.0) && final_minority < 0.02 && worst_counter <= 1e-3;
    report(
        "6a (sphere relaxation: one phase vanishes)",
        ok,
        &format!(
            "minority < 0.02 at t = {vanish_t:?}, final minority {final_minority:.1e}, \
             worst counter-move {worst_counter:.1e}; {:.0?}s",
            t0.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_6b_cell_relaxation_pins_at_equilibrium() {
    let t0 = Instant::now();
    let cfg = RunConfig::preset(Experiment::CellAc, false);
    let surface = cfg.surface.clone();
    let mut mesh = BackgroundMesh::build_initial(surface.bbox);
    mesh.refine_toward_surface(&surface, 4, cfg.max_tets).unwrap();
    let band = mesh.select_band(&surface).unwrap();
    let cut = CutComplex::build(&mesh, &surface, &band, 4, 2).unwrap();

    let params = ModelParams { epsilon: 0.05, ..ModelParams::default() };
    let u0 = memphase::fe::random_field(&cut, 0);
    let mut st = AcStepper::new(&cut, params, u0, 0.0).unwrap();

    // long-horizon version of the preset schedule: the interface locks onto
    // a shortest path and the state stops moving
    let mut rate = f64::INFINITY;
    for (dt, n) in [(1.0, 200), (5.0, 60), (10.0, 530)] {
        for _ in 0..n {
            let rep = st.step(dt).unwrap();
            rate = rep.delta_mass_norm / dt;
        }
    }
    let frac = memphase::diagnostics::phase_area_fraction(&cut, st.state(), 0.5);

    let ok = rate < 1e-6 && frac > 0.05 && frac < 0.95;
    report(
        "6b (cell relaxation: pinned two-phase equilibrium)",
        ok,
        &format!(
            "final area fraction {frac:.3}, state change rate {rate:.2e} at t = {}; {:.0?}s",
            st.time(),
            t0.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_6c_sphere_conserved_separates_within_unit_time() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::preset(Experiment::SphereCh, false);
    cfg.params.epsilon = 0.02;
    cfg.t_end = 1.0;
    cfg.schedule = vec![(1.0, 0.01)];
    cfg.ic = InitialCondition::Random { seed: 0 };
    cfg.out_dir = dir.path().to_path_buf();
    cfg.vtk_every = 0;
    let summary = run(&cfg).unwrap();

    let recs = &summary.records;
    let spread0 = recs[0].max_u - recs[0].min_u;
    let narrowest = recs
        .iter()
        .map(|r| r.max_u - r.min_u)
        .fold(f64::INFINITY, f64::min);
    let last = recs.last().unwrap();

    // diffusion first contracts the raw random range, then the wells pull
    // the field back out to the pure phases
    let contracted = narrowest <= spread0 - 0.03;
    let saturated = last.max_u >= 0.95 && last.min_u <= 0.05;
    let ok = contracted && saturated;
    report(
        "6c (sphere conserved: separation by t = 1)",
        ok,
        &format!(
            "range {spread0:.3} -> {narrowest:.3} -> [{:.3}, {:.3}] at t = 1; {:.0?}s",
            last.min_u,
            last.max_u,
            t0.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_7_sphere_area_second_order() {
    let t0 = Instant::now();
    let exact = 4.0 * std::f64::consts::PI;
    let mut errs = Vec::new();
    for level in [3u32, 4, 5] {
        let s = ImplicitSurface::unit_sphere();
        let mut mesh = BackgroundMesh::build_initial(s.bbox);
        mesh.refine_toward_surface(&s, level, 40_000_000).unwrap();
        let band = mesh.select_band(&s).unwrap();
        let cut = CutComplex::build(&mesh, &s, &band, 4, 2).unwrap();
        errs.push((cut.surface_area() - exact).abs());
    }
    let rates = pairwise_rates(&errs);
    let ok = rates.iter().all(|r| *r >= 1.8);
    let err_list: Vec<String> = errs.iter().map(|e| format!("{e:.2e}")).collect();
    report(
        "7 (sphere area converges at second order)",
        ok,
        &format!(
            "area errors [{}], rates {}; {:.0?}s",
            err_list.join(", "),
            fmt_rates(&rates),
            t0.elapsed().as_secs_f64()
        ),
    );
}

#[test]
fn criterion_8_fixed_seed_runs_are_bit_identical() {
    let t0 = Instant::now();
    let once = |dir: &std::path::Path| {
        let mut cfg = RunConfig::preset(Experiment::SphereAc, false);
        cfg.ic = InitialCondition::Random { seed: 7 };
        cfg.out_dir = dir.to_path_buf();
        cfg.vtk_every = 0;
        run(&cfg).unwrap();
        std::fs::read(dir.join("diagnostics.csv")).unwrap()
    };
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let (a, b) = (once(d1.path()), once(d2.path()));

    let ok = a == b && !a.is_empty();
    report(
        "8 (fixed-seed determinism)",
        ok,
        &format!("two runs, {} bytes each, byte-identical = {}; {:.0?}s", a.len(), a == b, t0.elapsed().as_secs_f64()),
    );
}
