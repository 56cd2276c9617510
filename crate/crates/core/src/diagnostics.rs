//! Observables over discrete fields: energies, norms, mass, phase-geometry
//! measurements, and the time-series CSV written by the drivers.

use std::fs::File;
use std::io::{self, BufWriter, Write as IoWrite};
use std::path::Path;

use thiserror::Error;

use crate::cut::{CutComplex, CutTri};
use crate::geom::Vec3;
use crate::model::{AcStepper, ChStepper, ModelParams, Operators};
use crate::solver::dot;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("no developed interface: transition band is empty")]
    NoInterface,
}

/// Free energy `∫ f0(u) + eps^2/2 |grad_G u|^2`: the quantity the exact
/// flows never increase. The well term integrates the nodal interpolant of
/// `f0(u)`, which reduces to a lumped-mass weighted sum.
pub fn lyapunov_energy(ops: &Operators, params: &ModelParams, u: &[f64]) -> f64 {
    let well: f64 = u
        .iter()
        .zip(&ops.lumped)
        .map(|(&v, &w)| params.f0(v) * w)
        .sum();
    let grad = dot(u, &ops.stiffness.matvec(u));
    well + 0.5 * params.epsilon * params.epsilon * grad
}

/// The quantity the stabilized two-step relaxation scheme provably does not
/// increase: `alpha (E_lyap + beta_s |u - u_prev|_M^2) + eps^2 h u' S u`.
pub fn numerical_energy_ac(
    ops: &Operators,
    params: &ModelParams,
    u: &[f64],
    u_prev: &[f64],
) -> f64 {
    let delta: Vec<f64> = u.iter().zip(u_prev).map(|(a, b)| a - b).collect();
    let buffer = dot(&delta, &ops.mass.matvec(&delta));
    let stab = dot(u, &ops.stabilization.matvec(u));
    params.alpha * (lyapunov_energy(ops, params, u) + params.beta_s * buffer)
        + params.epsilon * params.epsilon * ops.h * stab
}

/// `|u_h - exact|` in L2 over the discrete surface, by quadrature.
pub fn surface_l2_error(cut: &CutComplex, u: &[f64], exact: &dyn Fn(Vec3) -> f64) -> f64 {
    let mut acc = 0.0;
    cut.visit_surface_quadrature(|tet, x, w| {
        let bt = &cut.tets[tet as usize];
        let lam = bt.basis(x);
        let uh: f64 = (0..4).map(|i| lam[i] * u[bt.dofs[i] as usize]).sum();
        let d = uh - exact(x);
        acc += w * d * d;
    });
    acc.max(0.0).sqrt()
}

/// Accumulates per-step L2 errors into the two space-time norms
/// `max_k |e(t_k)|` and `(T^-1 sum_k dt |e(t_k)|^2)^(1/2)`.
#[derive(Debug, Default, Clone, Copy)]
pub struct ErrorNorms {
    max_sq: f64,
    weighted_sq: f64,
    total_time: f64,
}

impl ErrorNorms {
    pub fn push(&mut self, dt: f64, err_l2: f64) {
        self.max_sq = self.max_sq.max(err_l2 * err_l2);
        self.weighted_sq += dt * err_l2 * err_l2;
        self.total_time += dt;
    }

    pub fn linf_l2(&self) -> f64 {
        self.max_sq.sqrt()
    }

    pub fn l2_l2(&self) -> f64 {
        if self.total_time > 0.0 {
            (self.weighted_sq / self.total_time).sqrt()
        } else {
            0.0
        }
    }
}

fn corner_values(cut: &CutComplex, tri: &CutTri, u: &[f64]) -> [f64; 3] {
    cut.tri_corner_values(tri, u)
}

/// Clip a planar convex polygon with per-vertex field values against the
/// half-space `sign * (value - level) >= 0`. Crossing points interpolate
/// both position and value, so repeated clips stay consistent.
fn clip_polygon(poly: &[(Vec3, f64)], level: f64, sign: f64) -> Vec<(Vec3, f64)> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let (p_cur, u_cur) = poly[i];
        let (p_nxt, u_nxt) = poly[(i + 1) % n];
        let s_cur = sign * (u_cur - level);
        let s_nxt = sign * (u_nxt - level);
        if s_cur >= 0.0 {
            out.push((p_cur, u_cur));
        }
        if (s_cur > 0.0 && s_nxt < 0.0) || (s_cur < 0.0 && s_nxt > 0.0) {
            let t = s_cur / (s_cur - s_nxt);
            out.push((p_cur + (p_nxt - p_cur) * t, u_cur + (u_nxt - u_cur) * t));
        }
    }
    out
}

fn polygon_area(poly: &[(Vec3, f64)]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut s = Vec3::zeros();
    for i in 1..poly.len() - 1 {
        s += (poly[i].0 - poly[0].0).cross(&(poly[i + 1].0 - poly[0].0));
    }
    0.5 * s.norm()
}

/// Fraction of the discrete surface where the interpolated field exceeds
/// `threshold`, with sub-triangle resolution of the level line.
pub fn phase_area_fraction(cut: &CutComplex, u: &[f64], threshold: f64) -> f64 {
    let mut above = 0.0;
    let mut total = 0.0;
    for tri in &cut.tris {
        let vals = corner_values(cut, tri, u);
        let poly: Vec<(Vec3, f64)> = tri.v.iter().zip(vals).map(|(&p, v)| (p, v)).collect();
        total += polygon_area(&poly);
        above += polygon_area(&clip_polygon(&poly, threshold, 1.0));
    }
    if total > 0.0 {
        above / total
    } else {
        0.0
    }
}

/// Total length of the `u = level` contour on the discrete surface.
pub fn interface_length(cut: &CutComplex, u: &[f64], level: f64) -> f64 {
    let mut len = 0.0;
    for tri in &cut.tris {
        let vals = corner_values(cut, tri, u);
        let s = [vals[0] - level, vals[1] - level, vals[2] - level];
        if s.iter().all(|&v| v == 0.0) {
            continue; // plateau exactly at the level: no 1d contour
        }
        // `true` marks points sitting on a triangle vertex
        let mut pts: Vec<(Vec3, bool)> = Vec::with_capacity(2);
        for k in 0..3 {
            if s[k] == 0.0 {
                pts.push((tri.v[k], true));
            }
            let j = (k + 1) % 3;
            if (s[k] > 0.0 && s[j] < 0.0) || (s[k] < 0.0 && s[j] > 0.0) {
                let t = s[k] / (s[k] - s[j]);
                pts.push((tri.v[k] + (tri.v[j] - tri.v[k]) * t, false));
            }
        }
        if pts.len() >= 2 {
            // a segment joining two vertices runs along a shared edge and is
            // seen by both neighboring triangles: count half from each side
            let weight = if pts[0].1 && pts[1].1 { 0.5 } else { 1.0 };
            len += weight * (pts[1].0 - pts[0].0).norm();
        }
    }
    len
}

/// Width of the developed transition layer: area where `0.05 < u < 0.95`
/// divided by the length of the mid-level contour.
pub fn interface_width_estimate(cut: &CutComplex, u: &[f64]) -> Result<f64, DiagnosticsError> {
    let mut band = 0.0;
    for tri in &cut.tris {
        let vals = corner_values(cut, tri, u);
        let poly: Vec<(Vec3, f64)> = tri.v.iter().zip(vals).map(|(&p, v)| (p, v)).collect();
        let above = clip_polygon(&poly, 0.05, 1.0);
        band += polygon_area(&clip_polygon(&above, 0.95, -1.0));
    }
    if band <= 0.0 {
        return Err(DiagnosticsError::NoInterface);
    }
    let len = interface_length(cut, u, 0.5);
    if len <= 1e-12 {
        return Err(DiagnosticsError::NoInterface);
    }
    Ok(band / len)
}

/// One row of the time-series output.
#[derive(Debug, Clone, Copy)]
pub struct TimeSeriesRecord {
    pub t: f64,
    pub e_lyap: f64,
    /// two-step scheme energy; zero for the conserved model
    pub e_num: f64,
    pub mass: f64,
    pub phase_frac: f64,
    pub min_u: f64,
    pub max_u: f64,
    /// zero when no interface has developed
    pub iface_width: f64,
    pub solver_iters: usize,
}

impl TimeSeriesRecord {
    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.e_lyap,
            self.e_num,
            self.mass,
            self.phase_frac,
            self.min_u,
            self.max_u,
            self.iface_width,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.t,
            self.e_lyap,
            self.e_num,
            self.mass,
            self.phase_frac,
            self.min_u,
            self.max_u,
            self.iface_width,
            self.solver_iters
        )
    }
}

fn min_max(u: &[f64]) -> (f64, f64) {
    u.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Full observable set for the current relaxation-model state.
pub fn observe_ac(stepper: &AcStepper, iters: usize) -> TimeSeriesRecord {
    let u = stepper.state();
    let cut = stepper.cut();
    let (min_u, max_u) = min_max(u);
    TimeSeriesRecord {
        t: stepper.time(),
        e_lyap: lyapunov_energy(&stepper.ops, &stepper.params, u),
        e_num: numerical_energy_ac(&stepper.ops, &stepper.params, u, stepper.previous()),
        mass: stepper.ops.total_mass(u),
        phase_frac: phase_area_fraction(cut, u, 0.5),
        min_u,
        max_u,
        iface_width: interface_width_estimate(cut, u).unwrap_or(0.0),
        solver_iters: iters,
    }
}

/// Full observable set for the current conserved-model state.
pub fn observe_ch(stepper: &ChStepper, iters: usize) -> TimeSeriesRecord {
    let c = stepper.concentration();
    let cut = stepper.cut();
    let (min_u, max_u) = min_max(c);
    TimeSeriesRecord {
        t: stepper.time(),
        e_lyap: lyapunov_energy(&stepper.ops, &stepper.params, c),
        e_num: 0.0,
        mass: stepper.ops.total_mass(c),
        phase_frac: phase_area_fraction(cut, c, 0.5),
        min_u,
        max_u,
        iface_width: interface_width_estimate(cut, c).unwrap_or(0.0),
        solver_iters: iters,
    }
}

/// Appends records as CSV rows; enforces finiteness and strictly increasing
/// time so a malformed series never reaches disk.
pub struct CsvWriter {
    out: BufWriter<File>,
    last_t: Option<f64>,
}

impl CsvWriter {
    pub const HEADER: &'static str =
        "t,E_lyap,E_num,mass,phase_frac,min_u,max_u,iface_width,solver_iters";

    pub fn create(path: &Path) -> io::Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", Self::HEADER)?;
        Ok(CsvWriter { out, last_t: None })
    }

    pub fn append(&mut self, rec: &TimeSeriesRecord) -> io::Result<()> {
        if !rec.is_finite() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("non-finite diagnostics at t = {}", rec.t),
            ));
        }
        if let Some(last) = self.last_t {
            if rec.t <= last {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("time went backwards: {} after {}", rec.t, last),
                ));
            }
        }
        self.last_t = Some(rec.t);
        writeln!(self.out, "{}", rec.csv_row())
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}
