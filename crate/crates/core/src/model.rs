//! Time steppers for the two surface phase-field models.
//!
//! Both models march with a semi-implicit two-step scheme: the linear
//! elliptic part is implicit, the well derivative is extrapolated from the
//! two previous states, and a `beta_s * (u - û)` shift keeps the splitting
//! stable without re-solving a nonlinear system. The very first step, and
//! the first step after any time-step change, falls back to one implicit
//! Euler step with constant extrapolation so the two-step history is always
//! consistent with the current step size.
//!
//! Spatial operators come from the cut-surface assembly: a mass matrix `M`,
//! a tangential stiffness `A` (optionally mobility-weighted), and the
//! normal-derivative volume stabilization `S` scaled by `eps^2 h` (or plain
//! `h` on the potential block).

use thiserror::Error;

use crate::cut::CutComplex;
use crate::fe::{
    assemble_load, assemble_mass, assemble_normal_stabilization, assemble_tangential_stiffness,
    AssembleError, CsrMatrix, Weight,
};
use crate::geom::Vec3;
use crate::solver::{dot, solve, SolverConfig, SolverError};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Assemble(#[from] AssembleError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("state lost finiteness at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct ModelParams {
    /// interface width scale
    pub epsilon: f64,
    /// relaxation rate of the non-conserved model
    pub alpha: f64,
    /// time-derivative scaling of the conserved model
    pub rho: f64,
    /// well height scale in `f0(u) = xi/4 u^2 (1-u)^2`
    pub xi: f64,
    /// splitting stabilization weight
    pub beta_s: f64,
    /// multiply the nodewise well derivative by the lumped mass (row sums)
    /// instead of the consistent mass matrix
    pub lumped_nonlinearity: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            epsilon: 0.1,
            alpha: 1.0,
            rho: 1.0,
            xi: 1.0,
            beta_s: 1.0,
            lumped_nonlinearity: false,
        }
    }
}

impl ModelParams {
    /// double-well density `xi/4 * u^2 (1-u)^2`
    pub fn f0(&self, u: f64) -> f64 {
        let w = u * (1.0 - u);
        0.25 * self.xi * w * w
    }

    pub fn f0_prime(&self, u: f64) -> f64 {
        0.5 * self.xi * u * (1.0 - u) * (1.0 - 2.0 * u)
    }

    pub fn f0_double_prime(&self, u: f64) -> f64 {
        0.5 * self.xi * (1.0 - 6.0 * u + 6.0 * u * u)
    }

    pub fn f0_triple_prime(&self, u: f64) -> f64 {
        3.0 * self.xi * (2.0 * u - 1.0)
    }
}

/// Degenerate mobility `c(1-c)`, clipped to the physical range first so
/// overshoots never produce negative diffusion.
pub fn mobility(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    c * (1.0 - c)
}

/// Derivative of the clipped mobility: `1 - 2c` inside the physical range,
/// zero outside.
pub fn mobility_prime(c: f64) -> f64 {
    if (0.0..=1.0).contains(&c) {
        1.0 - 2.0 * c
    } else {
        0.0
    }
}

/// The three geometry-dependent matrices every scheme combines, plus the
/// band mesh size used to scale the stabilization.
pub struct Operators {
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
    pub stabilization: CsrMatrix,
    /// row sums of the mass matrix: integrals of each basis function
    pub lumped: Vec<f64>,
    pub h: f64,
}

impl Operators {
    pub fn build(cut: &CutComplex) -> Result<Self, AssembleError> {
        let mass = assemble_mass(cut);
        let lumped = mass.matvec(&vec![1.0; mass.n_rows]);
        Ok(Operators {
            mass,
            stiffness: assemble_tangential_stiffness(cut, Weight::Unit)?,
            stabilization: assemble_normal_stabilization(cut)?,
            lumped,
            h: cut.h,
        })
    }

    pub fn n(&self) -> usize {
        self.mass.n_rows
    }

    /// Product used for the nodewise well derivative: consistent mass by
    /// default, diagonal lumped mass when requested.
    pub fn well_product(&self, nodal: &[f64], lumped: bool) -> Vec<f64> {
        if lumped {
            nodal.iter().zip(&self.lumped).map(|(v, w)| v * w).collect()
        } else {
            self.mass.matvec(nodal)
        }
    }

    /// `sqrt(v' M v)`
    pub fn mass_norm(&self, v: &[f64]) -> f64 {
        dot(v, &self.mass.matvec(v)).max(0.0).sqrt()
    }

    /// `1' M v`: total amount of `v` over the discrete surface
    pub fn total_mass(&self, v: &[f64]) -> f64 {
        self.mass.matvec(v).iter().sum()
    }
}

/// Spot check that `u' K u > 0` along `samples` pseudorandom directions.
/// Cheap insurance against sign mistakes when combining operators into a
/// time-step system that a definiteness-requiring solver is about to see.
pub fn quadratic_form_is_positive(k: &CsrMatrix, samples: usize, seed: u64) -> bool {
    let mut state = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    let mut next = move || {
        // xorshift64*, centered to [-0.5, 0.5)
        state ^= state >> 12;
        state ^= state << 25;
        state ^= state >> 27;
        (state.wrapping_mul(0x2545_f491_4f6c_dd1d) >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut u = vec![0.0; k.n_rows];
    for _ in 0..samples {
        for v in u.iter_mut() {
            *v = next();
        }
        let q = dot(&u, &k.matvec(&u));
        if !(q > 0.0) {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ImplicitEuler,
    TwoStep,
}

#[derive(Debug, Clone, Copy)]
pub struct StepReport {
    pub t: f64,
    pub scheme: Scheme,
    pub iters: usize,
    pub residual: f64,
    /// `|u_new - u_old|_M`, the increment in the mass norm
    pub delta_mass_norm: f64,
}

/// Source term on the right-hand side, evaluated at the new time level.
pub type Forcing = Box<dyn Fn(Vec3, f64) -> f64>;

fn check_finite(v: &[f64], t: f64) -> Result<(), ModelError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(ModelError::NonFinite { t })
    }
}

/// Relaxation (non-conserved) stepper:
/// `d_t u = -alpha (f0'(u) - eps^2 lap_G u) + g`.
pub struct AcStepper<'a> {
    cut: &'a CutComplex,
    pub ops: Operators,
    pub params: ModelParams,
    pub solver: SolverConfig,
    forcing: Option<Forcing>,
    u: Vec<f64>,
    u_prev: Vec<f64>,
    t: f64,
    last_dt: Option<f64>,
    cached_lhs: Option<(f64, CsrMatrix)>,
}

impl<'a> AcStepper<'a> {
    pub fn new(
        cut: &'a CutComplex,
        params: ModelParams,
        u0: Vec<f64>,
        t0: f64,
    ) -> Result<Self, ModelError> {
        let ops = Operators::build(cut)?;
        assert_eq!(u0.len(), ops.n());
        Ok(AcStepper {
            cut,
            ops,
            params,
            solver: SolverConfig::cg(),
            forcing: None,
            u_prev: u0.clone(),
            u: u0,
            t: t0,
            last_dt: None,
            cached_lhs: None,
        })
    }

    pub fn with_forcing(mut self, g: Forcing) -> Self {
        self.forcing = Some(g);
        self
    }

    pub fn state(&self) -> &[f64] {
        &self.u
    }

    pub fn previous(&self) -> &[f64] {
        &self.u_prev
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn cut(&self) -> &CutComplex {
        self.cut
    }

    pub fn step(&mut self, dt: f64) -> Result<StepReport, ModelError> {
        assert!(dt > 0.0, "step size must be positive");
        let p = self.params;
        let e2 = p.epsilon * p.epsilon;
        let n = self.ops.n();
        let t_new = self.t + dt;
        let scheme = if self.last_dt == Some(dt) {
            Scheme::TwoStep
        } else {
            Scheme::ImplicitEuler
        };

        let mut nodal = vec![0.0; n];
        let mut well = vec![0.0; n];
        let mut x0 = vec![0.0; n];
        match scheme {
            Scheme::TwoStep => {
                for i in 0..n {
                    let (u1, u2) = (self.u[i], self.u_prev[i]);
                    let uhat = 2.0 * u1 - u2;
                    nodal[i] = (4.0 * u1 - u2) / (2.0 * dt) + p.beta_s * uhat;
                    well[i] = 2.0 * p.f0_prime(u1) - p.f0_prime(u2);
                    x0[i] = uhat;
                }
            }
            Scheme::ImplicitEuler => {
                for i in 0..n {
                    nodal[i] = self.u[i] / dt;
                    well[i] = p.f0_prime(self.u[i]);
                    x0[i] = self.u[i];
                }
            }
        }
        let mut rhs = self.ops.mass.matvec(&nodal);
        let wp = self.ops.well_product(&well, p.lumped_nonlinearity);
        for i in 0..n {
            rhs[i] -= p.alpha * wp[i];
        }
        if let Some(g) = &self.forcing {
            let load = assemble_load(self.cut, &|x| g(x, t_new));
            for i in 0..n {
                rhs[i] += load[i];
            }
        }

        let (sol, stats) = match scheme {
            Scheme::TwoStep => {
                let rebuild = self.cached_lhs.as_ref().map_or(true, |(d, _)| *d != dt);
                if rebuild {
                    let lhs = CsrMatrix::linear_combination(&[
                        (1.5 / dt + p.beta_s, &self.ops.mass),
                        (p.alpha * e2, &self.ops.stiffness),
                        (e2 * self.ops.h, &self.ops.stabilization),
                    ]);
                    debug_assert!(
                        quadratic_form_is_positive(&lhs, 50, 1),
                        "time-step system failed the definiteness probe"
                    );
                    self.cached_lhs = Some((dt, lhs));
                }
                let lhs = &self.cached_lhs.as_ref().unwrap().1;
                solve(lhs, &rhs, Some(&x0), &self.solver)?
            }
            Scheme::ImplicitEuler => {
                let lhs = CsrMatrix::linear_combination(&[
                    (1.0 / dt, &self.ops.mass),
                    (p.alpha * e2, &self.ops.stiffness),
                    (e2 * self.ops.h, &self.ops.stabilization),
                ]);
                debug_assert!(
                    quadratic_form_is_positive(&lhs, 50, 1),
                    "time-step system failed the definiteness probe"
                );
                solve(&lhs, &rhs, Some(&x0), &self.solver)?
            }
        };
        check_finite(&sol, t_new)?;

        let delta: Vec<f64> = (0..n).map(|i| sol[i] - self.u[i]).collect();
        let delta_mass_norm = self.ops.mass_norm(&delta);
        self.u_prev = std::mem::replace(&mut self.u, sol);
        self.t = t_new;
        self.last_dt = Some(dt);
        Ok(StepReport {
            t: t_new,
            scheme,
            iters: stats.iters,
            residual: stats.residual,
            delta_mass_norm,
        })
    }
}

/// Conserved stepper in mixed form, solving for concentration and chemical
/// potential at once:
/// `rho d_t c = div_G(M(c) grad_G mu) + g`,
/// `mu = f0'(c) - eps^2 lap_G c`.
pub struct ChStepper<'a> {
    cut: &'a CutComplex,
    pub ops: Operators,
    pub params: ModelParams,
    pub solver: SolverConfig,
    forcing: Option<Forcing>,
    c: Vec<f64>,
    c_prev: Vec<f64>,
    mu: Vec<f64>,
    t: f64,
    last_dt: Option<f64>,
}

impl<'a> ChStepper<'a> {
    pub fn new(
        cut: &'a CutComplex,
        params: ModelParams,
        c0: Vec<f64>,
        t0: f64,
    ) -> Result<Self, ModelError> {
        let ops = Operators::build(cut)?;
        assert_eq!(c0.len(), ops.n());
        let mu: Vec<f64> = c0.iter().map(|&c| params.f0_prime(c)).collect();
        Ok(ChStepper {
            cut,
            ops,
            params,
            solver: SolverConfig::gmres(),
            forcing: None,
            c_prev: c0.clone(),
            c: c0,
            mu,
            t: t0,
            last_dt: None,
        })
    }

    pub fn with_forcing(mut self, g: Forcing) -> Self {
        self.forcing = Some(g);
        self
    }

    pub fn concentration(&self) -> &[f64] {
        &self.c
    }

    pub fn previous(&self) -> &[f64] {
        &self.c_prev
    }

    pub fn chemical_potential(&self) -> &[f64] {
        &self.mu
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn cut(&self) -> &CutComplex {
        self.cut
    }

    pub fn step(&mut self, dt: f64) -> Result<StepReport, ModelError> {
        assert!(dt > 0.0, "step size must be positive");
        let p = self.params;
        let e2 = p.epsilon * p.epsilon;
        let n = self.ops.n();
        let t_new = self.t + dt;
        let scheme = if self.last_dt == Some(dt) {
            Scheme::TwoStep
        } else {
            Scheme::ImplicitEuler
        };

        // extrapolated concentration drives the mobility and the well term
        let chat: Vec<f64> = match scheme {
            Scheme::TwoStep => (0..n).map(|i| 2.0 * self.c[i] - self.c_prev[i]).collect(),
            Scheme::ImplicitEuler => self.c.clone(),
        };
        let a_w = assemble_tangential_stiffness(
            self.cut,
            Weight::Nodal {
                values: &chat,
                map: &mobility,
            },
        )?;

        let (k11, k21, nodal1, well): (CsrMatrix, CsrMatrix, Vec<f64>, Vec<f64>) = match scheme {
            Scheme::TwoStep => {
                let k11 =
                    CsrMatrix::linear_combination(&[(1.5 * p.rho / dt, &self.ops.mass)]);
                let k21 = CsrMatrix::linear_combination(&[
                    (-p.beta_s, &self.ops.mass),
                    (-e2, &self.ops.stiffness),
                    (-e2 * self.ops.h, &self.ops.stabilization),
                ]);
                let nodal1: Vec<f64> = (0..n)
                    .map(|i| 0.5 * p.rho / dt * (4.0 * self.c[i] - self.c_prev[i]))
                    .collect();
                let well: Vec<f64> = (0..n)
                    .map(|i| 2.0 * p.f0_prime(self.c[i]) - p.f0_prime(self.c_prev[i]))
                    .collect();
                (k11, k21, nodal1, well)
            }
            Scheme::ImplicitEuler => {
                let k11 = CsrMatrix::linear_combination(&[(p.rho / dt, &self.ops.mass)]);
                let k21 = CsrMatrix::linear_combination(&[
                    (-e2, &self.ops.stiffness),
                    (-e2 * self.ops.h, &self.ops.stabilization),
                ]);
                let nodal1: Vec<f64> = self.c.iter().map(|&c| p.rho / dt * c).collect();
                let well: Vec<f64> = self.c.iter().map(|&c| p.f0_prime(c)).collect();
                (k11, k21, nodal1, well)
            }
        };
        let k12 = CsrMatrix::linear_combination(&[
            (1.0, &a_w),
            (self.ops.h, &self.ops.stabilization),
        ]);
        let sys = CsrMatrix::block_2x2(
            [
                [Some(&k11), Some(&k12)],
                [Some(&k21), Some(&self.ops.mass)],
            ],
            n,
        );

        let mut b = vec![0.0; 2 * n];
        b[..n].copy_from_slice(&self.ops.mass.matvec(&nodal1));
        b[n..].copy_from_slice(&self.ops.well_product(&well, p.lumped_nonlinearity));
        if scheme == Scheme::TwoStep {
            let shift = self.ops.mass.matvec(&chat);
            for i in 0..n {
                b[n + i] -= p.beta_s * shift[i];
            }
        }
        if let Some(g) = &self.forcing {
            let load = assemble_load(self.cut, &|x| g(x, t_new));
            for i in 0..n {
                b[i] += load[i];
            }
        }

        let mut x0 = vec![0.0; 2 * n];
        x0[..n].copy_from_slice(&chat);
        x0[n..].copy_from_slice(&self.mu);

        let (sol, stats) = solve(&sys, &b, Some(&x0), &self.solver)?;
        check_finite(&sol, t_new)?;

        let delta: Vec<f64> = (0..n).map(|i| sol[i] - self.c[i]).collect();
        let delta_mass_norm = self.ops.mass_norm(&delta);
        self.c_prev = std::mem::replace(&mut self.c, sol[..n].to_vec());
        self.mu.copy_from_slice(&sol[n..]);
        self.t = t_new;
        self.last_dt = Some(dt);
        Ok(StepReport {
            t: t_new,
            scheme,
            iters: stats.iters,
            residual: stats.residual,
            delta_mass_norm,
        })
    }
}
