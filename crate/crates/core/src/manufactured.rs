//! Closed-form reference solutions on the unit sphere and the source terms
//! that make them exact, used to measure convergence orders.
//!
//! The reference field is `T(t) (x1 x2 + 1)` with `T(t) = (1 - 0.8
//! e^{-0.4t})/2`. The spatial part `Y = x1 x2` is a degree-two harmonic, so
//! on the unit sphere `lap_G Y = -6 Y` and `|grad_G Y|^2 = x1^2 + x2^2 - 4
//! x1^2 x2^2`, which makes every tangential derivative available in closed
//! form. All functions accept points near the sphere and evaluate at the
//! radial projection, i.e. they are constant along surface normals.

use crate::geom::Vec3;
use crate::model::{mobility, mobility_prime, ModelParams};

pub fn time_factor(t: f64) -> f64 {
    0.5 * (1.0 - 0.8 * (-0.4 * t).exp())
}

pub fn time_factor_dot(t: f64) -> f64 {
    0.16 * (-0.4 * t).exp()
}

fn to_sphere(x: Vec3) -> Vec3 {
    x / x.norm()
}

/// Reference order parameter / concentration, radially extended.
pub fn field_star(x: Vec3, t: f64) -> f64 {
    let p = to_sphere(x);
    time_factor(t) * (p.x * p.y + 1.0)
}

pub fn field_star_dt(x: Vec3, t: f64) -> f64 {
    let p = to_sphere(x);
    time_factor_dot(t) * (p.x * p.y + 1.0)
}

/// Surface Laplacian of the reference field.
pub fn field_star_lap(x: Vec3, t: f64) -> f64 {
    let p = to_sphere(x);
    -6.0 * time_factor(t) * p.x * p.y
}

/// Exact chemical potential `f0'(c*) - eps^2 lap_G c*`.
pub fn mu_star(params: &ModelParams, x: Vec3, t: f64) -> f64 {
    params.f0_prime(field_star(x, t)) - params.epsilon * params.epsilon * field_star_lap(x, t)
}

/// Source that makes `field_star` solve the relaxation model:
/// `g = d_t eta* + alpha (f0'(eta*) - eps^2 lap_G eta*)`.
pub fn ac_forcing(params: &ModelParams, x: Vec3, t: f64) -> f64 {
    field_star_dt(x, t) + params.alpha * mu_star(params, x, t)
}

/// Source for the mass-balance row of the conserved model:
/// `g_c = rho d_t c* - div_G(M(c*) grad_G mu*)`.
///
/// With `c* = T (Y+1)` and `mu* = f0'(c*) + 6 eps^2 T Y`, the flux is
/// `M(c*) grad mu* = T W(c*) grad Y` where `W(c) = M(c)(f0''(c) + 6 eps^2)`,
/// and the chain rule gives
/// `div_G(...) = T^2 W'(c*) |grad_G Y|^2 - 6 T W(c*) Y`.
pub fn ch_forcing(params: &ModelParams, x: Vec3, t: f64) -> f64 {
    let p = to_sphere(x);
    let y = p.x * p.y;
    let tt = time_factor(t);
    let c = tt * (y + 1.0);
    let e2 = params.epsilon * params.epsilon;
    let w = mobility(c) * (params.f0_double_prime(c) + 6.0 * e2);
    let w_prime = mobility_prime(c) * (params.f0_double_prime(c) + 6.0 * e2)
        + mobility(c) * params.f0_triple_prime(c);
    let grad_y_sq = p.x * p.x + p.y * p.y - 4.0 * y * y;
    let div = tt * tt * w_prime * grad_y_sq - 6.0 * tt * w * y;
    params.rho * field_star_dt(x, t) - div
}
