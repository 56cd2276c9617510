//! Implicit surface geometry: level-set evaluation, gradients, normals and
//! closest-point projection.
//!
//! A surface is the zero set of a level-set function `phi`. Three closed
//! shapes are built in (sphere, spindle of revolution, idealized cell), each
//! carrying the bounding box the solver meshes by default. Arbitrary surfaces
//! can be supplied as closures.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub type Vec3 = nalgebra::Vector3<f64>;

/// Axis-aligned bounding box of the computational domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Vec3,
    pub max: Vec3,
}

impl BoundingBox {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        BoundingBox { min, max }
    }

    pub fn from_extents(e: [f64; 6]) -> Self {
        BoundingBox {
            min: Vec3::new(e[0], e[2], e[4]),
            max: Vec3::new(e[1], e[3], e[5]),
        }
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn diameter(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn clamp(&self, p: Vec3) -> Vec3 {
        Vec3::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
            p.z.clamp(self.min.z, self.max.z),
        )
    }
}

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("level-set gradient degenerate at ({0}, {1}, {2})")]
    DegenerateGradient(f64, f64, f64),
    #[error("closest-point projection did not converge after {iters} iterations (|phi| = {residual:.3e})")]
    ProjectionNoConvergence { iters: usize, residual: f64 },
}

type PhiFn = Arc<dyn Fn(Vec3) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(Vec3) -> Vec3 + Send + Sync>;

#[derive(Clone)]
pub enum SurfaceKind {
    Sphere { center: Vec3, radius: f64 },
    Spindle,
    IdealizedCell,
    Custom { phi: PhiFn, grad: GradFn },
}

impl fmt::Debug for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfaceKind::Sphere { center, radius } => f
                .debug_struct("Sphere")
                .field("center", center)
                .field("radius", radius)
                .finish(),
            SurfaceKind::Spindle => write!(f, "Spindle"),
            SurfaceKind::IdealizedCell => write!(f, "IdealizedCell"),
            SurfaceKind::Custom { .. } => write!(f, "Custom"),
        }
    }
}

/// A point obtained by projecting onto the surface: position, unit normal
/// (pointing toward `phi > 0`) and the remaining level-set residual.
#[derive(Debug, Clone, Copy)]
pub struct SurfacePoint {
    pub pos: Vec3,
    pub normal: Vec3,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct ImplicitSurface {
    pub kind: SurfaceKind,
    pub bbox: BoundingBox,
}

impl ImplicitSurface {
    /// Sphere of given center and radius; default box scales the unit-sphere
    /// domain `[-5/3, 5/3]^3` by the radius.
    pub fn sphere(center: Vec3, radius: f64) -> Self {
        let half = 5.0 / 3.0 * radius;
        ImplicitSurface {
            kind: SurfaceKind::Sphere { center, radius },
            bbox: BoundingBox::new(center.add_scalar(-half), center.add_scalar(half)),
        }
    }

    pub fn unit_sphere() -> Self {
        Self::sphere(Vec3::zeros(), 1.0)
    }

    /// Spindle of revolution about the x1-axis, radius 1/4 at the waist,
    /// closing at tips (+-5, 0, 0). Domain `[-5,5] x [-4/3,4/3]^2`.
    pub fn spindle() -> Self {
        ImplicitSurface {
            kind: SurfaceKind::Spindle,
            bbox: BoundingBox::from_extents([-5.0, 5.0, -4.0 / 3.0, 4.0 / 3.0, -4.0 / 3.0, 4.0 / 3.0]),
        }
    }

    /// Closed cell-like quartic surface, elongated along x1 with a modulated
    /// waist. Domain `[-2,2] x [-4/3,4/3]^2`.
    pub fn idealized_cell() -> Self {
        ImplicitSurface {
            kind: SurfaceKind::IdealizedCell,
            bbox: BoundingBox::from_extents([-2.0, 2.0, -4.0 / 3.0, 4.0 / 3.0, -4.0 / 3.0, 4.0 / 3.0]),
        }
    }

    pub fn custom<P, G>(phi: P, grad: G, bbox: BoundingBox) -> Self
    where
        P: Fn(Vec3) -> f64 + Send + Sync + 'static,
        G: Fn(Vec3) -> Vec3 + Send + Sync + 'static,
    {
        ImplicitSurface {
            kind: SurfaceKind::Custom {
                phi: Arc::new(phi),
                grad: Arc::new(grad),
            },
            bbox,
        }
    }

    /// Level-set value at `p`.
    pub fn phi(&self, p: Vec3) -> f64 {
        match &self.kind {
            SurfaceKind::Sphere { center, radius } => (p - center).norm() - radius,
            SurfaceKind::Spindle => {
                if p.x > 5.0 {
                    -25.0
                } else {
                    let c = (p.x * std::f64::consts::PI / 10.0).cos();
                    c * c - (4.0 * p.y).powi(2) - (4.0 * p.z).powi(2)
                }
            }
            SurfaceKind::IdealizedCell => {
                let w = 1.0 + 0.5 * (std::f64::consts::PI * p.x).sin();
                0.25 * p.x * p.x + p.y * p.y + 4.0 * p.z * p.z / (w * w) - 1.0
            }
            SurfaceKind::Custom { phi, .. } => phi(p),
        }
    }

    /// Gradient of the level set. Zero vector where the level set is flat or
    /// at isolated critical points (sphere center, spindle tips).
    pub fn grad_phi(&self, p: Vec3) -> Vec3 {
        match &self.kind {
            SurfaceKind::Sphere { center, .. } => {
                let d = p - center;
                let n = d.norm();
                if n < 1e-300 {
                    Vec3::zeros()
                } else {
                    d / n
                }
            }
            SurfaceKind::Spindle => {
                if p.x > 5.0 {
                    Vec3::zeros()
                } else {
                    let pi = std::f64::consts::PI;
                    Vec3::new(
                        -(pi / 10.0) * (pi * p.x / 5.0).sin(),
                        -32.0 * p.y,
                        -32.0 * p.z,
                    )
                }
            }
            SurfaceKind::IdealizedCell => {
                let pi = std::f64::consts::PI;
                let w = 1.0 + 0.5 * (pi * p.x).sin();
                let dw = 0.5 * pi * (pi * p.x).cos();
                Vec3::new(
                    0.5 * p.x - 8.0 * p.z * p.z * dw / (w * w * w),
                    2.0 * p.y,
                    8.0 * p.z / (w * w),
                )
            }
            SurfaceKind::Custom { grad, .. } => grad(p),
        }
    }

    /// Unit normal `grad(phi)/|grad(phi)|`, pointing toward `phi > 0`.
    pub fn normal(&self, p: Vec3) -> Result<Vec3, GeomError> {
        let g = self.grad_phi(p);
        let n = g.norm();
        if n < 1e-14 {
            Err(GeomError::DegenerateGradient(p.x, p.y, p.z))
        } else {
            Ok(g / n)
        }
    }

    /// Closest-point projection onto the zero level set by damped quasi-Newton
    /// iteration `p <- p - phi(p) g / |g|^2`.
    pub fn project(&self, start: Vec3) -> Result<SurfacePoint, GeomError> {
        let tol = 1e-13 * (1.0 + self.bbox.diameter());
        let max_iter = 100;
        let mut p = start;
        let mut f = self.phi(p);
        for it in 0..max_iter {
            if f.abs() <= tol {
                let normal = self.normal(p)?;
                return Ok(SurfacePoint {
                    pos: p,
                    normal,
                    residual: f.abs(),
                });
            }
            let g = self.grad_phi(p);
            let g2 = g.norm_squared();
            if g2 < 1e-28 {
                return Err(GeomError::DegenerateGradient(p.x, p.y, p.z));
            }
            // Damped step: halve until |phi| decreases.
            let full = -f / g2;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let cand = p + g * (lambda * full);
                let fc = self.phi(cand);
                if fc.abs() < f.abs() {
                    p = cand;
                    f = fc;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                return Err(GeomError::ProjectionNoConvergence {
                    iters: it,
                    residual: f.abs(),
                });
            }
        }
        if f.abs() <= tol {
            let normal = self.normal(p)?;
            Ok(SurfacePoint {
                pos: p,
                normal,
                residual: f.abs(),
            })
        } else {
            Err(GeomError::ProjectionNoConvergence {
                iters: max_iter,
                residual: f.abs(),
            })
        }
    }
}
