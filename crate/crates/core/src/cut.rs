//! Reconstruction of the discrete surface inside the narrow band.
//!
//! The level set is interpolated piecewise linearly on the eight half-scale
//! children of every band tet; its zero set is extracted child by child with
//! a marching-tetrahedra pass (one triangle for a 1/3 vertex sign split, two
//! for a 2/2 split, quad split along its shorter diagonal). The discrete
//! normal field is the normalized gradient of the quadratic nodal interpolant
//! of the level set on each child. Quadrature over the reconstructed surface
//! and over the band volume is exposed as streaming visitors so nothing
//! per-quadrature-point is ever materialized.


use thiserror::Error;

use crate::geom::{GeomError, ImplicitSurface, Vec3};
use crate::mesh::{BackgroundMesh, Band, TET_EDGES};
use crate::quad::{tet_rule, triangle_rule};

#[derive(Debug, Error)]
pub enum CutError {
    #[error("discrete normal degenerate at ({0}, {1}, {2}) even after perturbation")]
    DegenerateNormal(f64, f64, f64),
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error("band tet {0} is geometrically degenerate")]
    DegenerateTet(u32),
}

/// Lattice indexing: 0-3 vertices, 4-9 edge midpoints in `TET_EDGES` order.
const CORNER_CHILDREN: [[usize; 4]; 4] = [[0, 4, 5, 6], [1, 4, 7, 8], [2, 5, 7, 9], [3, 6, 8, 9]];

/// Octahedron children for each interior diagonal (4,9), (5,8), (6,7).
const OCTA_CHILDREN: [[[usize; 4]; 4]; 3] = [
    [[4, 9, 5, 6], [4, 9, 6, 8], [4, 9, 8, 7], [4, 9, 7, 5]],
    [[5, 8, 4, 6], [5, 8, 6, 9], [5, 8, 9, 7], [5, 8, 7, 4]],
    [[6, 7, 4, 5], [6, 7, 5, 9], [6, 7, 9, 8], [6, 7, 8, 4]],
];

/// Ten lattice points of a tet: vertices then edge midpoints.
pub fn tet_lattice_points(v: &[Vec3; 4]) -> [Vec3; 10] {
    let mut out = [Vec3::zeros(); 10];
    out[..4].copy_from_slice(v);
    for (e, (a, b)) in TET_EDGES.iter().enumerate() {
        out[4 + e] = (v[*a] + v[*b]) * 0.5;
    }
    out
}

/// The eight half-scale children, octahedron split along its shortest
/// interior diagonal (ties broken by fixed diagonal order).
pub fn red_children(lattice: &[Vec3; 10]) -> [[usize; 4]; 8] {
    let d = [
        (lattice[4] - lattice[9]).norm_squared(),
        (lattice[5] - lattice[8]).norm_squared(),
        (lattice[6] - lattice[7]).norm_squared(),
    ];
    let mut pick = 0;
    if d[1] < d[pick] {
        pick = 1;
    }
    if d[2] < d[pick] {
        pick = 2;
    }
    let mut out = [[0usize; 4]; 8];
    out[..4].copy_from_slice(&CORNER_CHILDREN);
    out[4..].copy_from_slice(&OCTA_CHILDREN[pick]);
    out
}

/// Gradients of the four linear barycentric basis functions.
pub fn p1_gradients(v: &[Vec3; 4]) -> Option<[Vec3; 4]> {
    let j = nalgebra::Matrix3::from_columns(&[v[1] - v[0], v[2] - v[0], v[3] - v[0]]);
    let inv = j.try_inverse()?;
    let g1 = Vec3::new(inv[(0, 0)], inv[(0, 1)], inv[(0, 2)]);
    let g2 = Vec3::new(inv[(1, 0)], inv[(1, 1)], inv[(1, 2)]);
    let g3 = Vec3::new(inv[(2, 0)], inv[(2, 1)], inv[(2, 2)]);
    Some([-(g1 + g2 + g3), g1, g2, g3])
}

fn tet_volume(v: &[Vec3; 4]) -> f64 {
    (v[1] - v[0]).cross(&(v[2] - v[0])).dot(&(v[3] - v[0])).abs() / 6.0
}

/// Gradient evaluator for the quadratic nodal interpolant of the level set
/// on one (child) tet.
pub struct QuadraticLevelSet {
    v0: Vec3,
    grads: [Vec3; 4],
    phi: [f64; 10],
    longest_dir: Vec3,
}

impl QuadraticLevelSet {
    pub fn build(surface: &ImplicitSurface, verts: &[Vec3; 4]) -> Option<Self> {
        let grads = p1_gradients(verts)?;
        let pts = tet_lattice_points(verts);
        let mut phi = [0.0; 10];
        for (o, p) in phi.iter_mut().zip(pts.iter()) {
            *o = surface.phi(*p);
        }
        let mut longest = (verts[1] - verts[0], (verts[1] - verts[0]).norm_squared());
        for (a, b) in TET_EDGES.iter().skip(1) {
            let e = verts[*b] - verts[*a];
            let n2 = e.norm_squared();
            if n2 > longest.1 {
                longest = (e, n2);
            }
        }
        Some(QuadraticLevelSet {
            v0: verts[0],
            grads,
            phi,
            longest_dir: longest.0 / longest.1.sqrt(),
        })
    }

    pub fn gradient(&self, x: Vec3) -> Vec3 {
        let d = x - self.v0;
        let l = [
            1.0 + self.grads[0].dot(&d),
            self.grads[1].dot(&d),
            self.grads[2].dot(&d),
            self.grads[3].dot(&d),
        ];
        let mut g = Vec3::zeros();
        for i in 0..4 {
            g += self.grads[i] * (self.phi[i] * (4.0 * l[i] - 1.0));
        }
        for (e, (i, j)) in TET_EDGES.iter().enumerate() {
            g += (self.grads[*i] * l[*j] + self.grads[*j] * l[*i]) * (4.0 * self.phi[4 + e]);
        }
        g
    }

    /// Unit normal; a node sitting exactly on a level-set critical point
    /// (surface tip) is nudged along the tet's longest edge first.
    pub fn unit_normal(&self, x: Vec3, h: f64) -> Result<Vec3, CutError> {
        let g = self.gradient(x);
        let n = g.norm();
        if n >= 1e-12 {
            return Ok(g / n);
        }
        let xp = x + self.longest_dir * (1e-10 * h);
        let g = self.gradient(xp);
        let n = g.norm();
        if n >= 1e-12 {
            Ok(g / n)
        } else {
            Err(CutError::DegenerateNormal(x.x, x.y, x.z))
        }
    }
}

struct TriBuf {
    tris: [[Vec3; 3]; 2],
    n: usize,
}

/// Zero-set polygon of the linear interpolant on one tet. Vertices with
/// phi = 0 count as the negative side.
fn march(verts: &[Vec3; 4], phi: &[f64; 4]) -> TriBuf {
    let mut neg = [false; 4];
    let mut n_neg = 0;
    for i in 0..4 {
        neg[i] = phi[i] <= 0.0;
        if neg[i] {
            n_neg += 1;
        }
    }
    let cross = |a: usize, b: usize| -> Vec3 {
        let t = phi[a] / (phi[a] - phi[b]);
        verts[a] + (verts[b] - verts[a]) * t
    };
    let mut out = TriBuf {
        tris: [[Vec3::zeros(); 3]; 2],
        n: 0,
    };
    match n_neg {
        1 | 3 => {
            // apex = the lone vertex on its side of the surface
            let lone_is_neg = n_neg == 1;
            let apex = (0..4).find(|&i| neg[i] == lone_is_neg).unwrap();
            let others: Vec<usize> = (0..4).filter(|&i| i != apex).collect();
            out.tris[0] = [
                cross(apex, others[0]),
                cross(apex, others[1]),
                cross(apex, others[2]),
            ];
            out.n = 1;
        }
        2 => {
            let a = (0..4).find(|&i| neg[i]).unwrap();
            let b = (a + 1..4).find(|&i| neg[i]).unwrap();
            let pos: Vec<usize> = (0..4).filter(|&i| !neg[i]).collect();
            let (c, d) = (pos[0], pos[1]);
            // quad cycle ac, ad, bd, bc; diagonals (ac,bd) and (ad,bc)
            let pac = cross(a, c);
            let pad = cross(a, d);
            let pbd = cross(b, d);
            let pbc = cross(b, c);
            if (pac - pbd).norm_squared() <= (pad - pbc).norm_squared() {
                out.tris[0] = [pac, pad, pbd];
                out.tris[1] = [pac, pbd, pbc];
            } else {
                out.tris[0] = [pad, pbd, pbc];
                out.tris[1] = [pad, pbc, pac];
            }
            out.n = 2;
        }
        _ => {}
    }
    out
}

/// One triangle of the reconstructed surface, tagged with the band tet and
/// the half-scale child it came from.
#[derive(Debug, Clone, Copy)]
pub struct CutTri {
    pub v: [Vec3; 3],
    pub tet: u32,
    pub child: u8,
}

impl CutTri {
    pub fn area(&self) -> f64 {
        0.5 * (self.v[1] - self.v[0]).cross(&(self.v[2] - self.v[0])).norm()
    }
}

/// Per-band-tet data needed by assembly: geometry, degrees of freedom,
/// constant basis gradients and the lattice level-set values.
#[derive(Debug, Clone)]
pub struct BandTet {
    pub verts: [Vec3; 4],
    pub dofs: [u32; 4],
    pub grads: [Vec3; 4],
    pub phi10: [f64; 10],
    pub volume: f64,
}

impl BandTet {
    /// Values of the four linear basis functions at a point.
    pub fn basis(&self, x: Vec3) -> [f64; 4] {
        let d = x - self.verts[0];
        [
            1.0 + self.grads[0].dot(&d),
            self.grads[1].dot(&d),
            self.grads[2].dot(&d),
            self.grads[3].dot(&d),
        ]
    }
}

/// The reconstructed surface with everything assembly and diagnostics need.
pub struct CutComplex {
    pub surface: ImplicitSurface,
    pub h: f64,
    pub surf_order: u8,
    pub vol_order: u8,
    pub dof_vertex: Vec<u32>,
    pub dof_pos: Vec<Vec3>,
    pub tets: Vec<BandTet>,
    pub tris: Vec<CutTri>,
    pub total_area: f64,
    pub dropped_area: f64,
}

impl CutComplex {
    pub fn build(
        mesh: &BackgroundMesh,
        surface: &ImplicitSurface,
        band: &Band,
        surf_order: u8,
        vol_order: u8,
    ) -> Result<CutComplex, CutError> {
        let dof_vertex = band.vertex_ids.clone();
        let dof_pos: Vec<Vec3> = dof_vertex.iter().map(|&v| mesh.vertex(v)).collect();
        let dof_of = |v: u32| dof_vertex.binary_search(&v).unwrap() as u32;

        let mut tets = Vec::with_capacity(band.tet_ids.len());
        let mut tris = Vec::new();
        let mut total_area = 0.0;
        let mut dropped = 0.0;
        let area_eps = 1e-14 * band.h * band.h;

        for (ti, &t) in band.tet_ids.iter().enumerate() {
            let verts = mesh.tet_positions(t);
            let vids = mesh.tet_vertices(t);
            let grads = p1_gradients(&verts).ok_or(CutError::DegenerateTet(t))?;
            let lattice = tet_lattice_points(&verts);
            let mut phi10 = [0.0; 10];
            for (o, p) in phi10.iter_mut().zip(lattice.iter()) {
                *o = surface.phi(*p);
            }
            let volume = tet_volume(&verts);
            let children = red_children(&lattice);
            for (ci, child) in children.iter().enumerate() {
                let cv = [
                    lattice[child[0]],
                    lattice[child[1]],
                    lattice[child[2]],
                    lattice[child[3]],
                ];
                let cphi = [
                    phi10[child[0]],
                    phi10[child[1]],
                    phi10[child[2]],
                    phi10[child[3]],
                ];
                let found = march(&cv, &cphi);
                if found.n == 0 {
                    continue;
                }
                let cgrads = p1_gradients(&cv).ok_or(CutError::DegenerateTet(t))?;
                let mut grad_phi_h = Vec3::zeros();
                for i in 0..4 {
                    grad_phi_h += cgrads[i] * cphi[i];
                }
                for tri in found.tris.iter().take(found.n) {
                    let mut v = *tri;
                    let normal = (v[1] - v[0]).cross(&(v[2] - v[0]));
                    let area = 0.5 * normal.norm();
                    if area < area_eps {
                        dropped += area;
                        continue;
                    }
                    if normal.dot(&grad_phi_h) < 0.0 {
                        v.swap(1, 2);
                    }
                    total_area += area;
                    tris.push(CutTri {
                        v,
                        tet: ti as u32,
                        child: ci as u8,
                    });
                }
            }
            tets.push(BandTet {
                verts,
                dofs: [
                    dof_of(vids[0]),
                    dof_of(vids[1]),
                    dof_of(vids[2]),
                    dof_of(vids[3]),
                ],
                grads,
                phi10,
                volume,
            });
        }

        Ok(CutComplex {
            surface: surface.clone(),
            h: band.h,
            surf_order,
            vol_order,
            dof_vertex,
            dof_pos,
            tets,
            tris,
            total_area,
            dropped_area: dropped,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.dof_vertex.len()
    }

    pub fn surface_area(&self) -> f64 {
        self.total_area
    }

    fn child_vertices(&self, tet: u32, child: u8) -> [Vec3; 4] {
        let lattice = tet_lattice_points(&self.tets[tet as usize].verts);
        let children = red_children(&lattice);
        let c = children[child as usize];
        [lattice[c[0]], lattice[c[1]], lattice[c[2]], lattice[c[3]]]
    }

    /// Nodal field interpolated at the three corners of a surface triangle.
    pub fn tri_corner_values(&self, tri: &CutTri, u: &[f64]) -> [f64; 3] {
        let bt = &self.tets[tri.tet as usize];
        let mut out = [0.0; 3];
        for (k, v) in tri.v.iter().enumerate() {
            let lam = bt.basis(*v);
            out[k] = (0..4).map(|i| lam[i] * u[bt.dofs[i] as usize]).sum();
        }
        out
    }

    /// Surface quadrature without normals: `f(band_tet, point, weight)`.
    pub fn visit_surface_quadrature<F: FnMut(u32, Vec3, f64)>(&self, mut f: F) {
        let rule = triangle_rule(self.surf_order);
        for tri in &self.tris {
            let area = tri.area();
            for (bary, w) in rule.bary.iter().zip(rule.weights) {
                let x = tri.v[0] * bary[0] + tri.v[1] * bary[1] + tri.v[2] * bary[2];
                f(tri.tet, x, w * area);
            }
        }
    }

    /// Surface quadrature with discrete normals:
    /// `f(band_tet, point, weight, normal)`.
    pub fn visit_surface_quadrature_with_normals<F: FnMut(u32, Vec3, f64, Vec3)>(
        &self,
        mut f: F,
    ) -> Result<(), CutError> {
        let rule = triangle_rule(self.surf_order);
        let mut cache: Option<((u32, u8), QuadraticLevelSet)> = None;
        for tri in &self.tris {
            let key = (tri.tet, tri.child);
            if cache.as_ref().map(|(k, _)| *k) != Some(key) {
                let cv = self.child_vertices(tri.tet, tri.child);
                let p2 = QuadraticLevelSet::build(&self.surface, &cv)
                    .ok_or(CutError::DegenerateTet(tri.tet))?;
                cache = Some((key, p2));
            }
            let p2 = &cache.as_ref().unwrap().1;
            let area = tri.area();
            for (bary, w) in rule.bary.iter().zip(rule.weights) {
                let x = tri.v[0] * bary[0] + tri.v[1] * bary[1] + tri.v[2] * bary[2];
                let n = p2.unit_normal(x, self.h)?;
                f(tri.tet, x, w * area, n);
            }
        }
        Ok(())
    }

    /// Volume quadrature over all band tets (summed over the half-scale
    /// children so the discrete normal is evaluated on its own child):
    /// `f(band_tet, point, weight, normal)`.
    pub fn visit_volume_quadrature<F: FnMut(u32, Vec3, f64, Vec3)>(
        &self,
        mut f: F,
    ) -> Result<(), CutError> {
        let rule = tet_rule(self.vol_order);
        for (ti, tet) in self.tets.iter().enumerate() {
            let lattice = tet_lattice_points(&tet.verts);
            let children = red_children(&lattice);
            for child in &children {
                let cv = [
                    lattice[child[0]],
                    lattice[child[1]],
                    lattice[child[2]],
                    lattice[child[3]],
                ];
                let p2 = QuadraticLevelSet::build(&self.surface, &cv)
                    .ok_or(CutError::DegenerateTet(ti as u32))?;
                let vol = tet_volume(&cv);
                for (bary, w) in rule.bary.iter().zip(rule.weights) {
                    let x = cv[0] * bary[0] + cv[1] * bary[1] + cv[2] * bary[2] + cv[3] * bary[3];
                    let n = p2.unit_normal(x, self.h)?;
                    f(ti as u32, x, w * vol, n);
                }
            }
        }
        Ok(())
    }

    /// Total band volume (sum of whole parent tets).
    pub fn band_volume(&self) -> f64 {
        self.tets.iter().map(|t| t.volume).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::BoundingBox;

    fn plane_surface() -> ImplicitSurface {
        ImplicitSurface::custom(
            |p| p.z - 0.25,
            |_| Vec3::new(0.0, 0.0, 1.0),
            BoundingBox::from_extents([0.0, 1.0, 0.0, 1.0, 0.0, 1.0]),
        )
    }

    fn build_complex(surface: &ImplicitSurface, level: u32) -> CutComplex {
        let mut mesh = BackgroundMesh::build_initial(surface.bbox);
        mesh.refine_toward_surface(surface, level, 8_000_000).unwrap();
        let band = mesh.select_band(surface).unwrap();
        CutComplex::build(&mesh, surface, &band, 2, 2).unwrap()
    }

    #[test]
    fn planar_cut_reproduces_exact_section() {
        let s = plane_surface();
        let cut = build_complex(&s, 1);
        // plane z = 0.25 cuts the unit box in a unit-area square
        assert!(
            (cut.total_area - 1.0).abs() < 1e-12,
            "area {}",
            cut.total_area
        );
        // linear level set: discrete normals are exact
        cut.visit_surface_quadrature_with_normals(|_, _, _, n| {
            assert!((n - Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
        })
        .unwrap();
        // all quad points lie on the plane
        cut.visit_surface_quadrature(|_, x, _| {
            assert!((x.z - 0.25).abs() < 1e-12);
        });
    }

    #[test]
    fn quad_points_lie_on_interpolated_zero_set() {
        let s = ImplicitSurface::unit_sphere();
        let cut = build_complex(&s, 2);
        for tri in &cut.tris {
            let cv = cut.child_vertices(tri.tet, tri.child);
            let cgrads = p1_gradients(&cv).unwrap();
            let cphi: Vec<f64> = cv.iter().map(|p| s.phi(*p)).collect();
            // linear interpolant at the centroid of each triangle
            let x = (tri.v[0] + tri.v[1] + tri.v[2]) / 3.0;
            let d = x - cv[0];
            let l = [
                1.0 + cgrads[0].dot(&d),
                cgrads[1].dot(&d),
                cgrads[2].dot(&d),
                cgrads[3].dot(&d),
            ];
            let val: f64 = (0..4).map(|i| l[i] * cphi[i]).sum();
            assert!(val.abs() < 1e-12, "phi_h at quad point: {val}");
        }
    }

    #[test]
    fn sphere_area_converges() {
        let s = ImplicitSurface::unit_sphere();
        let exact = 4.0 * std::f64::consts::PI;
        let mut errs = Vec::new();
        for level in 2..=3 {
            let cut = build_complex(&s, level);
            errs.push((cut.total_area - exact).abs());
            assert!(cut.dropped_area <= 1e-10 * cut.total_area);
        }
        assert!(errs[0] < 0.05 * exact);
        let rate = (errs[0] / errs[1]).log2();
        assert!(rate > 1.5, "area convergence rate {rate} ({errs:?})");
    }

    #[test]
    fn sphere_discrete_normals_close_to_exact() {
        let s = ImplicitSurface::unit_sphere();
        let cut = build_complex(&s, 3);
        let mut max_angle: f64 = 0.0;
        cut.visit_surface_quadrature_with_normals(|_, x, _, n| {
            let exact = x / x.norm();
            let angle = n.dot(&exact).clamp(-1.0, 1.0).acos();
            max_angle = max_angle.max(angle);
        })
        .unwrap();
        assert!(max_angle < 0.08, "max normal angle {max_angle}");
    }

    #[test]
    fn volume_quadrature_covers_band() {
        let s = ImplicitSurface::unit_sphere();
        let cut = build_complex(&s, 2);
        let mut total = 0.0;
        cut.visit_volume_quadrature(|_, _, w, n| {
            total += w;
            assert!((n.norm() - 1.0).abs() < 1e-12);
        })
        .unwrap();
        assert!(
            (total - cut.band_volume()).abs() < 1e-12 * cut.band_volume(),
            "volume quadrature {total} vs band {}",
            cut.band_volume()
        );
    }

    #[test]
    fn band_volume_scales_like_surface_shell() {
        let s = ImplicitSurface::unit_sphere();
        let exact = 4.0 * std::f64::consts::PI;
        let cut = build_complex(&s, 3);
        let ratio = cut.band_volume() / cut.h;
        assert!(
            ratio > 0.5 * exact && ratio < 4.0 * exact,
            "band volume / h = {ratio}"
        );
    }

    #[test]
    fn surface_quadrature_weights_sum_to_area() {
        let s = ImplicitSurface::unit_sphere();
        let cut = build_complex(&s, 2);
        let mut total = 0.0;
        cut.visit_surface_quadrature(|_, _, w| total += w);
        assert!((total - cut.total_area).abs() < 1e-12 * cut.total_area);
    }
}
