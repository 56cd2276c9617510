//! Background tetrahedral mesh: a box split into 2x2x2 cells of six Kuhn
//! tetrahedra each, refined toward the surface by conforming edge bisection.
//!
//! Refinement uses tagged bisection on the Kuhn grid: each tetrahedron keeps
//! its vertices in generation order plus a cyclic tag, and bisection of the
//! tagged edge is propagated to every tetrahedron sharing that edge so the
//! mesh stays conforming at all times. Three bisections of a Kuhn tet
//! reproduce its eight half-scale copies, so "refinement level l" below
//! means 3*l bisections.

use std::collections::HashMap;

use thiserror::Error;

use crate::geom::{BoundingBox, ImplicitSurface, Vec3};

/// Edge ordering convention for the 10 lattice points of a tet
/// (4 vertices followed by 6 edge midpoints).
pub const TET_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("refinement exceeded the tet budget ({limit} tets)")]
    ResourceLimit { limit: usize },
    #[error("no tetrahedron is cut by the surface")]
    EmptyBand,
    #[error("mesh conformity violated: {0}")]
    NonConforming(String),
}

#[derive(Debug, Clone, Copy)]
struct Tet {
    v: [u32; 4], // generation order, not necessarily positively oriented
    tag: u8,     // next bisection coordinate, cycles 3 -> 2 -> 1 -> 3
    level: u8,   // bisection count
    alive: bool,
}

#[derive(Debug)]
pub struct BackgroundMesh {
    verts: Vec<Vec3>,
    tets: Vec<Tet>,
    /// midpoint vertex of an already-split edge, keyed by sorted vertex pair
    midpoints: HashMap<(u32, u32), u32>,
    /// alive tets incident to each vertex; rebuilt lazily when refining
    incidence: Vec<Vec<u32>>,
    pub bbox: BoundingBox,
}

/// Narrow band of tets cut by the discrete surface, plus its active vertices.
#[derive(Debug, Clone)]
pub struct Band {
    pub tet_ids: Vec<u32>,
    pub vertex_ids: Vec<u32>, // sorted ascending
    /// characteristic cell size of the band (max tet diameter / sqrt(3),
    /// which equals the cube edge length for Kuhn tets of an isotropic cell)
    pub h: f64,
    pub max_diameter: f64,
    pub min_diameter: f64,
}

impl BackgroundMesh {
    /// 27 vertices, 48 tets: the box split into 2x2x2 cells, each cell into
    /// six Kuhn tets sharing the cell diagonal.
    pub fn build_initial(bbox: BoundingBox) -> Self {
        let mut verts = Vec::with_capacity(27);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let f = |lo: f64, hi: f64, t: usize| lo + (hi - lo) * (t as f64) / 2.0;
                    verts.push(Vec3::new(
                        f(bbox.min.x, bbox.max.x, i),
                        f(bbox.min.y, bbox.max.y, j),
                        f(bbox.min.z, bbox.max.z, k),
                    ));
                }
            }
        }
        let vid = |i: usize, j: usize, k: usize| (i * 9 + j * 3 + k) as u32;

        // All 6 permutations of (x, y, z); each gives the Kuhn path
        // corner -> corner + e_p0 -> + e_p1 -> opposite corner.
        const PERMS: [[usize; 3]; 6] = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];

        let mut tets = Vec::with_capacity(48);
        for ci in 0..2 {
            for cj in 0..2 {
                for ck in 0..2 {
                    for perm in PERMS {
                        let mut idx = [ci, cj, ck];
                        let v0 = vid(idx[0], idx[1], idx[2]);
                        idx[perm[0]] += 1;
                        let v1 = vid(idx[0], idx[1], idx[2]);
                        idx[perm[1]] += 1;
                        let v2 = vid(idx[0], idx[1], idx[2]);
                        idx[perm[2]] += 1;
                        let v3 = vid(idx[0], idx[1], idx[2]);
                        tets.push(Tet {
                            v: [v0, v1, v2, v3],
                            tag: 3,
                            level: 0,
                            alive: true,
                        });
                    }
                }
            }
        }

        BackgroundMesh {
            verts,
            tets,
            midpoints: HashMap::new(),
            incidence: Vec::new(),
            bbox,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.verts.len()
    }

    pub fn vertex(&self, v: u32) -> Vec3 {
        self.verts[v as usize]
    }

    pub fn n_alive(&self) -> usize {
        self.tets.iter().filter(|t| t.alive).count()
    }

    pub fn alive_tets(&self) -> impl Iterator<Item = u32> + '_ {
        self.tets
            .iter()
            .enumerate()
            .filter(|(_, t)| t.alive)
            .map(|(i, _)| i as u32)
    }

    /// Vertex ids of a tet, reordered if needed so the signed volume is positive.
    pub fn tet_vertices(&self, t: u32) -> [u32; 4] {
        let mut v = self.tets[t as usize].v;
        if self.signed_volume(&v) < 0.0 {
            v.swap(2, 3);
        }
        v
    }

    /// Bisection count of a tet; divide by 3 for the nominal refinement level.
    pub fn bisection_level(&self, t: u32) -> u32 {
        self.tets[t as usize].level as u32
    }

    pub fn tet_positions(&self, t: u32) -> [Vec3; 4] {
        let v = self.tet_vertices(t);
        [
            self.verts[v[0] as usize],
            self.verts[v[1] as usize],
            self.verts[v[2] as usize],
            self.verts[v[3] as usize],
        ]
    }

    fn signed_volume(&self, v: &[u32; 4]) -> f64 {
        let p0 = self.verts[v[0] as usize];
        let a = self.verts[v[1] as usize] - p0;
        let b = self.verts[v[2] as usize] - p0;
        let c = self.verts[v[3] as usize] - p0;
        a.cross(&b).dot(&c) / 6.0
    }

    pub fn tet_volume(&self, t: u32) -> f64 {
        self.signed_volume(&self.tets[t as usize].v).abs()
    }

    pub fn tet_diameter(&self, t: u32) -> f64 {
        let p = self.tet_positions(t);
        let mut d: f64 = 0.0;
        for i in 0..4 {
            for j in (i + 1)..4 {
                d = d.max((p[i] - p[j]).norm());
            }
        }
        d
    }

    /// The 10 lattice points of a tet: vertices then edge midpoints
    /// (edge order per `TET_EDGES`).
    pub fn tet_lattice(&self, t: u32) -> [Vec3; 10] {
        let p = self.tet_positions(t);
        let mut out = [Vec3::zeros(); 10];
        out[..4].copy_from_slice(&p);
        for (e, (a, b)) in TET_EDGES.iter().enumerate() {
            out[4 + e] = (p[*a] + p[*b]) * 0.5;
        }
        out
    }

    /// Level-set values at the 10 lattice points.
    pub fn phi_lattice(&self, t: u32, surface: &ImplicitSurface) -> [f64; 10] {
        let pts = self.tet_lattice(t);
        let mut out = [0.0; 10];
        for (o, p) in out.iter_mut().zip(pts.iter()) {
            *o = surface.phi(*p);
        }
        out
    }

    /// A tet is considered cut when the interpolated level set changes sign on
    /// one of its eight half-scale children, i.e. among the 10 lattice values.
    fn is_cut(&self, t: u32, surface: &ImplicitSurface) -> bool {
        let phi = self.phi_lattice(t, surface);
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in phi {
            min = min.min(v);
            max = max.max(v);
        }
        min <= 0.0 && max >= 0.0 && !(min == 0.0 && max == 0.0)
    }

    fn ensure_incidence(&mut self) {
        if !self.incidence.is_empty() {
            return;
        }
        self.incidence = vec![Vec::new(); self.verts.len()];
        for (i, t) in self.tets.iter().enumerate() {
            if t.alive {
                for &v in &t.v {
                    self.incidence[v as usize].push(i as u32);
                }
            }
        }
    }

    fn tagged_edge(&self, t: u32) -> (u32, u32) {
        let tet = &self.tets[t as usize];
        let a = tet.v[0];
        let b = tet.v[tet.tag as usize];
        if a < b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Alive tets containing both endpoints of an edge, ascending order.
    fn tets_around_edge(&self, e: (u32, u32)) -> Vec<u32> {
        let la = &self.incidence[e.0 as usize];
        let lb = &self.incidence[e.1 as usize];
        let mut out: Vec<u32> = la.iter().copied().filter(|t| lb.contains(t)).collect();
        out.sort_unstable();
        out
    }

    fn bisect(&mut self, t: u32, z: u32) {
        let tet = self.tets[t as usize];
        debug_assert!(tet.alive);
        let d = tet.tag as usize;
        let new_tag = if d == 1 { 3 } else { (d - 1) as u8 };

        // child 1: tagged vertex replaced by the midpoint
        let mut c1 = tet.v;
        c1[d] = z;
        // child 2: generation order shifts out the oldest vertex
        let mut c2 = [0u32; 4];
        for (i, slot) in c2.iter_mut().enumerate().take(d + 1) {
            *slot = if i < d { tet.v[i + 1] } else { z };
        }
        c2[(d + 1)..].copy_from_slice(&tet.v[(d + 1)..]);

        self.tets[t as usize].alive = false;
        for &v in &tet.v {
            let list = &mut self.incidence[v as usize];
            if let Some(pos) = list.iter().position(|&x| x == t) {
                list.swap_remove(pos);
            }
        }

        for child in [c1, c2] {
            let id = self.tets.len() as u32;
            self.tets.push(Tet {
                v: child,
                tag: new_tag,
                level: tet.level + 1,
                alive: true,
            });
            for &v in &child {
                self.incidence[v as usize].push(id);
            }
        }
    }

    fn midpoint_vertex(&mut self, e: (u32, u32)) -> u32 {
        if let Some(&m) = self.midpoints.get(&e) {
            return m;
        }
        let p = (self.verts[e.0 as usize] + self.verts[e.1 as usize]) * 0.5;
        let id = self.verts.len() as u32;
        self.verts.push(p);
        self.incidence.push(Vec::new());
        self.midpoints.insert(e, id);
        id
    }

    /// Bisect tet `t` once, recursively bisecting neighbors first whenever the
    /// patch around the tagged edge is not yet compatible.
    fn bisect_compatibly(&mut self, t: u32) -> Result<(), MeshError> {
        let mut stack = vec![t];
        let mut guard = 0usize;
        while let Some(&top) = stack.last() {
            guard += 1;
            if guard > 10_000_000 {
                return Err(MeshError::NonConforming(
                    "bisection closure did not terminate".into(),
                ));
            }
            if !self.tets[top as usize].alive {
                stack.pop();
                continue;
            }
            let e = self.tagged_edge(top);
            let patch = self.tets_around_edge(e);
            let incompatible: Vec<u32> = patch
                .iter()
                .copied()
                .filter(|&s| self.tagged_edge(s) != e)
                .collect();
            if incompatible.is_empty() {
                let z = self.midpoint_vertex(e);
                for s in patch {
                    self.bisect(s, z);
                }
                stack.pop();
            } else {
                stack.extend(incompatible);
            }
        }
        Ok(())
    }

    /// Refine every tet cut by the surface until it has undergone `3 * level`
    /// bisections (i.e. its diameter is halved `level` times), keeping the
    /// mesh conforming throughout.
    pub fn refine_toward_surface(
        &mut self,
        surface: &ImplicitSurface,
        level: u32,
        max_tets: usize,
    ) -> Result<(), MeshError> {
        self.ensure_incidence();
        let target = (3 * level) as u8;
        loop {
            let marked: Vec<u32> = self
                .tets
                .iter()
                .enumerate()
                .filter(|(_, t)| t.alive && t.level < target)
                .map(|(i, _)| i as u32)
                .filter(|&i| self.is_cut(i, surface))
                .collect();
            if marked.is_empty() {
                break;
            }
            for t in marked {
                // closure may have split this tet already
                if self.tets[t as usize].alive && self.tets[t as usize].level < target {
                    self.bisect_compatibly(t)?;
                }
                if self.tets.len() / 2 > max_tets {
                    return Err(MeshError::ResourceLimit { limit: max_tets });
                }
            }
            if self.n_alive() > max_tets {
                return Err(MeshError::ResourceLimit { limit: max_tets });
            }
        }
        self.incidence.clear();
        self.incidence.shrink_to_fit();
        Ok(())
    }

    /// Collect the narrow band: all tets on which the piecewise-linear level
    /// set (sampled on the half-scale children) changes sign or vanishes.
    pub fn select_band(&self, surface: &ImplicitSurface) -> Result<Band, MeshError> {
        let mut tet_ids = Vec::new();
        let mut vertex_ids = Vec::new();
        let mut max_d: f64 = 0.0;
        let mut min_d = f64::INFINITY;
        for t in self.alive_tets() {
            if self.is_cut(t, surface) {
                tet_ids.push(t);
                vertex_ids.extend_from_slice(&self.tet_vertices(t));
                let d = self.tet_diameter(t);
                max_d = max_d.max(d);
                min_d = min_d.min(d);
            }
        }
        if tet_ids.is_empty() {
            return Err(MeshError::EmptyBand);
        }
        vertex_ids.sort_unstable();
        vertex_ids.dedup();
        Ok(Band {
            tet_ids,
            vertex_ids,
            h: max_d / 3.0_f64.sqrt(),
            max_diameter: max_d,
            min_diameter: min_d,
        })
    }

    /// Every interior face must be shared by exactly two alive tets, boundary
    /// faces by one, and all tets must have nonzero volume.
    pub fn conformity_audit(&self) -> Result<(), MeshError> {
        let mut faces: HashMap<[u32; 3], u32> = HashMap::new();
        for t in self.alive_tets() {
            let v = self.tets[t as usize].v;
            if self.tet_volume(t) <= 0.0 {
                return Err(MeshError::NonConforming(format!("tet {t} has zero volume")));
            }
            for skip in 0..4 {
                let mut f = [0u32; 3];
                let mut k = 0;
                for (i, &vi) in v.iter().enumerate() {
                    if i != skip {
                        f[k] = vi;
                        k += 1;
                    }
                }
                f.sort_unstable();
                *faces.entry(f).or_insert(0) += 1;
            }
        }
        for (f, count) in &faces {
            match count {
                2 => {}
                1 => {
                    if !self.face_on_boundary(f) {
                        return Err(MeshError::NonConforming(format!(
                            "interior face {f:?} belongs to a single tet"
                        )));
                    }
                }
                n => {
                    return Err(MeshError::NonConforming(format!(
                        "face {f:?} shared by {n} tets"
                    )));
                }
            }
        }
        Ok(())
    }

    fn face_on_boundary(&self, f: &[u32; 3]) -> bool {
        let eps = 1e-12 * self.bbox.diameter();
        for axis in 0..3 {
            for bound in [self.bbox.min[axis], self.bbox.max[axis]] {
                if f.iter()
                    .all(|&v| (self.verts[v as usize][axis] - bound).abs() < eps)
                {
                    return true;
                }
            }
        }
        false
    }
}
