//! Trace finite element space: sparse operators assembled from bulk
//! piecewise-linear basis functions restricted to the reconstructed surface.
//!
//! Degrees of freedom live on all band-tet vertices. Three bilinear forms are
//! assembled: surface mass, (optionally weighted) tangential stiffness using
//! the projector `I - n n^T` with the discrete normal, and the normal-gradient
//! volume stabilization over whole band tets. All assembly loops run in fixed
//! element order, so matrices are reproducible bit for bit.

use rand::SeedableRng;
use thiserror::Error;

use crate::cut::{CutComplex, CutError};
use crate::geom::{GeomError, Vec3};

#[derive(Debug, Error)]
pub enum AssembleError {
    #[error("negative quadrature weight {value:.3e} at ({0}, {1}, {2})", .at[0], .at[1], .at[2])]
    NegativeWeight { at: [f64; 3], value: f64 },
    #[error(transparent)]
    Cut(#[from] CutError),
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Build an all-zero matrix from per-row column lists (need not be sorted
    /// or unique).
    pub fn from_pattern(n_rows: usize, n_cols: usize, mut rows: Vec<Vec<u32>>) -> Self {
        assert_eq!(rows.len(), n_rows);
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            cols.extend_from_slice(r);
            row_ptr.push(cols.len());
        }
        let nnz = cols.len();
        CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            cols,
            vals: vec![0.0; nnz],
        }
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    fn entry_index(&self, r: usize, c: u32) -> Option<usize> {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        self.cols[lo..hi].binary_search(&c).ok().map(|k| lo + k)
    }

    pub fn add(&mut self, r: usize, c: u32, v: f64) {
        let k = self
            .entry_index(r, c)
            .unwrap_or_else(|| panic!("entry ({r},{c}) outside sparsity pattern"));
        self.vals[k] += v;
    }

    pub fn get(&self, r: usize, c: u32) -> f64 {
        self.entry_index(r, c).map_or(0.0, |k| self.vals[k])
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for r in 0..self.n_rows {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            y[r] = acc;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows)
            .map(|r| self.get(r, r as u32))
            .collect()
    }

    /// Same-pattern linear combination `sum_k coeff_k * m_k`. All matrices
    /// must share one sparsity pattern (true for operators assembled from the
    /// same band).
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> CsrMatrix {
        let first = terms[0].1;
        let mut out = first.clone();
        for v in out.vals.iter_mut() {
            *v *= terms[0].0;
        }
        for (coeff, m) in &terms[1..] {
            assert_eq!(m.row_ptr, first.row_ptr, "pattern mismatch");
            debug_assert_eq!(m.cols, first.cols);
            for (o, v) in out.vals.iter_mut().zip(m.vals.iter()) {
                *o += coeff * v;
            }
        }
        out
    }

    /// Monolithic 2x2 block matrix; `None` blocks are zero.
    pub fn block_2x2(blocks: [[Option<&CsrMatrix>; 2]; 2], n: usize) -> CsrMatrix {
        let mut row_ptr = Vec::with_capacity(2 * n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for bi in 0..2 {
            for r in 0..n {
                for bj in 0..2 {
                    if let Some(m) = blocks[bi][bj] {
                        debug_assert_eq!(m.n_rows, n);
                        let off = (bj * n) as u32;
                        for k in m.row_ptr[r]..m.row_ptr[r + 1] {
                            cols.push(m.cols[k] + off);
                            vals.push(m.vals[k]);
                        }
                    }
                }
                row_ptr.push(cols.len());
            }
        }
        CsrMatrix {
            n_rows: 2 * n,
            n_cols: 2 * n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.n_rows, self.n_cols);
        for r in 0..self.n_rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                d[(r, self.cols[k] as usize)] = self.vals[k];
            }
        }
        d
    }
}

/// Spatial weight applied inside the tangential stiffness form.
pub enum Weight<'a> {
    Unit,
    /// Weight is `map(v(x))` where `v` is the linear interpolant of nodal values.
    Nodal {
        values: &'a [f64],
        map: &'a dyn Fn(f64) -> f64,
    },
}

fn band_pattern(cut: &CutComplex) -> CsrMatrix {
    let n = cut.n_dofs();
    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n];
    for tet in &cut.tets {
        for &i in &tet.dofs {
            for &j in &tet.dofs {
                rows[i as usize].push(j);
            }
        }
    }
    CsrMatrix::from_pattern(n, n, rows)
}

/// Surface mass matrix `[int psi_i psi_j ds]`.
pub fn assemble_mass(cut: &CutComplex) -> CsrMatrix {
    let mut m = band_pattern(cut);
    cut.visit_surface_quadrature(|t, x, w| {
        let tet = &cut.tets[t as usize];
        let bas = tet.basis(x);
        for i in 0..4 {
            let wi = w * bas[i];
            for j in 0..4 {
                m.add(tet.dofs[i] as usize, tet.dofs[j], wi * bas[j]);
            }
        }
    });
    m
}

/// Tangential stiffness `[int w(x) (P grad psi_i) . (P grad psi_j) ds]` with
/// `P = I - n n^T` built from the discrete normal.
pub fn assemble_tangential_stiffness(
    cut: &CutComplex,
    weight: Weight,
) -> Result<CsrMatrix, AssembleError> {
    let mut a = band_pattern(cut);
    let mut bad: Option<AssembleError> = None;
    cut.visit_surface_quadrature_with_normals(|t, x, w, n| {
        if bad.is_some() {
            return;
        }
        let tet = &cut.tets[t as usize];
        let omega = match &weight {
            Weight::Unit => 1.0,
            Weight::Nodal { values, map } => {
                let bas = tet.basis(x);
                let mut v = 0.0;
                for i in 0..4 {
                    v += bas[i] * values[tet.dofs[i] as usize];
                }
                let om = map(v);
                if om < -1e-12 {
                    bad = Some(AssembleError::NegativeWeight {
                        at: [x.x, x.y, x.z],
                        value: om,
                    });
                    return;
                }
                om.max(0.0)
            }
        };
        let mut tg = [Vec3::zeros(); 4];
        for i in 0..4 {
            let g = tet.grads[i];
            tg[i] = g - n * n.dot(&g);
        }
        let ww = w * omega;
        for i in 0..4 {
            for j in 0..4 {
                a.add(tet.dofs[i] as usize, tet.dofs[j], ww * tg[i].dot(&tg[j]));
            }
        }
    })?;
    if let Some(e) = bad {
        return Err(e);
    }
    Ok(a)
}

/// Normal-gradient volume stabilization
/// `[int_band (n . grad psi_i)(n . grad psi_j) dx]`.
pub fn assemble_normal_stabilization(cut: &CutComplex) -> Result<CsrMatrix, AssembleError> {
    let mut s = band_pattern(cut);
    cut.visit_volume_quadrature(|t, _x, w, n| {
        let tet = &cut.tets[t as usize];
        let mut d = [0.0; 4];
        for i in 0..4 {
            d[i] = n.dot(&tet.grads[i]);
        }
        for i in 0..4 {
            let wi = w * d[i];
            for j in 0..4 {
                s.add(tet.dofs[i] as usize, tet.dofs[j], wi * d[j]);
            }
        }
    })?;
    Ok(s)
}

/// Surface load vector `[int g(x) psi_i ds]`.
pub fn assemble_load(cut: &CutComplex, g: &dyn Fn(Vec3) -> f64) -> Vec<f64> {
    let mut b = vec![0.0; cut.n_dofs()];
    cut.visit_surface_quadrature(|t, x, w| {
        let tet = &cut.tets[t as usize];
        let bas = tet.basis(x);
        let gv = w * g(x);
        for i in 0..4 {
            b[tet.dofs[i] as usize] += gv * bas[i];
        }
    });
    b
}

/// Nodal interpolant of an ambient function.
pub fn interpolate(cut: &CutComplex, f: &dyn Fn(Vec3) -> f64) -> Vec<f64> {
    cut.dof_pos.iter().map(|&p| f(p)).collect()
}

/// Nodal interpolant of a function defined on the surface, extended to band
/// vertices through the closest-point projection.
pub fn interpolate_surface(
    cut: &CutComplex,
    f: &dyn Fn(Vec3) -> f64,
) -> Result<Vec<f64>, GeomError> {
    cut.dof_pos
        .iter()
        .map(|&p| cut.surface.project(p).map(|sp| f(sp.pos)))
        .collect()
}

/// Nodewise i.i.d. uniform [0,1) values from a seeded ChaCha12 stream, in
/// degree-of-freedom order.
pub fn random_field(cut: &CutComplex, seed: u64) -> Vec<f64> {
    use rand::Rng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    (0..cut.n_dofs()).map(|_| rng.random::<f64>()).collect()
}
