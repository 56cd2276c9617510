//! Sparse linear solvers: preconditioned CG, BiCGStab and restarted GMRES,
//! plus a dense LU fallback used as an oracle on small systems.
//!
//! Convergence contract: `|A x - b| <= max(rel_tol * |b|, abs_tol)` in the
//! Euclidean norm, with the residual recomputed from scratch before
//! returning. All iterations are sequential with a fixed reduction order, so
//! results are reproducible across runs.

use thiserror::Error;

use crate::fe::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ConjugateGradient,
    StabilizedBiCg,
    Gmres,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Jacobi,
    IncompleteLu,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub method: Method,
    pub preconditioner: Preconditioner,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iter: usize,
    pub restart: usize,
    /// dense fallback refuses systems larger than this
    pub direct_limit: usize,
}

impl SolverConfig {
    /// CG + Jacobi at 1e-10: default for symmetric positive definite systems.
    pub fn cg() -> Self {
        SolverConfig {
            method: Method::ConjugateGradient,
            preconditioner: Preconditioner::Jacobi,
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_iter: 20_000,
            restart: 50,
            direct_limit: 20_000,
        }
    }

    /// GMRES(50) + ILU(0): default for the nonsymmetric block systems.
    pub fn gmres() -> Self {
        SolverConfig {
            method: Method::Gmres,
            preconditioner: Preconditioner::IncompleteLu,
            ..Self::cg()
        }
    }

    pub fn direct() -> Self {
        SolverConfig {
            method: Method::Direct,
            preconditioner: Preconditioner::None,
            ..Self::cg()
        }
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("no convergence after {iters} iterations (residual {residual:.3e})")]
    NoConvergence {
        iters: usize,
        residual: f64,
        best: Vec<f64>,
    },
    #[error("solver breakdown: {0}")]
    Breakdown(String),
    #[error("dense solve limited to {limit} unknowns, system has {n}")]
    TooLargeForDirect { n: usize, limit: usize },
    #[error("matrix/vector size mismatch")]
    ShapeMismatch,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iters: usize,
    pub residual: f64,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

enum Prec {
    Identity,
    Jacobi(Vec<f64>),
    Ilu(Ilu0),
}

impl Prec {
    fn build(a: &CsrMatrix, kind: Preconditioner) -> Result<Self, SolverError> {
        match kind {
            Preconditioner::None => Ok(Prec::Identity),
            Preconditioner::Jacobi => {
                let d = a
                    .diagonal()
                    .iter()
                    .map(|&v| if v.abs() > 1e-300 { 1.0 / v } else { 1.0 })
                    .collect();
                Ok(Prec::Jacobi(d))
            }
            Preconditioner::IncompleteLu => Ok(Prec::Ilu(Ilu0::factor(a)?)),
        }
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Prec::Identity => z.copy_from_slice(r),
            Prec::Jacobi(d) => {
                for i in 0..r.len() {
                    z[i] = d[i] * r[i];
                }
            }
            Prec::Ilu(f) => f.solve(r, z),
        }
    }
}

/// Incomplete LU factorization on the matrix's own sparsity pattern.
struct Ilu0 {
    mat: CsrMatrix,
    diag_idx: Vec<usize>,
}

impl Ilu0 {
    fn factor(a: &CsrMatrix) -> Result<Self, SolverError> {
        let n = a.n_rows;
        let mut m = a.clone();
        let mut diag_idx = vec![usize::MAX; n];
        for r in 0..n {
            for k in m.row_ptr[r]..m.row_ptr[r + 1] {
                if m.cols[k] as usize == r {
                    diag_idx[r] = k;
                }
            }
            if diag_idx[r] == usize::MAX {
                return Err(SolverError::Breakdown(format!(
                    "row {r} has no diagonal entry"
                )));
            }
        }
        // position of each column within the current row, for O(1) updates
        let mut col_pos = vec![usize::MAX; n];
        for i in 0..n {
            let (lo, hi) = (m.row_ptr[i], m.row_ptr[i + 1]);
            for k in lo..hi {
                col_pos[m.cols[k] as usize] = k;
            }
            for k in lo..hi {
                let j = m.cols[k] as usize;
                if j >= i {
                    break;
                }
                let pivot = m.vals[diag_idx[j]];
                if pivot.abs() < 1e-300 {
                    return Err(SolverError::Breakdown(format!("zero pivot in row {j}")));
                }
                let lij = m.vals[k] / pivot;
                m.vals[k] = lij;
                for kk in (diag_idx[j] + 1)..m.row_ptr[j + 1] {
                    let jj = m.cols[kk] as usize;
                    let pos = col_pos[jj];
                    if pos != usize::MAX && pos >= lo && pos < hi {
                        m.vals[pos] -= lij * m.vals[kk];
                    }
                }
            }
            for k in lo..hi {
                col_pos[m.cols[k] as usize] = usize::MAX;
            }
        }
        Ok(Ilu0 { mat: m, diag_idx })
    }

    fn solve(&self, r: &[f64], z: &mut [f64]) {
        let n = self.mat.n_rows;
        // forward: L z = r with unit diagonal
        for i in 0..n {
            let mut acc = r[i];
            for k in self.mat.row_ptr[i]..self.diag_idx[i] {
                acc -= self.mat.vals[k] * z[self.mat.cols[k] as usize];
            }
            z[i] = acc;
        }
        // backward: U z = z
        for i in (0..n).rev() {
            let mut acc = z[i];
            for k in (self.diag_idx[i] + 1)..self.mat.row_ptr[i + 1] {
                acc -= self.mat.vals[k] * z[self.mat.cols[k] as usize];
            }
            z[i] = acc / self.mat.vals[self.diag_idx[i]];
        }
    }
}

/// Solve `A x = b`. `x0` seeds the iteration when given (ignored by the
/// dense path).
pub fn solve(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveStats), SolverError> {
    if a.n_rows != b.len() || a.n_rows != a.n_cols {
        return Err(SolverError::ShapeMismatch);
    }
    let b_norm = norm(b);
    let target = (cfg.rel_tol * b_norm).max(cfg.abs_tol);
    if b_norm == 0.0 {
        return Ok((vec![0.0; b.len()], SolveStats { iters: 0, residual: 0.0 }));
    }
    match cfg.method {
        Method::Direct => solve_direct(a, b, cfg),
        Method::ConjugateGradient => cg(a, b, x0, cfg, target),
        Method::StabilizedBiCg => bicgstab(a, b, x0, cfg, target),
        Method::Gmres => gmres(a, b, x0, cfg, target),
    }
}

fn true_residual(a: &CsrMatrix, b: &[f64], x: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let mut acc = 0.0;
    for i in 0..b.len() {
        let d = b[i] - ax[i];
        acc += d * d;
    }
    acc.sqrt()
}

fn solve_direct(
    a: &CsrMatrix,
    b: &[f64],
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveStats), SolverError> {
    let n = a.n_rows;
    if n > cfg.direct_limit {
        return Err(SolverError::TooLargeForDirect {
            n,
            limit: cfg.direct_limit,
        });
    }
    let dense = a.to_dense();
    let lu = dense.lu();
    let rhs = nalgebra::DVector::from_column_slice(b);
    let x = lu
        .solve(&rhs)
        .ok_or_else(|| SolverError::Breakdown("singular matrix in dense solve".into()))?;
    let x: Vec<f64> = x.iter().copied().collect();
    let res = true_residual(a, b, &x);
    Ok((x, SolveStats { iters: 1, residual: res }))
}

fn cg(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    cfg: &SolverConfig,
    target: f64,
) -> Result<(Vec<f64>, SolveStats), SolverError> {
    let n = b.len();
    let prec = Prec::build(a, cfg.preconditioner)?;
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = b.to_vec();
    let ax = a.matvec(&x);
    axpy(&mut r, -1.0, &ax);
    let mut z = vec![0.0; n];
    prec.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut iters = 0;
    let mut ap = vec![0.0; n];
    while iters < cfg.max_iter {
        if norm(&r) <= target {
            let res = true_residual(a, b, &x);
            if res <= target {
                return Ok((x, SolveStats { iters, residual: res }));
            }
            // rebuild the recurrence from the true residual and continue
            r = b.to_vec();
            let ax = a.matvec(&x);
            axpy(&mut r, -1.0, &ax);
            prec.apply(&r, &mut z);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
        }
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(SolverError::Breakdown(
                "non-positive curvature in CG (matrix not SPD?)".into(),
            ));
        }
        let alpha = rz / pap;
        axpy(&mut x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        prec.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        iters += 1;
    }
    let res = true_residual(a, b, &x);
    if res <= target {
        return Ok((x, SolveStats { iters, residual: res }));
    }
    Err(SolverError::NoConvergence {
        iters,
        residual: res,
        best: x,
    })
}

fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    cfg: &SolverConfig,
    target: f64,
) -> Result<(Vec<f64>, SolveStats), SolverError> {
    let n = b.len();
    let prec = Prec::build(a, cfg.preconditioner)?;
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = b.to_vec();
    let ax = a.matvec(&x);
    axpy(&mut r, -1.0, &ax);
    let r_hat = r.clone();
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ph = vec![0.0; n];
    let mut sh = vec![0.0; n];
    let mut iters = 0;
    while iters < cfg.max_iter {
        if norm(&r) <= target {
            let res = true_residual(a, b, &x);
            if res <= target {
                return Ok((x, SolveStats { iters, residual: res }));
            }
        }
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < 1e-300 {
            return Err(SolverError::Breakdown("rho breakdown in BiCGStab".into()));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        prec.apply(&p, &mut ph);
        a.matvec_into(&ph, &mut v);
        let denom = dot(&r_hat, &v);
        if denom.abs() < 1e-300 {
            return Err(SolverError::Breakdown("alpha breakdown in BiCGStab".into()));
        }
        alpha = rho / denom;
        let mut s = r.clone();
        axpy(&mut s, -alpha, &v);
        if norm(&s) <= target {
            axpy(&mut x, alpha, &ph);
            let res = true_residual(a, b, &x);
            if res <= target {
                return Ok((x, SolveStats { iters: iters + 1, residual: res }));
            }
            r = s;
            iters += 1;
            continue;
        }
        prec.apply(&s, &mut sh);
        let t = a.matvec(&sh);
        let tt = dot(&t, &t);
        if tt < 1e-300 {
            return Err(SolverError::Breakdown("omega breakdown in BiCGStab".into()));
        }
        omega = dot(&t, &s) / tt;
        axpy(&mut x, alpha, &ph);
        axpy(&mut x, omega, &sh);
        r = s;
        axpy(&mut r, -omega, &t);
        iters += 1;
    }
    let res = true_residual(a, b, &x);
    if res <= target {
        return Ok((x, SolveStats { iters, residual: res }));
    }
    Err(SolverError::NoConvergence {
        iters,
        residual: res,
        best: x,
    })
}

fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    cfg: &SolverConfig,
    target: f64,
) -> Result<(Vec<f64>, SolveStats), SolverError> {
    let n = b.len();
    let m = cfg.restart.max(1);
    let prec = Prec::build(a, cfg.preconditioner)?;
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut total_iters = 0;

    let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut hess = vec![vec![0.0f64; m]; m + 1]; // hess[i][j]
    let mut tmp = vec![0.0; n];

    'outer: while total_iters < cfg.max_iter {
        let mut r = b.to_vec();
        let ax = a.matvec(&x);
        axpy(&mut r, -1.0, &ax);
        let beta = norm(&r);
        if beta <= target {
            break;
        }
        v.clear();
        let mut v0 = r;
        for vi in v0.iter_mut() {
            *vi /= beta;
        }
        v.push(v0);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut j_used = 0;

        for j in 0..m {
            if total_iters >= cfg.max_iter {
                break;
            }
            prec.apply(&v[j], &mut tmp);
            let mut w = a.matvec(&tmp);
            // modified Gram-Schmidt
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(&w, vi);
                hess[i][j] = hij;
                axpy(&mut w, -hij, vi);
            }
            let wn = norm(&w);
            hess[j + 1][j] = wn;
            // apply previous Givens rotations to the new column
            for i in 0..j {
                let t = cs[i] * hess[i][j] + sn[i] * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            let denom = (hess[j][j] * hess[j][j] + wn * wn).sqrt();
            if denom < 1e-300 {
                return Err(SolverError::Breakdown("GMRES rotation breakdown".into()));
            }
            cs[j] = hess[j][j] / denom;
            sn[j] = wn / denom;
            hess[j][j] = denom;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            total_iters += 1;
            j_used = j + 1;
            let happy = wn < 1e-300;
            if !happy {
                for wi in w.iter_mut() {
                    *wi /= wn;
                }
                v.push(w);
            }
            if g[j + 1].abs() <= target || happy {
                break;
            }
        }

        // back substitution for y, then x += M^-1 (V y)
        let k = j_used;
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for jj in (i + 1)..k {
                acc -= hess[i][jj] * y[jj];
            }
            y[i] = acc / hess[i][i];
        }
        let mut update = vec![0.0; n];
        for (jj, yj) in y.iter().enumerate() {
            axpy(&mut update, *yj, &v[jj]);
        }
        prec.apply(&update, &mut tmp);
        axpy(&mut x, 1.0, &tmp);

        if k < m {
            // inner loop hit the tolerance (or stagnated); verify outside
            let res = true_residual(a, b, &x);
            if res <= target {
                break 'outer;
            }
        }
    }

    let res = true_residual(a, b, &x);
    if res <= target {
        Ok((
            x,
            SolveStats {
                iters: total_iters,
                residual: res,
            },
        ))
    } else {
        Err(SolverError::NoConvergence {
            iters: total_iters,
            residual: res,
            best: x,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*seed >> 11) as f64 / (1u64 << 53) as f64
    }

    /// banded diagonally dominant test matrix, optionally asymmetric
    fn test_matrix(n: usize, asym: f64, seed: u64) -> CsrMatrix {
        let band = 3i64;
        let mut rows = Vec::with_capacity(n);
        for i in 0..n as i64 {
            let mut r = Vec::new();
            for j in (i - band).max(0)..=(i + band).min(n as i64 - 1) {
                r.push(j as u32);
            }
            rows.push(r);
        }
        let mut m = CsrMatrix::from_pattern(n, n, rows);
        let mut s = seed;
        for i in 0..n {
            let mut off_sum = 0.0;
            for j in (i as i64 - band).max(0)..=(i as i64 + band).min(n as i64 - 1) {
                let j = j as usize;
                if j == i {
                    continue;
                }
                let v = lcg(&mut s) - 0.5 + if j > i { asym * lcg(&mut s) } else { 0.0 };
                m.add(i, j as u32, v);
                off_sum += v.abs();
            }
            m.add(i, i as u32, off_sum + 1.0 + lcg(&mut s));
        }
        m
    }

    fn symmetrize(m: &CsrMatrix) -> CsrMatrix {
        let mut out = m.clone();
        for r in 0..m.n_rows {
            for k in m.row_ptr[r]..m.row_ptr[r + 1] {
                let c = m.cols[k] as usize;
                let v = 0.5 * (m.vals[k] + m.get(c, r as u32));
                out.vals[k] = v;
            }
        }
        out
    }

    #[test]
    fn cg_matches_dense_oracle() {
        let a = symmetrize(&test_matrix(200, 0.0, 7));
        let b: Vec<f64> = (0..200).map(|i| (i as f64 * 0.37).sin()).collect();
        let (x, stats) = solve(&a, &b, None, &SolverConfig::cg()).unwrap();
        let (xd, _) = solve(&a, &b, None, &SolverConfig::direct()).unwrap();
        let diff: f64 = x.iter().zip(&xd).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        let scale: f64 = xd.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(diff <= 1e-9 * scale, "diff {diff}");
        assert!(stats.residual <= 1e-10 * (b.iter().map(|v| v * v).sum::<f64>()).sqrt());
    }

    #[test]
    fn gmres_and_bicgstab_match_dense_oracle_on_nonsymmetric() {
        let a = test_matrix(300, 0.8, 11);
        let b: Vec<f64> = (0..300).map(|i| ((i * i) as f64 * 0.01).cos()).collect();
        let (xd, _) = solve(&a, &b, None, &SolverConfig::direct()).unwrap();
        let scale: f64 = xd.iter().map(|v| v * v).sum::<f64>().sqrt();
        for method in [Method::Gmres, Method::StabilizedBiCg] {
            for precond in [
                Preconditioner::None,
                Preconditioner::Jacobi,
                Preconditioner::IncompleteLu,
            ] {
                let cfg = SolverConfig {
                    method,
                    preconditioner: precond,
                    ..SolverConfig::gmres()
                };
                let (x, _) = solve(&a, &b, None, &cfg)
                    .unwrap_or_else(|e| panic!("{method:?}/{precond:?}: {e}"));
                let diff: f64 = x
                    .iter()
                    .zip(&xd)
                    .map(|(p, q)| (p - q) * (p - q))
                    .sum::<f64>()
                    .sqrt();
                assert!(diff <= 1e-8 * scale, "{method:?}/{precond:?} diff {diff}");
            }
        }
    }

    #[test]
    fn zero_rhs_returns_zero_without_iterating() {
        let a = symmetrize(&test_matrix(50, 0.0, 3));
        let b = vec![0.0; 50];
        let (x, stats) = solve(&a, &b, None, &SolverConfig::cg()).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
        assert_eq!(stats.iters, 0);
    }

    #[test]
    fn no_convergence_carries_best_iterate() {
        let a = symmetrize(&test_matrix(200, 0.0, 5));
        let b = vec![1.0; 200];
        let cfg = SolverConfig {
            max_iter: 2,
            ..SolverConfig::cg()
        };
        match solve(&a, &b, None, &cfg) {
            Err(SolverError::NoConvergence { best, residual, .. }) => {
                assert_eq!(best.len(), 200);
                assert!(residual.is_finite());
            }
            other => panic!("expected NoConvergence, got {:?}", other.map(|(_, s)| s)),
        }
    }

    #[test]
    fn warm_start_reduces_iterations() {
        let a = symmetrize(&test_matrix(400, 0.0, 9));
        let b: Vec<f64> = (0..400).map(|i| (i as f64).sqrt()).collect();
        let (x, cold) = solve(&a, &b, None, &SolverConfig::cg()).unwrap();
        let (_, warm) = solve(&a, &b, Some(&x), &SolverConfig::cg()).unwrap();
        assert!(warm.iters <= cold.iters / 2, "warm {} cold {}", warm.iters, cold.iters);
    }

    #[test]
    fn direct_refuses_oversized_systems() {
        let a = symmetrize(&test_matrix(30, 0.0, 1));
        let b = vec![1.0; 30];
        let cfg = SolverConfig {
            direct_limit: 10,
            ..SolverConfig::direct()
        };
        assert!(matches!(
            solve(&a, &b, None, &cfg),
            Err(SolverError::TooLargeForDirect { .. })
        ));
    }

    #[test]
    fn tiny_system_has_the_known_answer() {
        // [[2, 1], [1, 2]] x = (3, 3) has x = (1, 1)
        let mut a = CsrMatrix::from_pattern(2, 2, vec![vec![0, 1], vec![0, 1]]);
        a.add(0, 0, 2.0);
        a.add(0, 1, 1.0);
        a.add(1, 0, 1.0);
        a.add(1, 1, 2.0);
        let b = [3.0, 3.0];
        for cfg in [SolverConfig::cg(), SolverConfig::gmres(), SolverConfig::direct()] {
            let (x, _) = solve(&a, &b, None, &cfg).unwrap();
            assert!((x[0] - 1.0).abs() < 1e-9 && (x[1] - 1.0).abs() < 1e-9, "{x:?}");
        }
    }
}
