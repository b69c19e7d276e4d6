//! Compressed-row sparse matrices and a preconditioned conjugate-gradient
//! solver.
//!
//! Everything here is deterministic: matrix traversal order is fixed and all
//! reductions are sequential, so repeated solves with identical inputs give
//! bit-identical iterates.

use crate::error::{Error, Result};

/// Symmetric sparse matrix in compressed row form with sorted column indices.
#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub vals: Vec<f64>,
}

impl Csr {
    pub fn identity(n: usize) -> Self {
        Csr {
            n,
            row_ptr: (0..=n).collect(),
            cols: (0..n as u32).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// y = A x
    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut s = 0.0;
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[idx] * x[self.cols[idx] as usize];
            }
            y[i] = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.cols[idx] as usize == i {
                    d[i] = self.vals[idx];
                }
            }
        }
        d
    }
}

/// Preconditioner for the CG iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Precond {
    /// Diagonal scaling.
    Jacobi,
    /// Symmetric SOR with relaxation factor `omega` in (0, 2). Sequential
    /// forward/backward sweeps; markedly fewer iterations than Jacobi on the
    /// grid operators assembled here.
    Ssor(f64),
}

/// Relaxation factor that tracked the measured optimum on the assembled grid
/// operators across 17^3 .. 129^3.
pub fn default_ssor_omega(nodes_per_axis: usize) -> f64 {
    let h = 1.0 / (nodes_per_axis.max(2) - 1) as f64;
    2.0 / (1.0 + 6.0 * h)
}

/// Outcome of a CG solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final relative residual |b - Ax| / |b|.
    pub rel_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

struct SsorData<'a> {
    mat: &'a Csr,
    diag: &'a [f64],
    omega: f64,
}

impl SsorData<'_> {
    /// z = M^{-1} r for M = (D/w + L) * (w/(2-w))^{-1}... the standard SSOR
    /// splitting M = 1/(w(2-w)) (D + wL) D^{-1} (D + wU).
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.mat.n;
        let w = self.omega;
        // forward: (D + wL) y = r
        for i in 0..n {
            let mut s = r[i];
            for idx in self.mat.row_ptr[i]..self.mat.row_ptr[i + 1] {
                let j = self.mat.cols[idx] as usize;
                if j >= i {
                    break; // columns sorted
                }
                s -= w * self.mat.vals[idx] * z[j];
            }
            z[i] = s / self.diag[i];
        }
        // backward: (D + wU) z = D y, then scale the whole vector
        for i in (0..n).rev() {
            let mut s = self.diag[i] * z[i];
            for idx in (self.mat.row_ptr[i]..self.mat.row_ptr[i + 1]).rev() {
                let j = self.mat.cols[idx] as usize;
                if j <= i {
                    break;
                }
                s -= w * self.mat.vals[idx] * z[j];
            }
            z[i] = s / self.diag[i];
        }
        let scale = w * (2.0 - w);
        for zi in z.iter_mut() {
            *zi *= scale;
        }
    }
}

/// Preconditioned conjugate gradients for SPD systems.
///
/// Stops when the recurrence residual satisfies |r| <= tol * |b|; the true
/// residual is recomputed for the returned stats. A zero right-hand side
/// returns the zero solution immediately.
pub fn pcg(
    mat: &Csr,
    diag: &[f64],
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    pc: Precond,
) -> Result<(Vec<f64>, SolveStats)> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("solver tolerance must be positive, got {tol}")));
    }
    let n = mat.n;
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], SolveStats { iterations: 0, rel_residual: 0.0 }));
    }
    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    let mut r = vec![0.0; n];
    mat.mul(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z = vec![0.0; n];
    let ssor = match pc {
        Precond::Ssor(w) => {
            if !(w > 0.0 && w < 2.0) {
                return Err(Error::Config(format!("SSOR omega must be in (0,2), got {w}")));
            }
            Some(SsorData { mat, diag, omega: w })
        }
        Precond::Jacobi => None,
    };
    let apply_pc = |r: &[f64], z: &mut [f64]| match &ssor {
        Some(s) => s.apply(r, z),
        None => {
            for i in 0..r.len() {
                z[i] = r[i] / diag[i];
            }
        }
    };
    apply_pc(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let target = tol * b_norm;
    let mut r_norm = dot(&r, &r).sqrt();
    let mut it = 0;
    while r_norm > target {
        if it >= max_iter {
            return Err(Error::NonConvergence {
                op: "pcg",
                iterations: it,
                residual: r_norm / b_norm,
                tol,
            });
        }
        mat.mul(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::Assembly(format!(
                "matrix is not positive definite (p'Ap = {pap:.3e} at iteration {it})"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        r_norm = dot(&r, &r).sqrt();
        if r_norm <= target {
            it += 1;
            break;
        }
        apply_pc(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        it += 1;
    }
    // true residual for the stats
    mat.mul(&x, &mut ap);
    let mut tr = 0.0;
    for i in 0..n {
        let d = b[i] - ap[i];
        tr += d * d;
    }
    Ok((x, SolveStats { iterations: it, rel_residual: tr.sqrt() / b_norm }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system_returns_rhs() {
        let a = Csr::identity(5);
        let d = a.diagonal();
        let b = vec![3.0, -1.0, 0.5, 2.0, 7.0];
        let (x, stats) = pcg(&a, &d, &b, None, 1e-12, 10, Precond::Jacobi).unwrap();
        assert_eq!(stats.iterations, 1);
        for i in 0..5 {
            assert!((x[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let a = Csr::identity(4);
        let d = a.diagonal();
        let (x, stats) = pcg(&a, &d, &[0.0; 4], None, 1e-12, 10, Precond::Jacobi).unwrap();
        assert_eq!(stats.iterations, 0);
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_tolerance_is_a_config_error() {
        let a = Csr::identity(3);
        let d = a.diagonal();
        let err = pcg(&a, &d, &[1.0; 3], None, 0.0, 10, Precond::Jacobi);
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn small_spd_system_both_preconditioners() {
        // 1-D Laplacian with Dirichlet ends, n = 20
        let n = 20;
        let mut row_ptr = vec![0usize];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..n {
            if i > 0 {
                cols.push((i - 1) as u32);
                vals.push(-1.0);
            }
            cols.push(i as u32);
            vals.push(2.0);
            if i + 1 < n {
                cols.push((i + 1) as u32);
                vals.push(-1.0);
            }
            row_ptr.push(cols.len());
        }
        let a = Csr { n, row_ptr, cols, vals };
        let d = a.diagonal();
        let b = vec![1.0; n];
        for pc in [Precond::Jacobi, Precond::Ssor(1.5)] {
            let (x, stats) = pcg(&a, &d, &b, None, 1e-12, 1000, pc).unwrap();
            let mut ax = vec![0.0; n];
            a.mul(&x, &mut ax);
            for i in 0..n {
                assert!((ax[i] - 1.0).abs() < 1e-9, "{pc:?}: residual at {i}");
            }
            assert!(stats.rel_residual <= 1e-10);
        }
    }

    #[test]
    fn non_convergence_reports_residual() {
        let n = 50;
        let mut row_ptr = vec![0usize];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..n {
            if i > 0 {
                cols.push((i - 1) as u32);
                vals.push(-1.0);
            }
            cols.push(i as u32);
            vals.push(2.0);
            if i + 1 < n {
                cols.push((i + 1) as u32);
                vals.push(-1.0);
            }
            row_ptr.push(cols.len());
        }
        let a = Csr { n, row_ptr, cols, vals };
        let d = a.diagonal();
        let err = pcg(&a, &d, &vec![1.0; n], None, 1e-14, 2, Precond::Jacobi);
        match err {
            Err(Error::NonConvergence { iterations, residual, .. }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
