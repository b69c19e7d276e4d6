//! Assembly of the mixed Dirichlet/Neumann/Robin Poisson operator and its
//! right-hand sides.
//!
//! Unknowns are the non-Dirichlet nodes. Rows are written in control-volume
//! form: interior rows reproduce the 7-point Laplacian scaled by `h^3`, a
//! Robin condition on the bottom face adds `sigma_p S_p` to the diagonal and
//! its data enters the load as `g_p S_p`, and Dirichlet neighbors contribute
//! a precomputed lift to the right-hand side. The matrix is symmetric
//! positive definite by construction.

use super::solve::{pcg, Csr, Precond, SolveStats};
use super::{BoundaryField, Grid, ScalarField};
use crate::error::{Error, Result};
use crate::model::{CoefficientField, LateralBc};

/// Boundary condition on the controlled (bottom) face.
#[derive(Debug, Clone, Copy)]
pub enum BottomBc<'a> {
    /// Pure flux data.
    Neumann,
    /// `d_nu u + sigma u = g` with the given nonnegative coefficient field.
    Robin(&'a BoundaryField),
}

/// Boundary-condition layout for one assembly.
#[derive(Debug, Clone, Copy)]
pub struct BcSpec<'a> {
    pub bottom: BottomBc<'a>,
    pub lateral: LateralBc,
    /// Constant Dirichlet value on the top face (lateral Dirichlet walls are
    /// homogeneous).
    pub top_value: f64,
}

impl<'a> BcSpec<'a> {
    pub fn standard(bottom: BottomBc<'a>) -> Self {
        BcSpec { bottom, lateral: LateralBc::Dirichlet, top_value: 0.0 }
    }
}

/// Iterative-solver parameters carried by an assembled system.
#[derive(Debug, Clone, Copy)]
pub struct SolverParams {
    pub tol: f64,
    pub max_iter: usize,
    pub precond: Precond,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams { tol: 1e-10, max_iter: 50_000, precond: Precond::Ssor(1.7) }
    }
}

/// An assembled symmetric system over the free nodes of a grid.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub grid: Grid,
    pub mat: Csr,
    pub diag: Vec<f64>,
    /// node index -> dof index, -1 for Dirichlet nodes.
    pub node_to_dof: Vec<i32>,
    pub dof_to_node: Vec<u32>,
    /// Right-hand-side contribution of the Dirichlet data (already scaled by
    /// the configured top value).
    pub dirichlet_rhs: Vec<f64>,
    pub lateral: LateralBc,
    pub top_value: f64,
    pub params: SolverParams,
}

impl LinearSystem {
    pub fn ndof(&self) -> usize {
        self.dof_to_node.len()
    }

    /// Restrict a full-node vector to the unknowns.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.dof_to_node.iter().map(|&p| full[p as usize]).collect()
    }

    /// Embed a dof vector into a nodal field, filling Dirichlet values.
    pub fn embed(&self, x: &[f64]) -> ScalarField {
        let g = &self.grid;
        let mut f = ScalarField::zeros(g);
        for (d, &p) in self.dof_to_node.iter().enumerate() {
            f.data[p as usize] = x[d];
        }
        if self.top_value != 0.0 {
            let m = g.m;
            for j in 0..m {
                for i in 0..m {
                    f.data[g.idx(i, j, m - 1)] = self.top_value;
                }
            }
        }
        f
    }

    /// PCG solve with the stored parameters.
    pub fn solve(&self, rhs: &[f64], x0: Option<&[f64]>) -> Result<(Vec<f64>, SolveStats)> {
        pcg(&self.mat, &self.diag, rhs, x0, self.params.tol, self.params.max_iter, self.params.precond)
    }

    /// Convenience: solve and embed.
    pub fn solve_field(&self, rhs: &[f64], x0: Option<&[f64]>) -> Result<(ScalarField, SolveStats)> {
        let (x, stats) = self.solve(rhs, x0)?;
        Ok((self.embed(&x), stats))
    }

    /// Values of the unknown field on the bottom-face lattice (Dirichlet
    /// edge nodes read as zero).
    pub fn trace_gamma0(&self, f: &ScalarField) -> BoundaryField {
        let g = &self.grid;
        let mut b = BoundaryField::zeros(g);
        for j in 0..g.m {
            for i in 0..g.m {
                if !g.is_dirichlet(i, j, 0, self.lateral) {
                    *b.at_mut(i, j) = f.at(g, i, j, 0);
                }
            }
        }
        b
    }
}

/// Assembles the operator `-lap` with the given boundary conditions.
pub fn assemble_poisson(grid: &Grid, bc: &BcSpec) -> Result<LinearSystem> {
    let m = grid.m;
    let nn = grid.node_count();
    if let BottomBc::Robin(sigma) = bc.bottom {
        sigma.check_grid(grid)?;
        for j in 0..m {
            for i in 0..m {
                if sigma.at(i, j) < 0.0 {
                    return Err(Error::Assembly(format!(
                        "negative Robin coefficient {} at face node ({i},{j})",
                        sigma.at(i, j)
                    )));
                }
            }
        }
    }

    let mut node_to_dof = vec![-1i32; nn];
    let mut dof_to_node = Vec::new();
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                if !grid.is_dirichlet(i, j, k, bc.lateral) {
                    node_to_dof[grid.idx(i, j, k)] = dof_to_node.len() as i32;
                    dof_to_node.push(grid.idx(i, j, k) as u32);
                }
            }
        }
    }
    let ndof = dof_to_node.len();

    let strides = [1usize, m, m * m];
    let mut row_ptr = Vec::with_capacity(ndof + 1);
    row_ptr.push(0usize);
    let mut cols: Vec<u32> = Vec::with_capacity(ndof * 7);
    let mut vals: Vec<f64> = Vec::with_capacity(ndof * 7);
    let mut diag = vec![0.0; ndof];
    let mut dirichlet_rhs = vec![0.0; ndof];

    for (dof, &pn) in dof_to_node.iter().enumerate() {
        let p = pn as usize;
        let (i, j, k) = grid.ijk(p);
        let mut d = 0.0;
        // neighbor contributions in ascending node order for sorted columns
        let mut entries: [(i64, f64); 6] = [(0, 0.0); 6];
        let mut ne = 0;
        for axis in (0..3).rev() {
            let pos = [i, j, k][axis];
            if pos > 0 {
                let c = {
                    let (mut ii, mut jj, mut kk) = (i, j, k);
                    match axis {
                        0 => ii -= 1,
                        1 => jj -= 1,
                        _ => kk -= 1,
                    }
                    super::edge_coeff(grid, ii, jj, kk, axis)
                };
                d += c;
                entries[ne] = (p as i64 - strides[axis] as i64, -c);
                ne += 1;
            }
        }
        for axis in 0..3 {
            let pos = [i, j, k][axis];
            if pos < m - 1 {
                let c = super::edge_coeff(grid, i, j, k, axis);
                d += c;
                entries[ne] = (p as i64 + strides[axis] as i64, -c);
                ne += 1;
            }
        }
        // Robin mass on the bottom face
        if k == 0 {
            if let BottomBc::Robin(sigma) = bc.bottom {
                d += sigma.at(i, j) * grid.surface_weight(i, j);
            }
        }
        for &(q, c) in entries[..ne].iter() {
            let q = q as usize;
            let qd = node_to_dof[q];
            if qd >= 0 {
                cols.push(qd as u32);
                vals.push(c);
            } else {
                // Dirichlet neighbor: move to the right-hand side.
                let (_, _, kq) = grid.ijk(q);
                let gval = if kq == m - 1 { bc.top_value } else { 0.0 };
                if gval != 0.0 {
                    dirichlet_rhs[dof] -= c * gval;
                }
            }
        }
        cols.push(dof as u32);
        vals.push(d);
        diag[dof] = d;
        // sort the row by column index
        let start = row_ptr[dof];
        let mut row: Vec<(u32, f64)> =
            cols[start..].iter().copied().zip(vals[start..].iter().copied()).collect();
        row.sort_by_key(|e| e.0);
        for (off, (c, v)) in row.into_iter().enumerate() {
            cols[start + off] = c;
            vals[start + off] = v;
        }
        row_ptr.push(cols.len());
    }

    Ok(LinearSystem {
        grid: *grid,
        mat: Csr { n: ndof, row_ptr, cols, vals },
        diag,
        node_to_dof,
        dof_to_node,
        dirichlet_rhs,
        lateral: bc.lateral,
        top_value: bc.top_value,
        params: SolverParams::default(),
    })
}

/// Full-node load vector of a volume source: `b_p = V_p f(x_p)`.
pub fn volume_load(grid: &Grid, f: &CoefficientField) -> Vec<f64> {
    let mut b = vec![0.0; grid.node_count()];
    for k in 0..grid.m {
        for j in 0..grid.m {
            for i in 0..grid.m {
                b[grid.idx(i, j, k)] = grid.volume_weight(i, j, k) * f.eval(&grid.coords(i, j, k));
            }
        }
    }
    b
}

/// Adds the controlled-face load `scale * S_p g_p` to a full-node vector.
pub fn add_gamma0_load(grid: &Grid, b: &mut [f64], g: &BoundaryField, scale: f64) {
    for j in 0..grid.m {
        for i in 0..grid.m {
            b[grid.idx(i, j, 0)] += scale * grid.surface_weight(i, j) * g.at(i, j);
        }
    }
}
