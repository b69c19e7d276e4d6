//! Structured-grid second-order finite differences on the unit box.
//!
//! The grid has `m` nodes per axis with spacing `h = 1/(m-1)`. Operators are
//! assembled in flux (control-volume) form with trapezoid weights, which is
//! algebraically the ghost-node second-order discretization with rows scaled
//! by the node control volumes; the resulting systems are symmetric positive
//! definite. Quadrature uses the same trapezoid weights, so constants
//! integrate exactly.

pub mod assemble;
pub mod solve;

use crate::error::{Error, Result};
use crate::model::{LateralBc, MatrixField};

pub use assemble::{
    add_gamma0_load, assemble_poisson, volume_load, BcSpec, BottomBc, LinearSystem, SolverParams,
};
pub use solve::{pcg, Csr, Precond, SolveStats};

/// Uniform node-centered grid over the closed unit box, n = 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    /// Nodes per axis.
    pub m: usize,
    /// Spacing, `h (m-1) = 1` exactly.
    pub h: f64,
}

impl Grid {
    pub fn new(m: usize) -> Result<Self> {
        if m < 4 {
            return Err(Error::Config(format!("grid needs at least 4 nodes per axis, got {m}")));
        }
        Ok(Grid { m, h: 1.0 / (m - 1) as f64 })
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.m * self.m * self.m
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.m * (j + self.m * k)
    }

    #[inline]
    pub fn ijk(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.m;
        let j = (idx / self.m) % self.m;
        let k = idx / (self.m * self.m);
        (i, j, k)
    }

    #[inline]
    pub fn coords(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [i as f64 * self.h, j as f64 * self.h, k as f64 * self.h]
    }

    /// Trapezoid weight along one axis: half at the ends.
    #[inline]
    fn wt(&self, i: usize) -> f64 {
        if i == 0 || i == self.m - 1 {
            0.5
        } else {
            1.0
        }
    }

    /// Control volume of a node.
    #[inline]
    pub fn volume_weight(&self, i: usize, j: usize, k: usize) -> f64 {
        self.h * self.h * self.h * self.wt(i) * self.wt(j) * self.wt(k)
    }

    /// Surface control area of a bottom-face node.
    #[inline]
    pub fn surface_weight(&self, i: usize, j: usize) -> f64 {
        self.h * self.h * self.wt(i) * self.wt(j)
    }

    /// True when the node carries a Dirichlet value under the given lateral
    /// boundary condition: the top face always, the lateral walls when they
    /// are Dirichlet. Bottom-face edge and corner nodes then fall on the
    /// Dirichlet side.
    #[inline]
    pub fn is_dirichlet(&self, i: usize, j: usize, k: usize, lateral: LateralBc) -> bool {
        if k == self.m - 1 {
            return true;
        }
        lateral == LateralBc::Dirichlet
            && (i == 0 || i == self.m - 1 || j == 0 || j == self.m - 1)
    }

    /// Controlled-face nodes that are unknowns (bottom face, not Dirichlet).
    pub fn gamma0_dofs(&self, lateral: LateralBc) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in 0..self.m {
            for i in 0..self.m {
                if !self.is_dirichlet(i, j, 0, lateral) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// One value per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub m: usize,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        ScalarField { m: grid.m, data: vec![0.0; grid.node_count()] }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64; 3]) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.node_count());
        for k in 0..grid.m {
            for j in 0..grid.m {
                for i in 0..grid.m {
                    data.push(f(&grid.coords(i, j, k)));
                }
            }
        }
        ScalarField { m: grid.m, data }
    }

    #[inline]
    pub fn at(&self, grid: &Grid, i: usize, j: usize, k: usize) -> f64 {
        self.data[grid.idx(i, j, k)]
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.m != grid.m || self.data.len() != grid.node_count() {
            return Err(Error::GridMismatch(format!(
                "field on {} nodes per axis used with grid of {}",
                self.m, grid.m
            )));
        }
        Ok(())
    }
}

/// One value per node of the controlled face `x3 = 0` (full face lattice,
/// including the edge nodes that the Dirichlet side owns).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryField {
    pub m: usize,
    pub data: Vec<f64>,
}

impl BoundaryField {
    pub fn zeros(grid: &Grid) -> Self {
        BoundaryField { m: grid.m, data: vec![0.0; grid.m * grid.m] }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        BoundaryField { m: grid.m, data: vec![c; grid.m * grid.m] }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.m * grid.m);
        for j in 0..grid.m {
            for i in 0..grid.m {
                data.push(f(i as f64 * grid.h, j as f64 * grid.h));
            }
        }
        BoundaryField { m: grid.m, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i + self.m * j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i + self.m * j]
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.m != grid.m {
            return Err(Error::GridMismatch(format!(
                "boundary field on {} nodes per axis used with grid of {}",
                self.m, grid.m
            )));
        }
        Ok(())
    }
}

/// Composite trapezoid over the box: `sum V_p f_p`. Exact for constants.
pub fn integrate_volume(grid: &Grid, f: &ScalarField) -> f64 {
    let mut s = 0.0;
    for k in 0..grid.m {
        for j in 0..grid.m {
            for i in 0..grid.m {
                s += grid.volume_weight(i, j, k) * f.at(grid, i, j, k);
            }
        }
    }
    s
}

/// Trapezoid of a product of two nodal fields.
pub fn integrate_volume_product(grid: &Grid, f: &ScalarField, g: &ScalarField) -> f64 {
    let mut s = 0.0;
    for k in 0..grid.m {
        for j in 0..grid.m {
            for i in 0..grid.m {
                s += grid.volume_weight(i, j, k) * f.at(grid, i, j, k) * g.at(grid, i, j, k);
            }
        }
    }
    s
}

/// Composite trapezoid over the controlled face: `sum S_p f_p`.
pub fn integrate_gamma0(grid: &Grid, f: &BoundaryField) -> f64 {
    let mut s = 0.0;
    for j in 0..grid.m {
        for i in 0..grid.m {
            s += grid.surface_weight(i, j) * f.at(i, j);
        }
    }
    s
}

/// Second-order nodal derivative along `axis`: central differences inside,
/// one-sided three-point stencils on the faces.
pub fn nodal_derivative(grid: &Grid, f: &ScalarField, axis: usize) -> Vec<f64> {
    let m = grid.m;
    let stride = match axis {
        0 => 1,
        1 => m,
        2 => m * m,
        _ => panic!("axis out of range"),
    };
    let inv2h = 1.0 / (2.0 * grid.h);
    let mut out = vec![0.0; grid.node_count()];
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                let pos = [i, j, k][axis];
                let p = grid.idx(i, j, k);
                out[p] = if pos == 0 {
                    (-3.0 * f.data[p] + 4.0 * f.data[p + stride] - f.data[p + 2 * stride]) * inv2h
                } else if pos == m - 1 {
                    (3.0 * f.data[p] - 4.0 * f.data[p - stride] + f.data[p - 2 * stride]) * inv2h
                } else {
                    (f.data[p + stride] - f.data[p - stride]) * inv2h
                };
            }
        }
    }
    out
}

/// Transpose of [`nodal_derivative`]: scatters `t` through the same stencils,
/// accumulating into `out`.
fn nodal_derivative_transpose_add(grid: &Grid, t: &[f64], axis: usize, out: &mut [f64]) {
    let m = grid.m;
    let stride = match axis {
        0 => 1,
        1 => m,
        2 => m * m,
        _ => panic!("axis out of range"),
    };
    let inv2h = 1.0 / (2.0 * grid.h);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                let pos = [i, j, k][axis];
                let p = grid.idx(i, j, k);
                let v = t[p] * inv2h;
                if v == 0.0 {
                    continue;
                }
                if pos == 0 {
                    out[p] += -3.0 * v;
                    out[p + stride] += 4.0 * v;
                    out[p + 2 * stride] += -v;
                } else if pos == m - 1 {
                    out[p] += 3.0 * v;
                    out[p - stride] += -4.0 * v;
                    out[p - 2 * stride] += v;
                } else {
                    out[p + stride] += v;
                    out[p - stride] += -v;
                }
            }
        }
    }
}

/// The discrete bilinear form of `div(B grad .)`: edge fluxes weighted by the
/// diagonal entries of `B` at edge midpoints, plus a symmetrized nodal-
/// difference form for the off-diagonal couplings. For `B = I` the operator
/// coincides exactly with the assembled Poisson stiffness (without boundary
/// mass terms).
///
/// `mask`, when given, drops every edge with a masked endpoint and every
/// nodal cross term at a masked node; used to exclude the probe balls from
/// cost quadrature.
pub struct WeightedStiffness<'a> {
    grid: &'a Grid,
    b: &'a MatrixField,
    mask: Option<&'a [bool]>,
}

impl<'a> WeightedStiffness<'a> {
    pub fn new(grid: &'a Grid, b: &'a MatrixField, mask: Option<&'a [bool]>) -> Result<Self> {
        if b.dim() != 3 {
            return Err(Error::Config(format!("grid operators need a 3x3 B, got {0}x{0}", b.dim())));
        }
        if let Some(m) = mask {
            if m.len() != grid.node_count() {
                return Err(Error::GridMismatch("mask length != node count".into()));
            }
        }
        Ok(WeightedStiffness { grid, b, mask })
    }

    #[inline]
    fn masked(&self, p: usize) -> bool {
        match self.mask {
            Some(m) => !m[p],
            None => false,
        }
    }

    /// y = K_B w over all nodes.
    pub fn apply(&self, w: &ScalarField) -> Result<Vec<f64>> {
        w.check_grid(self.grid)?;
        let g = self.grid;
        let m = g.m;
        let mut y = vec![0.0; g.node_count()];
        // Edge part: axis-aligned fluxes with b_dd at edge midpoints.
        for axis in 0..3 {
            let stride = [1, m, m * m][axis];
            let b_entry = self.b.entry(axis, axis);
            let b_const = match b_entry {
                crate::model::CoefficientField::Const(c) => Some(*c),
                _ => None,
            };
            for k in 0..m {
                for j in 0..m {
                    for i in 0..m {
                        if [i, j, k][axis] == m - 1 {
                            continue;
                        }
                        let p = g.idx(i, j, k);
                        let q = p + stride;
                        if self.masked(p) || self.masked(q) {
                            continue;
                        }
                        let mut c = edge_coeff(g, i, j, k, axis);
                        c *= match b_const {
                            Some(v) => v,
                            None => {
                                let mut x = g.coords(i, j, k);
                                x[axis] += 0.5 * g.h;
                                b_entry.eval(&x)
                            }
                        };
                        let d = c * (w.data[p] - w.data[q]);
                        y[p] += d;
                        y[q] -= d;
                    }
                }
            }
        }
        // Cross part, only for genuinely non-diagonal B.
        if !self.b.is_diagonal() {
            let grads: [Vec<f64>; 3] = [
                nodal_derivative(g, w, 0),
                nodal_derivative(g, w, 1),
                nodal_derivative(g, w, 2),
            ];
            let mut t = vec![0.0; g.node_count()];
            for ka in 0..3 {
                for la in 0..3 {
                    if ka == la {
                        continue;
                    }
                    let entry = self.b.entry(ka, la);
                    if entry == &crate::model::CoefficientField::Const(0.0) {
                        continue;
                    }
                    for k in 0..m {
                        for j in 0..m {
                            for i in 0..m {
                                let p = g.idx(i, j, k);
                                t[p] = if self.masked(p) {
                                    0.0
                                } else {
                                    g.volume_weight(i, j, k)
                                        * entry.eval(&g.coords(i, j, k))
                                        * grads[la][p]
                                };
                            }
                        }
                    }
                    nodal_derivative_transpose_add(g, &t, ka, &mut y);
                }
            }
        }
        Ok(y)
    }

    /// The quadratic form `w' K_B w`, a second-order quadrature of
    /// `int B grad w . grad w`.
    pub fn energy(&self, w: &ScalarField) -> Result<f64> {
        let y = self.apply(w)?;
        let mut s = 0.0;
        for i in 0..y.len() {
            s += w.data[i] * y[i];
        }
        Ok(s)
    }
}

/// Flux coefficient of the edge from node (i,j,k) in direction `axis`:
/// transverse trapezoid area divided by h.
#[inline]
pub(crate) fn edge_coeff(g: &Grid, i: usize, j: usize, k: usize, axis: usize) -> f64 {
    let mut area = g.h * g.h;
    for a in 0..3 {
        if a != axis {
            area *= g.wt([i, j, k][a]);
        }
    }
    area / g.h
}

/// `int B grad w . grad w` by the weighted stiffness form (trapezoid-
/// consistent, exact for fields with constant gradient when B is constant
/// along each edge direction).
pub fn weighted_h1_seminorm(grid: &Grid, b: &MatrixField, w: &ScalarField) -> Result<f64> {
    WeightedStiffness::new(grid, b, None)?.energy(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CoefficientField, Poly};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn quadrature_exact_for_constants() {
        let g = Grid::new(17).unwrap();
        let one = ScalarField::from_fn(&g, |_| 1.0);
        assert_relative_eq!(integrate_volume(&g, &one), 1.0, epsilon = 1e-12);
        let bone = BoundaryField::constant(&g, 1.0);
        assert_relative_eq!(integrate_gamma0(&g, &bone), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn h1_seminorm_of_linear_profile_is_exact() {
        let g = Grid::new(16).unwrap();
        let b = MatrixField::identity(3);
        let w = ScalarField::from_fn(&g, |x| x[2]);
        assert_relative_eq!(weighted_h1_seminorm(&g, &b, &w).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn h1_seminorm_against_symbolic_integral() {
        // u = sin(pi x1) sin(pi x2) x3 (1 - x3):
        // int |grad u|^2 = pi^2/60 + 1/12, by direct symbolic integration.
        let exact = PI * PI / 60.0 + 1.0 / 12.0;
        let b = MatrixField::identity(3);
        let mut errs = Vec::new();
        for m in [17usize, 33] {
            let g = Grid::new(m).unwrap();
            let w = ScalarField::from_fn(&g, |x| {
                (PI * x[0]).sin() * (PI * x[1]).sin() * x[2] * (1.0 - x[2])
            });
            let v = weighted_h1_seminorm(&g, &b, &w).unwrap();
            errs.push((v - exact).abs() / exact);
        }
        assert!(errs[1] < 1e-2, "seminorm error too large: {errs:?}");
        assert!(errs[1] < errs[0] / 3.0, "no second-order decay: {errs:?}");
    }

    #[test]
    fn seminorm_linear_in_matrix_scale() {
        let g = Grid::new(12).unwrap();
        let w = ScalarField::from_fn(&g, |x| x[0] * x[0] + 0.3 * x[1] - x[2] * x[0]);
        let e1 = weighted_h1_seminorm(&g, &MatrixField::identity(3), &w).unwrap();
        let e2 = weighted_h1_seminorm(&g, &MatrixField::scaled_identity(3, 2.0), &w).unwrap();
        assert_relative_eq!(e2, 2.0 * e1, max_relative = 1e-13);
    }

    #[test]
    fn stiffness_apply_on_constant_is_zero() {
        let g = Grid::new(9).unwrap();
        let b = MatrixField::identity(3);
        let w = ScalarField::from_fn(&g, |_| 4.2);
        let y = WeightedStiffness::new(&g, &b, None).unwrap().apply(&w).unwrap();
        assert!(y.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn cross_terms_are_symmetric() {
        // w' K v == v' K w for a full symmetric B with polynomial entries.
        let g = Grid::new(8).unwrap();
        let x1 = Poly::var(3, 0);
        let b = MatrixField::from_upper(
            3,
            vec![
                CoefficientField::constant(2.0),
                CoefficientField::Poly(x1.clone()),
                CoefficientField::constant(0.2),
                CoefficientField::constant(3.0),
                CoefficientField::constant(-0.1),
                CoefficientField::constant(2.5),
            ],
        )
        .unwrap();
        let ks = WeightedStiffness::new(&g, &b, None).unwrap();
        let w = ScalarField::from_fn(&g, |x| (x[0] * 3.1).sin() + x[1] * x[2]);
        let v = ScalarField::from_fn(&g, |x| x[0] * x[0] - 0.5 * x[2] + (x[1] * 2.0).cos());
        let kw = ks.apply(&w).unwrap();
        let kv = ks.apply(&v).unwrap();
        let a: f64 = v.data.iter().zip(&kw).map(|(a, b)| a * b).sum();
        let b2: f64 = w.data.iter().zip(&kv).map(|(a, b)| a * b).sum();
        assert_relative_eq!(a, b2, max_relative = 1e-12);
    }

    #[test]
    fn nodal_derivative_exact_for_quadratics() {
        let g = Grid::new(11).unwrap();
        let w = ScalarField::from_fn(&g, |x| x[0] * x[0] + 2.0 * x[1] - x[2] * x[2]);
        let d0 = nodal_derivative(&g, &w, 0);
        let d2 = nodal_derivative(&g, &w, 2);
        for k in 0..g.m {
            for j in 0..g.m {
                for i in 0..g.m {
                    let p = g.idx(i, j, k);
                    let x = g.coords(i, j, k);
                    assert_relative_eq!(d0[p], 2.0 * x[0], epsilon = 1e-11);
                    assert_relative_eq!(d2[p], -2.0 * x[2], epsilon = 1e-11);
                }
            }
        }
    }
}
