//! Coefficient fields: evaluation rules mapping a point of the closed unit
//! box to a scalar or a symmetric matrix.
//!
//! Three rules are supported: constants, polynomials in the coordinates and
//! nodal samples with multilinear interpolation. All rules are deterministic
//! and total on the closed box.

use crate::error::{Error, Result};

/// A polynomial in `x1..xn`, stored as a normalized sum of monomials.
///
/// Monomials are kept sorted by exponent tuple so that two polynomials built
/// from different expression trees compare equal after normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    nvars: usize,
    /// (coefficient, exponents), sorted by exponents, no zero coefficients.
    terms: Vec<(f64, Vec<u32>)>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: Vec::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Poly::zero(nvars);
        p.terms.push((c, vec![0; nvars]));
        p.normalize();
        p
    }

    /// The coordinate monomial `x{i+1}` (0-based `i`).
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable index out of range");
        let mut e = vec![0u32; nvars];
        e[i] = 1;
        Poly { nvars, terms: vec![(1.0, e)] }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[(f64, Vec<u32>)] {
        &self.terms
    }

    fn normalize(&mut self) {
        self.terms.sort_by(|a, b| a.1.cmp(&b.1));
        let mut out: Vec<(f64, Vec<u32>)> = Vec::with_capacity(self.terms.len());
        for (c, e) in self.terms.drain(..) {
            if let Some(last) = out.last_mut() {
                if last.1 == e {
                    last.0 += c;
                    continue;
                }
            }
            out.push((c, e));
        }
        out.retain(|(c, _)| *c != 0.0);
        self.terms = out;
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut p = self.clone();
        p.terms.extend(other.terms.iter().cloned());
        p.normalize();
        p
    }

    pub fn neg(&self) -> Poly {
        let mut p = self.clone();
        for t in &mut p.terms {
            t.0 = -t.0;
        }
        p
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.nvars, other.nvars);
        let mut p = Poly::zero(self.nvars);
        for (ca, ea) in &self.terms {
            for (cb, eb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                p.terms.push((ca * cb, e));
            }
        }
        p.normalize();
        p
    }

    pub fn powi(&self, k: u32) -> Poly {
        let mut p = Poly::constant(self.nvars, 1.0);
        for _ in 0..k {
            p = p.mul(self);
        }
        p
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (c, e) in &self.terms {
            let mut t = *c;
            for (xi, &ei) in x.iter().zip(e) {
                for _ in 0..ei {
                    t *= xi;
                }
            }
            s += t;
        }
        s
    }

    /// Partial derivative with respect to variable `i`.
    pub fn derivative(&self, i: usize) -> Poly {
        let mut p = Poly::zero(self.nvars);
        for (c, e) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            p.terms.push((c * e[i] as f64, e2));
        }
        p.normalize();
        p
    }

    pub fn laplacian(&self) -> Poly {
        let mut p = Poly::zero(self.nvars);
        for i in 0..self.nvars {
            p = p.add(&self.derivative(i).derivative(i));
        }
        p
    }
}

/// Nodal samples on a uniform grid over the unit box, evaluated by
/// multilinear interpolation. Dimension 3 only.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    /// Nodes per axis.
    pub m: usize,
    /// Row-major values, index `i + m*(j + m*k)`.
    pub values: Vec<f64>,
    /// Source path the samples were read from, kept for serialization.
    pub source: String,
}

impl SampleGrid {
    pub fn new(m: usize, values: Vec<f64>, source: String) -> Result<Self> {
        if m < 2 {
            return Err(Error::Config("sample grid needs at least 2 nodes per axis".into()));
        }
        if values.len() != m * m * m {
            return Err(Error::Config(format!(
                "sample grid expects {} values, got {}",
                m * m * m,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sample grid contains non-finite values".into()));
        }
        Ok(SampleGrid { m, values, source })
    }

    fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[i + self.m * (j + self.m * k)]
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let h = 1.0 / (self.m - 1) as f64;
        let mut idx = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for d in 0..3 {
            let t = (x[d].clamp(0.0, 1.0)) / h;
            let i = (t.floor() as usize).min(self.m - 2);
            idx[d] = i;
            frac[d] = t - i as f64;
        }
        let (i, j, k) = (idx[0], idx[1], idx[2]);
        let (fx, fy, fz) = (frac[0], frac[1], frac[2]);
        let mut s = 0.0;
        for dz in 0..2 {
            for dy in 0..2 {
                for dx in 0..2 {
                    let w = (if dx == 0 { 1.0 - fx } else { fx })
                        * (if dy == 0 { 1.0 - fy } else { fy })
                        * (if dz == 0 { 1.0 - fz } else { fz });
                    s += w * self.at(i + dx, j + dy, k + dz);
                }
            }
        }
        s
    }

    /// Second-difference Laplacian of the sample data at the node nearest to `x`.
    fn laplacian(&self, x: &[f64]) -> f64 {
        let h = 1.0 / (self.m - 1) as f64;
        let near = |t: f64| ((t / h).round() as usize).clamp(1, self.m - 2);
        let (i, j, k) = (near(x[0]), near(x[1]), near(x[2]));
        let c = self.at(i, j, k);
        let s = self.at(i + 1, j, k) + self.at(i - 1, j, k) + self.at(i, j + 1, k)
            + self.at(i, j - 1, k)
            + self.at(i, j, k + 1)
            + self.at(i, j, k - 1);
        (s - 6.0 * c) / (h * h)
    }
}

/// Scalar coefficient field: carrier for volume sources, exchange
/// coefficients and target fields.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientField {
    Const(f64),
    Poly(Poly),
    Samples(SampleGrid),
}

impl CoefficientField {
    pub fn constant(c: f64) -> Self {
        CoefficientField::Const(c)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            CoefficientField::Const(c) => *c,
            CoefficientField::Poly(p) => p.eval(x),
            CoefficientField::Samples(s) => s.eval(x),
        }
    }

    /// Laplacian of the field at `x`: exact for constants and polynomials,
    /// second differences on the sample lattice otherwise.
    pub fn laplacian(&self, x: &[f64]) -> f64 {
        match self {
            CoefficientField::Const(_) => 0.0,
            CoefficientField::Poly(p) => p.laplacian().eval(x),
            CoefficientField::Samples(s) => s.laplacian(x),
        }
    }
}

/// Symmetric n-by-n matrix field, stored entry-wise (upper triangle) so each
/// entry can follow any scalar rule. Symmetry holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    n: usize,
    /// Upper triangle, row-major: (0,0),(0,1),..,(0,n-1),(1,1),..
    entries: Vec<CoefficientField>,
}

impl MatrixField {
    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        let mut entries = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                entries.push(CoefficientField::constant(if i == j { c } else { 0.0 }));
            }
        }
        MatrixField { n, entries }
    }

    pub fn diagonal(diag: Vec<CoefficientField>) -> Self {
        let n = diag.len();
        let mut entries = Vec::with_capacity(n * (n + 1) / 2);
        let mut it = diag.into_iter();
        for i in 0..n {
            for j in i..n {
                if i == j {
                    entries.push(it.next().unwrap());
                } else {
                    entries.push(CoefficientField::constant(0.0));
                }
            }
        }
        MatrixField { n, entries }
    }

    /// Build from the upper triangle in row-major order.
    pub fn from_upper(n: usize, entries: Vec<CoefficientField>) -> Result<Self> {
        if entries.len() != n * (n + 1) / 2 {
            return Err(Error::Config(format!(
                "symmetric {n}x{n} matrix needs {} entries, got {}",
                n * (n + 1) / 2,
                entries.len()
            )));
        }
        Ok(MatrixField { n, entries })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn tri_index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        // offset of row i in the packed upper triangle
        i * self.n - i * (i + 1) / 2 + j
    }

    pub fn entry(&self, i: usize, j: usize) -> &CoefficientField {
        &self.entries[self.tri_index(i, j)]
    }

    pub fn eval_entry(&self, i: usize, j: usize, x: &[f64]) -> f64 {
        self.entry(i, j).eval(x)
    }

    pub fn trace(&self, x: &[f64]) -> f64 {
        (0..self.n).map(|i| self.eval_entry(i, i, x)).sum()
    }

    /// True when every off-diagonal entry is the constant zero.
    pub fn is_diagonal(&self) -> bool {
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.entry(i, j) != &CoefficientField::Const(0.0) {
                    return false;
                }
            }
        }
        true
    }

    /// Positive definiteness at a point, via leading principal minors.
    pub fn is_positive_definite_at(&self, x: &[f64]) -> bool {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = self.eval_entry(i, j, x);
            }
        }
        // Cholesky without pivoting succeeds iff the matrix is SPD.
        for k in 0..n {
            let mut d = a[k * n + k];
            for p in 0..k {
                d -= a[k * n + p] * a[k * n + p];
            }
            if d <= 0.0 || !d.is_finite() {
                return false;
            }
            let d = d.sqrt();
            a[k * n + k] = d;
            for i in (k + 1)..n {
                let mut s = a[i * n + k];
                for p in 0..k {
                    s -= a[i * n + p] * a[k * n + p];
                }
                a[i * n + k] = s / d;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn poly_arithmetic_and_eval() {
        let x1 = Poly::var(3, 0);
        let x3 = Poly::var(3, 2);
        // p = (1 + x1)^2 - x3
        let p = Poly::constant(3, 1.0).add(&x1).powi(2).sub(&x3);
        assert_relative_eq!(p.eval(&[2.0, 5.0, 0.5]), 9.0 - 0.5);
        // normalization: x1 + x1 == 2*x1 built differently
        let a = x1.add(&x1);
        let b = Poly::constant(3, 2.0).mul(&x1);
        assert_eq!(a, b);
    }

    #[test]
    fn poly_laplacian() {
        // u = x1^2 x2 + x3^3 -> lap = 2 x2 + 6 x3
        let x1 = Poly::var(3, 0);
        let x2 = Poly::var(3, 1);
        let x3 = Poly::var(3, 2);
        let u = x1.powi(2).mul(&x2).add(&x3.powi(3));
        let l = u.laplacian();
        assert_relative_eq!(l.eval(&[0.3, 0.7, 0.2]), 2.0 * 0.7 + 6.0 * 0.2, epsilon = 1e-14);
    }

    #[test]
    fn samples_interpolate_linear_exactly() {
        // A linear function is reproduced exactly by multilinear interpolation.
        let m = 5;
        let h = 1.0 / (m - 1) as f64;
        let lin = |x: f64, y: f64, z: f64| 1.0 + 2.0 * x - 0.5 * y + 3.0 * z;
        let mut values = vec![0.0; m * m * m];
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    values[i + m * (j + m * k)] = lin(i as f64 * h, j as f64 * h, k as f64 * h);
                }
            }
        }
        let s = SampleGrid::new(m, values, String::new()).unwrap();
        let f = CoefficientField::Samples(s);
        for &p in &[[0.13, 0.77, 0.5], [0.0, 1.0, 0.33], [0.999, 0.001, 0.5]] {
            assert_relative_eq!(f.eval(&p), lin(p[0], p[1], p[2]), epsilon = 1e-13);
        }
    }

    #[test]
    fn matrix_field_symmetry_and_trace() {
        let b = MatrixField::from_upper(
            3,
            vec![
                CoefficientField::constant(2.0),
                CoefficientField::constant(0.5),
                CoefficientField::constant(0.0),
                CoefficientField::constant(3.0),
                CoefficientField::constant(0.1),
                CoefficientField::constant(1.0),
            ],
        )
        .unwrap();
        let x = [0.2, 0.4, 0.6];
        assert_eq!(b.eval_entry(1, 0, &x), b.eval_entry(0, 1, &x));
        assert_relative_eq!(b.trace(&x), 6.0);
        assert!(b.is_positive_definite_at(&x));
        assert!(!b.is_diagonal());
        assert!(MatrixField::identity(3).is_diagonal());
        let bad = MatrixField::scaled_identity(3, -1.0);
        assert!(!bad.is_positive_definite_at(&x));
    }
}
