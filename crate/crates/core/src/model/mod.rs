//! Problem definition: configuration, homogenization constants, effective
//! boundary coefficients, the particle lattice and the closed-form cell
//! function.
//!
//! The domain is the unit box in R^n with the controlled face
//! `Gamma_0 = {x_n = 0}` and the Dirichlet part `Gamma_1` (the other five
//! faces). A thin layer of spherical particles of radius
//! `a_eps = C0 * eps^alpha`, `alpha = (n-1)/(n-2)`, sits on the plane
//! `x_n = eps/2`. The critical scaling makes the particle layer survive the
//! limit `eps -> 0` as an extra zeroth-order term on `Gamma_0`.
//!
//! All types here are immutable after construction and all operations are
//! pure functions.

pub mod field;

use crate::error::{Error, Result};
pub use field::{CoefficientField, MatrixField, Poly, SampleGrid};

use std::f64::consts::PI;

/// Surface area of the unit sphere in R^n: `2 pi^(n/2) / Gamma(n/2)`.
///
/// Computed from the exact integer/half-integer Gamma recursion, so n = 3
/// gives 4*pi and n = 4 gives 2*pi^2 to machine precision.
pub fn unit_sphere_area(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    // Gamma(n/2): start from Gamma(1) = 1 or Gamma(1/2) = sqrt(pi).
    let mut g;
    let mut k; // current argument, in halves
    if n % 2 == 0 {
        g = 1.0;
        k = 2; // Gamma(1)
    } else {
        g = PI.sqrt();
        k = 1; // Gamma(1/2)
    }
    while k < n {
        g *= k as f64 / 2.0;
        k += 2;
    }
    Ok(2.0 * PI.powf(n as f64 / 2.0) / g)
}

/// The dimension-dependent constants of the effective boundary condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogConstants {
    pub n: usize,
    pub c0: f64,
    /// Surface area of the unit sphere in R^n.
    pub omega_n: f64,
    /// `(n-2) * C0^(n-2) * omega_n`.
    pub a1: f64,
    /// `A1 / n`.
    pub a2: f64,
    /// `(n-2) / C0`.
    pub cn: f64,
}

/// Builds the homogenization constants for dimension `n >= 3` and radius
/// prefactor `c0 > 0`.
pub fn constants(n: usize, c0: f64) -> Result<HomogConstants> {
    if n < 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    if !(c0 > 0.0) {
        return Err(Error::Config(format!("C0 must be positive, got {c0}")));
    }
    let omega_n = unit_sphere_area(n)?;
    let a1 = (n - 2) as f64 * c0.powi(n as i32 - 2) * omega_n;
    Ok(HomogConstants { n, c0, omega_n, a1, a2: a1 / n as f64, cn: (n - 2) as f64 / c0 })
}

/// Effective Robin coefficient `A1 * a / (a + Cn)` of the limit state
/// problem on `Gamma_0`.
///
/// Strictly increasing in `a` and bounded by `A1`.
pub fn effective_robin(a_val: f64, c: &HomogConstants) -> Result<f64> {
    if !(a_val > 0.0) {
        return Err(Error::Domain(format!(
            "exchange coefficient must satisfy a >= a0 > 0, got {a_val}"
        )));
    }
    Ok(c.a1 * a_val / (a_val + c.cn))
}

/// Coefficient `A2 * trB * a^2 / (a + Cn)^2` coupling the limit adjoint to
/// the limit state on `Gamma_0` (and weighting the boundary term of the
/// limit cost).
pub fn strange_term_coeff(a_val: f64, tr_b: f64, c: &HomogConstants) -> Result<f64> {
    if !(a_val > 0.0) {
        return Err(Error::Domain(format!(
            "exchange coefficient must satisfy a >= a0 > 0, got {a_val}"
        )));
    }
    let ratio = a_val / (a_val + c.cn);
    Ok(c.a2 * tr_b * ratio * ratio)
}

/// Which boundary condition the four lateral faces carry.
///
/// The standard problem is Dirichlet; the Neumann variant makes solutions of
/// laterally-invariant data exactly one-dimensional, which several closed-form
/// checks rely on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LateralBc {
    Dirichlet,
    Neumann,
}

/// Full problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    /// Spatial dimension, n >= 3. Grid solves support n = 3 only.
    pub n: usize,
    /// Lattice period; 1/eps must be an integer.
    pub eps: f64,
    /// Particle radius prefactor.
    pub c0: f64,
    /// State-tracking weight.
    pub eta: f64,
    /// Control weight.
    pub big_n: f64,
    /// Volume source.
    pub f: CoefficientField,
    /// Robin exchange coefficient on the particle surfaces, >= a0 > 0.
    pub a: CoefficientField,
    /// Target field.
    pub u_t: CoefficientField,
    /// Symmetric matrix defining the tracking metric.
    pub b: MatrixField,
    /// Nodes per axis of the solver grid.
    pub grid_nodes: usize,
    /// Relative residual tolerance of the linear solver.
    pub tol_linear: f64,
    /// Relative optimality tolerance of the reduced-space optimizer.
    pub tol_opt: f64,
    /// Iteration cap for the linear solver.
    pub max_iter_linear: usize,
    /// Iteration cap for the reduced-space optimizer.
    pub max_iter_opt: usize,
    /// Lateral boundary condition (Dirichlet for the standard problem).
    pub lateral_bc: LateralBc,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            n: 3,
            eps: 0.125,
            c0: 0.5,
            eta: 1.0,
            big_n: 1.0,
            f: CoefficientField::constant(1.0),
            a: CoefficientField::constant(1.0),
            u_t: CoefficientField::constant(0.0),
            b: MatrixField::identity(3),
            grid_nodes: 33,
            tol_linear: 1e-10,
            tol_opt: 1e-8,
            max_iter_linear: 50_000,
            max_iter_opt: 500,
            lateral_bc: LateralBc::Dirichlet,
        }
    }
}

impl ProblemConfig {
    /// Critical exponent `alpha = gamma = (n-1)/(n-2)`.
    pub fn alpha(&self) -> f64 {
        (self.n as f64 - 1.0) / (self.n as f64 - 2.0)
    }

    /// Particle radius `a_eps = C0 * eps^alpha`.
    pub fn particle_radius(&self) -> f64 {
        self.c0 * self.eps.powf(self.alpha())
    }

    pub fn constants(&self) -> Result<HomogConstants> {
        constants(self.n, self.c0)
    }

    /// Checks the config invariants that do not need a grid: dimension,
    /// lattice admissibility, positivity of weights and coefficients.
    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::UnsupportedDimension(self.n));
        }
        if !(self.c0 > 0.0) {
            return Err(Error::Config(format!("c0 must be positive, got {}", self.c0)));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::Config(format!("eps must be positive, got {}", self.eps)));
        }
        inv_eps_integer(self.eps)?;
        if !(self.eta > 0.0) {
            return Err(Error::Config(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.big_n > 0.0) {
            return Err(Error::Config(format!("bigN must be positive, got {}", self.big_n)));
        }
        if self.grid_nodes < 4 {
            return Err(Error::Config(format!(
                "grid_nodes must be at least 4, got {}",
                self.grid_nodes
            )));
        }
        if !(self.tol_linear > 0.0) {
            return Err(Error::Config("linear solver tolerance must be positive".into()));
        }
        if !(self.tol_opt > 0.0) {
            return Err(Error::Config("optimizer tolerance must be positive".into()));
        }
        if self.b.dim() != self.n {
            return Err(Error::Config(format!(
                "B must be {0}x{0} for n = {0}, got {1}x{1}",
                self.n,
                self.b.dim()
            )));
        }
        // Sample a on the bottom face and B over a coarse lattice.
        let s = 8usize;
        for j in 0..=s {
            for i in 0..=s {
                let x = [i as f64 / s as f64, j as f64 / s as f64, 0.0];
                let av = self.a.eval(&x);
                if !(av > 0.0) {
                    return Err(Error::Config(format!(
                        "a(x) must be >= a0 > 0; sampled a({:.3},{:.3},0) = {av}",
                        x[0], x[1]
                    )));
                }
            }
        }
        if self.n == 3 {
            for k in 0..=4 {
                for j in 0..=4 {
                    for i in 0..=4 {
                        let x = [i as f64 / 4.0, j as f64 / 4.0, k as f64 / 4.0];
                        if !self.b.is_positive_definite_at(&x) {
                            return Err(Error::Config(format!(
                                "B(x) must be symmetric positive definite; fails at ({:.2},{:.2},{:.2})",
                                x[0], x[1], x[2]
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Returns `m = 1/eps` when it is an integer (to fp tolerance), else errors.
pub fn inv_eps_integer(eps: f64) -> Result<usize> {
    let inv = 1.0 / eps;
    let m = inv.round();
    if (inv - m).abs() > 1e-9 * inv.max(1.0) || m < 2.0 {
        return Err(Error::Config(format!("1/eps must be an integer >= 2, got eps = {eps}")));
    }
    Ok(m as usize)
}

/// The lattice of particles: centers, radius and probe radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleLayer {
    pub eps: f64,
    /// Particle radius `a_eps`.
    pub radius: f64,
    /// Radius of the probe ball around each center, `eps/4`.
    pub probe_radius: f64,
    /// Centers `eps * (j1, .., j_{n-1}, 1/2)`.
    pub centers: Vec<[f64; 3]>,
}

impl ParticleLayer {
    pub fn count(&self) -> usize {
        self.centers.len()
    }

    /// A layer with explicitly given centers; used by single-particle
    /// experiments. Radii follow the same critical law.
    pub fn with_centers(cfg: &ProblemConfig, centers: Vec<[f64; 3]>) -> Result<Self> {
        let radius = cfg.particle_radius();
        check_margin(radius, cfg.eps, cfg.c0)?;
        Ok(ParticleLayer { eps: cfg.eps, radius, probe_radius: cfg.eps / 4.0, centers })
    }
}

fn check_margin(a_eps: f64, eps: f64, c0: f64) -> Result<()> {
    let bound = eps / 8.0;
    if !(a_eps < bound) {
        return Err(Error::RadiusMargin { a_eps, bound, eps, c0 });
    }
    Ok(())
}

/// Builds the particle lattice for a unit-box instance.
///
/// Cells whose closure touches the lateral walls are excluded, so for
/// `eps = 1/m` there are `(m-1)^(n-1)` particles, centered on the plane
/// `x_n = eps/2` with lateral coordinates `eps * j_i`, `j_i in 1..m-1`.
pub fn build_particle_layer(cfg: &ProblemConfig) -> Result<ParticleLayer> {
    if cfg.n != 3 {
        return Err(Error::Config(
            "particle layers are built for n = 3 only; higher dimensions are supported in the constants and coefficient fields".into(),
        ));
    }
    let m = inv_eps_integer(cfg.eps)?;
    if m < 4 {
        return Err(Error::Config(format!("1/eps must be >= 4 for a lattice layer, got {m}")));
    }
    let radius = cfg.particle_radius();
    check_margin(radius, cfg.eps, cfg.c0)?;
    let eps = cfg.eps;
    let mut centers = Vec::with_capacity((m - 1) * (m - 1));
    for j2 in 1..m {
        for j1 in 1..m {
            centers.push([eps * j1 as f64, eps * j2 as f64, eps / 2.0]);
        }
    }
    Ok(ParticleLayer { eps, radius, probe_radius: eps / 4.0, centers })
}

/// The closed-form cell (capacity) function on the shell
/// `a_eps <= r <= eps/4`:
/// `w(r) = (r^(2-n) - (eps/4)^(2-n)) / (a_eps^(2-n) - (eps/4)^(2-n))`.
///
/// Equals 1 on the particle surface and 0 on the probe sphere.
pub fn capacity_function(r: f64, cfg: &ProblemConfig) -> Result<f64> {
    let a_eps = cfg.particle_radius();
    let outer = cfg.eps / 4.0;
    if !(r >= a_eps && r <= outer) {
        return Err(Error::Domain(format!(
            "capacity function is defined on [{a_eps}, {outer}], got r = {r}"
        )));
    }
    let p = 2.0 - cfg.n as f64;
    Ok((r.powf(p) - outer.powf(p)) / (a_eps.powf(p) - outer.powf(p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constants_n3() {
        let c = constants(3, 1.0).unwrap();
        assert_relative_eq!(c.omega_n, 4.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(c.a1, 4.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(c.a2, 4.0 * PI / 3.0, max_relative = 1e-15);
        assert_relative_eq!(c.cn, 1.0, max_relative = 1e-15);

        let c = constants(3, 0.5).unwrap();
        assert_relative_eq!(c.a1, 2.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(c.cn, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn constants_n4() {
        let c = constants(4, 1.0).unwrap();
        assert_relative_eq!(c.omega_n, 2.0 * PI * PI, max_relative = 1e-15);
        assert_relative_eq!(c.a1, 4.0 * PI * PI, max_relative = 1e-15);
        assert_relative_eq!(c.a2, PI * PI, max_relative = 1e-15);
        assert_relative_eq!(c.cn, 2.0, max_relative = 1e-15);
    }

    #[test]
    fn constants_identities_hold_for_a_range_of_inputs() {
        for n in 3..=8 {
            for &c0 in &[0.25, 0.5, 1.0, 2.0] {
                let c = constants(n, c0).unwrap();
                assert_relative_eq!(c.a2 * n as f64, c.a1, max_relative = 1e-15);
                assert_relative_eq!(c.cn * c0, (n - 2) as f64, max_relative = 1e-15);
            }
        }
    }

    #[test]
    fn constants_rejects_low_dimension() {
        assert!(matches!(constants(2, 1.0), Err(Error::UnsupportedDimension(2))));
    }

    #[test]
    fn effective_robin_values() {
        let c1 = constants(3, 1.0).unwrap();
        assert_relative_eq!(effective_robin(1.0, &c1).unwrap(), 2.0 * PI, max_relative = 1e-15);
        let c2 = constants(3, 0.5).unwrap();
        assert_relative_eq!(
            effective_robin(1.0, &c2).unwrap(),
            2.0 * PI / 3.0,
            max_relative = 1e-15
        );
        // saturation for large a
        assert_relative_eq!(effective_robin(1e12, &c2).unwrap(), c2.a1, max_relative = 1e-10);
        assert!(effective_robin(0.0, &c1).is_err());
        assert!(effective_robin(-1.0, &c1).is_err());
    }

    #[test]
    fn effective_robin_monotone_and_bounded() {
        let c = constants(3, 0.5).unwrap();
        let mut prev = 0.0;
        for k in 1..=200 {
            let a = k as f64 * 0.1;
            let v = effective_robin(a, &c).unwrap();
            assert!(v > prev && v < c.a1, "a = {a}: {v} not in ({prev}, {})", c.a1);
            prev = v;
        }
    }

    #[test]
    fn strange_coeff_values() {
        let c = constants(3, 1.0).unwrap();
        assert_relative_eq!(strange_term_coeff(1.0, 3.0, &c).unwrap(), PI, max_relative = 1e-15);
        assert_eq!(strange_term_coeff(1.0, 0.0, &c).unwrap(), 0.0);
        assert_relative_eq!(
            strange_term_coeff(2.0, 3.0, &c).unwrap(),
            16.0 * PI / 9.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn layer_eps_eighth() {
        let cfg = ProblemConfig { eps: 0.125, c0: 0.5, ..Default::default() };
        let layer = build_particle_layer(&cfg).unwrap();
        assert_eq!(layer.count(), 49);
        assert_relative_eq!(layer.radius, 1.0 / 128.0);
        assert_relative_eq!(layer.probe_radius, 1.0 / 32.0);
        for c in &layer.centers {
            assert_relative_eq!(c[2], cfg.eps / 2.0);
            for d in 0..2 {
                assert!(c[d] >= cfg.eps / 2.0 && c[d] <= 1.0 - cfg.eps / 2.0);
            }
        }
    }

    #[test]
    fn layer_margin_violation() {
        let cfg = ProblemConfig { eps: 0.25, c0: 1.0, ..Default::default() };
        match build_particle_layer(&cfg) {
            Err(Error::RadiusMargin { a_eps, bound, .. }) => {
                assert_relative_eq!(a_eps, 1.0 / 16.0);
                assert_relative_eq!(bound, 1.0 / 32.0);
            }
            other => panic!("expected margin error, got {other:?}"),
        }
    }

    #[test]
    fn layer_eps_sixteenth_contains_expected_center() {
        let cfg = ProblemConfig { eps: 1.0 / 16.0, c0: 0.5, ..Default::default() };
        let layer = build_particle_layer(&cfg).unwrap();
        assert_eq!(layer.count(), 225);
        let want = [1.0 / 16.0, 1.0 / 16.0, 1.0 / 32.0];
        assert!(layer
            .centers
            .iter()
            .any(|c| c.iter().zip(&want).all(|(a, b)| (a - b).abs() < 1e-14)));
    }

    #[test]
    fn layer_probe_balls_disjoint_and_interior() {
        let cfg = ProblemConfig { eps: 0.125, c0: 0.5, ..Default::default() };
        let layer = build_particle_layer(&cfg).unwrap();
        let r = layer.probe_radius;
        for (i, a) in layer.centers.iter().enumerate() {
            // distance to each wall exceeds the probe radius
            for d in 0..3 {
                assert!(a[d] - r > 0.0 && a[d] + r < 1.0);
            }
            for b in layer.centers.iter().skip(i + 1) {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                assert!(d2.sqrt() > 2.0 * r);
            }
        }
    }

    #[test]
    fn particle_count_law() {
        // count * eps^(n-1) -> 1 with an O(eps) deficit
        for m in [8usize, 16, 32, 64] {
            let eps = 1.0 / m as f64;
            let count = (m - 1) * (m - 1);
            let deficit = 1.0 - count as f64 * eps * eps;
            assert!(deficit > 0.0 && deficit < 2.0 * eps, "m = {m}: deficit = {deficit}");
        }
    }

    #[test]
    fn capacity_boundary_values_and_interior() {
        let cfg = ProblemConfig { eps: 0.125, c0: 0.5, ..Default::default() };
        let a_eps = cfg.particle_radius();
        assert_relative_eq!(capacity_function(a_eps, &cfg).unwrap(), 1.0);
        assert_relative_eq!(capacity_function(cfg.eps / 4.0, &cfg).unwrap(), 0.0);
        // (64 - 32) / (128 - 32) = 1/3 at r = 1/64
        assert_relative_eq!(
            capacity_function(1.0 / 64.0, &cfg).unwrap(),
            1.0 / 3.0,
            max_relative = 1e-14
        );
        assert!(capacity_function(a_eps * 0.5, &cfg).is_err());
        assert!(capacity_function(cfg.eps, &cfg).is_err());
    }

    #[test]
    fn capacity_radial_flux_is_constant() {
        // r^(n-1) w'(r) must be constant across the shell: checked with the
        // analytic derivative and with central differences.
        let cfg = ProblemConfig { eps: 0.125, c0: 0.5, ..Default::default() };
        let a_eps = cfg.particle_radius();
        let outer = cfg.eps / 4.0;
        let n = cfg.n as f64;
        let denom = a_eps.powf(2.0 - n) - outer.powf(2.0 - n);
        let analytic_flux = (2.0 - n) / denom; // r^(n-1) w'(r)
        let w = |r: f64| capacity_function(r, &cfg).unwrap();
        for k in 1..=12 {
            let r = a_eps + (outer - a_eps) * k as f64 / 13.0;
            let wp_exact = (2.0 - n) * r.powf(1.0 - n) / denom;
            assert_relative_eq!(r.powf(n - 1.0) * wp_exact, analytic_flux, max_relative = 1e-6);
            let d = 1e-6 * (outer - a_eps);
            let wp_num = (w(r + d) - w(r - d)) / (2.0 * d);
            assert_relative_eq!(r.powf(n - 1.0) * wp_num, analytic_flux, max_relative = 1e-3);
        }
    }

    #[test]
    fn config_validation() {
        assert!(ProblemConfig::default().validate().is_ok());
        let bad = ProblemConfig { eps: 0.3, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ProblemConfig { a: CoefficientField::constant(-1.0), ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ProblemConfig { n: 2, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
