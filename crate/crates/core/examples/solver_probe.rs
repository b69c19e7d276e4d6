use dsf_core::grid::{assemble_poisson, add_gamma0_load, BcSpec, BottomBc, Grid, BoundaryField, Precond};
use dsf_core::model::CoefficientField;
use std::time::Instant;

fn main() {
    for m in [65usize, 129] {
        let grid = Grid::new(m).unwrap();
        let sigma = BoundaryField::constant(&grid, 2.0 * std::f64::consts::PI / 3.0);
        let t0 = Instant::now();
        let mut sys = assemble_poisson(&grid, &BcSpec::standard(BottomBc::Robin(&sigma))).unwrap();
        println!("m={m}: assemble {:.2}s, ndof={}, nnz={}", t0.elapsed().as_secs_f64(), sys.ndof(), sys.mat.nnz());
        let mut b = assemble_poisson(&grid, &BcSpec::standard(BottomBc::Robin(&sigma))).unwrap().dirichlet_rhs;
        let load = dsf_core::grid::volume_load(&grid, &CoefficientField::constant(1.0));
        let v = BoundaryField::constant(&grid, 0.3);
        let mut full = load;
        add_gamma0_load(&grid, &mut full, &v, 1.0);
        let rhs = sys.restrict(&full);
        for i in 0..b.len() { b[i] += rhs[i]; }
        for (name, pc) in [("jacobi", Precond::Jacobi), ("ssor1.5", Precond::Ssor(1.5)), ("ssor1.7", Precond::Ssor(1.7)), ("ssor1.85", Precond::Ssor(1.85)), ("ssor1.92", Precond::Ssor(1.92)), ("ssor1.95", Precond::Ssor(1.95))] {
            sys.params.precond = pc;
            sys.params.tol = 1e-10;
            let t = Instant::now();
            match sys.solve(&b, None) {
                Ok((_, st)) => println!("  {name:8}: {:7.2}s  iters={:5}  res={:.2e}", t.elapsed().as_secs_f64(), st.iterations, st.rel_residual),
                Err(e) => println!("  {name:8}: FAILED {e}"),
            }
        }
    }
}
