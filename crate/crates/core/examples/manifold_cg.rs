//! Sphere-constrained conjugate gradient on a small quadratic, against the
//! eigenvector solver.

use nalgebra::DMatrix;
use prmimo::sof::{evd_solve, manifold_cg_traced, CgOptions};

fn main() -> prmimo::Result<()> {
    // Smallest eigenvector is positive but not flat, so CG has to move and
    // both solvers should land on the same point.
    let b = DMatrix::from_row_slice(
        4,
        4,
        &[3.0, -0.4, -0.2, 0.0, -0.4, 2.0, -0.6, -0.1, -0.2, -0.6, 1.5, -0.3, 0.0, -0.1, -0.3, 2.5],
    );
    let out = manifold_cg_traced(&b, &CgOptions::default())?;
    println!("iterations {}, converged {}", out.iterations, out.converged);
    println!("objective trace: {:.6?}", out.trace);
    let cg = out.modification.values();
    let evd = evd_solve(&b)?;
    println!("cg  {:.6?}\nevd {:.6?}", cg.as_slice(), evd.values().as_slice());
    println!("objective cg {:.6}, evd {:.6}", cg.dot(&(&b * cg)), evd.values().dot(&(&b * evd.values())));
    Ok(())
}
