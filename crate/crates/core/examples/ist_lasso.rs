//! Sparse recovery by iterative shrinkage, checked against the LASSO
//! optimality conditions.

use convinv::prox::{ist_solve, lasso_kkt_residual, IstOptions, LinearOperator};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> convinv::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let k = DMatrix::from_fn(8, 16, |_, _| rng.sample::<f64, _>(StandardNormal));
    let (op, norm) = LinearOperator::new(k)?.normalized();
    let mut t = DVector::zeros(16);
    t[3] = 1.5;
    t[11] = -1.0;
    let g = op.matrix() * &t;
    let b = 0.02;
    let rep = ist_solve(&op, &g, b, IstOptions { tol: 1e-12, ..IstOptions::default() })?;
    println!("operator scaled by 1/{norm:.4}");
    for (n, obj) in rep.objective_history.iter().enumerate().step_by(50) {
        println!("iter {n:>5}  objective {obj:.10}");
    }
    println!("converged {} after {} iterations", rep.converged, rep.iterations);
    println!("KKT residual {:.2e}", lasso_kkt_residual(&op, &g, &rep.solution, b));
    println!("truth     {:.3?}", t.as_slice());
    println!("recovered {:.3?}", rep.solution.as_slice());
    Ok(())
}
