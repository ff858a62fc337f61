//! Tikhonov-regularized least squares, and the filter a fully active neuron
//! converges to on a superpatch.

use convinv::conv::{w_operator, Patch};
use convinv::neuron::{equivalent_filter, gd_step, normal_condition_number, spectrally_scaled, NeuronFilter, TrainState};
use convinv::prox::{landweber_solve, LinearOperator};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> convinv::Result<()> {
    let k = LinearOperator::new(DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 1.0, 1.0]))?;
    let g = DVector::from_vec(vec![1.0, 2.0, 3.0]);
    for lambda in [0.0, 0.1, 1.0, 10.0] {
        let t = landweber_solve(&k, &g, lambda)?;
        println!("lambda {lambda:>5}: t = {:.6?}", t.as_slice());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = Patch::from_fn(6, 6, |_, _| rng.random_range(0.5..1.5))?;
    let (d, _) = spectrally_scaled(&w_operator(&x, 3)?)?;
    println!("cond(DᵀD) = {:.2}", normal_condition_number(&d));
    let t = DVector::from_fn(16, |i, _| 1.0 + (i % 3) as f64);
    let mut s = TrainState::new(NeuronFilter::new(DVector::from_element(9, 0.1), 0.0)?);
    for _ in 0..20_000 {
        s = gd_step(&s, &d, &t)?;
    }
    let fe = equivalent_filter(&d, &t, 0.0)?;
    println!("gradient descent vs closed form: {:.2e}", (&s.filter.coeffs - fe).amax());
    Ok(())
}
