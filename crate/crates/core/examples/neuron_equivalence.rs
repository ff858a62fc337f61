//! A neuron's gradient step written as soft thresholding with a
//! data-dependent bias: both trajectories coincide.

use convinv::conv::{w_operator, Patch};
use convinv::neuron::{adaptive_bias, gd_step, gd_step_soft_form, spectrally_scaled, NeuronFilter, TrainState};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> convinv::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = Patch::from_fn(8, 8, |_, _| rng.random_range(0.0..1.0))?;
    let (d, scale) = spectrally_scaled(&w_operator(&x, 3)?)?;
    let t = DVector::from_fn(36, |_, _| rng.random_range(0.0..1.0));
    let f0 = NeuronFilter::new(DVector::from_fn(9, |_, _| rng.random_range(0.0..0.2)), 0.05)?;
    println!("dictionary 36x9, scaled by 1/{scale:.4}");
    println!("adaptive bias at start: {:.4?}", adaptive_bias(&d, &f0)?.as_slice());

    let (mut a, mut b) = (TrainState::new(f0.clone()), TrainState::new(f0));
    let mut worst: f64 = 0.0;
    for it in 1..=500 {
        a = gd_step(&a, &d, &t)?;
        b = gd_step_soft_form(&b, &d, &t)?;
        worst = worst.max((&a.filter.coeffs - &b.filter.coeffs).amax());
        if it % 100 == 0 {
            println!("iter {it:>4}  mse {:.6}  max gap so far {worst:.1e}", a.mse_history[it - 1]);
        }
    }
    Ok(())
}
