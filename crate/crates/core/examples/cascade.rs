//! Two cascaded units: the first filter's update in gradient form and in
//! soft-threshold form on the modified dictionary `P = X(f₁)·W(x)`.

use convinv::conv::Patch;
use convinv::neuron::{cascade_forward, cascade_step_with, cascade_step_soft_form, CascadePair, NeuronFilter};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> convinv::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = Patch::from_fn(7, 7, |_, _| rng.random_range(0.0..0.1))?;
    let f0 = NeuronFilter::new(DVector::from_fn(9, |_, _| rng.random_range(0.0..0.3)), 0.01)?;
    let f1 = NeuronFilter::new(DVector::from_fn(4, |_, _| rng.random_range(0.0..0.3)), 0.01)?;
    let mut pair = CascadePair::new(f0, f1, 7)?;
    let (e, c, out) = pair.sizes()?;
    println!("input {e}x{e} -> {c}x{c} -> {out}x{out}");
    let t = DVector::from_fn(out * out, |_, _| rng.random_range(0.0..0.05));
    for it in 1..=10 {
        let grad = cascade_step_with(&pair, &x, &t, true)?;
        let soft = cascade_step_soft_form(&pair, &x, &t, true)?;
        let gap = (&grad.f_km2.coeffs - &soft.f_km2.coeffs).amax().max((&grad.f_km1.coeffs - &soft.f_km1.coeffs).amax());
        let out_err = (&t - cascade_forward(&pair, &x)?.x_k).norm();
        println!("step {it:>2}  ‖t − x_k‖ {out_err:.6}  form gap {gap:.1e}");
        pair = grad;
    }
    Ok(())
}
