//! Layered soft thresholding on a synthesized two-layer sparse model, with
//! the per-layer sparsity condition, support recovery and error bound.

use convinv::csc::{synthesize_instance, verify, verify_seeds, SynthesisParams};

fn main() -> convinv::Result<()> {
    let params = SynthesisParams::new(vec![64, 48, 32], vec![3, 2], 0.01, 0.01, 11);
    let inst = synthesize_instance(&params)?;
    println!("biases {:.4?}", inst.biases);
    for l in verify(&inst)?.layers {
        println!(
            "layer {}: mu {:.4}, s {} < {:.2}: {}, support {}, error {:.4} <= eps {:.4}",
            l.layer, l.mu_max, l.sparsity, l.sparsity_rhs, l.condition_met, l.support_recovered, l.error_norm, l.epsilon
        );
    }
    let seeds: Vec<u64> = (0..100).collect();
    let ok = verify_seeds(&params, &seeds)
        .into_iter()
        .filter(|(_, r)| r.as_ref().is_ok_and(|r| r.all_supports_recovered() && r.errors_within_bounds()))
        .count();
    println!("{ok}/100 seeds recover every support within bound");
    Ok(())
}
