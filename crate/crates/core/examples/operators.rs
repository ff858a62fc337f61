//! Convolution as matrix products: `W(x)·f` and the cascade `X(f₁)·W(x)·f₀`.

use convinv::conv::{valid_correlate, vectorize_lex, w_operator, x_operator, Patch};

fn main() -> convinv::Result<()> {
    let x = Patch::from_fn(6, 6, |i, j| ((3 * i + 5 * j) % 7) as f64)?;
    let f0 = Patch::from_rows(2, 2, &[1.0, -1.0, 0.5, 0.0])?;
    let f1 = Patch::from_rows(2, 2, &[0.0, 2.0, 1.0, -0.5])?;

    let w = w_operator(&x, 2)?;
    println!("W(x) is {}x{}", w.matrix().nrows(), w.matrix().ncols());
    let direct = valid_correlate(&x, &f0)?;
    let via_w = w.matrix() * vectorize_lex(&f0).as_vector();
    println!("W(x)·f0 vs x⋆f0: {:.1e}", (via_w - vectorize_lex(&direct).as_vector()).amax());

    let two_step = valid_correlate(&direct, &f1)?;
    let cascade = x_operator(&f1, 6)?.matrix() * w.matrix() * vectorize_lex(&f0).as_vector();
    println!("X(f1)·W(x)·f0 vs (x⋆f0)⋆f1: {:.1e}", (&cascade - vectorize_lex(&two_step).as_vector()).amax());

    let swapped = x_operator(&f0, 6)?.matrix() * w.matrix() * vectorize_lex(&f1).as_vector();
    println!("filter order swapped: {:.1e}", (cascade - swapped).amax());
    Ok(())
}
