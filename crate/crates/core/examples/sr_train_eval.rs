//! Toy ×2 superresolution: a global-residual net against a plain one on
//! stripe scenes, with PSNR, the Welch statistic and filter coherence.

use convinv::sr::eval::median;
use convinv::sr::scenes::synthetic_corpus;
use convinv::sr::{evaluate, make_pairs, train, welch_t, NetworkConfig, PairGeometry, SkipMode, ToyCnn};

fn main() -> convinv::Result<()> {
    let imgs = |n, seed| -> convinv::Result<Vec<_>> { Ok(synthetic_corpus(n, 0, 40, seed)?.into_iter().map(|s| s.image).collect()) };
    let geom = PairGeometry { output: 8, receptive_field: 15, stride: 8, margin: 7 };
    let train_pairs = make_pairs(&imgs(120, 1)?, 2.0, geom)?;
    let test_pairs = make_pairs(&imgs(10, 2)?, 2.0, geom)?;
    println!("{} training pairs, {} test pairs", train_pairs.len(), test_pairs.len());

    let mut sets = Vec::new();
    for mode in [SkipMode::GlobalResidual, SkipMode::None] {
        let cfg = NetworkConfig { learning_rate: 0.1, epochs: 8, ..NetworkConfig::new(7, 8, mode, 3) };
        let rep = train(ToyCnn::random(&cfg)?, &train_pairs, &cfg)?;
        let ev = evaluate(&rep.net, &test_pairs)?;
        println!(
            "{:<16} final loss {:.5}  PSNR mean {:.2} median {:.2}  bicubic {:.2}",
            mode.name(),
            rep.epoch_losses.last().unwrap(),
            ev.mean_psnr,
            median(&ev.psnr_per_patch),
            ev.mean_baseline_psnr
        );
        for l in &ev.layer_coherence {
            if let (Some(min), Some(max)) = (l.min_raw, l.max_normalized) {
                println!("    layer {}: min-mode {:.5}  max-mode {:.4}", l.layer, min, max);
            }
        }
        sets.push(ev.psnr_per_patch);
    }
    println!("welch t (skip − plain) = {:.3}", welch_t(&sets[0], &sets[1])?);
    Ok(())
}
