//! PSNR against depth on a coherent and an incoherent corpus, with the
//! depth at which each curve saturates.

use convinv::coherency::partition_corpus;
use convinv::sr::eval::{SweepCorpus, SweepGeometry};
use convinv::sr::scenes::synthetic_corpus;
use convinv::sr::{depth_sweep, NetworkConfig, SkipMode};

fn main() -> convinv::Result<()> {
    let split = |n, seed| -> convinv::Result<_> {
        let imgs: Vec<_> = synthetic_corpus(n, n, 40, seed)?.into_iter().map(|s| s.image).collect();
        let p = partition_corpus(&imgs, None)?;
        let pick = |idx: &[usize]| idx.iter().map(|&i| imgs[i].clone()).collect::<Vec<_>>();
        Ok((pick(&p.high), pick(&p.low)))
    };
    let (high, low) = split(30, 1)?;
    let (high_test, low_test) = split(6, 2)?;
    let corpora = [
        SweepCorpus { name: "high".into(), train: high, test: high_test },
        SweepCorpus { name: "low".into(), train: low, test: low_test },
    ];
    let base = NetworkConfig { learning_rate: 0.1, epochs: 4, ..NetworkConfig::new(2, 6, SkipMode::GlobalResidual, 0) };
    let table = depth_sweep(&corpora, &[2, 3, 4, 5, 6], &[1], &base, SweepGeometry { scale: 2.0, output: 8, stride: 8 })?;
    for r in &table.rows {
        println!(
            "{:<5} depth {:>2}  PSNR {:>7}  {}{}",
            r.corpus,
            r.depth,
            r.mean_psnr.map_or("-".into(), |p| format!("{p:.3}")),
            r.status,
            if r.saturated { "  <- saturation" } else { "" }
        );
    }
    Ok(())
}
