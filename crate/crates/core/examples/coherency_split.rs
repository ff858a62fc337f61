//! Spatial coherency of synthetic scenes and a median split into high and
//! low coherency sets.

use convinv::coherency::{partition_corpus, score_histogram};
use convinv::sr::scenes::synthetic_corpus;

fn main() -> convinv::Result<()> {
    let scenes = synthetic_corpus(8, 8, 32, 5)?;
    let images: Vec<_> = scenes.iter().map(|s| s.image.clone()).collect();
    let part = partition_corpus(&images, None)?;
    println!("tau = {:.4}", part.tau);
    for (s, score) in scenes.iter().zip(&part.scores) {
        println!("{:<14} mu {:.4}", s.name, score.mu);
    }
    let names = |idx: &[usize]| idx.iter().map(|&i| scenes[i].name.as_str()).collect::<Vec<_>>().join(" ");
    println!("high: {}", names(&part.high));
    println!("low:  {}", names(&part.low));
    for b in score_histogram(&part.scores, 5)? {
        println!("[{:.1}, {:.1}) {}", b.lo, b.hi, "#".repeat(b.count));
    }
    Ok(())
}
