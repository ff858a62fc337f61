use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sr::data::SrPair;
use crate::sr::net::{NetworkConfig, ToyCnn};

pub const DIVERGENCE_LOSS: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub net: ToyCnn,
    /// Mean per-pair loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Plain SGD, one pair per step, on `½·mean((out − target)²)`. Pairs are
/// visited in a fresh seeded shuffle every epoch.
pub fn train(mut net: ToyCnn, pairs: &[SrPair], config: &NetworkConfig) -> Result<TrainReport> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(Error::arg("no training pairs"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (step, &k) in order.iter().enumerate() {
            let (loss, grad) = net.loss_and_gradient(&pairs[k].input, &pairs[k].target)?;
            if !(loss <= DIVERGENCE_LOSS) {
                return Err(Error::Divergence {
                    epoch,
                    sample: step,
                    loss,
                });
            }
            total += loss;
            net.sgd_update(&grad, config.learning_rate);
        }
        epoch_losses.push(total / pairs.len() as f64);
    }
    if !net.is_finite() {
        return Err(Error::Divergence {
            epoch: config.epochs,
            sample: 0,
            loss: f64::NAN,
        });
    }
    Ok(TrainReport { net, epoch_losses })
}
