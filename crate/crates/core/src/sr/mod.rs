//! Desk-scale superresolution experiments with small convolutional nets.

pub mod data;
pub mod eval;
pub mod image;
pub mod net;
pub mod scenes;
pub mod train;

pub use data::{make_pairs, make_sr_pairs, PairGeometry, SrPair};
pub use eval::{depth_sweep, evaluate, layer_coherence_report, welch_t, EvalReport, LayerCoherence};
pub use image::{bicubic_resize, load_pgm, psnr, save_pgm};
pub use net::{NetworkConfig, SkipMode, ToyCnn};
pub use train::{train, TrainReport};
