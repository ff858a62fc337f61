pub mod cli;
pub mod coherency;
pub mod conv;
pub mod csc;
pub mod error;
pub mod neuron;
pub mod prox;
pub mod sr;

pub use error::{Error, Result};
