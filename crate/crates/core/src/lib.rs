//! Photon-count autocorrelation, dynamic speckle simulation, and label-free
//! classification of hidden decorrelation events.
//!
//! The pipeline runs in four stages:
//!
//! * [`frame`]: binned photon-count recordings and the fiber lookup table.
//! * [`correlator`]: streaming multi-tau g₂ per pixel, fiber averaging, and
//!   per-event feature vectors.
//! * [`sim`]: synthetic recordings whose per-fiber decorrelation times encode
//!   a hidden spatial or temporal pattern.
//! * [`embed`] and [`eval`]: the joint autoencoder/k-means clustering network,
//!   PCA and t-SNE baselines, and Hungarian-matched accuracy.

pub mod audit;
pub mod correlator;
pub mod embed;
pub mod error;
pub mod eval;
pub mod fit;
pub mod frame;
pub mod pipeline;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
