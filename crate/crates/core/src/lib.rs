//! Multistatic MIMO-OFDM sensing simulator.
//!
//! The pipeline for one search cycle: every base station takes the
//! transmitter role once while the others receive; each receiver scans its
//! sector with digital beams, forms a bistatic range-angle map from per-beam
//! range-Doppler periodograms, thresholds it, masks geometrically unreliable
//! cells, and resamples it onto a shared Cartesian grid. The fusion center
//! sums all maps, excises low-intensity pixels, clusters the rest with an
//! intensity-weighted DBSCAN and reports cluster centroids, scored with GOSPA.

pub mod beamforming;
pub mod channel;
pub mod detection;
pub mod error;
pub mod fusion;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod periodogram;
pub mod reliability;
pub mod rng;
pub mod scenario;
pub mod sensing;

pub use error::{Error, Result};
pub use geometry::{Point2, Vec2};
pub use scenario::{ScenarioConfig, ValidConfig};
