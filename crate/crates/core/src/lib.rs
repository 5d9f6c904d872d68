//! Noise-robust dynamic mode decomposition.
//!
//! Generates PDE snapshot datasets, corrupts them with white Gaussian noise
//! at a target SNR, filters them with robust PCA (alternating directions or
//! inexact augmented Lagrange multipliers) or total-least-squares DMD, fits
//! exact DMD models and scores the reconstructions against the clean data.

pub mod dmd;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod pde;
pub mod plot;
pub mod rpca;
pub mod snapshots;
pub mod tlsdmd;

pub use error::{Error, Result};
pub use faer;
pub use num_complex::Complex64;

pub use dmd::{DmdModel, RankRule};
pub use experiment::{DatasetKind, ExperimentConfig};
pub use metrics::{Method, MetricsRecord};
pub use rpca::{AdmParams, IalmParams, RpcaResult};
pub use snapshots::{NoiseSpec, SnapshotMatrix, SplitPair};
