//! Rate-distortion and scaling-law laboratory.
//!
//! * [`ggm`]: generalized Gaussian entropy model and rate accounting.
//! * [`coder`]: range coder realizing that rate as bytes.
//! * [`codec`]: block-DCT image codec with coded scale side information.
//! * [`metrics`]: BD-Rate, BD-PSNR and Pearson correlation.
//! * [`scaling`]: power-law fits, Pareto frontiers, forecasts and compute accounting.
//! * [`svg`]: deterministic log-log plots for scaling reports.
//! * [`synthetic`]: reproducible test images.

pub mod codec;
pub mod coder;
pub mod ggm;
pub mod metrics;
pub mod scaling;
pub mod svg;
pub mod synthetic;
