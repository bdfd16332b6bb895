//! Quantization dimension of invariant measures of bi-Lipschitz recurrent
//! iterated function systems.
//!
//! The numeric core is generic over [`scalar::Real`] (`f32` or `f64`). The
//! aliases below fix the scalar for the common cases.

pub mod config;
pub mod csv;
pub mod error;
pub mod fixtures;
pub mod lab;
pub mod matrix;
pub mod quantizer;
pub mod rifs;
pub mod roots;
pub mod scalar;
pub mod spectral;
pub mod symbolic;

pub use error::{Error, Result};
pub use scalar::Real;

pub type RifsSpecF64 = rifs::RifsSpec<f64>;
pub type RifsSpecF32 = rifs::RifsSpec<f32>;
pub type WordF64 = symbolic::Word<f64>;
pub type AntichainF64 = symbolic::Antichain<f64>;
pub type SpectralProfileF64 = spectral::SpectralProfile<f64>;
pub type WeightedCloudF64 = quantizer::WeightedCloud<f64>;
pub type WeightedCloudF32 = quantizer::WeightedCloud<f32>;
pub type CodebookF64 = quantizer::Codebook<f64>;
pub type QuantizationRunF64 = quantizer::QuantizationRun<f64>;
pub type QuantizationRunF32 = quantizer::QuantizationRun<f32>;
pub type DimensionReportF64 = lab::DimensionReport<f64>;
