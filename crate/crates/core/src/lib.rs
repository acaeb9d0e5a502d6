//! Rank-frequency analysis of writing units: corpus ingestion, character
//! decomposition, ranked distributions with KS distances, and least-squares
//! fitting of rank-distribution families.
//!
//! The numeric core is generic over [`Scalar`] (`f64` or `f32`); the
//! aliases at the crate root fix the common choices.

pub mod corpus;
pub mod decomposition;
pub mod distribution;
pub mod fitting;
pub mod io;
pub mod report;
pub mod scalar;
pub mod special;

pub use scalar::Scalar;

pub type RankedDistributionF64 = distribution::RankedDistribution<f64>;
pub type RankedDistributionF32 = distribution::RankedDistribution<f32>;
pub type DistanceMatrixF64 = distribution::DistanceMatrix<f64>;
pub type DistanceMatrixF32 = distribution::DistanceMatrix<f32>;
pub type FitConfigF64 = fitting::FitConfig<f64>;
pub type FitConfigF32 = fitting::FitConfig<f32>;
pub type FitResultF64 = fitting::FitResult<f64>;
pub type FitResultF32 = fitting::FitResult<f32>;
