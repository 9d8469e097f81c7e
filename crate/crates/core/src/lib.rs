//! Reservoir computing with an array of resonant-tunnelling diodes.
//!
//! Images are encoded row by row into voltage pulse trains, each pulse is
//! passed through the diode's static I-V law, and the resulting currents feed
//! a linear readout trained by ridge regression or mini-batch gradient
//! descent. The [`spectral`] module measures the harmonics the diode adds to
//! a pure tone.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common case.

// `!(x > 0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datasets;
pub mod device;
pub mod encoding;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod matrix;
pub mod plot;
pub mod readout;
pub mod reservoir;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type DeviceParamsF64 = device::DeviceParams<f64>;
pub type DeviceParamsF32 = device::DeviceParams<f32>;
pub type GrayImageF64 = encoding::GrayImage<f64>;
pub type GrayImageF32 = encoding::GrayImage<f32>;
pub type VoltageFrameF64 = encoding::VoltageFrame<f64>;
pub type VoltageFrameF32 = encoding::VoltageFrame<f32>;
pub type StateMatrixF64 = reservoir::StateMatrix<f64>;
pub type StateMatrixF32 = reservoir::StateMatrix<f32>;
pub type ReadoutModelF64 = readout::ReadoutModel<f64>;
pub type ReadoutModelF32 = readout::ReadoutModel<f32>;
pub type MatrixF64 = matrix::Matrix<f64>;
pub type MatrixF32 = matrix::Matrix<f32>;
pub type LabeledDatasetF64 = datasets::LabeledDataset<f64>;
pub type LabeledDatasetF32 = datasets::LabeledDataset<f32>;
pub type SpectrumF64 = spectral::Spectrum<f64>;
pub type SpectrumF32 = spectral::Spectrum<f32>;
