//! Pedestrian detection in thermal imagery with local steering kernel
//! tensors and a max-margin tensor classifier.
//!
//! The crate is organised as a pipeline:
//!
//! 1. [`lsk`] — dense local steering kernel descriptors over an image,
//!    producing an `M × N × l` feature tensor.
//! 2. [`pca`] — fiber-wise decorrelation of descriptors to a small number
//!    of channels.
//! 3. [`mcs`] / [`svm`] — matrix cosine similarity kernel and the SMO
//!    solver that trains a single tensor template plus bias.
//! 4. [`fft`] — exact frequency-domain evaluation of the template over a
//!    whole feature tensor at once.
//! 5. [`pyramid`] — multiscale search, score fusion, and non-maximum
//!    suppression.
//! 6. [`eval`] — miss-rate / FPPI curves and cross-validation splits.
//!
//! All numeric code is generic over [`scalar::Real`] (implemented for
//! `f32` and `f64`); the type aliases at the crate root fix `f64`, which
//! is what the CLI and the tests use.

pub mod eigen;
pub mod error;
pub mod eval;
pub mod fft;
pub mod formats;
pub mod image;
pub mod lsk;
pub mod mcs;
pub mod model;
pub mod pca;
pub mod pyramid;
pub mod scalar;
pub mod svm;
pub mod synth;
pub mod tensor;
pub mod train;

pub use error::Error;

/// Convenience alias: results of fallible pipeline operations.
pub type Result<T> = std::result::Result<T, Error>;

/// Default-precision aliases; the CLI and the test suites work in `f64`.
pub type Tensor3 = tensor::Tensor3<f64>;
pub type Image = image::Image<f64>;
pub type LskParams = lsk::LskParams<f64>;
pub type PcaBasis = pca::PcaBasis<f64>;
pub type NormalizedTensor = mcs::NormalizedTensor<f64>;
pub type TrainingSet = svm::TrainingSet<f64>;
pub type SolverConfig = svm::SolverConfig<f64>;
pub type Model = model::Model<f64>;
pub type ScoreMap = fft::ScoreMap<f64>;
pub type Detection = pyramid::Detection<f64>;
