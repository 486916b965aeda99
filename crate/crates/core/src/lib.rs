//! Sparse principal components by penalized block descent (BISPCA) and by
//! empirical Bayes covariance decomposition (EBCD), with the point-Laplace
//! normal-means solver that drives the latter and a seeded simulation
//! harness for comparing the two against plain PCA.

pub mod bispca;
pub mod ebcd;
pub mod ebnm;
pub mod error;
pub mod linalg;
pub mod simbench;

pub use error::{EbnmError, FitError, LinalgError};
pub use linalg::DenseMatrix;
