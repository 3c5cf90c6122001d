//! Complex banded and dense kernels. Everything the propagators and the
//! verification oracles need lives here; no external backend.

pub mod banded;
pub mod dense;

pub use banded::{BandLu, BandMatrix};
pub use dense::DenseMatrix;
