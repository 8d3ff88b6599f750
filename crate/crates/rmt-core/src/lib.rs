//! Exact eigenvalue statistics for composite random-matrix ensembles built
//! from Gaussian Wigner and Wishart matrices, cross-validated by Monte Carlo
//! matrix sampling.
//!
//! The library is organized around a generic engine for biorthogonal
//! ensembles ([`biortho`]): a weight `w`, a family `{f_j}` and the moment
//! matrix `h_{j,k}` determine the joint eigenvalue density, the marginal
//! density and every r-point correlation function through bordered
//! determinants. Four concrete ensembles ([`ensembles`]) supply `(w, f_j, h)`
//! in closed form; [`sampler`] draws the same ensembles at the matrix level
//! and [`harness`] compares both routes.

pub mod biortho;
pub mod ensembles;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod logscale;
pub mod quad;
pub mod sampler;
pub mod specfun;

pub use error::{Error, Result};
pub use logscale::LogScaled;
