//! Numerical core for reconstructing bivariate joint quasi-distributions from
//! three one-dimensional marginals.
//!
//! The crate is organised by subsystem:
//!
//! * [`cher`] – dephasing factors of the qubit-pair spin-boson model and the
//!   inversion of those factors into the three ground-truth CHER marginals.
//! * [`wigner`] – noisy coherent / cat states in a truncated Fock basis, their
//!   Wigner functions and quadrature marginals.
//! * [`synth`] – signed Gaussian training distributions with analytic marginals.
//! * [`colormap`] – the three-channel colour mapping and its inverse.
//! * [`verification`] – image/marginal metrics and the marginal-consistency
//!   verification protocol.
//! * [`dataset`] / [`export`] – on-disk formats.

pub mod cher;
pub mod colormap;
pub mod dataset;
pub mod digest;
pub mod error;
pub mod export;
pub mod grid;
pub mod interp;
pub mod quadrature;
pub mod synth;
pub mod verification;
pub mod wigner;

pub use error::{Error, Result};
pub use grid::{AxisLabel, JointGrid, Marginal, MarginalTriple, UniformGrid, FEATURE_LEN, MARGINAL_LEN};
