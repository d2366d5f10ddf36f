//! Numerical toolkit for continuous-variable teleportation of non-Gaussian wave packets.
//!
//! The crate covers the whole chain: input states in a truncated Fock basis,
//! Wigner functions on phase-space grids, the Gaussian teleportation channel,
//! simulated homodyne detection, maximum-likelihood tomography, and the
//! frequency-domain noise model of a broadband teleporter.
//!
//! Units: ħ = 1 with vacuum quadrature variance 1/2, and Wigner functions
//! normalized to ∫∫W dx dp = 1.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fock;
pub mod homodyne;
pub mod spectra;
pub mod special;
pub mod states;
pub mod teleport;
pub mod tomography;
pub mod wigner;

pub use error::{Error, Result};
