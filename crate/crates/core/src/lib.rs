//! Coherent phase-state (CPS) toolkit for bosonic Hilbert spaces.
//!
//! A coherent phase state is a coherent state of amplitude `α·e^{iqφ}`
//! (φ = 2π/d, q = 0..d−1) projected onto a window of number states
//! `n ∈ [n0, n0+d−1]`. The d projected states at a common radius form a
//! complete, generally non-orthogonal basis of the window, related to the
//! number states by a discrete Fourier transform. This crate provides
//!
//! - [`fock`]: a dense truncated Fock-space oracle (ladder operators,
//!   eigendecomposition evolution, Lindblad superoperators, quadrature
//!   densities, matrix permanents) used as the independent reference that
//!   every CPS identity is tested against;
//! - [`basis`]: CPS basis construction, normalization in log space, Gram
//!   matrices, and the DFT maps between number and phase coefficients;
//! - [`operators`]: closed-form CPS matrices of number powers and ladder
//!   operators, plus the generic double-DFT construction for arbitrary
//!   operators;
//! - [`evolution`]: unitary propagation in the CPS basis, the hybrid
//!   picture with a moving reference amplitude, anharmonic-oscillator
//!   closed forms, phase-noise fringe ensembles, and a dissipative master
//!   equation in the discrete P-representation;
//! - [`prep`]: discrete P-functions for density operators, their moments,
//!   and boson-sampling correlations through qubit-size P-functions;
//! - [`cli`]: the command implementations behind the `cpskit` binary.

pub mod basis;
pub mod cli;
pub mod error;
pub mod evolution;
pub mod fock;
pub mod linalg;
pub mod numeric;
pub mod operators;
pub mod prep;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
