//! Joint numerical ranges and spectral-gap witnesses for spin chains.
//!
//! The crate is organized around a handful of building blocks:
//!
//! - [`pauli`]: real-weighted Pauli-string sums ([`PauliSum`]) and the
//!   concrete chain Hamiltonians (XY chain, three-site witness, tapered
//!   variants).
//! - [`operator`]: matrix realizations ([`HermitianOperator`]), either dense
//!   or as a bit-mask Pauli action that applies strings without forming
//!   Kronecker products.
//! - [`spectra`]: dense eigendecomposition and a block Lanczos solver for
//!   extremal eigenpairs, plus gap extraction with degeneracy handling.
//! - [`numrange`]: boundary sampling of the joint numerical range `W(A, B)`
//!   via support directions, flat-segment resolution, cusp detection and the
//!   convex-hull decomposition check at a common eigenvector.
//! - [`gapwitness`]: the `H + tV` sweep that turns a jump discontinuity of
//!   `<H>` into a certified upper bound on the energy gap of `H`, and
//!   generators of witness operators (`H0^2 - H0`, random `H0 Z H0`).
//! - [`freefermion`]: Jordan-Wigner image of the XY/witness family as a
//!   quadratic fermion model, momentum-space dispersion and a real-space
//!   Bogoliubov-de-Gennes diagonalizer that stays exact for tapered,
//!   site-dependent couplings.
//!
//! Everything is pure and deterministic given explicit seeds; sweeps over
//! angles, grid points or random trials parallelize with rayon when the
//! `parallel` feature (default) is enabled and fall back to sequential loops
//! otherwise. Results never depend on the thread count.

pub mod error;
pub mod exec;
#[cfg(test)]
pub(crate) mod testutil;
pub mod freefermion;
pub mod gapwitness;
pub mod numrange;
pub mod operator;
pub mod pauli;
pub mod spectra;

pub use error::{Error, Result};
pub use operator::HermitianOperator;
pub use pauli::{Axis, PauliSum, PauliTerm};
