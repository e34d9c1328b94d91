//! Exact computation for linear and affine cellular automata on `(Z/m)^(Z^D)`.
//!
//! The crate is `no_std` (it needs `alloc`). It covers:
//!
//! - [`algebra`]: residues mod `m`, characters of `Z/m`, `p`-ary digits and
//!   Lucas binomials.
//! - [`lca`]: automata as sparse Laurent polynomials of shifts, with
//!   composition, three exponentiation routes and the nested form.
//! - [`characters`]: characters of the configuration group as finite
//!   coefficient systems, and their pullback through an automaton.
//! - [`measures`]: Bernoulli, Markov, conditioned Markov and `N`-step Markov
//!   measures with exact Fourier coefficient engines and mixing certificates.
//! - [`analysis`]: rank and decay traces, cylinder laws of `F^n mu`, total
//!   variation to Haar, and `p`-ary gap diagnostics.
//!
//! File formats, configuration, parallel sweeps and the command-line front
//! end live in the companion `lca-haar` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod algebra;
pub mod analysis;
pub mod characters;
mod error;
pub mod lca;
pub mod measures;
pub mod numeric;
mod sparse;

pub use error::{Error, Result};

pub use num_complex::Complex64;
