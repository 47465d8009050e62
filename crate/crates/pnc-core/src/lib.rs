//! Physical-layer network coding at desk scale.
//!
//! The crate is organized around the layers of a relay network experiment:
//!
//! - [`galois`]: exact F_q scalars, vectors, matrices, rank and solving.
//! - [`netcod`]: packet-level linear network coding and its wire format.
//! - [`modq`]: finite-field "physical" layers (noiseless, erasure and
//!   modulo-additive-noise adders) and same-code computation coding.
//! - [`lattice`]: nested lattice codes, mod-lattice arithmetic, MMSE
//!   scaling and compute-and-forward over real and complex channels.
//! - [`wireless`]: Gaussian channels, the uncoded two-way relay strategies,
//!   analytic rate curves and end-to-end exchange simulation.
//! - [`rng`]: deterministic seed/stream derivation for reproducible Monte
//!   Carlo runs.
//!
//! All rates are bits per channel use and all entropies use base-2 logs.

pub mod galois;
pub mod lattice;
pub mod modq;
pub mod netcod;
pub mod rng;
pub mod wireless;
