//! Near-unitary splitting of strongly interacting particles in 1D traps.
//!
//! At infinite contact repulsion, N particles in a 1D trap have N!-fold
//! degenerate levels, one state per spatial ordering of the particles. At
//! large finite coupling `g` these levels split at first order in `1/g`. This
//! crate models the splitting as tunneling between ordering domains:
//!
//! * [`perm`]: orderings, the particle and ordering actions of S_N, and
//!   permutation matrices on the N! wells;
//! * [`tunneling`]: tunneling operators from per-bond rates, their spectra,
//!   and S_N irrep / parity labels of each level;
//! * [`trap`]: single-particle eigenstates of harmonic, box and grid traps;
//! * [`slater`]: the fermionized wavefunction and the bond coupling
//!   coefficients as boundary integrals;
//! * [`ed`]: exact diagonalization of the finite-`g` Hamiltonian used to check
//!   the predicted splittings.
//!
//! Natural units `ħ = m = 1` throughout (`ω = 1` for the harmonic trap).

pub mod ed;
pub mod error;
pub mod irreps;
pub mod linalg;
pub mod perm;
pub mod quadrature;
pub mod slater;
pub mod trap;
pub mod tunneling;

pub use error::{Error, Result};
