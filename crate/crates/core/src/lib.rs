//! Exact-diagonalization laboratory for Hall response of interacting lattice
//! fermions on small tori: one-form calculus, flux-twisted Hamiltonians,
//! Kubo and adiabatic response, and the adiabatic curvature.

pub mod dense;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod forms;
pub mod freefermion;
pub mod hamiltonian;
pub mod lattice;
pub mod response;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
