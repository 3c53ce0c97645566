//! Symmetric Hamiltonian systems on symplectic vector spaces: moment maps,
//! relative equilibria, singular reduction at zero momentum and relative
//! periodic orbits near a symmetric equilibrium.

pub mod dynamics;
pub mod error;
pub mod group;
pub mod hamiltonian;
pub mod lab;
pub mod linalg;
pub mod reduction;
pub mod releq;
pub mod report;
pub mod symplectic;
pub mod tolerance;

pub use error::{Error, Result};
