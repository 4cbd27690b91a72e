//! Relative choreographies of planar N-vortex type Hamiltonian systems.
//!
//! The crate covers the full pipeline from the dynamics in the plane to the
//! reduced picture in complex projective space:
//!
//! * [`hamiltonians`]: Euler, Bose-Einstein-condensate and lattice NLS
//!   Hamiltonians with their gradients, vector fields and first integrals.
//! * [`integrate`]: adaptive 8th order flow with invariant monitoring, and
//!   relative equilibria.
//! * [`projective`]: Hopf projection, Fubini-Study distance, the unitary
//!   centroid-isolating frame and the cyclic actions on `CP^(n-1)` and `CP^(n-2)`.
//! * [`choreography`]: loop-space symmetry, choreography defect, shooting
//!   residual and orbit classification.
//! * [`spheres`]: explicit choreographic holomorphic spheres and their areas.
//! * [`search`]: multi-start shooting search for relative choreographies.
//! * [`analysis`]: relative-equilibrium geometry (chord-log maximality,
//!   separation from collisions, symmetric level-set components).
//! * [`cli`]: command-line driver and data export.

pub mod analysis;
pub mod choreography;
pub mod cli;
pub mod error;
pub mod hamiltonians;
pub mod integrate;
mod linalg;
mod parallel;
pub mod projective;
pub mod search;
pub mod spheres;

pub use error::{Error, Result};
pub use num_complex::Complex64;
