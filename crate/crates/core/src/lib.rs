//! Toolkit for aperiodic point sets in one and two dimensions: exact
//! quadratic-field arithmetic, abstract pattern spaces with a wedge
//! (restriction) operation, cut-and-project schemes and their dual lattices,
//! diffraction characters with empirical equivariance moduli, and stripe
//! certificates that witness non-discreteness of the eigenvalue group.
//!
//! The library insists on exact arithmetic wherever a yes/no decision is
//! made (patch equality, window membership, lattice membership) and uses
//! floating point only for reported magnitudes with explicit tolerances.

pub mod error;
pub mod exactnum;
pub mod rng;

pub mod patternspace;

pub mod cps;
pub mod spectra;
pub mod stripe;

pub mod generators;

pub mod io;
pub mod svg;

pub use error::{Error, Result};
pub use exactnum::QuadReal;
