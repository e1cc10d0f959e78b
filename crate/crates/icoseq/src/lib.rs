//! Compiler, verifier, and desk-scale simulator for engineering two-body
//! spin-1/2 interaction Hamiltonians with pulse sequences drawn from finite
//! rotation groups (octahedral/Clifford and icosahedral).
//!
//! The pipeline: decompose a coupling tensor into its irreducible parts
//! ([`irrep`]), enumerate a rotation group and its 5-dimensional reduced
//! representation ([`rotgroup`]), pose a linear program whose solution is a
//! set of toggling-frame durations ([`synth`]), assemble and lower the
//! resulting pulse sequence, verify the engineered average Hamiltonian two
//! independent ways ([`avgham`]), and simulate the exact dynamics of a small
//! spin ensemble under the sequence ([`sim`]).

pub mod avgham;
pub mod error;
pub mod irrep;
pub mod numerics;
pub mod presets;
pub mod rotgroup;
pub mod sim;
pub mod svg;
pub mod synth;

pub use error::{Error, Result};
