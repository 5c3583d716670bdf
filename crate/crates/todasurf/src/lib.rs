//! Theta-function solutions of the periodic 2D Toda lattice and the
//! generalized Weierstrass immersions they induce in su(N).
//!
//! Pipeline: a genus-1 spectral curve fixes periods, Abel maps and
//! second-kind differentials (`curve`); theta quotients built on that data
//! solve the periodic Toda lattice (`toda`); the Lax hierarchy supplies
//! polynomial Lax matrices over an exact jet ring (`diffpoly`, `lax`); the
//! immersion X = i(L_m + ρ(L_m)) and its conserved current give a surface in
//! su(N) (`immersion`) whose differential geometry is computed and verified
//! in (`geometry`).

pub mod curve;
pub mod diffpoly;
pub mod error;
pub mod geometry;
pub mod immersion;
pub mod lax;
pub mod mjet;
pub mod theta;
pub mod toda;

pub use error::{Error, Result};
