//! Polynomial orbits of unipotent affine maps on tori and on compact nilmanifolds:
//! independence of polynomial families, Jordan reduction of unipotent integer
//! matrices, exact phase polynomials and Weyl sums, and multiple ergodic averages.

pub mod algebra;
pub mod angle;
pub mod averages;
pub mod equidist;
pub mod error;
pub mod io;
pub mod nil;
pub mod polynomial;
pub mod torus;

pub use error::{Error, Result};
