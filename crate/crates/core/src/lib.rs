//! Ball automorphisms, free polynomial calculus, nest representations and
//! semicrossed products of the noncommutative disc algebra.

pub mod cball;
pub mod dshift;
pub mod error;
pub mod freepoly;
pub mod json;
pub mod linalg;
pub mod nestrep;
pub mod sample;
pub mod semicrossed;

pub use error::{Error, Result};
