//! The unit ball of `C^n` and its conformal automorphisms.

mod automorphism;
mod conjugacy;
mod fixed;
mod lift;
mod point;
mod random;

pub use automorphism::{MobiusAutomorphism, IDENTITY_TOL, UNITARY_TOL};
pub use conjugacy::{are_conjugate, ConjugacyVerdict, InvariantMismatch, Verdict, CERTIFICATE_TOL};
pub use fixed::{
    fixed_point_residual, AffineFixedSet, AutType, FixedPointData, FIXED_RESIDUAL_TOL,
};
pub use lift::{AutomorphismLift, FORM_TOL};
pub use point::{BallPoint, INTERIOR_MARGIN, SPHERE_SLACK};
pub use random::{haar_unitary, random_automorphism, random_ball_point};
