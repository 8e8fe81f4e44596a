use crate::error::{Error, Result};
use crate::linalg::{CVec, C64};

/// Slack allowed above norm 1 for points that are meant to lie on the sphere.
pub const SPHERE_SLACK: f64 = 1e-10;
/// A point is interior when its norm is below `1 - INTERIOR_MARGIN`.
pub const INTERIOR_MARGIN: f64 = 1e-12;

/// A point of the closed unit ball of `C^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct BallPoint {
    coords: CVec,
}

impl BallPoint {
    pub fn new(coords: CVec) -> Result<Self> {
        let norm = coords.norm();
        if !norm.is_finite() || norm > 1.0 + SPHERE_SLACK {
            return Err(Error::PointOutsideBall { norm });
        }
        Ok(Self { coords })
    }

    pub fn from_slice(coords: &[C64]) -> Result<Self> {
        Self::new(CVec::from_column_slice(coords))
    }

    /// Real coordinates, imaginary parts zero.
    pub fn from_reals(coords: &[f64]) -> Result<Self> {
        Self::new(CVec::from_iterator(
            coords.len(),
            coords.iter().map(|&x| C64::new(x, 0.0)),
        ))
    }

    pub fn origin(n: usize) -> Self {
        Self {
            coords: CVec::zeros(n),
        }
    }

    /// Rescales a nonzero vector onto the unit sphere.
    pub fn on_sphere(v: CVec) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument(
                "cannot normalise a zero vector".into(),
            ));
        }
        Ok(Self {
            coords: v / C64::from(norm),
        })
    }

    pub(crate) fn from_vec_unchecked(coords: CVec) -> Self {
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &CVec {
        &self.coords
    }

    pub fn into_coords(self) -> CVec {
        self.coords
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    pub fn is_interior(&self) -> bool {
        self.norm() < 1.0 - INTERIOR_MARGIN
    }

    pub fn on_boundary(&self) -> bool {
        (self.norm() - 1.0).abs() <= SPHERE_SLACK
    }

    pub fn distance(&self, other: &BallPoint) -> f64 {
        (&self.coords - &other.coords).norm()
    }

    pub fn coord(&self, j: usize) -> C64 {
        self.coords[j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_predicate_uses_margin() {
        let p = BallPoint::from_reals(&[1.0 - 1e-13, 0.0]).unwrap();
        assert!(!p.is_interior());
        assert!(p.on_boundary());
        let q = BallPoint::from_reals(&[0.5, 0.5]).unwrap();
        assert!(q.is_interior());
    }

    #[test]
    fn rejects_points_outside() {
        assert!(matches!(
            BallPoint::from_reals(&[0.9, 0.9]),
            Err(Error::PointOutsideBall { .. })
        ));
    }
}
