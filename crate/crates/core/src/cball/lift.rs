use crate::error::{Error, Result};
use crate::linalg::{form_j, max_abs, CMat, CVec, C64, ONE};

use super::automorphism::MobiusAutomorphism;

/// Residual allowed in `M* J M = J` after normalisation.
pub const FORM_TOL: f64 = 1e-8;

/// Linear model of an automorphism: an `(n+1) x (n+1)` matrix preserving
/// the form `J = diag(1, ..., 1, -1)`, acting on the affine chart
/// `z -> (z, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AutomorphismLift {
    n: usize,
    matrix: CMat,
}

impl AutomorphismLift {
    /// Validates `M* J M = c J` with `c > 0` and rescales so that `c = 1`.
    pub fn new(matrix: CMat) -> Result<Self> {
        let size = matrix.nrows();
        if size < 2 || matrix.ncols() != size {
            return Err(Error::WrongShape(format!(
                "lift must be square of size >= 2, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let n = size - 1;
        let j = form_j(n);
        let g = matrix.adjoint() * &j * &matrix;
        let c = -g[(n, n)].re;
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::NormalizationFailure {
                residual: f64::INFINITY,
            });
        }
        let matrix = matrix / C64::from(c.sqrt());
        let residual = max_abs(&(matrix.adjoint() * &j * &matrix - &j));
        if residual > FORM_TOL {
            return Err(Error::NormalizationFailure { residual });
        }
        Ok(Self { n, matrix })
    }

    pub(crate) fn from_automorphism(phi: &MobiusAutomorphism) -> Result<Self> {
        let n = phi.dim();
        let a = phi.center().coords();
        let a2 = a.norm_squared();
        let s = (1.0 - a2).sqrt();
        let mut m = CMat::zeros(n + 1, n + 1);
        // block [[P_a + s Q_a, -a], [-a*, 1]] lifts the centred map m_a
        for i in 0..n {
            for k in 0..n {
                let p = if a2 > 0.0 {
                    a[i] * a[k].conj() / a2
                } else {
                    C64::from(0.0)
                };
                let q = if i == k { ONE - p } else { -p };
                m[(i, k)] = p + q * s;
            }
            m[(i, n)] = -a[i];
            m[(n, i)] = -a[i].conj();
        }
        m[(n, n)] = ONE;
        let mut u = CMat::identity(n + 1, n + 1);
        u.view_mut((0, 0), (n, n)).copy_from(phi.unitary_part());
        Self::new(u * m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// Projective action on the chart `x_{n+1} = 1`.
    pub fn apply_chart(&self, z: &CVec) -> CVec {
        let mut v = CVec::zeros(self.n + 1);
        v.rows_mut(0, self.n).copy_from(z);
        v[self.n] = ONE;
        let w = &self.matrix * v;
        chart(&w)
    }

    pub fn compose(&self, other: &AutomorphismLift) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Self::new(&self.matrix * &other.matrix)
    }

    pub fn inverse(&self) -> Self {
        let j = form_j(self.n);
        Self {
            n: self.n,
            matrix: &j * self.matrix.adjoint() * &j,
        }
    }

    pub fn to_automorphism(&self) -> Result<MobiusAutomorphism> {
        let n = self.n;
        let inv = self.inverse();
        let center = inv.apply_chart(&CVec::zeros(n));
        MobiusAutomorphism::canonicalize(n, |z| self.apply_chart(z), center)
    }
}

/// Dehomogenise `(x, x_{n+1}) -> x / x_{n+1}`.
pub(crate) fn chart(w: &CVec) -> CVec {
    let n = w.len() - 1;
    let d = w[n];
    w.rows(0, n).into_owned() / d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cball::BallPoint;
    use crate::linalg::c64;

    #[test]
    fn identity_lifts_to_identity() {
        let l = MobiusAutomorphism::identity(3).lift().unwrap();
        assert!(max_abs(&(l.matrix() - CMat::identity(4, 4))) < 1e-15);
    }

    #[test]
    fn unitary_lifts_block_diagonally() {
        let u = CMat::from_row_slice(2, 2, &[c64(0.0, 1.0), ONE * 0.0, ONE * 0.0, ONE]);
        let l = MobiusAutomorphism::from_unitary(u.clone())
            .unwrap()
            .lift()
            .unwrap();
        let mut expect = CMat::identity(3, 3);
        expect.view_mut((0, 0), (2, 2)).copy_from(&u);
        assert!(max_abs(&(l.matrix() - expect)) < 1e-15);
    }

    #[test]
    fn chart_action_matches_involution() {
        let a = BallPoint::from_slice(&[c64(0.3, -0.2), c64(0.1, 0.5)]).unwrap();
        let phi = MobiusAutomorphism::involution(&a).unwrap();
        let l = phi.lift().unwrap();
        for z in MobiusAutomorphism::probe_points(2, 16) {
            assert!((l.apply_chart(&z) - phi.map_vec(&z)).norm() < 1e-13);
        }
    }

    #[test]
    fn round_trip_through_lift() {
        let a = BallPoint::from_slice(&[c64(0.3, -0.2), c64(0.1, 0.5)]).unwrap();
        let u = CMat::from_row_slice(2, 2, &[c64(0.0, 1.0), ONE * 0.0, ONE * 0.0, -ONE]);
        let phi = MobiusAutomorphism::new(u, a).unwrap();
        let back = phi.lift().unwrap().to_automorphism().unwrap();
        assert!(back.center().distance(phi.center()) < 1e-13);
        assert!(max_abs(&(back.unitary_part() - phi.unitary_part())) < 1e-13);
    }

    #[test]
    fn rejects_non_form_preserving() {
        let m = CMat::from_row_slice(2, 2, &[ONE * 2.0, ONE * 0.0, ONE * 0.0, ONE]);
        assert!(matches!(
            AutomorphismLift::new(m),
            Err(Error::NormalizationFailure { .. })
        ));
    }
}
