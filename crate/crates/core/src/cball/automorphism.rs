use crate::error::{Error, Result};
use crate::linalg::{inner, nearest_unitary, unitarity_defect, CMat, CVec, C64, ONE};

use super::lift::AutomorphismLift;
use super::point::BallPoint;

/// Tolerance on `U* U - I` for the unitary part.
pub const UNITARY_TOL: f64 = 1e-10;
/// Probe residual below which a map is treated as the identity.
pub const IDENTITY_TOL: f64 = 1e-10;

/// A conformal automorphism of the unit ball `B_n`, stored in the canonical
/// form `z -> U m_a(z)`.
///
/// Here `m_a = -phi_a` is the centred Möbius map sending `a` to `0`
/// (`m_0` is the identity) and `phi_a` is the standard involution
/// `phi_a(z) = (a - P_a z - s_a Q_a z) / (1 - <z, a>)`. With this
/// normalisation a zero center means the automorphism is the linear map `U`.
#[derive(Clone, Debug, PartialEq)]
pub struct MobiusAutomorphism {
    n: usize,
    unitary: CMat,
    center: BallPoint,
}

/// The standard involution `phi_a` evaluated on a raw vector.
pub(crate) fn involution_apply(a: &CVec, z: &CVec) -> CVec {
    let a2 = a.norm_squared();
    if a2 == 0.0 {
        return -z;
    }
    let za = inner(z, a);
    let pz = a * (za / a2);
    let qz = z - &pz;
    let s = (1.0 - a2).sqrt();
    (a - pz - qz * C64::from(s)) / (ONE - za)
}

impl MobiusAutomorphism {
    pub fn new(unitary: CMat, center: BallPoint) -> Result<Self> {
        let n = center.dim();
        if unitary.nrows() != n || unitary.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: unitary.nrows(),
            });
        }
        let deviation = unitarity_defect(&unitary);
        if deviation > UNITARY_TOL || !deviation.is_finite() {
            return Err(Error::NotUnitary { deviation });
        }
        if !center.is_interior() {
            return Err(Error::CenterNotInterior {
                norm: center.norm(),
            });
        }
        Ok(Self { n, unitary, center })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            unitary: CMat::identity(n, n),
            center: BallPoint::origin(n),
        }
    }

    /// The linear automorphism `z -> U z`.
    pub fn from_unitary(unitary: CMat) -> Result<Self> {
        let n = unitary.nrows();
        Self::new(unitary, BallPoint::origin(n))
    }

    /// The involution `phi_a`, which swaps `a` and `0`.
    pub fn involution(a: &BallPoint) -> Result<Self> {
        if !a.is_interior() {
            return Err(Error::CenterNotInterior { norm: a.norm() });
        }
        let n = a.dim();
        Ok(Self {
            n,
            unitary: -CMat::identity(n, n),
            center: a.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn unitary_part(&self) -> &CMat {
        &self.unitary
    }

    pub fn center(&self) -> &BallPoint {
        &self.center
    }

    pub(crate) fn map_vec(&self, z: &CVec) -> CVec {
        let m = -involution_apply(self.center.coords(), z);
        &self.unitary * m
    }

    pub(crate) fn inverse_map_vec(&self, w: &CVec) -> CVec {
        let m = self.unitary.adjoint() * w;
        involution_apply(self.center.coords(), &(-m))
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found,
            });
        }
        Ok(())
    }

    pub fn apply(&self, z: &BallPoint) -> Result<BallPoint> {
        self.check_dim(z.dim())?;
        BallPoint::new(self.map_vec(z.coords()))
    }

    pub fn apply_inverse(&self, z: &BallPoint) -> Result<BallPoint> {
        self.check_dim(z.dim())?;
        BallPoint::new(self.inverse_map_vec(z.coords()))
    }

    /// Rebuilds the canonical form of a map from its action and the point
    /// it sends to the origin. An automorphism fixing 0 is linear, so the
    /// unitary part is read off exactly from images of `e_i / 2`.
    pub(crate) fn canonicalize<F>(n: usize, forward: F, center: CVec) -> Result<Self>
    where
        F: Fn(&CVec) -> CVec,
    {
        let mut u = CMat::zeros(n, n);
        for i in 0..n {
            let mut e = CVec::zeros(n);
            e[i] = C64::new(-0.5, 0.0);
            let pre = involution_apply(&center, &e);
            let col = forward(&pre) * C64::from(2.0);
            u.set_column(i, &col);
        }
        let deviation = unitarity_defect(&u);
        if deviation > 1e-6 || !deviation.is_finite() {
            return Err(Error::NotUnitary { deviation });
        }
        let center = BallPoint::new(center)?;
        Self::new(nearest_unitary(&u), center)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MobiusAutomorphism) -> Result<Self> {
        self.check_dim(other.n)?;
        let zero = CVec::zeros(self.n);
        let center = other.inverse_map_vec(&self.inverse_map_vec(&zero));
        Self::canonicalize(self.n, |z| self.map_vec(&other.map_vec(z)), center)
    }

    pub fn inverse(&self) -> Self {
        let center = self.map_vec(&CVec::zeros(self.n));
        Self::canonicalize(self.n, |z| self.inverse_map_vec(z), center)
            .expect("inverse of a valid automorphism is valid")
    }

    /// `self ∘ g ∘ self^{-1}`.
    pub fn conjugate(&self, g: &MobiusAutomorphism) -> Result<Self> {
        self.compose(g)?.compose(&self.inverse())
    }

    pub fn lift(&self) -> Result<AutomorphismLift> {
        AutomorphismLift::from_automorphism(self)
    }

    /// Fixed deterministic probe set used for identity detection and
    /// certificate checks.
    pub fn probe_points(n: usize, count: usize) -> Vec<CVec> {
        (0..count)
            .map(|k| {
                let mut v = CVec::zeros(n);
                for j in 0..n {
                    let t = (k * 7 + j * 3 + 1) as f64;
                    v[j] = C64::new((t * 0.731).sin(), (t * 1.377).cos());
                }
                let r = 0.9 * ((k % 5) as f64 + 1.0) / 5.0;
                let nv = v.norm();
                v * C64::from(r / nv)
            })
            .collect()
    }

    /// Supremum of `|self(z) - other(z)|` over a probe set.
    pub fn sup_distance(&self, other: &MobiusAutomorphism, probes: &[CVec]) -> f64 {
        probes
            .iter()
            .map(|z| (self.map_vec(z) - other.map_vec(z)).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_identity(&self) -> bool {
        let probes = Self::probe_points(self.n, 16);
        self.sup_distance(&Self::identity(self.n), &probes) <= IDENTITY_TOL
    }
}
