//! Fixed points and type of a ball automorphism, read off from the
//! spectral data of its lift.
//!
//! Fixed points of the projective action are eigenlines of the lift. A
//! negative eigenvector (for the form `J`) gives an interior fixed point,
//! a null eigenvector gives a boundary fixed point. Eigenvalues are grouped
//! with a loose tolerance first so that Jordan blocks, whose computed
//! eigenvalues scatter by roughly `eps^(1/size)`, are handled through their
//! generalised eigenspace rather than through individual eigenvectors.

use crate::error::{Error, Result};
use crate::linalg::{
    eigenvalues, form_j, hermitian_eigen, orthonormal_columns, right_singular_ascending,
    spectral_norm, CMat, CVec, C64,
};

use super::automorphism::MobiusAutomorphism;
use super::lift::{chart, AutomorphismLift};
use super::point::BallPoint;

/// Maximum allowed `|phi(p) - p|` for a reported fixed point.
pub const FIXED_RESIDUAL_TOL: f64 = 1e-9;
const CLUSTER_TOL: f64 = 1e-3;
const NEGATIVE_TOL: f64 = 1e-9;
const NULL_TOL: f64 = 1e-6;
const UNIT_MODULUS_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AutType {
    Identity,
    Elliptic,
    Parabolic,
    Hyperbolic,
}

impl AutType {
    pub fn as_str(&self) -> &'static str {
        match self {
            AutType::Identity => "identity",
            AutType::Elliptic => "elliptic",
            AutType::Parabolic => "parabolic",
            AutType::Hyperbolic => "hyperbolic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "identity" => Some(AutType::Identity),
            "elliptic" => Some(AutType::Elliptic),
            "parabolic" => Some(AutType::Parabolic),
            "hyperbolic" => Some(AutType::Hyperbolic),
            _ => None,
        }
    }
}

/// The interior fixed set `F_0`: a complex affine slice of the ball,
/// `{ base + sum t_k d_k } ∩ B_n` with orthonormal directions `d_k`.
/// `base` is the point of the slice closest to the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineFixedSet {
    pub base: BallPoint,
    pub directions: Vec<CVec>,
}

impl AffineFixedSet {
    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    /// Euclidean distance from `z` to the affine span.
    pub fn distance_to_span(&self, z: &CVec) -> f64 {
        let mut r = z - self.base.coords();
        for d in &self.directions {
            let c = d.dotc(&r);
            r -= d * c;
        }
        r.norm()
    }

    /// Membership in the closure of the slice inside the closed ball.
    pub fn contains(&self, z: &CVec, tol: f64) -> bool {
        z.norm() <= 1.0 + tol && self.distance_to_span(z) <= tol
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointData {
    pub interior: Option<AffineFixedSet>,
    pub boundary_points: Vec<BallPoint>,
    pub type_tag: AutType,
}

impl FixedPointData {
    /// Whether `z` lies in `Fix(phi)` according to this census.
    pub fn contains(&self, z: &CVec, tol: f64) -> bool {
        if let Some(set) = &self.interior {
            if set.contains(z, tol) {
                return true;
            }
        }
        self.boundary_points
            .iter()
            .any(|p| (p.coords() - z).norm() <= tol)
    }

    pub fn interior_dim(&self) -> Option<usize> {
        self.interior.as_ref().map(|s| s.dim())
    }
}

/// Spectral summary used by classification and the conjugacy decision.
#[derive(Clone, Debug)]
pub(crate) enum Spectral {
    Identity,
    Elliptic,
    Hyperbolic {
        attracting: (C64, CVec),
        repelling: (C64, CVec),
    },
    Parabolic {
        eigenvalue: C64,
        null_vector: CVec,
        jordan: usize,
    },
}

#[derive(Clone, Debug)]
pub(crate) struct Analysis {
    pub lift: AutomorphismLift,
    pub data: FixedPointData,
    pub spectral: Spectral,
}

#[derive(Clone, Debug)]
enum Piece {
    Semisimple {
        eigenvalue: C64,
        basis: CMat,
    },
    Jordan {
        eigenvalue: C64,
        index: usize,
        top: CVec,
    },
}

fn cluster(values: &[C64], tol: f64) -> Vec<Vec<usize>> {
    // single linkage
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() <= tol {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = find(&mut label, i);
        match roots.iter().position(|&x| x == r) {
            Some(k) => groups[k].push(i),
            None => {
                roots.push(r);
                groups.push(vec![i]);
            }
        }
    }
    groups
}

fn smallest_singular_basis(m: &CMat, count: usize) -> CMat {
    let (_, v) = right_singular_ascending(m);
    v.columns(0, count).into_owned()
}

fn spectral_pieces(m: &CMat) -> Result<Vec<Piece>> {
    let size = m.nrows();
    let scale = spectral_norm(m).max(1.0);
    let mut out = Vec::new();
    split(m, &CMat::identity(size, size), CLUSTER_TOL, scale, &mut out)?;
    for piece in out.iter_mut() {
        if let Piece::Jordan {
            eigenvalue, top, ..
        } = piece
        {
            *top = refine_eigenvector(m, *eigenvalue, top, scale);
        }
    }
    Ok(out)
}

/// Splits the invariant subspace spanned by `basis` (on which the operator
/// acts as `m`) into semisimple eigenspaces and Jordan chains. Clusters that
/// are neither are re-clustered with a tighter tolerance.
fn split(m: &CMat, basis: &CMat, tol: f64, scale: f64, out: &mut Vec<Piece>) -> Result<()> {
    let size = m.nrows();
    let values = eigenvalues(m)?;
    for group in cluster(&values, tol) {
        let k = group.len();
        let mean: C64 = group.iter().map(|&i| values[i]).sum::<C64>() / k as f64;
        let shifted = m - CMat::identity(size, size) * mean;
        let mut power = shifted.clone();
        for _ in 1..k {
            power = &power * &shifted;
        }
        let q = smallest_singular_basis(&power, k);
        let q = CMat::from_columns(&orthonormal_columns(&q, 1e-10));
        if q.ncols() != k {
            return Err(Error::DegenerateEigenproblem(
                "generalised eigenspace lost rank".into(),
            ));
        }
        let b = q.adjoint() * m * &q;
        let global = basis * &q;
        let mu = b.trace() / k as f64;
        let nil = &b - CMat::identity(k, k) * mu;
        let nil_norm = spectral_norm(&nil);
        if nil_norm <= 1e-8 * scale {
            out.push(Piece::Semisimple {
                eigenvalue: mu,
                basis: global,
            });
            continue;
        }
        let mut index = None;
        let mut p = nil.clone();
        for e in 2..=k {
            let prev = p.clone();
            p = &p * &nil;
            if spectral_norm(&p) <= 1e-8 * nil_norm.powi(e as i32) {
                index = Some((e, prev));
                break;
            }
        }
        if let Some((e, prev)) = index {
            let (_, left) = right_singular_ascending(&prev.adjoint());
            let local = left.column(left.ncols() - 1).into_owned();
            out.push(Piece::Jordan {
                eigenvalue: mu,
                index: e,
                top: &global * local,
            });
        } else if k == 1 || tol < 1e-9 {
            return Err(Error::DegenerateEigenproblem(
                "could not separate an eigenvalue cluster".into(),
            ));
        } else {
            split(&b, &global, tol * 0.1, scale, out)?;
        }
    }
    Ok(())
}

/// Recomputes the eigenvector of a Jordan chain from `ker(M - mu)` in the
/// full space. The image of `N^(e-1)` is only as accurate as the
/// generalised eigenspace, which degrades when another eigenvalue is near.
/// A kernel of dimension above one is a Jordan chain merged with a
/// semisimple part; the chain's eigenvector is then the radical of the
/// form restricted to the kernel.
fn refine_eigenvector(m: &CMat, mu: C64, fallback: &CVec, scale: f64) -> CVec {
    let size = m.nrows();
    let (sv, right) = right_singular_ascending(&(m - CMat::identity(size, size) * mu));
    let dim = sv.iter().filter(|&&x| x <= 1e-8 * scale).count();
    match dim {
        0 => fallback.clone(),
        1 => right.column(0).into_owned(),
        _ => {
            let ker = right.columns(0, dim).into_owned();
            let h = ker.adjoint() * form_j(size - 1) * &ker;
            let (vals, vecs) = hermitian_eigen(&h);
            let i = (0..dim)
                .min_by(|&a, &b| vals[a].abs().partial_cmp(&vals[b].abs()).unwrap())
                .unwrap();
            &ker * vecs.column(i)
        }
    }
}

fn j_norm(v: &CVec) -> f64 {
    let n = v.len() - 1;
    v.rows(0, n).norm_squared() - v[n].norm_sqr()
}

fn boundary_point_from(v: &CVec) -> Result<BallPoint> {
    BallPoint::on_sphere(chart(v))
}

fn check_residual(phi: &MobiusAutomorphism, p: &BallPoint) -> Result<()> {
    let r = (phi.map_vec(p.coords()) - p.coords()).norm();
    if r > FIXED_RESIDUAL_TOL || !r.is_finite() {
        return Err(Error::DegenerateEigenproblem(format!(
            "fixed point residual {r:e} exceeds tolerance"
        )));
    }
    Ok(())
}

fn interior_set(basis: &CMat) -> Result<Option<AffineFixedSet>> {
    let n = basis.nrows() - 1;
    let e = CMat::from_columns(&orthonormal_columns(basis, 1e-10));
    let j = form_j(n);
    let h = e.adjoint() * &j * &e;
    let (vals, vecs) = hermitian_eigen(&h);
    if vals[0] >= -NEGATIVE_TOL {
        return Ok(None);
    }
    let v = &e * vecs.column(0);
    let p = chart(&v);
    // directions: the part of the eigenspace with vanishing last coordinate
    let last_row = e.row(n).into_owned();
    let (sv, null) = right_singular_ascending(&CMat::from_rows(&[last_row]));
    let mut dirs_raw = Vec::new();
    for (k, s) in sv.iter().enumerate() {
        if *s <= 1e-12 {
            let x = &e * null.column(k);
            dirs_raw.push(x.rows(0, n).into_owned());
        }
    }
    let directions = if dirs_raw.is_empty() {
        Vec::new()
    } else {
        orthonormal_columns(&CMat::from_columns(&dirs_raw), 1e-10)
    };
    let mut base = p;
    for d in &directions {
        let c = d.dotc(&base);
        base -= d * c;
    }
    Ok(Some(AffineFixedSet {
        base: BallPoint::new(base)?,
        directions,
    }))
}

/// Newton iterations on `phi(z) = z` with the exact Jacobian
/// `(A - phi(z) c^T) / s` read off the lift `[[A, b], [c^T, d]]`.
/// Least-squares steps, so a positive-dimensional fixed set is fine.
fn polish_fixed_point(phi: &MobiusAutomorphism, lift: &AutomorphismLift, p: &CVec) -> CVec {
    let n = p.len();
    let m = lift.matrix();
    let a = m.view((0, 0), (n, n)).into_owned();
    let c = m.view((n, 0), (1, n)).into_owned();
    let residual = |z: &CVec| (phi.map_vec(z) - z).norm();
    let mut best = p.clone();
    let mut best_r = residual(p);
    let mut z = p.clone();
    for _ in 0..6 {
        if best_r <= 1e-15 {
            break;
        }
        let mut h = CVec::zeros(n + 1);
        h.rows_mut(0, n).copy_from(&z);
        h[n] = C64::from(1.0);
        let w = m * &h;
        let image = w.rows(0, n) / w[n];
        let jac = (&a - &image * &c) / w[n];
        let lhs = CMat::identity(n, n) - jac;
        let Ok(step) = lhs.svd(true, true).solve(&(&image - &z), 1e-10) else {
            break;
        };
        z += step;
        if z.norm() >= 1.0 {
            break;
        }
        let r = residual(&z);
        if r < best_r {
            best = z.clone();
            best_r = r;
        }
    }
    best
}

pub(crate) fn analyze(phi: &MobiusAutomorphism) -> Result<Analysis> {
    let n = phi.dim();
    let lift = phi.lift()?;
    if phi.is_identity() {
        let directions = (0..n)
            .map(|i| {
                let mut e = CVec::zeros(n);
                e[i] = C64::from(1.0);
                e
            })
            .collect();
        return Ok(Analysis {
            lift,
            data: FixedPointData {
                interior: Some(AffineFixedSet {
                    base: BallPoint::origin(n),
                    directions,
                }),
                boundary_points: Vec::new(),
                type_tag: AutType::Identity,
            },
            spectral: Spectral::Identity,
        });
    }
    let pieces = spectral_pieces(lift.matrix())?;

    for piece in &pieces {
        if let Piece::Semisimple { basis, .. } = piece {
            if let Some(mut set) = interior_set(basis)? {
                let polished = polish_fixed_point(phi, &lift, set.base.coords());
                set.base = BallPoint::new(polished)?;
                check_residual(phi, &set.base)?;
                return Ok(Analysis {
                    lift,
                    data: FixedPointData {
                        interior: Some(set),
                        boundary_points: Vec::new(),
                        type_tag: AutType::Elliptic,
                    },
                    spectral: Spectral::Elliptic,
                });
            }
        }
    }

    let off_circle: Vec<(C64, CVec)> = pieces
        .iter()
        .filter_map(|p| match p {
            Piece::Semisimple { eigenvalue, basis }
                if (eigenvalue.norm() - 1.0).abs() > UNIT_MODULUS_TOL =>
            {
                Some((*eigenvalue, basis.column(0).into_owned()))
            }
            _ => None,
        })
        .collect();
    if !off_circle.is_empty() {
        if off_circle.len() != 2 {
            return Err(Error::DegenerateEigenproblem(format!(
                "expected two eigenvalues off the unit circle, found {}",
                off_circle.len()
            )));
        }
        let (mut att, mut rep) = (off_circle[0].clone(), off_circle[1].clone());
        if att.0.norm() < rep.0.norm() {
            std::mem::swap(&mut att, &mut rep);
        }
        let mut points = Vec::new();
        for (_, v) in [&att, &rep] {
            let v = v / C64::from(v.norm());
            if j_norm(&v).abs() > NULL_TOL {
                return Err(Error::DegenerateEigenproblem(
                    "loxodromic eigenvector is not null".into(),
                ));
            }
            let p = boundary_point_from(&v)?;
            check_residual(phi, &p)?;
            points.push(p);
        }
        return Ok(Analysis {
            lift,
            data: FixedPointData {
                interior: None,
                boundary_points: points,
                type_tag: AutType::Hyperbolic,
            },
            spectral: Spectral::Hyperbolic {
                attracting: att,
                repelling: rep,
            },
        });
    }

    for piece in &pieces {
        if let Piece::Jordan {
            eigenvalue,
            index,
            top,
        } = piece
        {
            let v = top / C64::from(top.norm());
            if j_norm(&v).abs() > NULL_TOL {
                continue;
            }
            let p = boundary_point_from(&v)?;
            check_residual(phi, &p)?;
            return Ok(Analysis {
                lift,
                data: FixedPointData {
                    interior: None,
                    boundary_points: vec![p],
                    type_tag: AutType::Parabolic,
                },
                spectral: Spectral::Parabolic {
                    eigenvalue: *eigenvalue,
                    null_vector: v,
                    jordan: *index,
                },
            });
        }
    }
    Err(Error::DegenerateEigenproblem(
        "no fixed point found in the closed ball".into(),
    ))
}

impl MobiusAutomorphism {
    pub fn fixed_points(&self) -> Result<FixedPointData> {
        Ok(analyze(self)?.data)
    }

    pub fn classify(&self) -> Result<AutType> {
        Ok(analyze(self)?.data.type_tag)
    }
}

/// Largest `|phi(p) - p|` over the reported points of a census, sampling a
/// few points of the interior slice when there is one.
pub fn fixed_point_residual(phi: &MobiusAutomorphism, data: &FixedPointData) -> f64 {
    let mut pts: Vec<CVec> = data
        .boundary_points
        .iter()
        .map(|p| p.coords().clone())
        .collect();
    if let Some(set) = &data.interior {
        pts.push(set.base.coords().clone());
        let room = (1.0 - set.base.norm_sq_clamped()).sqrt();
        for (k, d) in set.directions.iter().enumerate() {
            let t = 0.5 * room * if k % 2 == 0 { 1.0 } else { -1.0 };
            pts.push(set.base.coords() + d * C64::new(t, 0.3 * t));
        }
    }
    pts.iter()
        .filter(|p| p.norm() <= 1.0)
        .map(|p| (phi.map_vec(p) - p).norm())
        .fold(0.0, f64::max)
}

impl BallPoint {
    fn norm_sq_clamped(&self) -> f64 {
        self.coords().norm_squared().min(1.0)
    }
}
