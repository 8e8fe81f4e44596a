//! The semicrossed product of the noncommutative disc algebra by an
//! automorphism: characters and maximal analytic sets, covariant pairs,
//! 2x2 s-representations, zero-U certificates, the ideal generated by `U`
//! and the isomorphism decision.
//!
//! An element `sum_m U^m A_m` is represented by its coefficients; a
//! covariant pair `(pi, K)` evaluates it as `sum_m K^m pi(A_m)` and must
//! satisfy `pi(A) K = K pi(phi(A))`. Here `phi(A)` is `A` composed with the
//! automorphism acting on the ball, so `theta_z(phi(A)) = A(phi(z))`.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cball::{
    are_conjugate, AffineFixedSet, AutType, BallPoint, ConjugacyVerdict, MobiusAutomorphism,
    Verdict,
};
use crate::error::{Error, Result};
use crate::freepoly::{FreePolynomial, MatrixTuple, Word, ROW_CONTRACTION_SLACK};
use crate::linalg::{inner, max_abs, spectral_norm, CMat, CVec, C64, ONE, ZERO};
use crate::nestrep::{separate, PointSequence, SeparationWitness};

/// A character `theta_{z, lambda}` with `lambda != 0` needs `phi(z) = z` to
/// this accuracy.
pub const CHARACTER_TOL: f64 = 1e-10;
/// Point residual below which two points are treated as equal.
pub const POINT_TOL: f64 = 1e-8;
/// Strict contraction margin used when scaling s-representations.
pub const SREP_MARGIN: f64 = 1e-6;
/// Allowed excess of `||K||` over 1.
pub const CONTRACTION_SLACK: f64 = 1e-12;
/// Interpolation identities of zero-U witnesses hold to this accuracy.
pub const INTERPOLATION_TOL: f64 = 1e-12;

/// The character `theta_{z, lambda}`: `S_j -> z_j`, `U -> lambda`.
#[derive(Clone, Debug, PartialEq)]
pub struct Character {
    pub z: BallPoint,
    pub lambda: C64,
}

impl Character {
    pub fn new(z: BallPoint, lambda: C64) -> Result<Self> {
        if lambda.norm() > 1.0 + CONTRACTION_SLACK {
            return Err(Error::InvalidArgument(format!(
                "|lambda| = {} exceeds 1",
                lambda.norm()
            )));
        }
        Ok(Self { z, lambda })
    }

    pub fn is_valid_for(&self, phi: &MobiusAutomorphism) -> bool {
        character_valid(phi, &self.z, self.lambda)
    }

    /// `sum_m lambda^m A_m(z)`.
    pub fn eval(&self, x: &SemicrossedElement) -> Result<C64> {
        let mut total = ZERO;
        for (&m, a) in x.coeffs() {
            total += self.lambda.powu(m as u32) * a.eval_point(&self.z)?;
        }
        Ok(total)
    }
}

/// `(z, lambda)` is a character exactly when `lambda = 0` or `z` is fixed.
pub fn character_valid(phi: &MobiusAutomorphism, z: &BallPoint, lambda: C64) -> bool {
    if lambda == ZERO {
        return true;
    }
    if phi.dim() != z.dim() {
        return false;
    }
    (phi.map_vec(z.coords()) - z.coords()).norm() <= CHARACTER_TOL
}

/// `sum_m U^m A_m` with finitely many nonzero coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SemicrossedElement {
    n: usize,
    coeffs: BTreeMap<usize, FreePolynomial>,
}

impl SemicrossedElement {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            coeffs: BTreeMap::new(),
        }
    }

    /// `A` as the element `U^0 A`.
    pub fn from_poly(a: FreePolynomial) -> Self {
        let n = a.n();
        Self::from_terms(n, [(0, a)]).expect("same alphabet")
    }

    /// `U^m A`.
    pub fn u_power(m: usize, a: FreePolynomial) -> Self {
        let n = a.n();
        Self::from_terms(n, [(m, a)]).expect("same alphabet")
    }

    /// Sums coefficients of equal powers and drops zero polynomials.
    pub fn from_terms(
        n: usize,
        terms: impl IntoIterator<Item = (usize, FreePolynomial)>,
    ) -> Result<Self> {
        let mut x = Self::zero(n);
        for (m, a) in terms {
            if a.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: a.n(),
                });
            }
            x.add_coeff(m, a)?;
        }
        Ok(x)
    }

    fn add_coeff(&mut self, m: usize, a: FreePolynomial) -> Result<()> {
        match self.coeffs.entry(m) {
            Entry::Occupied(mut o) => {
                let sum = o.get().try_add(&a)?;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
            Entry::Vacant(v) => {
                if !a.is_zero() {
                    v.insert(a);
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &BTreeMap<usize, FreePolynomial> {
        &self.coeffs
    }

    /// `A_m`, zero when absent.
    pub fn coeff(&self, m: usize) -> FreePolynomial {
        self.coeffs
            .get(&m)
            .cloned()
            .unwrap_or_else(|| FreePolynomial::zero(self.n))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_power(&self) -> Option<usize> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        let mut x = self.clone();
        if other.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        for (&m, a) in &other.coeffs {
            x.add_coeff(m, a.clone())?;
        }
        Ok(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AnalyticSetKind {
    /// `B_n x {0}`
    BallZero,
    /// `F_0 x D`
    FixDisk,
    /// `F_0 x {lambda}`, one set for each `lambda` on the circle
    FixCircleFiber,
    /// `{x} x D` for a boundary fixed point `x`
    BoundaryDisk,
}

impl AnalyticSetKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AnalyticSetKind::BallZero => "BallZero",
            AnalyticSetKind::FixDisk => "FixDisk",
            AnalyticSetKind::FixCircleFiber => "FixCircleFiber",
            AnalyticSetKind::BoundaryDisk => "BoundaryDisk",
        }
    }
}

/// Whether a descriptor stands for one set or a family of them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SetFamily {
    Single,
    /// indexed by `lambda` on the unit circle
    Circle,
    /// indexed by the boundary sphere of `F_0`
    BoundaryOfFixedSet,
}

impl SetFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            SetFamily::Single => "single",
            SetFamily::Circle => "circle",
            SetFamily::BoundaryOfFixedSet => "boundary_of_fixed_set",
        }
    }
}

/// A maximal analytic set in the character space.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticSetDescriptor {
    pub kind: AnalyticSetKind,
    pub dim: usize,
    pub family: SetFamily,
    pub fixed_set: Option<AffineFixedSet>,
    pub boundary_point: Option<BallPoint>,
}

impl AnalyticSetDescriptor {
    fn new(kind: AnalyticSetKind, dim: usize, family: SetFamily) -> Self {
        Self {
            kind,
            dim,
            family,
            fixed_set: None,
            boundary_point: None,
        }
    }
}

/// The maximal analytic sets: `B_n x {0}`, `F_0 x D`, `F_0 x {lambda}` and
/// `{x} x D` for boundary fixed points `x`. For the identity the only one
/// is `B_n x D`.
///
/// When `F_0` has positive dimension its closure meets the sphere in a
/// continuum of boundary fixed points, reported as a single family.
pub fn census(phi: &MobiusAutomorphism) -> Result<Vec<AnalyticSetDescriptor>> {
    let n = phi.dim();
    let data = phi.fixed_points()?;
    if data.type_tag == AutType::Identity {
        let whole = AffineFixedSet {
            base: BallPoint::origin(n),
            directions: (0..n)
                .map(|i| {
                    let mut e = CVec::zeros(n);
                    e[i] = ONE;
                    e
                })
                .collect(),
        };
        let mut top =
            AnalyticSetDescriptor::new(AnalyticSetKind::FixDisk, n + 1, SetFamily::Single);
        top.fixed_set = Some(whole);
        return Ok(vec![top]);
    }
    let mut out = vec![AnalyticSetDescriptor::new(
        AnalyticSetKind::BallZero,
        n,
        SetFamily::Single,
    )];
    if let Some(f0) = &data.interior {
        let f = f0.dim();
        let mut disk =
            AnalyticSetDescriptor::new(AnalyticSetKind::FixDisk, f + 1, SetFamily::Single);
        disk.fixed_set = Some(f0.clone());
        let mut fiber =
            AnalyticSetDescriptor::new(AnalyticSetKind::FixCircleFiber, f, SetFamily::Circle);
        fiber.fixed_set = Some(f0.clone());
        out.push(disk);
        out.push(fiber);
        if f >= 1 {
            let mut rim = AnalyticSetDescriptor::new(
                AnalyticSetKind::BoundaryDisk,
                1,
                SetFamily::BoundaryOfFixedSet,
            );
            rim.fixed_set = Some(f0.clone());
            out.push(rim);
        }
    }
    for x in &data.boundary_points {
        let mut d = AnalyticSetDescriptor::new(AnalyticSetKind::BoundaryDisk, 1, SetFamily::Single);
        d.boundary_point = Some(x.clone());
        out.push(d);
    }
    Ok(out)
}

/// True iff the unique top-dimensional set is `B_n x D`.
pub fn recognize_identity(census: &[AnalyticSetDescriptor]) -> bool {
    let Some(top) = census.iter().map(|d| d.dim).max() else {
        return false;
    };
    let tops: Vec<&AnalyticSetDescriptor> = census.iter().filter(|d| d.dim == top).collect();
    match tops.as_slice() {
        [d] => {
            d.kind == AnalyticSetKind::FixDisk
                && d.fixed_set
                    .as_ref()
                    .is_some_and(|f| f.dim() == f.base.dim() && d.dim == f.dim() + 1)
        }
        _ => false,
    }
}

/// A representation `pi` of the disc algebra, given by the generator
/// images, together with the image `K` of `U`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovariantPair {
    generator_images: MatrixTuple,
    k_image: CMat,
    diagonal_points: Option<Vec<BallPoint>>,
}

impl CovariantPair {
    pub fn new(
        generator_images: MatrixTuple,
        k_image: CMat,
        diagonal_points: Option<Vec<BallPoint>>,
    ) -> Result<Self> {
        let size = generator_images.size();
        if k_image.nrows() != size || k_image.ncols() != size {
            return Err(Error::WrongShape(format!(
                "K must be {size}x{size}, found {}x{}",
                k_image.nrows(),
                k_image.ncols()
            )));
        }
        let norm = generator_images.row_norm();
        if norm > 1.0 + ROW_CONTRACTION_SLACK {
            return Err(Error::NotRowContractive { norm });
        }
        let knorm = spectral_norm(&k_image);
        if knorm > 1.0 + CONTRACTION_SLACK {
            return Err(Error::NotContraction { norm: knorm });
        }
        if let Some(points) = &diagonal_points {
            if points.len() != size {
                return Err(Error::WrongPointCount {
                    expected: size,
                    found: points.len(),
                });
            }
            for p in points {
                if p.dim() != generator_images.n() {
                    return Err(Error::DimensionMismatch {
                        expected: generator_images.n(),
                        found: p.dim(),
                    });
                }
            }
        }
        Ok(Self {
            generator_images,
            k_image,
            diagonal_points,
        })
    }

    pub fn n(&self) -> usize {
        self.generator_images.n()
    }

    pub fn size(&self) -> usize {
        self.generator_images.size()
    }

    pub fn generator_images(&self) -> &MatrixTuple {
        &self.generator_images
    }

    pub fn k_image(&self) -> &CMat {
        &self.k_image
    }

    pub fn diagonal_points(&self) -> Option<&[BallPoint]> {
        self.diagonal_points.as_deref()
    }

    /// Covariance residual `max_j |pi(S_j) K - K pi(phi(S_j))|` when it is
    /// computable from the data: 2x2 pairs with `K = c E_12`, and pairs
    /// with diagonal generator images.
    pub fn covariance_residual(&self, phi: &MobiusAutomorphism) -> Option<f64> {
        let points = self.diagonal_points.as_ref()?;
        if phi.dim() != self.n() {
            return None;
        }
        if self.size() == 2 && is_strict_upper_2x2(&self.k_image) {
            return check_covariance_2x2(self, phi).ok();
        }
        let diagonal =
            self.generator_images.matrices().iter().all(|m| {
                (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == ZERO))
            });
        if !diagonal {
            return None;
        }
        let images: Vec<CVec> = points.iter().map(|p| phi.map_vec(p.coords())).collect();
        let mut worst: f64 = 0.0;
        for (j, g) in self.generator_images.matrices().iter().enumerate() {
            let twisted = CMat::from_diagonal(&CVec::from_iterator(
                images.len(),
                images.iter().map(|w| w[j]),
            ));
            worst = worst.max(max_abs(&(g * &self.k_image - &self.k_image * twisted)));
        }
        Some(worst)
    }
}

fn is_strict_upper_2x2(k: &CMat) -> bool {
    k[(0, 0)] == ZERO && k[(1, 0)] == ZERO && k[(1, 1)] == ZERO
}

fn check_dim(phi: &MobiusAutomorphism, n: usize) -> Result<()> {
    if phi.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: phi.dim(),
            found: n,
        });
    }
    Ok(())
}

/// A 2x2 s-representation `S_j -> [[phi(z)_j, b_j], [0, z_j]]`,
/// `U -> [[0, c], [0, 0]]`, with `b` and `c` scaled down when needed so
/// that both contraction constraints hold with margin.
pub fn build_srep(
    phi: &MobiusAutomorphism,
    z: &BallPoint,
    b: &CVec,
    c: C64,
) -> Result<CovariantPair> {
    build_srep_with_scale(phi, z, b, c).map(|(pair, _)| pair)
}

/// As [`build_srep`], also returning the factor applied to `b` and `c`.
pub fn build_srep_with_scale(
    phi: &MobiusAutomorphism,
    z: &BallPoint,
    b: &CVec,
    c: C64,
) -> Result<(CovariantPair, f64)> {
    let n = z.dim();
    check_dim(phi, n)?;
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    if c == ZERO {
        return Err(Error::ZeroC);
    }
    if !z.is_interior() {
        return Err(Error::PointOutsideBall { norm: z.norm() });
    }
    let w = phi.map_vec(z.coords());
    let residual = (&w - z.coords()).norm();
    if residual <= POINT_TOL {
        return Err(Error::PointIsFixed { residual });
    }
    let target = 1.0 - SREP_MARGIN;
    let base = w.norm().max(z.norm());
    if base > target {
        return Err(Error::TooCloseToBoundary { norm: base });
    }
    let assemble = |t: f64| {
        MatrixTuple::new(
            (0..n)
                .map(|j| CMat::from_row_slice(2, 2, &[w[j], b[j] * t, ZERO, z.coord(j)]))
                .collect(),
        )
        .expect("2x2 blocks")
    };
    let mut t = if assemble(1.0).row_norm() <= target {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if assemble(mid).row_norm() <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    t = t.min(target / c.norm());
    let mut k = CMat::zeros(2, 2);
    k[(0, 1)] = c * t;
    let gens = assemble(t);
    let points = vec![BallPoint::from_vec_unchecked(w), z.clone()];
    Ok((CovariantPair::new(gens, k, Some(points))?, t))
}

fn srep_parts(pair: &CovariantPair, phi: &MobiusAutomorphism) -> Result<(CVec, CVec, C64)> {
    check_dim(phi, pair.n())?;
    let points = pair
        .diagonal_points()
        .ok_or_else(|| Error::WrongShape("pair has no diagonal points".into()))?;
    if pair.size() != 2 || !is_strict_upper_2x2(pair.k_image()) {
        return Err(Error::WrongShape(
            "expected a 2x2 pair with K = c E_12".into(),
        ));
    }
    let first = points[0].coords().clone();
    let second = phi.map_vec(points[1].coords());
    Ok((first, second, pair.k_image()[(0, 1)]))
}

/// `max_j |theta_1_j c - c phi(theta_2)_j|`: the `(1, 2)` entry of the
/// covariance relation on each generator.
pub fn check_covariance_2x2(pair: &CovariantPair, phi: &MobiusAutomorphism) -> Result<f64> {
    let (first, image, c) = srep_parts(pair, phi)?;
    Ok(first
        .iter()
        .zip(image.iter())
        .map(|(x, y)| (x * c - c * y).norm())
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForcedRelation {
    pub holds: bool,
    pub gap: f64,
}

/// Compares `theta_1` with `phi(theta_2)`; covariance with `c != 0` forces
/// equality.
pub fn forced_theta_relation(
    pair: &CovariantPair,
    phi: &MobiusAutomorphism,
) -> Result<ForcedRelation> {
    let (first, image, c) = srep_parts(pair, phi)?;
    if c == ZERO {
        return Err(Error::ZeroC);
    }
    let gap = (first - image).norm();
    Ok(ForcedRelation {
        holds: gap <= POINT_TOL,
        gap,
    })
}

/// One step of the superdiagonal induction: with the entries of `rho(U)`
/// on lower superdiagonals already zero, the `(i, j)` entry of
/// `rho(A U - U phi(A))` reduces to `(A(z_i) - A(phi(z_j))) rho(U)_{ij}`.
#[derive(Clone, Debug, PartialEq)]
pub struct InductionStep {
    pub superdiagonal: usize,
    /// 1-based
    pub i: usize,
    /// 1-based
    pub j: usize,
    pub a_at_zi: C64,
    pub a_at_image_zj: C64,
}

impl InductionStep {
    pub fn pivot(&self) -> C64 {
        self.a_at_zi - self.a_at_image_zj
    }
}

/// Certificate that every nest representation with diagonal characters
/// `theta_{z_i, 0}` kills `U`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroUCertificate {
    pub points: Vec<BallPoint>,
    pub images: Vec<BallPoint>,
    /// 1-based `(i, j)` with `i < j`.
    pub witnesses: BTreeMap<(usize, usize), FreePolynomial>,
    pub transcript: Vec<InductionStep>,
}

/// Outcome of replaying the induction on a candidate image of `U`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayOutcome {
    /// Number of unknowns (strictly upper entries).
    pub unknowns: usize,
    /// Rank of the derived triangular system.
    pub rank: usize,
    pub min_pivot: f64,
    /// Largest violation of the covariance equations by the candidate.
    pub candidate_violation: f64,
    /// The unique solution of the derived system.
    pub forced: CMat,
    pub annihilated: bool,
}

/// Requires `||z_i - phi(z_j)|| > 1e-8` for all `i, j`.
pub fn zero_u_certificate(
    points: &[BallPoint],
    phi: &MobiusAutomorphism,
) -> Result<ZeroUCertificate> {
    for p in points {
        check_dim(phi, p.dim())?;
        if !p.is_interior() {
            return Err(Error::PointOutsideBall { norm: p.norm() });
        }
    }
    let n = phi.dim();
    let images: Vec<CVec> = points.iter().map(|p| phi.map_vec(p.coords())).collect();
    for (i, p) in points.iter().enumerate() {
        for (j, w) in images.iter().enumerate() {
            let distance = (p.coords() - w).norm();
            if distance <= POINT_TOL {
                return Err(Error::HypothesisViolated {
                    i: i + 1,
                    j: j + 1,
                    distance,
                });
            }
        }
    }
    let k = points.len();
    let mut witnesses = BTreeMap::new();
    let mut transcript = Vec::new();
    for d in 1..k {
        for i in 0..k - d {
            let j = i + d;
            let u = points[i].coords() - &images[j];
            let u2 = u.norm_squared();
            // A(z) = (<z, u> - <phi(z_j), u>) / |u|^2
            let mut terms: Vec<(Word, C64)> = (0..n)
                .map(|l| (Word::letter(l + 1), u[l].conj() / u2))
                .collect();
            terms.push((Word::empty(), -inner(&images[j], &u) / u2));
            let a = FreePolynomial::from_terms(n, terms)?;
            transcript.push(InductionStep {
                superdiagonal: d,
                i: i + 1,
                j: j + 1,
                a_at_zi: a.eval_vec(points[i].coords()),
                a_at_image_zj: a.eval_vec(&images[j]),
            });
            witnesses.insert((i + 1, j + 1), a);
        }
    }
    Ok(ZeroUCertificate {
        points: points.to_vec(),
        images: images
            .into_iter()
            .map(BallPoint::from_vec_unchecked)
            .collect(),
        witnesses,
        transcript,
    })
}

impl ZeroUCertificate {
    /// Largest deviation in `A_ij(z_i) = 1`, `A_ij(phi(z_j)) = 0`.
    pub fn interpolation_error(&self) -> f64 {
        self.witnesses
            .iter()
            .map(|(&(i, j), a)| {
                let at_z = a.eval_vec(self.points[i - 1].coords());
                let at_w = a.eval_vec(self.images[j - 1].coords());
                (at_z - ONE).norm().max(at_w.norm())
            })
            .fold(0.0, f64::max)
    }

    /// Replays the induction against a candidate `rho(U)`.
    ///
    /// The nilpotent parts of `rho(A_ij)` and `rho(phi(A_ij))` are not
    /// determined by the characters, so they are drawn at random from
    /// `seed`; the derived system is triangular in superdiagonal order with
    /// pivots `A_ij(z_i) - A_ij(phi(z_j))`, hence has only the zero
    /// solution whatever they are. The diagonal and lower part of the
    /// candidate vanish for nest representations with characters
    /// `theta_{z_i, 0}` and are discarded.
    pub fn replay(&self, k_image: &CMat, seed: u64) -> Result<ReplayOutcome> {
        let k = self.points.len();
        if k_image.nrows() != k || k_image.ncols() != k {
            return Err(Error::WrongShape(format!("candidate must be {k}x{k}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut strict = |a: C64| {
            let mut m = CMat::zeros(k, k);
            for r in 0..k {
                for c in r + 1..k {
                    m[(r, c)] = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                }
            }
            m + CMat::identity(k, k) * a
        };
        let mut candidate = k_image.clone();
        for r in 0..k {
            for c in 0..=r {
                candidate[(r, c)] = ZERO;
            }
        }
        let mut forced = CMat::zeros(k, k);
        let mut rank = 0;
        let mut min_pivot = f64::INFINITY;
        let mut violation: f64 = 0.0;
        for step in &self.transcript {
            let a = &self.witnesses[&(step.i, step.j)];
            let (i, j) = (step.i - 1, step.j - 1);
            // diagonal parts of rho(A) and rho(phi(A)) at the relevant rows
            let left = strict(a.eval_vec(self.points[i].coords()));
            let right = strict(a.eval_vec(self.images[j].coords()));
            let pivot = left[(i, i)] - right[(j, j)];
            min_pivot = min_pivot.min(pivot.norm());
            let equation = |m: &CMat| (&left * m - m * &right)[(i, j)];
            violation = violation.max(equation(&candidate).norm());
            // solve the (i, j) equation for the unknown given the entries
            // fixed so far
            let rest = equation(&forced);
            if pivot.norm() > 0.5 {
                rank += 1;
                forced[(i, j)] = -rest / pivot;
            }
        }
        let unknowns = k * (k - 1) / 2;
        let annihilated = rank == unknowns
            && max_abs(&forced) == 0.0
            && (unknowns == 0 || min_pivot >= 1.0 - INTERPOLATION_TOL);
        Ok(ReplayOutcome {
            unknowns,
            rank,
            min_pivot: if unknowns == 0 { 1.0 } else { min_pivot },
            candidate_violation: violation,
            forced,
            annihilated,
        })
    }
}

/// The orbit representation over the character `theta_z`: generator `j`
/// maps to `diag(phi^m(z)_j)` for `m = 0..N-1` and `U` to the shift with
/// ones at `(m+1, m)`.
pub fn orbit_representation(
    phi: &MobiusAutomorphism,
    z: &BallPoint,
    blocks: usize,
) -> Result<CovariantPair> {
    check_dim(phi, z.dim())?;
    if blocks < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 blocks, got {blocks}"
        )));
    }
    if !z.is_interior() {
        return Err(Error::PointOutsideBall { norm: z.norm() });
    }
    let n = z.dim();
    let mut orbit = vec![z.coords().clone()];
    for m in 1..blocks {
        let next = phi.map_vec(&orbit[m - 1]);
        orbit.push(next);
    }
    let mats = (0..n)
        .map(|j| CMat::from_diagonal(&CVec::from_iterator(blocks, orbit.iter().map(|p| p[j]))))
        .collect();
    let mut k = CMat::zeros(blocks, blocks);
    for m in 0..blocks - 1 {
        k[(m + 1, m)] = ONE;
    }
    let points = orbit
        .into_iter()
        .map(BallPoint::from_vec_unchecked)
        .collect();
    CovariantPair::new(MatrixTuple::new(mats)?, k, Some(points))
}

/// `(pi x K)(sum U^m A_m) = sum K^m pi(A_m)`.
pub fn eval_cov(pair: &CovariantPair, x: &SemicrossedElement) -> Result<CMat> {
    if x.n() != pair.n() {
        return Err(Error::DimensionMismatch {
            expected: pair.n(),
            found: x.n(),
        });
    }
    let size = pair.size();
    let mut out = CMat::zeros(size, size);
    let mut power = CMat::identity(size, size);
    let mut at = 0;
    for (&m, a) in x.coeffs() {
        while at < m {
            power = &power * pair.k_image();
            at += 1;
        }
        out += &power * a.eval_tuple(pair.generator_images())?;
    }
    Ok(out)
}

/// Membership in the ideal generated by `U`: `A_0 = 0`.
pub fn in_ideal(x: &SemicrossedElement) -> bool {
    x.coeff(0).is_zero()
}

/// A nest representation that kills `U` but not `x`.
pub fn certify_not_in_ideal(
    x: &SemicrossedElement,
    z: &PointSequence,
    eps: f64,
    seed: u64,
    max_tries: usize,
) -> Result<SeparationWitness> {
    if in_ideal(x) {
        return Err(Error::IsInIdeal);
    }
    separate(&x.coeff(0), z, eps, seed, max_tries)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IsoVerdict {
    Isomorphic,
    NotIsomorphic,
    Inconclusive,
}

impl IsoVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            IsoVerdict::Isomorphic => "Isomorphic",
            IsoVerdict::NotIsomorphic => "NotIsomorphic",
            IsoVerdict::Inconclusive => "Inconclusive",
        }
    }
}

#[derive(Clone, Debug)]
pub struct IsomorphismReport {
    pub verdict: IsoVerdict,
    pub conjugacy: ConjugacyVerdict,
    pub census: (Vec<AnalyticSetDescriptor>, Vec<AnalyticSetDescriptor>),
    pub identity: (bool, bool),
    pub note: Option<String>,
}

/// The semicrossed products are isomorphic iff the automorphisms are
/// conjugate. Only `n >= 2` is accepted.
pub fn decide_isomorphism(
    phi1: &MobiusAutomorphism,
    phi2: &MobiusAutomorphism,
) -> Result<IsomorphismReport> {
    check_dim(phi1, phi2.dim())?;
    if phi1.dim() < 2 {
        return Err(Error::InvalidArgument(
            "the isomorphism decision needs n >= 2".into(),
        ));
    }
    let census1 = census(phi1)?;
    let census2 = census(phi2)?;
    let identity = (recognize_identity(&census1), recognize_identity(&census2));
    let conjugacy = are_conjugate(phi1, phi2)?;
    let (verdict, note) = if identity.0 != identity.1 {
        (
            IsoVerdict::NotIsomorphic,
            Some(
                "identity recognition: exactly one census has B_n x D as its unique top set"
                    .to_string(),
            ),
        )
    } else {
        let v = match conjugacy.verdict {
            Verdict::Conjugate => IsoVerdict::Isomorphic,
            Verdict::NotConjugate => IsoVerdict::NotIsomorphic,
            Verdict::Inconclusive => IsoVerdict::Inconclusive,
        };
        (v, None)
    };
    Ok(IsomorphismReport {
        verdict,
        conjugacy,
        census: (census1, census2),
        identity,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cball::random_automorphism;
    use crate::linalg::c64;

    fn minus_id(n: usize) -> MobiusAutomorphism {
        MobiusAutomorphism::from_unitary(-CMat::identity(n, n)).unwrap()
    }

    fn swap() -> MobiusAutomorphism {
        MobiusAutomorphism::from_unitary(CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]))
            .unwrap()
    }

    fn pt(v: &[f64]) -> BallPoint {
        BallPoint::from_reals(v).unwrap()
    }

    fn kinds(c: &[AnalyticSetDescriptor]) -> Vec<(AnalyticSetKind, usize)> {
        let mut v: Vec<_> = c.iter().map(|d| (d.kind, d.dim)).collect();
        v.sort();
        v
    }

    #[test]
    fn character_validity() {
        let phi = minus_id(2);
        assert!(character_valid(&phi, &pt(&[0.2, 0.0]), ZERO));
        assert!(!character_valid(&phi, &pt(&[0.2, 0.0]), c64(0.5, 0.0)));
        assert!(character_valid(&phi, &pt(&[0.0, 0.0]), c64(0.5, 0.0)));
        let id = MobiusAutomorphism::identity(2);
        assert!(character_valid(&id, &pt(&[0.6, 0.8]), c64(0.0, 1.0)));
    }

    #[test]
    fn census_of_identity_and_minus_identity() {
        let c = census(&MobiusAutomorphism::identity(2)).unwrap();
        assert_eq!(kinds(&c), vec![(AnalyticSetKind::FixDisk, 3)]);
        assert!(recognize_identity(&c));
        let c = census(&minus_id(2)).unwrap();
        assert_eq!(
            kinds(&c),
            vec![
                (AnalyticSetKind::BallZero, 2),
                (AnalyticSetKind::FixDisk, 1),
                (AnalyticSetKind::FixCircleFiber, 0)
            ]
        );
        assert!(!recognize_identity(&c));
    }

    #[test]
    fn census_of_hyperbolic_and_parabolic() {
        let h = random_automorphism(3, 2, Some(AutType::Hyperbolic)).unwrap();
        assert_eq!(
            kinds(&census(&h).unwrap()),
            vec![
                (AnalyticSetKind::BallZero, 2),
                (AnalyticSetKind::BoundaryDisk, 1),
                (AnalyticSetKind::BoundaryDisk, 1)
            ]
        );
        let p = random_automorphism(3, 2, Some(AutType::Parabolic)).unwrap();
        assert_eq!(
            kinds(&census(&p).unwrap()),
            vec![
                (AnalyticSetKind::BallZero, 2),
                (AnalyticSetKind::BoundaryDisk, 1)
            ]
        );
    }

    #[test]
    fn census_with_fixed_line() {
        let u = CMat::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c64(0.0, 1.0)]);
        let phi = MobiusAutomorphism::from_unitary(u).unwrap();
        let c = census(&phi).unwrap();
        assert_eq!(
            kinds(&c),
            vec![
                (AnalyticSetKind::BallZero, 2),
                (AnalyticSetKind::FixDisk, 2),
                (AnalyticSetKind::FixCircleFiber, 1),
                (AnalyticSetKind::BoundaryDisk, 1)
            ]
        );
        assert!(!recognize_identity(&c));
    }

    #[test]
    fn srep_for_minus_identity() {
        let phi = minus_id(2);
        let pair = build_srep(&phi, &pt(&[0.2, 0.0]), &CVec::zeros(2), c64(0.5, 0.0)).unwrap();
        let g1 = pair.generator_images().get(0);
        assert_eq!(g1[(0, 0)], c64(-0.2, 0.0));
        assert_eq!(g1[(1, 1)], c64(0.2, 0.0));
        assert_eq!(check_covariance_2x2(&pair, &phi).unwrap(), 0.0);
        assert!(forced_theta_relation(&pair, &phi).unwrap().holds);
    }

    #[test]
    fn srep_rejects_fixed_point_and_zero_c() {
        let phi = minus_id(2);
        assert!(matches!(
            build_srep(&phi, &pt(&[0.0, 0.0]), &CVec::zeros(2), ONE),
            Err(Error::PointIsFixed { .. })
        ));
        assert_eq!(
            build_srep(&phi, &pt(&[0.1, 0.0]), &CVec::zeros(2), ZERO),
            Err(Error::ZeroC)
        );
    }

    #[test]
    fn srep_scaling_keeps_contractions() {
        let phi = random_automorphism(5, 3, None).unwrap();
        let z = pt(&[0.3, -0.2, 0.1]);
        let b = CVec::from_element(3, c64(2.0, 1.0));
        let (pair, t) = build_srep_with_scale(&phi, &z, &b, c64(3.0, 0.0)).unwrap();
        assert!(t < 1.0);
        assert!(pair.generator_images().row_norm() <= 1.0 - SREP_MARGIN + 1e-12);
        assert!(spectral_norm(pair.k_image()) <= 1.0 - SREP_MARGIN + 1e-12);
        assert_eq!(check_covariance_2x2(&pair, &phi).unwrap(), 0.0);
    }

    #[test]
    fn perturbed_srep_fails_forced_relation() {
        let phi = minus_id(2);
        let pair = build_srep(&phi, &pt(&[0.2, 0.0]), &CVec::zeros(2), c64(0.5, 0.0)).unwrap();
        let mut points = pair.diagonal_points().unwrap().to_vec();
        let eta = 1e-3;
        points[0] =
            BallPoint::new(points[0].coords() + CVec::from_vec(vec![c64(eta, 0.0), ZERO])).unwrap();
        let bad = CovariantPair::new(
            pair.generator_images().clone(),
            pair.k_image().clone(),
            Some(points),
        )
        .unwrap();
        let r = forced_theta_relation(&bad, &phi).unwrap();
        assert!(!r.holds);
        assert!((r.gap - eta).abs() < 1e-15);
        assert!((check_covariance_2x2(&bad, &phi).unwrap() - eta * 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_u_certificate_for_swap() {
        let phi = swap();
        let z = vec![pt(&[0.1, 0.2]), pt(&[0.3, 0.4])];
        let cert = zero_u_certificate(&z, &phi).unwrap();
        assert_eq!(cert.witnesses.len(), 1);
        assert!(cert.interpolation_error() < 1e-14);
        assert_eq!(cert.images[0], pt(&[0.2, 0.1]));
        let k = CMat::from_row_slice(2, 2, &[ZERO, c64(0.3, -0.7), ZERO, ZERO]);
        let out = cert.replay(&k, 1).unwrap();
        assert!(out.annihilated && out.candidate_violation > 0.1);
    }

    #[test]
    fn zero_u_trivial_and_violated() {
        let phi = swap();
        let cert = zero_u_certificate(&[pt(&[0.1, 0.2])], &phi).unwrap();
        assert!(cert.witnesses.is_empty());
        assert!(cert.replay(&CMat::zeros(1, 1), 0).unwrap().annihilated);
        let z = vec![pt(&[0.2, 0.1]), pt(&[0.1, 0.2])];
        assert!(matches!(
            zero_u_certificate(&z, &phi),
            Err(Error::HypothesisViolated { i: 1, j: 2, .. })
        ));
    }

    #[test]
    fn orbit_of_minus_identity() {
        let pair = orbit_representation(&minus_id(2), &pt(&[0.3, 0.0]), 4).unwrap();
        let d: Vec<f64> = (0..4)
            .map(|m| pair.generator_images().get(0)[(m, m)].re)
            .collect();
        assert_eq!(d, vec![0.3, -0.3, 0.3, -0.3]);
        assert_eq!(pair.covariance_residual(&minus_id(2)), Some(0.0));
    }

    #[test]
    fn eval_cov_basics() {
        let phi = random_automorphism(2, 2, Some(AutType::Elliptic)).unwrap();
        let pair = orbit_representation(&phi, &pt(&[0.1, 0.2]), 3).unwrap();
        let s1 = FreePolynomial::generator(2, 1).unwrap();
        let x = SemicrossedElement::from_poly(s1.clone());
        assert_eq!(
            eval_cov(&pair, &x).unwrap(),
            s1.eval_tuple(pair.generator_images()).unwrap()
        );
        let u = SemicrossedElement::u_power(1, FreePolynomial::unit(2));
        assert_eq!(&eval_cov(&pair, &u).unwrap(), pair.k_image());
    }

    #[test]
    fn ideal_membership() {
        let s1 = FreePolynomial::generator(2, 1).unwrap();
        assert!(in_ideal(&SemicrossedElement::u_power(1, s1.clone())));
        let unit = SemicrossedElement::from_poly(FreePolynomial::unit(2));
        assert!(!in_ideal(&unit));
        let wit = certify_not_in_ideal(&unit, &PointSequence::zeros(2, 3), 1e-2, 0, 100).unwrap();
        assert_eq!((wit.entry, wit.value), ((1, 1), ONE));
        let comm = FreePolynomial::from_terms(
            2,
            [
                (Word::new(vec![1, 2], 2).unwrap(), ONE),
                (Word::new(vec![2, 1], 2).unwrap(), -ONE),
            ],
        )
        .unwrap();
        let x = SemicrossedElement::from_terms(2, [(0, comm), (1, s1.clone())]).unwrap();
        let wit = certify_not_in_ideal(&x, &PointSequence::zeros(2, 3), 1e-2, 0, 100).unwrap();
        assert_eq!(wit.word, Word::new(vec![1, 2], 2).unwrap());
        assert_eq!(
            certify_not_in_ideal(
                &SemicrossedElement::u_power(1, s1),
                &PointSequence::zeros(2, 3),
                1e-2,
                0,
                100
            ),
            Err(Error::IsInIdeal)
        );
    }

    #[test]
    fn decision_examples() {
        let phi = random_automorphism(7, 2, None).unwrap();
        assert_eq!(
            decide_isomorphism(&phi, &phi).unwrap().verdict,
            IsoVerdict::Isomorphic
        );
        let r = decide_isomorphism(&MobiusAutomorphism::identity(2), &minus_id(2)).unwrap();
        assert_eq!(r.verdict, IsoVerdict::NotIsomorphic);
        assert_eq!(r.identity, (true, false));
        let g = random_automorphism(8, 2, None).unwrap();
        let r = decide_isomorphism(&phi, &g.conjugate(&phi).unwrap()).unwrap();
        assert_eq!(r.verdict, IsoVerdict::Isomorphic);
        assert!(r.conjugacy.certificate.is_some());
        assert!(decide_isomorphism(
            &MobiusAutomorphism::identity(1),
            &MobiusAutomorphism::identity(1)
        )
        .is_err());
    }
}
