//! The commutative side: polynomials in `d` commuting variables, the
//! 2x2 commuting upper-triangular calculus and truncations of the
//! symmetric Fock space carrying the d-shift.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul};

use crate::cball::{BallPoint, MobiusAutomorphism};
use crate::error::{Error, Result};
use crate::freepoly::{
    MatrixTuple, VonNeumannReport, DEGREE_CAP, DENSE_DIM_CAP, FOCK_DIM_CAP, ROW_CONTRACTION_SLACK,
    VON_NEUMANN_SLACK,
};
use crate::linalg::{lanczos_max_eig, spectral_norm, CMat, CVec, C64, ONE, ZERO};
use crate::semicrossed::{self, CovariantPair, IsomorphismReport};

const DENSE_NORM_LIMIT: usize = 400;

/// A polynomial `sum c_alpha z^alpha` in `d` commuting variables.
#[derive(Clone, Debug, PartialEq)]
pub struct CPoly {
    d: usize,
    terms: BTreeMap<Vec<usize>, C64>,
}

impl CPoly {
    pub fn zero(d: usize) -> Self {
        Self {
            d,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(d: usize, c: C64) -> Self {
        let mut p = Self::zero(d);
        p.add_term(vec![0; d], c);
        p
    }

    pub fn unit(d: usize) -> Self {
        Self::constant(d, ONE)
    }

    /// The coordinate function `z_i`, `1 <= i <= d`.
    pub fn coordinate(d: usize, i: usize) -> Result<Self> {
        if i == 0 || i > d {
            return Err(Error::LetterOutOfRange { letter: i, n: d });
        }
        let mut alpha = vec![0; d];
        alpha[i - 1] = 1;
        Self::from_terms(d, [(alpha, ONE)])
    }

    /// Sums repeated multi-indices and drops zero coefficients.
    pub fn from_terms(
        d: usize,
        terms: impl IntoIterator<Item = (Vec<usize>, C64)>,
    ) -> Result<Self> {
        let mut p = Self::zero(d);
        for (alpha, c) in terms {
            if alpha.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: alpha.len(),
                });
            }
            p.add_term(alpha, c);
        }
        Ok(p)
    }

    pub(crate) fn add_term(&mut self, alpha: Vec<usize>, c: C64) {
        match self.terms.entry(alpha) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == ZERO {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                if c != ZERO {
                    v.insert(c);
                }
            }
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> &BTreeMap<Vec<usize>, C64> {
        &self.terms
    }

    pub fn coeff(&self, alpha: &[usize]) -> C64 {
        self.terms.get(alpha).cloned().unwrap_or(ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(|a| a.iter().sum()).max()
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut p = Self::zero(self.d);
        if c != ZERO {
            for (a, x) in &self.terms {
                p.add_term(a.clone(), x * c);
            }
        }
        p
    }

    fn check_d(&self, other: usize) -> Result<()> {
        if self.d != other {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: other,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_d(other.d)?;
        let mut p = self.clone();
        for (a, c) in &other.terms {
            p.add_term(a.clone(), *c);
        }
        Ok(p)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_d(other.d)?;
        let mut p = Self::zero(self.d);
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                let sum: Vec<usize> = a.iter().zip(b).map(|(i, j)| i + j).collect();
                p.add_term(sum, x * y);
            }
        }
        Ok(p)
    }

    pub fn eval_point(&self, z: &BallPoint) -> Result<C64> {
        self.check_d(z.dim())?;
        Ok(self.eval_vec(z.coords()))
    }

    pub(crate) fn eval_vec(&self, z: &CVec) -> C64 {
        self.terms
            .iter()
            .map(|(a, c)| {
                a.iter()
                    .enumerate()
                    .fold(*c, |acc, (i, &p)| acc * z[i].powu(p as u32))
            })
            .sum()
    }

    /// Evaluation on a commuting tuple.
    pub fn eval_tuple(&self, t: &MatrixTuple) -> Result<CMat> {
        self.check_d(t.n())?;
        let k = t.size();
        let mut out = CMat::zeros(k, k);
        for (a, c) in &self.terms {
            let mut m = CMat::identity(k, k) * *c;
            for (i, &p) in a.iter().enumerate() {
                for _ in 0..p {
                    m = t.get(i) * m;
                }
            }
            out += m;
        }
        Ok(out)
    }
}

impl Add for &CPoly {
    type Output = CPoly;
    fn add(self, rhs: Self) -> CPoly {
        self.try_add(rhs)
            .expect("polynomials in the same variables")
    }
}

impl Mul for &CPoly {
    type Output = CPoly;
    fn mul(self, rhs: Self) -> CPoly {
        self.try_mul(rhs)
            .expect("polynomials in the same variables")
    }
}

impl fmt::Display for CPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(a, c)| {
                let mono: Vec<String> = a
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0)
                    .map(|(i, &p)| {
                        if p == 1 {
                            format!("z{}", i + 1)
                        } else {
                            format!("z{}^{}", i + 1, p)
                        }
                    })
                    .collect();
                if mono.is_empty() {
                    format!("({}{:+}i)", c.re, c.im)
                } else {
                    format!("({}{:+}i) {}", c.re, c.im, mono.join(" "))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

pub fn ceval_point(f: &CPoly, z: &BallPoint) -> Result<C64> {
    f.eval_point(z)
}

/// Commuting pair of 2x2 matrices `M_j = [[x_j, t(x_j - y_j)], [0, y_j]]`.
///
/// Commutativity forces the off-diagonal column to be proportional to
/// `x - y`, so the family is parameterised by the scalar `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct CommutingPair2x2 {
    x: BallPoint,
    y: BallPoint,
    t: C64,
}

impl CommutingPair2x2 {
    pub fn new(x: BallPoint, y: BallPoint, t: C64) -> Result<Self> {
        if x.dim() != y.dim() {
            return Err(Error::DimensionMismatch {
                expected: x.dim(),
                found: y.dim(),
            });
        }
        if x.distance(&y) == 0.0 {
            return Err(Error::InvalidArgument(
                "the two diagonal points coincide".into(),
            ));
        }
        Ok(Self { x, y, t })
    }

    pub fn x(&self) -> &BallPoint {
        &self.x
    }

    pub fn y(&self) -> &BallPoint {
        &self.y
    }

    pub fn t(&self) -> C64 {
        self.t
    }

    pub fn d(&self) -> usize {
        self.x.dim()
    }

    pub fn matrix(&self, j: usize) -> CMat {
        let (xj, yj) = (self.x.coord(j), self.y.coord(j));
        CMat::from_row_slice(2, 2, &[xj, self.t * (xj - yj), ZERO, yj])
    }

    pub fn tuple(&self) -> MatrixTuple {
        MatrixTuple::new((0..self.d()).map(|j| self.matrix(j)).collect()).expect("2x2 blocks")
    }

    /// Largest entry of any commutator `M_i M_j - M_j M_i`.
    pub fn commutator_residual(&self) -> f64 {
        let t = self.tuple();
        let mut worst: f64 = 0.0;
        for i in 0..self.d() {
            for j in i + 1..self.d() {
                let c = t.get(i) * t.get(j) - t.get(j) * t.get(i);
                worst = worst.max(crate::linalg::max_abs(&c));
            }
        }
        worst
    }

    /// Shrinks `t` so that the row norm is at most `1 - margin`.
    pub fn contracted(&self, margin: f64) -> Result<Self> {
        let target = 1.0 - margin;
        let base = self.x.norm().max(self.y.norm());
        if base > target {
            return Err(Error::TooCloseToBoundary { norm: base });
        }
        let with = |s: f64| Self {
            t: self.t * s,
            ..self.clone()
        };
        if with(1.0).tuple().row_norm() <= target {
            return Ok(self.clone());
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if with(mid).tuple().row_norm() <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(with(lo))
    }
}

/// `f` on the commuting pair, `[[f(x), t(f(x) - f(y))], [0, f(y)]]`.
pub fn ceval_2x2(f: &CPoly, pair: &CommutingPair2x2) -> Result<CMat> {
    let fx = f.eval_point(&pair.x)?;
    let fy = f.eval_point(&pair.y)?;
    Ok(CMat::from_row_slice(
        2,
        2,
        &[fx, pair.t * (fx - fy), ZERO, fy],
    ))
}

/// Number of multi-indices in `d` variables of total degree at most `level`.
pub fn symfock_dimension(d: usize, level: usize) -> u128 {
    // C(level + d, d)
    let mut acc: u128 = 1;
    for i in 1..=d as u128 {
        acc = acc.saturating_mul(level as u128 + i) / i;
    }
    acc
}

/// The d-shift compressed to polynomials of degree `<= level`, in the
/// orthonormal basis `e_alpha = z^alpha / ||z^alpha||` with
/// `||z^alpha||^2 = alpha! / |alpha|!`.
#[derive(Clone, Debug)]
pub struct SymFockTruncation {
    d: usize,
    level: usize,
    basis: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

pub fn symfock_truncation(d: usize, level: usize) -> Result<SymFockTruncation> {
    if d == 0 || level == 0 {
        return Err(Error::InvalidArgument("need d >= 1 and N >= 1".into()));
    }
    let size = symfock_dimension(d, level);
    if size > FOCK_DIM_CAP {
        return Err(Error::SizeOverflow {
            size,
            cap: FOCK_DIM_CAP,
        });
    }
    let mut basis = Vec::with_capacity(size as usize);
    for deg in 0..=level {
        compositions(d, deg, &mut vec![0; d], 0, &mut basis);
    }
    let index = basis
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), i))
        .collect();
    Ok(SymFockTruncation {
        d,
        level,
        basis,
        index,
    })
}

/// Multi-indices of total degree `left` in lexicographically decreasing order.
fn compositions(
    d: usize,
    left: usize,
    cur: &mut Vec<usize>,
    pos: usize,
    out: &mut Vec<Vec<usize>>,
) {
    if pos == d - 1 {
        cur[pos] = left;
        out.push(cur.clone());
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k;
        compositions(d, left - k, cur, pos + 1, out);
    }
    cur[pos] = 0;
}

impl SymFockTruncation {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<usize>] {
        &self.basis
    }

    pub fn index_of(&self, alpha: &[usize]) -> Option<usize> {
        self.index.get(alpha).copied()
    }

    /// Coefficient of `e_{alpha+beta}` in `z^beta e_alpha`.
    pub fn weight(alpha: &[usize], beta: &[usize]) -> f64 {
        let mut num = 1.0;
        for (a, b) in alpha.iter().zip(beta) {
            for m in 1..=*b {
                num *= (a + m) as f64;
            }
        }
        let na: usize = alpha.iter().sum();
        let nb: usize = beta.iter().sum();
        let mut den = 1.0;
        for m in 1..=nb {
            den *= (na + m) as f64;
        }
        (num / den).sqrt()
    }

    /// `(source, target, coefficient)` of every nonzero entry of `f(M)`.
    fn entries<'a>(&'a self, f: &'a CPoly) -> impl Iterator<Item = (usize, usize, C64)> + 'a {
        self.basis.iter().enumerate().flat_map(move |(j, alpha)| {
            f.terms().iter().filter_map(move |(beta, c)| {
                let target: Vec<usize> = alpha.iter().zip(beta).map(|(a, b)| a + b).collect();
                self.index_of(&target)
                    .map(|i| (j, i, c * Self::weight(alpha, beta)))
            })
        })
    }

    pub fn apply(&self, f: &CPoly, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.dim()];
        for (j, i, c) in self.entries(f) {
            y[i] += c * x[j];
        }
        y
    }

    pub fn apply_adjoint(&self, f: &CPoly, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.dim()];
        for (j, i, c) in self.entries(f) {
            y[j] += c.conj() * x[i];
        }
        y
    }

    pub fn dense(&self, f: &CPoly) -> Result<CMat> {
        if f.d() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: f.d(),
            });
        }
        let n = self.dim();
        if n > DENSE_DIM_CAP {
            return Err(Error::SizeOverflow {
                size: n as u128,
                cap: DENSE_DIM_CAP as u128,
            });
        }
        let mut m = CMat::zeros(n, n);
        for (j, i, c) in self.entries(f) {
            m[(i, j)] += c;
        }
        Ok(m)
    }

    /// The multipliers by `z_1, ..., z_d` as dense matrices.
    pub fn to_matrix_tuple(&self) -> Result<MatrixTuple> {
        let mats = (1..=self.d)
            .map(|i| self.dense(&CPoly::coordinate(self.d, i)?))
            .collect::<Result<Vec<_>>>()?;
        MatrixTuple::new(mats)
    }

    pub fn norm_of(&self, f: &CPoly) -> Result<f64> {
        if f.d() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: f.d(),
            });
        }
        if self.dim() <= DENSE_NORM_LIMIT {
            return Ok(spectral_norm(&self.dense(f)?));
        }
        let top = lanczos_max_eig(
            self.dim(),
            |x| self.apply_adjoint(f, &self.apply(f, x)),
            300,
        );
        Ok(top.max(0.0).sqrt())
    }
}

/// Compares `||f(T)||` on a commuting row contraction `T` with the norm of
/// `f` on the symmetric Fock truncation of the given level.
pub fn drury_check(f: &CPoly, t: &MatrixTuple, level: usize) -> Result<VonNeumannReport> {
    if f.d() != t.n() {
        return Err(Error::DimensionMismatch {
            expected: f.d(),
            found: t.n(),
        });
    }
    let norm = t.row_norm();
    if norm > 1.0 + ROW_CONTRACTION_SLACK {
        return Err(Error::NotRowContractive { norm });
    }
    let degree = f.degree().unwrap_or(0);
    if degree > DEGREE_CAP {
        return Err(Error::DegreeOverflow {
            degree,
            cap: DEGREE_CAP,
        });
    }
    if level < degree {
        return Err(Error::TruncationTooShallow { level, degree });
    }
    let lhs = spectral_norm(&f.eval_tuple(t)?);
    let rhs = symfock_truncation(f.d(), level.max(1))?.norm_of(f)?;
    Ok(VonNeumannReport {
        lhs,
        rhs,
        margin: rhs - lhs,
        pass: lhs <= rhs + VON_NEUMANN_SLACK,
    })
}

/// 2x2 covariant pair whose generator images commute: the off-diagonal
/// vector is `t (phi(z) - z)`.
pub fn build_srep_d(
    phi: &MobiusAutomorphism,
    z: &BallPoint,
    t: C64,
    c: C64,
) -> Result<CovariantPair> {
    if phi.dim() != z.dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.dim(),
            found: z.dim(),
        });
    }
    let image = phi.apply(z)?;
    let b = (image.coords() - z.coords()) * t;
    semicrossed::build_srep(phi, z, &b, c)
}

/// The d-shift semicrossed products share the character space and the
/// automorphism group of the free case, so the decision is the same.
pub fn decide_isomorphism_d(
    phi1: &MobiusAutomorphism,
    phi2: &MobiusAutomorphism,
) -> Result<IsomorphismReport> {
    semicrossed::decide_isomorphism(phi1, phi2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, max_abs};

    fn pt(v: &[(f64, f64)]) -> BallPoint {
        BallPoint::from_slice(&v.iter().map(|&(a, b)| c64(a, b)).collect::<Vec<_>>()).unwrap()
    }

    fn sample() -> CommutingPair2x2 {
        CommutingPair2x2::new(
            pt(&[(0.2, 0.1), (-0.3, 0.0)]),
            pt(&[(0.0, -0.4), (0.1, 0.2)]),
            c64(0.7, -0.2),
        )
        .unwrap()
    }

    #[test]
    fn coordinate_evaluates_to_generator() {
        let p = sample();
        for j in 1..=2 {
            let m = ceval_2x2(&CPoly::coordinate(2, j).unwrap(), &p).unwrap();
            assert!(max_abs(&(m - p.matrix(j - 1))) < 1e-15);
        }
        let one = ceval_2x2(&CPoly::unit(2), &p).unwrap();
        assert!(max_abs(&(one - CMat::identity(2, 2))) == 0.0);
    }

    #[test]
    fn ceval_is_multiplicative() {
        let p = sample();
        let f = CPoly::from_terms(
            2,
            [
                (vec![1, 0], c64(1.0, 0.5)),
                (vec![0, 2], c64(-0.3, 0.0)),
                (vec![0, 0], ONE),
            ],
        )
        .unwrap();
        let g = CPoly::from_terms(
            2,
            [(vec![1, 1], c64(0.2, 0.0)), (vec![0, 1], c64(0.0, 1.0))],
        )
        .unwrap();
        let lhs = ceval_2x2(&(&f * &g), &p).unwrap();
        let rhs = ceval_2x2(&f, &p).unwrap() * ceval_2x2(&g, &p).unwrap();
        assert!(max_abs(&(lhs - rhs)) < 1e-14);
        // agrees with the tuple calculus
        let direct = f.eval_tuple(&p.tuple()).unwrap();
        assert!(max_abs(&(direct - ceval_2x2(&f, &p).unwrap())) < 1e-14);
    }

    #[test]
    fn commuting_pair_commutes() {
        assert!(sample().commutator_residual() < 1e-15);
    }

    #[test]
    fn one_variable_truncation_is_the_shift() {
        let s = symfock_truncation(1, 2).unwrap();
        let m = s.dense(&CPoly::coordinate(1, 1).unwrap()).unwrap();
        let mut shift = CMat::zeros(3, 3);
        shift[(1, 0)] = ONE;
        shift[(2, 1)] = ONE;
        assert!(max_abs(&(m - shift)) < 1e-15);
    }

    #[test]
    fn first_level_weights() {
        let s = symfock_truncation(2, 1).unwrap();
        let m1 = s.dense(&CPoly::coordinate(2, 1).unwrap()).unwrap();
        let (i0, i1) = (s.index_of(&[0, 0]).unwrap(), s.index_of(&[1, 0]).unwrap());
        assert_eq!(m1[(i1, i0)], ONE);
    }

    #[test]
    fn symfock_tuple_is_commuting_row_contraction() {
        for d in 1..=4 {
            for level in 1..=5 {
                let t = symfock_truncation(d, level)
                    .unwrap()
                    .to_matrix_tuple()
                    .unwrap();
                assert!(t.row_norm() <= 1.0 + 1e-12, "d {d} N {level}");
                for i in 0..d {
                    for j in 0..d {
                        let c = t.get(i) * t.get(j) - t.get(j) * t.get(i);
                        assert!(max_abs(&c) < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn compression_of_deeper_truncation_matches() {
        let small = symfock_truncation(2, 3).unwrap();
        let big = symfock_truncation(2, 4).unwrap();
        let z1 = CPoly::coordinate(2, 1).unwrap();
        let ms = small.dense(&z1).unwrap();
        let mb = big.dense(&z1).unwrap();
        for (i, a) in small.basis().iter().enumerate() {
            for (j, b) in small.basis().iter().enumerate() {
                let bi = big.index_of(a).unwrap();
                let bj = big.index_of(b).unwrap();
                assert_eq!(ms[(i, j)], mb[(bi, bj)]);
            }
        }
    }

    #[test]
    fn kernel_norms_reproduce_drury_arveson() {
        // sum over |alpha| <= N of |x^alpha|^2 / ||z^alpha||^2 -> 1 / (1 - |x|^2)
        let s = symfock_truncation(2, 40).unwrap();
        let x = [c64(0.3, 0.1), c64(-0.2, 0.2)];
        let mut total = 0.0;
        for alpha in s.basis() {
            let mono: f64 = alpha
                .iter()
                .zip(&x)
                .map(|(&a, z)| z.norm().powi(a as i32 * 2))
                .product();
            let w = SymFockTruncation::weight(&[0; 2], alpha);
            total += mono / (w * w);
            assert!((1.0 / (w * w) - multinomial(alpha)).abs() < 1e-9 * multinomial(alpha));
        }
        let r2: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        assert!((total - 1.0 / (1.0 - r2)).abs() < 1e-12);
    }

    fn multinomial(alpha: &[usize]) -> f64 {
        let n: usize = alpha.iter().sum();
        let fact = |k: usize| (1..=k).map(|m| m as f64).product::<f64>();
        fact(n) / alpha.iter().map(|&a| fact(a)).product::<f64>()
    }

    #[test]
    fn srep_d_matches_direct_assembly() {
        let phi = MobiusAutomorphism::from_unitary(-CMat::identity(2, 2)).unwrap();
        let z = pt(&[(0.2, 0.0), (0.0, 0.0)]);
        let pair = build_srep_d(&phi, &z, c64(0.1, 0.0), c64(0.3, 0.0)).unwrap();
        let m1 = pair.generator_images().get(0);
        let expect = CMat::from_row_slice(
            2,
            2,
            &[c64(-0.2, 0.0), c64(-0.04, 0.0), ZERO, c64(0.2, 0.0)],
        );
        assert!(max_abs(&(m1 - expect)) < 1e-15);
        assert_eq!(semicrossed::check_covariance_2x2(&pair, &phi).unwrap(), 0.0);
    }
}
