//! Words, free noncommutative polynomials, evaluation on matrix tuples and
//! on truncations of the full Fock space.
//!
//! A word `l_1 l_2 ... l_k` evaluates to `T_{l_1} T_{l_2} ... T_{l_k}`, so
//! on Fock space `S_w xi_v = xi_{wv}`.

use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::cball::BallPoint;
use crate::dshift::CPoly;
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigen, hstack, lanczos_max_eig, spectral_norm, CMat, CVec, C64, ONE, ZERO,
};

/// Largest polynomial degree accepted by the Fock-space routines.
pub const DEGREE_CAP: usize = 12;
/// Largest Fock truncation, in basis words.
pub const FOCK_DIM_CAP: u128 = 200_000;
/// Largest truncation converted to dense matrices.
pub const DENSE_DIM_CAP: usize = 1024;
/// Slack in the row-contraction predicate.
pub const ROW_CONTRACTION_SLACK: f64 = 1e-12;
/// Allowed excess of the left side in the von Neumann comparison.
pub const VON_NEUMANN_SLACK: f64 = 1e-6;
const DENSE_NORM_LIMIT: usize = 400;

/// A word over the letters `1..=n`, ordered by length and then
/// lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(letters: Vec<usize>, n: usize) -> Result<Self> {
        if let Some(&bad) = letters.iter().find(|&&l| l == 0 || l > n) {
            return Err(Error::LetterOutOfRange { letter: bad, n });
        }
        Ok(Word(letters))
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letter(l: usize) -> Self {
        Word(vec![l])
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn max_letter(&self) -> usize {
        self.0.iter().cloned().max().unwrap_or(0)
    }

    /// All `n^len` words of the given length, in lexicographic order.
    pub fn all_of_length(n: usize, len: usize) -> Vec<Word> {
        let mut out = vec![Word::empty()];
        for _ in 0..len {
            let mut next = Vec::with_capacity(out.len() * n);
            for w in &out {
                for l in 1..=n {
                    let mut v = w.0.clone();
                    v.push(l);
                    next.push(Word(v));
                }
            }
            out = next;
        }
        out
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "()");
        }
        let sep = if self.max_letter() > 9 { "," } else { "" };
        let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join(sep))
    }
}

/// A tuple `(T_1, ..., T_n)` of `k x k` complex matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixTuple {
    mats: Vec<CMat>,
}

impl MatrixTuple {
    pub fn new(mats: Vec<CMat>) -> Result<Self> {
        let Some(first) = mats.first() else {
            return Err(Error::WrongShape(
                "a tuple needs at least one matrix".into(),
            ));
        };
        let k = first.nrows();
        if k == 0 {
            return Err(Error::WrongShape("matrices must be at least 1x1".into()));
        }
        for m in &mats {
            if m.nrows() != k || m.ncols() != k {
                return Err(Error::WrongShape(format!(
                    "expected {k}x{k} matrices, found {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(Self { mats })
    }

    pub fn zeros(n: usize, k: usize) -> Self {
        Self {
            mats: vec![CMat::zeros(k, k); n],
        }
    }

    pub fn n(&self) -> usize {
        self.mats.len()
    }

    pub fn size(&self) -> usize {
        self.mats[0].nrows()
    }

    pub fn matrices(&self) -> &[CMat] {
        &self.mats
    }

    pub fn get(&self, i: usize) -> &CMat {
        &self.mats[i]
    }

    /// Norm of the block row `[T_1 ... T_n]`.
    pub fn row_norm(&self) -> f64 {
        spectral_norm(&hstack(&self.mats))
    }

    pub fn is_row_contractive(&self) -> bool {
        self.row_norm() <= 1.0 + ROW_CONTRACTION_SLACK
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            mats: self.mats.iter().map(|m| m * C64::from(t)).collect(),
        }
    }

    /// `T_w` for a word `w`.
    pub fn word_product(&self, w: &Word) -> Result<CMat> {
        let k = self.size();
        let mut out = CMat::identity(k, k);
        for &l in w.letters() {
            if l == 0 || l > self.n() {
                return Err(Error::LetterOutOfRange {
                    letter: l,
                    n: self.n(),
                });
            }
            out *= &self.mats[l - 1];
        }
        Ok(out)
    }
}

/// A finitely supported linear combination of words.
#[derive(Clone, Debug, PartialEq)]
pub struct FreePolynomial {
    n: usize,
    terms: BTreeMap<Word, C64>,
}

impl FreePolynomial {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn unit(n: usize) -> Self {
        Self::monomial(n, Word::empty(), ONE).expect("empty word is valid")
    }

    pub fn constant(n: usize, c: C64) -> Self {
        Self::monomial(n, Word::empty(), c).expect("empty word is valid")
    }

    /// The generator `S_i`, `1 <= i <= n`.
    pub fn generator(n: usize, i: usize) -> Result<Self> {
        Self::monomial(n, Word::new(vec![i], n)?, ONE)
    }

    pub fn monomial(n: usize, w: Word, c: C64) -> Result<Self> {
        Self::from_terms(n, [(w, c)])
    }

    /// Sums repeated words and drops zero coefficients.
    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Word, C64)>) -> Result<Self> {
        let mut p = Self::zero(n);
        for (w, c) in terms {
            if w.max_letter() > n {
                return Err(Error::LetterOutOfRange {
                    letter: w.max_letter(),
                    n,
                });
            }
            p.add_term(w, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, w: Word, c: C64) {
        match self.terms.entry(w) {
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

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &BTreeMap<Word, C64> {
        &self.terms
    }

    pub fn coeff(&self, w: &Word) -> C64 {
        self.terms.get(w).cloned().unwrap_or(ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(|w| w.len()).max()
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut p = Self::zero(self.n);
        if c != ZERO {
            for (w, a) in &self.terms {
                p.add_term(w.clone(), a * c);
            }
        }
        p
    }

    fn check_n(&self, other: usize) -> Result<()> {
        if self.n != other {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_n(other.n)?;
        let mut p = self.clone();
        for (w, c) in &other.terms {
            p.add_term(w.clone(), *c);
        }
        Ok(p)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_n(other.n)?;
        let mut p = Self::zero(self.n);
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                p.add_term(w1.concat(w2), c1 * c2);
            }
        }
        Ok(p)
    }

    /// Shortest word with a nonzero coefficient, lexicographically first
    /// among those.
    pub fn minimal_word(&self) -> Result<Word> {
        self.terms
            .keys()
            .next()
            .cloned()
            .ok_or(Error::ZeroPolynomial)
    }

    /// The character `theta_z`: `sum a_w z^w` with `z^w` the product of the
    /// coordinates along `w`.
    pub fn eval_point(&self, z: &BallPoint) -> Result<C64> {
        self.check_n(z.dim())?;
        Ok(self.eval_vec(z.coords()))
    }

    pub(crate) fn eval_vec(&self, z: &CVec) -> C64 {
        self.terms
            .iter()
            .map(|(w, c)| w.letters().iter().fold(*c, |acc, &l| acc * z[l - 1]))
            .sum()
    }

    /// Polynomial functional calculus, evaluated by nested Horner steps on
    /// the first letter.
    pub fn eval_tuple(&self, t: &MatrixTuple) -> Result<CMat> {
        self.check_n(t.n())?;
        let items: Vec<(&[usize], C64)> =
            self.terms.iter().map(|(w, c)| (w.letters(), *c)).collect();
        Ok(horner(&items, t))
    }

    /// The commutative image: words collapse to multi-indices.
    pub fn abelianize(&self) -> CPoly {
        let mut sums: BTreeMap<Vec<usize>, (C64, f64)> = BTreeMap::new();
        for (w, c) in &self.terms {
            let mut alpha = vec![0usize; self.n];
            for &l in w.letters() {
                alpha[l - 1] += 1;
            }
            let e = sums.entry(alpha).or_insert((ZERO, 0.0));
            e.0 += c;
            e.1 += c.norm();
        }
        // a sum within rounding of its summands is a cancellation
        let mut out = CPoly::zero(self.n);
        for (alpha, (c, mass)) in sums {
            if c.norm() > 4.0 * f64::EPSILON * mass {
                out.add_term(alpha, c);
            }
        }
        out
    }
}

fn horner(items: &[(&[usize], C64)], t: &MatrixTuple) -> CMat {
    let k = t.size();
    let mut out = CMat::zeros(k, k);
    let mut groups: BTreeMap<usize, Vec<(&[usize], C64)>> = BTreeMap::new();
    for (w, c) in items {
        match w.split_first() {
            None => {
                for i in 0..k {
                    out[(i, i)] += c;
                }
            }
            Some((&first, rest)) => groups.entry(first).or_default().push((rest, *c)),
        }
    }
    for (l, sub) in groups {
        out += t.get(l - 1) * horner(&sub, t);
    }
    out
}

impl Add for &FreePolynomial {
    type Output = FreePolynomial;
    fn add(self, rhs: Self) -> FreePolynomial {
        self.try_add(rhs)
            .expect("polynomials over the same alphabet")
    }
}

impl Sub for &FreePolynomial {
    type Output = FreePolynomial;
    fn sub(self, rhs: Self) -> FreePolynomial {
        self.try_add(&rhs.scale(-ONE))
            .expect("polynomials over the same alphabet")
    }
}

impl Mul for &FreePolynomial {
    type Output = FreePolynomial;
    fn mul(self, rhs: Self) -> FreePolynomial {
        self.try_mul(rhs)
            .expect("polynomials over the same alphabet")
    }
}

impl Neg for &FreePolynomial {
    type Output = FreePolynomial;
    fn neg(self) -> FreePolynomial {
        self.scale(-ONE)
    }
}

impl fmt::Display for FreePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(w, c)| {
                if w.is_empty() {
                    format!("({}{:+}i)", c.re, c.im)
                } else {
                    format!("({}{:+}i) S_{}", c.re, c.im, w)
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Number of words of length at most `level` over `n` letters.
pub fn fock_dimension(n: usize, level: usize) -> u128 {
    let mut total: u128 = 0;
    let mut layer: u128 = 1;
    for _ in 0..=level {
        total = total.saturating_add(layer);
        layer = layer.saturating_mul(n as u128);
    }
    total
}

/// The left creation operators compressed to words of length `<= level`.
///
/// The operators are kept implicit: basis word `v` has index
/// `offset(|v|) + value(v)` where `value` reads the letters minus one as a
/// base-`n` numeral. Dense matrices are available for small truncations.
#[derive(Clone, Debug)]
pub struct FockTruncation {
    n: usize,
    level: usize,
    dim: usize,
    offsets: Vec<usize>,
    powers: Vec<usize>,
}

pub fn fock_truncation(n: usize, level: usize) -> Result<FockTruncation> {
    fock_truncation_with_cap(n, level, FOCK_DIM_CAP)
}

pub fn fock_truncation_with_cap(n: usize, level: usize, cap: u128) -> Result<FockTruncation> {
    if n == 0 || level == 0 {
        return Err(Error::InvalidArgument("need n >= 1 and N >= 1".into()));
    }
    let size = fock_dimension(n, level);
    if size > cap {
        return Err(Error::SizeOverflow { size, cap });
    }
    let mut offsets = Vec::with_capacity(level + 2);
    let mut powers = Vec::with_capacity(level + 1);
    let (mut off, mut pow) = (0usize, 1usize);
    for _ in 0..=level {
        offsets.push(off);
        powers.push(pow);
        off += pow;
        pow *= n;
    }
    offsets.push(off);
    Ok(FockTruncation {
        n,
        level,
        dim: size as usize,
        offsets,
        powers,
    })
}

impl FockTruncation {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn value(w: &[usize], n: usize) -> usize {
        w.iter().fold(0, |acc, &l| acc * n + (l - 1))
    }

    pub fn index_of(&self, w: &Word) -> Option<usize> {
        if w.len() > self.level || w.max_letter() > self.n {
            return None;
        }
        Some(self.offsets[w.len()] + Self::value(w.letters(), self.n))
    }

    pub fn word_at(&self, index: usize) -> Word {
        let len = (0..=self.level)
            .rfind(|&l| self.offsets[l] <= index)
            .expect("index within the truncation");
        let mut v = index - self.offsets[len];
        let mut letters = vec![0; len];
        for slot in letters.iter_mut().rev() {
            *slot = v % self.n + 1;
            v /= self.n;
        }
        Word(letters)
    }

    /// `(len, value)` of every basis word, in index order.
    fn basis(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..=self.level).flat_map(move |len| (0..self.powers[len]).map(move |v| (len, v)))
    }

    /// `p(S) x` on the truncation.
    pub fn apply(&self, p: &FreePolynomial, x: &[C64]) -> Vec<C64> {
        let terms = self.encoded_terms(p);
        let mut y = vec![ZERO; self.dim];
        for (j, (len, v)) in self.basis().enumerate() {
            if x[j] == ZERO {
                continue;
            }
            for &(wl, wv, c) in &terms {
                if wl + len <= self.level {
                    y[self.offsets[wl + len] + wv * self.powers[len] + v] += c * x[j];
                }
            }
        }
        y
    }

    /// `p(S)* x` on the truncation.
    pub fn apply_adjoint(&self, p: &FreePolynomial, x: &[C64]) -> Vec<C64> {
        let terms = self.encoded_terms(p);
        let mut y = vec![ZERO; self.dim];
        for (j, (len, v)) in self.basis().enumerate() {
            let mut acc = ZERO;
            for &(wl, wv, c) in &terms {
                if wl + len <= self.level {
                    acc += c.conj() * x[self.offsets[wl + len] + wv * self.powers[len] + v];
                }
            }
            y[j] = acc;
        }
        y
    }

    fn encoded_terms(&self, p: &FreePolynomial) -> Vec<(usize, usize, C64)> {
        p.terms()
            .iter()
            .filter(|(w, _)| w.len() <= self.level)
            .map(|(w, c)| (w.len(), Self::value(w.letters(), self.n), *c))
            .collect()
    }

    /// Dense matrix of `p(S)`.
    pub fn dense(&self, p: &FreePolynomial) -> Result<CMat> {
        if self.dim > DENSE_DIM_CAP {
            return Err(Error::SizeOverflow {
                size: self.dim as u128,
                cap: DENSE_DIM_CAP as u128,
            });
        }
        let mut m = CMat::zeros(self.dim, self.dim);
        let mut e = vec![ZERO; self.dim];
        for j in 0..self.dim {
            e[j] = ONE;
            let col = self.apply(p, &e);
            e[j] = ZERO;
            for (i, v) in col.into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    /// The generators as dense matrices.
    pub fn to_matrix_tuple(&self) -> Result<MatrixTuple> {
        let mats = (1..=self.n)
            .map(|i| self.dense(&FreePolynomial::generator(self.n, i)?))
            .collect::<Result<Vec<_>>>()?;
        MatrixTuple::new(mats)
    }

    /// Operator norm of `p(S)` on the truncation: dense SVD for small
    /// sizes, Lanczos on `p(S)* p(S)` otherwise.
    pub fn norm_of(&self, p: &FreePolynomial) -> Result<f64> {
        if p.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: p.n(),
            });
        }
        if self.dim <= DENSE_NORM_LIMIT {
            return Ok(spectral_norm(&self.dense(p)?));
        }
        let top = lanczos_max_eig(self.dim, |x| self.apply_adjoint(p, &self.apply(p, x)), 300);
        Ok(top.max(0.0).sqrt())
    }
}

/// Outcome of comparing `||p(T)||` with `||p(S)||` on a Fock truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct VonNeumannReport {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

pub fn von_neumann_check(
    p: &FreePolynomial,
    t: &MatrixTuple,
    level: usize,
) -> Result<VonNeumannReport> {
    if p.n() != t.n() {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            found: t.n(),
        });
    }
    let norm = t.row_norm();
    if norm > 1.0 + ROW_CONTRACTION_SLACK {
        return Err(Error::NotRowContractive { norm });
    }
    let degree = p.degree().unwrap_or(0);
    if degree > DEGREE_CAP {
        return Err(Error::DegreeOverflow {
            degree,
            cap: DEGREE_CAP,
        });
    }
    if level < degree {
        return Err(Error::TruncationTooShallow { level, degree });
    }
    let lhs = spectral_norm(&p.eval_tuple(t)?);
    let rhs = fock_truncation(p.n(), level.max(1))?.norm_of(p)?;
    let margin = rhs - lhs;
    Ok(VonNeumannReport {
        lhs,
        rhs,
        margin,
        pass: lhs <= rhs + VON_NEUMANN_SLACK,
    })
}

/// `row_norm(T)^2` as the top eigenvalue of `sum T_i T_i*`.
pub fn row_norm_squared_via_gram(t: &MatrixTuple) -> f64 {
    let k = t.size();
    let mut g = CMat::zeros(k, k);
    for m in t.matrices() {
        g += m * m.adjoint();
    }
    hermitian_eigen(&g).0.last().cloned().unwrap_or(0.0)
}
