//! Upper-triangular nest representations `rho_{Z,w}`, their corner
//! entries, surjectivity and the separation search.
//!
//! Matrix entries `(i, j)` in public structures are 1-based.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cball::BallPoint;
use crate::error::{Error, Result};
use crate::freepoly::{FreePolynomial, MatrixTuple, Word};
use crate::linalg::{gram_schmidt_step, CMat, CVec, C64};
use crate::semicrossed::SemicrossedElement;

/// Two coordinates closer than this count as equal.
pub const COLLISION_TOL: f64 = 1e-9;
/// Smallest accepted witness value.
pub const WITNESS_FLOOR: f64 = 1e-12;
pub const DEFAULT_MAX_TRIES: usize = 1000;
const SPAN_TOL: f64 = 1e-10;

/// A finite prefix `(z_1, z_2, ...)` of a sequence of interior points.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSequence {
    points: Vec<BallPoint>,
}

impl PointSequence {
    pub fn new(points: Vec<BallPoint>) -> Result<Self> {
        if let Some(first) = points.first() {
            for p in &points {
                if p.dim() != first.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: first.dim(),
                        found: p.dim(),
                    });
                }
                if !p.is_interior() {
                    return Err(Error::PointOutsideBall { norm: p.norm() });
                }
            }
        }
        Ok(Self { points })
    }

    pub fn zeros(n: usize, len: usize) -> Self {
        Self {
            points: vec![BallPoint::origin(n); len],
        }
    }

    pub fn points(&self) -> &[BallPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `sup ||z_i - z'_i||` over the indices both sequences share.
    pub fn distance(&self, other: &PointSequence) -> f64 {
        self.points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| a.distance(b))
            .fold(0.0, f64::max)
    }

    /// First `len` points, padded with the origin.
    fn prefix(&self, n: usize, len: usize) -> Vec<CVec> {
        (0..len)
            .map(|i| {
                self.points
                    .get(i)
                    .map(|p| p.coords().clone())
                    .unwrap_or_else(|| CVec::zeros(n))
            })
            .collect()
    }
}

/// `rho_{Z,w}`: `S_j -> diag(z_{ij}) + (1 - delta) sum_{l_i = j} E_{i,i+1}`
/// and `U -> 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct NestRepresentation {
    n: usize,
    generator_images: MatrixTuple,
    u_image: CMat,
    diagonal_points: Vec<BallPoint>,
    delta: f64,
    word: Word,
}

/// `delta` defaults to `(1 + max ||z_i||) / 2`.
pub fn build_rho(points: &[BallPoint], w: &Word, delta: Option<f64>) -> Result<NestRepresentation> {
    let k = w.len();
    if k < 2 {
        return Err(Error::WordTooShort { length: k, min: 2 });
    }
    if points.len() != k + 1 {
        return Err(Error::WrongPointCount {
            expected: k + 1,
            found: points.len(),
        });
    }
    let n = points[0].dim();
    for p in points {
        if p.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: p.dim(),
            });
        }
    }
    if w.max_letter() > n {
        return Err(Error::LetterOutOfRange {
            letter: w.max_letter(),
            n,
        });
    }
    let radius = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let delta = delta.unwrap_or((1.0 + radius) / 2.0);
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::DeltaOutOfRange { delta });
    }
    for (index, p) in points.iter().enumerate() {
        if p.norm() >= delta {
            return Err(Error::PointsNotInDeltaBall {
                index: index + 1,
                norm: p.norm(),
                delta,
            });
        }
    }
    let size = k + 1;
    let off = C64::from(1.0 - delta);
    let mats = (1..=n)
        .map(|j| {
            let mut m = CMat::zeros(size, size);
            for (i, p) in points.iter().enumerate() {
                m[(i, i)] = p.coord(j - 1);
            }
            for (i, &l) in w.letters().iter().enumerate() {
                if l == j {
                    m[(i, i + 1)] = off;
                }
            }
            m
        })
        .collect();
    Ok(NestRepresentation {
        n,
        generator_images: MatrixTuple::new(mats)?,
        u_image: CMat::zeros(size, size),
        diagonal_points: points.to_vec(),
        delta,
        word: w.clone(),
    })
}

impl NestRepresentation {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Matrix size `k + 1`.
    pub fn size(&self) -> usize {
        self.word.len() + 1
    }

    pub fn generator_images(&self) -> &MatrixTuple {
        &self.generator_images
    }

    pub fn u_image(&self) -> &CMat {
        &self.u_image
    }

    pub fn diagonal_points(&self) -> &[BallPoint] {
        &self.diagonal_points
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn row_norm(&self) -> f64 {
        self.generator_images.row_norm()
    }

    pub fn eval(&self, p: &FreePolynomial) -> Result<CMat> {
        p.eval_tuple(&self.generator_images)
    }
}

/// The `(1, k+1)` entry of `rho(S_v)`.
pub fn corner_entry(rep: &NestRepresentation, v: &Word) -> Result<C64> {
    let k = rep.size() - 1;
    let mut row = CVec::zeros(k + 1).transpose();
    row[0] = C64::from(1.0);
    for &l in v.letters() {
        if l == 0 || l > rep.n {
            return Err(Error::LetterOutOfRange {
                letter: l,
                n: rep.n,
            });
        }
        row *= rep.generator_images.get(l - 1);
    }
    Ok(row[k])
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurjectivityReport {
    pub surjective: bool,
    pub dimension: usize,
    pub target: usize,
}

/// Dimension of the unital algebra generated by the generator images,
/// by closing the span under left multiplication.
pub fn check_surjective(rep: &NestRepresentation) -> SurjectivityReport {
    let size = rep.size();
    let target = size * (size + 1) / 2;
    let flat = |m: &CMat| CVec::from_iterator(size * size, m.iter().cloned());
    let mut basis_vecs: Vec<CVec> = Vec::new();
    let mut frontier: VecDeque<CMat> = VecDeque::from([CMat::identity(size, size)]);
    while let Some(m) = frontier.pop_front() {
        let Some(v) = gram_schmidt_step(&basis_vecs, flat(&m), SPAN_TOL) else {
            continue;
        };
        // multiply the orthonormalised element, not the raw product
        let unit = CMat::from_iterator(size, size, v.iter().cloned());
        basis_vecs.push(v);
        for g in rep.generator_images.matrices() {
            frontier.push_back(g * &unit);
        }
        if basis_vecs.len() == size * size {
            break;
        }
    }
    let dimension = basis_vecs.len();
    SurjectivityReport {
        surjective: dimension == target,
        dimension,
        target,
    }
}

/// A nest representation on which a polynomial does not vanish.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparationWitness {
    pub word: Word,
    pub perturbed_points: Vec<BallPoint>,
    pub rep: NestRepresentation,
    /// 1-based `(row, col)`.
    pub entry: (usize, usize),
    pub value: C64,
    pub tries: usize,
}

fn coordinates_distinct(points: &[CVec]) -> bool {
    let all: Vec<C64> = points.iter().flat_map(|p| p.iter().cloned()).collect();
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            if (all[i] - all[j]).norm() <= COLLISION_TOL {
                return false;
            }
        }
    }
    true
}

/// Finds `Z'` within `eps` of `Z` (padded with zeros) and a word `w` with
/// `rho_{Z',w}(A) != 0`.
///
/// When the abelianisation of `A` is nonzero the witness is the diagonal
/// entry `(1, 1)`, which is `A` evaluated at `z'_1`. Otherwise `w` is the
/// minimal word of `A` and the witness is the corner `(1, |w| + 1)`.
pub fn separate(
    a: &FreePolynomial,
    z: &PointSequence,
    eps: f64,
    seed: u64,
    max_tries: usize,
) -> Result<SeparationWitness> {
    if a.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let n = a.n();
    if let Some(p) = z.points().first() {
        if p.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: p.dim(),
            });
        }
    }
    let (word, entry) = if a.abelianize().is_zero() {
        let w = a.minimal_word()?;
        let k = w.len();
        (w, (1, k + 1))
    } else {
        let letters = if n >= 2 { vec![1, 2] } else { vec![1, 1] };
        (Word::new(letters, n)?, (1, 1))
    };
    let k = word.len();
    let base = z.prefix(n, k + 1);
    // uniform box whose diagonal has length eps
    let half = eps / (2.0 * n as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=max_tries {
        let moved: Vec<CVec> = base
            .iter()
            .map(|p| {
                p.map(|c| {
                    c + C64::new(
                        rng.random_range(-half..=half),
                        rng.random_range(-half..=half),
                    )
                })
            })
            .collect();
        if !coordinates_distinct(&moved) || moved.iter().any(|p| p.norm() >= 1.0 - 1e-9) {
            continue;
        }
        let points: Vec<BallPoint> = moved
            .into_iter()
            .map(BallPoint::from_vec_unchecked)
            .collect();
        let rep = build_rho(&points, &word, None)?;
        let value = rep.eval(a)?[(entry.0 - 1, entry.1 - 1)];
        if value.norm() > WITNESS_FLOOR {
            return Ok(SeparationWitness {
                word,
                perturbed_points: points,
                rep,
                entry,
                value,
                tries: attempt,
            });
        }
    }
    Err(Error::SearchExhausted { tries: max_tries })
}

/// `rho(X)`: only the `U^0` coefficient survives since `rho(U) = 0`.
pub fn rep_eval(rep: &NestRepresentation, x: &SemicrossedElement) -> Result<CMat> {
    if x.n() != rep.n {
        return Err(Error::DimensionMismatch {
            expected: rep.n,
            found: x.n(),
        });
    }
    rep.eval(&x.coeff(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, max_abs};

    fn w(l: &[usize]) -> Word {
        Word::new(l.to_vec(), 2).unwrap()
    }

    fn zeros(k: usize) -> Vec<BallPoint> {
        vec![BallPoint::origin(2); k]
    }

    fn scattered(n: usize, count: usize, seed: u64, radius: f64) -> Vec<BallPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| crate::cball::random_ball_point(&mut rng, n, radius))
            .collect()
    }

    #[test]
    fn corner_of_defining_word() {
        let rep = build_rho(&zeros(3), &w(&[1, 2]), Some(0.5)).unwrap();
        assert_eq!(corner_entry(&rep, &w(&[1, 2])).unwrap(), c64(0.25, 0.0));
        assert_eq!(corner_entry(&rep, &w(&[2, 1])).unwrap(), c64(0.0, 0.0));
        assert!(rep.row_norm() < 1.0);
    }

    #[test]
    fn corner_vanishes_on_long_words_at_origin() {
        let rep = build_rho(&zeros(3), &w(&[1, 2]), Some(0.5)).unwrap();
        for v in Word::all_of_length(2, 3) {
            assert_eq!(corner_entry(&rep, &v).unwrap(), c64(0.0, 0.0));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let pts = zeros(3);
        assert!(matches!(
            build_rho(&pts, &w(&[1]), None),
            Err(Error::WordTooShort { .. })
        ));
        assert!(matches!(
            build_rho(&pts[..2], &w(&[1, 2]), None),
            Err(Error::WrongPointCount { .. })
        ));
        assert!(matches!(
            build_rho(&pts, &w(&[1, 2]), Some(1.0)),
            Err(Error::DeltaOutOfRange { .. })
        ));
        let far = vec![BallPoint::from_reals(&[0.7, 0.0]).unwrap(); 3];
        assert!(matches!(
            build_rho(&far, &w(&[1, 2]), Some(0.5)),
            Err(Error::PointsNotInDeltaBall { index: 1, .. })
        ));
    }

    #[test]
    fn surjectivity_for_distinct_coordinates() {
        let rep = build_rho(&scattered(2, 3, 4, 0.4), &w(&[1, 2]), Some(0.6)).unwrap();
        assert_eq!(
            check_surjective(&rep),
            SurjectivityReport {
                surjective: true,
                dimension: 6,
                target: 6
            }
        );
        let rep = build_rho(&scattered(2, 4, 5, 0.4), &w(&[2, 1, 2]), None).unwrap();
        assert_eq!(check_surjective(&rep).dimension, 10);
        let rep = build_rho(&zeros(3), &w(&[1, 2]), Some(0.5)).unwrap();
        let r = check_surjective(&rep);
        assert!(!r.surjective && r.dimension < 6);
    }

    #[test]
    fn corner_degree_is_length_minus_k() {
        let base = scattered(2, 3, 11, 0.5);
        let word = w(&[1, 2]);
        for v in Word::all_of_length(2, 4) {
            let at = |t: f64| {
                let pts: Vec<BallPoint> = base
                    .iter()
                    .map(|p| BallPoint::new(p.coords() * C64::from(t)).unwrap())
                    .collect();
                corner_entry(&build_rho(&pts, &word, Some(0.8)).unwrap(), &v).unwrap()
            };
            let (a, b, c) = (at(1.0), at(0.5), at(0.25));
            if a.norm() < 1e-12 {
                continue;
            }
            let measured = (a.norm() / b.norm()).log2();
            assert!((measured - 2.0).abs() < 1e-9, "word {v}");
            assert!(((b.norm() / c.norm()).log2() - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn separates_linear_polynomial() {
        let a = FreePolynomial::generator(2, 1).unwrap();
        let wit = separate(&a, &PointSequence::zeros(2, 1), 1e-2, 3, 1000).unwrap();
        assert_eq!(wit.entry, (1, 1));
        assert_eq!(wit.value, wit.perturbed_points[0].coord(0));
        assert!(wit.perturbed_points[0].distance(&BallPoint::origin(2)) <= 1e-2);
    }

    #[test]
    fn separates_commutator() {
        let a = FreePolynomial::from_terms(
            2,
            [(w(&[1, 2]), c64(1.0, 0.0)), (w(&[2, 1]), c64(-1.0, 0.0))],
        )
        .unwrap();
        let wit = separate(&a, &PointSequence::zeros(2, 3), 1e-3, 8, 1000).unwrap();
        assert_eq!(wit.word, w(&[1, 2]));
        assert_eq!(wit.entry, (1, 3));
        let expect = (1.0 - wit.rep.delta()).powi(2);
        assert!((wit.value - c64(expect, 0.0)).norm() < 1e-2);
    }

    #[test]
    fn separates_unit() {
        let wit = separate(
            &FreePolynomial::unit(2),
            &PointSequence::zeros(2, 0),
            1e-2,
            0,
            10,
        )
        .unwrap();
        assert_eq!(wit.value, c64(1.0, 0.0));
    }

    #[test]
    fn separate_rejects_zero() {
        assert_eq!(
            separate(
                &FreePolynomial::zero(2),
                &PointSequence::zeros(2, 3),
                1e-2,
                0,
                10
            ),
            Err(Error::ZeroPolynomial)
        );
    }

    #[test]
    fn rep_eval_drops_u_terms() {
        let rep = build_rho(&scattered(2, 3, 1, 0.3), &w(&[1, 2]), None).unwrap();
        let s1 = FreePolynomial::generator(2, 1).unwrap();
        let x = SemicrossedElement::from_terms(2, [(0, FreePolynomial::unit(2)), (1, s1.clone())])
            .unwrap();
        assert!(max_abs(&(rep_eval(&rep, &x).unwrap() - CMat::identity(3, 3))) == 0.0);
        let y = SemicrossedElement::from_terms(2, [(2, s1)]).unwrap();
        assert!(max_abs(&rep_eval(&rep, &y).unwrap()) == 0.0);
    }
}
