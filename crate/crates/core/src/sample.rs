//! Seeded random inputs shared by the verification suites and tests.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::cball::{random_ball_point, BallPoint};
use crate::dshift::CPoly;
use crate::freepoly::{FreePolynomial, MatrixTuple, Word};
use crate::linalg::{CMat, C64};
use crate::semicrossed::SemicrossedElement;

pub fn complex_gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Uniform in the unit disc.
pub fn unit_disc(rng: &mut impl Rng) -> C64 {
    let r = rng.random::<f64>().sqrt();
    C64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU))
}

fn random_word(rng: &mut impl Rng, n: usize, len: usize) -> Word {
    Word::new((0..len).map(|_| rng.random_range(1..=n)).collect(), n).expect("letters in range")
}

/// A nonzero polynomial with at most `max_terms` terms of degree at most
/// `max_degree` and Gaussian coefficients.
pub fn free_polynomial(
    rng: &mut impl Rng,
    n: usize,
    max_degree: usize,
    max_terms: usize,
) -> FreePolynomial {
    loop {
        let count = rng.random_range(1..=max_terms.max(1));
        let terms: Vec<(Word, C64)> = (0..count)
            .map(|_| {
                let len = rng.random_range(0..=max_degree);
                (random_word(rng, n, len), complex_gaussian(rng))
            })
            .collect();
        let p = FreePolynomial::from_terms(n, terms).expect("letters in range");
        if !p.is_zero() {
            return p;
        }
    }
}

/// A nonzero polynomial whose abelianisation vanishes: a combination of
/// commutators `S_u S_v - S_v S_u` times words.
pub fn commutator_polynomial(rng: &mut impl Rng, n: usize, max_degree: usize) -> FreePolynomial {
    assert!(n >= 2 && max_degree >= 2);
    loop {
        let mut p = FreePolynomial::zero(n);
        for _ in 0..rng.random_range(1..=3) {
            let lu = rng.random_range(1..=max_degree - 1);
            let lv = rng.random_range(1..=max_degree - lu);
            let u = random_word(rng, n, lu);
            let v = random_word(rng, n, lv);
            let c = complex_gaussian(rng);
            let comm = FreePolynomial::from_terms(n, [(u.concat(&v), c), (v.concat(&u), -c)])
                .expect("letters in range");
            p = &p + &comm;
        }
        if !p.is_zero() {
            return p;
        }
    }
}

pub fn cpoly(rng: &mut impl Rng, d: usize, max_degree: usize, max_terms: usize) -> CPoly {
    loop {
        let count = rng.random_range(1..=max_terms.max(1));
        let terms: Vec<(Vec<usize>, C64)> = (0..count)
            .map(|_| {
                let total = rng.random_range(0..=max_degree);
                let mut alpha = vec![0; d];
                for _ in 0..total {
                    alpha[rng.random_range(0..d)] += 1;
                }
                (alpha, complex_gaussian(rng))
            })
            .collect();
        let p = CPoly::from_terms(d, terms).expect("consistent lengths");
        if !p.is_zero() {
            return p;
        }
    }
}

/// A row contraction of `k x k` matrices with row norm exactly `radius`.
pub fn row_contraction(rng: &mut impl Rng, n: usize, k: usize, radius: f64) -> MatrixTuple {
    let mats: Vec<CMat> = (0..n)
        .map(|_| CMat::from_fn(k, k, |_, _| complex_gaussian(rng)))
        .collect();
    let t = MatrixTuple::new(mats).expect("square blocks");
    let norm = t.row_norm();
    t.scaled(radius / norm)
}

pub fn ball_points(rng: &mut impl Rng, n: usize, count: usize, max_radius: f64) -> Vec<BallPoint> {
    (0..count)
        .map(|_| random_ball_point(rng, n, max_radius))
        .collect()
}

/// Random element `sum_{m <= max_power} U^m A_m`; `A_0` is dropped with
/// probability one half.
pub fn semicrossed_element(
    rng: &mut impl Rng,
    n: usize,
    max_power: usize,
    max_degree: usize,
) -> SemicrossedElement {
    loop {
        let mut terms = Vec::new();
        for m in 0..=max_power {
            if m == 0 && rng.random_bool(0.5) {
                continue;
            }
            if m == 0 || rng.random_bool(0.6) {
                terms.push((m, free_polynomial(rng, n, max_degree, 6)));
            }
        }
        let x = SemicrossedElement::from_terms(n, terms).expect("same alphabet");
        if !x.is_zero() {
            return x;
        }
    }
}
