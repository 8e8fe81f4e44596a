//! Seeded random automorphisms for tests and the verification suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::linalg::{form_j, CMat, CVec, C64, ONE, ZERO};

use super::automorphism::MobiusAutomorphism;
use super::fixed::AutType;
use super::lift::AutomorphismLift;
use super::point::BallPoint;

const MAX_CENTER_RADIUS: f64 = 0.75;
const PHASE_GAP: f64 = 0.1;

fn gaussian(rng: &mut impl Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary(rng: &mut impl Rng, n: usize) -> CMat {
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let g = CMat::from_fn(n, n, |_, _| gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        let col = q.column(j) * phase;
        q.set_column(j, &col);
    }
    q
}

/// A point with uniformly random direction and radius uniform in
/// `[0, max_radius]`.
pub fn random_ball_point(rng: &mut impl Rng, n: usize, max_radius: f64) -> BallPoint {
    let v = CVec::from_fn(n, |_, _| gaussian(rng));
    let r = max_radius * rng.random::<f64>();
    let norm = v.norm();
    BallPoint::from_vec_unchecked(v * C64::from(r / norm))
}

/// Unit scalar at angular distance at least `gap` from 1.
fn phase_away_from_one(rng: &mut impl Rng, gap: f64) -> C64 {
    C64::from_polar(1.0, rng.random_range(gap..std::f64::consts::TAU - gap))
}

fn generic(rng: &mut impl Rng, n: usize) -> Result<MobiusAutomorphism> {
    MobiusAutomorphism::new(
        haar_unitary(rng, n),
        random_ball_point(rng, n, MAX_CENTER_RADIUS),
    )
}

fn elliptic(rng: &mut impl Rng, n: usize) -> Result<MobiusAutomorphism> {
    let q = haar_unitary(rng, n);
    let mut phases: Vec<C64> = (0..n)
        .map(|_| phase_away_from_one(rng, PHASE_GAP))
        .collect();
    if n > 1 && rng.random_bool(0.5) {
        phases[0] = ONE;
    }
    let u = &q * CMat::from_diagonal(&CVec::from_vec(phases)) * q.adjoint();
    let rot = MobiusAutomorphism::from_unitary(crate::linalg::nearest_unitary(&u))?;
    let b = MobiusAutomorphism::involution(&random_ball_point(rng, n, MAX_CENTER_RADIUS))?;
    b.compose(&rot)?.compose(&b)
}

fn hyperbolic(rng: &mut impl Rng, n: usize) -> Result<MobiusAutomorphism> {
    let t = rng.random_range(0.3..0.9);
    let mut a = CVec::zeros(n);
    a[0] = C64::from(-t);
    let translation = MobiusAutomorphism::new(CMat::identity(n, n), BallPoint::new(a)?)?;
    let mut u = CMat::identity(n, n);
    if n > 1 {
        u.view_mut((1, 1), (n - 1, n - 1))
            .copy_from(&haar_unitary(rng, n - 1));
    }
    let core = MobiusAutomorphism::from_unitary(u)?.compose(&translation)?;
    generic(rng, n)?.conjugate(&core)
}

fn parabolic(rng: &mut impl Rng, n: usize) -> Result<MobiusAutomorphism> {
    let k = n - 1;
    let size = n + 1;
    // Siegel frame at the boundary point e_1
    let mut frame = CMat::zeros(size, size);
    frame[(0, 0)] = ONE;
    frame[(n, 0)] = ONE;
    for i in 1..n {
        frame[(i, i)] = ONE;
    }
    frame[(0, n)] = C64::from(0.5);
    frame[(n, n)] = C64::from(-0.5);
    let mut h = CMat::identity(size, size);
    h[(0, 0)] = ZERO;
    h[(n, n)] = ZERO;
    h[(0, n)] = ONE;
    h[(n, 0)] = ONE;
    let frame_inv = &h * frame.adjoint() * form_j(n);

    let vertical = k == 0 || rng.random_bool(0.5);
    // rotation phases near 1 make the fixed point ill-conditioned
    let q = haar_unitary(rng, k);
    let phases: Vec<C64> = (0..k)
        .map(|_| phase_away_from_one(rng, PHASE_GAP))
        .collect();
    let mut v = &q * CMat::from_diagonal(&CVec::from_vec(phases)) * q.adjoint();
    let mut y = CVec::zeros(k);
    let twist = rng.random_range(0.5..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let c = if vertical {
        C64::new(0.0, twist)
    } else {
        let r: f64 = rng.random_range(0.5..1.5);
        let mut d: Vec<C64> = (0..k)
            .map(|_| phase_away_from_one(rng, PHASE_GAP))
            .collect();
        d[0] = ONE;
        v = CMat::from_diagonal(&CVec::from_vec(d));
        y[0] = C64::from(r);
        C64::new(-0.5 * r * r, rng.random_range(-1.0..1.0))
    };
    let mut p = CMat::identity(size, size);
    if k > 0 {
        p.view_mut((1, 1), (k, k)).copy_from(&v);
        let top = -(y.adjoint() * &v);
        p.view_mut((0, 1), (1, k)).copy_from(&top);
        p.view_mut((1, n), (k, 1)).copy_from(&y);
    }
    p[(0, n)] = c;
    let lift = AutomorphismLift::new(&frame * p * frame_inv)?;
    let core = lift.to_automorphism()?;
    generic(rng, n)?.conjugate(&core)
}

/// A deterministic automorphism of `B_n` for the given seed. With a type
/// hint the result has that type; without one it is `U m_a` with Haar `U`
/// and `|a| <= 0.75`.
pub fn random_automorphism(
    seed: u64,
    n: usize,
    hint: Option<AutType>,
) -> Result<MobiusAutomorphism> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_automorphism_with(&mut rng, n, hint)
}

pub(crate) fn random_automorphism_with(
    rng: &mut impl Rng,
    n: usize,
    hint: Option<AutType>,
) -> Result<MobiusAutomorphism> {
    match hint {
        None => generic(rng, n),
        Some(AutType::Identity) => Ok(MobiusAutomorphism::identity(n)),
        Some(AutType::Elliptic) => elliptic(rng, n),
        Some(AutType::Hyperbolic) => hyperbolic(rng, n),
        Some(AutType::Parabolic) => parabolic(rng, n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_defect;

    #[test]
    fn seeded_output_is_reproducible() {
        let a = random_automorphism(0, 2, None).unwrap();
        let b = random_automorphism(0, 2, None).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_automorphism(1, 2, None).unwrap());
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 1..6 {
            assert!(unitarity_defect(&haar_unitary(&mut rng, n)) < 1e-13);
        }
    }

    #[test]
    fn type_hints_are_honoured() {
        for seed in 0..20 {
            for n in 1..=4 {
                for ty in [AutType::Elliptic, AutType::Hyperbolic, AutType::Parabolic] {
                    let phi = random_automorphism(seed, n, Some(ty)).unwrap();
                    assert_eq!(phi.classify().unwrap(), ty, "seed {seed} n {n}");
                }
            }
        }
    }
}
