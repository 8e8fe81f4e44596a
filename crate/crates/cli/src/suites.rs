//! Seeded property suites behind `semicross verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use semicross::cball::{
    are_conjugate, fixed_point_residual, random_automorphism, random_ball_point, AutType,
    MobiusAutomorphism, Verdict, CERTIFICATE_TOL, FIXED_RESIDUAL_TOL,
};
use semicross::dshift::{ceval_2x2, drury_check, CommutingPair2x2};
use semicross::freepoly::{von_neumann_check, Word};
use semicross::linalg::{CMat, CVec, C64};
use semicross::nestrep::{
    build_rho, check_surjective, corner_entry, separate, PointSequence, WITNESS_FLOOR,
};
use semicross::sample;
use semicross::semicrossed::{
    build_srep, check_covariance_2x2, decide_isomorphism, in_ideal, orbit_representation,
    zero_u_certificate, IsoVerdict, INTERPOLATION_TOL,
};
use semicross::Result as CoreResult;
use serde_json::{json, Value};

use crate::Suite;

const GROUP_TOL: f64 = 1e-10;
const CORNER_TOL: f64 = 1e-12;
const ORBIT_TOL: f64 = 1e-14;
const MULT_TOL: f64 = 1e-9;
const TRUNCATION_EXTRA: usize = 6;
const MAX_ROW_NORM: f64 = 0.9;
const FAILURES_SHOWN: usize = 5;

/// A case returns its error measure, or a description of what went wrong.
type Case = fn(&mut ChaCha8Rng) -> Result<f64, String>;

struct Property {
    name: &'static str,
    case: Case,
}

pub struct PropertyReport {
    name: &'static str,
    cases: usize,
    passed: usize,
    failures: Vec<(usize, String)>,
    worst: f64,
}

pub struct SuiteReport {
    suites: Vec<(&'static str, Vec<PropertyReport>)>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.suites
            .iter()
            .flat_map(|(_, p)| p)
            .all(|p| p.passed == p.cases)
    }

    pub fn prose(&self) -> String {
        let mut lines = Vec::new();
        for (suite, props) in &self.suites {
            for p in props {
                let mark = if p.passed == p.cases { "pass" } else { "FAIL" };
                lines.push(format!(
                    "{mark} {suite}/{}: {}/{} (worst {:.2e})",
                    p.name, p.passed, p.cases, p.worst
                ));
            }
        }
        lines.join("\n")
    }

    pub fn to_json(&self) -> Value {
        let suites: Vec<Value> = self
            .suites
            .iter()
            .map(|(name, props)| {
                let props: Vec<Value> = props
                    .iter()
                    .map(|p| {
                        let failures: Vec<Value> = p
                            .failures
                            .iter()
                            .take(FAILURES_SHOWN)
                            .map(|(i, m)| json!({"case": i, "message": m}))
                            .collect();
                        json!({
                            "name": p.name,
                            "cases": p.cases,
                            "passed": p.passed,
                            "failures": failures,
                            "worst": p.worst,
                        })
                    })
                    .collect();
                json!({"name": name, "properties": props})
            })
            .collect();
        json!({"suites": suites, "pass": self.pass()})
    }
}

fn case_seed(seed: u64, suite: usize, prop: usize, case: usize) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for x in [suite as u64, prop as u64, case as u64] {
        h = (h ^ x).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 31;
    }
    h
}

fn run_property(
    seed: u64,
    suite: usize,
    prop: usize,
    p: &Property,
    cases: usize,
) -> PropertyReport {
    let outcomes: Vec<Result<f64, String>> = (0..cases)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(case_seed(seed, suite, prop, i));
            (p.case)(&mut rng)
        })
        .collect();
    let mut report = PropertyReport {
        name: p.name,
        cases,
        passed: 0,
        failures: Vec::new(),
        worst: 0.0,
    };
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(e) => {
                report.passed += 1;
                report.worst = report.worst.max(e);
            }
            Err(m) => report.failures.push((i, m)),
        }
    }
    report
}

pub fn run(which: Suite, seed: u64, cases: usize) -> SuiteReport {
    let all = [
        (Suite::Cball, "cball", cball()),
        (Suite::Freepoly, "freepoly", freepoly()),
        (Suite::Nestrep, "nestrep", nestrep()),
        (Suite::Semicrossed, "semicrossed", semicrossed()),
        (Suite::Dshift, "dshift", dshift()),
    ];
    let suites = all
        .iter()
        .enumerate()
        .filter(|(_, (s, _, _))| which == Suite::All || which == *s)
        .map(|(si, (_, name, props))| {
            let reports = props
                .iter()
                .enumerate()
                .map(|(pi, p)| run_property(seed, si, pi, p, cases))
                .collect();
            (*name, reports)
        })
        .collect();
    SuiteReport { suites }
}

fn check(cond: bool, err: f64, what: impl FnOnce() -> String) -> Result<f64, String> {
    if cond {
        Ok(err)
    } else {
        Err(what())
    }
}

fn core<T>(r: CoreResult<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn random_type(rng: &mut ChaCha8Rng) -> AutType {
    [AutType::Elliptic, AutType::Parabolic, AutType::Hyperbolic][rng.random_range(0..3)]
}

fn random_phi(rng: &mut ChaCha8Rng, n: usize) -> Result<MobiusAutomorphism, String> {
    let ty = random_type(rng);
    core(random_automorphism(rng.random(), n, Some(ty)))
}

fn sup_to_identity(phi: &MobiusAutomorphism) -> f64 {
    let probes = MobiusAutomorphism::probe_points(phi.dim(), 16);
    phi.sup_distance(&MobiusAutomorphism::identity(phi.dim()), &probes)
}

fn cball() -> Vec<Property> {
    vec![
        Property {
            name: "involution",
            case: |rng| {
                let n = rng.random_range(1..=4);
                let a = random_ball_point(rng, n, 0.95);
                let phi = core(MobiusAutomorphism::involution(&a))?;
                let e = sup_to_identity(&core(phi.compose(&phi))?);
                check(e <= GROUP_TOL, e, || {
                    format!("phi_a o phi_a differs from id by {e:.2e}")
                })
            },
        },
        Property {
            name: "inverse",
            case: |rng| {
                let n = rng.random_range(1..=4);
                let phi = random_phi(rng, n)?;
                let e = sup_to_identity(&core(phi.compose(&phi.inverse()))?);
                check(e <= GROUP_TOL, e, || {
                    format!("phi o phi^-1 differs from id by {e:.2e}")
                })
            },
        },
        Property {
            name: "fixed_points",
            case: |rng| {
                let n = rng.random_range(1..=4);
                let ty = random_type(rng);
                let phi = core(random_automorphism(rng.random(), n, Some(ty)))?;
                let data = core(phi.fixed_points())?;
                let e = fixed_point_residual(&phi, &data);
                if data.type_tag != ty {
                    return Err(format!(
                        "built {} but classified {}",
                        ty.as_str(),
                        data.type_tag.as_str()
                    ));
                }
                let shape = match ty {
                    AutType::Elliptic => data.interior.is_some(),
                    AutType::Parabolic => {
                        data.interior.is_none() && data.boundary_points.len() == 1
                    }
                    AutType::Hyperbolic => {
                        data.interior.is_none() && data.boundary_points.len() == 2
                    }
                    AutType::Identity => true,
                };
                check(shape && e <= FIXED_RESIDUAL_TOL, e, || {
                    format!("fixed set shape {shape}, residual {e:.2e}")
                })
            },
        },
        Property {
            name: "conjugacy",
            case: |rng| {
                let n = rng.random_range(1..=4);
                let phi = random_phi(rng, n)?;
                let g = core(random_automorphism(rng.random(), n, None))?;
                let v = core(are_conjugate(&phi, &core(g.conjugate(&phi))?))?;
                let r = v.residual.unwrap_or(f64::INFINITY);
                check(
                    v.verdict == Verdict::Conjugate && r <= CERTIFICATE_TOL,
                    r,
                    || format!("verdict {} residual {r:.2e}", v.verdict.as_str()),
                )
            },
        },
    ]
}

fn freepoly() -> Vec<Property> {
    vec![
        Property {
            name: "multiplicative_eval",
            case: |rng| {
                let n = rng.random_range(1..=3);
                let p = sample::free_polynomial(rng, n, 3, 5);
                let q = sample::free_polynomial(rng, n, 3, 5);
                let t = sample::row_contraction(rng, n, 3, 0.9);
                let lhs = core((&p * &q).eval_tuple(&t))?;
                let rhs = core(p.eval_tuple(&t))? * core(q.eval_tuple(&t))?;
                let e = (lhs - &rhs).norm() / rhs.norm().max(1.0);
                check(e <= MULT_TOL, e, || format!("(pq)(T) - p(T)q(T) = {e:.2e}"))
            },
        },
        Property {
            name: "von_neumann",
            case: |rng| {
                let n = rng.random_range(1..=3);
                let p = sample::free_polynomial(rng, n, 4, 5);
                let k = rng.random_range(1..=4);
                let radius = rng.random_range(0.1..=MAX_ROW_NORM);
                let t = sample::row_contraction(rng, n, k, radius);
                let level = p.degree().unwrap_or(0) + TRUNCATION_EXTRA;
                let r = core(von_neumann_check(&p, &t, level))?;
                check(r.pass, (-r.margin).max(0.0), || {
                    format!("lhs {:.6} > rhs {:.6}", r.lhs, r.rhs)
                })
            },
        },
    ]
}

fn nestrep() -> Vec<Property> {
    vec![
        Property {
            name: "corner",
            case: |rng| {
                let k = rng.random_range(2..=3);
                let points = sample::ball_points(rng, 2, k + 1, 0.5);
                let w = Word::new((0..k).map(|_| rng.random_range(1..=2)).collect(), 2)
                    .expect("letters in range");
                let delta = rng.random_range(0.55..0.95);
                let rep = core(build_rho(&points, &w, Some(delta)))?;
                let mut worst: f64 = 0.0;
                for len in 0..=k {
                    for v in Word::all_of_length(2, len) {
                        let expected = if v == w {
                            (1.0 - delta).powi(k as i32)
                        } else {
                            0.0
                        };
                        worst = worst
                            .max((core(corner_entry(&rep, &v))? - C64::new(expected, 0.0)).norm());
                    }
                }
                check(worst <= CORNER_TOL, worst, || {
                    format!("corner error {worst:.2e}")
                })
            },
        },
        Property {
            name: "surjective",
            case: |rng| {
                let n = rng.random_range(2..=3);
                let k = rng.random_range(2..=4);
                let points = sample::ball_points(rng, n, k + 1, 0.4);
                let w = Word::new((0..k).map(|_| rng.random_range(1..=n)).collect(), n)
                    .expect("letters in range");
                let rep = core(build_rho(&points, &w, None))?;
                let s = check_surjective(&rep);
                let target = (k + 1) * (k + 2) / 2;
                check(s.surjective && s.dimension == target, 0.0, || {
                    format!("dimension {} of {target}", s.dimension)
                })
            },
        },
        Property {
            name: "separate",
            case: |rng| {
                let n = rng.random_range(1..=3);
                let p = sample::free_polynomial(rng, n, 4, 6);
                let w = core(separate(
                    &p,
                    &PointSequence::zeros(n, 0),
                    1e-2,
                    rng.random(),
                    1000,
                ))?;
                let v = w.value.norm();
                check(v > WITNESS_FLOOR, 0.0, || format!("witness value {v:.2e}"))
            },
        },
    ]
}

fn semicrossed() -> Vec<Property> {
    vec![
        Property {
            name: "srep_covariance",
            case: |rng| {
                let n = rng.random_range(1..=3);
                let phi = random_phi(rng, n)?;
                let z = random_ball_point(rng, n, 0.9);
                let b = CVec::from_fn(n, |_, _| sample::complex_gaussian(rng));
                let c = sample::unit_disc(rng) + C64::new(0.1, 0.0);
                let pair = core(build_srep(&phi, &z, &b, c))?;
                let e = core(check_covariance_2x2(&pair, &phi))?;
                check(e == 0.0, e, || format!("covariance residual {e:.2e}"))
            },
        },
        Property {
            name: "zero_u_certificate",
            case: |rng| {
                let n = rng.random_range(1..=3);
                let k = rng.random_range(1..=4);
                let phi = random_phi(rng, n)?;
                let points = sample::ball_points(rng, n, k, 0.8);
                let cert = core(zero_u_certificate(&points, &phi))?;
                let e = cert.interpolation_error();
                if e > INTERPOLATION_TOL {
                    return Err(format!("interpolation error {e:.2e}"));
                }
                let cand = CMat::from_fn(k, k, |_, _| sample::complex_gaussian(rng));
                let out = core(cert.replay(&cand, rng.random()))?;
                check(out.annihilated, e, || {
                    "replay did not annihilate the candidate".into()
                })
            },
        },
        Property {
            name: "ideal",
            case: |rng| {
                let n = rng.random_range(1..=3);
                let x = sample::semicrossed_element(rng, n, 2, 3);
                let a0_zero = x.coeff(0).is_zero();
                check(in_ideal(&x) == a0_zero, 0.0, || {
                    "membership disagrees with A_0".into()
                })
            },
        },
        Property {
            name: "orbit",
            case: |rng| {
                let n = rng.random_range(1..=3);
                let phi = random_phi(rng, n)?;
                let z = random_ball_point(rng, n, 0.9);
                let blocks = rng.random_range(2..=16);
                let pair = core(orbit_representation(&phi, &z, blocks))?;
                let e = pair.covariance_residual(&phi).unwrap_or(f64::INFINITY);
                check(e <= ORBIT_TOL, e, || format!("covariance residual {e:.2e}"))
            },
        },
        Property {
            name: "decide_conjugates",
            case: |rng| {
                let n = rng.random_range(2..=3);
                let phi = random_phi(rng, n)?;
                let g = core(random_automorphism(rng.random(), n, None))?;
                let r = core(decide_isomorphism(&phi, &core(g.conjugate(&phi))?))?;
                let e = r.conjugacy.residual.unwrap_or(f64::INFINITY);
                check(r.verdict == IsoVerdict::Isomorphic, e, || {
                    format!("verdict {}", r.verdict.as_str())
                })
            },
        },
    ]
}

fn dshift() -> Vec<Property> {
    vec![
        Property {
            name: "drury",
            case: |rng| {
                let d = rng.random_range(1..=3);
                let f = sample::cpoly(rng, d, 4, 5);
                let x = random_ball_point(rng, d, 0.85);
                let y = random_ball_point(rng, d, 0.85);
                let pair = CommutingPair2x2::new(x, y, sample::complex_gaussian(rng));
                let pair = core(core(pair)?.contracted(1.0 - MAX_ROW_NORM))?;
                let level = f.degree().unwrap_or(0) + TRUNCATION_EXTRA;
                let r = core(drury_check(&f, &pair.tuple(), level))?;
                check(r.pass, (-r.margin).max(0.0), || {
                    format!("lhs {:.6} > rhs {:.6}", r.lhs, r.rhs)
                })
            },
        },
        Property {
            name: "divided_difference",
            case: |rng| {
                let d = rng.random_range(1..=3);
                let f = sample::cpoly(rng, d, 3, 5);
                let g = sample::cpoly(rng, d, 3, 5);
                let x = random_ball_point(rng, d, 0.9);
                let y = random_ball_point(rng, d, 0.9);
                let pair = core(CommutingPair2x2::new(x, y, sample::complex_gaussian(rng)))?;
                let lhs = core(ceval_2x2(&(&f * &g), &pair))?;
                let rhs = core(ceval_2x2(&f, &pair))? * core(ceval_2x2(&g, &pair))?;
                let e = (lhs - &rhs).norm() / rhs.norm().max(1.0);
                check(e <= MULT_TOL, e, || format!("(fg)(M) - f(M)g(M) = {e:.2e}"))
            },
        },
    ]
}
