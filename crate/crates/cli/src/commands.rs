use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semicross::cball::{
    are_conjugate, fixed_point_residual, random_automorphism, AutType, MobiusAutomorphism, Verdict,
    CERTIFICATE_TOL, FIXED_RESIDUAL_TOL,
};
use semicross::dshift::{ceval_2x2, ceval_point, decide_isomorphism_d, symfock_truncation};
use semicross::json::*;
use semicross::linalg::{CMat, C64};
use semicross::nestrep::{check_surjective, corner_entry, separate, PointSequence, WITNESS_FLOOR};
use semicross::semicrossed::{
    build_srep_with_scale, census, certify_not_in_ideal, check_covariance_2x2, decide_isomorphism,
    forced_theta_relation, in_ideal, orbit_representation, recognize_identity, zero_u_certificate,
    IsoVerdict, IsomorphismReport, INTERPOLATION_TOL, POINT_TOL,
};
use serde_json::{json, Value};

use crate::report::{finish, CliError, CliResult, Inputs, Outcome, Status, Success};
use crate::suites;
use crate::{AutCmd, Cli, Command, DsCmd, Global, Kind, RepCmd, ScCmd};

const DEFAULT_EPS: f64 = 1e-2;
const COVARIANCE_TOL: f64 = 1e-12;
const ORBIT_TOL: f64 = 1e-14;
const DEFAULT_CANDIDATES: usize = 20;

pub fn run(cli: &Cli) -> Outcome {
    let mut inputs = Inputs::default();
    let g = &cli.global;
    if let Some(t) = g.tol {
        if !(t.is_finite() && t >= 0.0) {
            let err = Err(CliError::Input {
                pointer: String::new(),
                message: format!("--tol must be a nonnegative number, got {t}"),
            });
            return finish(command_name(&cli.command), inputs.digest(), g.seed, err);
        }
    }
    let result = dispatch(&cli.command, &mut inputs, g);
    finish(command_name(&cli.command), inputs.digest(), g.seed, result)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Aut(a) => match a {
            AutCmd::Show { .. } => "aut show",
            AutCmd::Compose { .. } => "aut compose",
            AutCmd::Inverse { .. } => "aut inverse",
            AutCmd::Fix { .. } => "aut fix",
            AutCmd::Classify { .. } => "aut classify",
            AutCmd::Conjugate { .. } => "aut conjugate",
            AutCmd::Random { .. } => "aut random",
        },
        Command::Rep(r) => match r {
            RepCmd::Rho { .. } => "rep rho",
            RepCmd::Corner { .. } => "rep corner",
            RepCmd::Surjective { .. } => "rep surjective",
            RepCmd::Separate { .. } => "rep separate",
        },
        Command::Sc(s) => match s {
            ScCmd::Census { .. } => "sc census",
            ScCmd::Srep { .. } => "sc srep",
            ScCmd::ZeroUCert { .. } => "sc zero-u-cert",
            ScCmd::Ideal { .. } => "sc ideal",
            ScCmd::Decide { .. } => "sc decide",
            ScCmd::Orbit { .. } => "sc orbit",
        },
        Command::Ds(d) => match d {
            DsCmd::Eval { .. } => "ds eval",
            DsCmd::Symfock { .. } => "ds symfock",
            DsCmd::Decide { .. } => "ds decide",
        },
        Command::Verify { .. } => "verify",
    }
}

fn dispatch(c: &Command, inputs: &mut Inputs, g: &Global) -> CliResult<Success> {
    match c {
        Command::Aut(a) => aut(a, inputs, g),
        Command::Rep(r) => rep(r, inputs, g),
        Command::Sc(s) => sc(s, inputs, g),
        Command::Ds(d) => ds(d, inputs, g),
        Command::Verify { suite, cases } => {
            let report = suites::run(*suite, g.seed, *cases);
            let pass = report.pass();
            let prose = report.prose();
            Ok(Success::ok(report.to_json(), prose).status(Status::from_check(pass)))
        }
    }
}

fn load_phi(inputs: &mut Inputs, path: &std::path::Path) -> CliResult<MobiusAutomorphism> {
    let v = inputs.load(path)?;
    Ok(automorphism_from_json(&v, "")?)
}

fn aut(a: &AutCmd, inputs: &mut Inputs, g: &Global) -> CliResult<Success> {
    match a {
        AutCmd::Show { phi } => {
            let phi = load_phi(inputs, phi)?;
            let ty = phi.classify()?;
            let result = json!({
                "automorphism": automorphism_to_json(&phi),
                "lift": cmat_to_json(phi.lift()?.matrix()),
                "type": ty.as_str(),
                "is_identity": phi.is_identity(),
            });
            Ok(Success::ok(
                result,
                format!("{} automorphism of B_{}", ty.as_str(), phi.dim()),
            ))
        }
        AutCmd::Compose { a, b } => {
            let a = load_phi(inputs, a)?;
            let b = load_phi(inputs, b)?;
            let c = a.compose(&b)?;
            Ok(Success::ok(
                json!({"composition": automorphism_to_json(&c)}),
                "composed",
            ))
        }
        AutCmd::Inverse { phi } => {
            let phi = load_phi(inputs, phi)?;
            Ok(Success::ok(
                json!({"inverse": automorphism_to_json(&phi.inverse())}),
                "inverted",
            ))
        }
        AutCmd::Fix { phi } => {
            let phi = load_phi(inputs, phi)?;
            let data = phi.fixed_points()?;
            let residual = fixed_point_residual(&phi, &data);
            let tol = g.tol.unwrap_or(FIXED_RESIDUAL_TOL);
            let pass = residual <= tol;
            let prose = format!(
                "{}: interior fixed set of dimension {}, {} boundary fixed points, residual {residual:.2e}",
                data.type_tag.as_str(),
                data.interior_dim().map_or("none".into(), |d| d.to_string()),
                data.boundary_points.len()
            );
            Ok(Success::ok(
                json!({"fixed_points": fixed_points_to_json(&data), "residual": residual}),
                prose,
            )
            .tol("fixed_residual", tol)
            .status(Status::from_check(pass)))
        }
        AutCmd::Classify { phi } => {
            let phi = load_phi(inputs, phi)?;
            let ty = phi.classify()?;
            Ok(Success::ok(json!({"type": ty.as_str()}), ty.as_str()))
        }
        AutCmd::Conjugate { phi1, phi2, assert } => {
            let p1 = load_phi(inputs, phi1)?;
            let p2 = load_phi(inputs, phi2)?;
            let v = are_conjugate(&p1, &p2)?;
            let tol = g.tol.unwrap_or(CERTIFICATE_TOL);
            let certified = v.verdict == Verdict::Conjugate && v.residual.is_some_and(|r| r <= tol);
            let status = if *assert {
                Status::from_check(certified)
            } else {
                Status::Ok
            };
            Ok(Success::ok(conjugacy_to_json(&v), v.verdict.as_str())
                .tol("certificate_residual", tol)
                .status(status))
        }
        AutCmd::Random { n, kind } => {
            if *n == 0 {
                return Err(CliError::Input {
                    pointer: String::new(),
                    message: "--n must be at least 1".into(),
                });
            }
            let hint = kind.map(|k| match k {
                Kind::Identity => AutType::Identity,
                Kind::Elliptic => AutType::Elliptic,
                Kind::Parabolic => AutType::Parabolic,
                Kind::Hyperbolic => AutType::Hyperbolic,
            });
            let phi = random_automorphism(g.seed, *n, hint)?;
            Ok(Success::ok(
                automorphism_to_json(&phi),
                format!("random automorphism of B_{n}"),
            ))
        }
    }
}

fn load_rep(v: &Value) -> CliResult<semicross::nestrep::NestRepresentation> {
    Ok(nest_rep_from_json(v, "")?)
}

fn opt_points(v: &Value, n: usize) -> CliResult<PointSequence> {
    match opt_field(v, "points") {
        Some(p) => {
            let pts = points_from_json(p, "/points")?;
            if let Some(bad) = pts.iter().position(|q| q.dim() != n) {
                return Err(CliError::Input {
                    pointer: format!("/points/{bad}"),
                    message: format!("expected {n} coordinates"),
                });
            }
            PointSequence::new(pts).map_err(|e| CliError::Input {
                pointer: "/points".into(),
                message: e.to_string(),
            })
        }
        None => Ok(PointSequence::zeros(n, 0)),
    }
}

fn opt_eps(v: &Value) -> CliResult<f64> {
    match opt_field(v, "eps") {
        Some(e) => Ok(as_f64(e, "/eps")?),
        None => Ok(DEFAULT_EPS),
    }
}

fn rep(r: &RepCmd, inputs: &mut Inputs, g: &Global) -> CliResult<Success> {
    match r {
        RepCmd::Rho { input } => {
            let v = inputs.load(input)?;
            let rep = load_rep(&v)?;
            let norm = rep.row_norm();
            Ok(Success::ok(
                json!({"rep": nest_rep_to_json(&rep), "row_norm": norm}),
                format!("row norm {norm:.6}"),
            ))
        }
        RepCmd::Corner { input } => {
            let v = inputs.load(input)?;
            let rep = load_rep(&v)?;
            let w = word_from_json(field(&v, "", "v")?, "/v", rep.n())?;
            let value = corner_entry(&rep, &w)?;
            let k = rep.word().len();
            let expected = if &w == rep.word() {
                Some((1.0 - rep.delta()).powi(k as i32))
            } else if w.len() <= k {
                Some(0.0)
            } else {
                None
            };
            let result = json!({
                "value": complex_to_json(value),
                "entry": [1, k + 1],
                "expected": expected,
            });
            Ok(Success::ok(
                result,
                format!("corner entry {:.6e}{:+.6e}i", value.re, value.im),
            ))
        }
        RepCmd::Surjective { input } => {
            let v = inputs.load(input)?;
            let rep = load_rep(&v)?;
            let s = check_surjective(&rep);
            let prose = format!(
                "generated algebra has dimension {} of {}",
                s.dimension, s.target
            );
            Ok(Success::ok(surjectivity_to_json(&s), prose))
        }
        RepCmd::Separate { input } => {
            let v = inputs.load(input)?;
            let a = poly_from_json(field(&v, "", "poly")?, "/poly")?;
            let z = opt_points(&v, a.n())?;
            let eps = opt_eps(&v)?;
            let w = separate(&a, &z, eps, g.seed, g.max_tries)?;
            let prose = format!(
                "witness at entry ({}, {}) with |value| {:.3e}",
                w.entry.0,
                w.entry.1,
                w.value.norm()
            );
            Ok(Success::ok(separation_to_json(&w), prose)
                .tol("eps", eps)
                .tol("witness_floor", WITNESS_FLOOR))
        }
    }
}

fn iso_success(r: &IsomorphismReport, assert: bool) -> Success {
    let status = if assert {
        Status::from_check(r.verdict == IsoVerdict::Isomorphic)
    } else {
        Status::Ok
    };
    Success::ok(isomorphism_to_json(r), r.verdict.as_str())
        .tol("certificate_residual", CERTIFICATE_TOL)
        .status(status)
}

fn sc(s: &ScCmd, inputs: &mut Inputs, g: &Global) -> CliResult<Success> {
    match s {
        ScCmd::Census { phi } => {
            let phi = load_phi(inputs, phi)?;
            let c = census(&phi)?;
            let id = recognize_identity(&c);
            let prose = format!(
                "{} maximal analytic set descriptors{}",
                c.len(),
                if id { " (identity)" } else { "" }
            );
            Ok(Success::ok(
                json!({"census": census_to_json(&c), "identity_recognized": id}),
                prose,
            ))
        }
        ScCmd::Srep { input } => {
            let v = inputs.load(input)?;
            let phi = automorphism_from_json(field(&v, "", "phi")?, "/phi")?;
            let z = point_from_json(field(&v, "", "z")?, "/z")?;
            let b = cvec_from_json(field(&v, "", "b")?, "/b")?;
            let c = complex_from_json(field(&v, "", "c")?, "/c")?;
            let (pair, scale) = build_srep_with_scale(&phi, &z, &b, c)?;
            let residual = check_covariance_2x2(&pair, &phi)?;
            let forced = forced_theta_relation(&pair, &phi)?;
            let tol = g.tol.unwrap_or(COVARIANCE_TOL);
            let result = json!({
                "pair": covariant_pair_to_json(&pair),
                "scale": scale,
                "covariance_residual": residual,
                "forced_relation": forced_relation_to_json(&forced),
            });
            Ok(Success::ok(
                result,
                format!("covariance residual {residual:.2e}, scale {scale:.6}"),
            )
            .tol("covariance_residual", tol)
            .tol("forced_relation", POINT_TOL)
            .status(Status::from_check(residual <= tol && forced.holds)))
        }
        ScCmd::ZeroUCert { input } => {
            let v = inputs.load(input)?;
            let phi = automorphism_from_json(field(&v, "", "phi")?, "/phi")?;
            let points = points_from_json(field(&v, "", "points")?, "/points")?;
            let candidates = match opt_field(&v, "candidates") {
                Some(c) => as_usize(c, "/candidates")?,
                None => DEFAULT_CANDIDATES,
            };
            let cert = zero_u_certificate(&points, &phi)?;
            let k = points.len();
            let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
            let mut replays = Vec::with_capacity(candidates);
            let mut all = true;
            for i in 0..candidates {
                let cand = CMat::from_fn(k, k, |_, _| {
                    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                });
                let out = cert.replay(&cand, g.seed.wrapping_add(i as u64))?;
                all &= out.annihilated;
                replays.push(replay_to_json(&out));
            }
            let tol = g.tol.unwrap_or(INTERPOLATION_TOL);
            let err = cert.interpolation_error();
            let pass = err <= tol && all;
            let result = json!({"certificate": zero_u_to_json(&cert), "replays": replays});
            Ok(Success::ok(
                result,
                format!(
                    "{} witnesses, interpolation error {err:.2e}",
                    cert.witnesses.len()
                ),
            )
            .tol("interpolation", tol)
            .tol("hypothesis_separation", POINT_TOL)
            .status(Status::from_check(pass)))
        }
        ScCmd::Ideal { input } => {
            let v = inputs.load(input)?;
            let x = element_from_json(field(&v, "", "element")?, "/element")?;
            let member = in_ideal(&x);
            if member {
                return Ok(Success::ok(
                    json!({"in_ideal": true, "witness": null}),
                    "in the ideal generated by U",
                ));
            }
            let z = opt_points(&v, x.n())?;
            let eps = opt_eps(&v)?;
            let w = certify_not_in_ideal(&x, &z, eps, g.seed, g.max_tries)?;
            let prose = format!("not in the ideal; witness |value| {:.3e}", w.value.norm());
            Ok(Success::ok(
                json!({"in_ideal": false, "witness": separation_to_json(&w)}),
                prose,
            )
            .tol("eps", eps)
            .tol("witness_floor", WITNESS_FLOOR))
        }
        ScCmd::Decide { phi1, phi2, assert } => {
            let p1 = load_phi(inputs, phi1)?;
            let p2 = load_phi(inputs, phi2)?;
            Ok(iso_success(&decide_isomorphism(&p1, &p2)?, *assert))
        }
        ScCmd::Orbit { input } => {
            let v = inputs.load(input)?;
            let phi = automorphism_from_json(field(&v, "", "phi")?, "/phi")?;
            let z = point_from_json(field(&v, "", "z")?, "/z")?;
            let blocks = as_usize(field(&v, "", "blocks")?, "/blocks")?;
            let pair = orbit_representation(&phi, &z, blocks)?;
            let residual = pair.covariance_residual(&phi).unwrap_or(f64::INFINITY);
            let tol = g.tol.unwrap_or(ORBIT_TOL);
            let result = json!({
                "pair": covariant_pair_to_json(&pair),
                "covariance_residual": residual,
                "shift": "ones at (m+1, m)",
            });
            Ok(
                Success::ok(result, format!("orbit covariance residual {residual:.2e}"))
                    .tol("covariance_residual", tol)
                    .status(Status::from_check(residual <= tol)),
            )
        }
    }
}

fn ds(d: &DsCmd, inputs: &mut Inputs, _g: &Global) -> CliResult<Success> {
    match d {
        DsCmd::Eval { input } => {
            let v = inputs.load(input)?;
            let f = cpoly_from_json(field(&v, "", "poly")?, "/poly")?;
            if let Some(p) = opt_field(&v, "pair") {
                let pair = commuting_pair_from_json(p, "/pair")?;
                let m = ceval_2x2(&f, &pair)?;
                let result = json!({
                    "matrix": cmat_to_json(&m),
                    "commutator_residual": pair.commutator_residual(),
                });
                Ok(Success::ok(result, "evaluated on the commuting pair"))
            } else {
                let z = point_from_json(field(&v, "", "z")?, "/z")?;
                let value = ceval_point(&f, &z)?;
                Ok(Success::ok(
                    json!({"value": complex_to_json(value)}),
                    format!("{:.6e}{:+.6e}i", value.re, value.im),
                ))
            }
        }
        DsCmd::Symfock { d, level } => {
            let s = symfock_truncation(*d, *level)?;
            let t = s.to_matrix_tuple()?;
            let norm = t.row_norm();
            let result = json!({
                "basis": s.basis(),
                "matrices": tuple_to_json(&t),
                "row_norm": norm,
            });
            Ok(Success::ok(
                result,
                format!("dimension {}, row norm {norm:.6}", s.dim()),
            ))
        }
        DsCmd::Decide { phi1, phi2, assert } => {
            let p1 = load_phi(inputs, phi1)?;
            let p2 = load_phi(inputs, phi2)?;
            Ok(iso_success(&decide_isomorphism_d(&p1, &p2)?, *assert))
        }
    }
}
