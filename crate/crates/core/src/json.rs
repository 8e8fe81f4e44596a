//! JSON encoding of the library types. Complex numbers are `[re, im]`,
//! vectors are arrays of complex numbers and matrices are arrays of rows.
//! Decoding errors carry the JSON pointer of the offending value.

use std::fmt;

use serde_json::{json, Map, Value};

use crate::cball::{
    AffineFixedSet, BallPoint, ConjugacyVerdict, FixedPointData, InvariantMismatch,
    MobiusAutomorphism,
};
use crate::dshift::{CPoly, CommutingPair2x2};
use crate::error::Error;
use crate::freepoly::{FreePolynomial, MatrixTuple, VonNeumannReport, Word};
use crate::linalg::{CMat, CVec, C64};
use crate::nestrep::{build_rho, NestRepresentation, SeparationWitness, SurjectivityReport};
use crate::semicrossed::{
    AnalyticSetDescriptor, CovariantPair, ForcedRelation, IsomorphismReport, ReplayOutcome,
    SemicrossedElement, ZeroUCertificate,
};

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeError {
    pub pointer: String,
    pub message: String,
}

impl fmt::Display for DecodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.pointer.is_empty() {
            "/"
        } else {
            &self.pointer
        };
        write!(f, "{at}: {}", self.message)
    }
}

impl std::error::Error for DecodeError {}

pub type DecodeResult<T> = std::result::Result<T, DecodeError>;

fn err<T>(pointer: &str, message: impl Into<String>) -> DecodeResult<T> {
    Err(DecodeError {
        pointer: pointer.to_string(),
        message: message.into(),
    })
}

fn lib_err(pointer: &str, e: Error) -> DecodeError {
    DecodeError {
        pointer: pointer.to_string(),
        message: e.to_string(),
    }
}

fn child(pointer: &str, key: impl fmt::Display) -> String {
    let key = key.to_string().replace('~', "~0").replace('/', "~1");
    format!("{pointer}/{key}")
}

/// Reads a required field of an object.
pub fn field<'a>(v: &'a Value, pointer: &str, key: &str) -> DecodeResult<&'a Value> {
    let Some(obj) = v.as_object() else {
        return err(pointer, "expected an object");
    };
    match obj.get(key) {
        Some(x) => Ok(x),
        None => err(&child(pointer, key), "missing field"),
    }
}

pub fn opt_field<'a>(v: &'a Value, key: &str) -> Option<&'a Value> {
    v.as_object()
        .and_then(|o| o.get(key))
        .filter(|x| !x.is_null())
}

pub fn as_f64(v: &Value, pointer: &str) -> DecodeResult<f64> {
    match v.as_f64() {
        Some(x) if x.is_finite() => Ok(x),
        _ => err(pointer, "expected a finite number"),
    }
}

pub fn as_usize(v: &Value, pointer: &str) -> DecodeResult<usize> {
    match v.as_u64() {
        Some(x) => Ok(x as usize),
        None => err(pointer, "expected a nonnegative integer"),
    }
}

fn as_array<'a>(v: &'a Value, pointer: &str) -> DecodeResult<&'a Vec<Value>> {
    v.as_array()
        .map_or_else(|| err(pointer, "expected an array"), Ok)
}

// complex numbers, vectors and matrices

pub fn complex_to_json(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn complex_from_json(v: &Value, pointer: &str) -> DecodeResult<C64> {
    let a = as_array(v, pointer)?;
    if a.len() != 2 {
        return err(pointer, "expected [re, im]");
    }
    Ok(C64::new(
        as_f64(&a[0], &child(pointer, 0))?,
        as_f64(&a[1], &child(pointer, 1))?,
    ))
}

pub fn cvec_to_json(v: &CVec) -> Value {
    Value::Array(v.iter().map(|z| complex_to_json(*z)).collect())
}

pub fn cvec_from_json(v: &Value, pointer: &str) -> DecodeResult<CVec> {
    let a = as_array(v, pointer)?;
    let items = a
        .iter()
        .enumerate()
        .map(|(i, x)| complex_from_json(x, &child(pointer, i)))
        .collect::<DecodeResult<Vec<_>>>()?;
    Ok(CVec::from_vec(items))
}

pub fn cmat_to_json(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex_to_json(m[(i, j)])).collect()))
            .collect(),
    )
}

pub fn cmat_from_json(v: &Value, pointer: &str) -> DecodeResult<CMat> {
    let rows = as_array(v, pointer)?;
    let mut data: Vec<Vec<C64>> = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let p = child(pointer, i);
        data.push(cvec_from_json(r, &p)?.iter().cloned().collect());
        if data[i].len() != data[0].len() {
            return err(
                &p,
                format!(
                    "row has {} entries, expected {}",
                    data[i].len(),
                    data[0].len()
                ),
            );
        }
    }
    let ncols = data.first().map_or(0, |r| r.len());
    Ok(CMat::from_fn(data.len(), ncols, |i, j| data[i][j]))
}

// geometry

pub fn point_to_json(p: &BallPoint) -> Value {
    cvec_to_json(p.coords())
}

pub fn point_from_json(v: &Value, pointer: &str) -> DecodeResult<BallPoint> {
    BallPoint::new(cvec_from_json(v, pointer)?).map_err(|e| lib_err(pointer, e))
}

pub fn points_to_json(ps: &[BallPoint]) -> Value {
    Value::Array(ps.iter().map(point_to_json).collect())
}

pub fn points_from_json(v: &Value, pointer: &str) -> DecodeResult<Vec<BallPoint>> {
    as_array(v, pointer)?
        .iter()
        .enumerate()
        .map(|(i, x)| point_from_json(x, &child(pointer, i)))
        .collect()
}

pub fn automorphism_to_json(phi: &MobiusAutomorphism) -> Value {
    json!({
        "n": phi.dim(),
        "unitary": cmat_to_json(phi.unitary_part()),
        "center": point_to_json(phi.center()),
    })
}

pub fn automorphism_from_json(v: &Value, pointer: &str) -> DecodeResult<MobiusAutomorphism> {
    let n_ptr = child(pointer, "n");
    let n = as_usize(field(v, pointer, "n")?, &n_ptr)?;
    let u_ptr = child(pointer, "unitary");
    let u = cmat_from_json(field(v, pointer, "unitary")?, &u_ptr)?;
    let c_ptr = child(pointer, "center");
    let center = cvec_from_json(field(v, pointer, "center")?, &c_ptr)?;
    if u.nrows() != n || u.ncols() != n {
        return err(
            &u_ptr,
            format!(
                "expected a {n}x{n} matrix, found {}x{}",
                u.nrows(),
                u.ncols()
            ),
        );
    }
    if center.len() != n {
        return err(
            &c_ptr,
            format!("expected {n} coordinates, found {}", center.len()),
        );
    }
    let center = BallPoint::new(center).map_err(|e| lib_err(&c_ptr, e))?;
    MobiusAutomorphism::new(u, center).map_err(|e| match e {
        Error::NotUnitary { .. } => lib_err(&u_ptr, e),
        Error::CenterNotInterior { .. } => lib_err(&c_ptr, e),
        other => lib_err(pointer, other),
    })
}

pub fn affine_set_to_json(s: &AffineFixedSet) -> Value {
    json!({
        "base": point_to_json(&s.base),
        "directions": Value::Array(s.directions.iter().map(cvec_to_json).collect()),
        "dim": s.dim(),
    })
}

pub fn fixed_points_to_json(d: &FixedPointData) -> Value {
    json!({
        "type": d.type_tag.as_str(),
        "interior": d.interior.as_ref().map(affine_set_to_json),
        "boundary_points": points_to_json(&d.boundary_points),
    })
}

fn mismatch_to_json(m: &InvariantMismatch) -> Value {
    json!({
        "invariant": m.invariant,
        "types": [m.types.0.as_str(), m.types.1.as_str()],
        "spectra": [
            Value::Array(m.spectra.0.iter().map(|z| complex_to_json(*z)).collect()),
            Value::Array(m.spectra.1.iter().map(|z| complex_to_json(*z)).collect()),
        ],
        "jordan_sizes": [m.jordan_sizes.0, m.jordan_sizes.1],
        "fixed_dims": [m.fixed_dims.0, m.fixed_dims.1],
        "distance": m.distance,
    })
}

pub fn conjugacy_to_json(c: &ConjugacyVerdict) -> Value {
    json!({
        "verdict": c.verdict.as_str(),
        "certificate": c.certificate.as_ref().map(automorphism_to_json),
        "mismatch": c.mismatch.as_ref().map(mismatch_to_json),
        "residual": c.residual,
        "note": c.note,
    })
}

// polynomials

pub fn word_to_json(w: &Word) -> Value {
    json!(w.letters())
}

pub fn word_from_json(v: &Value, pointer: &str, n: usize) -> DecodeResult<Word> {
    let letters = as_array(v, pointer)?
        .iter()
        .enumerate()
        .map(|(i, x)| as_usize(x, &child(pointer, i)))
        .collect::<DecodeResult<Vec<_>>>()?;
    Word::new(letters, n).map_err(|e| lib_err(pointer, e))
}

pub fn poly_to_json(p: &FreePolynomial) -> Value {
    json!({
        "n": p.n(),
        "terms": Value::Array(
            p.terms()
                .iter()
                .map(|(w, c)| json!({"word": word_to_json(w), "coeff": complex_to_json(*c)}))
                .collect()
        ),
    })
}

pub fn poly_from_json(v: &Value, pointer: &str) -> DecodeResult<FreePolynomial> {
    let n = as_usize(field(v, pointer, "n")?, &child(pointer, "n"))?;
    let t_ptr = child(pointer, "terms");
    let mut terms = Vec::new();
    for (i, t) in as_array(field(v, pointer, "terms")?, &t_ptr)?
        .iter()
        .enumerate()
    {
        let p = child(&t_ptr, i);
        let w = word_from_json(field(t, &p, "word")?, &child(&p, "word"), n)?;
        let c = complex_from_json(field(t, &p, "coeff")?, &child(&p, "coeff"))?;
        terms.push((w, c));
    }
    FreePolynomial::from_terms(n, terms).map_err(|e| lib_err(pointer, e))
}

pub fn cpoly_to_json(p: &CPoly) -> Value {
    json!({
        "d": p.d(),
        "terms": Value::Array(
            p.terms()
                .iter()
                .map(|(a, c)| json!({"alpha": a, "coeff": complex_to_json(*c)}))
                .collect()
        ),
    })
}

pub fn cpoly_from_json(v: &Value, pointer: &str) -> DecodeResult<CPoly> {
    let d = as_usize(field(v, pointer, "d")?, &child(pointer, "d"))?;
    let t_ptr = child(pointer, "terms");
    let mut terms = Vec::new();
    for (i, t) in as_array(field(v, pointer, "terms")?, &t_ptr)?
        .iter()
        .enumerate()
    {
        let p = child(&t_ptr, i);
        let a_ptr = child(&p, "alpha");
        let alpha = as_array(field(t, &p, "alpha")?, &a_ptr)?
            .iter()
            .enumerate()
            .map(|(k, x)| as_usize(x, &child(&a_ptr, k)))
            .collect::<DecodeResult<Vec<_>>>()?;
        if alpha.len() != d {
            return err(
                &a_ptr,
                format!("expected {d} exponents, found {}", alpha.len()),
            );
        }
        let c = complex_from_json(field(t, &p, "coeff")?, &child(&p, "coeff"))?;
        terms.push((alpha, c));
    }
    CPoly::from_terms(d, terms).map_err(|e| lib_err(pointer, e))
}

/// `{"n", "terms": [{"power", "word", "coeff"}]}` for `sum U^power c S_word`.
pub fn element_to_json(x: &SemicrossedElement) -> Value {
    let terms: Vec<Value> = x
        .coeffs()
        .iter()
        .flat_map(|(m, a)| {
            a.terms()
                .iter()
                .map(move |(w, c)| json!({"power": m, "word": word_to_json(w), "coeff": complex_to_json(*c)}))
        })
        .collect();
    json!({"n": x.n(), "terms": terms})
}

pub fn element_from_json(v: &Value, pointer: &str) -> DecodeResult<SemicrossedElement> {
    let n = as_usize(field(v, pointer, "n")?, &child(pointer, "n"))?;
    let t_ptr = child(pointer, "terms");
    let mut terms = Vec::new();
    for (i, t) in as_array(field(v, pointer, "terms")?, &t_ptr)?
        .iter()
        .enumerate()
    {
        let p = child(&t_ptr, i);
        let m = as_usize(field(t, &p, "power")?, &child(&p, "power"))?;
        let w = word_from_json(field(t, &p, "word")?, &child(&p, "word"), n)?;
        let c = complex_from_json(field(t, &p, "coeff")?, &child(&p, "coeff"))?;
        let a = FreePolynomial::monomial(n, w, c).map_err(|e| lib_err(&p, e))?;
        terms.push((m, a));
    }
    SemicrossedElement::from_terms(n, terms).map_err(|e| lib_err(pointer, e))
}

// operator data

pub fn tuple_to_json(t: &MatrixTuple) -> Value {
    Value::Array(t.matrices().iter().map(cmat_to_json).collect())
}

pub fn tuple_from_json(v: &Value, pointer: &str) -> DecodeResult<MatrixTuple> {
    let mats = as_array(v, pointer)?
        .iter()
        .enumerate()
        .map(|(i, m)| cmat_from_json(m, &child(pointer, i)))
        .collect::<DecodeResult<Vec<_>>>()?;
    MatrixTuple::new(mats).map_err(|e| lib_err(pointer, e))
}

pub fn nest_rep_to_json(r: &NestRepresentation) -> Value {
    json!({
        "points": points_to_json(r.diagonal_points()),
        "word": word_to_json(r.word()),
        "delta": r.delta(),
        "matrices": tuple_to_json(r.generator_images()),
        "u_image": cmat_to_json(r.u_image()),
    })
}

/// Rebuilds the representation from `points`, `word` and the optional
/// `delta`; stored `matrices`, when present, must agree.
pub fn nest_rep_from_json(v: &Value, pointer: &str) -> DecodeResult<NestRepresentation> {
    let points = points_from_json(field(v, pointer, "points")?, &child(pointer, "points"))?;
    let n = points.first().map_or(0, |p| p.dim());
    let word = word_from_json(field(v, pointer, "word")?, &child(pointer, "word"), n)?;
    let delta = match opt_field(v, "delta") {
        Some(d) => Some(as_f64(d, &child(pointer, "delta"))?),
        None => None,
    };
    let rep = build_rho(&points, &word, delta).map_err(|e| lib_err(pointer, e))?;
    if let Some(m) = opt_field(v, "matrices") {
        let m_ptr = child(pointer, "matrices");
        let stored = tuple_from_json(m, &m_ptr)?;
        if &stored != rep.generator_images() {
            return err(&m_ptr, "matrices disagree with points, word and delta");
        }
    }
    Ok(rep)
}

pub fn covariant_pair_to_json(p: &CovariantPair) -> Value {
    json!({
        "generators": tuple_to_json(p.generator_images()),
        "k": cmat_to_json(p.k_image()),
        "diagonal_points": p.diagonal_points().map(points_to_json),
    })
}

pub fn covariant_pair_from_json(v: &Value, pointer: &str) -> DecodeResult<CovariantPair> {
    let gens = tuple_from_json(
        field(v, pointer, "generators")?,
        &child(pointer, "generators"),
    )?;
    let k = cmat_from_json(field(v, pointer, "k")?, &child(pointer, "k"))?;
    let points = match opt_field(v, "diagonal_points") {
        Some(p) => Some(points_from_json(p, &child(pointer, "diagonal_points"))?),
        None => None,
    };
    CovariantPair::new(gens, k, points).map_err(|e| lib_err(pointer, e))
}

pub fn commuting_pair_to_json(p: &CommutingPair2x2) -> Value {
    json!({"x": point_to_json(p.x()), "y": point_to_json(p.y()), "t": complex_to_json(p.t())})
}

pub fn commuting_pair_from_json(v: &Value, pointer: &str) -> DecodeResult<CommutingPair2x2> {
    let x = point_from_json(field(v, pointer, "x")?, &child(pointer, "x"))?;
    let y = point_from_json(field(v, pointer, "y")?, &child(pointer, "y"))?;
    let t = complex_from_json(field(v, pointer, "t")?, &child(pointer, "t"))?;
    CommutingPair2x2::new(x, y, t).map_err(|e| lib_err(pointer, e))
}

// reports

pub fn surjectivity_to_json(r: &SurjectivityReport) -> Value {
    json!({"surjective": r.surjective, "dimension": r.dimension, "target": r.target})
}

pub fn separation_to_json(w: &SeparationWitness) -> Value {
    json!({
        "word": word_to_json(&w.word),
        "perturbed_points": points_to_json(&w.perturbed_points),
        "rep": nest_rep_to_json(&w.rep),
        "entry": [w.entry.0, w.entry.1],
        "value": complex_to_json(w.value),
        "tries": w.tries,
    })
}

pub fn descriptor_to_json(d: &AnalyticSetDescriptor) -> Value {
    json!({
        "kind": d.kind.as_str(),
        "dim": d.dim,
        "family": d.family.as_str(),
        "fixed_set": d.fixed_set.as_ref().map(affine_set_to_json),
        "boundary_point": d.boundary_point.as_ref().map(point_to_json),
    })
}

pub fn census_to_json(c: &[AnalyticSetDescriptor]) -> Value {
    Value::Array(c.iter().map(descriptor_to_json).collect())
}

pub fn forced_relation_to_json(r: &ForcedRelation) -> Value {
    json!({"holds": r.holds, "gap": r.gap})
}

pub fn zero_u_to_json(c: &ZeroUCertificate) -> Value {
    let witnesses: Vec<Value> = c
        .witnesses
        .iter()
        .map(|(&(i, j), a)| json!({"i": i, "j": j, "poly": poly_to_json(a)}))
        .collect();
    let transcript: Vec<Value> = c
        .transcript
        .iter()
        .map(|s| {
            json!({
                "superdiagonal": s.superdiagonal,
                "i": s.i,
                "j": s.j,
                "a_at_zi": complex_to_json(s.a_at_zi),
                "a_at_image_zj": complex_to_json(s.a_at_image_zj),
                "identity": format!("({:.3e}) * rho(U)[{},{}] = 0", s.pivot().norm(), s.i, s.j),
            })
        })
        .collect();
    json!({
        "points": points_to_json(&c.points),
        "images": points_to_json(&c.images),
        "witnesses": witnesses,
        "transcript": transcript,
        "interpolation_error": c.interpolation_error(),
    })
}

pub fn replay_to_json(r: &ReplayOutcome) -> Value {
    json!({
        "unknowns": r.unknowns,
        "rank": r.rank,
        "min_pivot": r.min_pivot,
        "candidate_violation": r.candidate_violation,
        "annihilated": r.annihilated,
    })
}

pub fn isomorphism_to_json(r: &IsomorphismReport) -> Value {
    json!({
        "verdict": r.verdict.as_str(),
        "conjugacy": conjugacy_to_json(&r.conjugacy),
        "census": [census_to_json(&r.census.0), census_to_json(&r.census.1)],
        "identity_recognized": [r.identity.0, r.identity.1],
        "note": r.note,
    })
}

pub fn von_neumann_to_json(r: &VonNeumannReport) -> Value {
    json!({"lhs": r.lhs, "rhs": r.rhs, "margin": r.margin, "pass": r.pass})
}

/// Object with keys in sorted order.
pub fn object(entries: impl IntoIterator<Item = (String, Value)>) -> Value {
    Value::Object(entries.into_iter().collect::<Map<String, Value>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cball::random_automorphism;
    use crate::linalg::c64;

    #[test]
    fn automorphism_round_trip() {
        for seed in 0..5 {
            let phi = random_automorphism(seed, 3, None).unwrap();
            let text = serde_json::to_string(&automorphism_to_json(&phi)).unwrap();
            let back = automorphism_from_json(&serde_json::from_str(&text).unwrap(), "").unwrap();
            assert_eq!(back, phi);
        }
    }

    #[test]
    fn polynomial_round_trips() {
        let p = FreePolynomial::from_terms(
            2,
            [
                (Word::new(vec![1, 2], 2).unwrap(), c64(0.1, -2.0)),
                (Word::empty(), c64(3.0, 0.0)),
            ],
        )
        .unwrap();
        assert_eq!(poly_from_json(&poly_to_json(&p), "").unwrap(), p);
        let q = CPoly::from_terms(2, [(vec![2, 1], c64(1.5, 0.5))]).unwrap();
        assert_eq!(cpoly_from_json(&cpoly_to_json(&q), "").unwrap(), q);
        let x = SemicrossedElement::from_terms(2, [(0, p.clone()), (3, p)]).unwrap();
        assert_eq!(element_from_json(&element_to_json(&x), "").unwrap(), x);
    }

    #[test]
    fn non_unitary_is_reported_at_its_pointer() {
        let v = json!({"n": 1, "unitary": [[[2.0, 0.0]]], "center": [[0.0, 0.0]]});
        let e = automorphism_from_json(&v, "").unwrap_err();
        assert_eq!(e.pointer, "/unitary");
        assert!(e.message.contains("not unitary"));
        let v = json!({"n": 1, "unitary": [[[1.0, 0.0]]], "center": [[0.0, "x"]]});
        assert_eq!(
            automorphism_from_json(&v, "").unwrap_err().pointer,
            "/center/0/1"
        );
    }

    #[test]
    fn nest_rep_round_trip() {
        let pts = vec![
            BallPoint::from_reals(&[0.1, 0.2]).unwrap(),
            BallPoint::from_reals(&[0.0, -0.3]).unwrap(),
            BallPoint::from_reals(&[0.2, 0.0]).unwrap(),
        ];
        let rep = build_rho(&pts, &Word::new(vec![2, 1], 2).unwrap(), Some(0.7)).unwrap();
        let text = serde_json::to_string(&nest_rep_to_json(&rep)).unwrap();
        assert_eq!(
            nest_rep_from_json(&serde_json::from_str(&text).unwrap(), "").unwrap(),
            rep
        );
    }
}
