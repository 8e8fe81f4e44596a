//! Deciding whether two ball automorphisms are conjugate in `Aut(B_n)`.
//!
//! Each type is brought to a normal form by an explicit change of frame:
//!
//! * elliptic maps are moved so the fixed point is the origin, where they
//!   become unitary; the invariant is the spectrum of that unitary;
//! * hyperbolic maps are written in a frame adapted to the two boundary
//!   fixed points; the invariants are the dilation factor and the spectrum
//!   of the rotation on the complementary directions;
//! * parabolic maps are written in a Siegel frame at the boundary fixed
//!   point and reduced with Heisenberg translations, dilations and
//!   rotations; the invariants are whether the map is vertical, the sign of
//!   the vertical twist, and the spectrum of the rotation part.
//!
//! A `Conjugate` verdict always carries a certificate that has been
//! checked on sample points.

use crate::error::{Error, Result};
use crate::linalg::{
    bottleneck_matching, form_j, nearest_unitary, orthogonal_complement, schur, CMat, CVec, C64,
    ONE, ZERO,
};

use super::automorphism::MobiusAutomorphism;
use super::fixed::{analyze, Analysis, AutType, Spectral};
use super::lift::{chart, AutomorphismLift};

/// Certificate residual allowed on the probe set.
pub const CERTIFICATE_TOL: f64 = 1e-8;
/// Invariants closer than this are treated as equal.
pub const MATCH_TOL: f64 = 1e-8;
/// Invariants farther apart than this are reported as different.
pub const SEPARATION_TOL: f64 = 1e-6;
const CERTIFICATE_PROBES: usize = 64;
const UNIT_EIGENVALUE_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Conjugate,
    NotConjugate,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Conjugate => "Conjugate",
            Verdict::NotConjugate => "NotConjugate",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

/// The invariants of both inputs, plus which one separates them.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantMismatch {
    /// One of `type`, `derivative_spectrum`, `projective_spectrum`,
    /// `jordan_sizes`, `vertical_twist`.
    pub invariant: String,
    pub types: (AutType, AutType),
    /// Normalised spectra (derivative spectrum for elliptic maps, lift
    /// spectrum divided by the unimodular part of the dominant eigenvalue
    /// otherwise).
    pub spectra: (Vec<C64>, Vec<C64>),
    pub jordan_sizes: (usize, usize),
    pub fixed_dims: (Option<usize>, Option<usize>),
    /// Size of the gap for numerical invariants.
    pub distance: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ConjugacyVerdict {
    pub verdict: Verdict,
    pub certificate: Option<MobiusAutomorphism>,
    pub mismatch: Option<InvariantMismatch>,
    pub residual: Option<f64>,
    pub note: Option<String>,
}

impl ConjugacyVerdict {
    fn conjugate(gamma: MobiusAutomorphism, residual: f64) -> Self {
        Self {
            verdict: Verdict::Conjugate,
            certificate: Some(gamma),
            mismatch: None,
            residual: Some(residual),
            note: None,
        }
    }

    fn not_conjugate(mismatch: InvariantMismatch) -> Self {
        Self {
            verdict: Verdict::NotConjugate,
            certificate: None,
            mismatch: Some(mismatch),
            residual: None,
            note: None,
        }
    }

    fn inconclusive(note: impl Into<String>, mismatch: Option<InvariantMismatch>) -> Self {
        Self {
            verdict: Verdict::Inconclusive,
            certificate: None,
            mismatch,
            residual: None,
            note: Some(note.into()),
        }
    }
}

/// `sup_z |gamma phi1 gamma^{-1}(z) - phi2(z)|` over the fixed probe set.
pub fn certificate_residual(
    gamma: &MobiusAutomorphism,
    phi1: &MobiusAutomorphism,
    phi2: &MobiusAutomorphism,
) -> f64 {
    MobiusAutomorphism::probe_points(phi1.dim(), CERTIFICATE_PROBES)
        .iter()
        .map(|z| {
            let lhs = gamma.map_vec(&phi1.map_vec(&gamma.inverse_map_vec(z)));
            (lhs - phi2.map_vec(z)).norm()
        })
        .fold(
            0.0,
            |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) },
        )
}

pub fn are_conjugate(
    phi1: &MobiusAutomorphism,
    phi2: &MobiusAutomorphism,
) -> Result<ConjugacyVerdict> {
    if phi1.dim() != phi2.dim() {
        return Err(Error::DimensionMismatch {
            expected: phi1.dim(),
            found: phi2.dim(),
        });
    }
    let a1 = analyze(phi1)?;
    let a2 = analyze(phi2)?;
    let t1 = a1.data.type_tag;
    let t2 = a2.data.type_tag;
    let inv1 = invariants(phi1, &a1)?;
    let inv2 = invariants(phi2, &a2)?;
    let mismatch = |invariant: &str, distance: Option<f64>| InvariantMismatch {
        invariant: invariant.to_string(),
        types: (t1, t2),
        spectra: (inv1.spectrum.clone(), inv2.spectrum.clone()),
        jordan_sizes: (inv1.jordan, inv2.jordan),
        fixed_dims: (a1.data.interior_dim(), a2.data.interior_dim()),
        distance,
    };
    if t1 != t2 {
        return Ok(ConjugacyVerdict::not_conjugate(mismatch("type", None)));
    }
    if t1 == AutType::Identity {
        let gamma = MobiusAutomorphism::identity(phi1.dim());
        return Ok(ConjugacyVerdict::conjugate(gamma, 0.0));
    }
    if inv1.jordan != inv2.jordan {
        return Ok(ConjugacyVerdict::not_conjugate(mismatch(
            "jordan_sizes",
            None,
        )));
    }
    if inv1.twist != inv2.twist {
        return Ok(ConjugacyVerdict::not_conjugate(mismatch(
            "vertical_twist",
            None,
        )));
    }
    let (distance, perm) = inv1.compare(&inv2);
    let name = if t1 == AutType::Elliptic {
        "derivative_spectrum"
    } else {
        "projective_spectrum"
    };
    if !(distance <= SEPARATION_TOL) {
        return Ok(ConjugacyVerdict::not_conjugate(mismatch(
            name,
            Some(distance),
        )));
    }
    if distance > MATCH_TOL {
        return Ok(ConjugacyVerdict::inconclusive(
            format!(
                "invariants differ by {distance:e}, between the match and separation tolerances"
            ),
            Some(mismatch(name, Some(distance))),
        ));
    }
    let gamma = match inv1.frame.certificate(&inv2.frame, &perm) {
        Ok(g) => g,
        Err(e) => {
            return Ok(ConjugacyVerdict::inconclusive(
                format!("certificate construction failed: {e}"),
                None,
            ))
        }
    };
    let residual = certificate_residual(&gamma, phi1, phi2);
    if residual <= CERTIFICATE_TOL {
        Ok(ConjugacyVerdict::conjugate(gamma, residual))
    } else {
        Ok(ConjugacyVerdict::inconclusive(
            format!("certificate residual {residual:e} exceeds tolerance"),
            None,
        ))
    }
}

/// Invariants of one automorphism together with the frame that realises
/// its normal form.
struct Invariants {
    spectrum: Vec<C64>,
    /// Part of the spectrum that is matched up to permutation.
    free: Vec<C64>,
    /// Part that is compared position by position.
    pinned: Vec<C64>,
    jordan: usize,
    twist: i8,
    frame: Frame,
}

impl Invariants {
    fn compare(&self, other: &Invariants) -> (f64, Vec<usize>) {
        let pinned = self
            .pinned
            .iter()
            .zip(&other.pinned)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let (free, perm) = bottleneck_matching(&self.free, &other.free);
        (pinned.max(free), perm)
    }
}

enum Frame {
    Elliptic {
        center: MobiusAutomorphism,
        schur_basis: CMat,
    },
    /// `lift = frame * normal * frame^{-1}` up to scale, where the rows and
    /// columns `offset..offset + schur_basis.ncols()` of `normal` carry a
    /// diagonalised unitary block.
    Lifted {
        frame: CMat,
        /// `frame^{-1}`
        frame_inv: CMat,
        offset: usize,
        schur_basis: CMat,
    },
}

fn permutation_matrix(perm: &[usize]) -> CMat {
    let k = perm.len();
    let mut p = CMat::zeros(k, k);
    for (i, &j) in perm.iter().enumerate() {
        p[(j, i)] = ONE;
    }
    p
}

impl Frame {
    fn certificate(&self, other: &Frame, perm: &[usize]) -> Result<MobiusAutomorphism> {
        match (self, other) {
            (
                Frame::Elliptic {
                    center: c1,
                    schur_basis: q1,
                },
                Frame::Elliptic {
                    center: c2,
                    schur_basis: q2,
                },
            ) => {
                let w = q2 * permutation_matrix(perm) * q1.adjoint();
                let w = MobiusAutomorphism::from_unitary(nearest_unitary(&w))?;
                c2.compose(&w)?.compose(c1)
            }
            (
                Frame::Lifted {
                    frame_inv: g1_inv,
                    offset,
                    schur_basis: q1,
                    ..
                },
                Frame::Lifted {
                    frame: g2,
                    schur_basis: q2,
                    ..
                },
            ) => {
                let size = g2.nrows();
                let k = q1.ncols();
                // the pinned slots before the free block stay fixed
                let mut full_perm: Vec<usize> = (0..k).collect();
                let pinned = k - perm.len();
                for (i, &j) in perm.iter().enumerate() {
                    full_perm[pinned + i] = pinned + j;
                }
                let v = q2 * permutation_matrix(&full_perm) * q1.adjoint();
                let mut r = CMat::identity(size, size);
                r.view_mut((*offset, *offset), (k, k)).copy_from(&v);
                let gamma = g2 * r * g1_inv;
                AutomorphismLift::new(gamma)?.to_automorphism()
            }
            _ => Err(Error::InvalidArgument("frames of different types".into())),
        }
    }
}

fn invariants(phi: &MobiusAutomorphism, analysis: &Analysis) -> Result<Invariants> {
    match &analysis.spectral {
        Spectral::Identity => Ok(Invariants {
            spectrum: vec![ONE; phi.dim()],
            free: Vec::new(),
            pinned: Vec::new(),
            jordan: 1,
            twist: 0,
            frame: Frame::Elliptic {
                center: MobiusAutomorphism::identity(phi.dim()),
                schur_basis: CMat::identity(phi.dim(), phi.dim()),
            },
        }),
        Spectral::Elliptic => elliptic_invariants(phi, analysis),
        Spectral::Hyperbolic {
            attracting,
            repelling,
        } => hyperbolic_invariants(analysis, attracting, repelling),
        Spectral::Parabolic {
            eigenvalue,
            null_vector,
            jordan,
        } => parabolic_invariants(analysis, *eigenvalue, null_vector, *jordan),
    }
}

fn elliptic_invariants(phi: &MobiusAutomorphism, analysis: &Analysis) -> Result<Invariants> {
    let q = &analysis
        .data
        .interior
        .as_ref()
        .expect("elliptic maps have an interior fixed point")
        .base;
    let inv = MobiusAutomorphism::involution(q)?;
    let linear = inv.compose(phi)?.compose(&inv)?;
    if linear.center().norm() > 1e-8 {
        return Err(Error::DegenerateEigenproblem(
            "normalised elliptic map does not fix the origin".into(),
        ));
    }
    let (basis, t) = schur(linear.unitary_part())?;
    let spectrum: Vec<C64> = (0..t.nrows()).map(|i| t[(i, i)]).collect();
    Ok(Invariants {
        free: spectrum.clone(),
        pinned: Vec::new(),
        spectrum,
        jordan: 1,
        twist: 0,
        frame: Frame::Elliptic {
            center: inv,
            schur_basis: basis,
        },
    })
}

/// `<x, y>_J = y* J x`.
fn j_inner(x: &CVec, y: &CVec) -> C64 {
    let n = x.len() - 1;
    let mut s = ZERO;
    for i in 0..n {
        s += x[i] * y[i].conj();
    }
    s - x[n] * y[n].conj()
}

/// Completes a family to a `J`-orthonormal basis of its `J`-orthogonal
/// complement, which must be positive definite. `signs` holds
/// `<b, b>_J = +-1` for the given family `fixed`.
fn positive_complement(fixed: &[(CVec, f64)], count: usize) -> Result<Vec<CVec>> {
    let size = fixed.first().map(|f| f.0.len()).unwrap_or(0);
    let mut out: Vec<CVec> = Vec::new();
    for e in 0..size {
        if out.len() == count {
            break;
        }
        let mut x = CVec::zeros(size);
        x[e] = ONE;
        for _ in 0..2 {
            for (b, sign) in fixed {
                let c = j_inner(&x, b) / *sign;
                x -= b * c;
            }
            for b in &out {
                let c = j_inner(&x, b);
                x -= b * c;
            }
        }
        let nrm = j_inner(&x, &x).re;
        if nrm > 1e-8 {
            out.push(x / C64::from(nrm.sqrt()));
        }
    }
    if out.len() != count {
        return Err(Error::DegenerateEigenproblem(
            "could not complete a J-orthonormal frame".into(),
        ));
    }
    Ok(out)
}

fn hyperbolic_invariants(
    analysis: &Analysis,
    attracting: &(C64, CVec),
    repelling: &(C64, CVec),
) -> Result<Invariants> {
    let m = analysis.lift.matrix();
    let size = m.nrows();
    let n = size - 1;
    let j = form_j(n);
    let vp = &attracting.1;
    let vm = &repelling.1;
    let pairing = j_inner(vp, vm);
    if pairing.norm() < 1e-12 {
        return Err(Error::DegenerateEigenproblem(
            "fixed null vectors are orthogonal".into(),
        ));
    }
    // <v+, beta v-> = conj(beta) <v+, v-> = -2
    let beta = (C64::from(-2.0) / pairing).conj();
    let w = vm * beta;
    let g1 = (vp - &w) * C64::from(0.5);
    let gl = (vp + &w) * C64::from(0.5);
    let comp = positive_complement(&[(g1.clone(), 1.0), (gl.clone(), -1.0)], n - 1)?;
    let mut cols = vec![g1];
    cols.extend(comp);
    cols.push(gl);
    let g = CMat::from_columns(&cols);
    let g_inv = &j * g.adjoint() * &j;
    let mut normal = &g_inv * m * &g;
    let nu = attracting.0 / attracting.0.norm();
    normal /= nu;
    let r = attracting.0.norm();
    let (basis, spectrum_block) = if n > 1 {
        let w = normal.view((1, 1), (n - 1, n - 1)).into_owned();
        let (q, t) = schur(&w)?;
        (q, (0..n - 1).map(|i| t[(i, i)]).collect::<Vec<_>>())
    } else {
        (CMat::zeros(0, 0), Vec::new())
    };
    let mut spectrum = vec![C64::from(r), C64::from(1.0 / r)];
    spectrum.extend(spectrum_block.iter().cloned());
    Ok(Invariants {
        spectrum,
        free: spectrum_block,
        pinned: vec![C64::from(r.ln())],
        jordan: 1,
        twist: 0,
        frame: Frame::Lifted {
            frame: g,
            frame_inv: g_inv,
            offset: 1,
            schur_basis: basis,
        },
    })
}

/// Gram matrix of the Siegel frame `[f, u_2, ..., u_n, g]`.
fn siegel_gram(n: usize) -> CMat {
    let mut h = CMat::identity(n + 1, n + 1);
    h[(0, 0)] = ZERO;
    h[(n, n)] = ZERO;
    h[(0, n)] = ONE;
    h[(n, 0)] = ONE;
    h
}

/// Heisenberg translation in Siegel coordinates.
fn heisenberg(eta: &CVec) -> CMat {
    let k = eta.len();
    let mut t = CMat::identity(k + 2, k + 2);
    for i in 0..k {
        t[(0, i + 1)] = -eta[i].conj();
        t[(i + 1, k + 1)] = eta[i];
    }
    t[(0, k + 1)] = C64::from(-0.5 * eta.norm_squared());
    t
}

fn dilation(k: usize, s: f64) -> CMat {
    let mut d = CMat::identity(k + 2, k + 2);
    d[(0, 0)] = C64::from(s);
    d[(k + 1, k + 1)] = C64::from(1.0 / s);
    d
}

fn middle_rotation(r: &CMat) -> CMat {
    let k = r.nrows();
    let mut out = CMat::identity(k + 2, k + 2);
    out.view_mut((1, 1), (k, k)).copy_from(r);
    out
}

/// Parabolic normal form: `frame^{-1} lift frame` is proportional to
/// `[[1, -y* V, c], [0, V, y], [0, 0, 1]]` with `V` diagonal and either
/// `y = 0, c = +-i` (vertical) or `y = e_1, c = -1/2`.
fn parabolic_invariants(
    analysis: &Analysis,
    eigenvalue: C64,
    null_vector: &CVec,
    jordan: usize,
) -> Result<Invariants> {
    let m = analysis.lift.matrix();
    let size = m.nrows();
    let n = size - 1;
    let k = n - 1;
    let j = form_j(n);
    let h = siegel_gram(n);
    let f = null_vector.clone();
    let p = chart(&f);
    let mut g = -p;
    g = g.push(ONE);
    let s = (ONE / j_inner(&f, &g)).conj();
    let g = g * s;
    // project onto the J-complement of span(f, g)
    let mut comp: Vec<CVec> = Vec::new();
    for e in 0..size {
        if comp.len() == k {
            break;
        }
        let mut x = CVec::zeros(size);
        x[e] = ONE;
        for _ in 0..2 {
            let (xg, xf) = (j_inner(&x, &g), j_inner(&x, &f));
            x -= &f * xg + &g * xf;
            for b in &comp {
                let c = j_inner(&x, b);
                x -= b * c;
            }
        }
        let nrm = j_inner(&x, &x).re;
        if nrm > 1e-8 {
            comp.push(x / C64::from(nrm.sqrt()));
        }
    }
    if comp.len() != k {
        return Err(Error::DegenerateEigenproblem(
            "could not build a Siegel frame".into(),
        ));
    }
    let mut cols = vec![f];
    cols.extend(comp);
    cols.push(g);
    let b0 = CMat::from_columns(&cols);
    let b0_inv = &h * b0.adjoint() * &j;
    let mut pm = &b0_inv * m * &b0;
    let scale = pm[(0, 0)];
    if (scale - eigenvalue).norm() > 1e-6 * eigenvalue.norm() {
        return Err(Error::DegenerateEigenproblem(
            "Siegel frame does not diagonalise the fixed line".into(),
        ));
    }
    pm /= scale;

    let conj_by = |c: &CMat, pm: &CMat| -> CMat {
        let c_inv = &h * c.adjoint() * &h;
        c * pm * c_inv
    };
    let mut acc = CMat::identity(size, size);

    // remove the part of y outside ker(V - I)
    if k > 0 {
        let v = pm.view((1, 1), (k, k)).into_owned();
        let y = pm.view((1, n), (k, 1)).column(0).into_owned();
        let (q, t) = schur(&v)?;
        let yt = q.adjoint() * &y;
        let mut eta_t = CVec::zeros(k);
        for i in 0..k {
            let d = t[(i, i)];
            if (d - ONE).norm() > UNIT_EIGENVALUE_TOL {
                eta_t[i] = -yt[i] / (ONE - d);
            }
        }
        let tr = heisenberg(&(&q * eta_t));
        pm = conj_by(&tr, &pm);
        acc = tr * acc;
    }
    let y = pm.view((1, n), (k, 1)).column(0).into_owned();
    let vertical = jordan == 2;
    let y_norm = y.norm();
    if vertical != (y_norm <= 1e-6) {
        return Err(Error::DegenerateEigenproblem(format!(
            "parabolic Jordan size {jordan} inconsistent with translation part {y_norm:e}"
        )));
    }

    let basis;
    let twist;
    if vertical {
        let v = pm.view((1, 1), (k, k)).into_owned();
        let (q, _) = schur(&v)?;
        let r = middle_rotation(&q.adjoint());
        pm = conj_by(&r, &pm);
        acc = r * acc;
        let c = pm[(0, n)];
        if c.im.abs() < 1e-12 {
            return Err(Error::DegenerateEigenproblem(
                "vertical parabolic without twist".into(),
            ));
        }
        twist = if c.im > 0.0 { 1 } else { -1 };
        let d = dilation(k, 1.0 / c.im.abs().sqrt());
        pm = conj_by(&d, &pm);
        acc = d * acc;
        basis = CMat::identity(k, k);
    } else {
        let v = pm.view((1, 1), (k, k)).into_owned();
        let u1 = &y / C64::from(y_norm);
        let mut rot = CMat::zeros(k, k);
        rot.set_column(0, &u1);
        if k > 1 {
            let y_perp = orthogonal_complement(&CMat::from_columns(std::slice::from_ref(&u1)), k - 1);
            let restricted = y_perp.adjoint() * &v * &y_perp;
            let (q, _) = schur(&restricted)?;
            rot.columns_mut(1, k - 1).copy_from(&(y_perp * q));
        }
        let r = middle_rotation(&rot.adjoint());
        pm = conj_by(&r, &pm);
        acc = r * acc;
        let d = dilation(k, 1.0 / y_norm);
        pm = conj_by(&d, &pm);
        acc = d * acc;
        let mut eta = CVec::zeros(k);
        eta[0] = C64::new(0.0, -pm[(0, n)].im / 2.0);
        let tr = heisenberg(&eta);
        pm = conj_by(&tr, &pm);
        acc = tr * acc;
        twist = 0;
        basis = CMat::identity(k, k);
    }

    let diag: Vec<C64> = (0..k).map(|i| pm[(i + 1, i + 1)]).collect();
    let (pinned, free) = if vertical {
        (Vec::new(), diag.clone())
    } else {
        (vec![diag[0]], diag[1..].to_vec())
    };
    let mut spectrum = vec![ONE; 2];
    spectrum.extend(diag.iter().cloned());
    // lift = B0 P B0^{-1} and P = acc^{-1} F acc, so the frame is B0 acc^{-1}
    let acc_inv = &h * acc.adjoint() * &h;
    let frame = &b0 * &acc_inv;
    let frame_inv = &acc * &b0_inv;
    Ok(Invariants {
        spectrum,
        free,
        pinned,
        jordan,
        twist,
        frame: Frame::Lifted {
            frame,
            frame_inv,
            offset: 1,
            schur_basis: basis,
        },
    })
}
