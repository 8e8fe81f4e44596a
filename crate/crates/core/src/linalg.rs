//! Dense complex linear algebra shared by the geometric and operator modules.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Inner product linear in the first slot: `<x, y> = sum x_l conj(y_l)`.
pub fn inner(x: &CVec, y: &CVec) -> C64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b.conj()).sum()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_vec(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// The form `diag(1, ..., 1, -1)` of size `n + 1`.
pub fn form_j(n: usize) -> CMat {
    let mut j = CMat::identity(n + 1, n + 1);
    j[(n, n)] = -ONE;
    j
}

/// Largest singular value.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let sv = m.clone().singular_values();
    sv.iter().cloned().fold(0.0, f64::max)
}

/// Complex Schur decomposition `m = q t q*`, `t` upper triangular.
pub fn schur(m: &CMat) -> Result<(CMat, CMat)> {
    let s = Schur::try_new(m.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::DegenerateEigenproblem("Schur iteration did not converge".into()))?;
    Ok(s.unpack())
}

pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    let (_, t) = schur(m)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Right singular vectors of `m`, sorted by increasing singular value.
/// Returns the singular values and the vectors as columns.
pub fn right_singular_ascending(m: &CMat) -> (Vec<f64>, CMat) {
    let cols = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested v_t");
    let mut values: Vec<(f64, usize)> = svd
        .singular_values
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    // thin svd on a wide matrix: pad with an explicit null complement
    let rank_slots = values.len();
    values.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut out = CMat::zeros(cols, rank_slots);
    for (k, &(_, i)) in values.iter().enumerate() {
        for r in 0..cols {
            out[(r, k)] = v_t[(i, r)].conj();
        }
    }
    let sv = values.iter().map(|v| v.0).collect();
    if rank_slots < cols {
        // complete with the orthogonal complement of the row space
        let extra = orthogonal_complement(&out, cols - rank_slots);
        let mut full = CMat::zeros(cols, cols);
        full.columns_mut(0, cols - rank_slots).copy_from(&extra);
        full.columns_mut(cols - rank_slots, rank_slots)
            .copy_from(&out);
        let mut sv_full = vec![0.0; cols - rank_slots];
        sv_full.extend::<Vec<f64>>(sv);
        return (sv_full, full);
    }
    (sv, out)
}

/// An orthonormal basis (columns) for `k` directions orthogonal to the
/// columns of `basis`.
pub fn orthogonal_complement(basis: &CMat, k: usize) -> CMat {
    let dim = basis.nrows();
    let mut current: Vec<CVec> = orthonormal_columns(basis, 1e-12);
    let mut extra = Vec::new();
    for e in 0..dim {
        if extra.len() == k {
            break;
        }
        let mut v = CVec::zeros(dim);
        v[e] = ONE;
        if let Some(u) = gram_schmidt_step(&current, v, 1e-8) {
            current.push(u.clone());
            extra.push(u);
        }
    }
    CMat::from_columns(&extra)
}

/// Orthogonalise `v` against the orthonormal family `basis` (two passes).
/// Returns the normalised remainder when its relative norm exceeds `tol`.
pub fn gram_schmidt_step(basis: &[CVec], mut v: CVec, tol: f64) -> Option<CVec> {
    let norm0 = v.norm();
    if norm0 == 0.0 {
        return None;
    }
    for _ in 0..2 {
        for b in basis {
            let proj = b.dotc(&v);
            v -= b * proj;
        }
    }
    let norm = v.norm();
    if norm > tol * norm0 {
        Some(v / C64::from(norm))
    } else {
        None
    }
}

pub fn orthonormal_columns(m: &CMat, tol: f64) -> Vec<CVec> {
    let mut out: Vec<CVec> = Vec::new();
    for j in 0..m.ncols() {
        if let Some(u) = gram_schmidt_step(&out, m.column(j).into_owned(), tol) {
            out.push(u);
        }
    }
    out
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let sym = (h + h.adjoint()) * C64::from(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(h.nrows(), idx.len());
    for (k, &i) in idx.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vecs)
}

/// Nearest unitary matrix in the polar sense.
pub fn nearest_unitary(m: &CMat) -> CMat {
    let svd = m.clone().svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

/// Max-entry deviation of `m* m` from the identity.
pub fn unitarity_defect(m: &CMat) -> f64 {
    let p = m.adjoint() * m;
    max_abs(&(p - CMat::identity(m.ncols(), m.ncols())))
}

/// Bottleneck matching between two equal-size multisets of complex numbers.
///
/// Returns the smallest `t` such that a perfect matching exists using only
/// pairs at distance `<= t`, together with one such matching
/// (`perm[i]` is the index in `b` matched to `a[i]`).
pub fn bottleneck_matching(a: &[C64], b: &[C64]) -> (f64, Vec<usize>) {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n == 0 {
        return (0.0, Vec::new());
    }
    let mut dists: Vec<f64> = Vec::with_capacity(n * n);
    for x in a {
        for y in b {
            dists.push((x - y).norm());
        }
    }
    let mut sorted = dists.clone();
    sorted.sort_by(|p, q| p.partial_cmp(q).unwrap());
    sorted.dedup();
    let (mut lo, mut hi) = (0usize, sorted.len() - 1);
    let mut best = perfect_matching(n, &dists, sorted[hi]).expect("complete graph matches");
    while lo < hi {
        let mid = (lo + hi) / 2;
        match perfect_matching(n, &dists, sorted[mid]) {
            Some(m) => {
                best = m;
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    let perm = match perfect_matching(n, &dists, sorted[lo]) {
        Some(m) => m,
        None => best,
    };
    (sorted[lo], perm)
}

fn perfect_matching(n: usize, dists: &[f64], t: f64) -> Option<Vec<usize>> {
    // Kuhn's augmenting paths; match_b[j] = i
    let mut match_b: Vec<Option<usize>> = vec![None; n];
    fn augment(
        i: usize,
        n: usize,
        dists: &[f64],
        t: f64,
        seen: &mut [bool],
        match_b: &mut [Option<usize>],
    ) -> bool {
        for j in 0..n {
            if dists[i * n + j] <= t && !seen[j] {
                seen[j] = true;
                if match_b[j].is_none() || augment(match_b[j].unwrap(), n, dists, t, seen, match_b)
                {
                    match_b[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    for i in 0..n {
        let mut seen = vec![false; n];
        if !augment(i, n, dists, t, &mut seen, &mut match_b) {
            return None;
        }
    }
    let mut perm = vec![0; n];
    for (j, m) in match_b.iter().enumerate() {
        perm[m.unwrap()] = j;
    }
    Some(perm)
}

/// Largest eigenvalue of a Hermitian positive semidefinite operator given
/// by its action, via Lanczos without reorthogonalisation. The estimate
/// approaches the true value from below.
pub fn lanczos_max_eig<F>(dim: usize, matvec: F, max_iter: usize) -> f64
where
    F: Fn(&[C64]) -> Vec<C64>,
{
    if dim == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1a9c);
    let mut q: Vec<C64> = (0..dim)
        .map(|_| c64(1.0 + 0.1 * rng.random::<f64>(), 0.1 * rng.random::<f64>()))
        .collect();
    let nq = q.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    q.iter_mut().for_each(|z| *z /= nq);
    let mut q_prev = vec![ZERO; dim];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut beta_prev = 0.0;
    let mut estimate = 0.0;
    let mut stable = 0;
    for it in 0..max_iter.min(dim.max(1)) {
        let mut w = matvec(&q);
        let alpha: f64 = q.iter().zip(&w).map(|(a, b)| (a.conj() * b).re).sum();
        for i in 0..dim {
            w[i] -= q[i] * alpha + q_prev[i] * beta_prev;
        }
        alphas.push(alpha);
        let beta = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let next = tridiagonal_max(&alphas, &betas);
        if (next - estimate).abs() <= 1e-14 * next.abs().max(1.0) {
            stable += 1;
        } else {
            stable = 0;
        }
        estimate = next;
        if beta <= 1e-14 * estimate.abs().max(1.0) || stable >= 8 || it + 1 == dim {
            break;
        }
        betas.push(beta);
        q_prev = std::mem::replace(&mut q, w.iter().map(|z| z / beta).collect());
        beta_prev = beta;
    }
    estimate
}

/// Largest eigenvalue of the symmetric tridiagonal matrix, by Sturm
/// bisection.
fn tridiagonal_max(alphas: &[f64], betas: &[f64]) -> f64 {
    let k = alphas.len();
    let off = |i: usize| {
        if i < betas.len() && i + 1 < k {
            betas[i].abs()
        } else {
            0.0
        }
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..k {
        let r = off(i) + if i > 0 { off(i - 1) } else { 0.0 };
        lo = lo.min(alphas[i] - r);
        hi = hi.max(alphas[i] + r);
    }
    // number of eigenvalues strictly below x
    let below = |x: f64| {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..k {
            let b2 = if i > 0 { off(i - 1).powi(2) } else { 0.0 };
            d = alphas[i] - x - if i > 0 { b2 / d } else { 0.0 };
            if d == 0.0 {
                d = -f64::EPSILON * (x.abs() + 1.0);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) < k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Horizontal concatenation `[m_1 m_2 ... m_k]`.
pub fn hstack(ms: &[CMat]) -> CMat {
    let rows = ms.first().map(|m| m.nrows()).unwrap_or(0);
    let cols: usize = ms.iter().map(|m| m.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut off = 0;
    for m in ms {
        out.columns_mut(off, m.ncols()).copy_from(m);
        off += m.ncols();
    }
    out
}
