//! Isomorphism classifiers for restricted spaces: coefficient comparisons,
//! unitary and linear equivalence of subspace unions, and composition
//! operator blocks.
//!
//! For unions of lines the equivalence searches are exact: every piece
//! permutation is tried and the remaining phase freedom is solved by
//! propagation along a spanning forest. Higher-dimensional pieces are handled
//! by a Procrustes heuristic that never reports a false `Verified`.

use std::collections::VecDeque;

use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{
    max_abs, nearest_unitary, random_unitary, singular_values, split_span, unitarity_residual,
};
use crate::poly::{monomials, HomogeneousPolynomial, Weights};
use crate::report::{Report, Status};
use crate::series::{
    certify_np, check_log_convex, classify_domain, CoefficientSequence, Domain, NpVerdict, Terms,
};
use crate::variety::{SubspaceUnion, Variety};
use crate::{CMatrix, C64};

/// Verification tolerance for witnesses.
pub const WITNESS_TOL: f64 = 1e-9;

/// Largest number of pieces for which permutations are enumerated.
pub const MAX_PIECES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Verified,
    RefutedByInvariant,
    Unknown,
}

/// Outcome of an equivalence search. A witness maps the second union onto
/// the first, sending piece `j` to piece `permutation[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceVerdict {
    pub verdict: Verdict,
    pub witness: Option<CMatrix>,
    pub permutation: Option<Vec<usize>>,
    pub residual: Option<f64>,
    pub reason: String,
    pub invariants: Value,
}

impl EquivalenceVerdict {
    pub fn is_verified(&self) -> bool {
        self.verdict == Verdict::Verified
    }

    pub fn to_json(&self) -> Value {
        json!({
            "verdict": self.verdict,
            "witness": self.witness.as_ref().map(matrix_json),
            "permutation": self.permutation,
            "residual": self.residual,
            "reason": self.reason,
            "invariants": self.invariants,
        })
    }

    fn refuted(reason: impl Into<String>, invariants: Value) -> Self {
        EquivalenceVerdict {
            verdict: Verdict::RefutedByInvariant,
            witness: None,
            permutation: None,
            residual: None,
            reason: reason.into(),
            invariants,
        }
    }

    fn unknown(reason: impl Into<String>, invariants: Value) -> Self {
        EquivalenceVerdict {
            verdict: Verdict::Unknown,
            ..Self::refuted(reason, invariants)
        }
    }

    fn verified(
        witness: CMatrix,
        permutation: Vec<usize>,
        residual: f64,
        invariants: Value,
    ) -> Self {
        EquivalenceVerdict {
            verdict: Verdict::Verified,
            witness: Some(witness),
            permutation: Some(permutation),
            residual: Some(residual),
            reason: String::new(),
            invariants,
        }
    }
}

/// Rows of `[re, im]` pairs.
pub fn matrix_json(m: &CMatrix) -> Value {
    Value::Array(
        m.row_iter()
            .map(|row| Value::Array(row.iter().map(|x| json!([x.re, x.im])).collect()))
            .collect(),
    )
}

// ---------------------------------------------------------------------------
// Coefficient comparisons

/// `a_n = a'_n` for all `n ≤ N`: exact for rational pairs, otherwise within
/// `1e-12` relative.
pub fn compare_sequences_equal(
    a: &CoefficientSequence,
    b: &CoefficientSequence,
    truncation: usize,
) -> Report {
    let first_diff = match (a.terms(truncation), b.terms(truncation)) {
        (Terms::Exact(x), Terms::Exact(y)) => x.iter().zip(&y).position(|(p, q)| p != q),
        (x, y) => {
            let (x, y) = (x.to_f64(), y.to_f64());
            x.iter()
                .zip(&y)
                .position(|(p, q)| (p - q).abs() > 1e-12 * p.abs().max(q.abs()))
        }
    };
    let report = match first_diff {
        None => Report::pass("sequences_equal"),
        Some(n) => Report::fail("sequences_equal", format!("coefficients differ at n = {n}"))
            .with("index", n)
            .with("left", a.terms(n).get(n))
            .with("right", b.terms(n).get(n)),
    };
    report
        .with("left_kernel", a.name())
        .with("right_kernel", b.name())
        .with("truncation", truncation)
}

/// Min and max of `a_n / a'_n`, globally and over the last quarter
/// `[3N/4, N]`, with a verdict on boundedness.
///
/// Pairs of presets with closed-form growth `C n^p` are decided
/// analytically (bounded iff the exponents agree, limit `C / C'`). Other
/// pairs use the log-log slope of the ratio between `N/2` and `N`, flagged
/// diverging when it exceeds `0.05` in absolute value.
pub fn compare_sequences_bounded_ratio(
    a: &CoefficientSequence,
    b: &CoefficientSequence,
    truncation: usize,
) -> Result<Report> {
    let x = a.float_terms(truncation);
    let y = b.float_terms(truncation);
    if let Some(n) = y.iter().position(|v| *v <= 0.0) {
        return Err(Error::ZeroWeight { degree: n });
    }
    let ratio: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p / q).collect();
    let extremes = |s: &[f64]| {
        s.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            })
    };
    let (global_min, global_max) = extremes(&ratio);
    let start = (3 * truncation / 4).min(truncation);
    let (tail_min, tail_max) = extremes(&ratio[start..]);
    let mid = truncation / 2;
    let slope = if truncation >= 2 && ratio[mid] > 0.0 && ratio[truncation] > 0.0 {
        (ratio[truncation] / ratio[mid]).ln()
            / ((truncation as f64 + 1.0) / (mid as f64 + 1.0)).ln()
    } else {
        0.0
    };
    let (bounded, decided_by, limit) = match (a.growth(), b.growth()) {
        (Some(ga), Some(gb)) => {
            let same = (ga.exponent - gb.exponent).abs() < 1e-12;
            (same, "closed_form", same.then(|| ga.constant / gb.constant))
        }
        _ => (slope.abs() <= 0.05 && tail_min > 0.0, "trend", None),
    };
    let trend = if bounded { "bounded" } else { "diverging" };
    Ok(Report::verdict(
        "bounded_ratio",
        bounded,
        format!("ratio shows a diverging trend (slope {slope})"),
    )
    .with("left_kernel", a.name())
    .with("right_kernel", b.name())
    .with("truncation", truncation)
    .with("min_ratio", tail_min)
    .with("max_ratio", tail_max)
    .with("global_min_ratio", global_min)
    .with("global_max_ratio", global_max)
    .with("slope", slope)
    .with("trend", trend)
    .with("decided_by", decided_by)
    .with("limit", limit))
}

// ---------------------------------------------------------------------------
// Invariants

fn check_same_dim(v: &SubspaceUnion, w: &SubspaceUnion) -> Result<()> {
    if v.dim() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: v.dim(),
            found: w.dim(),
        });
    }
    Ok(())
}

/// Sorted cosines of the principal angles between every pair of pieces.
pub fn principal_angle_multiset(u: &SubspaceUnion) -> Vec<f64> {
    let p = u.pieces();
    let mut out = Vec::new();
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            let m = p[i].adjoint() * &p[j];
            out.extend(singular_values(&m).into_iter().map(|s| s.min(1.0)));
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

fn sorted_dims(u: &SubspaceUnion) -> Vec<usize> {
    let mut d = u.piece_dims();
    d.sort_unstable();
    d
}

fn span_rank(u: &SubspaceUnion) -> usize {
    let frames: Vec<&CMatrix> = u.pieces().iter().collect();
    let cols: usize = frames.iter().map(|f| f.ncols()).sum();
    let mut all = CMatrix::zeros(u.dim(), cols);
    let mut at = 0;
    for f in frames {
        all.columns_mut(at, f.ncols()).copy_from(f);
        at += f.ncols();
    }
    split_span(&all, u.dim()).0.ncols()
}

fn invariants(v: &SubspaceUnion, w: &SubspaceUnion) -> Value {
    json!({
        "left_piece_dims": sorted_dims(v),
        "right_piece_dims": sorted_dims(w),
        "left_principal_cosines": principal_angle_multiset(v),
        "right_principal_cosines": principal_angle_multiset(w),
        "left_span_rank": span_rank(v),
        "right_span_rank": span_rank(w),
    })
}

/// Visits permutations `σ` (with `σ[j]` the image of `j`) in lexicographic
/// order, pruning partial assignments rejected by `accept`, and stops at the
/// first `Some` returned by `visit`.
fn search_permutations<T>(
    m: usize,
    accept: &dyn Fn(&[usize]) -> bool,
    visit: &mut dyn FnMut(&[usize]) -> Option<T>,
) -> Option<T> {
    fn go<T>(
        m: usize,
        perm: &mut Vec<usize>,
        used: &mut [bool],
        accept: &dyn Fn(&[usize]) -> bool,
        visit: &mut dyn FnMut(&[usize]) -> Option<T>,
    ) -> Option<T> {
        if perm.len() == m {
            return visit(perm);
        }
        for i in 0..m {
            if used[i] {
                continue;
            }
            perm.push(i);
            if accept(perm) {
                used[i] = true;
                if let Some(t) = go(m, perm, used, accept, visit) {
                    return Some(t);
                }
                used[i] = false;
            }
            perm.pop();
        }
        None
    }
    go(
        m,
        &mut Vec::with_capacity(m),
        &mut vec![false; m],
        accept,
        visit,
    )
}

/// Solves `λ_k = λ_j · ratio(j, k)` over the given edges with one free unit
/// phase per connected component, then checks every edge.
fn propagate_phases(m: usize, edges: &[(usize, usize, C64)]) -> Option<Vec<C64>> {
    let mut adj: Vec<Vec<(usize, C64)>> = vec![Vec::new(); m];
    for &(j, k, r) in edges {
        adj[j].push((k, r));
        adj[k].push((j, r.inv()));
    }
    let mut phase: Vec<Option<C64>> = vec![None; m];
    for root in 0..m {
        if phase[root].is_some() {
            continue;
        }
        phase[root] = Some(C64::new(1.0, 0.0));
        let mut queue = VecDeque::from([root]);
        while let Some(j) = queue.pop_front() {
            let pj = phase[j].expect("visited");
            for &(k, r) in &adj[j] {
                if phase[k].is_none() {
                    let p = pj * r;
                    phase[k] = Some(p / p.norm());
                    queue.push_back(k);
                }
            }
        }
    }
    let phase: Vec<C64> = phase.into_iter().map(|p| p.expect("all visited")).collect();
    edges
        .iter()
        .all(|&(j, k, r)| (phase[k] - phase[j] * r).norm() <= 1e-8)
        .then_some(phase)
}

fn direction_matrix(u: &SubspaceUnion) -> CMatrix {
    let m = u.pieces().len();
    CMatrix::from_fn(u.dim(), m, |i, j| u.pieces()[j][(i, 0)])
}

// ---------------------------------------------------------------------------
// Unitary equivalence

/// Searches for a unitary `U` with `U W_j = V_{σ(j)}` for every piece.
pub fn unitary_equivalence(v: &SubspaceUnion, w: &SubspaceUnion) -> Result<EquivalenceVerdict> {
    check_same_dim(v, w)?;
    let inv = invariants(v, w);
    if sorted_dims(v) != sorted_dims(w) {
        return Ok(EquivalenceVerdict::refuted("piece dimensions differ", inv));
    }
    let (av, aw) = (principal_angle_multiset(v), principal_angle_multiset(w));
    if av.iter().zip(&aw).any(|(x, y)| (x - y).abs() > WITNESS_TOL) {
        return Ok(EquivalenceVerdict::refuted("principal angles differ", inv));
    }
    if v.pieces().len() > MAX_PIECES {
        return Ok(EquivalenceVerdict::unknown(
            "too many pieces for exhaustive search",
            inv,
        ));
    }
    if v.is_lines() {
        Ok(match unitary_lines(v, w) {
            Some((u, perm, res)) => EquivalenceVerdict::verified(u, perm, res, inv),
            None => EquivalenceVerdict::refuted(
                "no permutation and phase assignment matches the Gram matrices",
                inv,
            ),
        })
    } else {
        Ok(match unitary_procrustes(v, w) {
            Some((u, perm, res)) => EquivalenceVerdict::verified(u, perm, res, inv),
            None => EquivalenceVerdict::unknown("Procrustes search found no witness", inv),
        })
    }
}

fn unitary_lines(v: &SubspaceUnion, w: &SubspaceUnion) -> Option<(CMatrix, Vec<usize>, f64)> {
    let x = direction_matrix(v);
    let y = direction_matrix(w);
    let g = x.adjoint() * &x;
    let h = y.adjoint() * &y;
    let m = x.ncols();
    // Gram entries: h[(k, j)] = ⟨u'_j, u'_k⟩ must equal λ_j conj(λ_k) g[(σk, σj)].
    let accept = |perm: &[usize]| {
        let j = perm.len() - 1;
        (0..=j).all(|k| (h[(k, j)].norm() - g[(perm[k], perm[j])].norm()).abs() <= WITNESS_TOL)
    };
    let mut visit = |perm: &[usize]| {
        let mut edges = Vec::new();
        for j in 0..m {
            for k in (j + 1)..m {
                let hv = h[(k, j)];
                if hv.norm() > WITNESS_TOL {
                    // λ_k = conj(hv / (λ_j g)) = λ_j conj(hv / g) since |λ_j| = 1.
                    edges.push((j, k, (hv / g[(perm[k], perm[j])]).conj()));
                }
            }
        }
        let phase = propagate_phases(m, &edges)?;
        let target = CMatrix::from_fn(x.nrows(), m, |i, j| x[(i, perm[j])] * phase[j]);
        let u = nearest_unitary(&(&target * y.adjoint()));
        let res = max_abs(&(&u * &y - &target)).max(unitarity_residual(&u));
        (res <= WITNESS_TOL).then(|| (u, perm.to_vec(), res))
    };
    search_permutations(m, &accept, &mut visit)
}

/// Alternates `U = polar(Σ F_σj R_j F'_j^*)` and `R_j = polar(F_σj^* U F'_j)`.
fn unitary_procrustes(v: &SubspaceUnion, w: &SubspaceUnion) -> Option<(CMatrix, Vec<usize>, f64)> {
    let (pv, pw) = (v.pieces(), w.pieces());
    let m = pv.len();
    let d = v.dim();
    let accept = |perm: &[usize]| {
        let j = perm.len() - 1;
        pv[perm[j]].ncols() == pw[j].ncols()
    };
    let residual = |u: &CMatrix, perm: &[usize]| {
        let r = (0..m)
            .map(|j| {
                let f = &pv[perm[j]];
                let img = u * &pw[j];
                (&img - f * (f.adjoint() * &img)).norm()
            })
            .fold(0.0, f64::max);
        r.max(unitarity_residual(u))
    };
    let mut visit = |perm: &[usize]| {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9e37);
        for start in 0..5 {
            let mut rots: Vec<CMatrix> = (0..m)
                .map(|j| {
                    let k = pw[j].ncols();
                    if start == 0 {
                        CMatrix::identity(k, k)
                    } else {
                        random_unitary(&mut rng, k)
                    }
                })
                .collect();
            let mut u = CMatrix::identity(d, d);
            for _ in 0..200 {
                let mut acc = CMatrix::zeros(d, d);
                for j in 0..m {
                    acc += &pv[perm[j]] * &rots[j] * pw[j].adjoint();
                }
                u = nearest_unitary(&acc);
                for j in 0..m {
                    rots[j] = nearest_unitary(&(pv[perm[j]].adjoint() * &u * &pw[j]));
                }
                if residual(&u, perm) <= WITNESS_TOL * 1e-2 {
                    break;
                }
            }
            let res = residual(&u, perm);
            if res <= WITNESS_TOL {
                return Some((u, perm.to_vec(), res));
            }
        }
        None
    };
    search_permutations(m, &accept, &mut visit)
}

// ---------------------------------------------------------------------------
// Linear isometric equivalence

/// Searches for an invertible `A` with `A W_j = V_{σ(j)}` and `A` isometric
/// on each piece. Exact for unions of lines.
pub fn linear_isometric_equivalence(
    v: &SubspaceUnion,
    w: &SubspaceUnion,
) -> Result<EquivalenceVerdict> {
    check_same_dim(v, w)?;
    let inv = invariants(v, w);
    if sorted_dims(v) != sorted_dims(w) {
        return Ok(EquivalenceVerdict::refuted("piece dimensions differ", inv));
    }
    if span_rank(v) != span_rank(w) {
        return Ok(EquivalenceVerdict::refuted(
            "spans have different dimension",
            inv,
        ));
    }
    let unitary = unitary_equivalence(v, w)?;
    if unitary.is_verified() {
        return Ok(EquivalenceVerdict {
            invariants: inv,
            ..unitary
        });
    }
    if v.pieces().len() > MAX_PIECES {
        return Ok(EquivalenceVerdict::unknown(
            "too many pieces for exhaustive search",
            inv,
        ));
    }
    if !v.is_lines() {
        return Ok(EquivalenceVerdict::unknown(
            "no unitary witness; linear search covers lines only",
            inv,
        ));
    }
    Ok(match linear_lines(v, w) {
        Some((a, perm, res)) => EquivalenceVerdict::verified(a, perm, res, inv),
        None => EquivalenceVerdict::refuted(
            "no permutation admits a piecewise isometric linear map",
            inv,
        ),
    })
}

/// Greedy choice of linearly independent columns, in index order.
fn independent_columns(x: &CMatrix) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    for j in 0..x.ncols() {
        let mut trial = chosen.clone();
        trial.push(j);
        let sub = x.select_columns(&trial);
        if split_span(&sub, x.nrows()).0.ncols() == trial.len() {
            chosen = trial;
        }
    }
    chosen
}

/// Least-squares coordinates of every column of `x` in the columns of `basis`.
fn coordinates(basis: &CMatrix, x: &CMatrix) -> Option<CMatrix> {
    let svd = basis.clone().svd(true, true);
    svd.solve(x, 1e-12).ok()
}

fn linear_lines(v: &SubspaceUnion, w: &SubspaceUnion) -> Option<(CMatrix, Vec<usize>, f64)> {
    let x = direction_matrix(v);
    let y = direction_matrix(w);
    let (d, m) = (x.nrows(), x.ncols());
    let basis = independent_columns(&y);
    let yb = y.select_columns(&basis);
    let c = coordinates(&yb, &y)?;
    let (_, comp_w) = split_span(&y, d);
    let (_, comp_v) = split_span(&x, d);
    let accept = |_: &[usize]| true;
    let mut visit = |perm: &[usize]| {
        let xb = CMatrix::from_fn(d, basis.len(), |i, k| x[(i, perm[basis[k]])]);
        if split_span(&xb, d).0.ncols() != basis.len() {
            return None;
        }
        let xp = CMatrix::from_fn(d, m, |i, j| x[(i, perm[j])]);
        let e = coordinates(&xb, &xp)?;
        if max_abs(&(&xb * &e - &xp)) > WITNESS_TOL {
            return None;
        }
        // c_{kj} λ_{b_k} = λ_j e_{kj} for every basis slot k and line j.
        let mut edges = Vec::new();
        for j in 0..m {
            for (k, &b) in basis.iter().enumerate() {
                let (ck, ek) = (c[(k, j)], e[(k, j)]);
                if (ck.norm() - ek.norm()).abs() > WITNESS_TOL {
                    return None;
                }
                if ck.norm() > WITNESS_TOL && b != j {
                    edges.push((j, b, ek / ck));
                }
            }
        }
        let phase = propagate_phases(m, &edges)?;
        let mut src = CMatrix::zeros(d, d);
        let mut dst = CMatrix::zeros(d, d);
        for (k, &b) in basis.iter().enumerate() {
            src.set_column(k, &y.column(b));
            dst.set_column(k, &(xb.column(k) * phase[b]));
        }
        let r = basis.len();
        src.columns_mut(r, d - r).copy_from(&comp_w);
        dst.columns_mut(r, d - r).copy_from(&comp_v);
        let a = dst * src.try_inverse()?;
        let target = CMatrix::from_fn(d, m, |i, j| xp[(i, j)] * phase[j]);
        let res = max_abs(&(&a * &y - target));
        let smallest = singular_values(&a).last().copied().unwrap_or(0.0);
        (res <= WITNESS_TOL && smallest > WITNESS_TOL).then(|| (a, perm.to_vec(), res))
    };
    search_permutations(m, &accept, &mut visit)
}

// ---------------------------------------------------------------------------
// Composition operators

/// Blocks of `C_A f = f ∘ A` from `(H ⊖ I)_n` to `(K ⊖ J)_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositionMatrix {
    pub blocks: Vec<CMatrix>,
    /// Per-degree smallest and largest singular value; `None` for empty blocks.
    pub singular_ranges: Vec<Option<(f64, f64)>>,
}

impl CompositionMatrix {
    pub fn sup(&self) -> f64 {
        self.singular_ranges
            .iter()
            .flatten()
            .map(|r| r.1)
            .fold(0.0, f64::max)
    }

    pub fn inf(&self) -> f64 {
        self.singular_ranges
            .iter()
            .flatten()
            .map(|r| r.0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Passes iff every block has singular values in `[lo, hi]`.
    pub fn to_report(&self, lo: f64, hi: f64) -> Report {
        let ok = self.inf() >= lo && self.sup() <= hi;
        Report::verdict(
            "composition_blocks",
            ok,
            format!(
                "singular values span [{}, {}], outside [{lo}, {hi}]",
                self.inf(),
                self.sup()
            ),
        )
        .with("sup_singular_value", self.sup())
        .with("inf_singular_value", self.inf())
        .with("degrees", self.blocks.len().saturating_sub(1))
        .with("singular_ranges", &self.singular_ranges)
    }
}

/// `z^α ∘ A` in normalized coordinates: column `α` in the source weights,
/// rows in the target weights.
fn composition_full(a_map: &CMatrix, n: usize, src: &Weights, dst: &Weights) -> Result<CMatrix> {
    let d = a_map.nrows();
    let mons = monomials(d, n);
    let src_norms = src.norms(d, n)?;
    let dst_norms = dst.norms(d, n)?;
    let mut out = CMatrix::zeros(mons.len(), mons.len());
    for (col, alpha) in mons.iter().enumerate() {
        let p = HomogeneousPolynomial::monomial(alpha.clone(), C64::new(1.0, 0.0))
            .compose_linear(a_map)?;
        for (row, c) in p.coeffs().iter().enumerate() {
            if !c.is_zero() {
                out[(row, col)] = c * dst_norms[row] / src_norms[col];
            }
        }
    }
    Ok(out)
}

/// Requires `A` to map `V(J)` into `V(I)`, checked degree by degree as
/// `I_n ∘ A ⊆ J_n`.
pub fn composition_blocks(
    a_map: &CMatrix,
    source: &Variety,
    target: &Variety,
    a: &CoefficientSequence,
    a_prime: &CoefficientSequence,
    truncation: usize,
) -> Result<CompositionMatrix> {
    let d = source.dim();
    if a_map.nrows() != d || a_map.ncols() != d || target.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: a_map.nrows(),
        });
    }
    let src_w = Weights::new(a, truncation);
    let dst_w = Weights::new(a_prime, truncation);
    let mut blocks = Vec::with_capacity(truncation + 1);
    let mut singular_ranges = Vec::with_capacity(truncation + 1);
    for n in 0..=truncation {
        let full = composition_full(a_map, n, &src_w, &dst_w)?;
        let s = source.component(n, &src_w)?;
        let t = target.component(n, &dst_w)?;
        let leak = t.basis_perp.adjoint() * &full * &s.basis_ideal;
        let residual = max_abs(&leak) / max_abs(&full).max(1.0);
        if residual > WITNESS_TOL {
            return Err(Error::VarietyMismatch { residual });
        }
        let block = t.basis_perp.adjoint() * full * s.basis_perp;
        let sv = singular_values(&block);
        singular_ranges.push(if sv.is_empty() {
            None
        } else {
            let lo = if block.nrows() == block.ncols() {
                sv[sv.len() - 1]
            } else {
                0.0
            };
            Some((lo, sv[0]))
        });
        blocks.push(block);
    }
    Ok(CompositionMatrix {
        blocks,
        singular_ranges,
    })
}

// ---------------------------------------------------------------------------
// Classifiers

/// Records whether each sequence satisfies the standing hypotheses; the
/// classifiers report them without gating on them.
fn hypotheses(a: &CoefficientSequence, truncation: usize) -> Value {
    let depth = truncation.min(64);
    let np = certify_np(a, depth, 0.0).verdict;
    let log_convex = check_log_convex(a, depth).map(|r| r.passed()).ok();
    json!({
        "kernel": a.name(),
        "complete_np": np == NpVerdict::CompleteNP,
        "log_convex": log_convex,
        "checked_degree": depth,
    })
}

fn combine(check: &str, parts: &[(&str, Status, String)]) -> Report {
    if let Some((name, _, reason)) = parts.iter().find(|p| p.1 == Status::Fail) {
        Report::fail(check, format!("{name}: {reason}"))
    } else if let Some((name, _, reason)) = parts.iter().find(|p| p.1 == Status::Unknown) {
        Report::unknown(check, format!("{name}: {reason}"))
    } else {
        Report::pass(check)
    }
}

fn verdict_status(v: &EquivalenceVerdict) -> Status {
    match v.verdict {
        Verdict::Verified => Status::Pass,
        Verdict::RefutedByInvariant => Status::Fail,
        Verdict::Unknown => Status::Unknown,
    }
}

fn report_reason(r: &Report) -> String {
    r.reason.clone().unwrap_or_default()
}

/// Unitarily equivalent restrictions: equal coefficients and a unitary map
/// of `V_J` onto `V_I`.
pub fn classify_isometric(
    a: &CoefficientSequence,
    v_i: &SubspaceUnion,
    a_prime: &CoefficientSequence,
    v_j: &SubspaceUnion,
    truncation: usize,
) -> Result<Report> {
    let seq = compare_sequences_equal(a, a_prime, truncation);
    let eq = unitary_equivalence(v_i, v_j)?;
    Ok(combine(
        "classify_isometric",
        &[
            ("sequences", seq.status, report_reason(&seq)),
            (
                "unitary_equivalence",
                verdict_status(&eq),
                eq.reason.clone(),
            ),
        ],
    )
    .with("sequences", &seq)
    .with("equivalence", eq.to_json())
    .with(
        "hypotheses",
        [hypotheses(a, truncation), hypotheses(a_prime, truncation)],
    ))
}

/// Similar restrictions: boundedly comparable coefficients and an
/// invertible map of `V_J` onto `V_I` isometric on every piece.
pub fn classify_algebraic(
    a: &CoefficientSequence,
    v_i: &SubspaceUnion,
    a_prime: &CoefficientSequence,
    v_j: &SubspaceUnion,
    truncation: usize,
) -> Result<Report> {
    let ratio = compare_sequences_bounded_ratio(a, a_prime, truncation)?;
    let eq = linear_isometric_equivalence(v_i, v_j)?;
    Ok(combine(
        "classify_algebraic",
        &[
            ("bounded_ratio", ratio.status, report_reason(&ratio)),
            (
                "linear_isometric_equivalence",
                verdict_status(&eq),
                eq.reason.clone(),
            ),
        ],
    )
    .with("ratio", &ratio)
    .with("equivalence", eq.to_json())
    .with(
        "hypotheses",
        [hypotheses(a, truncation), hypotheses(a_prime, truncation)],
    ))
}

/// Biholomorphic via multipliers: both kernels live on the open ball or
/// both on the closed ball, and the varieties are linearly isometric.
pub fn classify_multiplier_biholomorphic(
    a: &CoefficientSequence,
    v_i: &SubspaceUnion,
    a_prime: &CoefficientSequence,
    v_j: &SubspaceUnion,
    truncation: usize,
) -> Result<Report> {
    let (da, db) = (
        classify_domain(a, truncation),
        classify_domain(a_prime, truncation),
    );
    let ball = |x: Domain| matches!(x, Domain::OpenBall | Domain::ClosedBall);
    let domains = if da == db && ball(da) {
        (Status::Pass, String::new())
    } else if ball(da) && ball(db) {
        (Status::Fail, format!("{da:?} vs {db:?}"))
    } else {
        (
            Status::Unknown,
            format!("domains {da:?} and {db:?} are not both balls"),
        )
    };
    let eq = linear_isometric_equivalence(v_i, v_j)?;
    Ok(combine(
        "classify_multiplier_biholomorphic",
        &[
            ("domains", domains.0, domains.1),
            (
                "linear_isometric_equivalence",
                verdict_status(&eq),
                eq.reason.clone(),
            ),
        ],
    )
    .with("left_domain", da)
    .with("right_domain", db)
    .with("equivalence", eq.to_json()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::number::Number;
    use crate::poly::kernel_slice;
    use crate::variety::{lines_to_ideal, HomogeneousIdeal};
    use crate::Point;

    fn pt(v: &[(f64, f64)]) -> Point {
        Point::from_iterator(v.len(), v.iter().map(|&(re, im)| C64::new(re, im)))
    }

    fn axes() -> SubspaceUnion {
        SubspaceUnion::lines(
            2,
            &[pt(&[(1.0, 0.0), (0.0, 0.0)]), pt(&[(0.0, 0.0), (1.0, 0.0)])],
        )
        .unwrap()
    }

    fn diagonal() -> SubspaceUnion {
        SubspaceUnion::lines(
            2,
            &[pt(&[(1.0, 0.0), (0.0, 0.0)]), pt(&[(1.0, 0.0), (1.0, 0.0)])],
        )
        .unwrap()
    }

    #[test]
    fn sequence_equality() {
        let hw = CoefficientSequence::h_weighted(Number::integer(-1)).unwrap();
        assert!(compare_sequences_equal(&hw, &CoefficientSequence::dirichlet(), 64).passed());
        let r = compare_sequences_equal(
            &CoefficientSequence::drury_arveson(),
            &CoefficientSequence::dirichlet(),
            64,
        );
        assert_eq!(r.get("index"), Some(&json!(1)));
        let k1 = CoefficientSequence::k_alpha(Number::integer(1)).unwrap();
        assert!(compare_sequences_equal(&k1, &CoefficientSequence::drury_arveson(), 64).passed());
    }

    #[test]
    fn ratio_bounds() {
        let k = CoefficientSequence::k_alpha(Number::ratio(1, 2)).unwrap();
        let h = CoefficientSequence::h_weighted(Number::ratio(-1, 2)).unwrap();
        let r = compare_sequences_bounded_ratio(&k, &h, 5000).unwrap();
        assert!(r.passed());
        let target = 1.0 / std::f64::consts::PI.sqrt();
        for key in ["min_ratio", "max_ratio", "limit"] {
            let v = r.get(key).unwrap().as_f64().unwrap();
            assert!((v / target - 1.0).abs() < 0.02, "{key} = {v}");
        }
        let hw = CoefficientSequence::h_weighted(Number::integer(-1)).unwrap();
        assert!(
            !compare_sequences_bounded_ratio(&hw, &CoefficientSequence::drury_arveson(), 200)
                .unwrap()
                .passed()
        );
        let same = compare_sequences_bounded_ratio(&k, &k, 50).unwrap();
        assert_eq!(same.get("global_min_ratio"), Some(&json!(1.0)));
        assert_eq!(same.get("global_max_ratio"), Some(&json!(1.0)));
        // renewal sequences fall back to the trend heuristic
        let c =
            CoefficientSequence::renewal(vec![Number::ratio(1, 2), Number::ratio(1, 2)]).unwrap();
        let trend = compare_sequences_bounded_ratio(&c, &hw, 400).unwrap();
        assert_eq!(trend.get("decided_by"), Some(&json!("trend")));
        assert!(!trend.passed());
        let flat = compare_sequences_bounded_ratio(&c, &CoefficientSequence::drury_arveson(), 400)
            .unwrap();
        assert_eq!(flat.get("decided_by"), Some(&json!("trend")));
        assert!(flat.passed());
    }

    #[test]
    fn unitary_rotations_and_refutation() {
        let u = random_unitary(&mut ChaCha8Rng::seed_from_u64(3), 2);
        let rotated = axes().map(&u).unwrap();
        let eq = unitary_equivalence(&rotated, &axes()).unwrap();
        assert!(eq.is_verified());
        let w = eq.witness.unwrap();
        // recovered up to a phase on each axis
        for j in 0..2 {
            let col = &w * axes().direction(j);
            let want = rotated.direction(eq.permutation.as_ref().unwrap()[j]);
            assert!((crate::series::inner(&col, &want).norm() - 1.0).abs() < 1e-9);
        }
        let r = unitary_equivalence(&axes(), &diagonal()).unwrap();
        assert_eq!(r.verdict, Verdict::RefutedByInvariant);
    }

    #[test]
    fn three_lines_permuted() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let dirs: Vec<Point> = (0..3)
            .map(|_| crate::linalg::random_unit_vector(&mut rng, 3))
            .collect();
        let v = SubspaceUnion::lines(3, &dirs).unwrap();
        let u = random_unitary(&mut rng, 3);
        let phases = [
            C64::from_polar(1.0, 0.4),
            C64::from_polar(1.0, -1.1),
            C64::from_polar(1.0, 2.0),
        ];
        let shuffled: Vec<Point> = [2, 0, 1]
            .iter()
            .zip(phases)
            .map(|(&i, p)| &u * &dirs[i] * p)
            .collect();
        let w = SubspaceUnion::lines(3, &shuffled).unwrap();
        let forward = unitary_equivalence(&v, &w).unwrap();
        let back = unitary_equivalence(&w, &v).unwrap();
        assert!(forward.is_verified() && back.is_verified());
        let prod = forward.witness.unwrap() * back.witness.unwrap();
        // inverse up to the phase freedom on each line, which acts trivially on the union
        for j in 0..3 {
            let x = v.direction(j);
            assert!((crate::series::inner(&(&prod * &x), &x).norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_equivalences() {
        let eq = linear_isometric_equivalence(&axes(), &diagonal()).unwrap();
        assert!(eq.is_verified());
        let a = eq.witness.unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let img = &a * pt(&[(s, 0.0), (s, 0.0)]);
        assert!(img[0].norm() < 1e-9 && (img[1].norm() - 1.0).abs() < 1e-9);
        let id = linear_isometric_equivalence(&axes(), &axes()).unwrap();
        assert!(max_abs(&(id.witness.unwrap() - CMatrix::identity(2, 2))) < 1e-9);
        let lines3 = SubspaceUnion::lines(
            3,
            &[
                pt(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0)]),
                pt(&[(0.0, 0.0), (0.0, 0.0), (1.0, 0.0)]),
            ],
        )
        .unwrap();
        let mixed = SubspaceUnion::new(
            3,
            vec![
                CMatrix::from_column_slice(
                    3,
                    1,
                    &[C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
                ),
                CMatrix::identity(3, 2),
            ],
        )
        .unwrap();
        assert_eq!(
            linear_isometric_equivalence(&lines3, &mixed)
                .unwrap()
                .verdict,
            Verdict::RefutedByInvariant
        );
    }

    #[test]
    fn dependent_lines() {
        // three lines in C^2 are linearly isometric iff the moduli of the
        // expansion coefficients of the third line agree
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = SubspaceUnion::lines(
            2,
            &[
                pt(&[(1.0, 0.0), (0.0, 0.0)]),
                pt(&[(0.0, 0.0), (1.0, 0.0)]),
                pt(&[(s, 0.0), (s, 0.0)]),
            ],
        )
        .unwrap();
        let w = SubspaceUnion::lines(
            2,
            &[
                pt(&[(1.0, 0.0), (0.0, 0.0)]),
                pt(&[(0.6, 0.0), (0.0, 0.8)]),
                pt(&[(0.6 * s, s), (0.0, 0.8 * s)]),
            ],
        )
        .unwrap();
        let eq = linear_isometric_equivalence(&v, &w).unwrap();
        assert!(eq.is_verified(), "{:?}", eq.reason);
        let skew = SubspaceUnion::lines(
            2,
            &[
                pt(&[(1.0, 0.0), (0.0, 0.0)]),
                pt(&[(0.6, 0.0), (0.8, 0.0)]),
                pt(&[(0.0, 0.0), (1.0, 0.0)]),
            ],
        )
        .unwrap();
        assert_eq!(
            linear_isometric_equivalence(&v, &skew).unwrap().verdict,
            Verdict::RefutedByInvariant
        );
        // fourth line with a different cross-ratio modulus cannot match
        let v4 = SubspaceUnion::lines(
            2,
            &[
                pt(&[(1.0, 0.0), (0.0, 0.0)]),
                pt(&[(0.0, 0.0), (1.0, 0.0)]),
                pt(&[(s, 0.0), (s, 0.0)]),
                pt(&[(s, 0.0), (0.0, s)]),
            ],
        )
        .unwrap();
        let w4 = SubspaceUnion::lines(
            2,
            &[
                pt(&[(1.0, 0.0), (0.0, 0.0)]),
                pt(&[(0.0, 0.0), (1.0, 0.0)]),
                pt(&[(s, 0.0), (s, 0.0)]),
                pt(&[(0.6, 0.0), (0.8, 0.0)]),
            ],
        )
        .unwrap();
        assert_eq!(
            linear_isometric_equivalence(&v4, &w4).unwrap().verdict,
            Verdict::RefutedByInvariant
        );
    }

    #[test]
    fn higher_dimensional_pieces() {
        let u = random_unitary(&mut ChaCha8Rng::seed_from_u64(12), 4);
        let frames = vec![
            CMatrix::identity(4, 2),
            CMatrix::identity(4, 4).columns(1, 2).into_owned(),
        ];
        let v = SubspaceUnion::new(4, frames).unwrap();
        let w = v.map(&u).unwrap();
        let eq = unitary_equivalence(&v, &w).unwrap();
        assert_ne!(eq.verdict, Verdict::RefutedByInvariant);
        if eq.is_verified() {
            assert!(eq.residual.unwrap() <= WITNESS_TOL);
        }
    }

    #[test]
    fn composition_swap_is_permutation() {
        let swap = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        );
        let ideal = Variety::Ideal(
            HomogeneousIdeal::new(
                2,
                vec![HomogeneousPolynomial::monomial(
                    crate::poly::MultiIndex(vec![1, 1]),
                    C64::new(1.0, 0.0),
                )],
                true,
            )
            .unwrap(),
        );
        let da = CoefficientSequence::drury_arveson();
        let cm = composition_blocks(&swap, &ideal, &ideal, &da, &da, 10).unwrap();
        for b in &cm.blocks {
            for x in b.iter() {
                assert!(x.norm() < 1e-12 || (x.norm() - 1.0).abs() < 1e-12);
            }
        }
        assert!((cm.sup() - 1.0).abs() < 1e-12 && (cm.inf() - 1.0).abs() < 1e-12);
        let id = composition_blocks(&CMatrix::identity(2, 2), &ideal, &ideal, &da, &da, 6).unwrap();
        for b in &id.blocks {
            assert!(max_abs(&(b - CMatrix::identity(b.nrows(), b.ncols()))) < 1e-12);
        }
    }

    #[test]
    fn composition_mismatch() {
        let da = CoefficientSequence::drury_arveson();
        let v = Variety::Union(axes());
        let w = Variety::Union(diagonal());
        let err = composition_blocks(&CMatrix::identity(2, 2), &v, &w, &da, &da, 4).unwrap_err();
        assert!(matches!(err, Error::VarietyMismatch { .. }));
    }

    #[test]
    fn adjoint_maps_kernel_slices() {
        let a_seq = CoefficientSequence::dirichlet();
        let b_seq = CoefficientSequence::k_alpha(Number::ratio(1, 2)).unwrap();
        let eq = linear_isometric_equivalence(&axes(), &diagonal()).unwrap();
        let a_map = eq.witness.unwrap();
        let src = Variety::Ideal(lines_to_ideal(&axes()).unwrap());
        let dst = Variety::Ideal(lines_to_ideal(&diagonal()).unwrap());
        let n_max = 8;
        let cm = composition_blocks(&a_map, &src, &dst, &a_seq, &b_seq, n_max).unwrap();
        let sw = Weights::new(&a_seq, n_max);
        let dw = Weights::new(&b_seq, n_max);
        for t in [0.3, -0.55] {
            let w = diagonal().direction(1) * C64::new(t, 0.2);
            let aw = &a_map * &w;
            for n in 1..=n_max {
                let t_basis = dst.component(n, &dw).unwrap().basis_perp;
                let s_basis = src.component(n, &sw).unwrap().basis_perp;
                let kw = kernel_slice(&w, n).scale(C64::new(b_seq.term_f64(n), 0.0));
                let kaw = kernel_slice(&aw, n).scale(C64::new(a_seq.term_f64(n), 0.0));
                let y = CMatrix::from_column_slice(
                    kw.coeffs().len(),
                    1,
                    &kw.normalized_coords(&dw).unwrap(),
                );
                let x = CMatrix::from_column_slice(
                    kaw.coeffs().len(),
                    1,
                    &kaw.normalized_coords(&sw).unwrap(),
                );
                let lhs = cm.blocks[n].adjoint() * (t_basis.adjoint() * y);
                let rhs = s_basis.adjoint() * x;
                assert!(max_abs(&(lhs - rhs)) < 1e-10, "degree {n}");
            }
        }
    }

    #[test]
    fn classifier_contrast() {
        let da = CoefficientSequence::drury_arveson();
        let dir = CoefficientSequence::dirichlet();
        assert!(!classify_isometric(&da, &axes(), &da, &diagonal(), 64)
            .unwrap()
            .passed());
        assert!(classify_algebraic(&da, &axes(), &da, &diagonal(), 64)
            .unwrap()
            .passed());
        assert!(!classify_algebraic(&dir, &axes(), &da, &axes(), 64)
            .unwrap()
            .passed());
        assert!(
            classify_multiplier_biholomorphic(&dir, &axes(), &da, &axes(), 64)
                .unwrap()
                .passed()
        );
        let closed = CoefficientSequence::h_weighted(Number::integer(-2)).unwrap();
        assert!(
            !classify_multiplier_biholomorphic(&closed, &axes(), &dir, &axes(), 64)
                .unwrap()
                .passed()
        );
        let u = random_unitary(&mut ChaCha8Rng::seed_from_u64(5), 2);
        assert!(
            classify_isometric(&dir, &axes(), &dir, &axes().map(&u).unwrap(), 64)
                .unwrap()
                .passed()
        );
        assert!(!classify_isometric(&da, &axes(), &dir, &axes(), 64)
            .unwrap()
            .passed());
        let k = CoefficientSequence::k_alpha(Number::ratio(1, 2)).unwrap();
        let h = CoefficientSequence::h_weighted(Number::ratio(-1, 2)).unwrap();
        assert!(classify_algebraic(&k, &axes(), &h, &diagonal(), 256)
            .unwrap()
            .passed());
    }
}
