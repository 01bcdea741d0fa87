//! Graded blocks of multiplication by a homogeneous polynomial and the
//! resulting multiplier-norm sweep.
//!
//! Multiplication by `f` of degree `m` maps degree `n` into degree `n + m`,
//! so `‖M_f‖ = sup_n ‖block(f, n)‖`. Only finitely many blocks are computed.

use serde::Serialize;

use crate::error::Result;
use crate::linalg::{psd_certificate, spectral_norm, PsdCertificate};
use crate::poly::{
    monomial_count, monomials, rank, weighted_inner, HomogeneousPolynomial, Weights,
};
use crate::report::Report;
use crate::series::{inner, CoefficientSequence};
use crate::variety::{GradedComponentBasis, Variety};
use crate::{CMatrix, Point, C64};

/// Compression of `M_f` from degree `source` to degree `source + m`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierBlock {
    pub source: usize,
    pub target: usize,
    pub matrix: CMatrix,
}

impl MultiplierBlock {
    pub fn norm(&self) -> f64 {
        spectral_norm(&self.matrix)
    }
}

/// `M_f` in the orthonormal monomial bases: the entry at `(α + γ, α)` is
/// `f_γ ‖z^{α+γ}‖ / ‖z^α‖`.
fn full_block(f: &HomogeneousPolynomial, n: usize, weights: &Weights) -> Result<CMatrix> {
    let d = f.dim();
    let src = monomials(d, n);
    let mut m = CMatrix::zeros(monomial_count(d, n + f.degree()), src.len());
    for (col, alpha) in src.iter().enumerate() {
        let src_sq = weights.norm_sq(alpha)?;
        for (gamma, c) in f.terms() {
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            let beta = alpha.add(&gamma);
            let ratio = (weights.norm_sq(&beta)? / src_sq).sqrt();
            m[(rank(&beta), col)] += c * ratio;
        }
    }
    Ok(m)
}

fn component(
    variety: Option<&Variety>,
    d: usize,
    n: usize,
    weights: &Weights,
) -> Result<GradedComponentBasis> {
    match variety {
        Some(v) => v.component(n, weights),
        None => Ok(GradedComponentBasis::full(d, n)),
    }
}

/// Block of `M_f` at source degree `n`, compressed to the perp components
/// when a variety is given.
pub fn block(
    f: &HomogeneousPolynomial,
    n: usize,
    a: &CoefficientSequence,
    variety: Option<&Variety>,
) -> Result<MultiplierBlock> {
    block_with_weights(f, n, &Weights::new(a, n + f.degree()), variety)
}

pub fn block_with_weights(
    f: &HomogeneousPolynomial,
    n: usize,
    weights: &Weights,
    variety: Option<&Variety>,
) -> Result<MultiplierBlock> {
    let full = full_block(f, n, weights)?;
    let matrix = match variety {
        None => full,
        Some(_) => {
            let src = component(variety, f.dim(), n, weights)?;
            let dst = component(variety, f.dim(), n + f.degree(), weights)?;
            dst.basis_perp.adjoint() * full * src.basis_perp
        }
    };
    Ok(MultiplierBlock {
        source: n,
        target: n + f.degree(),
        matrix,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultiplierNormEstimate {
    pub sup_block_norm: f64,
    pub argmax: usize,
    pub sweep: usize,
    /// `‖f‖_H`, or the norm of its projection onto `H ⊖ I`.
    pub hilbert_norm: f64,
    pub profile: Vec<f64>,
}

impl MultiplierNormEstimate {
    /// Passes iff the sweep never exceeds the Hilbert norm.
    pub fn to_report(&self, kernel: &str) -> Report {
        let ok = self.sup_block_norm <= self.hilbert_norm * (1.0 + 1e-8);
        let reason = format!(
            "block norm {} at degree {} exceeds the Hilbert norm {}",
            self.sup_block_norm, self.argmax, self.hilbert_norm
        );
        Report::verdict("multiplier_norm", ok, reason)
            .with("kernel", kernel)
            .with("sup_block_norm", self.sup_block_norm)
            .with("argmax", self.argmax)
            .with("sweep", self.sweep)
            .with("hilbert_norm", self.hilbert_norm)
            .with("profile", self.profile.clone())
    }
}

/// Largest block norm over source degrees `0..=sweep`.
pub fn multiplier_norm(
    f: &HomogeneousPolynomial,
    a: &CoefficientSequence,
    sweep: usize,
    variety: Option<&Variety>,
) -> Result<MultiplierNormEstimate> {
    let weights = Weights::new(a, sweep + f.degree());
    let hilbert_norm = match variety {
        None => weighted_inner(f, f, &weights)?.re.max(0.0).sqrt(),
        Some(v) => {
            let y = f.normalized_coords(&weights)?;
            let y = CMatrix::from_column_slice(y.len(), 1, &y);
            let basis = v.component(f.degree(), &weights)?.basis_perp;
            (basis.adjoint() * y).norm()
        }
    };
    let mut profile = Vec::with_capacity(sweep + 1);
    for n in 0..=sweep {
        profile.push(block_with_weights(f, n, &weights, variety)?.norm());
    }
    let (argmax, sup_block_norm) =
        profile
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            });
    Ok(MultiplierNormEstimate {
        sup_block_norm,
        argmax,
        sweep,
        hilbert_norm,
        profile,
    })
}

/// PSD test of `[(a_{n+k} - a_n a_k) ⟨z_i, z_j⟩^{n+k}]`.
pub fn check_component_inequality(
    a: &CoefficientSequence,
    n: usize,
    k: usize,
    points: &[Point],
) -> PsdCertificate {
    let factor = a.term_f64(n + k) - a.term_f64(n) * a.term_f64(k);
    let m = points.len();
    let power = (n + k) as u32;
    let matrix = CMatrix::from_fn(m, m, |i, j| {
        inner(&points[i], &points[j]).powu(power) * factor
    });
    psd_certificate(&matrix)
}
