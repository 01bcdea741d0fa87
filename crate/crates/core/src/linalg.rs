//! Dense complex linear algebra shared by every module: Hermitian
//! positivity certificates, orthonormal splittings, unitary projections and
//! seeded sampling in the ball.

use nalgebra::{SymmetricEigen, SVD};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::{CMatrix, Point, C64};

/// Relative PSD tolerance: `λ_min ≥ -PSD_REL_TOL · max(1, ‖M‖_∞)`.
pub const PSD_REL_TOL: f64 = 1e-9;

/// Relative rank tolerance for orthonormal splittings.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PsdVerdict {
    #[serde(rename = "PSD")]
    Psd,
    #[serde(rename = "NotPSD")]
    NotPsd,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PsdCertificate {
    pub verdict: PsdVerdict,
    pub min_eigenvalue: f64,
    pub tolerance: f64,
    /// `|λ_min| ≤ tolerance`: PSD by the tie rule.
    pub marginal: bool,
}

impl PsdCertificate {
    pub fn is_psd(&self) -> bool {
        self.verdict == PsdVerdict::Psd
    }
}

/// Maximum absolute row sum.
pub fn inf_norm(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Eigenvalues of a Hermitian matrix, ascending. Only the lower triangle is
/// trusted, so the input is symmetrized first.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// PSD test under the global tolerance rule.
pub fn psd_certificate(m: &CMatrix) -> PsdCertificate {
    psd_certificate_with_tol(m, PSD_REL_TOL * inf_norm(m).max(1.0))
}

pub fn psd_certificate_with_tol(m: &CMatrix, tolerance: f64) -> PsdCertificate {
    let min_eigenvalue = min_eigenvalue(m);
    let verdict = if min_eigenvalue >= -tolerance {
        PsdVerdict::Psd
    } else {
        PsdVerdict::NotPsd
    };
    PsdCertificate {
        verdict,
        min_eigenvalue,
        tolerance,
        marginal: min_eigenvalue.abs() <= tolerance,
    }
}

/// Singular values, descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = SVD::new(m.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Splits `C^n` into an orthonormal basis of the column span of `spanning`
/// and one of its orthogonal complement.
///
/// Rank counts singular values above `RANK_TOL` times the largest column
/// norm.
pub fn split_span(spanning: &CMatrix, n: usize) -> (CMatrix, CMatrix) {
    if n == 0 {
        return (CMatrix::zeros(0, 0), CMatrix::zeros(0, 0));
    }
    let k = spanning.ncols();
    let col_max = spanning.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    if k == 0 || col_max == 0.0 {
        return (CMatrix::zeros(n, 0), CMatrix::identity(n, n));
    }
    // Pad so the SVD returns a full n×n left factor.
    let width = k.max(n);
    let mut padded = CMatrix::zeros(n, width);
    padded.columns_mut(0, k).copy_from(spanning);
    let svd = SVD::new(padded, true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let rank = order
        .iter()
        .filter(|&&i| svd.singular_values[i] > RANK_TOL * col_max)
        .count();
    let pick = |idx: &[usize]| {
        let mut out = CMatrix::zeros(n, idx.len());
        for (c, &i) in idx.iter().enumerate() {
            out.set_column(c, &u.column(i));
        }
        out
    };
    (pick(&order[..rank]), pick(&order[rank..n]))
}

/// Orthonormal basis of the column span (rank-revealing).
pub fn orthonormal_span(spanning: &CMatrix) -> CMatrix {
    split_span(spanning, spanning.nrows()).0
}

/// Polar factor `U V^*` of `m = U Σ V^*`: the unitary nearest to `m`.
pub fn nearest_unitary(m: &CMatrix) -> CMatrix {
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.expect("u");
    let v_t = svd.v_t.expect("v_t");
    u * v_t
}

/// `‖U^* U - I‖_max`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let g = u.adjoint() * u - CMatrix::identity(u.ncols(), u.ncols());
    g.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Uniform sample from the open ball of the given radius in `C^d`.
pub fn random_ball_point<R: Rng + ?Sized>(rng: &mut R, d: usize, radius: f64) -> Point {
    let v: Vec<C64> = (0..d)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let p = Point::from_vec(v);
    let norm = p.norm();
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / (2.0 * d as f64));
    if norm == 0.0 {
        p
    } else {
        p * C64::new(r / norm, 0.0)
    }
}

pub fn random_ball_points<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    count: usize,
    radius: f64,
) -> Vec<Point> {
    (0..count)
        .map(|_| random_ball_point(rng, d, radius))
        .collect()
}

/// Unitary matrix from the polar factor of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    nearest_unitary(&g)
}

/// Unit vector sampled uniformly from the sphere of `C^d`.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Point {
    loop {
        let v = Point::from_iterator(
            d,
            (0..d).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))),
        );
        let n = v.norm();
        if n > 1e-8 {
            return v / C64::new(n, 0.0);
        }
    }
}
