//! The embedding `j(z) = (√c_1 ψ_1(z), √c_2 ψ_2(z), …)` of a complete
//! Nevanlinna-Pick space into Drury-Arveson space, where `c_n = b_n` are the
//! coefficients of `1 - 1/K` and `⟨j(z), j(w)⟩ = 1 - 1/K(z, w)`.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::number::{format_rational, Number};
use crate::poly::{monomial_count, monomials};
use crate::report::Report;
use crate::series::{
    norm, np_coefficients, renewal_exact, renewal_float, CoefficientSequence, SeriesKernel, Terms,
};
use crate::{Point, C64};

/// `ψ_n(z) = (√binom(n, α) z^α)_{|α| = n}` in graded-lex order.
pub fn psi(n: usize, z: &Point) -> Vec<C64> {
    monomials(z.len(), n)
        .iter()
        .map(|alpha| alpha.eval(z) * alpha.multinomial().sqrt())
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMap {
    pub dim: usize,
    /// `c[i]` holds `c_{i+1}`.
    pub c: Vec<f64>,
    pub truncation: usize,
}

impl EmbeddingMap {
    /// Requires every computed `c_n ≥ 0` and `Σ c_n ≤ 1 + 1e-12`.
    pub fn new(a: &CoefficientSequence, dim: usize, truncation: usize) -> Result<Self> {
        let c = np_coefficients(a, truncation).to_f64();
        if let Some((i, v)) = c.iter().enumerate().find(|(_, v)| **v < -1e-12) {
            return Err(Error::InvalidInput(format!(
                "{} is not complete Nevanlinna-Pick: b_{} = {v}",
                a.name(),
                i + 1
            )));
        }
        let total: f64 = c.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "embedding coefficients sum to {total} > 1"
            )));
        }
        Ok(EmbeddingMap {
            dim,
            c: c.into_iter().map(|v| v.max(0.0)).collect(),
            truncation,
        })
    }

    /// Length of the degree-`n` segment.
    pub fn segment_len(&self, n: usize) -> usize {
        monomial_count(self.dim, n)
    }

    pub fn len(&self) -> usize {
        (1..=self.truncation).map(|n| self.segment_len(n)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Truncated `j(z)` and the bound `‖z‖^{2(N+1)}` on the missing squared norm.
pub fn embed_point(map: &EmbeddingMap, z: &Point) -> Result<(Vec<C64>, f64)> {
    if z.len() != map.dim {
        return Err(Error::DimensionMismatch {
            expected: map.dim,
            found: z.len(),
        });
    }
    let r = norm(z);
    if r >= 1.0 {
        return Err(Error::OutsideDomain { norm: r });
    }
    let mut out = Vec::with_capacity(map.len());
    for n in 1..=map.truncation {
        let s = map.c[n - 1].sqrt();
        out.extend(psi(n, z).into_iter().map(|x| x * s));
    }
    Ok((out, r.powi(2 * (map.truncation as i32 + 1))))
}

/// Residual of `⟨j(z), j(w)⟩ = 1 - 1/K(z, w)` against its combined bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EmbeddingResidual {
    pub residual: f64,
    pub bound: f64,
    /// `(‖z‖‖w‖)^{N+1}`, the embedding truncation alone.
    pub embedding_tail: f64,
}

impl EmbeddingResidual {
    pub fn within(&self) -> bool {
        self.residual <= self.bound
    }
}

/// The bound adds the embedding tail, the kernel tail propagated through
/// `1/K`, and a rounding allowance proportional to the magnitudes involved.
pub fn embedding_residual(
    map: &EmbeddingMap,
    kernel: &SeriesKernel,
    z: &Point,
    w: &Point,
) -> Result<EmbeddingResidual> {
    let (jz, _) = embed_point(map, z)?;
    let (jw, _) = embed_point(map, w)?;
    let lhs: C64 = jz.iter().zip(&jw).map(|(x, y)| x * y.conj()).sum();
    let k = kernel.eval_with_tail(z, w)?;
    let kn = k.value.norm();
    if kn <= k.tail_bound {
        return Err(Error::KernelZero);
    }
    let rhs = C64::new(1.0, 0.0) - k.value.inv();
    let embedding_tail = (norm(z) * norm(w)).powi(map.truncation as i32 + 1);
    let kernel_tail = k.tail_bound / (kn * (kn - k.tail_bound));
    let scale = 1.0 + jz.len() as f64 * (1.0 + kn);
    let rounding = 64.0 * f64::EPSILON * scale;
    let residual = (lhs - rhs).norm();
    Ok(EmbeddingResidual {
        residual,
        bound: embedding_tail + kernel_tail + rounding,
        embedding_tail,
    })
}

/// `a` embeds into a finite-dimensional ball iff `b_n` vanishes beyond some
/// degree. Reported finite when the last non-zero `b_n` sits at or below
/// `N/2`, so a run of zeros witnesses the cut-off.
pub fn check_finite_embedding(a: &CoefficientSequence, truncation: usize) -> Report {
    let b = np_coefficients(a, truncation);
    let (zero, mode): (Vec<bool>, &str) = match &b.b {
        Terms::Exact(v) => (v.iter().map(|x| x.is_zero()).collect(), "rational"),
        Terms::Float(v) => (v.iter().map(|x| x.abs() <= 1e-12).collect(), "float"),
    };
    let deg_star = zero.iter().rposition(|z| !z).map_or(0, |i| i + 1);
    let all_positive = match &b.b {
        Terms::Exact(v) => v.iter().all(|x| x.is_positive()),
        Terms::Float(v) => v.iter().all(|x| *x > 1e-12),
    };
    let finite = deg_star * 2 <= truncation;
    let report = if finite {
        Report::pass("finite_embedding")
            .with("finite", true)
            .with("deg_star", deg_star)
    } else {
        Report::fail(
            "finite_embedding",
            format!("not finite through degree {truncation}"),
        )
        .with("finite", false)
    };
    report
        .with("kernel", a.name())
        .with("mode", mode)
        .with("truncation", truncation)
        .with("all_positive", all_positive)
}

/// Renewal sequence of `c` and its Erdős-Feller-Pollard limit `1/Σ k c_k`.
pub fn check_efp_limit(c: &[Number], horizon: usize, eps: f64) -> Result<Report> {
    if c.iter().any(|x| x.to_f64() < 0.0) {
        return Err(Error::InvalidDistribution("negative entry".into()));
    }
    let total: f64 = c.iter().map(Number::to_f64).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidDistribution(format!(
            "entries sum to {total}, not 1"
        )));
    }
    if c.first().is_none_or(|c1| c1.to_f64() <= 0.0) {
        return Err(Error::InvalidDistribution(
            "c_1 must be positive (aperiodicity)".into(),
        ));
    }
    let head = horizon.min(16);
    let first_terms: Vec<String> = match c
        .iter()
        .map(|x| x.as_rational().cloned())
        .collect::<Option<Vec<_>>>()
    {
        Some(exact) => {
            let total: BigRational = exact.iter().sum();
            if !total.is_one() {
                return Err(Error::InvalidDistribution(format!(
                    "entries sum to {}",
                    format_rational(&total)
                )));
            }
            renewal_exact(&exact, head)[1..]
                .iter()
                .map(format_rational)
                .collect()
        }
        None => Vec::new(),
    };
    let cf: Vec<f64> = c.iter().map(Number::to_f64).collect();
    let r: f64 = cf.iter().enumerate().map(|(k, v)| (k + 1) as f64 * v).sum();
    let limit = 1.0 / r;
    let a = renewal_float(&cf, horizon);
    let a_n = a[horizon];
    let deviation = (a_n - limit).abs();
    let report = Report::verdict(
        "efp_limit",
        deviation <= eps,
        format!("|a_N - 1/r| = {deviation} exceeds {eps}"),
    )
    .with("mean", r)
    .with("limit", limit)
    .with("horizon", horizon)
    .with("a_horizon", a_n)
    .with("deviation", deviation)
    .with("first_terms", first_terms);
    Ok(report)
}
