//! Homogeneous polynomials in `d` complex variables and the weighted inner
//! product in which monomials are orthogonal with
//! `‖z^α‖² = α! / (|α|! a_{|α|})`.
//!
//! Coefficients of a degree-`n` polynomial are stored densely in graded
//! lexicographic order: `z_1^n` first, `z_d^n` last.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::CoefficientSequence;
use crate::{Point, C64};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    /// `α! = Π α_i!` as a double.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&e| factorial(e as usize)).product()
    }

    /// `binom(|α|, α) = |α|! / α!`, accumulated as a product of binomials.
    pub fn multinomial(&self) -> f64 {
        let mut remaining = self.degree();
        let mut out = 1.0;
        for &e in &self.0 {
            out *= binomial(remaining, e as usize);
            remaining -= e as usize;
        }
        out
    }

    /// `z^α`.
    pub fn eval(&self, z: &Point) -> C64 {
        self.0
            .iter()
            .zip(z.iter())
            .map(|(&e, x)| x.powu(e))
            .product()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k)
        .fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
        .round_if_small()
}

trait RoundIfSmall {
    fn round_if_small(self) -> f64;
}

impl RoundIfSmall for f64 {
    // Binomials below 2^53 are integers; strip accumulated rounding.
    fn round_if_small(self) -> f64 {
        if self < 9.0e15 {
            self.round()
        } else {
            self
        }
    }
}

/// Number of degree-`n` monomials in `d` variables, `binom(n+d-1, n)`.
pub fn monomial_count(d: usize, n: usize) -> usize {
    if d == 0 {
        return usize::from(n == 0);
    }
    let mut c: u128 = 1;
    for i in 0..(d - 1) {
        c = c * (n + 1 + i) as u128 / (i + 1) as u128;
    }
    c as usize
}

/// All degree-`n` multi-indices in `d` variables, graded lexicographic.
pub fn monomials(d: usize, n: usize) -> Vec<MultiIndex> {
    fn rec(d: usize, n: usize, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if d == 1 {
            prefix.push(n as u32);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for e in (0..=n).rev() {
            prefix.push(e as u32);
            rec(d - 1, n - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::with_capacity(monomial_count(d, n));
    if d == 0 {
        if n == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return out;
    }
    rec(d, n, &mut Vec::with_capacity(d), &mut out);
    out
}

/// Position of `alpha` in [`monomials`]`(d, |alpha|)`.
pub fn rank(alpha: &MultiIndex) -> usize {
    let d = alpha.dim();
    let mut remaining = alpha.degree();
    let mut pos = 0;
    for (i, &e) in alpha.0.iter().enumerate().take(d.saturating_sub(1)) {
        let e = e as usize;
        for v in (e + 1)..=remaining {
            pos += monomial_count(d - i - 1, remaining - v);
        }
        remaining -= e;
    }
    pos
}

/// Monomial norms for one sequence, cached by degree.
#[derive(Clone, Debug)]
pub struct Weights {
    a: Vec<f64>,
}

impl Weights {
    pub fn new(a: &CoefficientSequence, max_degree: usize) -> Self {
        Weights {
            a: a.float_terms(max_degree),
        }
    }

    pub fn from_terms(a: Vec<f64>) -> Self {
        Weights { a }
    }

    pub fn max_degree(&self) -> usize {
        self.a.len() - 1
    }

    pub fn a(&self, n: usize) -> f64 {
        self.a[n]
    }

    pub fn norm_sq(&self, alpha: &MultiIndex) -> Result<f64> {
        let n = alpha.degree();
        let an = self.a[n];
        if an <= 0.0 {
            return Err(Error::ZeroWeight { degree: n });
        }
        Ok(1.0 / (alpha.multinomial() * an))
    }

    /// `‖z^α‖` for every degree-`n` monomial, in basis order.
    pub fn norms(&self, d: usize, n: usize) -> Result<Vec<f64>> {
        monomials(d, n)
            .iter()
            .map(|m| self.norm_sq(m).map(f64::sqrt))
            .collect()
    }
}

/// `‖z^α‖² = α! / (|α|! a_{|α|})`.
pub fn monomial_norm_sq(alpha: &MultiIndex, a: &CoefficientSequence) -> Result<f64> {
    Weights::new(a, alpha.degree()).norm_sq(alpha)
}

/// One `{"alpha": [...], "re": x, "im": y}` entry of the polynomial wire
/// format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub alpha: Vec<u32>,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousPolynomial {
    dim: usize,
    degree: usize,
    coeffs: Vec<C64>,
}

impl HomogeneousPolynomial {
    pub fn zero(dim: usize, degree: usize) -> Self {
        HomogeneousPolynomial {
            dim,
            degree,
            coeffs: vec![C64::new(0.0, 0.0); monomial_count(dim, degree)],
        }
    }

    pub fn one(dim: usize) -> Self {
        Self::monomial(MultiIndex(vec![0; dim]), C64::new(1.0, 0.0))
    }

    pub fn monomial(alpha: MultiIndex, c: C64) -> Self {
        let mut p = Self::zero(alpha.dim(), alpha.degree());
        p.coeffs[rank(&alpha)] = c;
        p
    }

    /// The coordinate function `z_{i+1}`.
    pub fn variable(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        Self::monomial(MultiIndex(e), C64::new(1.0, 0.0))
    }

    /// `Σ_i c_i z_i`.
    pub fn linear_form(c: &[C64]) -> Self {
        let mut p = Self::zero(c.len(), 1);
        p.coeffs.copy_from_slice(c);
        p
    }

    /// Dense coefficients in graded lexicographic order.
    pub fn from_coeffs(dim: usize, degree: usize, coeffs: Vec<C64>) -> Result<Self> {
        let expected = monomial_count(dim, degree);
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: coeffs.len(),
            });
        }
        Ok(HomogeneousPolynomial {
            dim,
            degree,
            coeffs,
        })
    }

    pub fn from_terms(dim: usize, terms: &[Term]) -> Result<Self> {
        let Some(first) = terms.first() else {
            return Ok(Self::zero(dim, 0));
        };
        let degree = first.alpha.iter().map(|&e| e as usize).sum();
        let mut p = Self::zero(dim, degree);
        for t in terms {
            if t.alpha.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: t.alpha.len(),
                });
            }
            let alpha = MultiIndex(t.alpha.clone());
            if alpha.degree() != degree {
                return Err(Error::InvalidInput(format!(
                    "term {:?} has degree {}, polynomial is homogeneous of degree {degree}",
                    t.alpha,
                    alpha.degree()
                )));
            }
            p.coeffs[rank(&alpha)] += C64::new(t.re, t.im);
        }
        Ok(p)
    }

    pub fn to_terms(&self) -> Vec<Term> {
        self.terms()
            .map(|(alpha, c)| Term {
                alpha: alpha.0,
                re: c.re,
                im: c.im,
            })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> C64 {
        if alpha.dim() != self.dim || alpha.degree() != self.degree {
            return C64::new(0.0, 0.0);
        }
        self.coeffs[rank(alpha)]
    }

    /// Non-zero terms in basis order.
    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, C64)> + '_ {
        monomials(self.dim, self.degree)
            .into_iter()
            .zip(self.coeffs.iter().copied())
            .filter(|(_, c)| *c != C64::new(0.0, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == C64::new(0.0, 0.0))
    }

    pub fn eval(&self, z: &Point) -> C64 {
        self.terms().map(|(alpha, c)| c * alpha.eval(z)).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        HomogeneousPolynomial {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            ..self.clone()
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        if self.degree != other.degree {
            return Err(Error::InvalidInput(
                "cannot add homogeneous polynomials of different degree".into(),
            ));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(HomogeneousPolynomial {
            coeffs,
            ..self.clone()
        })
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut out = Self::zero(self.dim, self.degree + other.degree);
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                out.coeffs[rank(&a.add(&b))] += ca * cb;
            }
        }
        Ok(out)
    }

    /// `p ∘ A`, i.e. `z ↦ p(A z)` for a `d×d` matrix `A`.
    pub fn compose_linear(&self, a: &crate::CMatrix) -> Result<Self> {
        if a.nrows() != self.dim || a.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: a.nrows(),
            });
        }
        let rows: Vec<Self> = (0..self.dim)
            .map(|i| Self::linear_form(&a.row(i).iter().copied().collect::<Vec<_>>()))
            .collect();
        let mut out = Self::zero(self.dim, self.degree);
        for (alpha, c) in self.terms() {
            let mut term = Self::one(self.dim).scale(c);
            for (i, &e) in alpha.0.iter().enumerate() {
                for _ in 0..e {
                    term = term.multiply(&rows[i])?;
                }
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    /// Coordinates in the orthonormal monomial basis `z^α/‖z^α‖`.
    pub fn normalized_coords(&self, weights: &Weights) -> Result<Vec<C64>> {
        let norms = weights.norms(self.dim, self.degree)?;
        Ok(self.coeffs.iter().zip(norms).map(|(c, n)| c * n).collect())
    }

    /// Inverse of [`normalized_coords`](Self::normalized_coords).
    pub fn from_normalized_coords(
        dim: usize,
        degree: usize,
        y: &[C64],
        weights: &Weights,
    ) -> Result<Self> {
        let norms = weights.norms(dim, degree)?;
        let coeffs = y.iter().zip(norms).map(|(c, n)| c / n).collect();
        Self::from_coeffs(dim, degree, coeffs)
    }
}

/// `⟨p, q⟩ = Σ p_α conj(q_α) ‖z^α‖²`; zero across degrees.
pub fn inner_product(
    p: &HomogeneousPolynomial,
    q: &HomogeneousPolynomial,
    a: &CoefficientSequence,
) -> Result<C64> {
    p.check_dim(q)?;
    if p.degree != q.degree {
        return Ok(C64::new(0.0, 0.0));
    }
    weighted_inner(p, q, &Weights::new(a, p.degree))
}

pub fn weighted_inner(
    p: &HomogeneousPolynomial,
    q: &HomogeneousPolynomial,
    weights: &Weights,
) -> Result<C64> {
    p.check_dim(q)?;
    if p.degree != q.degree {
        return Ok(C64::new(0.0, 0.0));
    }
    let mut s = C64::new(0.0, 0.0);
    for (alpha, (x, y)) in monomials(p.dim, p.degree)
        .iter()
        .zip(p.coeffs.iter().zip(&q.coeffs))
    {
        if *x != C64::new(0.0, 0.0) && *y != C64::new(0.0, 0.0) {
            s += x * y.conj() * weights.norm_sq(alpha)?;
        }
    }
    Ok(s)
}

/// Expansion of `⟨·, w⟩^n = Σ_α binom(n, α) conj(w)^α z^α`.
pub fn kernel_slice(w: &Point, n: usize) -> HomogeneousPolynomial {
    let d = w.len();
    let coeffs = monomials(d, n)
        .iter()
        .map(|alpha| alpha.eval(w).conj() * alpha.multinomial())
        .collect();
    HomogeneousPolynomial {
        dim: d,
        degree: n,
        coeffs,
    }
}

/// `‖⟨·, w⟩^n‖²` computed through the monomial expansion.
pub fn kernel_slice_norm_sq(w: &Point, n: usize, a: &CoefficientSequence) -> Result<f64> {
    let p = kernel_slice(w, n);
    Ok(inner_product(&p, &p, a)?.re)
}

/// Finite sum of homogeneous components.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedVector {
    dim: usize,
    components: BTreeMap<usize, HomogeneousPolynomial>,
}

impl GradedVector {
    pub fn new(dim: usize) -> Self {
        GradedVector {
            dim,
            components: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, p: HomogeneousPolynomial) -> Result<()> {
        if p.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: p.dim,
            });
        }
        match self.components.remove(&p.degree) {
            Some(q) => self.components.insert(p.degree, q.add(&p)?),
            None => self.components.insert(p.degree, p),
        };
        Ok(())
    }

    pub fn components(&self) -> impl Iterator<Item = &HomogeneousPolynomial> {
        self.components.values()
    }

    pub fn component(&self, n: usize) -> Option<&HomogeneousPolynomial> {
        self.components.get(&n)
    }

    pub fn eval(&self, z: &Point) -> C64 {
        self.components.values().map(|p| p.eval(z)).sum()
    }

    /// `‖g‖²`: components of different degree are orthogonal.
    pub fn norm_sq(&self, weights: &Weights) -> Result<f64> {
        self.components
            .values()
            .map(|p| weighted_inner(p, p, weights).map(|v| v.re))
            .sum()
    }

    /// `f · g` for homogeneous `f`.
    pub fn multiply(&self, f: &HomogeneousPolynomial) -> Result<GradedVector> {
        let mut out = GradedVector::new(self.dim);
        for p in self.components.values() {
            out.insert(f.multiply(p)?)?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::CoefficientSequence;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn graded_lex_order_and_rank() {
        let m = monomials(2, 2);
        assert_eq!(
            m,
            vec![
                MultiIndex(vec![2, 0]),
                MultiIndex(vec![1, 1]),
                MultiIndex(vec![0, 2])
            ]
        );
        for d in 1..5 {
            for n in 0..7 {
                let all = monomials(d, n);
                assert_eq!(all.len(), monomial_count(d, n));
                for (i, alpha) in all.iter().enumerate() {
                    assert_eq!(rank(alpha), i);
                }
            }
        }
    }

    #[test]
    fn multinomial_identity() {
        for alpha in monomials(3, 6) {
            let lhs = alpha.multinomial() * alpha.factorial();
            assert_eq!(lhs, factorial(6));
        }
    }

    // Oracle: K_n(z, w) = a_n Σ_α binom(n,α) z^α conj(w)^α, so the Gram of
    // the degree-n component in the monomial basis is diag(a_n binom(n,α)),
    // whose inverse gives the monomial norms.
    #[test]
    fn monomial_norms() {
        let da = CoefficientSequence::drury_arveson();
        assert_eq!(monomial_norm_sq(&MultiIndex(vec![0, 0]), &da).unwrap(), 1.0);
        assert_eq!(monomial_norm_sq(&MultiIndex(vec![1, 1]), &da).unwrap(), 0.5);
        let dir = CoefficientSequence::dirichlet();
        assert!((monomial_norm_sq(&MultiIndex(vec![2]), &dir).unwrap() - 3.0).abs() < 1e-15);
        let zero = CoefficientSequence::custom(vec![1.0.into()], Default::default()).unwrap();
        assert_eq!(
            monomial_norm_sq(&MultiIndex(vec![1]), &zero),
            Err(Error::ZeroWeight { degree: 1 })
        );
    }

    #[test]
    fn inner_products() {
        let da = CoefficientSequence::drury_arveson();
        let z1 = HomogeneousPolynomial::variable(2, 0);
        let z2 = HomogeneousPolynomial::variable(2, 1);
        assert_eq!(inner_product(&z1, &z2, &da).unwrap(), c(0.0));
        let z1z2 = z1.multiply(&z2).unwrap();
        assert_eq!(inner_product(&z1z2, &z1z2, &da).unwrap(), c(0.5));
        assert_eq!(inner_product(&z1, &z1z2, &da).unwrap(), c(0.0));
        let z3 = HomogeneousPolynomial::variable(3, 0);
        assert!(matches!(
            inner_product(&z1, &z3, &da),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn products() {
        let z1 = HomogeneousPolynomial::variable(2, 0);
        let z2 = HomogeneousPolynomial::variable(2, 1);
        assert_eq!(z1.multiply(&HomogeneousPolynomial::one(2)).unwrap(), z1);
        assert_eq!(
            z1.multiply(&z2).unwrap(),
            HomogeneousPolynomial::monomial(MultiIndex(vec![1, 1]), c(1.0))
        );
        let s = z1.add(&z2).unwrap();
        let sq = s.multiply(&s).unwrap();
        assert_eq!(sq.coeffs(), &[c(1.0), c(2.0), c(1.0)]);
    }

    #[test]
    fn kernel_slice_norms() {
        let da = CoefficientSequence::drury_arveson();
        assert_eq!(
            kernel_slice_norm_sq(&Point::from_vec(vec![c(0.0), c(0.0)]), 3, &da).unwrap(),
            0.0
        );
        let w = Point::from_vec(vec![c(0.3), C64::new(0.0, 0.4)]); // ‖w‖ = 1/2
        assert!((kernel_slice_norm_sq(&w, 2, &da).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        let dir = CoefficientSequence::dirichlet();
        let w = Point::from_vec(vec![c(0.3)]);
        assert!((kernel_slice_norm_sq(&w, 1, &dir).unwrap() - 0.18).abs() < 1e-15);
    }

    #[test]
    fn wire_format() {
        let terms = vec![
            Term {
                alpha: vec![2, 0],
                re: 1.0,
                im: 0.0,
            },
            Term {
                alpha: vec![0, 2],
                re: 0.0,
                im: -1.0,
            },
        ];
        let p = HomogeneousPolynomial::from_terms(2, &terms).unwrap();
        assert_eq!(p.to_terms(), terms);
        let bad = vec![
            Term {
                alpha: vec![1, 0],
                re: 1.0,
                im: 0.0,
            },
            Term {
                alpha: vec![1, 1],
                re: 1.0,
                im: 0.0,
            },
        ];
        assert!(HomogeneousPolynomial::from_terms(2, &bad).is_err());
    }

    #[test]
    fn composition_with_linear_map() {
        // (z1 z2) ∘ swap = z2 z1
        let a = crate::CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let p = HomogeneousPolynomial::monomial(MultiIndex(vec![2, 0]), c(1.0));
        let q = p.compose_linear(&a).unwrap();
        assert_eq!(
            q,
            HomogeneousPolynomial::monomial(MultiIndex(vec![0, 2]), c(1.0))
        );
    }
}
