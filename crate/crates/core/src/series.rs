//! Coefficient sequences of unitarily invariant kernels.
//!
//! A kernel `K(z, w) = Σ a_n ⟨z, w⟩^n` with `a_0 = 1` is a complete
//! Nevanlinna-Pick kernel exactly when the Taylor coefficients `b_n` of
//! `1 - 1/Σ a_n t^n` are all non-negative. Everything here is reported "at
//! truncation N": only finitely many coefficients are ever examined.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::number::{format_rational, rational_to_f64, Number};
use crate::report::Report;
use crate::{CMatrix, Point, C64};

/// Relative tolerance for float-mode coefficient comparisons.
pub const FLOAT_TOL: f64 = 1e-10;

/// Rule for coefficients past the explicit list of a custom sequence.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    /// `a_n = 0` past the list (a polynomial kernel).
    #[default]
    Zero,
    /// The last listed value repeats forever.
    RepeatLast,
    /// `a_{n+1} = ratio · a_n` past the list.
    Geometric { ratio: Number },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `a_n = 1`.
    DruryArveson,
    /// `a_n = (n+1)^s`. Complete Nevanlinna-Pick families have `s ≤ 0`;
    /// positive `s` (Bergman-type weights) is accepted as a counterexample.
    HWeighted { s: Number },
    /// `a_n = binom(n + α - 1, n)`, the coefficients of `(1 - t)^{-α}`.
    KAlpha { alpha: Number },
    /// `a_n = 1/(n+1)`.
    Dirichlet,
    /// Explicit leading coefficients followed by a tail rule.
    Custom {
        terms: Vec<Number>,
        #[serde(default)]
        tail: Tail,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ratio_cap: Option<f64>,
    },
    /// `Σ a_n t^n = 1/(1 - Σ_k c_k t^k)`: the sequence whose Nevanlinna-Pick
    /// coefficients are the finite list `c`.
    Renewal {
        c: Vec<Number>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ratio_cap: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Exactness {
    Rational,
    Float,
}

/// Coefficients stored either exactly or as doubles.
#[derive(Clone, Debug, PartialEq)]
pub enum Terms {
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

impl Terms {
    pub fn len(&self) -> usize {
        match self {
            Terms::Exact(v) => v.len(),
            Terms::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get_f64(&self, i: usize) -> f64 {
        match self {
            Terms::Exact(v) => rational_to_f64(&v[i]),
            Terms::Float(v) => v[i],
        }
    }

    pub fn get(&self, i: usize) -> Number {
        match self {
            Terms::Exact(v) => Number::Rational(v[i].clone()),
            Terms::Float(v) => Number::Float(v[i]),
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.get_f64(i)).collect()
    }

    pub fn exactness(&self) -> Exactness {
        match self {
            Terms::Exact(_) => Exactness::Rational,
            Terms::Float(_) => Exactness::Float,
        }
    }
}

/// Leading-order growth `a_n ~ constant · n^exponent`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Growth {
    pub exponent: f64,
    pub constant: f64,
}

/// The sequence `(a_n)` of a unitarily invariant kernel, normalized by
/// `a_0 = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Family", into = "Family")]
pub struct CoefficientSequence {
    family: Family,
}

impl TryFrom<Family> for CoefficientSequence {
    type Error = Error;

    fn try_from(family: Family) -> Result<Self> {
        CoefficientSequence::new(family)
    }
}

impl From<CoefficientSequence> for Family {
    fn from(a: CoefficientSequence) -> Family {
        a.family
    }
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl CoefficientSequence {
    pub fn new(family: Family) -> Result<Self> {
        match &family {
            Family::KAlpha { alpha } if alpha.to_f64() <= 0.0 => {
                return Err(Error::InvalidSequence(format!(
                    "k_alpha needs alpha > 0, got {alpha}"
                )))
            }
            Family::Custom { terms, .. } => {
                let first = terms
                    .first()
                    .ok_or_else(|| Error::InvalidSequence("custom sequence is empty".into()))?;
                let one = match first {
                    Number::Rational(q) => q.is_one(),
                    Number::Float(x) => *x == 1.0,
                };
                if !one {
                    return Err(Error::InvalidSequence(format!(
                        "a_0 must be 1, got {first}"
                    )));
                }
            }
            Family::Renewal { c, .. } => {
                if c.is_empty() {
                    return Err(Error::InvalidSequence("renewal list is empty".into()));
                }
                if c.iter().any(|x| x.to_f64() < 0.0) {
                    return Err(Error::InvalidSequence(
                        "renewal coefficients must be >= 0".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(CoefficientSequence { family })
    }

    pub fn drury_arveson() -> Self {
        CoefficientSequence {
            family: Family::DruryArveson,
        }
    }

    pub fn dirichlet() -> Self {
        CoefficientSequence {
            family: Family::Dirichlet,
        }
    }

    pub fn h_weighted(s: impl Into<Number>) -> Result<Self> {
        Self::new(Family::HWeighted { s: s.into() })
    }

    pub fn k_alpha(alpha: impl Into<Number>) -> Result<Self> {
        Self::new(Family::KAlpha {
            alpha: alpha.into(),
        })
    }

    pub fn custom(terms: Vec<Number>, tail: Tail) -> Result<Self> {
        Self::new(Family::Custom {
            terms,
            tail,
            ratio_cap: None,
        })
    }

    pub fn renewal(c: Vec<Number>) -> Result<Self> {
        Self::new(Family::Renewal { c, ratio_cap: None })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn name(&self) -> String {
        match &self.family {
            Family::DruryArveson => "drury_arveson".into(),
            Family::HWeighted { s } => format!("h_weighted(s={s})"),
            Family::KAlpha { alpha } => format!("k_alpha(alpha={alpha})"),
            Family::Dirichlet => "dirichlet".into(),
            Family::Custom { terms, .. } => format!("custom({} terms)", terms.len()),
            Family::Renewal { c, .. } => format!("renewal({} terms)", c.len()),
        }
    }

    pub fn exactness(&self) -> Exactness {
        let all_rational = |v: &[Number]| v.iter().all(|x| x.as_rational().is_some());
        let exact = match &self.family {
            Family::DruryArveson | Family::Dirichlet => true,
            Family::HWeighted { s } => s.as_integer().is_some(),
            Family::KAlpha { alpha } => alpha.as_rational().is_some(),
            Family::Custom { terms, tail, .. } => {
                all_rational(terms)
                    && match tail {
                        Tail::Geometric { ratio } => ratio.as_rational().is_some(),
                        _ => true,
                    }
            }
            Family::Renewal { c, .. } => all_rational(c),
        };
        if exact {
            Exactness::Rational
        } else {
            Exactness::Float
        }
    }

    /// `a_0, …, a_{n_max}` in the sequence's native arithmetic.
    pub fn terms(&self, n_max: usize) -> Terms {
        match self.exact_terms(n_max) {
            Some(v) => Terms::Exact(v),
            None => Terms::Float(self.float_terms(n_max)),
        }
    }

    /// Exact `a_0, …, a_{n_max}`, or `None` in float mode.
    pub fn exact_terms(&self, n_max: usize) -> Option<Vec<BigRational>> {
        if self.exactness() == Exactness::Float {
            return None;
        }
        let len = n_max + 1;
        let v = match &self.family {
            Family::DruryArveson => vec![BigRational::one(); len],
            Family::Dirichlet => (0..len)
                .map(|n| BigRational::new(1.into(), (n as i64 + 1).into()))
                .collect(),
            Family::HWeighted { s } => {
                let s = s.as_integer()?;
                let k = s.unsigned_abs() as usize;
                (0..len)
                    .map(|n| {
                        let p = num_traits::pow(BigInt::from(n + 1), k);
                        if s >= 0 {
                            BigRational::from_integer(p)
                        } else {
                            BigRational::new(1.into(), p)
                        }
                    })
                    .collect()
            }
            Family::KAlpha { alpha } => {
                let alpha = alpha.as_rational()?.clone();
                let mut out = Vec::with_capacity(len);
                let mut cur = BigRational::one();
                for n in 0..len {
                    out.push(cur.clone());
                    let n = rat(n as i64);
                    cur = cur * (&n + &alpha) / (n + BigRational::one());
                }
                out
            }
            Family::Custom { terms, tail, .. } => {
                let listed: Vec<BigRational> = terms
                    .iter()
                    .map(|x| x.as_rational().cloned())
                    .collect::<Option<_>>()?;
                let mut out = Vec::with_capacity(len);
                for n in 0..len {
                    let v = if n < listed.len() {
                        listed[n].clone()
                    } else {
                        let last = out.last().cloned().unwrap_or_else(BigRational::zero);
                        match tail {
                            Tail::Zero => BigRational::zero(),
                            Tail::RepeatLast => last,
                            Tail::Geometric { ratio } => last * ratio.as_rational()?.clone(),
                        }
                    };
                    out.push(v);
                }
                out
            }
            Family::Renewal { c, .. } => {
                let c: Vec<BigRational> = c
                    .iter()
                    .map(|x| x.as_rational().cloned())
                    .collect::<Option<_>>()?;
                renewal_exact(&c, n_max)
            }
        };
        Some(v)
    }

    /// `a_0, …, a_{n_max}` as doubles.
    pub fn float_terms(&self, n_max: usize) -> Vec<f64> {
        if let Some(v) = self.exact_terms_cheap(n_max) {
            return v;
        }
        let len = n_max + 1;
        match &self.family {
            Family::DruryArveson => vec![1.0; len],
            Family::Dirichlet => (0..len).map(|n| 1.0 / (n as f64 + 1.0)).collect(),
            Family::HWeighted { s } => {
                let s = s.to_f64();
                (0..len).map(|n| (n as f64 + 1.0).powf(s)).collect()
            }
            Family::KAlpha { alpha } => {
                let alpha = alpha.to_f64();
                let mut out = Vec::with_capacity(len);
                let mut cur = 1.0;
                for n in 0..len {
                    out.push(cur);
                    cur *= (n as f64 + alpha) / (n as f64 + 1.0);
                }
                out
            }
            Family::Custom { terms, tail, .. } => {
                let mut out: Vec<f64> = Vec::with_capacity(len);
                for n in 0..len {
                    let v = if n < terms.len() {
                        terms[n].to_f64()
                    } else {
                        let last = out.last().copied().unwrap_or(0.0);
                        match tail {
                            Tail::Zero => 0.0,
                            Tail::RepeatLast => last,
                            Tail::Geometric { ratio } => last * ratio.to_f64(),
                        }
                    };
                    out.push(v);
                }
                out
            }
            Family::Renewal { c, .. } => {
                let c: Vec<f64> = c.iter().map(Number::to_f64).collect();
                renewal_float(&c, n_max)
            }
        }
    }

    // Families whose exact terms would grow large denominators are still
    // evaluated in floats here; only the trivially exact ones short-circuit.
    fn exact_terms_cheap(&self, n_max: usize) -> Option<Vec<f64>> {
        match &self.family {
            Family::Custom { .. } | Family::Renewal { .. }
                if self.exactness() == Exactness::Rational =>
            {
                self.exact_terms(n_max)
                    .map(|v| v.iter().map(rational_to_f64).collect())
            }
            _ => None,
        }
    }

    pub fn term_f64(&self, n: usize) -> f64 {
        match &self.family {
            Family::DruryArveson => 1.0,
            Family::Dirichlet => 1.0 / (n as f64 + 1.0),
            Family::HWeighted { s } => (n as f64 + 1.0).powf(s.to_f64()),
            _ => self.float_terms(n)[n],
        }
    }

    /// A bound for `sup_{n > N} a_{n+1}/a_n` (in absolute value), used for
    /// tail estimates. `None` when no bound is derivable.
    pub fn ratio_bound(&self, truncation: usize) -> Option<f64> {
        match &self.family {
            Family::DruryArveson | Family::Dirichlet => Some(1.0),
            Family::HWeighted { s } => {
                let s = s.to_f64();
                if s <= 0.0 {
                    Some(1.0)
                } else {
                    let n = truncation as f64;
                    Some(((n + 3.0) / (n + 2.0)).powf(s))
                }
            }
            Family::KAlpha { alpha } => {
                let alpha = alpha.to_f64();
                if alpha <= 1.0 {
                    Some(1.0)
                } else {
                    let n = truncation as f64;
                    Some((n + 1.0 + alpha) / (n + 2.0))
                }
            }
            Family::Custom {
                terms,
                tail,
                ratio_cap,
            } => {
                let listed = terms.len();
                let a = self.float_terms(listed.max(truncation + 1));
                let mut bound: f64 = 0.0;
                for n in (truncation + 1)..listed {
                    let (num, den) = (a[n + 1].abs(), a[n].abs());
                    if den == 0.0 {
                        if num != 0.0 {
                            return None;
                        }
                    } else {
                        bound = bound.max(num / den);
                    }
                }
                let last = a[listed - 1];
                let tail_ratio = match tail {
                    Tail::Zero => 0.0,
                    Tail::RepeatLast if last == 0.0 => 0.0,
                    Tail::RepeatLast => 1.0,
                    Tail::Geometric { ratio } => ratio.to_f64().abs(),
                };
                bound = bound.max(tail_ratio);
                Some(ratio_cap.map_or(bound, |cap| bound.max(cap)))
            }
            Family::Renewal { ratio_cap, .. } => *ratio_cap,
        }
    }

    /// Closed-form leading-order growth of the presets.
    pub fn growth(&self) -> Option<Growth> {
        match &self.family {
            Family::DruryArveson => Some(Growth {
                exponent: 0.0,
                constant: 1.0,
            }),
            Family::Dirichlet => Some(Growth {
                exponent: -1.0,
                constant: 1.0,
            }),
            Family::HWeighted { s } => Some(Growth {
                exponent: s.to_f64(),
                constant: 1.0,
            }),
            Family::KAlpha { alpha } => {
                let alpha = alpha.to_f64();
                Some(Growth {
                    exponent: alpha - 1.0,
                    constant: 1.0 / libm::tgamma(alpha),
                })
            }
            Family::Custom {
                terms,
                tail: Tail::RepeatLast,
                ..
            } => {
                let last = terms.last()?.to_f64();
                (last > 0.0).then_some(Growth {
                    exponent: 0.0,
                    constant: last,
                })
            }
            _ => None,
        }
    }
}

/// `a_n = Σ_k c_k a_{n-k}` with `a_0 = 1`, exactly.
pub fn renewal_exact(c: &[BigRational], n_max: usize) -> Vec<BigRational> {
    let mut a = Vec::with_capacity(n_max + 1);
    a.push(BigRational::one());
    for n in 1..=n_max {
        let mut s = BigRational::zero();
        for (k, ck) in c.iter().enumerate().take(n) {
            if !ck.is_zero() {
                s += ck * &a[n - k - 1];
            }
        }
        a.push(s);
    }
    a
}

/// Float version of [`renewal_exact`].
pub fn renewal_float(c: &[f64], n_max: usize) -> Vec<f64> {
    let mut a = Vec::with_capacity(n_max + 1);
    a.push(1.0);
    for n in 1..=n_max {
        let s: f64 = c
            .iter()
            .enumerate()
            .take(n)
            .map(|(k, ck)| ck * a[n - k - 1])
            .sum();
        a.push(s);
    }
    a
}

/// The coefficients `b_1, …, b_N` of `1 - 1/Σ a_n t^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct NpCoefficients {
    /// `b[i]` holds `b_{i+1}`.
    pub b: Terms,
    pub source: CoefficientSequence,
    pub truncation: usize,
}

impl NpCoefficients {
    /// `b_n` for `1 ≤ n ≤ N`.
    pub fn get(&self, n: usize) -> Number {
        self.b.get(n - 1)
    }

    pub fn get_f64(&self, n: usize) -> f64 {
        self.b.get_f64(n - 1)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.b.to_f64()
    }
}

/// Runs `b_n = a_n - Σ_{k<n} b_k a_{n-k}`; exact for rational sequences.
pub fn np_coefficients(a: &CoefficientSequence, truncation: usize) -> NpCoefficients {
    let b = match a.terms(truncation) {
        Terms::Exact(a_terms) => {
            let mut b: Vec<BigRational> = Vec::with_capacity(truncation);
            for n in 1..=truncation {
                let mut v = a_terms[n].clone();
                for k in 1..n {
                    if !b[k - 1].is_zero() && !a_terms[n - k].is_zero() {
                        v -= &b[k - 1] * &a_terms[n - k];
                    }
                }
                b.push(v);
            }
            Terms::Exact(b)
        }
        Terms::Float(a_terms) => {
            let mut b: Vec<f64> = Vec::with_capacity(truncation);
            for n in 1..=truncation {
                let s: f64 = (1..n).map(|k| b[k - 1] * a_terms[n - k]).sum();
                b.push(a_terms[n] - s);
            }
            Terms::Float(b)
        }
    };
    NpCoefficients {
        b,
        source: a.clone(),
        truncation,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NpVerdict {
    /// No violation found up to the checked degree.
    CompleteNP,
    NotCompleteNP,
    UnknownAtTruncation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NpCertificate {
    pub verdict: NpVerdict,
    /// First index with `b_n < -tol`, and that `b_n`.
    pub witness: Option<(usize, Number)>,
    pub checked_degree: usize,
}

impl NpCertificate {
    pub fn to_report(&self, a: &CoefficientSequence) -> Report {
        let check = "certify_np";
        let mut r = match &self.witness {
            Some((n, b)) => Report::fail(check, format!("b_{n} = {b} is negative")),
            None => Report::pass(check),
        };
        r.insert("sequence", a.name());
        r.insert("verdict", self.verdict);
        r.insert("checked_degree", self.checked_degree);
        r.insert("semantics", "no violation up to checked_degree");
        if let Some((n, b)) = &self.witness {
            r.insert("witness_index", n);
            r.insert("witness_value", b);
        }
        r
    }
}

/// Certifies the complete Nevanlinna-Pick property through degree `N`.
///
/// Exact sequences compare `b_n < -tol` exactly; float sequences widen `tol`
/// to at least `FLOAT_TOL · max(1, |a_n|)`.
pub fn certify_np(a: &CoefficientSequence, truncation: usize, tol: f64) -> NpCertificate {
    let np = np_coefficients(a, truncation);
    let witness = match &np.b {
        Terms::Exact(b) => {
            let neg_tol = -parse_tol(tol);
            b.iter()
                .position(|x| *x < neg_tol)
                .map(|i| (i + 1, Number::Rational(b[i].clone())))
        }
        Terms::Float(b) => {
            let a_terms = a.float_terms(truncation);
            b.iter()
                .enumerate()
                .find(|(i, x)| **x < -tol.max(FLOAT_TOL * a_terms[i + 1].abs().max(1.0)))
                .map(|(i, x)| (i + 1, Number::Float(*x)))
        }
    };
    let verdict = if witness.is_some() {
        NpVerdict::NotCompleteNP
    } else {
        NpVerdict::CompleteNP
    };
    NpCertificate {
        verdict,
        witness,
        checked_degree: truncation,
    }
}

fn parse_tol(tol: f64) -> BigRational {
    BigRational::from_float(tol).unwrap_or_else(BigRational::zero)
}

enum Values {
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

fn values(a: &CoefficientSequence, n_max: usize) -> Values {
    match a.terms(n_max) {
        Terms::Exact(v) => Values::Exact(v),
        Terms::Float(v) => Values::Float(v),
    }
}

/// Necessary condition `a_n a_k ≤ a_{n+k}` for `n, k ≥ 1`, `n + k ≤ N`.
pub fn check_np_necessary(a: &CoefficientSequence, truncation: usize) -> Report {
    let check = "np_necessary";
    let pairs = (2..=truncation).flat_map(|s| (1..=s / 2).map(move |n| (n, s - n)));
    let violation = match values(a, truncation) {
        Values::Exact(v) => pairs
            .clone()
            .find(|&(n, k)| &v[n] * &v[k] > v[n + k])
            .map(|(n, k)| {
                (
                    n,
                    k,
                    format_rational(&(&v[n] * &v[k])),
                    format_rational(&v[n + k]),
                )
            }),
        Values::Float(v) => pairs
            .clone()
            .find(|&(n, k)| v[n] * v[k] > v[n + k] * (1.0 + FLOAT_TOL))
            .map(|(n, k)| (n, k, (v[n] * v[k]).to_string(), v[n + k].to_string())),
    };
    let r = match &violation {
        None => Report::pass(check),
        Some((n, k, lhs, rhs)) => {
            Report::fail(check, format!("a_{n} a_{k} = {lhs} > {rhs} = a_{}", n + k))
                .with("pair", [n, k])
                .with("product", lhs)
                .with("target", rhs)
        }
    };
    r.with("sequence", a.name()).with("truncation", truncation)
}

/// Log-convexity `a_n² ≤ a_{n-1} a_{n+1}` for `1 ≤ n ≤ N-1`.
pub fn check_log_convex(a: &CoefficientSequence, truncation: usize) -> Result<Report> {
    let check = "log_convex";
    let violation = match values(a, truncation) {
        Values::Exact(v) => {
            if let Some(n) = v.iter().position(|x| !x.is_positive()) {
                return Err(Error::ZeroWeight { degree: n });
            }
            (1..truncation)
                .find(|&n| &v[n] * &v[n] > &v[n - 1] * &v[n + 1])
                .map(|n| {
                    (
                        n,
                        format_rational(&(&v[n] * &v[n])),
                        format_rational(&(&v[n - 1] * &v[n + 1])),
                    )
                })
        }
        Values::Float(v) => {
            if let Some(n) = v.iter().position(|x| *x <= 0.0) {
                return Err(Error::ZeroWeight { degree: n });
            }
            (1..truncation)
                .find(|&n| v[n] * v[n] > v[n - 1] * v[n + 1] * (1.0 + FLOAT_TOL))
                .map(|n| {
                    (
                        n,
                        (v[n] * v[n]).to_string(),
                        (v[n - 1] * v[n + 1]).to_string(),
                    )
                })
        }
    };
    let r = match violation {
        None => Report::pass(check),
        Some((n, sq, prod)) => Report::fail(
            check,
            format!("a_{n}^2 = {sq} > {prod} = a_{} a_{}", n - 1, n + 1),
        )
        .with("index", n),
    };
    Ok(r.with("sequence", a.name()).with("truncation", truncation))
}

/// Ratio test `|a_n/a_{n+1} - 1| ≤ eps` on the window `[N/2, N]`.
///
/// Passing means "consistent with tameness at truncation"; failing never
/// asserts non-tameness.
pub fn check_tame(a: &CoefficientSequence, truncation: usize, eps: f64) -> Report {
    let check = "tame_ratio";
    let v = a.float_terms(truncation + 1);
    let start = truncation / 2;
    if let Some(n) = (start..=truncation + 1).find(|&n| v[n] <= 0.0) {
        return Report::unknown(
            check,
            format!("a_{n} is not positive; ratio test undefined"),
        );
    }
    let deviations: Vec<(usize, f64)> = (start..=truncation)
        .map(|n| (n, (v[n] / v[n + 1] - 1.0).abs()))
        .collect();
    let (worst_n, worst) =
        deviations
            .iter()
            .copied()
            .fold((start, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    let r = if worst <= eps {
        Report::pass(check).with("label", "consistent with tameness at truncation")
    } else {
        Report::fail(
            check,
            format!("|a_{worst_n}/a_{} - 1| = {worst} exceeds {eps}; tameness neither confirmed nor refuted", worst_n + 1),
        )
    };
    r.with("window", [start, truncation])
        .with("max_deviation", worst)
        .with("argmax", worst_n)
        .with("sequence", a.name())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Domain {
    OpenBall,
    ClosedBall,
    NotAlgebraicallyConsistent,
    Unknown,
}

/// Where the kernel series converges and whether the space is
/// algebraically consistent.
pub fn classify_domain(a: &CoefficientSequence, truncation: usize) -> Domain {
    match a.family() {
        Family::DruryArveson | Family::Dirichlet | Family::KAlpha { .. } => Domain::OpenBall,
        Family::HWeighted { s } => {
            if s.to_f64() >= -1.0 {
                // also s > 0: radius 1 and divergent partial sums
                Domain::OpenBall
            } else {
                Domain::ClosedBall
            }
        }
        Family::Custom { terms, tail, .. } => {
            let last = terms.last().map(Number::to_f64).unwrap_or(0.0);
            let tail_ratio = match tail {
                Tail::Zero => 0.0,
                Tail::RepeatLast => 1.0,
                Tail::Geometric { ratio } => ratio.to_f64().abs(),
            };
            if last == 0.0 || tail_ratio < 1.0 {
                // radius of convergence 1/tail_ratio > 1
                Domain::NotAlgebraicallyConsistent
            } else if tail_ratio == 1.0 {
                Domain::OpenBall
            } else {
                Domain::Unknown
            }
        }
        Family::Renewal { c, .. } => {
            // 1 - Σ c_k t^k has its smallest root at t = 1 exactly when Σ c = 1.
            let total: f64 = c.iter().map(Number::to_f64).sum();
            if (total - 1.0).abs() <= 1e-12 {
                Domain::OpenBall
            } else if total < 1.0 {
                Domain::NotAlgebraicallyConsistent
            } else {
                let _ = truncation;
                Domain::Unknown
            }
        }
    }
}

/// `⟨z, w⟩ = Σ z_i conj(w_i)`.
pub fn inner(z: &Point, w: &Point) -> C64 {
    z.iter().zip(w.iter()).map(|(x, y)| x * y.conj()).sum()
}

pub fn norm(z: &Point) -> f64 {
    z.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// A truncated kernel value with a bound on the omitted tail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue {
    pub value: C64,
    pub tail_bound: f64,
}

/// Anything that can be evaluated as a two-variable kernel.
pub trait Kernel {
    fn eval(&self, z: &Point, w: &Point) -> Result<C64>;
}

/// `Σ_{n ≤ N} a_n ⟨z, w⟩^n` with precomputed coefficients.
#[derive(Clone, Debug)]
pub struct SeriesKernel {
    terms: Vec<f64>,
    ratio_bound: Option<f64>,
    truncation: usize,
}

impl SeriesKernel {
    pub fn new(a: &CoefficientSequence, truncation: usize) -> Self {
        SeriesKernel {
            terms: a.float_terms(truncation + 1),
            ratio_bound: a.ratio_bound(truncation),
            truncation,
        }
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn eval_scalar(&self, x: C64) -> Result<KernelValue> {
        let r = x.norm();
        if r == 0.0 {
            return Ok(KernelValue {
                value: C64::new(1.0, 0.0),
                tail_bound: 0.0,
            });
        }
        let ratio = self.ratio_bound.ok_or(Error::MissingRatioCap)?;
        if r * ratio >= 1.0 {
            return Err(Error::TailUnbounded { r, ratio });
        }
        let n = self.truncation;
        let value = self.terms[..=n]
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * x + c);
        let tail_bound = self.terms[n + 1].abs() * r.powi(n as i32 + 1) / (1.0 - r * ratio);
        Ok(KernelValue { value, tail_bound })
    }

    pub fn eval_with_tail(&self, z: &Point, w: &Point) -> Result<KernelValue> {
        self.eval_scalar(inner(z, w))
    }
}

impl Kernel for SeriesKernel {
    fn eval(&self, z: &Point, w: &Point) -> Result<C64> {
        Ok(self.eval_with_tail(z, w)?.value)
    }
}

/// Truncated kernel value and a rigorous tail bound.
pub fn kernel_eval(
    a: &CoefficientSequence,
    z: &Point,
    w: &Point,
    truncation: usize,
) -> Result<KernelValue> {
    if z.len() != w.len() {
        return Err(Error::DimensionMismatch {
            expected: z.len(),
            found: w.len(),
        });
    }
    SeriesKernel::new(a, truncation).eval_with_tail(z, w)
}

/// The homogeneous piece `K_n(z, w) = a_n ⟨z, w⟩^n`.
pub fn kernel_component(a: &CoefficientSequence, n: usize, z: &Point, w: &Point) -> C64 {
    inner(z, w).powu(n as u32) * a.term_f64(n)
}

/// The Gram matrix `[K(z_i, z_j)]`, Hermitian by construction.
pub fn sample_gram(
    a: &CoefficientSequence,
    points: &[Point],
    truncation: usize,
) -> Result<CMatrix> {
    gram_matrix(&SeriesKernel::new(a, truncation), points)
}

/// `[K(z_i, z_j)]` for any kernel; the lower triangle mirrors the upper.
pub fn gram_matrix(kernel: &dyn Kernel, points: &[Point]) -> Result<CMatrix> {
    let m = points.len();
    let mut g = CMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = kernel.eval(&points[i], &points[j])?;
            if i == j {
                g[(i, i)] = C64::new(v.re, 0.0);
            } else {
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
        }
    }
    Ok(g)
}
