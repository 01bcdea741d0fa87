//! Pick matrices, interpolation feasibility and the extremal multiplier
//! `φ_w` of a normalized complete Nevanlinna-Pick kernel.

use crate::error::{Error, Result};
use crate::linalg::{psd_certificate, PsdCertificate};
use crate::series::{CoefficientSequence, Kernel, SeriesKernel};
use crate::{CMatrix, Point, C64};

/// Interpolate `λ_i` at nodes `z_i` by a contractive multiplier.
#[derive(Clone, Debug, PartialEq)]
pub struct PickProblem {
    pub kernel: CoefficientSequence,
    pub dim: usize,
    pub nodes: Vec<Point>,
    pub targets: Vec<C64>,
}

impl PickProblem {
    pub fn new(kernel: CoefficientSequence, nodes: Vec<Point>, targets: Vec<C64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != targets.len() {
            return Err(Error::InvalidInput(format!(
                "need matching non-empty nodes and targets, got {} and {}",
                nodes.len(),
                targets.len()
            )));
        }
        let dim = nodes[0].len();
        if let Some(p) = nodes.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        Ok(PickProblem {
            kernel,
            dim,
            nodes,
            targets,
        })
    }

    pub fn with_targets(&self, targets: Vec<C64>) -> Self {
        PickProblem {
            targets,
            ..self.clone()
        }
    }
}

/// `[(1 - λ_i conj(λ_j)) K(z_i, z_j)]` for an arbitrary kernel.
pub fn pick_matrix_for(kernel: &dyn Kernel, nodes: &[Point], targets: &[C64]) -> Result<CMatrix> {
    let m = nodes.len();
    let mut p = CMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let k = kernel.eval(&nodes[i], &nodes[j])?;
            let v = (C64::new(1.0, 0.0) - targets[i] * targets[j].conj()) * k;
            if i == j {
                p[(i, i)] = C64::new(v.re, 0.0);
            } else {
                p[(i, j)] = v;
                p[(j, i)] = v.conj();
            }
        }
    }
    Ok(p)
}

pub fn pick_matrix(problem: &PickProblem, truncation: usize) -> Result<CMatrix> {
    let kernel = SeriesKernel::new(&problem.kernel, truncation);
    pick_matrix_for(&kernel, &problem.nodes, &problem.targets)
}

/// PSD verdict of the Pick matrix. For a complete Nevanlinna-Pick kernel
/// this decides whether a contractive interpolant exists; only the matrix
/// condition is certified.
pub fn is_feasible(problem: &PickProblem, truncation: usize) -> Result<PsdCertificate> {
    Ok(psd_certificate(&pick_matrix(problem, truncation)?))
}

/// `(1 - 1/K(w, w))^{1/2}`, the largest `Re φ(w)` over contractive
/// multipliers vanishing at the origin.
pub fn extremal_value(w: &Point, a: &CoefficientSequence, truncation: usize) -> Result<f64> {
    let kernel = SeriesKernel::new(a, truncation);
    let kww = kernel.eval(w, w)?.re;
    if kww < 1.0 {
        return Err(Error::InvalidInput(format!("K(w,w) = {kww} < 1")));
    }
    Ok((1.0 - 1.0 / kww).sqrt())
}

/// `φ_w(z) = (1 - 1/K(z, w)) / (1 - 1/K(w, w))^{1/2}`.
pub fn extremal_multiplier_eval(
    w: &Point,
    z: &Point,
    a: &CoefficientSequence,
    truncation: usize,
) -> Result<C64> {
    let kernel = SeriesKernel::new(a, truncation);
    let kzw = kernel.eval(z, w)?;
    if kzw.norm() <= 1e-14 {
        return Err(Error::KernelZero);
    }
    let kww = kernel.eval(w, w)?.re;
    let denom = (1.0 - 1.0 / kww).sqrt();
    if denom == 0.0 {
        return Err(Error::InvalidInput(
            "extremal multiplier needs w different from the origin".into(),
        ));
    }
    Ok((C64::new(1.0, 0.0) - kzw.inv()) / denom)
}

/// Finds the real target `λ ∈ [lo, hi]` at which the predicate flips from
/// true to false, to within `tol`.
pub fn bisect_flip(
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    mut feasible: impl FnMut(f64) -> Result<bool>,
) -> Result<f64> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::min_eigenvalue;

    fn pt(x: f64) -> Point {
        Point::from_vec(vec![C64::new(x, 0.0)])
    }

    fn hardy_two_point(w: f64, lambda: f64) -> PickProblem {
        PickProblem::new(
            CoefficientSequence::drury_arveson(),
            vec![pt(0.0), pt(w)],
            vec![C64::new(0.0, 0.0), C64::new(lambda, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn origin_only() {
        let p = PickProblem::new(
            CoefficientSequence::dirichlet(),
            vec![pt(0.0)],
            vec![C64::new(0.0, 0.0)],
        )
        .unwrap();
        let m = pick_matrix(&p, 16).unwrap();
        assert_eq!(m[(0, 0)], C64::new(1.0, 0.0));
    }

    #[test]
    fn hardy_two_point_matrix() {
        let lambda = 0.3;
        let m = pick_matrix(&hardy_two_point(0.5, lambda), 128).unwrap();
        let expected = [1.0, 1.0, 1.0, 4.0 / 3.0 * (1.0 - lambda * lambda)];
        for (got, want) in m.iter().zip(expected) {
            assert!((got - C64::new(want, 0.0)).norm() < 1e-14);
        }
        assert_eq!(m, m.adjoint());
    }

    #[test]
    fn schwarz_boundary() {
        assert!(is_feasible(&hardy_two_point(0.5, 0.4), 128)
            .unwrap()
            .is_psd());
        assert!(!is_feasible(&hardy_two_point(0.5, 0.6), 128)
            .unwrap()
            .is_psd());
        let big = PickProblem::new(
            CoefficientSequence::drury_arveson(),
            vec![pt(0.2)],
            vec![C64::new(5.0, 0.0)],
        )
        .unwrap();
        assert!(!is_feasible(&big, 64).unwrap().is_psd());
    }

    #[test]
    fn extremal_values() {
        let da = CoefficientSequence::drury_arveson();
        assert_eq!(extremal_value(&pt(0.0), &da, 64).unwrap(), 0.0);
        assert!((extremal_value(&pt(0.5), &da, 128).unwrap() - 0.5).abs() < 1e-14);
        // Frozen from the closed form K(1/2, 1/2) = -4 log(3/4).
        let dir = extremal_value(&pt(0.5), &CoefficientSequence::dirichlet(), 128).unwrap();
        assert!((dir - 0.361_918_672_914_852_8).abs() < 1e-14);
    }

    #[test]
    fn dirichlet_extremal_matches_bisection() {
        let dir = CoefficientSequence::dirichlet();
        let w = pt(0.5);
        let base = PickProblem::new(
            dir.clone(),
            vec![pt(0.0), w.clone()],
            vec![C64::new(0.0, 0.0); 2],
        )
        .unwrap();
        let flip = bisect_flip(0.0, 1.0, 1e-12, |l| {
            let m = pick_matrix(
                &base.with_targets(vec![C64::new(0.0, 0.0), C64::new(l, 0.0)]),
                128,
            )?;
            Ok(min_eigenvalue(&m) >= 0.0)
        })
        .unwrap();
        assert!((flip - extremal_value(&w, &dir, 128).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn extremal_multiplier() {
        let da = CoefficientSequence::drury_arveson();
        let w = pt(0.5);
        assert_eq!(
            extremal_multiplier_eval(&w, &pt(0.0), &da, 64).unwrap(),
            C64::new(0.0, 0.0)
        );
        let at_w = extremal_multiplier_eval(&w, &w, &da, 128).unwrap();
        assert!((at_w.re - extremal_value(&w, &da, 128).unwrap()).abs() < 1e-14);
        assert!(extremal_multiplier_eval(&pt(0.0), &w, &da, 64).is_err());
    }
}
