//! Automorphisms of the unit ball, the transformation rule of the kernels
//! `(1 - ⟨z, w⟩)^{-α}`, kernel normalization at a point, and the orbit of
//! `0` under a hyperbolic disc automorphism.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{random_ball_point, random_unitary, unitarity_residual};
use crate::report::Report;
use crate::series::{inner, norm, Kernel};
use crate::{CMatrix, Point, C64};

const POLE_TOL: f64 = 1e-14;

/// `z ↦ U φ_a(z)` where
/// `φ_a(z) = (a - P_a z - s_a Q_a z) / (1 - ⟨z, a⟩)`, `s_a = (1 - ‖a‖²)^{1/2}`.
///
/// `φ_a` is an involution exchanging `0` and `a`; in particular `φ_0 = -id`.
#[derive(Clone, Debug, PartialEq)]
pub struct BallAutomorphism {
    center: Point,
    unitary: CMatrix,
}

impl BallAutomorphism {
    pub fn new(center: Point, unitary: Option<CMatrix>) -> Result<Self> {
        let d = center.len();
        let r = norm(&center);
        if r >= 1.0 {
            return Err(Error::OutsideDomain { norm: r });
        }
        let unitary = unitary.unwrap_or_else(|| CMatrix::identity(d, d));
        if unitary.nrows() != d || unitary.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: unitary.nrows(),
            });
        }
        if unitarity_residual(&unitary) > 1e-12 {
            return Err(Error::InvalidInput(
                "automorphism factor is not unitary".into(),
            ));
        }
        Ok(BallAutomorphism { center, unitary })
    }

    /// The unitary map `z ↦ U z`, i.e. `U φ_0` composed with `-id`.
    pub fn rotation(unitary: CMatrix) -> Result<Self> {
        let d = unitary.nrows();
        Self::new(Point::zeros(d), Some(-unitary))
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    pub fn s(&self) -> f64 {
        (1.0 - norm(&self.center).powi(2)).sqrt()
    }

    /// `φ_a(z)` without the unitary factor.
    fn phi(&self, z: &Point) -> Result<Point> {
        let a = &self.center;
        let za = inner(z, a);
        let denom = C64::new(1.0, 0.0) - za;
        if denom.norm() <= POLE_TOL {
            return Err(Error::PoleAtPoint);
        }
        let aa = inner(a, a).re;
        let pz = if aa == 0.0 {
            Point::zeros(z.len())
        } else {
            a * (za / aa)
        };
        let qz = z - &pz;
        Ok((a - pz - qz * C64::new(self.s(), 0.0)) / denom)
    }

    pub fn apply(&self, z: &Point) -> Result<Point> {
        if z.len() != self.center.len() {
            return Err(Error::DimensionMismatch {
                expected: self.center.len(),
                found: z.len(),
            });
        }
        Ok(&self.unitary * self.phi(z)?)
    }

    /// `φ^{-1}(z) = φ_a(U^* z)`.
    pub fn apply_inverse(&self, z: &Point) -> Result<Point> {
        self.phi(&(self.unitary.adjoint() * z))
    }
}

/// `(1 - ⟨z, w⟩)^{-α}` on the principal branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerKernel {
    pub alpha: f64,
}

impl PowerKernel {
    pub fn value(&self, x: C64) -> C64 {
        (C64::new(1.0, 0.0) - x).powf(-self.alpha)
    }
}

impl Kernel for PowerKernel {
    fn eval(&self, z: &Point, w: &Point) -> Result<C64> {
        Ok(self.value(inner(z, w)))
    }
}

/// `K(z, w) K(x0, x0) / (K(z, x0) K(x0, w))`.
pub struct NormalizedKernel<'k> {
    kernel: &'k dyn Kernel,
    x0: Point,
    k00: C64,
}

impl Kernel for NormalizedKernel<'_> {
    fn eval(&self, z: &Point, w: &Point) -> Result<C64> {
        let kz0 = self.kernel.eval(z, &self.x0)?;
        let k0w = self.kernel.eval(&self.x0, w)?;
        if kz0.norm() <= POLE_TOL || k0w.norm() <= POLE_TOL {
            return Err(Error::KernelZero);
        }
        Ok(self.kernel.eval(z, w)? * self.k00 / (kz0 * k0w))
    }
}

pub fn normalize_kernel_at<'k>(kernel: &'k dyn Kernel, x0: &Point) -> Result<NormalizedKernel<'k>> {
    let k00 = kernel.eval(x0, x0)?;
    if k00.norm() <= POLE_TOL {
        return Err(Error::KernelZero);
    }
    Ok(NormalizedKernel {
        kernel,
        x0: x0.clone(),
        k00,
    })
}

/// Relative residual of `K(φz, φw) = K(z,w) K(a,a) / (K(z,a) K(a,w))` for
/// `K = (1 - ⟨z, w⟩)^{-α}` and `a = φ^{-1}(0)`.
pub fn kauto_residual(alpha: f64, phi: &BallAutomorphism, z: &Point, w: &Point) -> Result<f64> {
    let k = PowerKernel { alpha };
    let a = phi.apply_inverse(&Point::zeros(z.len()))?;
    let lhs = k.eval(&phi.apply(z)?, &phi.apply(w)?)?;
    let rhs = k.eval(z, w)? * k.eval(&a, &a)? / (k.eval(z, &a)? * k.eval(&a, w)?);
    Ok((lhs - rhs).norm() / rhs.norm())
}

pub fn check_kauto_identity(
    alpha: f64,
    phi: &BallAutomorphism,
    z: &Point,
    w: &Point,
) -> Result<Report> {
    let residual = kauto_residual(alpha, phi, z, w)?;
    Ok(Report::verdict(
        "kauto_identity",
        residual <= 1e-10,
        format!("relative residual {residual}"),
    )
    .with("alpha", alpha)
    .with("residual", residual))
}

/// Worst involution and transformation-rule residuals over seeded triples
/// `(a, z, w)` drawn from `radius · B_d`.
pub fn check_mobius_samples(
    alpha: f64,
    dim: usize,
    count: usize,
    radius: f64,
    seed: u64,
) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut involution: f64 = 0.0;
    let mut kauto: f64 = 0.0;
    let mut in_ball = true;
    for _ in 0..count {
        let a = random_ball_point(&mut rng, dim, radius);
        let z = random_ball_point(&mut rng, dim, radius);
        let w = random_ball_point(&mut rng, dim, radius);
        let u = random_unitary(&mut rng, dim);
        let plain = BallAutomorphism::new(a.clone(), None)?;
        let back = plain.apply(&plain.apply(&z)?)?;
        involution = involution.max((back - &z).norm());
        let phi = BallAutomorphism::new(a, Some(u))?;
        let image = phi.apply(&z)?;
        in_ball &= norm(&image) < 1.0;
        kauto = kauto.max(kauto_residual(alpha, &phi, &z, &w)?);
    }
    let ok = involution <= 1e-10 && kauto <= 1e-10 && in_ball;
    Ok(Report::verdict(
        "mobius_identities",
        ok,
        format!("involution residual {involution}, transformation residual {kauto}"),
    )
    .with("alpha", alpha)
    .with("dim", dim)
    .with("samples", count)
    .with("radius", radius)
    .with("involution_residual", involution)
    .with("kauto_residual", kauto))
}

/// `0, f(0), f²(0), …` for `f(z) = (r + z) / (1 + r z)`.
pub fn hyperbolic_orbit(r: f64, steps: usize) -> Result<Vec<f64>> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidInput(format!(
            "orbit parameter {r} outside (0, 1)"
        )));
    }
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = 0.0;
    out.push(x);
    for _ in 0..steps {
        x = (r + x) / (1.0 + r * x);
        out.push(x);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::psd_certificate;
    use crate::pick::{is_feasible, pick_matrix_for, PickProblem};
    use crate::series::{CoefficientSequence, SeriesKernel};
    use rand::Rng;

    fn pt(v: &[(f64, f64)]) -> Point {
        Point::from_iterator(v.len(), v.iter().map(|&(re, im)| C64::new(re, im)))
    }

    #[test]
    fn interchange_and_origin() {
        let a = pt(&[(0.3, 0.1), (-0.2, 0.4), (0.0, 0.1)]);
        let phi = BallAutomorphism::new(a.clone(), None).unwrap();
        assert!((phi.apply(&Point::zeros(3)).unwrap() - &a).norm() < 1e-15);
        assert!(phi.apply(&a).unwrap().norm() < 1e-15);
        let zero = BallAutomorphism::new(Point::zeros(2), None).unwrap();
        let z = pt(&[(0.2, 0.3), (0.1, -0.5)]);
        assert_eq!(zero.apply(&z).unwrap(), -z.clone());
        let id = BallAutomorphism::rotation(CMatrix::identity(2, 2)).unwrap();
        assert_eq!(id.apply(&z).unwrap(), z);
    }

    #[test]
    fn pole() {
        let phi = BallAutomorphism::new(pt(&[(0.5, 0.0)]), None).unwrap();
        assert_eq!(phi.apply(&pt(&[(2.0, 0.0)])), Err(Error::PoleAtPoint));
        assert!(BallAutomorphism::new(pt(&[(1.0, 0.0)]), None).is_err());
    }

    #[test]
    fn rudin_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let a = random_ball_point(&mut rng, 2, 0.9);
            let z = random_ball_point(&mut rng, 2, 0.9);
            let w = random_ball_point(&mut rng, 2, 0.9);
            let phi = BallAutomorphism::new(a.clone(), None).unwrap();
            let lhs = C64::new(1.0, 0.0) - inner(&phi.apply(&z).unwrap(), &phi.apply(&w).unwrap());
            let one = C64::new(1.0, 0.0);
            let rhs = (one - inner(&a, &a)) * (one - inner(&z, &w))
                / ((one - inner(&z, &a)) * (one - inner(&a, &w)));
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn kauto() {
        let u = random_unitary(&mut ChaCha8Rng::seed_from_u64(1), 2);
        let rot = BallAutomorphism::rotation(u).unwrap();
        let z = pt(&[(0.2, 0.3), (0.1, -0.5)]);
        let w = pt(&[(-0.4, 0.1), (0.3, 0.2)]);
        assert!(kauto_residual(0.5, &rot, &z, &w).unwrap() < 1e-14);
        for alpha in [0.5, 1.0] {
            let r = check_mobius_samples(alpha, 3, 100, 0.9, 7).unwrap();
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn normalization() {
        let a = CoefficientSequence::dirichlet();
        let k = SeriesKernel::new(&a, 128);
        let z = pt(&[(0.2, 0.1)]);
        let n0 = normalize_kernel_at(&k, &Point::zeros(1)).unwrap();
        assert_eq!(n0.eval(&z, &z).unwrap(), k.eval(&z, &z).unwrap());
        let x0 = pt(&[(0.4, -0.2)]);
        let nk = normalize_kernel_at(&k, &x0).unwrap();
        assert_eq!(nk.eval(&x0, &x0).unwrap(), C64::new(1.0, 0.0));
        assert!((nk.eval(&z, &x0).unwrap() - 1.0).norm() < 1e-14);
        let twice = normalize_kernel_at(&nk, &x0).unwrap();
        let w = pt(&[(-0.3, 0.3)]);
        assert!((twice.eval(&z, &w).unwrap() - nk.eval(&z, &w).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn rescaled_pick_feasibility_agrees() {
        let a = CoefficientSequence::drury_arveson();
        let k = SeriesKernel::new(&a, 256);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let nodes: Vec<Point> = (0..3)
                .map(|_| random_ball_point(&mut rng, 2, 0.7))
                .collect();
            let targets: Vec<C64> = (0..3)
                .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 1.2)
                .collect();
            let x0 = random_ball_point(&mut rng, 2, 0.5);
            let problem = PickProblem::new(a.clone(), nodes.clone(), targets.clone()).unwrap();
            let plain = is_feasible(&problem, 256).unwrap().is_psd();
            let nk = normalize_kernel_at(&k, &x0).unwrap();
            let rescaled =
                psd_certificate(&pick_matrix_for(&nk, &nodes, &targets).unwrap()).is_psd();
            assert_eq!(plain, rescaled);
        }
    }

    #[test]
    fn orbit() {
        let o = hyperbolic_orbit(0.5, 20).unwrap();
        assert_eq!(&o[..3], &[0.0, 0.5, 0.8]);
        assert!(o.windows(2).all(|p| p[1] > p[0]));
        assert!(1.0 - o[20] <= 1e-6);
        assert!(hyperbolic_orbit(1.0, 3).is_err());
    }
}
