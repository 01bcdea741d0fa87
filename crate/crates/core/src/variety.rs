//! Homogeneous ideals, unions of subspaces, and the per-degree splitting
//! `H_n = I_n ⊕ (H ⊖ I)_n` under the weighted inner product.
//!
//! Degree-`n` vectors are represented in normalized coordinates, i.e. with
//! respect to the orthonormal monomial basis `z^α / ‖z^α‖`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{orthonormal_span, random_unit_vector, split_span, RANK_TOL};
use crate::poly::{monomial_count, monomials, HomogeneousPolynomial, Weights};
use crate::series::CoefficientSequence;
use crate::{CMatrix, Point, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousIdeal {
    dim: usize,
    generators: Vec<HomogeneousPolynomial>,
    /// Supplied by the caller; radicality is never verified.
    pub asserted_radical: bool,
}

impl HomogeneousIdeal {
    pub fn new(
        dim: usize,
        generators: Vec<HomogeneousPolynomial>,
        asserted_radical: bool,
    ) -> Result<Self> {
        for g in &generators {
            if g.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: g.dim(),
                });
            }
            if g.degree() == 0 && !g.is_zero() {
                return Err(Error::InvalidInput(
                    "ideal contains a non-zero constant and is not proper".into(),
                ));
            }
        }
        let generators = generators.into_iter().filter(|g| !g.is_zero()).collect();
        Ok(HomogeneousIdeal {
            dim,
            generators,
            asserted_radical,
        })
    }

    /// The zero ideal.
    pub fn zero(dim: usize) -> Self {
        HomogeneousIdeal {
            dim,
            generators: Vec::new(),
            asserted_radical: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[HomogeneousPolynomial] {
        &self.generators
    }

    /// Coefficient vectors of `z^β g` for every generator `g` with
    /// `deg g ≤ n` and `|β| = n - deg g`, as columns.
    fn spanning_coeffs(&self, n: usize) -> CMatrix {
        let rows = monomial_count(self.dim, n);
        let mut cols: Vec<Vec<C64>> = Vec::new();
        for g in self.generators.iter().filter(|g| g.degree() <= n) {
            for beta in monomials(self.dim, n - g.degree()) {
                let shifted = HomogeneousPolynomial::monomial(beta, C64::new(1.0, 0.0))
                    .multiply(g)
                    .expect("dimensions agree");
                cols.push(shifted.coeffs().to_vec());
            }
        }
        CMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
    }
}

/// `I_n` as polynomials orthonormal for the plain coefficient inner product.
pub fn ideal_component(ideal: &HomogeneousIdeal, n: usize) -> Vec<HomogeneousPolynomial> {
    let basis = orthonormal_span(&ideal.spanning_coeffs(n));
    basis
        .column_iter()
        .map(|c| {
            HomogeneousPolynomial::from_coeffs(ideal.dim, n, c.iter().copied().collect())
                .expect("sized")
        })
        .collect()
}

/// A union of linear subspaces, each stored as an orthonormal column frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceUnion {
    dim: usize,
    pieces: Vec<CMatrix>,
}

impl SubspaceUnion {
    /// Orthonormalizes each frame and drops pieces contained in another.
    pub fn new(dim: usize, frames: Vec<CMatrix>) -> Result<Self> {
        let mut pieces: Vec<CMatrix> = Vec::new();
        for f in frames {
            if f.nrows() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: f.nrows(),
                });
            }
            let q = orthonormal_span(&f);
            if q.ncols() == 0 {
                return Err(Error::InvalidInput("subspace piece is zero".into()));
            }
            pieces.push(q);
        }
        let contained = |small: &CMatrix, big: &CMatrix| {
            small.ncols() <= big.ncols() && (small - big * (big.adjoint() * small)).norm() <= 1e-10
        };
        let mut keep = vec![true; pieces.len()];
        for i in 0..pieces.len() {
            for j in 0..pieces.len() {
                if i != j && keep[j] && contained(&pieces[i], &pieces[j]) {
                    // Equal pieces: keep the first occurrence.
                    if pieces[i].ncols() < pieces[j].ncols() || j < i {
                        keep[i] = false;
                        break;
                    }
                }
            }
        }
        let pieces = pieces
            .into_iter()
            .zip(keep)
            .filter_map(|(p, k)| k.then_some(p))
            .collect();
        Ok(SubspaceUnion { dim, pieces })
    }

    /// Union of the lines spanned by the given vectors.
    pub fn lines(dim: usize, directions: &[Point]) -> Result<Self> {
        let frames = directions
            .iter()
            .map(|v| CMatrix::from_column_slice(v.len(), 1, v.as_slice()))
            .collect();
        Self::new(dim, frames)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pieces(&self) -> &[CMatrix] {
        &self.pieces
    }

    pub fn piece_dims(&self) -> Vec<usize> {
        self.pieces.iter().map(|p| p.ncols()).collect()
    }

    pub fn is_lines(&self) -> bool {
        self.pieces.iter().all(|p| p.ncols() == 1)
    }

    /// Unit direction of piece `i` when it is a line.
    pub fn direction(&self, i: usize) -> Point {
        Point::from_iterator(self.dim, self.pieces[i].column(0).iter().copied())
    }

    /// Distance from `z` to the nearest piece.
    pub fn distance(&self, z: &Point) -> f64 {
        self.pieces
            .iter()
            .map(|f| (z - f * (f.adjoint() * z)).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Image of every frame under `a`.
    pub fn map(&self, a: &CMatrix) -> Result<Self> {
        Self::new(self.dim, self.pieces.iter().map(|f| a * f).collect())
    }

    /// Deterministic sample points on the pieces, scaled to `radius`.
    pub fn sample_points(&self, per_piece: usize, radius: f64, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for f in &self.pieces {
            for _ in 0..per_piece {
                let c = random_unit_vector(&mut rng, f.ncols());
                out.push(f * c * C64::new(radius, 0.0));
            }
        }
        out
    }
}

/// Orthonormal bases of `I_n` and `(H ⊖ I)_n` in normalized coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedComponentBasis {
    pub dim: usize,
    pub degree: usize,
    pub basis_ideal: CMatrix,
    pub basis_perp: CMatrix,
}

impl GradedComponentBasis {
    pub fn full(dim: usize, degree: usize) -> Self {
        let n = monomial_count(dim, degree);
        GradedComponentBasis {
            dim,
            degree,
            basis_ideal: CMatrix::zeros(n, 0),
            basis_perp: CMatrix::identity(n, n),
        }
    }

    /// The perp basis converted back to polynomials.
    pub fn perp_polynomials(&self, weights: &Weights) -> Result<Vec<HomogeneousPolynomial>> {
        self.basis_perp
            .column_iter()
            .map(|c| {
                let y: Vec<C64> = c.iter().copied().collect();
                HomogeneousPolynomial::from_normalized_coords(self.dim, self.degree, &y, weights)
            })
            .collect()
    }

    /// Orthogonal projector onto `(H ⊖ I)_n`.
    pub fn perp_projector(&self) -> CMatrix {
        &self.basis_perp * self.basis_perp.adjoint()
    }
}

/// Either description of a homogeneous variety.
#[derive(Clone, Debug, PartialEq)]
pub enum Variety {
    Ideal(HomogeneousIdeal),
    Union(SubspaceUnion),
}

impl Variety {
    pub fn dim(&self) -> usize {
        match self {
            Variety::Ideal(i) => i.dim(),
            Variety::Union(u) => u.dim(),
        }
    }

    /// Splitting of the degree-`n` component.
    ///
    /// For a union of subspaces the perp part is the span of the kernel
    /// slices `⟨·, w⟩^n` over points `w` of the pieces, i.e. the complement
    /// of the degree-`n` part of the vanishing ideal.
    pub fn component(&self, n: usize, weights: &Weights) -> Result<GradedComponentBasis> {
        match self {
            Variety::Ideal(ideal) => graded_component(ideal, n, weights),
            Variety::Union(union) => {
                let size = monomial_count(union.dim, n);
                let norms = weights.norms(union.dim, n)?;
                let per_piece = union
                    .pieces
                    .iter()
                    .map(|p| monomial_count(p.ncols(), n))
                    .max()
                    .unwrap_or(1)
                    + 2;
                let points = union.sample_points(per_piece, 1.0, 0x5eed + n as u64);
                let slices = CMatrix::from_fn(size, points.len(), |_, _| C64::new(0.0, 0.0));
                let mut slices = slices;
                for (j, w) in points.iter().enumerate() {
                    let p = crate::poly::kernel_slice(w, n);
                    for (i, c) in p.coeffs().iter().enumerate() {
                        slices[(i, j)] = c * norms[i];
                    }
                }
                let (perp, ideal) = split_span(&slices, size);
                Ok(GradedComponentBasis {
                    dim: union.dim,
                    degree: n,
                    basis_ideal: ideal,
                    basis_perp: perp,
                })
            }
        }
    }
}

/// Splitting of degree `n` for an ideal given by generators.
pub fn graded_component(
    ideal: &HomogeneousIdeal,
    n: usize,
    weights: &Weights,
) -> Result<GradedComponentBasis> {
    let size = monomial_count(ideal.dim, n);
    let norms = weights.norms(ideal.dim, n)?;
    let mut span = ideal.spanning_coeffs(n);
    for (i, mut row) in span.row_iter_mut().enumerate() {
        row *= C64::new(norms[i], 0.0);
    }
    let (basis_ideal, basis_perp) = split_span(&span, size);
    Ok(GradedComponentBasis {
        dim: ideal.dim,
        degree: n,
        basis_ideal,
        basis_perp,
    })
}

/// Orthonormal basis of `(H ⊖ I)_n` for the weights of `a`.
pub fn perp_component(
    ideal: &HomogeneousIdeal,
    n: usize,
    a: &CoefficientSequence,
) -> Result<GradedComponentBasis> {
    graded_component(ideal, n, &Weights::new(a, n))
}

/// `|g(z)| ≤ tol (1 + ‖z‖^{deg g})` for every generator.
pub fn point_on_variety(ideal: &HomogeneousIdeal, z: &Point, tol: f64) -> bool {
    let r = z.norm();
    ideal
        .generators
        .iter()
        .all(|g| g.eval(z).norm() <= tol * (1.0 + r.powi(g.degree() as i32)))
}

/// Products `ℓ_1 ⋯ ℓ_r` of linear forms, one vanishing on each line.
///
/// In two variables (or for a single line) the result is the vanishing ideal
/// of the union and is flagged radical; otherwise it only has the right zero
/// set.
pub fn lines_to_ideal(union: &SubspaceUnion) -> Result<HomogeneousIdeal> {
    let d = union.dim;
    if let Some((index, f)) = union
        .pieces
        .iter()
        .enumerate()
        .find(|(_, f)| f.ncols() != 1)
    {
        return Err(Error::PieceDimension {
            index,
            dim: f.ncols(),
        });
    }
    let forms: Vec<Vec<HomogeneousPolynomial>> = union
        .pieces
        .iter()
        .map(|f| {
            let (_, complement) = split_span(f, d);
            complement
                .column_iter()
                .map(|v| {
                    let c: Vec<C64> = v.iter().map(|x| snap(x.conj())).collect();
                    HomogeneousPolynomial::linear_form(&c)
                })
                .collect()
        })
        .collect();
    let mut products = vec![HomogeneousPolynomial::one(d)];
    for choices in &forms {
        let mut next = Vec::with_capacity(products.len() * choices.len());
        for p in &products {
            for l in choices {
                next.push(p.multiply(l)?);
            }
        }
        products = next;
    }
    let radical = d <= 2 || union.pieces.len() <= 1;
    HomogeneousIdeal::new(d, products, radical)
}

fn snap(x: C64) -> C64 {
    let clean = |v: f64| if v.abs() < RANK_TOL * 1e-4 { 0.0 } else { v };
    C64::new(clean(x.re), clean(x.im))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::poly::{kernel_slice, MultiIndex};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn z1z2() -> HomogeneousIdeal {
        let g = HomogeneousPolynomial::monomial(MultiIndex(vec![1, 1]), c(1.0));
        HomogeneousIdeal::new(2, vec![g], true).unwrap()
    }

    fn pt(v: &[f64]) -> Point {
        Point::from_iterator(v.len(), v.iter().map(|&x| c(x)))
    }

    #[test]
    fn ideal_components() {
        let i = z1z2();
        let deg2 = ideal_component(&i, 2);
        assert_eq!(deg2.len(), 1);
        assert!((deg2[0].coeff(&MultiIndex(vec![1, 1])).norm() - 1.0).abs() < 1e-12);
        assert_eq!(ideal_component(&i, 3).len(), 2);
        assert!(ideal_component(&i, 1).is_empty());
        let z1 =
            HomogeneousIdeal::new(2, vec![HomogeneousPolynomial::variable(2, 0)], true).unwrap();
        for n in 0..8 {
            // monomials containing z_1: n of the n+1
            assert_eq!(ideal_component(&z1, n).len(), n);
        }
    }

    #[test]
    fn perp_components() {
        let da = CoefficientSequence::drury_arveson();
        let b = perp_component(&z1z2(), 2, &da).unwrap();
        assert_eq!(b.basis_perp.ncols(), 2);
        // spans {z1^2, z2^2}: the z1z2 coordinate vanishes
        assert!(b.basis_perp.row(1).iter().all(|x| x.norm() < 1e-12));
        let zero = HomogeneousIdeal::zero(3);
        let b = perp_component(&zero, 3, &da).unwrap();
        assert_eq!(b.basis_perp.ncols(), monomial_count(3, 3));
        assert_eq!(b.basis_ideal.ncols(), 0);
    }

    #[test]
    fn kernel_slices_on_variety_are_perp() {
        let da = CoefficientSequence::dirichlet();
        for n in 1..6 {
            let w = Weights::new(&da, n);
            let comp = graded_component(&z1z2(), n, &w).unwrap();
            for t in [0.3, -0.7, 0.55] {
                for axis in [pt(&[t, 0.0]), pt(&[0.0, t])] {
                    let y = kernel_slice(&axis, n).normalized_coords(&w).unwrap();
                    let y = crate::CMatrix::from_column_slice(y.len(), 1, &y);
                    assert!(max_abs(&(comp.basis_ideal.adjoint() * y)) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn membership() {
        let i = z1z2();
        assert!(point_on_variety(&i, &pt(&[0.5, 0.0]), 1e-12));
        assert!(!point_on_variety(&i, &pt(&[0.3, 0.3]), 1e-12));
        assert!(point_on_variety(&i, &pt(&[0.0, 0.0]), 0.0));
    }

    #[test]
    fn lines_become_ideals() {
        let one = SubspaceUnion::lines(2, &[pt(&[1.0, 0.0])]).unwrap();
        let i = lines_to_ideal(&one).unwrap();
        assert_eq!(i.generators().len(), 1);
        let g = &i.generators()[0];
        assert_eq!(g.degree(), 1);
        assert!(g.coeff(&MultiIndex(vec![1, 0])).norm() < 1e-15);
        assert!((g.coeff(&MultiIndex(vec![0, 1])).norm() - 1.0).abs() < 1e-12);

        let axes = SubspaceUnion::lines(2, &[pt(&[1.0, 0.0]), pt(&[0.0, 1.0])]).unwrap();
        let g = lines_to_ideal(&axes).unwrap().generators()[0].clone();
        assert!(g.coeff(&MultiIndex(vec![2, 0])).norm() < 1e-15);
        assert!(g.coeff(&MultiIndex(vec![0, 2])).norm() < 1e-15);
        assert!((g.coeff(&MultiIndex(vec![1, 1])).norm() - 1.0).abs() < 1e-12);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let tilted = SubspaceUnion::lines(2, &[pt(&[1.0, 0.0]), pt(&[s, s])]).unwrap();
        let i = lines_to_ideal(&tilted).unwrap();
        // proportional to z2 (z1 - z2) = z1 z2 - z2^2
        let g = &i.generators()[0];
        let ratio = g.coeff(&MultiIndex(vec![0, 2])) / g.coeff(&MultiIndex(vec![1, 1]));
        assert!((ratio + 1.0).norm() < 1e-12);
        for k in 0..20 {
            let t = -1.0 + 0.1 * k as f64;
            assert!(point_on_variety(&i, &pt(&[t, 0.0]), 1e-12));
            assert!(point_on_variety(&i, &pt(&[t * s, t * s]), 1e-12));
        }

        let plane = SubspaceUnion::new(3, vec![crate::CMatrix::identity(3, 2)]).unwrap();
        assert_eq!(
            lines_to_ideal(&plane),
            Err(Error::PieceDimension { index: 0, dim: 2 })
        );
    }

    #[test]
    fn union_component_matches_ideal_component() {
        let axes = SubspaceUnion::lines(2, &[pt(&[1.0, 0.0]), pt(&[0.0, 1.0])]).unwrap();
        let w = Weights::new(&CoefficientSequence::dirichlet(), 8);
        for n in 0..8 {
            let from_union = Variety::Union(axes.clone()).component(n, &w).unwrap();
            let from_ideal = graded_component(&z1z2(), n, &w).unwrap();
            let diff = from_union.perp_projector() - from_ideal.perp_projector();
            assert!(max_abs(&diff) < 1e-10, "degree {n}");
        }
    }

    #[test]
    fn containment_is_pruned() {
        let line = crate::CMatrix::from_column_slice(3, 1, &[c(1.0), c(1.0), c(0.0)]);
        let plane = crate::CMatrix::identity(3, 2);
        let u = SubspaceUnion::new(3, vec![line.clone(), plane, line]).unwrap();
        assert_eq!(u.piece_dims(), vec![2]);
    }
}
