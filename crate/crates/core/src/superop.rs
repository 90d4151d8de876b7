//! Linear superoperators `sigma -> H[sigma]` stored as dense d^2 x d^2
//! matrices over the matrix-unit basis (row-major vectorization).

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::algebra::{cmplx, matrix_unit, max_abs, CMatrix, HermitianOperator};
use crate::eig::eigh;
use crate::error::{Error, Result};

/// Relative rank tolerance for generator sets.
pub const RANK_TOL: f64 = 1e-10;

/// Row-major vectorization of a d x d matrix.
pub fn vectorize(a: &CMatrix) -> Array1<C64> {
    Array1::from_iter(a.iter().cloned())
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &Array1<C64>, dim: usize) -> CMatrix {
    Array2::from_shape_vec((dim, dim), v.to_vec()).expect("length d^2")
}

/// What a map constructed from generator images does off the span of the
/// generators. The zero rule is the minimal completion; dynamics started
/// inside the invariant affine subspace never see it.
#[derive(Clone, Debug, Default)]
pub enum ComplementRule {
    #[default]
    Zero,
    /// Delegate to another map on the orthogonal complement.
    Map(Box<OperatorMap>),
}

/// A linear map on operator space.
#[derive(Clone, Debug)]
pub struct OperatorMap {
    dim: usize,
    coefficients: CMatrix,
}

impl OperatorMap {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            coefficients: CMatrix::zeros((dim * dim, dim * dim)),
        }
    }

    /// Build the matrix of a linear rule by applying it to every matrix unit.
    pub fn from_linear_fn(dim: usize, f: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let d2 = dim * dim;
        let mut coefficients = CMatrix::zeros((d2, d2));
        for col in 0..d2 {
            let unit = matrix_unit(dim, col / dim, col % dim);
            let image = vectorize(&f(&unit));
            for row in 0..d2 {
                coefficients[(row, col)] = image[row];
            }
        }
        Self { dim, coefficients }
    }

    /// Least-squares-free construction from exact action on a spanning set:
    /// reproduces every (generator, image) pair and follows `complement` on
    /// the orthogonal complement of the generator span.
    ///
    /// Fails if the generators are rank deficient below [`RANK_TOL`].
    pub fn from_action(
        dim: usize,
        pairs: &[(HermitianOperator, HermitianOperator)],
        complement: ComplementRule,
    ) -> Result<Self> {
        let d2 = dim * dim;
        let m = pairs.len();
        if m == 0 {
            return Err(Error::Domain("from_action needs at least one pair".into()));
        }
        for (g, img) in pairs {
            if g.dim() != dim || img.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: g.dim().max(img.dim()),
                });
            }
        }

        // G: d^2 x m stack of vectorized generators; Img likewise.
        let mut g = CMatrix::zeros((d2, m));
        let mut img = CMatrix::zeros((d2, m));
        for (j, (gen, image)) in pairs.iter().enumerate() {
            let gv = vectorize(gen.matrix());
            let iv = vectorize(image.matrix());
            for i in 0..d2 {
                g[(i, j)] = gv[i];
                img[(i, j)] = iv[i];
            }
        }

        // Gram = G^dagger G is Hermitian positive semidefinite; its
        // eigenvalues are the squared singular values of G.
        let gh = g.t().mapv(|z| z.conj());
        let gram = gh.dot(&g);
        let e = eigh(&gram)?;
        let lambda_max = e.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
        let lambda_min = e.eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
        let sigma = (lambda_min / lambda_max.max(f64::MIN_POSITIVE)).sqrt();
        if sigma <= RANK_TOL {
            return Err(Error::DependentGenerators {
                sigma,
                tol: RANK_TOL,
            });
        }

        // pinv(G) = V diag(1/lambda) V^dagger G^dagger, so that
        // M = Img pinv(G) reproduces the pairs and annihilates the
        // orthogonal complement of span(G).
        let v = &e.eigenvectors;
        let vh = v.t().mapv(|z| z.conj());
        let mut inv_scaled = v.clone();
        for (j, &lambda) in e.eigenvalues.iter().enumerate() {
            let inv = cmplx(1.0 / lambda, 0.0);
            for i in 0..m {
                inv_scaled[(i, j)] *= inv;
            }
        }
        let gram_inv = inv_scaled.dot(&vh);
        let pinv = gram_inv.dot(&gh); // m x d^2
        let mut coefficients = img.dot(&pinv);

        if let ComplementRule::Map(other) = complement {
            if other.dim != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: other.dim,
                });
            }
            // other (I - G pinv(G)) acts on the complement only.
            let projector = g.dot(&pinv);
            let mut residual_proj = CMatrix::eye(d2);
            residual_proj = residual_proj - projector;
            coefficients = coefficients + other.coefficients.dot(&residual_proj);
        }

        Ok(Self { dim, coefficients })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coefficients(&self) -> &CMatrix {
        &self.coefficients
    }

    /// Apply the map to a raw matrix.
    pub fn apply(&self, a: &CMatrix) -> Result<CMatrix> {
        if a.nrows() != self.dim || a.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: a.nrows(),
            });
        }
        let out = self.coefficients.dot(&vectorize(a));
        Ok(unvectorize(&out, self.dim))
    }

    /// Apply to a Hermitian operator, returning the raw image (images need
    /// not be Hermitian for arbitrary maps).
    pub fn apply_op(&self, a: &HermitianOperator) -> Result<CMatrix> {
        self.apply(a.matrix())
    }

    /// Largest deviation of apply(generator) from the stated image, relative
    /// to the image scale; diagnostic for round-trip checks.
    pub fn action_defect(&self, pairs: &[(HermitianOperator, HermitianOperator)]) -> Result<f64> {
        let mut worst = 0.0_f64;
        for (g, img) in pairs {
            let got = self.apply_op(g)?;
            let scale = max_abs(img.matrix()).max(max_abs(g.matrix())).max(1.0);
            worst = worst.max(max_abs(&(got - img.matrix())) / scale);
        }
        Ok(worst)
    }
}

impl std::ops::Add for &OperatorMap {
    type Output = OperatorMap;
    fn add(self, rhs: &OperatorMap) -> OperatorMap {
        assert_eq!(self.dim, rhs.dim);
        OperatorMap {
            dim: self.dim,
            coefficients: &self.coefficients + &rhs.coefficients,
        }
    }
}

impl std::ops::Sub for &OperatorMap {
    type Output = OperatorMap;
    fn sub(self, rhs: &OperatorMap) -> OperatorMap {
        assert_eq!(self.dim, rhs.dim);
        OperatorMap {
            dim: self.dim,
            coefficients: &self.coefficients - &rhs.coefficients,
        }
    }
}
