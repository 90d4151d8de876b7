//! Small dense complex operator algebra: Hermitian operators, commutators,
//! traces, spectra, and conjugation by matrix exponentials.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::eig::{eigh, hermiticity_defect, Eigendecomposition};
use crate::error::{Error, Result};

/// Dense complex matrix storage used throughout the crate.
pub type CMatrix = Array2<C64>;

/// Relative Hermiticity tolerance: defect against the largest entry
/// magnitude. Inputs failing it are rejected, never symmetrized.
pub const HERMITICITY_TOL: f64 = 1e-12;

pub fn cmplx(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Frobenius norm.
pub fn fro_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entry magnitude.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diag().iter().sum()
}

/// Conjugate transpose.
pub fn adjoint(a: &CMatrix) -> CMatrix {
    a.t().mapv(|z| z.conj())
}

/// Frobenius inner product <a, b> = Tr(a^dagger b).
pub fn frobenius_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// i [a, b] on raw matrices; Hermitian whenever a and b are.
pub fn commutator_i_mat(a: &CMatrix, b: &CMatrix) -> CMatrix {
    (a.dot(b) - b.dot(a)).mapv(|z| C64::i() * z)
}

/// {a, b} = ab + ba on raw matrices.
pub fn anticommutator_mat(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.dot(b) + b.dot(a)
}

fn check_same_dim(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            left: a.nrows(),
            right: b.nrows(),
        });
    }
    Ok(())
}

/// A validated self-adjoint operator.
///
/// Construction checks squareness, finiteness, and Hermiticity to
/// [`HERMITICITY_TOL`] relative to the largest entry. Arithmetic between
/// operators preserves Hermiticity exactly, so results skip re-validation.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    mat: CMatrix,
}

impl HermitianOperator {
    pub fn new(mat: CMatrix) -> Result<Self> {
        let n = mat.nrows();
        if n == 0 || mat.ncols() != n {
            return Err(Error::Domain(format!(
                "operator must be square with dim >= 1, got {}x{}",
                n,
                mat.ncols()
            )));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("operator entries must be finite".into()));
        }
        let tol = HERMITICITY_TOL * max_abs(&mat).max(1.0);
        let defect = hermiticity_defect(&mat);
        if defect > tol {
            return Err(Error::NotHermitian { defect, tol });
        }
        Ok(Self { mat })
    }

    /// For results that are Hermitian by construction (sums, real scalings,
    /// commutators of Hermitian inputs).
    pub(crate) fn new_unchecked(mat: CMatrix) -> Self {
        debug_assert!(hermiticity_defect(&mat) <= 1e-9 * max_abs(&mat).max(1.0));
        Self { mat }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            mat: CMatrix::zeros((dim, dim)),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMatrix::eye(dim),
        }
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut mat = CMatrix::zeros((n, n));
        for (i, &e) in entries.iter().enumerate() {
            mat[(i, i)] = cmplx(e, 0.0);
        }
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// Trace; real for a Hermitian operator.
    pub fn trace(&self) -> f64 {
        trace(&self.mat).re
    }

    pub fn fro_norm(&self) -> f64 {
        fro_norm(&self.mat)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            mat: self.mat.mapv(|z| z * factor),
        }
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        max_abs(&self.mat) <= tol
    }
}

impl std::ops::Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator::new_unchecked(&self.mat + &rhs.mat)
    }
}

impl std::ops::Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator::new_unchecked(&self.mat - &rhs.mat)
    }
}

impl std::ops::Neg for &HermitianOperator {
    type Output = HermitianOperator;
    fn neg(self) -> HermitianOperator {
        self.scale(-1.0)
    }
}

/// Pauli matrices and the 2x2 identity.
pub mod pauli {
    use super::{cmplx, CMatrix, HermitianOperator};

    pub fn sigma_x() -> HermitianOperator {
        HermitianOperator::new(sigma_x_mat()).unwrap()
    }

    pub fn sigma_y() -> HermitianOperator {
        HermitianOperator::new(sigma_y_mat()).unwrap()
    }

    pub fn sigma_z() -> HermitianOperator {
        HermitianOperator::new(sigma_z_mat()).unwrap()
    }

    pub fn sigma_x_mat() -> CMatrix {
        ndarray::array![
            [cmplx(0.0, 0.0), cmplx(1.0, 0.0)],
            [cmplx(1.0, 0.0), cmplx(0.0, 0.0)]
        ]
    }

    pub fn sigma_y_mat() -> CMatrix {
        ndarray::array![
            [cmplx(0.0, 0.0), cmplx(0.0, -1.0)],
            [cmplx(0.0, 1.0), cmplx(0.0, 0.0)]
        ]
    }

    pub fn sigma_z_mat() -> CMatrix {
        ndarray::array![
            [cmplx(1.0, 0.0), cmplx(0.0, 0.0)],
            [cmplx(0.0, 0.0), cmplx(-1.0, 0.0)]
        ]
    }
}

/// Matrix unit E_ij (not Hermitian for i != j).
pub fn matrix_unit(dim: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros((dim, dim));
    m[(i, j)] = cmplx(1.0, 0.0);
    m
}

/// i [a, b]; Hermitian when a and b are, and exactly so in floating point.
pub fn commutator_i(a: &HermitianOperator, b: &HermitianOperator) -> Result<HermitianOperator> {
    check_same_dim(&a.mat, &b.mat)?;
    Ok(HermitianOperator::new_unchecked(commutator_i_mat(
        &a.mat, &b.mat,
    )))
}

/// {a, b} = ab + ba.
pub fn anticommutator(a: &HermitianOperator, b: &HermitianOperator) -> Result<HermitianOperator> {
    check_same_dim(&a.mat, &b.mat)?;
    Ok(HermitianOperator::new_unchecked(anticommutator_mat(
        &a.mat, &b.mat,
    )))
}

/// Eigenvalues of a Hermitian operator, sorted ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumRecord {
    eigenvalues: Vec<f64>,
}

impl SpectrumRecord {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Largest per-eigenvalue distance to another spectrum of equal length.
    pub fn drift(&self, other: &SpectrumRecord) -> f64 {
        assert_eq!(self.eigenvalues.len(), other.eigenvalues.len());
        self.eigenvalues
            .iter()
            .zip(other.eigenvalues.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Sorted spectrum of a Hermitian operator.
pub fn hermitian_spectrum(a: &HermitianOperator) -> SpectrumRecord {
    let e = eigh(&a.mat).expect("validated Hermitian operator");
    SpectrumRecord {
        eigenvalues: e.eigenvalues,
    }
}

/// Spectrum of the Hermitian part of a raw matrix; used for trajectory
/// diagnostics where integration noise sits above the strict tolerance.
pub fn spectrum_of_hermitian_part(a: &CMatrix) -> Result<SpectrumRecord> {
    let e = eigh(a)?;
    Ok(SpectrumRecord {
        eigenvalues: e.eigenvalues,
    })
}

/// Full eigendecomposition of a Hermitian operator.
pub fn eigendecompose(a: &HermitianOperator) -> Eigendecomposition {
    eigh(&a.mat).expect("validated Hermitian operator")
}

/// e^{i t h} a e^{-i t h}, computed through the eigendecomposition of `h`
/// so the conjugating factor is unitary up to eigensolver error.
pub fn conjugate_by_exponential(
    a: &HermitianOperator,
    h: &HermitianOperator,
    t: f64,
) -> Result<HermitianOperator> {
    check_same_dim(&a.mat, &h.mat)?;
    let u = exp_ith(h, t);
    let uh = adjoint(&u);
    Ok(HermitianOperator::new_unchecked(u.dot(&a.mat).dot(&uh)))
}

/// Unitary e^{i t h} for Hermitian h.
pub fn exp_ith(h: &HermitianOperator, t: f64) -> CMatrix {
    let e = eigh(&h.mat).expect("validated Hermitian operator");
    e.map_eigenvalues(|lambda| (C64::i() * (t * lambda)).exp())
}
