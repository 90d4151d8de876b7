//! Numeric re-derivation of the Hamiltonian coefficient systems.
//!
//! For a candidate tuple the images `H[A]`, `H[B]`, `H[X]` (or `H[A]`,
//! `H[C]`, `H[D]`) and `H[theta]` are expanded on the generator span, giving 12 real
//! unknowns. Matching elliptic-function coefficients in the equation of
//! motion yields 8 operator equations, linear in the unknowns. These are
//! assembled *numerically* — every operator coefficient is an actual
//! commutator of the supplied matrices — and solved by least squares with
//! explicit null-space extraction.
//!
//! A valid tuple produces a one-parameter solution family (the free
//! parameter nu adds a multiple of the state, which commutes away), a
//! forced-zero pattern on the off-structure coefficients, and the
//! structure constants through the closing formulas
//!
//! ```text
//! family 1:  alpha = omega/(b_B - x_X),       beta = omega/(a_A - b_B)
//! family 2:  delta = -2 omega/(c_C - a_A),    alpha = omega/(c_C t_D - d_0)
//! ```

use num_complex::Complex64 as C64;

use crate::algebra::{commutator_i_mat, CMatrix, HermitianOperator};
use crate::eig::eigh;
use crate::elliptic::EllipticModulus;
use crate::error::{Error, Result};
use crate::solutions::{fit_case1_constants, fit_case2_constants};
use crate::superop::{ComplementRule, OperatorMap};

/// Relative inconsistency above which the projected system is rejected.
pub const DERIVATION_TOL: f64 = 1e-8;

/// Relative eigenvalue threshold separating the solution family's null
/// direction from the determined directions of the normal equations.
const NULL_TOL: f64 = 1e-14;

const UNKNOWNS: usize = 12;

/// Coefficients of the four images on the ordered generator basis.
/// For family 1 the basis is (A, B, X); for family 2 it is (A, C, D).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientTable {
    pub image_a: [f64; 3],
    pub image_second: [f64; 3],
    pub image_third: [f64; 3],
    pub image_theta: [f64; 3],
}

impl CoefficientTable {
    fn from_vec(x: &[f64; UNKNOWNS]) -> Self {
        Self {
            image_a: [x[0], x[1], x[2]],
            image_second: [x[3], x[4], x[5]],
            image_third: [x[6], x[7], x[8]],
            image_theta: [x[9], x[10], x[11]],
        }
    }

    pub fn rows(&self) -> [[f64; 3]; 4] {
        [
            self.image_a,
            self.image_second,
            self.image_third,
            self.image_theta,
        ]
    }
}

/// Result of a family-1 derivation, gauge-fixed to the requested nu = b_B.
#[derive(Clone, Debug)]
pub struct Case1Derivation {
    pub coefficients: CoefficientTable,
    pub nu: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Largest magnitude among the nine forced-zero coefficients.
    pub forced_zero_max: f64,
    /// Relative least-squares inconsistency of the projected system.
    pub residual: f64,
    solution: [f64; UNKNOWNS],
    null_direction: [f64; UNKNOWNS],
}

/// Result of a family-2 derivation, gauge-fixed to nu = c_C.
#[derive(Clone, Debug)]
pub struct Case2Derivation {
    pub coefficients: CoefficientTable,
    pub nu: f64,
    pub alpha: f64,
    pub delta: f64,
    /// The t_D used in the theta decomposition (echoed input).
    pub t_d: f64,
    pub forced_zero_max: f64,
    pub residual: f64,
    solution: [f64; UNKNOWNS],
    null_direction: [f64; UNKNOWNS],
}

impl Case1Derivation {
    /// The family member at another choice of the free parameter.
    pub fn coefficients_at(&self, nu: f64) -> CoefficientTable {
        CoefficientTable::from_vec(&shift_to_nu(&self.solution, &self.null_direction, nu))
    }
}

impl Case2Derivation {
    pub fn coefficients_at(&self, nu: f64) -> CoefficientTable {
        CoefficientTable::from_vec(&shift_to_nu(&self.solution, &self.null_direction, nu))
    }
}

/// Index of the nu-carrying coefficient (b_B resp. c_C) in the unknown
/// vector [image_a; image_second; image_third; image_theta].
const NU_INDEX: usize = 4;

fn shift_to_nu(x: &[f64; UNKNOWNS], null: &[f64; UNKNOWNS], nu: f64) -> [f64; UNKNOWNS] {
    let step = (nu - x[NU_INDEX]) / null[NU_INDEX];
    let mut out = *x;
    for i in 0..UNKNOWNS {
        out[i] += step * null[i];
    }
    out
}

/// Stack the real and imaginary parts of a list of operator equations.
fn stack_real(equations: &[CMatrix]) -> Vec<f64> {
    let mut out = Vec::with_capacity(equations.len() * equations[0].len() * 2);
    for eq in equations {
        for z in eq.iter() {
            out.push(z.re);
            out.push(z.im);
        }
    }
    out
}

/// Solve the affine system F(x) = 0 in the 12 unknowns, where `residual_fn`
/// evaluates F. Returns (particular solution with minimum norm, null
/// directions, relative inconsistency).
fn solve_family(
    residual_fn: &dyn Fn(&[f64; UNKNOWNS]) -> Vec<f64>,
) -> Result<([f64; UNKNOWNS], Vec<[f64; UNKNOWNS]>, f64)> {
    let f0 = residual_fn(&[0.0; UNKNOWNS]);
    let rows = f0.len();
    // Column j of M is F(e_j) - F(0); the right-hand side is -F(0).
    let mut m = vec![vec![0.0_f64; UNKNOWNS]; rows];
    for j in 0..UNKNOWNS {
        let mut e = [0.0; UNKNOWNS];
        e[j] = 1.0;
        let fj = residual_fn(&e);
        for i in 0..rows {
            m[i][j] = fj[i] - f0[i];
        }
    }
    let b: Vec<f64> = f0.iter().map(|v| -v).collect();

    // Normal equations N = M^T M, g = M^T b, diagonalized through the
    // complex Hermitian path (imaginary parts are zero).
    let mut n = CMatrix::zeros((UNKNOWNS, UNKNOWNS));
    let mut g = [0.0_f64; UNKNOWNS];
    for p in 0..UNKNOWNS {
        for q in 0..UNKNOWNS {
            let s: f64 = m.iter().map(|row| row[p] * row[q]).sum();
            n[(p, q)] = C64::new(s, 0.0);
        }
        g[p] = m.iter().zip(&b).map(|(row, bi)| row[p] * bi).sum();
    }
    let e = eigh(&n)?;
    let lambda_max = e.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let cutoff = NULL_TOL * lambda_max.max(f64::MIN_POSITIVE);

    let mut solution = [0.0_f64; UNKNOWNS];
    let mut nulls: Vec<[f64; UNKNOWNS]> = Vec::new();
    for (j, &lambda) in e.eigenvalues.iter().enumerate() {
        let v: Vec<f64> = (0..UNKNOWNS).map(|i| e.eigenvectors[(i, j)].re).collect();
        if lambda <= cutoff {
            let mut dir = [0.0; UNKNOWNS];
            dir.copy_from_slice(&v);
            nulls.push(dir);
        } else {
            let vg: f64 = (0..UNKNOWNS).map(|i| v[i] * g[i]).sum();
            let coeff = vg / lambda;
            for i in 0..UNKNOWNS {
                solution[i] += coeff * v[i];
            }
        }
    }

    // Relative inconsistency of the least-squares solution.
    let fx = residual_fn(&solution);
    let num: f64 = fx.iter().map(|v| v * v).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let residual = num / den.max(f64::MIN_POSITIVE);
    Ok((solution, nulls, residual))
}

fn images(
    basis: [&CMatrix; 3],
    x: &[f64; UNKNOWNS],
) -> [CMatrix; 4] {
    let combo = |c: &[f64]| -> CMatrix {
        basis[0].mapv(|z| z * c[0]) + basis[1].mapv(|z| z * c[1]) + basis[2].mapv(|z| z * c[2])
    };
    [
        combo(&x[0..3]),
        combo(&x[3..6]),
        combo(&x[6..9]),
        combo(&x[9..12]),
    ]
}

/// Re-derive the family-1 Hamiltonian coefficients for (A, B, X, theta) at
/// frequency `omega` and modulus `k`, gauge-fixed to `nu`.
///
/// Closure is checked first; the projected equations must then be
/// consistent with a one-dimensional solution family whose off-structure
/// coefficients vanish.
pub fn derive_case1_coefficients(
    a: &HermitianOperator,
    b: &HermitianOperator,
    x: &HermitianOperator,
    theta: &HermitianOperator,
    omega: f64,
    k: EllipticModulus,
    nu: f64,
) -> Result<Case1Derivation> {
    fit_case1_constants(a, b, x, k)?;
    if omega == 0.0 {
        return Err(Error::Domain("omega must be nonzero".into()));
    }
    // theta drops out of the projected equations only because it is
    // central; enforce that hypothesis instead of silently assuming it.
    for (gen, name) in [(a, "A"), (b, "B"), (x, "X")] {
        let comm = commutator_i_mat(theta.matrix(), gen.matrix());
        let scale = (theta.fro_norm() * gen.fro_norm()).max(1.0);
        if crate::algebra::fro_norm(&comm) > 1e-10 * scale {
            return Err(Error::DerivationFailure(format!(
                "theta does not commute with {name}"
            )));
        }
    }
    let k2 = k.value() * k.value();
    let (am, bm, xm) = (a.matrix(), b.matrix(), x.matrix());

    let residual_fn = |u: &[f64; UNKNOWNS]| -> Vec<f64> {
        let [h_a, h_b, h_x, h_t] = images([am, bm, xm], u);
        let ci = commutator_i_mat;
        let equations = vec![
            // coefficient matching: constant and sn^2 parts
            ci(&h_a, am) + ci(&h_x, xm),
            ci(&h_b, bm) - ci(&h_a, am) - ci(&h_x, xm).mapv(|z| z * k2),
            // theta image must commute with the generators
            ci(&h_t, am),
            ci(&h_t, bm),
            ci(&h_t, xm),
            // sn dn, cn dn, sn cn parts
            ci(&h_b, xm) + ci(&h_x, bm) - am.mapv(|z| z * omega),
            ci(&h_a, xm) + ci(&h_x, am) + bm.mapv(|z| z * omega),
            ci(&h_a, bm) + ci(&h_b, am) - xm.mapv(|z| z * (k2 * omega)),
        ];
        stack_real(&equations)
    };

    let (particular, nulls, residual) = solve_family(&residual_fn)?;
    if residual > DERIVATION_TOL {
        return Err(Error::DerivationFailure(format!(
            "projected equations are inconsistent (relative residual {residual:.3e})"
        )));
    }
    if nulls.len() != 1 {
        return Err(Error::DerivationFailure(format!(
            "expected a one-parameter solution family, found {} free directions",
            nulls.len()
        )));
    }
    let null_direction = nulls[0];
    if null_direction[NU_INDEX].abs() < 1e-6 {
        return Err(Error::DerivationFailure(
            "free direction does not carry the b_B coefficient".into(),
        ));
    }

    let solution = shift_to_nu(&particular, &null_direction, nu);
    let forced = [1usize, 2, 3, 5, 6, 7, 9, 10, 11];
    let forced_zero_max = forced
        .iter()
        .map(|&i| solution[i].abs())
        .fold(0.0, f64::max);

    let alpha = omega / (solution[4] - solution[8]);
    let beta = omega / (solution[0] - solution[4]);

    Ok(Case1Derivation {
        coefficients: CoefficientTable::from_vec(&solution),
        nu,
        alpha,
        beta,
        forced_zero_max,
        residual,
        solution,
        null_direction,
    })
}

/// Re-derive the family-2 Hamiltonian coefficients for (A, C, D) with
/// central part `theta0` and candidate decomposition
/// theta = theta0 + t_A A + t_C C + t_D D.
///
/// The equations force t_A = t_C = 0; supplying nonzero values makes the
/// system inconsistent and fails the derivation.
#[allow(clippy::too_many_arguments)]
pub fn derive_case2_coefficients(
    a: &HermitianOperator,
    c: &HermitianOperator,
    d: &HermitianOperator,
    theta0: &HermitianOperator,
    t_coeffs: (f64, f64, f64),
    omega: f64,
    k: EllipticModulus,
    nu: f64,
) -> Result<Case2Derivation> {
    fit_case2_constants(a, c, d, k)?;
    if omega == 0.0 {
        return Err(Error::Domain("omega must be nonzero".into()));
    }
    let k2 = k.value() * k.value();
    let (t_a, t_c, t_d) = t_coeffs;
    let theta = &(&(theta0 + &a.scale(t_a)) + &c.scale(t_c)) + &d.scale(t_d);

    let (am, cm, dm, tm) = (a.matrix(), c.matrix(), d.matrix(), theta.matrix());

    let residual_fn = |u: &[f64; UNKNOWNS]| -> Vec<f64> {
        let [h_a, h_c, h_d, h_t] = images([am, cm, dm], u);
        let ci = commutator_i_mat;
        let equations = vec![
            ci(dm, &h_d) - ci(cm, &h_c).mapv(|z| z * k2),
            ci(tm, &h_t) + ci(cm, &h_c).mapv(|z| z * (1.0 - k2)),
            ci(tm, &h_d) + ci(dm, &h_t) + ci(am, &h_a)
                + ci(cm, &h_c).mapv(|z| z * (2.0 * k2 - 1.0)),
            ci(cm, &h_d) + ci(dm, &h_c),
            ci(tm, &h_c) + ci(cm, &h_t) + am.mapv(|z| z * omega),
            ci(am, &h_d) + ci(dm, &h_a) - cm.mapv(|z| z * (2.0 * k2 * omega)),
            ci(tm, &h_a) + ci(am, &h_t) + ci(am, &h_d) + ci(dm, &h_a)
                - cm.mapv(|z| z * omega),
            ci(am, &h_c) + ci(cm, &h_a) + dm.mapv(|z| z * (2.0 * omega)),
        ];
        stack_real(&equations)
    };

    let (particular, nulls, residual) = solve_family(&residual_fn)?;
    if residual > DERIVATION_TOL {
        return Err(Error::DerivationFailure(format!(
            "projected equations are inconsistent (relative residual {residual:.3e}); \
             a nonzero t_A or t_C in the theta decomposition also lands here"
        )));
    }
    if nulls.len() != 1 {
        return Err(Error::DerivationFailure(format!(
            "expected a one-parameter solution family, found {} free directions",
            nulls.len()
        )));
    }
    let null_direction = nulls[0];
    if null_direction[NU_INDEX].abs() < 1e-6 {
        return Err(Error::DerivationFailure(
            "free direction does not carry the c_C coefficient".into(),
        ));
    }

    let solution = shift_to_nu(&particular, &null_direction, nu);
    // Lemma-forced zeros: c_A, d_A, a_C, d_C, a_D, c_D, a_0, c_0, plus the
    // constraint d_D = c_C.
    let forced = [1usize, 2, 3, 5, 6, 7, 9, 10];
    let forced_zero_max = forced
        .iter()
        .map(|&i| solution[i].abs())
        .fold(0.0, f64::max)
        .max((solution[8] - solution[4]).abs());

    let delta = -2.0 * omega / (solution[4] - solution[0]);
    let alpha = omega / (solution[4] * t_d - solution[11]);

    Ok(Case2Derivation {
        coefficients: CoefficientTable::from_vec(&solution),
        nu,
        alpha,
        delta,
        t_d,
        forced_zero_max,
        residual,
        solution,
        null_direction,
    })
}

/// Assemble the operator map encoded by a derived coefficient table over
/// the generator set (basis0, basis1, basis2, theta).
pub fn map_from_coefficients(
    basis: [&HermitianOperator; 3],
    theta: &HermitianOperator,
    table: &CoefficientTable,
) -> Result<OperatorMap> {
    let dim = theta.dim();
    let combo = |c: &[f64; 3]| -> HermitianOperator {
        &(&basis[0].scale(c[0]) + &basis[1].scale(c[1])) + &basis[2].scale(c[2])
    };
    let pairs = vec![
        (theta.clone(), combo(&table.image_theta)),
        (basis[0].clone(), combo(&table.image_a)),
        (basis[1].clone(), combo(&table.image_second)),
        (basis[2].clone(), combo(&table.image_third)),
    ];
    OperatorMap::from_action(dim, &pairs, ComplementRule::Zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::cmplx;
    use crate::scenarios;
    use crate::solutions::state_distance;

    #[test]
    fn d3_known_forced_pattern_and_constants() {
        let s = scenarios::d3_known(0.5, 1.0, 0.0, 1.0, 2.0).unwrap();
        let sys = &s.system;
        let der = derive_case1_coefficients(
            sys.a(),
            sys.b(),
            sys.x(),
            sys.theta(),
            sys.omega(),
            sys.modulus(),
            0.0,
        )
        .unwrap();
        assert!(der.forced_zero_max <= 1e-10, "{}", der.forced_zero_max);
        assert!((der.alpha - 1.0).abs() < 1e-10);
        assert!((der.beta - 1.0 / 3.0).abs() < 1e-10);
        // a_A = nu + omega/beta = 3, x_X = nu - omega/alpha = -1 at nu = 0.
        assert!((der.coefficients.image_a[0] - 3.0).abs() < 1e-10);
        assert!((der.coefficients.image_third[2] + 1.0).abs() < 1e-10);
    }

    #[test]
    fn d3_variation_family_recovers_display_coefficients() {
        let b = 2.0;
        let s = scenarios::d3_variation(b, 1.0, 0.0, 1.0).unwrap();
        let sys = &s.system;
        let der = derive_case1_coefficients(
            sys.a(),
            sys.b(),
            sys.x(),
            sys.theta(),
            sys.omega(),
            sys.modulus(),
            0.0,
        )
        .unwrap();
        // At nu = 4b the images read 3b A, 4b B, 5b X.
        let at = der.coefficients_at(4.0 * b);
        assert!((at.image_a[0] - 3.0 * b).abs() < 1e-9);
        assert!((at.image_second[1] - 4.0 * b).abs() < 1e-9);
        assert!((at.image_third[2] - 5.0 * b).abs() < 1e-9);
        assert!((der.alpha + 1.0 / b).abs() < 1e-10);
        assert!((der.beta + 1.0 / b).abs() < 1e-10);
    }

    #[test]
    fn perturbed_generator_fails_derivation() {
        let s = scenarios::d3_known(0.5, 1.0, 0.0, 1.0, 2.0).unwrap();
        let sys = &s.system;
        let mut xm = sys.x().matrix().clone();
        xm[(0, 0)] += cmplx(1e-3, 0.0);
        let x = HermitianOperator::new(xm).unwrap();
        let err = derive_case1_coefficients(
            sys.a(),
            sys.b(),
            &x,
            sys.theta(),
            sys.omega(),
            sys.modulus(),
            0.0,
        );
        assert!(err.is_err(), "perturbation must break the closure");
    }

    #[test]
    fn maxwell_bloch_forced_pattern_and_constants() {
        let s = scenarios::maxwell_bloch(1.0, 1.0).unwrap();
        let sys = &s.system;
        let der = derive_case2_coefficients(
            sys.a(),
            sys.c(),
            sys.d(),
            sys.theta0(),
            sys.t_coeffs(),
            sys.omega(),
            sys.modulus(),
            0.0,
        )
        .unwrap();
        assert!(der.forced_zero_max <= 1e-10, "{}", der.forced_zero_max);
        assert!((der.alpha + 1.0).abs() < 1e-10);
        assert!((der.delta + 1.0).abs() < 1e-10);
        // d_0 at nu = 0 is -omega/alpha = 1.
        assert!((der.coefficients.image_theta[2] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn three_level_constants_roundtrip() {
        let s = scenarios::three_level(0.5, 2.0, 1.0, 0.0, 1.0, 2.0).unwrap();
        let sys = &s.system;
        let der = derive_case2_coefficients(
            sys.a(),
            sys.c(),
            sys.d(),
            sys.theta0(),
            sys.t_coeffs(),
            sys.omega(),
            sys.modulus(),
            0.0,
        )
        .unwrap();
        assert!((der.alpha - 2.0).abs() < 1e-10);
        assert!((der.delta - 1.0).abs() < 1e-10);
        assert!(der.forced_zero_max <= 1e-10);
    }

    #[test]
    fn nonzero_t_a_is_rejected() {
        let s = scenarios::maxwell_bloch(1.0, 1.0).unwrap();
        let sys = &s.system;
        let (_, _, t_d) = sys.t_coeffs();
        let err = derive_case2_coefficients(
            sys.a(),
            sys.c(),
            sys.d(),
            sys.theta0(),
            (0.1, 0.0, t_d),
            sys.omega(),
            sys.modulus(),
            0.0,
        );
        assert!(
            matches!(err, Err(Error::DerivationFailure(_))),
            "t_A = 0.1 must be inconsistent: {err:?}"
        );
    }

    #[test]
    fn derived_map_solves_equation_of_motion() {
        let s = scenarios::d3_known(0.5, 1.0, 0.0, 1.0, 2.0).unwrap();
        let sys = &s.system;
        let der = derive_case1_coefficients(
            sys.a(),
            sys.b(),
            sys.x(),
            sys.theta(),
            sys.omega(),
            sys.modulus(),
            0.6,
        )
        .unwrap();
        let map = map_from_coefficients(
            [sys.a(), sys.b(), sys.x()],
            sys.theta(),
            &der.coefficients,
        )
        .unwrap();
        for &t in &[0.0, 0.7, 2.1] {
            let rho = sys.state(t).unwrap();
            let rhs = crate::dynamics::vne_rhs(&rho, &map).unwrap();
            let lhs = sys.state_derivative(t).unwrap();
            assert!(state_distance(&lhs, &rhs) < 1e-9, "t = {t}");
        }
    }
}
