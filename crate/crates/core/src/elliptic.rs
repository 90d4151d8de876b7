//! Jacobi elliptic functions sn, cn, dn and the complete elliptic
//! integral of the first kind K(k).
//!
//! Everything here takes the elliptic *modulus* k, not the parameter
//! m = k^2. Evaluation uses the descending Landen / arithmetic-geometric
//! mean iteration, which converges quadratically, with the degenerate
//! moduli dispatched to closed forms:
//!
//! * k = 0: (sn, cn, dn) = (sin u, cos u, 1)
//! * k = 1: (sn, cn, dn) = (tanh u, sech u, sech u)
//!
//! The returned triple satisfies sn^2 + cn^2 = 1 and dn^2 + k^2 sn^2 = 1
//! to machine precision by construction.

use crate::error::{Error, Result};

/// Relative gap at which the Landen descent stops. Accuracy of the
/// iteration is of the order of the square of this value.
const AGM_CUTOFF: f64 = 1e-9;

/// Maximum AGM stages; quadratic convergence needs ~10 even at k = 1 - 1e-15.
const AGM_STAGES: usize = 16;

/// Elliptic modulus k, restricted to [0, 1].
///
/// k = 0 is the trigonometric limit and k = 1 the hyperbolic one; both are
/// first-class values here.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticModulus(f64);

impl EllipticModulus {
    pub fn new(k: f64) -> Result<Self> {
        if !k.is_finite() || !(0.0..=1.0).contains(&k) {
            return Err(Error::Domain(format!(
                "elliptic modulus must lie in [0, 1], got {k}"
            )));
        }
        Ok(Self(k))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }

    pub fn is_one(self) -> bool {
        self.0 == 1.0
    }
}

impl std::fmt::Display for EllipticModulus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Values of (sn, cn, dn) at one argument.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticTriple {
    pub sn: f64,
    pub cn: f64,
    pub dn: f64,
}

impl EllipticTriple {
    /// Maximum violation of the two algebraic identities at modulus `k`.
    pub fn identity_defect(&self, k: EllipticModulus) -> f64 {
        let k2 = k.value() * k.value();
        let first = (self.sn * self.sn + self.cn * self.cn - 1.0).abs();
        let second = (self.dn * self.dn + k2 * self.sn * self.sn - 1.0).abs();
        first.max(second)
    }
}

/// Evaluate (sn(u, k), cn(u, k), dn(u, k)) for real argument `u`.
pub fn jacobi_sncndn(u: f64, k: EllipticModulus) -> Result<EllipticTriple> {
    if !u.is_finite() {
        return Err(Error::Domain(format!(
            "elliptic argument must be finite, got {u}"
        )));
    }
    if k.is_zero() {
        return Ok(EllipticTriple {
            sn: u.sin(),
            cn: u.cos(),
            dn: 1.0,
        });
    }
    if k.is_one() {
        let sech = 1.0 / u.cosh();
        return Ok(EllipticTriple {
            sn: u.tanh(),
            cn: sech,
            dn: sech,
        });
    }
    Ok(sncndn_agm(u, k.value()))
}

/// AGM evaluation for 0 < k < 1, after Abramowitz & Stegun 16.12 and the
/// classical sncndn routine: run the ascending scale with complementary
/// parameter, then recover dn by backward recurrence.
fn sncndn_agm(u: f64, k: f64) -> EllipticTriple {
    // Complementary parameter 1 - k^2, in the cancellation-free form.
    let mut emc = (1.0 - k) * (1.0 + k);

    let mut a = 1.0_f64;
    let mut dn = 1.0_f64;
    let mut em = [0.0_f64; AGM_STAGES];
    let mut en = [0.0_f64; AGM_STAGES];
    let mut c = 0.0_f64;
    let mut stages = 0;

    for i in 0..AGM_STAGES {
        stages = i;
        em[i] = a;
        emc = emc.sqrt();
        en[i] = emc;
        c = 0.5 * (a + emc);
        if (a - emc).abs() <= AGM_CUTOFF * a {
            break;
        }
        emc *= a;
        a = c;
    }

    let phase = u * c;
    let mut sn = phase.sin();
    let mut cn = phase.cos();

    if sn != 0.0 {
        let mut aa = cn / sn;
        c *= aa;
        for i in (0..=stages).rev() {
            let b = em[i];
            aa *= c;
            c *= dn;
            dn = (en[i] + aa) / (b + aa);
            aa = c / b;
        }
        let inv = 1.0 / (c * c + 1.0).sqrt();
        sn = if sn >= 0.0 { inv } else { -inv };
        cn = c * sn;
    }

    // Enforce dn^2 + k^2 sn^2 = 1 exactly; dn is never negative for k < 1,
    // and the k'^2 + k^2 cn^2 form avoids cancellation near |sn| = 1.
    let dn = ((1.0 - k) * (1.0 + k) + (k * cn) * (k * cn)).sqrt();
    EllipticTriple { sn, cn, dn }
}

/// Derivatives (sn', cn', dn') expressed through the triple itself:
/// sn' = cn dn, cn' = -sn dn, dn' = -k^2 sn cn.
pub fn jacobi_derivatives(t: EllipticTriple, k: EllipticModulus) -> (f64, f64, f64) {
    let k2 = k.value() * k.value();
    (t.cn * t.dn, -t.sn * t.dn, -k2 * t.sn * t.cn)
}

/// Complete elliptic integral of the first kind K(k), the quarter period:
/// sn and cn have period 4 K(k), dn has period 2 K(k).
///
/// Diverges logarithmically as k -> 1, which is reported as an error.
pub fn complete_elliptic_k(k: EllipticModulus) -> Result<f64> {
    if k.is_one() {
        return Err(Error::DivergentPeriod);
    }
    let mut a = 1.0_f64;
    let mut b = ((1.0 - k.value()) * (1.0 + k.value())).sqrt();
    for _ in 0..32 {
        if (a - b).abs() <= f64::EPSILON * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    Ok(std::f64::consts::FRAC_PI_2 / a)
}
