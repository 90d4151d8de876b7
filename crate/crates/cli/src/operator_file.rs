//! JSON operator files: `dim`, plus named operator roles with entries as
//! [[re, im], ...] row-major arrays.
//!
//! Family 1 uses roles "A", "B", "X", "theta"; family 2 uses "A", "C",
//! "D", "theta0" with an optional explicit "theta" or "t_coeffs"
//! decomposition.

use std::collections::BTreeMap;
use std::path::Path;

use ellipt_vne::algebra::{cmplx, CMatrix, HermitianOperator};
use ellipt_vne::elliptic::EllipticModulus;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorFile {
    pub dim: usize,
    pub operators: BTreeMap<String, Vec<[f64; 2]>>,
    /// Optional (t_A, t_C, t_D) decomposition of theta - theta0 (family 2).
    pub t_coeffs: Option<[f64; 3]>,
}

impl OperatorFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("malformed operator file {}: {e}", path.display())))
    }

    pub fn operator(&self, role: &str) -> Result<HermitianOperator, CliError> {
        let entries = self.operators.get(role).ok_or_else(|| {
            CliError::Usage(format!(
                "operator file is missing role '{role}' (present: {})",
                self.operators.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })?;
        let d = self.dim;
        if entries.len() != d * d {
            return Err(CliError::Usage(format!(
                "role '{role}' has {} entries, expected dim^2 = {}",
                entries.len(),
                d * d
            )));
        }
        let mut m = CMatrix::zeros((d, d));
        for (idx, [re, im]) in entries.iter().enumerate() {
            m[(idx / d, idx % d)] = cmplx(*re, *im);
        }
        HermitianOperator::new(m)
            .map_err(|e| CliError::Usage(format!("role '{role}' is not a valid operator: {e}")))
    }

    pub fn has_role(&self, role: &str) -> bool {
        self.operators.contains_key(role)
    }
}

/// Which solution family an operator file describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FileCase {
    One,
    Two,
}

/// Infer the family from the roles present, or validate an explicit choice.
pub fn resolve_case(file: &OperatorFile, explicit: Option<u8>) -> Result<FileCase, CliError> {
    let looks_one = file.has_role("B") && file.has_role("X");
    let looks_two = file.has_role("C") && file.has_role("D");
    match explicit {
        Some(1) => Ok(FileCase::One),
        Some(2) => Ok(FileCase::Two),
        Some(n) => Err(CliError::Usage(format!("--case must be 1 or 2, got {n}"))),
        None => match (looks_one, looks_two) {
            (true, false) => Ok(FileCase::One),
            (false, true) => Ok(FileCase::Two),
            _ => Err(CliError::Usage(
                "cannot infer the family from the roles; pass --case 1 or --case 2".into(),
            )),
        },
    }
}

/// The t-coefficients for a family-2 file: explicit `t_coeffs`, else a
/// Frobenius least-squares decomposition of theta - theta0 when "theta"
/// is present, else the closed-form t_D from the fitted constants.
pub fn resolve_t_coeffs(
    file: &OperatorFile,
    a: &HermitianOperator,
    c: &HermitianOperator,
    d: &HermitianOperator,
    theta0: &HermitianOperator,
    k: EllipticModulus,
) -> Result<(f64, f64, f64), CliError> {
    if let Some([ta, tc, td]) = file.t_coeffs {
        return Ok((ta, tc, td));
    }
    if file.has_role("theta") {
        let theta = file.operator("theta")?;
        let diff = &theta - theta0;
        let proj = |g: &HermitianOperator| -> f64 {
            let gg = ellipt_vne::algebra::frobenius_inner(g.matrix(), g.matrix()).re;
            ellipt_vne::algebra::frobenius_inner(g.matrix(), diff.matrix()).re / gg
        };
        return Ok((proj(a), proj(c), proj(d)));
    }
    let constants = ellipt_vne::solutions::fit_case2_constants(a, c, d, k)
        .map_err(|e| CliError::Verification(format!("closure fit failed: {e}")))?;
    let (alpha, delta) = constants.values;
    let k2 = k.value() * k.value();
    Ok((0.0, 0.0, (1.0 - 2.0 * k2) / (2.0 * k2) - delta / (2.0 * alpha)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_roles_and_rejects_bad_shapes() {
        let json = r#"{
            "dim": 2,
            "operators": {
                "A": [[0,0],[1,0],[1,0],[0,0]],
                "B": [[0,0],[0,-1],[0,1],[0,0]],
                "X": [[1,0],[0,0],[0,0],[-1,0]],
                "theta": [[0.5,0],[0,0],[0,0],[0.5,0]]
            }
        }"#;
        let f: OperatorFile = serde_json::from_str(json).unwrap();
        assert_eq!(resolve_case(&f, None).unwrap(), FileCase::One);
        let a = f.operator("A").unwrap();
        assert_eq!(a.dim(), 2);
        assert!(f.operator("C").is_err());
    }

    #[test]
    fn rejects_non_hermitian_role() {
        let json = r#"{
            "dim": 2,
            "operators": { "A": [[0,0],[1,0],[0.5,0],[0,0]] }
        }"#;
        let f: OperatorFile = serde_json::from_str(json).unwrap();
        assert!(f.operator("A").is_err());
    }
}
