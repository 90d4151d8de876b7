//! JSON report documents for `verify`, `derive` and `scan`.

use ellipt_vne::coefficients::CoefficientTable;
use ellipt_vne::verify::{Check, ScenarioVerification};
use serde::Serialize;

#[derive(Serialize)]
pub struct CheckDoc {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl From<&Check> for CheckDoc {
    fn from(c: &Check) -> Self {
        Self {
            name: c.name.clone(),
            value: c.value,
            tolerance: c.tolerance,
            pass: c.pass,
            note: c.note.clone(),
        }
    }
}

#[derive(Serialize)]
pub struct VerificationDoc {
    pub scenario: String,
    pub parameters: serde_json::Map<String, serde_json::Value>,
    pub checks: Vec<CheckDoc>,
    pub overall: bool,
}

impl VerificationDoc {
    pub fn new(v: &ScenarioVerification, params: &[(&'static str, f64)]) -> Self {
        let mut parameters = serde_json::Map::new();
        for (name, value) in params {
            parameters.insert(name.to_string(), serde_json::json!(value));
        }
        Self {
            scenario: v.scenario.clone(),
            parameters,
            checks: v.checks.iter().map(CheckDoc::from).collect(),
            overall: v.overall,
        }
    }
}

/// Report for operator-file verification (closure only, optionally plus
/// re-derivation).
#[derive(Serialize)]
pub struct OperatorFileDoc {
    pub operators: String,
    pub case: u8,
    pub checks: Vec<CheckDoc>,
    pub overall: bool,
}

fn table_doc(basis: [&str; 3], table: &CoefficientTable) -> serde_json::Value {
    let row = |name: &str, coeffs: &[f64; 3]| {
        serde_json::json!({
            "image_of": name,
            basis[0]: coeffs[0],
            basis[1]: coeffs[1],
            basis[2]: coeffs[2],
        })
    };
    serde_json::json!([
        row("A", &table.image_a),
        row(basis[1], &table.image_second),
        row(basis[2], &table.image_third),
        row("theta", &table.image_theta),
    ])
}

#[derive(Serialize)]
pub struct DeriveDoc {
    pub operators: String,
    pub case: u8,
    pub omega: f64,
    pub k: f64,
    pub nu: f64,
    /// Convention note: which coefficient carries the free parameter.
    pub free_parameter: String,
    pub coefficients: serde_json::Value,
    pub forced_zero_max: f64,
    pub lstsq_residual: f64,
    pub constants: serde_json::Value,
}

impl DeriveDoc {
    #[allow(clippy::too_many_arguments)]
    pub fn case1(
        path: String,
        omega: f64,
        k: f64,
        der: &ellipt_vne::coefficients::Case1Derivation,
    ) -> Self {
        Self {
            operators: path,
            case: 1,
            omega,
            k,
            nu: der.nu,
            free_parameter: "nu = b_B; the family shifts H by nu times the state".into(),
            coefficients: table_doc(["A", "B", "X"], &der.coefficients),
            forced_zero_max: der.forced_zero_max,
            lstsq_residual: der.residual,
            constants: serde_json::json!({ "alpha": der.alpha, "beta": der.beta }),
        }
    }

    pub fn case2(
        path: String,
        omega: f64,
        k: f64,
        der: &ellipt_vne::coefficients::Case2Derivation,
    ) -> Self {
        Self {
            operators: path,
            case: 2,
            omega,
            k,
            nu: der.nu,
            free_parameter: "nu = c_C; the family shifts H by nu times the state".into(),
            coefficients: table_doc(["A", "C", "D"], &der.coefficients),
            forced_zero_max: der.forced_zero_max,
            lstsq_residual: der.residual,
            constants: serde_json::json!({
                "alpha": der.alpha,
                "delta": der.delta,
                "t_D": der.t_d,
            }),
        }
    }
}

#[derive(Serialize)]
pub struct ScanPointDoc {
    pub parameters: serde_json::Map<String, serde_json::Value>,
    pub closure_residual: f64,
    pub equation_residual: f64,
    pub spectrum_drift: f64,
    /// NaN is encoded as null when the period diverges (k = 1).
    pub periodicity_defect: Option<f64>,
}

#[derive(Serialize)]
pub struct ScanDoc {
    pub scenario: String,
    pub varied: Vec<String>,
    pub points: Vec<ScanPointDoc>,
}

pub fn to_json_line<T: Serialize>(doc: &T) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("serializable");
    text.push('\n');
    text
}
