//! Flag/config-file resolution for scenario construction and run control.
//!
//! Every flag has a config-file mirror with the same name; flags win over
//! the file, the file wins over environment defaults.

use std::path::PathBuf;

use clap::Args;
use ellipt_vne::scenarios::{self, Scenario};
use serde::Deserialize;

use crate::CliError;

/// Integrator tolerance environment override.
pub const TOL_ENV_VAR: &str = "ELLIPT_VNE_TOL";

#[derive(Args, Clone, Debug, Default)]
pub struct ScenarioArgs {
    /// One of: maxwell_bloch, phase_modulation, three_level, d3_known,
    /// d3_variation.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Pulse width (maxwell_bloch, phase_modulation).
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Option<f64>,
    /// Detuning / modulation rate (maxwell_bloch, phase_modulation,
    /// three_level).
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Elliptic modulus (three_level, d3_known, d3_variation).
    #[arg(long)]
    pub k: Option<f64>,
    /// Angular frequency.
    #[arg(long, allow_hyphen_values = true)]
    pub omega: Option<f64>,
    /// Level splitting (three_level, d3_known).
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Diagonal Hamiltonian entry (d3_known).
    #[arg(long = "lambda", allow_hyphen_values = true)]
    pub lam: Option<f64>,
    /// Phase of the off-diagonal couplings.
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    /// Scale parameter (d3_variation).
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Structure constant parameter (three_level).
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Hamiltonian gauge parameter.
    #[arg(long, allow_hyphen_values = true)]
    pub nu: Option<f64>,
    /// Field coupling constant (maxwell_bloch).
    #[arg(long)]
    pub kappa: Option<f64>,
}

/// Config-file mirror of all flags; unknown keys are rejected so typos
/// surface as errors instead of silently applying defaults.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: Option<String>,
    pub tau: Option<f64>,
    pub delta: Option<f64>,
    pub k: Option<f64>,
    pub omega: Option<f64>,
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    pub phi: Option<f64>,
    pub b: Option<f64>,
    pub alpha: Option<f64>,
    pub nu: Option<f64>,
    pub kappa: Option<f64>,
    pub t: Option<String>,
    pub periods: Option<f64>,
    pub samples: Option<usize>,
    pub format: Option<String>,
    pub output: Option<String>,
    pub tol: Option<f64>,
}

pub fn load_config(path: &Option<PathBuf>) -> Result<ConfigFile, CliError> {
    match path {
        None => Ok(ConfigFile::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("malformed config {}: {e}", p.display())))
        }
    }
}

/// Scenario parameters after flag/file merging, with per-scenario defaults.
#[derive(Clone, Debug)]
pub struct ResolvedScenario {
    pub params: Vec<(&'static str, f64)>,
    pub scenario: Scenario,
}

pub fn resolve_scenario(
    args: &ScenarioArgs,
    file: &ConfigFile,
) -> Result<ResolvedScenario, CliError> {
    let name = args
        .scenario
        .clone()
        .or_else(|| file.scenario.clone())
        .ok_or_else(|| CliError::Usage("--scenario is required".into()))?;

    let pick = |flag: Option<f64>, cfg: Option<f64>, default: f64| flag.or(cfg).unwrap_or(default);

    type Built = (Vec<(&'static str, f64)>, Scenario);
    let build = |name: &str| -> Result<Built, ellipt_vne::Error> {
        match name {
            "maxwell_bloch" => {
                let tau = pick(args.tau, file.tau, 1.0);
                let delta = pick(args.delta, file.delta, 1.0);
                let kappa = pick(args.kappa, file.kappa, 1.0);
                let nu = pick(args.nu, file.nu, 0.0);
                let s = scenarios::maxwell_bloch_with(tau, delta, kappa, nu)?;
                Ok((
                    vec![("tau", tau), ("delta", delta), ("kappa", kappa), ("nu", nu)],
                    Scenario::MaxwellBloch(s),
                ))
            }
            "phase_modulation" => {
                let tau = pick(args.tau, file.tau, 1.0);
                let delta = pick(args.delta, file.delta, 1.0);
                let nu = pick(args.nu, file.nu, 0.0);
                let s = scenarios::phase_modulation_with(tau, delta, nu)?;
                Ok((
                    vec![("tau", tau), ("delta", delta), ("nu", nu)],
                    Scenario::PhaseModulation(s),
                ))
            }
            "three_level" => {
                let k = pick(args.k, file.k, 0.5);
                let alpha = pick(args.alpha, file.alpha, 2.0);
                let delta = pick(args.delta, file.delta, 1.0);
                let phi = pick(args.phi, file.phi, 0.0);
                let mu = pick(args.mu, file.mu, 1.0);
                let omega = pick(args.omega, file.omega, 2.0);
                let nu = pick(args.nu, file.nu, 0.0);
                let s = scenarios::three_level_with(k, alpha, delta, phi, mu, omega, nu)?;
                Ok((
                    vec![
                        ("k", k),
                        ("alpha", alpha),
                        ("delta", delta),
                        ("phi", phi),
                        ("mu", mu),
                        ("omega", omega),
                        ("nu", nu),
                    ],
                    Scenario::ThreeLevel(s),
                ))
            }
            "d3_known" => {
                let k = pick(args.k, file.k, 0.5);
                let omega = pick(args.omega, file.omega, 1.0);
                let phi = pick(args.phi, file.phi, 0.0);
                let lambda = pick(args.lam, file.lambda, 1.0);
                let mu = pick(args.mu, file.mu, 2.0);
                let nu = pick(args.nu, file.nu, 0.0);
                let s = scenarios::d3_known_with(k, omega, phi, lambda, mu, nu)?;
                Ok((
                    vec![
                        ("k", k),
                        ("omega", omega),
                        ("phi", phi),
                        ("lambda", lambda),
                        ("mu", mu),
                        ("nu", nu),
                    ],
                    Scenario::D3Known(s),
                ))
            }
            "d3_variation" => {
                let b = pick(args.b, file.b, 2.0);
                let omega = pick(args.omega, file.omega, 1.0);
                let phi = pick(args.phi, file.phi, 0.0);
                let k = pick(args.k, file.k, 0.7);
                let nu = pick(args.nu, file.nu, 4.0 * b);
                let s = scenarios::d3_variation_with(b, omega, phi, k, nu)?;
                Ok((
                    vec![("b", b), ("omega", omega), ("phi", phi), ("k", k), ("nu", nu)],
                    Scenario::D3Variation(s),
                ))
            }
            other => Err(ellipt_vne::Error::Domain(format!(
                "unknown scenario '{other}'"
            ))),
        }
    };

    let (params, scenario) =
        build(&name).map_err(|e| CliError::Usage(format!("scenario {name}: {e}")))?;
    Ok(ResolvedScenario { params, scenario })
}

/// Parse a `start:end` time range.
pub fn parse_time_range(spec: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!(
            "time range must be start:end, got '{spec}'"
        )));
    }
    let t0: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::Usage(format!("bad time range start '{}'", parts[0])))?;
    let t1: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::Usage(format!("bad time range end '{}'", parts[1])))?;
    if t0 >= t1 || t0.is_nan() || t1.is_nan() {
        return Err(CliError::Usage(format!(
            "time range must satisfy start < end, got {t0}:{t1}"
        )));
    }
    Ok((t0, t1))
}

/// Resolve the time grid from `--t start:end` or `--periods N` (the latter
/// measured in full elliptic periods 4 K(k)/omega from t = 0).
pub fn resolve_times(
    scenario: &Scenario,
    t_range: &Option<String>,
    periods: Option<f64>,
    samples: usize,
) -> Result<Vec<f64>, CliError> {
    if samples < 2 {
        return Err(CliError::Usage("--samples must be at least 2".into()));
    }
    if t_range.is_some() && periods.is_some() {
        return Err(CliError::Usage(
            "--t and --periods are mutually exclusive".into(),
        ));
    }
    let (t0, t1) = match (t_range, periods) {
        (Some(spec), None) => parse_time_range(spec)?,
        (None, Some(n)) => {
            if n <= 0.0 || n.is_nan() {
                return Err(CliError::Usage("--periods must be positive".into()));
            }
            let period = scenario.period().map_err(|e| {
                CliError::Usage(format!("--periods needs a finite period: {e}"))
            })?;
            (0.0, n * period)
        }
        (None, None) => match scenario.period() {
            Ok(p) => (0.0, p),
            Err(_) => {
                let w = scenario.omega().abs();
                (-10.0 / w, 10.0 / w)
            }
        },
        (Some(_), Some(_)) => unreachable!(),
    };
    Ok(ellipt_vne::dynamics::linspace(t0, t1, samples))
}

/// Integrator tolerance: flag > config > ELLIPT_VNE_TOL > default 1e-10.
pub fn resolve_tolerance(flag: Option<f64>, file: &ConfigFile) -> Result<f64, CliError> {
    if let Some(t) = flag.or(file.tol) {
        return Ok(t);
    }
    match std::env::var(TOL_ENV_VAR) {
        Ok(text) => text.parse::<f64>().map_err(|_| {
            CliError::Usage(format!("{TOL_ENV_VAR} must be a float, got '{text}'"))
        }),
        Err(_) => Ok(1e-10),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_range_parsing() {
        assert_eq!(parse_time_range("-10:10").unwrap(), (-10.0, 10.0));
        assert!(parse_time_range("10:-10").is_err());
        assert!(parse_time_range("1:1").is_err());
        assert!(parse_time_range("oops").is_err());
    }

    #[test]
    fn flags_beat_config() {
        let args = ScenarioArgs {
            scenario: Some("maxwell_bloch".into()),
            tau: Some(2.0),
            ..Default::default()
        };
        let file = ConfigFile {
            tau: Some(5.0),
            delta: Some(0.5),
            ..Default::default()
        };
        let r = resolve_scenario(&args, &file).unwrap();
        let get = |n: &str| r.params.iter().find(|(p, _)| *p == n).unwrap().1;
        assert_eq!(get("tau"), 2.0);
        assert_eq!(get("delta"), 0.5);
    }
}
