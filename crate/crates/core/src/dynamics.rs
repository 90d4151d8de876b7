//! Time evolution: right-hand sides, adaptive integration, the propagator
//! equation, the linear-part gauge transform, and conservation monitoring.
//!
//! The integrator is an explicit embedded Dormand-Prince 5(4) pair with
//! proportional step control. States advance as full complex matrices;
//! Hermiticity is monitored, never re-projected, so integrator defects
//! stay visible to the checks that exist to catch them.

use num_complex::Complex64 as C64;

use crate::algebra::{
    adjoint, exp_ith, fro_norm, spectrum_of_hermitian_part, trace, CMatrix, HermitianOperator,
    SpectrumRecord,
};
use crate::eig::hermiticity_defect;
use crate::error::{Error, Result};
use crate::superop::OperatorMap;

type BoxedRhs<'a> = Box<dyn FnMut(f64, &CMatrix) -> Result<CMatrix> + 'a>;

/// Right-hand side selector for [`integrate`].
#[derive(Clone, Debug)]
pub enum RhsSpec {
    /// `i rho-dot = [H[rho], rho]` with a linear state-dependent map.
    Map(OperatorMap),
    /// The Euler-top form `i rho-dot = [H0, rho^2]`.
    EulerTop(HermitianOperator),
}

/// `rho-dot = -i (H[rho] rho - rho H[rho])`.
///
/// Hermitian and traceless for Hermitian input, up to rounding.
pub fn vne_rhs(rho: &HermitianOperator, h: &OperatorMap) -> Result<HermitianOperator> {
    let m = vne_rhs_mat(rho.matrix(), h)?;
    Ok(HermitianOperator::new_unchecked(m))
}

pub(crate) fn vne_rhs_mat(rho: &CMatrix, h: &OperatorMap) -> Result<CMatrix> {
    let hr = h.apply(rho)?;
    let comm = hr.dot(rho) - rho.dot(&hr);
    Ok(comm.mapv(|z| -C64::i() * z))
}

/// `rho-dot = -i [H0, rho^2]`; identical to [`vne_rhs`] with the map
/// sigma -> {H0, sigma}.
pub fn euler_top_rhs(rho: &HermitianOperator, h0: &HermitianOperator) -> Result<HermitianOperator> {
    if rho.dim() != h0.dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: h0.dim(),
        });
    }
    Ok(HermitianOperator::new_unchecked(euler_top_rhs_mat(
        rho.matrix(),
        h0.matrix(),
    )))
}

pub(crate) fn euler_top_rhs_mat(rho: &CMatrix, h0: &CMatrix) -> CMatrix {
    let rho2 = rho.dot(rho);
    let comm = h0.dot(&rho2) - rho2.dot(h0);
    comm.mapv(|z| -C64::i() * z)
}

/// Step-size and tolerance settings for the embedded pair.
#[derive(Clone, Copy, Debug)]
pub struct IntegrationControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for IntegrationControl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 2_000_000,
        }
    }
}

impl IntegrationControl {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Difference between the 5th-order weights and the embedded 4th-order ones.
const DP_ERR: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// March `rhs` from (times[0], y0) and record the state at every requested
/// time. Times must be strictly increasing.
pub(crate) fn dp5_integrate(
    rhs: &mut dyn FnMut(f64, &CMatrix) -> Result<CMatrix>,
    y0: CMatrix,
    times: &[f64],
    control: &IntegrationControl,
) -> Result<Vec<CMatrix>> {
    if times.len() < 2 {
        return Err(Error::Domain("need at least two output times".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0] || w[0].is_nan() || w[1].is_nan()) {
        return Err(Error::Domain("output times must be strictly increasing".into()));
    }

    let mut outputs = Vec::with_capacity(times.len());
    outputs.push(y0.clone());

    let mut t = times[0];
    let mut y = y0;
    let mut f = rhs(t, &y)?;

    // Initial step heuristic from the state and slope scales.
    let span = times[times.len() - 1] - times[0];
    let y_scale = fro_norm(&y).max(control.abs_tol);
    let f_scale = fro_norm(&f);
    let mut h = if f_scale > 1e-14 {
        (0.01 * y_scale / f_scale).min(span / 10.0)
    } else {
        span / 100.0
    };

    let mut steps = 0usize;
    for &t_out in &times[1..] {
        while t < t_out {
            if steps >= control.max_steps {
                return Err(Error::IntegrationFailure {
                    t,
                    last_state: Box::new(y),
                });
            }
            steps += 1;
            // A step clipped to land on an output time may be arbitrarily
            // short; only an underflow of the controller's own step size
            // signals stiffness.
            let remaining = t_out - t;
            let clipped = remaining <= h;
            let h_try = if clipped { remaining } else { h };
            if !clipped && h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
                return Err(Error::IntegrationFailure {
                    t,
                    last_state: Box::new(y),
                });
            }

            let mut k: Vec<CMatrix> = Vec::with_capacity(7);
            k.push(f.clone());
            for stage in 0..6 {
                let mut arg = y.clone();
                for (j, kj) in k.iter().enumerate() {
                    let a = DP_A[stage][j];
                    if a != 0.0 {
                        arg = arg + kj.mapv(|z| z * (a * h_try));
                    }
                }
                k.push(rhs(t + DP_C[stage + 1] * h_try, &arg)?);
            }
            // 5th-order solution is the stage-6 argument with the b-row,
            // which equals the last A row (FSAL pair).
            let mut y_new = y.clone();
            for (j, kj) in k.iter().take(6).enumerate() {
                let b = DP_A[5][j];
                if b != 0.0 {
                    y_new = y_new + kj.mapv(|z| z * (b * h_try));
                }
            }

            let mut err_sq = 0.0_f64;
            let n_entries = y.len() as f64;
            {
                let mut err_mat = CMatrix::zeros(y.raw_dim());
                for (j, kj) in k.iter().enumerate() {
                    let e = DP_ERR[j];
                    if e != 0.0 {
                        err_mat = err_mat + kj.mapv(|z| z * (e * h_try));
                    }
                }
                for ((e, yo), yn) in err_mat.iter().zip(y.iter()).zip(y_new.iter()) {
                    let scale = control.abs_tol + control.rel_tol * yo.norm().max(yn.norm());
                    let r = e.norm() / scale;
                    err_sq += r * r;
                }
            }
            let err = (err_sq / n_entries).sqrt();

            if err <= 1.0 {
                t = if clipped { t_out } else { t + h_try };
                y = y_new;
                f = k.pop().expect("seven stages"); // FSAL reuse
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                // Never let an output-clipped step shrink the controller's
                // step size.
                h = if clipped {
                    h.max(h_try * factor)
                } else {
                    h_try * factor
                };
            } else {
                h = h_try * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            }
        }
        outputs.push(y.clone());
    }
    Ok(outputs)
}

/// Per-sample diagnostics alongside the integrated (or analytic) states.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
    pub traces: Vec<C64>,
    pub spectra: Vec<SpectrumRecord>,
    pub hermiticity_defects: Vec<f64>,
    /// Frobenius distance to an analytic reference, when one was attached.
    pub residuals: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn from_states(times: Vec<f64>, states: Vec<CMatrix>) -> Result<Self> {
        if times.len() != states.len() || times.is_empty() {
            return Err(Error::Domain("one state per time required".into()));
        }
        let mut traces = Vec::with_capacity(states.len());
        let mut spectra = Vec::with_capacity(states.len());
        let mut defects = Vec::with_capacity(states.len());
        for s in &states {
            traces.push(trace(s));
            spectra.push(spectrum_of_hermitian_part(s)?);
            defects.push(hermiticity_defect(s));
        }
        Ok(Self {
            times,
            states,
            traces,
            spectra,
            hermiticity_defects: defects,
            residuals: None,
        })
    }

    /// Attach per-sample Frobenius distances to an analytic reference.
    pub fn with_reference(
        mut self,
        mut reference: impl FnMut(f64) -> Result<CMatrix>,
    ) -> Result<Self> {
        let mut residuals = Vec::with_capacity(self.times.len());
        for (t, s) in self.times.iter().zip(self.states.iter()) {
            let r = reference(*t)?;
            residuals.push(fro_norm(&(s - &r)));
        }
        self.residuals = Some(residuals);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Piecewise-linear interpolant of the samples; error is second order
    /// in the sample spacing.
    pub fn interpolator(&self) -> impl Fn(f64) -> CMatrix + '_ {
        move |t: f64| {
            let times = &self.times;
            let idx = match times.binary_search_by(|v| v.total_cmp(&t)) {
                Ok(i) => return self.states[i].clone(),
                Err(i) => i,
            };
            if idx == 0 {
                return self.states[0].clone();
            }
            if idx >= times.len() {
                return self.states[times.len() - 1].clone();
            }
            let (t0, t1) = (times[idx - 1], times[idx]);
            let w = (t - t0) / (t1 - t0);
            let a = &self.states[idx - 1];
            let b = &self.states[idx];
            a.mapv(|z| z * (1.0 - w)) + b.mapv(|z| z * w)
        }
    }
}

/// Evenly spaced grid helper.
pub fn linspace(t0: f64, t1: f64, samples: usize) -> Vec<f64> {
    assert!(samples >= 2);
    let dt = (t1 - t0) / (samples - 1) as f64;
    (0..samples).map(|i| t0 + dt * i as f64).collect()
}

/// Integrate the chosen equation of motion from `rho0` (the state at
/// `times[0]`) and sample at `times`.
pub fn integrate(
    rho0: &HermitianOperator,
    rhs: &RhsSpec,
    times: &[f64],
    control: &IntegrationControl,
) -> Result<Trajectory> {
    let mut f: BoxedRhs = match rhs {
        RhsSpec::Map(h) => {
            let h = h.clone();
            Box::new(move |_t, y: &CMatrix| vne_rhs_mat(y, &h))
        }
        RhsSpec::EulerTop(h0) => {
            let h0 = h0.matrix().clone();
            Box::new(move |_t, y: &CMatrix| Ok(euler_top_rhs_mat(y, &h0)))
        }
    };
    let states = dp5_integrate(&mut f, rho0.matrix().clone(), times, control)?;
    Trajectory::from_states(times.to_vec(), states)
}

/// The unitary family U_t solving `dU/dt = i U H[rho_t]`, `U_0 = 1`, so
/// that
/// rho_t = U_t^dagger rho_0 U_t.
#[derive(Clone, Debug)]
pub struct Propagator {
    pub times: Vec<f64>,
    pub unitaries: Vec<CMatrix>,
    pub unitarity_defects: Vec<f64>,
}

impl Propagator {
    /// Reconstruct rho_t = U_t^dagger rho_0 U_t at every sample.
    pub fn reconstruct(&self, rho0: &HermitianOperator) -> Vec<CMatrix> {
        self.unitaries
            .iter()
            .map(|u| adjoint(u).dot(rho0.matrix()).dot(u))
            .collect()
    }
}

/// Integrate the propagator equation along a state history `rho_of_t`
/// (analytic callback preferred; see [`Trajectory::interpolator`] for the
/// sampled fallback).
pub fn integrate_propagator(
    mut rho_of_t: impl FnMut(f64) -> Result<CMatrix>,
    h: &OperatorMap,
    times: &[f64],
    control: &IntegrationControl,
) -> Result<Propagator> {
    let dim = h.dim();
    let mut f = |t: f64, u: &CMatrix| -> Result<CMatrix> {
        let h_t = h.apply(&rho_of_t(t)?)?;
        Ok(u.dot(&h_t).mapv(|z| C64::i() * z))
    };
    let unitaries = dp5_integrate(&mut f, CMatrix::eye(dim), times, control)?;
    let unitarity_defects = unitaries
        .iter()
        .map(|u| {
            let uu = u.dot(&adjoint(u));
            fro_norm(&(uu - CMatrix::eye(dim)))
        })
        .collect();
    Ok(Propagator {
        times: times.to_vec(),
        unitaries,
        unitarity_defects,
    })
}

/// Direction of the similarity transform sigma_t = e^{i t H0} rho_t e^{-i t H0}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaugeDirection {
    /// rho -> sigma.
    Forward,
    /// sigma -> rho.
    Inverse,
}

/// Conjugation by e^{i t H0}, used to add or remove the linear part
/// (Tr sigma) H0 of a Hamiltonian map.
#[derive(Clone, Debug)]
pub struct GaugeTransform {
    h0: HermitianOperator,
    direction: GaugeDirection,
}

impl GaugeTransform {
    pub fn new(h0: HermitianOperator, direction: GaugeDirection) -> Self {
        Self { h0, direction }
    }

    pub fn forward(h0: HermitianOperator) -> Self {
        Self::new(h0, GaugeDirection::Forward)
    }

    pub fn h0(&self) -> &HermitianOperator {
        &self.h0
    }

    pub fn direction(&self) -> GaugeDirection {
        self.direction
    }

    /// Apply the transform at time t in its stated direction.
    pub fn apply(&self, t: f64, state: &CMatrix) -> CMatrix {
        let sign = match self.direction {
            GaugeDirection::Forward => 1.0,
            GaugeDirection::Inverse => -1.0,
        };
        let u = exp_ith(&self.h0, sign * t);
        let uh = adjoint(&u);
        u.dot(state).dot(&uh)
    }

    /// Covariance defect `|| H[U rho U*] - U H[rho] U* || / scale` at one
    /// sample; the transform is only valid when this vanishes along the
    /// whole trajectory.
    pub fn covariance_defect(&self, h: &OperatorMap, t: f64, state: &CMatrix) -> Result<f64> {
        let transformed = self.apply(t, state);
        let lhs = h.apply(&transformed)?;
        let rhs = self.apply(t, &h.apply(state)?);
        let scale = fro_norm(&rhs).max(fro_norm(state)).max(1.0);
        Ok(fro_norm(&(lhs - rhs)) / scale)
    }
}

/// Tolerance on the sampled covariance condition.
pub const COVARIANCE_TOL: f64 = 1e-9;

/// Number of trajectory samples on which the covariance condition is
/// verified before transforming.
pub const COVARIANCE_SAMPLES: usize = 32;

/// Result of [`gauge_forward`].
#[derive(Clone, Debug)]
pub struct GaugedTrajectory {
    /// `K[sigma] = H[sigma] - (Tr sigma) H0`.
    pub k_map: OperatorMap,
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
}

/// Check the covariance condition on up to [`COVARIANCE_SAMPLES`] of the
/// supplied states, then return the gauge-fixed map
/// `K[sigma] = H[sigma] - (Tr sigma) H0` together with the transformed
/// states `sigma_t = e^{i t H0} rho_t e^{-i t H0}`.
pub fn gauge_forward(
    gauge: &GaugeTransform,
    h: &OperatorMap,
    times: &[f64],
    states: &[CMatrix],
) -> Result<GaugedTrajectory> {
    gauge_forward_sampled(gauge, h, times, states, COVARIANCE_SAMPLES)
}

/// [`gauge_forward`] with an explicit covariance sampling density.
pub fn gauge_forward_sampled(
    gauge: &GaugeTransform,
    h: &OperatorMap,
    times: &[f64],
    states: &[CMatrix],
    covariance_samples: usize,
) -> Result<GaugedTrajectory> {
    if times.len() != states.len() || times.is_empty() {
        return Err(Error::Domain("one state per time required".into()));
    }
    let stride = (times.len() / covariance_samples.max(1)).max(1);
    for i in (0..times.len()).step_by(stride) {
        let defect = gauge.covariance_defect(h, times[i], &states[i])?;
        if defect > COVARIANCE_TOL {
            return Err(Error::GaugeInvalid {
                t: times[i],
                defect,
                tol: COVARIANCE_TOL,
            });
        }
    }

    let h0 = gauge.h0().matrix().clone();
    let dim = h.dim();
    let h_clone = h.clone();
    let k_map = OperatorMap::from_linear_fn(dim, move |s| {
        let tr = trace(s);
        h_clone.apply(s).expect("dimension checked") - h0.mapv(|z| z * tr)
    });

    let transformed = times
        .iter()
        .zip(states.iter())
        .map(|(&t, s)| gauge.apply(t, s))
        .collect();

    Ok(GaugedTrajectory {
        k_map,
        times: times.to_vec(),
        states: transformed,
    })
}

/// Scalar conservation summary of a trajectory.
#[derive(Clone, Copy, Debug)]
pub struct ConservationReport {
    pub max_trace_drift: f64,
    pub max_spectrum_drift: f64,
    pub max_hermiticity_defect: f64,
    pub max_reference_residual: Option<f64>,
}

/// Drifts of trace, spectrum and Hermiticity along a trajectory, plus the
/// largest distance to the analytic reference when one was attached.
pub fn conservation_report(traj: &Trajectory) -> ConservationReport {
    let tr0 = traj.traces[0];
    let max_trace_drift = traj
        .traces
        .iter()
        .map(|tr| (tr - tr0).norm())
        .fold(0.0, f64::max);
    let s0 = &traj.spectra[0];
    let max_spectrum_drift = traj.spectra.iter().map(|s| s.drift(s0)).fold(0.0, f64::max);
    let max_hermiticity_defect = traj
        .hermiticity_defects
        .iter()
        .copied()
        .fold(0.0, f64::max);
    let max_reference_residual = traj
        .residuals
        .as_ref()
        .map(|r| r.iter().copied().fold(0.0, f64::max));
    ConservationReport {
        max_trace_drift,
        max_spectrum_drift,
        max_hermiticity_defect,
        max_reference_residual,
    }
}

/// Worst equation-of-motion residual of an analytic family over a grid,
/// relative to the norm of the initial state:
/// `max_t || rho-dot(t) - (-i)[H[rho(t)], rho(t)] ||_F / || rho(0) ||_F`.
pub fn equation_residual(
    state: &dyn Fn(f64) -> Result<HermitianOperator>,
    derivative: &dyn Fn(f64) -> Result<HermitianOperator>,
    h: &OperatorMap,
    times: &[f64],
) -> Result<f64> {
    let scale = state(times[0])?.fro_norm().max(f64::MIN_POSITIVE);
    let mut worst = 0.0_f64;
    for &t in times {
        let rho = state(t)?;
        let rhs = vne_rhs(&rho, h)?;
        let lhs = derivative(t)?;
        worst = worst.max((&lhs - &rhs).fro_norm() / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{cmplx, pauli, HermitianOperator};
    use crate::scenarios;
    use crate::superop::{ComplementRule, OperatorMap};

    #[test]
    fn vne_rhs_vanishes_for_commuting_pair() {
        // Diagonal rho and a map with diagonal images commute.
        let rho = HermitianOperator::diagonal(&[0.3, 0.7]);
        let h = OperatorMap::from_linear_fn(2, |s| {
            let mut out = s.clone();
            out[(0, 1)] = cmplx(0.0, 0.0);
            out[(1, 0)] = cmplx(0.0, 0.0);
            out
        });
        let r = vne_rhs(&rho, &h).unwrap();
        assert!(r.is_zero(1e-15));
    }

    #[test]
    fn vne_rhs_matches_hand_commutator() {
        // rho = (1 + s3)/2, H[rho] = s1/2: rhs = -i[s1/2, rho] = -s2/2.
        let rho = HermitianOperator::new(
            (pauli::sigma_z_mat() + CMatrix::eye(2)).mapv(|z| z * 0.5),
        )
        .unwrap();
        let h = OperatorMap::from_action(
            2,
            &[(rho.clone(), pauli::sigma_x().scale(0.5))],
            ComplementRule::Zero,
        )
        .unwrap();
        let r = vne_rhs(&rho, &h).unwrap();
        let want = pauli::sigma_y().scale(-0.5);
        assert!((&r - &want).is_zero(1e-13));
    }

    #[test]
    fn vne_rhs_is_traceless() {
        let s = scenarios::d3_known(0.5, 1.0, 0.0, 1.0, 2.0).unwrap();
        let h = s.system.hamiltonian().unwrap();
        let rho = s.system.state(0.9).unwrap();
        let r = vne_rhs(&rho, &h).unwrap();
        assert!(r.trace().abs() < 1e-13);
    }

    #[test]
    fn vne_rhs_agrees_with_analytic_derivative() {
        let s = scenarios::d3_known(0.5, 1.0, 0.0, 1.0, 2.0).unwrap();
        let h = s.system.hamiltonian().unwrap();
        let rho0 = s.system.state(0.0).unwrap();
        let r = vne_rhs(&rho0, &h).unwrap();
        let want = s.system.b().scale(s.system.omega());
        assert!((&r - &want).is_zero(1e-10));
    }

    #[test]
    fn euler_top_vanishes_for_commuting_projection() {
        let h0 = HermitianOperator::diagonal(&[1.0, 2.0]);
        let p = HermitianOperator::diagonal(&[1.0, 0.0]);
        let r = euler_top_rhs(&p, &h0).unwrap();
        assert!(r.is_zero(1e-15));
    }

    #[test]
    fn euler_top_equals_anticommutator_map() {
        let h0 = HermitianOperator::new(ndarray::array![
            [cmplx(0.4, 0.0), cmplx(0.1, -0.6)],
            [cmplx(0.1, 0.6), cmplx(-1.1, 0.0)]
        ])
        .unwrap();
        let map = OperatorMap::from_linear_fn(2, {
            let h0 = h0.matrix().clone();
            move |s| crate::algebra::anticommutator_mat(&h0, s)
        });
        let rho = HermitianOperator::new(ndarray::array![
            [cmplx(0.9, 0.0), cmplx(-0.2, 0.3)],
            [cmplx(-0.2, -0.3), cmplx(0.1, 0.0)]
        ])
        .unwrap();
        let a = euler_top_rhs(&rho, &h0).unwrap();
        let b = vne_rhs(&rho, &map).unwrap();
        assert!((&a - &b).is_zero(1e-12));
    }

    #[test]
    fn zero_map_gives_constant_trajectory() {
        let rho0 = HermitianOperator::diagonal(&[1.0, 0.0]);
        let times = linspace(0.0, 5.0, 21);
        let traj = integrate(
            &rho0,
            &RhsSpec::Map(OperatorMap::zero(2)),
            &times,
            &IntegrationControl::default(),
        )
        .unwrap();
        let report = conservation_report(&traj);
        assert_eq!(report.max_trace_drift, 0.0);
        assert_eq!(report.max_spectrum_drift, 0.0);
        for s in &traj.states {
            assert!(fro_norm(&(s - rho0.matrix())) == 0.0);
        }
    }

    #[test]
    fn integration_tracks_analytic_maxwell_bloch() {
        let s = scenarios::maxwell_bloch(1.0, 1.0).unwrap();
        let sys = &s.system;
        let h = sys.hamiltonian().unwrap();
        let times = linspace(-10.0, 10.0, 81);
        let rho_start = sys.state(times[0]).unwrap();
        let traj = integrate(
            &rho_start,
            &RhsSpec::Map(h),
            &times,
            &IntegrationControl::default(),
        )
        .unwrap()
        .with_reference(|t| Ok(sys.state(t)?.into_matrix()))
        .unwrap();
        let report = conservation_report(&traj);
        assert!(report.max_reference_residual.unwrap() < 1e-6);
        assert!(report.max_spectrum_drift < 1e-8);
        // Eigenvalues stay {0, 1}: the state is a projection.
        for sp in &traj.spectra {
            assert!((sp.eigenvalues()[0] - 0.0).abs() < 1e-9);
            assert!((sp.eigenvalues()[1] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn integration_returns_to_start_after_one_period() {
        let s = scenarios::d3_known(0.5, 1.0, 0.0, 1.0, 2.0).unwrap();
        let sys = &s.system;
        let h = sys.hamiltonian().unwrap();
        let period = sys.period().unwrap();
        let times = linspace(0.0, period, 65);
        let rho0 = sys.state(0.0).unwrap();
        let traj = integrate(
            &rho0,
            &RhsSpec::Map(h),
            &times,
            &IntegrationControl::default(),
        )
        .unwrap();
        let last = traj.states.last().unwrap();
        assert!(fro_norm(&(last - rho0.matrix())) < 1e-6);
    }

    #[test]
    fn propagator_of_zero_map_is_identity() {
        let times = linspace(0.0, 3.0, 11);
        let p = integrate_propagator(
            |_| Ok(CMatrix::eye(2)),
            &OperatorMap::zero(2),
            &times,
            &IntegrationControl::default(),
        )
        .unwrap();
        for u in &p.unitaries {
            assert!(fro_norm(&(u - &CMatrix::eye(2))) == 0.0);
        }
    }

    #[test]
    fn propagator_reconstructs_maxwell_bloch() {
        let s = scenarios::maxwell_bloch(1.0, 1.0).unwrap();
        let sys = &s.system;
        let h = sys.hamiltonian().unwrap();
        let times = linspace(-10.0, 10.0, 41);
        let rho_start = sys.state(times[0]).unwrap();
        let p = integrate_propagator(
            |t| Ok(sys.state(t)?.into_matrix()),
            &h,
            &times,
            &IntegrationControl::default(),
        )
        .unwrap();
        assert!(fro_norm(&(&p.unitaries[0] - &CMatrix::eye(2))) == 0.0);
        for d in &p.unitarity_defects {
            assert!(*d < 1e-8);
        }
        let rebuilt = p.reconstruct(&rho_start);
        for (u_rho, &t) in rebuilt.iter().zip(times.iter()) {
            let want = sys.state(t).unwrap();
            assert!(fro_norm(&(u_rho - want.matrix())) < 1e-6, "t = {t}");
            let sp = spectrum_of_hermitian_part(u_rho).unwrap();
            assert!((sp.eigenvalues()[0]).abs() < 1e-9);
            assert!((sp.eigenvalues()[1] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn propagator_from_interpolated_trajectory() {
        // The sampled fallback: linear interpolation of a dense trajectory
        // drives the propagator to second order in the sample spacing.
        let s = scenarios::maxwell_bloch(1.0, 1.0).unwrap();
        let sys = &s.system;
        let h = sys.hamiltonian().unwrap();
        let dense = linspace(-3.0, 3.0, 1201);
        let rho_start = sys.state(dense[0]).unwrap();
        let traj = integrate(
            &rho_start,
            &RhsSpec::Map(h.clone()),
            &dense,
            &IntegrationControl::default(),
        )
        .unwrap();
        let interp = traj.interpolator();
        let out_times = linspace(-3.0, 3.0, 25);
        let p = integrate_propagator(
            |t| Ok(interp(t)),
            &h,
            &out_times,
            &IntegrationControl::default(),
        )
        .unwrap();
        for (u_rho, &t) in p.reconstruct(&rho_start).iter().zip(out_times.iter()) {
            let want = sys.state(t).unwrap();
            assert!(fro_norm(&(u_rho - want.matrix())) < 1e-4, "t = {t}");
        }
    }

    #[test]
    fn trivial_gauge_is_identity() {
        let s = scenarios::maxwell_bloch(1.0, 1.0).unwrap();
        let sys = &s.system;
        let h = sys.hamiltonian().unwrap();
        let times = linspace(-2.0, 2.0, 9);
        let states: Vec<CMatrix> = times
            .iter()
            .map(|&t| sys.state(t).unwrap().into_matrix())
            .collect();
        let gauge = GaugeTransform::forward(HermitianOperator::zero(2));
        let out = gauge_forward(&gauge, &h, &times, &states).unwrap();
        for (a, b) in out.states.iter().zip(states.iter()) {
            assert!(fro_norm(&(a - b)) == 0.0);
        }
        // K = H when H0 = 0.
        for (i, (t, s)) in times.iter().zip(states.iter()).enumerate() {
            let _ = i;
            let k_img = out.k_map.apply(s).unwrap();
            let h_img = h.apply(s).unwrap();
            assert!(fro_norm(&(k_img - h_img)) < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn gauge_rejects_covariance_violation() {
        // A generic map does not commute with the conjugation.
        let h = OperatorMap::from_action(
            2,
            &[(pauli::sigma_x(), pauli::sigma_x())],
            ComplementRule::Zero,
        )
        .unwrap();
        let gauge = GaugeTransform::forward(pauli::sigma_z());
        let times = linspace(0.0, 1.0, 8);
        let states: Vec<CMatrix> = times.iter().map(|_| pauli::sigma_x_mat()).collect();
        let err = gauge_forward(&gauge, &h, &times, &states);
        assert!(matches!(err, Err(Error::GaugeInvalid { .. })));
    }

    #[test]
    fn constant_trajectory_reports_zero_drift() {
        let rho0 = HermitianOperator::diagonal(&[0.25, 0.75]);
        let times = linspace(0.0, 1.0, 5);
        let states = vec![rho0.matrix().clone(); 5];
        let traj = Trajectory::from_states(times, states).unwrap();
        let report = conservation_report(&traj);
        assert_eq!(report.max_trace_drift, 0.0);
        assert_eq!(report.max_spectrum_drift, 0.0);
        assert_eq!(report.max_hermiticity_defect, 0.0);
    }

    #[test]
    fn dense_output_grid_does_not_stall_the_controller() {
        // Output spacing far below the natural step: every step is clipped
        // and rounding leaves sub-ulp gaps; neither may shrink the
        // controller step or trip the underflow guard.
        let s = scenarios::maxwell_bloch(1.0, 1.0).unwrap();
        let sys = &s.system;
        let h = sys.hamiltonian().unwrap();
        let times = linspace(0.0, 10.0 / 3.0, 1777);
        let rho0 = sys.state(0.0).unwrap();
        let traj = integrate(
            &rho0,
            &RhsSpec::Map(h),
            &times,
            &IntegrationControl::default(),
        )
        .unwrap()
        .with_reference(|t| Ok(sys.state(t)?.into_matrix()))
        .unwrap();
        let worst = traj
            .residuals
            .unwrap()
            .into_iter()
            .fold(0.0_f64, f64::max);
        assert!(worst < 1e-7, "max residual {worst:.3e}");
    }

    #[test]
    fn step_size_underflow_is_reported() {
        // A right-hand side with a hard singularity inside the span forces
        // the controller to shrink h past the floor.
        let mut f = |t: f64, _y: &CMatrix| -> Result<CMatrix> {
            let mut m = CMatrix::zeros((1, 1));
            m[(0, 0)] = cmplx(1.0 / (1.0 - t), 0.0);
            Ok(m)
        };
        let err = dp5_integrate(
            &mut f,
            CMatrix::zeros((1, 1)),
            &[0.0, 2.0],
            &IntegrationControl::default(),
        );
        assert!(matches!(err, Err(Error::IntegrationFailure { .. })));
    }
}
