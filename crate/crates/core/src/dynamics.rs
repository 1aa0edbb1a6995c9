//! Fixed-step RK4 driver shared by both equations of motion.
//!
//! A step is the classical four-stage Runge-Kutta update on the 4x4 matrix
//! ODE followed by a projection back onto the state manifold: re-Hermitize,
//! reject if the spectrum went visibly negative, clamp the numerical kernel
//! to zero and renormalise the trace. Both SEAQT and Lindblad trajectories go
//! through this exact code so that cross-framework comparisons differ only in
//! the generator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::MeasureSet;
use crate::qmat::{eig_hermitian, func_on_support, CMatrix, C64, KERNEL_THRESHOLD};
use crate::states::{CompositeHamiltonian, DensityMatrix};

/// Post-step eigenvalues below this are treated as a failed step.
pub const PSD_REJECT_TOL: f64 = 1e-6;

/// Max-abs of the dissipative term under which a state counts as stationary.
pub const STATIONARY_TOL: f64 = 1e-9;

/// A generator `drho/dt = -i[H, rho] + dissipative(rho)`.
pub trait Dynamics {
    fn hamiltonian(&self) -> &CompositeHamiltonian;

    fn kappa(&self) -> f64 {
        KERNEL_THRESHOLD
    }

    /// The non-Hamiltonian part of the right-hand side, already carrying its
    /// sign and rate prefactors.
    fn dissipative(&self, rho: &CMatrix) -> Result<CMatrix>;

    /// Inverse temperature of an attached reservoir, if any. Used for the
    /// entropy-flow correction in the entropy generation.
    fn reservoir_beta(&self) -> Option<f64> {
        None
    }

    fn rhs(&self, rho: &CMatrix) -> Result<CMatrix> {
        Ok(symplectic(self.hamiltonian().matrix(), rho) + self.dissipative(rho)?)
    }

    /// `dS/dt = -Tr(drho/dt B ln rho)`; the commutator drops out exactly.
    fn entropy_rate(&self, rho: &DensityMatrix) -> Result<f64> {
        let log = func_on_support(&eig_hermitian(rho)?, f64::ln, self.kappa())?;
        Ok(-self.dissipative(rho)?.trace_product(&log).re)
    }
}

/// `-i [H, rho]` with hbar = 1.
pub fn symplectic(h: &CMatrix, rho: &CMatrix) -> CMatrix {
    (h * rho - rho * h).scale_c(C64::new(0.0, -1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Stationarity,
    TEnd,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Stationarity => "stationarity",
            Termination::TEnd => "t_end",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrationSettings {
    pub dt: f64,
    pub t_end: f64,
    /// Record every `sample_stride`-th step (the final state is always kept).
    pub sample_stride: usize,
    pub stop_at_stationary: bool,
    pub stationary_tol: f64,
    /// Reference state for the relative-entropy column; `None` uses the
    /// initial state.
    pub reference: Option<DensityMatrix>,
}

impl Default for IntegrationSettings {
    fn default() -> Self {
        IntegrationSettings {
            dt: 1e-3,
            t_end: 10.0,
            sample_stride: 10,
            stop_at_stationary: true,
            stationary_tol: STATIONARY_TOL,
            reference: None,
        }
    }
}

impl IntegrationSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t_end must be non-negative, got {}",
                self.t_end
            )));
        }
        if self.sample_stride == 0 {
            return Err(Error::InvalidParameter("sample_stride must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub measures: Vec<MeasureSet>,
    pub entropy_rate: Vec<f64>,
    /// Cumulative entropy generation since t = 0.
    pub entropy_generation: Vec<f64>,
    /// Max-abs of the dissipative term at each sample.
    pub dissipation: Vec<f64>,
    pub stationary_time: Option<f64>,
    pub terminated_by: Termination,
    pub reservoir_beta: Option<f64>,
}

impl EvolutionTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn initial(&self) -> &DensityMatrix {
        &self.states[0]
    }

    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("trace holds at least the initial sample")
    }

    pub fn final_measures(&self) -> &MeasureSet {
        self.measures.last().expect("trace holds at least the initial sample")
    }

    pub fn stationary_reached(&self) -> bool {
        self.stationary_time.is_some()
    }

    pub fn series(&self, f: impl Fn(&MeasureSet) -> f64) -> Vec<f64> {
        self.measures.iter().map(f).collect()
    }
}

/// First time a sampled series goes from above `level` to at or below it,
/// linearly interpolated between the bracketing samples.
pub fn first_crossing(times: &[f64], values: &[f64], level: f64) -> Option<f64> {
    if values.first().is_some_and(|&v| v <= level) {
        return None;
    }
    for k in 1..times.len().min(values.len()) {
        let (v0, v1) = (values[k - 1], values[k]);
        if v0 > level && v1 <= level {
            let frac = (v0 - level) / (v0 - v1);
            return Some(times[k - 1] + frac * (times[k] - times[k - 1]));
        }
    }
    None
}

/// Hermitize, check, clamp the kernel and renormalise.
pub fn project_state(m: &CMatrix, kappa: f64, time: f64) -> Result<DensityMatrix> {
    let herm = m.hermitian_part();
    let eig = eig_hermitian(&herm)?;
    let min = eig.values()[0];
    if min < -PSD_REJECT_TOL || !min.is_finite() {
        return Err(Error::StepRejected {
            time,
            violation: -min,
        });
    }
    let total: f64 = eig.values().iter().filter(|&&w| w > kappa).sum();
    let projected = eig.rebuild(|w| if w > kappa { w / total } else { 0.0 });
    Ok(DensityMatrix::assume_valid(projected.hermitian_part()))
}

fn rk4_step<D: Dynamics + ?Sized>(dynamics: &D, rho: &CMatrix, k1: &CMatrix, dt: f64) -> Result<CMatrix> {
    let k2 = dynamics.rhs(&(*rho + k1.scale(0.5 * dt)))?;
    let k3 = dynamics.rhs(&(*rho + k2.scale(0.5 * dt)))?;
    let k4 = dynamics.rhs(&(*rho + k3.scale(dt)))?;
    Ok(*rho + (*k1 + (k2 + k3).scale(2.0) + k4).scale(dt / 6.0))
}

struct Recorder<'a> {
    trace: EvolutionTrace,
    h: &'a CompositeHamiltonian,
    reference: DensityMatrix,
    kappa: f64,
    beta: f64,
}

impl Recorder<'_> {
    fn push<D: Dynamics + ?Sized>(&mut self, dynamics: &D, t: f64, rho: &DensityMatrix, diss: f64) -> Result<()> {
        let m = MeasureSet::evaluate(rho, self.h, Some(&self.reference), self.kappa);
        let rate = dynamics.entropy_rate(rho)?;
        let sgen = match self.trace.measures.first() {
            Some(m0) => (m.entropy - m0.entropy) - self.beta * (m.energy - m0.energy),
            None => 0.0,
        };
        self.trace.times.push(t);
        self.trace.states.push(*rho);
        self.trace.measures.push(m);
        self.trace.entropy_rate.push(rate);
        self.trace.entropy_generation.push(sgen);
        self.trace.dissipation.push(diss);
        Ok(())
    }
}

/// Integrates `dynamics` from `rho0` and samples every measure along the way.
pub fn integrate<D: Dynamics + ?Sized>(
    dynamics: &D,
    rho0: &DensityMatrix,
    settings: &IntegrationSettings,
) -> Result<EvolutionTrace> {
    settings.validate()?;
    let kappa = dynamics.kappa();
    let mut rec = Recorder {
        trace: EvolutionTrace {
            times: Vec::new(),
            states: Vec::new(),
            measures: Vec::new(),
            entropy_rate: Vec::new(),
            entropy_generation: Vec::new(),
            dissipation: Vec::new(),
            stationary_time: None,
            terminated_by: Termination::TEnd,
            reservoir_beta: dynamics.reservoir_beta(),
        },
        h: dynamics.hamiltonian(),
        reference: settings.reference.unwrap_or(*rho0),
        kappa,
        beta: dynamics.reservoir_beta().unwrap_or(0.0),
    };

    let n_steps = (settings.t_end / settings.dt - 1e-9).ceil().max(0.0) as usize;
    let mut rho = *rho0;
    let mut last_recorded = usize::MAX;
    for n in 0..=n_steps {
        let t = (n as f64 * settings.dt).min(settings.t_end);
        let h_part = symplectic(dynamics.hamiltonian().matrix(), &rho);
        let d_part = dynamics.dissipative(&rho)?;
        let diss = d_part.max_abs();
        let stationary = diss < settings.stationary_tol;
        if stationary && rec.trace.stationary_time.is_none() {
            rec.trace.stationary_time = Some(t);
        }
        let stop = n == n_steps || (stationary && settings.stop_at_stationary);
        if n % settings.sample_stride == 0 || stop {
            rec.push(dynamics, t, &rho, diss)?;
            last_recorded = n;
        }
        if stop {
            if stationary && settings.stop_at_stationary {
                rec.trace.terminated_by = Termination::Stationarity;
            }
            break;
        }
        let t_next = ((n + 1) as f64 * settings.dt).min(settings.t_end);
        let k1 = h_part + d_part;
        let next = rk4_step(dynamics, &rho, &k1, t_next - t)?;
        rho = project_state(&next, kappa, t_next)?;
    }
    debug_assert!(last_recorded != usize::MAX);
    log::debug!(
        "trajectory finished at t = {} ({}), {} samples",
        rec.trace.times.last().copied().unwrap_or(0.0),
        rec.trace.terminated_by.as_str(),
        rec.trace.len()
    );
    Ok(rec.trace)
}

/// Like [`integrate`], but a rejected step restarts the trajectory with a
/// ten times smaller `dt` (and ten times larger stride, so samples land on the
/// same times), at most `max_refinements` times. Returns the `dt` that worked.
pub fn integrate_refining<D: Dynamics + ?Sized>(
    dynamics: &D,
    rho0: &DensityMatrix,
    settings: &IntegrationSettings,
    max_refinements: usize,
) -> Result<(EvolutionTrace, f64)> {
    let mut s = *settings;
    for level in 0..=max_refinements {
        match integrate(dynamics, rho0, &s) {
            Err(Error::StepRejected { time, violation }) if level < max_refinements => {
                log::info!("step rejected at t = {time} (violation {violation:e}); retrying with dt = {}", s.dt / 10.0);
                s.dt /= 10.0;
                s.sample_stride *= 10;
            }
            other => return other.map(|trace| (trace, s.dt)),
        }
    }
    unreachable!("loop returns on the last refinement level")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{bell_diagonal, CConfig};

    /// Pure dephasing of every coherence at unit rate; exact solution known.
    struct Dephase(CompositeHamiltonian);

    impl Dynamics for Dephase {
        fn hamiltonian(&self) -> &CompositeHamiltonian {
            &self.0
        }
        fn dissipative(&self, rho: &CMatrix) -> Result<CMatrix> {
            Ok(CMatrix::from_fn(4, |i, j| if i == j { C64::new(0.0, 0.0) } else { -rho[(i, j)] }))
        }
    }

    #[test]
    fn crossing_interpolates_linearly() {
        let t = [0.0, 1.0, 2.0, 3.0];
        let v = [3.0, 2.5, 1.5, 1.0];
        assert!((first_crossing(&t, &v, 2.0).unwrap() - 1.5).abs() < 1e-15);
        assert_eq!(first_crossing(&t, &v, 0.5), None);
        assert_eq!(first_crossing(&t, &[1.0, 3.0, 1.0, 1.0], 2.0), None);
        assert_eq!(first_crossing(&t, &v, 3.0), None);
    }

    #[test]
    fn projection_rejects_and_clamps() {
        let bad = CMatrix::diag(&[1.1, -0.1, 0.0, 0.0]);
        assert!(matches!(project_state(&bad, 1e-12, 0.5), Err(Error::StepRejected { .. })));
        let slight = CMatrix::diag(&[0.5, 0.5 + 1e-9, -1e-9, 1e-13]);
        let p = project_state(&slight, 1e-12, 0.0).unwrap();
        assert!((p.trace().re - 1.0).abs() < 1e-15);
        assert_eq!(p[(2, 2)].re, 0.0);
        assert_eq!(p[(3, 3)].re, 0.0);
    }

    #[test]
    fn exact_dephasing_and_sampling() {
        let dyn_ = Dephase(CompositeHamiltonian::new(0.0, 0.0));
        let rho0 = bell_diagonal(&CConfig::BASELINE).unwrap();
        let settings = IntegrationSettings {
            dt: 1e-2,
            t_end: 1.0,
            sample_stride: 7,
            stop_at_stationary: true,
            ..Default::default()
        };
        let trace = integrate(&dyn_, &rho0, &settings).unwrap();
        assert_eq!(trace.terminated_by, Termination::TEnd);
        assert_eq!(*trace.times.last().unwrap(), 1.0);
        assert_eq!(trace.times[1], 0.07);
        let expected = rho0[(0, 3)].re * (-1.0f64).exp();
        assert!((trace.final_state()[(0, 3)].re - expected).abs() < 1e-9);
        assert!(trace.entropy_generation.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert_eq!(trace.entropy_generation[0], 0.0);
    }

    #[test]
    fn stops_on_stationary_input() {
        let dyn_ = Dephase(CompositeHamiltonian::default());
        let rho0 = crate::states::validate(&CMatrix::diag(&[0.4, 0.3, 0.2, 0.1])).unwrap();
        let trace = integrate(&dyn_, &rho0, &IntegrationSettings::default()).unwrap();
        assert_eq!(trace.terminated_by, Termination::Stationarity);
        assert_eq!(trace.stationary_time, Some(0.0));
        assert_eq!(trace.len(), 1);
    }

    /// Stiff dephasing that a coarse step overshoots into negative populations.
    struct Decay(CompositeHamiltonian);

    impl Dynamics for Decay {
        fn hamiltonian(&self) -> &CompositeHamiltonian {
            &self.0
        }
        fn dissipative(&self, rho: &CMatrix) -> Result<CMatrix> {
            let p = rho[(0, 0)].re;
            Ok(CMatrix::diag(&[-30.0 * p, 30.0 * p, 0.0, 0.0]))
        }
    }

    #[test]
    fn refinement_rescues_stiff_steps() {
        let dyn_ = Decay(CompositeHamiltonian::new(0.0, 0.0));
        let rho0 = crate::states::validate(&CMatrix::diag(&[0.5, 0.5, 0.0, 0.0])).unwrap();
        let coarse = IntegrationSettings {
            dt: 0.2,
            t_end: 1.0,
            sample_stride: 1,
            stop_at_stationary: false,
            ..Default::default()
        };
        assert!(matches!(integrate(&dyn_, &rho0, &coarse), Err(Error::StepRejected { .. })));
        let (trace, dt) = integrate_refining(&dyn_, &rho0, &coarse, 2).unwrap();
        assert!((dt - 0.02).abs() < 1e-15);
        assert_eq!(trace.times.len(), 6);
        assert!((trace.final_state()[(0, 0)].re - 0.5 * (-30.0f64).exp()).abs() < 1e-6);
        assert!(integrate_refining(&dyn_, &rho0, &coarse, 0).is_err());
    }

    #[test]
    fn settings_validation() {
        let mut s = IntegrationSettings::default();
        s.dt = 0.0;
        assert!(s.validate().is_err());
        s.dt = 1e-3;
        s.t_end = -1.0;
        assert!(s.validate().is_err());
        s.t_end = 1.0;
        s.sample_stride = 0;
        assert!(s.validate().is_err());
    }
}
