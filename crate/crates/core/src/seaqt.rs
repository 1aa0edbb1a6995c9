//! Steepest-entropy-ascent equation of motion for two non-interacting qubits.
//!
//! `drho/dt = -i[H, rho] - sum_J (1/tau_J) D_J (x) rho_Jbar`, with the local
//! dissipators built from *locally perceived* operators
//! `F^J = Tr_Jbar((I_J (x) rho_Jbar) F)`.
//!
//! Two closures of the local problem are provided. The isolated one keeps
//! identity and perceived energy as generators of the motion and projects the
//! perceived `B ln rho` off them (Gram-determinant form). The reservoir one
//! replaces the energy constraint with a heat bath at inverse temperature
//! `beta_R`, which drives each marginal toward its local canonical state.

use serde::{Deserialize, Serialize};

use crate::dynamics::{self, Dynamics, EvolutionTrace, IntegrationSettings};
use crate::error::{Error, Result};
use crate::qmat::{
    eig_hermitian, func_on_support, kron, log_on_support, partial_trace, CMatrix, Subsystem,
    KERNEL_THRESHOLD,
};
use crate::states::{CompositeHamiltonian, DensityMatrix};

/// Gram determinants at or below this are treated as degenerate.
pub const GRAM_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeaqtVariant {
    Reservoir,
    Isolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeaqtParams {
    pub tau_a: f64,
    pub tau_b: f64,
    /// Only read by the reservoir variant.
    pub beta_r: f64,
    pub variant: SeaqtVariant,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
}

fn default_kappa() -> f64 {
    KERNEL_THRESHOLD
}

impl Default for SeaqtParams {
    fn default() -> Self {
        SeaqtParams {
            tau_a: 1.0,
            tau_b: 1.0,
            beta_r: 1.0,
            variant: SeaqtVariant::Reservoir,
            kappa: KERNEL_THRESHOLD,
        }
    }
}

impl SeaqtParams {
    pub fn validate(&self) -> Result<()> {
        for (name, tau) in [("tau_a", self.tau_a), ("tau_b", self.tau_b)] {
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {tau}")));
            }
        }
        if !self.beta_r.is_finite() {
            return Err(Error::InvalidParameter(format!("beta_r must be finite, got {}", self.beta_r)));
        }
        if !(self.kappa >= 0.0 && self.kappa < 1e-3) {
            return Err(Error::InvalidParameter(format!("kappa out of range: {}", self.kappa)));
        }
        Ok(())
    }

    fn tau(&self, j: Subsystem) -> f64 {
        match j {
            Subsystem::A => self.tau_a,
            Subsystem::B => self.tau_b,
        }
    }
}

/// `Tr_Jbar((I_J (x) rho_Jbar) f)`.
pub fn locally_perceived(f: &CMatrix, rho: &CMatrix, j: Subsystem) -> CMatrix {
    let other = partial_trace(rho, j.other()).expect("4x4 state");
    let weight = match j {
        Subsystem::A => kron(&CMatrix::identity(2), &other),
        Subsystem::B => kron(&other, &CMatrix::identity(2)),
    }
    .expect("2x2 factors");
    partial_trace(&(weight * *f), j).expect("4x4 operator").hermitian_part()
}

/// `(F, G) = 1/2 Tr(rho_J {F, G})`.
pub fn inner_product(fj: &CMatrix, gj: &CMatrix, rho_j: &CMatrix) -> f64 {
    0.5 * (rho_j.trace_product(&(fj * gj)) + rho_j.trace_product(&(gj * fj))).re
}

fn tensor_back(d: &CMatrix, rho_other: &CMatrix, j: Subsystem) -> CMatrix {
    match j {
        Subsystem::A => kron(d, rho_other),
        Subsystem::B => kron(rho_other, d),
    }
    .expect("2x2 factors")
}

/// Local isolated dissipator `1/2 (rho_J X + X^dagger rho_J)` where `X` is
/// the ratio of the 3x3 determinant with operator row `(L, I, H)` to the
/// Gram determinant of `{I, H}`. With `fallback`, a degenerate Gram drops `H`
/// from the generators instead of failing.
fn isolated_local(
    log_j: &CMatrix,
    h_j: &CMatrix,
    rho_j: &CMatrix,
    fallback: bool,
) -> Result<CMatrix> {
    let id = CMatrix::identity(2);
    let ip = |f: &CMatrix, g: &CMatrix| inner_product(f, g, rho_j);
    let (li, lh) = (ip(log_j, &id), ip(log_j, h_j));
    let (ii, ih, hh) = (ip(&id, &id), ip(&id, h_j), ip(h_j, h_j));
    let gram = ii * hh - ih * ih;

    let x = if gram > GRAM_TOL {
        // cofactors of the operator row
        let c_l = gram;
        let c_i = -(li * hh - ih * lh);
        let c_h = li * ih - ii * lh;
        (log_j.scale(c_l) + id.scale(c_i) + h_j.scale(c_h)).scale(1.0 / gram)
    } else if fallback {
        *log_j - id.scale(li / ii)
    } else {
        return Err(Error::DegenerateGram { gram });
    };
    let rx = rho_j * &x;
    Ok((rx + rx.adjoint()).scale(0.5))
}

fn perceived_log(rho: &CMatrix, kappa: f64) -> CMatrix {
    let eig = eig_hermitian(rho).expect("state is Hermitian");
    func_on_support(&eig, f64::ln, kappa).expect("ln is finite above kappa")
}

/// `D_J (x) rho_Jbar` (ordered so that `D_B` sits on the right) for the
/// isolated variant.
pub fn dissipator_isolated(
    rho: &DensityMatrix,
    h: &CompositeHamiltonian,
    j: Subsystem,
    kappa: f64,
) -> Result<CMatrix> {
    let log = perceived_log(rho, kappa);
    let rho_j = partial_trace(rho, j)?;
    let d = isolated_local(
        &locally_perceived(&log, rho, j),
        &locally_perceived(h.matrix(), rho, j),
        &rho_j,
        false,
    )?;
    Ok(tensor_back(&d, &partial_trace(rho, j.other())?, j))
}

/// Reservoir dissipator with an explicit local log operator `log_j`:
/// `1/2 {rho_J, log_j} - beta <f> rho_J + beta/2 {H_J, rho_J}` where the
/// free-energy expectation `<f> = Tr(rho_J H_J) + Tr(rho_J log_j) / beta`
/// makes the result traceless.
pub fn dissipator_reservoir_with_log(
    rho_j: &CMatrix,
    log_j: &CMatrix,
    h_j: &CMatrix,
    beta_r: f64,
) -> CMatrix {
    let e = rho_j.trace_product(h_j).re;
    let s_term = rho_j.trace_product(log_j).re;
    let beta_f = beta_r * e + s_term;
    let anti = |a: &CMatrix, b: &CMatrix| a * b + b * a;
    (anti(rho_j, log_j).scale(0.5) - rho_j.scale(beta_f) + anti(h_j, rho_j).scale(0.5 * beta_r))
        .hermitian_part()
}

/// Reservoir dissipator of a single qubit using its own `B ln rho_J`.
pub fn dissipator_reservoir(rho_j: &DensityMatrix, h_j: &CMatrix, beta_r: f64, kappa: f64) -> CMatrix {
    let log_j = log_on_support(rho_j, kappa).expect("state is Hermitian");
    dissipator_reservoir_with_log(rho_j, &log_j, h_j, beta_r)
}

/// The full SEAQT generator, reusable across many right-hand-side calls.
#[derive(Debug, Clone, Copy)]
pub struct SeaqtDynamics {
    pub h: CompositeHamiltonian,
    pub params: SeaqtParams,
}

impl SeaqtDynamics {
    pub fn new(h: CompositeHamiltonian, params: SeaqtParams) -> Result<Self> {
        params.validate()?;
        Ok(SeaqtDynamics { h, params })
    }
}

impl Dynamics for SeaqtDynamics {
    fn hamiltonian(&self) -> &CompositeHamiltonian {
        &self.h
    }

    fn kappa(&self) -> f64 {
        self.params.kappa
    }

    fn reservoir_beta(&self) -> Option<f64> {
        match self.params.variant {
            SeaqtVariant::Reservoir => Some(self.params.beta_r),
            SeaqtVariant::Isolated => None,
        }
    }

    fn dissipative(&self, rho: &CMatrix) -> Result<CMatrix> {
        let log = perceived_log(rho, self.params.kappa);
        let mut out = CMatrix::zeros(4);
        for j in [Subsystem::A, Subsystem::B] {
            let rho_j = partial_trace(rho, j)?;
            let rho_other = partial_trace(rho, j.other())?;
            let log_j = locally_perceived(&log, rho, j);
            let d = match self.params.variant {
                SeaqtVariant::Isolated => {
                    isolated_local(&log_j, &locally_perceived(self.h.matrix(), rho, j), &rho_j, true)?
                }
                SeaqtVariant::Reservoir => {
                    dissipator_reservoir_with_log(&rho_j, &log_j, &self.h.local(j), self.params.beta_r)
                }
            };
            out -= tensor_back(&d, &rho_other, j).scale(1.0 / self.params.tau(j));
        }
        Ok(out)
    }
}

pub fn seaqt_rhs(rho: &DensityMatrix, h: &CompositeHamiltonian, params: &SeaqtParams) -> Result<CMatrix> {
    SeaqtDynamics::new(*h, *params)?.rhs(rho)
}

pub fn integrate(
    rho0: &DensityMatrix,
    h: &CompositeHamiltonian,
    params: &SeaqtParams,
    settings: &IntegrationSettings,
) -> Result<EvolutionTrace> {
    dynamics::integrate(&SeaqtDynamics::new(*h, *params)?, rho0, settings)
}

/// Cumulative entropy generation of a trace: `S(t) - S(0)` for the isolated
/// variant, `[S(t) - S(0)] - beta_R [E(t) - E(0)]` with a reservoir.
pub fn entropy_generation(trace: &EvolutionTrace, params: &SeaqtParams) -> Vec<f64> {
    let beta = match params.variant {
        SeaqtVariant::Reservoir => params.beta_r,
        SeaqtVariant::Isolated => 0.0,
    };
    let Some(m0) = trace.measures.first() else {
        return Vec::new();
    };
    trace
        .measures
        .iter()
        .map(|m| (m.entropy - m0.entropy) - beta * (m.energy - m0.energy))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::pauli;
    use crate::states::{bell_diagonal, gibbs_state, pure_x_state, validate, CConfig};

    const K: f64 = KERNEL_THRESHOLD;

    fn zeta_state(zeta: f64) -> DensityMatrix {
        bell_diagonal(&CConfig::BASELINE).unwrap().mix(&pure_x_state(), zeta)
    }

    fn gibbs_product(h: &CompositeHamiltonian, beta: f64) -> DensityMatrix {
        let ga = gibbs_state(&h.local(Subsystem::A), beta).unwrap();
        let gb = gibbs_state(&h.local(Subsystem::B), beta).unwrap();
        validate(&kron(&ga, &gb).unwrap()).unwrap()
    }

    #[test]
    fn perceived_operators() {
        let rho = zeta_state(0.68);
        let p = locally_perceived(&CMatrix::identity(4), &rho, Subsystem::B);
        assert!(p.max_abs_diff(&CMatrix::identity(2)) < 1e-14);

        let h = CompositeHamiltonian::new(1.0, 0.6);
        let bd = bell_diagonal(&CConfig::BASELINE).unwrap();
        let ha = locally_perceived(h.matrix(), &bd, Subsystem::A);
        assert!(ha.max_abs_diff(&pauli(3).unwrap().scale(0.5)) < 1e-14);
        let hb = locally_perceived(h.matrix(), &bd, Subsystem::B);
        assert!(hb.max_abs_diff(&pauli(3).unwrap().scale(0.3)) < 1e-14);

        let log = log_on_support(&bd, K).unwrap();
        let la = locally_perceived(&log, &bd, Subsystem::A);
        assert!(la[(0, 1)].norm() < 1e-14 && (la[(0, 0)] - la[(1, 1)]).norm() < 1e-14);
    }

    #[test]
    fn perceived_product_factorizes() {
        let x = pauli(1).unwrap().scale(0.7) + pauli(3).unwrap();
        let y = pauli(2).unwrap() + CMatrix::identity(2).scale(0.2);
        let ra = gibbs_state(&pauli(1).unwrap(), 0.8).unwrap();
        let rb = gibbs_state(&(pauli(3).unwrap() + pauli(2).unwrap()), 1.3).unwrap();
        let rho = kron(&ra, &rb).unwrap();
        let p = locally_perceived(&kron(&x, &y).unwrap(), &rho, Subsystem::A);
        assert!(p.max_abs_diff(&x.scale(rb.trace_product(&y).re)) < 1e-14);
    }

    #[test]
    fn inner_product_examples() {
        let half = CMatrix::identity(2).scale(0.5);
        let id = CMatrix::identity(2);
        let (x, z) = (pauli(1).unwrap(), pauli(3).unwrap());
        assert!((inner_product(&id, &id, &half) - 1.0).abs() < 1e-15);
        assert!((inner_product(&z, &z, &half) - 1.0).abs() < 1e-15);
        assert!(inner_product(&x, &z, &half).abs() < 1e-15);
    }

    #[test]
    fn isolated_dissipator_properties() {
        let h = CompositeHamiltonian::default();
        let bd = bell_diagonal(&CConfig::BASELINE).unwrap();
        for j in [Subsystem::A, Subsystem::B] {
            assert!(dissipator_isolated(&bd, &h, j, K).unwrap().max_abs() < 1e-10);
        }
        let gp = gibbs_product(&h, 0.7);
        for j in [Subsystem::A, Subsystem::B] {
            assert!(dissipator_isolated(&gp, &h, j, K).unwrap().max_abs() < 1e-12);
        }
        let rho = zeta_state(0.68);
        let da = dissipator_isolated(&rho, &h, Subsystem::A, K).unwrap();
        let db = dissipator_isolated(&rho, &h, Subsystem::B, K).unwrap();
        assert!(da.max_abs() > 1e-3);
        assert!(da.hermitian_violation() < 1e-14);
        assert!(da.trace().norm() < 1e-14 && db.trace().norm() < 1e-14);
        assert!((da + db).trace_product(h.matrix()).norm() < 1e-13);
    }

    #[test]
    fn degenerate_gram_is_reported() {
        let h = CompositeHamiltonian::new(0.0, 0.0);
        let rho = zeta_state(0.68);
        assert!(matches!(
            dissipator_isolated(&rho, &h, Subsystem::A, K),
            Err(Error::DegenerateGram { .. })
        ));
        // the generator falls back to the identity-only constraint
        let params = SeaqtParams {
            variant: SeaqtVariant::Isolated,
            ..Default::default()
        };
        let rhs = seaqt_rhs(&rho, &h, &params).unwrap();
        assert!(rhs.trace().norm() < 1e-14);
        assert!(rhs.max_abs() > 1e-3);
    }

    #[test]
    fn reservoir_dissipator_examples() {
        let hj = pauli(3).unwrap().scale(0.5);
        let g = gibbs_state(&hj, 1.0).unwrap();
        assert!(dissipator_reservoir(&g, &hj, 1.0, K).max_abs() < 1e-14);

        let half = validate(&CMatrix::identity(2).scale(0.5)).unwrap();
        let d = dissipator_reservoir(&half, &hj, 1.0, K);
        assert!(d.trace().norm() < 1e-15);
        assert!((d[(0, 0)].re - 0.25).abs() < 1e-14);

        // |0> carries +eps/2 here, so diag(1, 0) is the excited level. Almost
        // fully excited relaxes downwards; almost fully ground heats up
        // towards the finite-temperature population.
        for (pop, sign) in [(1.0 - 1e-6, -1.0), (1e-6, 1.0)] {
            let rho = validate(&CMatrix::diag(&[pop, 1.0 - pop])).unwrap();
            let d = dissipator_reservoir(&rho, &hj, 1.0, K);
            let de = -d.trace_product(&hj).re;
            let ds = d.trace_product(&log_on_support(&rho, K).unwrap()).re;
            assert!(sign * de > 0.0, "energy rate {de} at population {pop}");
            assert!(ds - de > 0.0, "free-energy production {}", ds - de);
        }
    }

    #[test]
    fn rhs_examples() {
        let bd = bell_diagonal(&CConfig::BASELINE).unwrap();
        let iso = SeaqtParams {
            variant: SeaqtVariant::Isolated,
            ..Default::default()
        };
        let zero_h = CompositeHamiltonian::new(0.0, 0.0);
        assert!(seaqt_rhs(&bd, &zero_h, &iso).unwrap().max_abs() < 1e-10);

        let h = CompositeHamiltonian::default();
        let rhs = seaqt_rhs(&bd, &h, &iso).unwrap();
        let symp = dynamics::symplectic(h.matrix(), &bd);
        assert!(rhs.max_abs_diff(&symp) < 1e-10);
        assert!(symp.max_abs() > 0.1);

        let res = SeaqtParams::default();
        let gp = gibbs_product(&h, res.beta_r);
        assert!(seaqt_rhs(&gp, &h, &res).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn params_validation() {
        let mut p = SeaqtParams::default();
        assert!(p.validate().is_ok());
        p.tau_b = 0.0;
        assert!(p.validate().is_err());
    }
}
