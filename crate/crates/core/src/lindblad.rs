//! Lindblad master equation with projector jump operators.
//!
//! `drho/dt = -i[H, rho] + gamma sum_m (L_m rho L_m^dagger - 1/2 {L_m^dagger L_m, rho})`.
//! The global jump set is `{|11><11|, |00><00|}`, the Kronecker squares of
//! the single-qubit projectors `diag(0, 1)` and `diag(1, 0)`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{self, Dynamics, EvolutionTrace, IntegrationSettings};
use crate::error::{Error, Result};
use crate::qmat::{eig_hermitian, func_on_support, kron, CMatrix, KERNEL_THRESHOLD};
use crate::states::{CompositeHamiltonian, DensityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpMode {
    /// `L_m (x) L_m` for each single-qubit projector.
    Global,
    /// Every projector acting on one side only: `L_m (x) I` and `I (x) L_m`.
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LindbladParams {
    pub gamma: f64,
    pub jump_mode: JumpMode,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
}

fn default_kappa() -> f64 {
    KERNEL_THRESHOLD
}

impl Default for LindbladParams {
    fn default() -> Self {
        LindbladParams {
            gamma: 1.0,
            jump_mode: JumpMode::Global,
            kappa: KERNEL_THRESHOLD,
        }
    }
}

impl LindbladParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be non-negative, got {}",
                self.gamma
            )));
        }
        if !(self.kappa >= 0.0 && self.kappa < 1e-3) {
            return Err(Error::InvalidParameter(format!("kappa out of range: {}", self.kappa)));
        }
        Ok(())
    }
}

pub fn jump_operators(mode: JumpMode) -> Vec<CMatrix> {
    let l1 = CMatrix::diag(&[0.0, 1.0]);
    let l2 = CMatrix::diag(&[1.0, 0.0]);
    let id = CMatrix::identity(2);
    match mode {
        JumpMode::Global => vec![kron(&l1, &l1).unwrap(), kron(&l2, &l2).unwrap()],
        JumpMode::Local => vec![
            kron(&l1, &id).unwrap(),
            kron(&l2, &id).unwrap(),
            kron(&id, &l1).unwrap(),
            kron(&id, &l2).unwrap(),
        ],
    }
}

/// The dissipator superoperator without the `gamma` prefactor.
pub fn lindbladian(rho: &CMatrix, ops: &[CMatrix]) -> CMatrix {
    let mut out = CMatrix::zeros(rho.dim());
    for l in ops {
        let ld = l.adjoint();
        let ldl = ld * *l;
        out += *l * *rho * ld - (ldl * *rho + *rho * ldl).scale(0.5);
    }
    out
}

#[derive(Debug, Clone)]
pub struct LindbladDynamics {
    pub h: CompositeHamiltonian,
    pub params: LindbladParams,
    ops: Vec<CMatrix>,
}

impl LindbladDynamics {
    pub fn new(h: CompositeHamiltonian, params: LindbladParams) -> Result<Self> {
        params.validate()?;
        Ok(LindbladDynamics {
            h,
            params,
            ops: jump_operators(params.jump_mode),
        })
    }

    pub fn jump_operators(&self) -> &[CMatrix] {
        &self.ops
    }
}

impl Dynamics for LindbladDynamics {
    fn hamiltonian(&self) -> &CompositeHamiltonian {
        &self.h
    }

    fn kappa(&self) -> f64 {
        self.params.kappa
    }

    fn dissipative(&self, rho: &CMatrix) -> Result<CMatrix> {
        Ok(lindbladian(rho, &self.ops).scale(self.params.gamma))
    }
}

pub fn lindblad_rhs(rho: &DensityMatrix, h: &CompositeHamiltonian, params: &LindbladParams) -> Result<CMatrix> {
    LindbladDynamics::new(*h, *params)?.rhs(rho)
}

pub fn integrate_lindblad(
    rho0: &DensityMatrix,
    h: &CompositeHamiltonian,
    params: &LindbladParams,
    settings: &IntegrationSettings,
) -> Result<EvolutionTrace> {
    dynamics::integrate(&LindbladDynamics::new(*h, *params)?, rho0, settings)
}

/// Von Neumann entropy rate `-gamma Tr(L(rho) B ln rho)`.
pub fn lindblad_entropy_rate(rho: &DensityMatrix, params: &LindbladParams, kappa: f64) -> f64 {
    let log = func_on_support(&eig_hermitian(rho).expect("state is Hermitian"), f64::ln, kappa)
        .expect("ln is finite above kappa");
    let l = lindbladian(rho, &jump_operators(params.jump_mode));
    -params.gamma * l.trace_product(&log).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{bell_diagonal, validate, CConfig};

    #[test]
    fn jump_sets() {
        let g = jump_operators(JumpMode::Global);
        assert_eq!(g.len(), 2);
        assert_eq!(g[0], CMatrix::diag(&[0.0, 0.0, 0.0, 1.0]));
        assert_eq!(g[1], CMatrix::diag(&[1.0, 0.0, 0.0, 0.0]));
        let l = jump_operators(JumpMode::Local);
        assert_eq!(l.len(), 4);
        for op in g.iter().chain(&l) {
            assert!(op.max_abs_diff(&(*op * *op)) < 1e-15);
            assert!(op.hermitian_violation() == 0.0);
        }
    }

    #[test]
    fn bell_diagonal_action() {
        let ops = jump_operators(JumpMode::Global);
        let base = bell_diagonal(&CConfig::BASELINE).unwrap();
        let l = lindbladian(&base, &ops);
        let corner = -(0.996 - 0.4) / 4.0;
        assert!((l[(0, 3)].re - corner).abs() < 1e-15);
        assert!((l[(3, 0)].re - corner).abs() < 1e-15);
        assert!((corner + 0.149).abs() < 1e-12);
        let mut rest = l;
        rest[(0, 3)] = Default::default();
        rest[(3, 0)] = Default::default();
        assert_eq!(rest.max_abs(), 0.0);

        let equal = bell_diagonal(&CConfig::new(0.4, 0.4, -0.4).unwrap()).unwrap();
        assert!(lindbladian(&equal, &ops).max_abs() < 1e-15);
        assert_eq!(lindbladian(&CMatrix::identity(4).scale(0.25), &ops).max_abs(), 0.0);
    }

    #[test]
    fn rhs_examples() {
        let equal = bell_diagonal(&CConfig::new(0.4, 0.4, -0.4).unwrap()).unwrap();
        let p = LindbladParams::default();
        let zero = CompositeHamiltonian::new(0.0, 0.0);
        assert!(lindblad_rhs(&equal, &zero, &p).unwrap().max_abs() < 1e-15);

        let diag = validate(&CMatrix::diag(&[0.1, 0.2, 0.3, 0.4])).unwrap();
        for mode in [JumpMode::Global, JumpMode::Local] {
            assert_eq!(lindbladian(&diag, &jump_operators(mode)).max_abs(), 0.0);
        }

        let base = bell_diagonal(&CConfig::BASELINE).unwrap();
        let off = LindbladParams { gamma: 0.0, ..p };
        let rhs = lindblad_rhs(&base, &CompositeHamiltonian::default(), &off).unwrap();
        assert!(rhs.trace().norm() < 1e-15 && rhs.hermitian_violation() < 1e-15);
        assert!(lindblad_entropy_rate(&base, &off, KERNEL_THRESHOLD) == 0.0);
    }

    #[test]
    fn entropy_rate_zero_at_fixed_points() {
        let p = LindbladParams::default();
        let mm = validate(&CMatrix::identity(4).scale(0.25)).unwrap();
        assert!(lindblad_entropy_rate(&mm, &p, KERNEL_THRESHOLD).abs() < 1e-15);
        let base = bell_diagonal(&CConfig::BASELINE).unwrap();
        assert!(lindblad_entropy_rate(&base, &p, KERNEL_THRESHOLD) > 0.0);
    }

    #[test]
    fn negative_gamma_rejected() {
        let p = LindbladParams {
            gamma: -1.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }
}
