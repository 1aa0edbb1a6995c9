//! Physical states: Bell-diagonal family, Bell projectors, the x-polarized
//! product state, canonical (Gibbs) states and the non-interacting two-qubit
//! Hamiltonian.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{eig_hermitian, kron, matrix_func, pauli, CMatrix, Subsystem, C64};

/// Tolerance used by [`validate`] for each density-matrix invariant.
pub const STATE_TOL: f64 = 1e-10;

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Copy, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn partial(&self, keep: Subsystem) -> DensityMatrix {
        DensityMatrix(crate::qmat::partial_trace(&self.0, keep).expect("two-qubit state"))
    }

    /// Convex combination `w * self + (1 - w) * other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> DensityMatrix {
        DensityMatrix(self.0.scale(w) + other.0.scale(1.0 - w))
    }

    pub(crate) fn assume_valid(m: CMatrix) -> DensityMatrix {
        DensityMatrix(m)
    }
}

impl Deref for DensityMatrix {
    type Target = CMatrix;
    fn deref(&self) -> &CMatrix {
        &self.0
    }
}

impl std::fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DensityMatrix({:?})", self.0)
    }
}

/// Checks the density-matrix invariants and reports the first one violated.
pub fn validate(m: &CMatrix) -> Result<DensityMatrix> {
    let violation = m.hermitian_violation();
    if violation > STATE_TOL {
        return Err(Error::NonHermitian { violation });
    }
    let violation = (m.trace() - C64::new(1.0, 0.0)).norm();
    if violation > STATE_TOL {
        return Err(Error::NonUnitTrace { violation });
    }
    let min_eigenvalue = eig_hermitian(m)?.values()[0];
    if min_eigenvalue < -STATE_TOL {
        return Err(Error::NotPsd { min_eigenvalue });
    }
    Ok(DensityMatrix(*m))
}

/// Coefficients of `sigma_i (x) sigma_i` in a Bell-diagonal state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CConfig {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl CConfig {
    /// Coefficients used to model the photonic experiment.
    pub const BASELINE: CConfig = CConfig {
        c1: 0.996,
        c2: 0.4,
        c3: -0.4,
    };

    pub fn new(c1: f64, c2: f64, c3: f64) -> Result<CConfig> {
        let c = CConfig { c1, c2, c3 };
        c.check()?;
        Ok(c)
    }

    pub fn check(&self) -> Result<()> {
        let w = self.bell_eigenvalues();
        let min_eigenvalue = w.iter().copied().fold(f64::INFINITY, f64::min);
        let in_range = [self.c1, self.c2, self.c3]
            .iter()
            .all(|c| c.is_finite() && c.abs() <= 1.0);
        if !in_range || min_eigenvalue < 0.0 {
            return Err(Error::InvalidCConfig {
                c1: self.c1,
                c2: self.c2,
                c3: self.c3,
                min_eigenvalue,
            });
        }
        Ok(())
    }

    /// Eigenvalues on `|Phi+>, |Phi->, |Psi+>, |Psi->`.
    pub fn bell_eigenvalues(&self) -> [f64; 4] {
        let CConfig { c1, c2, c3 } = *self;
        [
            (1.0 + c1 - c2 + c3) / 4.0,
            (1.0 - c1 + c2 + c3) / 4.0,
            (1.0 + c1 + c2 - c3) / 4.0,
            (1.0 - c1 - c2 - c3) / 4.0,
        ]
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.c1, self.c2, self.c3]
    }
}

/// `1/4 (I (x) I + sum_i c_i sigma_i (x) sigma_i)`.
pub fn bell_diagonal(c: &CConfig) -> Result<DensityMatrix> {
    c.check()?;
    let mut m = CMatrix::identity(4);
    for (k, ck) in c.as_array().iter().enumerate() {
        let s = pauli(k + 1)?;
        m += kron(&s, &s)?.scale(*ck);
    }
    Ok(DensityMatrix(m.scale(0.25)))
}

/// The four Bell-state projectors.
#[derive(Debug, Clone, Copy)]
pub struct BellProjectors {
    pub phi_plus: DensityMatrix,
    pub phi_minus: DensityMatrix,
    pub psi_plus: DensityMatrix,
    pub psi_minus: DensityMatrix,
}

impl BellProjectors {
    pub fn all(&self) -> [DensityMatrix; 4] {
        [self.phi_plus, self.phi_minus, self.psi_plus, self.psi_minus]
    }
}

pub fn bell_projectors() -> BellProjectors {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let ket = |a: [f64; 4]| -> Vec<C64> { a.iter().map(|x| C64::new(x * h, 0.0)).collect() };
    let proj = |v: Vec<C64>| DensityMatrix(CMatrix::outer(&v, &v));
    BellProjectors {
        phi_plus: proj(ket([1.0, 0.0, 0.0, 1.0])),
        phi_minus: proj(ket([1.0, 0.0, 0.0, -1.0])),
        psi_plus: proj(ket([0.0, 1.0, 1.0, 0.0])),
        psi_minus: proj(ket([0.0, 1.0, -1.0, 0.0])),
    }
}

/// `|+><+| (x) |+><+|`, both Bloch vectors along x.
pub fn pure_x_state() -> DensityMatrix {
    let plus = CMatrix::from_real_rows([[0.5, 0.5], [0.5, 0.5]]);
    DensityMatrix(kron(&plus, &plus).expect("2x2 factors"))
}

/// `(eps_A / 2) sigma_z (x) I + (eps_B / 2) I (x) sigma_z`; no interaction term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeHamiltonian {
    pub eps_a: f64,
    pub eps_b: f64,
    matrix: CMatrix,
}

impl CompositeHamiltonian {
    pub fn new(eps_a: f64, eps_b: f64) -> CompositeHamiltonian {
        let i2 = CMatrix::identity(2);
        let z = pauli(3).expect("sigma_z");
        let matrix = kron(&z, &i2).expect("2x2").scale(eps_a / 2.0)
            + kron(&i2, &z).expect("2x2").scale(eps_b / 2.0);
        CompositeHamiltonian {
            eps_a,
            eps_b,
            matrix,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Single-qubit Hamiltonian of one subsystem.
    pub fn local(&self, j: Subsystem) -> CMatrix {
        let eps = match j {
            Subsystem::A => self.eps_a,
            Subsystem::B => self.eps_b,
        };
        pauli(3).expect("sigma_z").scale(eps / 2.0)
    }
}

impl Default for CompositeHamiltonian {
    fn default() -> Self {
        CompositeHamiltonian::new(1.0, 1.0)
    }
}

/// Canonical state `exp(-beta h) / Z` for a Hermitian `h` of dimension 2 or 4.
pub fn gibbs_state(h: &CMatrix, beta: f64) -> Result<DensityMatrix> {
    if !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("beta must be finite, got {beta}")));
    }
    // shift by the ground energy so large beta does not overflow
    let e0 = eig_hermitian(h)?.values()[0];
    let unnormalized = matrix_func(h, |e| (-beta * (e - e0)).exp())?;
    let z = unnormalized.trace().re;
    Ok(DensityMatrix(unnormalized.scale(1.0 / z).hermitian_part()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{partial_trace, KERNEL_THRESHOLD};

    #[test]
    fn bell_diagonal_examples() {
        let mixed = bell_diagonal(&CConfig::new(0.0, 0.0, 0.0).unwrap()).unwrap();
        assert!(mixed.max_abs_diff(&CMatrix::identity(4).scale(0.25)) < 1e-15);

        let phi = bell_diagonal(&CConfig::new(1.0, -1.0, 1.0).unwrap()).unwrap();
        assert!(phi.max_abs_diff(bell_projectors().phi_plus.matrix()) < 1e-15);

        let base = bell_diagonal(&CConfig::BASELINE).unwrap();
        let w = eig_hermitian(&base).unwrap();
        let expected = [0.001, 0.001, 0.299, 0.699];
        for (a, b) in w.values().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_config_rejected() {
        assert!(matches!(
            CConfig::new(1.0, 1.0, 1.0),
            Err(Error::InvalidCConfig { .. })
        ));
        assert!(CConfig::new(1.2, 0.0, 0.0).is_err());
        let bad = CConfig { c1: 0.9, c2: 0.9, c3: 0.9 };
        assert!(bell_diagonal(&bad).is_err());
    }

    #[test]
    fn bell_diagonal_commutes_with_correlators() {
        let rho = bell_diagonal(&CConfig::BASELINE).unwrap();
        for k in 1..4 {
            let s = pauli(k).unwrap();
            let ss = kron(&s, &s).unwrap();
            assert!((ss * *rho.matrix() - *rho.matrix() * ss).max_abs() < 1e-15);
        }
    }

    #[test]
    fn bell_diagonal_is_affine() {
        let a = CConfig::new(0.3, -0.2, 0.1).unwrap();
        let b = CConfig::BASELINE;
        let w = 0.37;
        let mid = CConfig::new(
            w * a.c1 + (1.0 - w) * b.c1,
            w * a.c2 + (1.0 - w) * b.c2,
            w * a.c3 + (1.0 - w) * b.c3,
        )
        .unwrap();
        let lhs = bell_diagonal(&mid).unwrap();
        let rhs = bell_diagonal(&a).unwrap().mix(&bell_diagonal(&b).unwrap(), w);
        assert!(lhs.max_abs_diff(&rhs) < 1e-15);
    }

    #[test]
    fn bell_projector_algebra() {
        let p = bell_projectors();
        let all = p.all();
        let sum = all.iter().fold(CMatrix::zeros(4), |acc, q| acc + *q.matrix());
        assert!(sum.max_abs_diff(&CMatrix::identity(4)) < 1e-15);
        let expected = CMatrix::from_real_rows([
            [0.5, 0.0, 0.0, 0.5],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.5, 0.0, 0.0, 0.5],
        ]);
        assert!(p.phi_plus.max_abs_diff(&expected) < 1e-15);
        assert!(p.psi_plus.trace_product(&p.psi_minus).norm() < 1e-15);
        for (i, a) in all.iter().enumerate() {
            assert!((*a.matrix() * *a.matrix()).max_abs_diff(a) < 1e-15);
            for b in all.iter().skip(i + 1) {
                assert!((*a.matrix() * *b.matrix()).max_abs() < 1e-15);
            }
        }
        let reduced = partial_trace(&p.phi_plus, Subsystem::A).unwrap();
        assert!(reduced.max_abs_diff(&CMatrix::identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn pure_x_properties() {
        let rho = pure_x_state();
        assert!(rho.max_abs_diff(&CMatrix::from_fn(4, |_, _| C64::new(0.25, 0.0))) < 1e-15);
        assert!((rho.trace_product(&rho).re - 1.0).abs() < 1e-15);
        let h = CompositeHamiltonian::default();
        assert!(rho.trace_product(h.matrix()).norm() < 1e-15);
        let h2 = CompositeHamiltonian::new(0.3, 2.5);
        assert!(rho.trace_product(h2.matrix()).norm() < 1e-15);
    }

    #[test]
    fn hamiltonian_structure() {
        let h = CompositeHamiltonian::new(1.0, 0.5);
        assert!(h.matrix().is_hermitian(0.0));
        assert!(h.matrix().trace().norm() < 1e-15);
        assert!(h.matrix().max_abs_diff(&CMatrix::diag(&[0.75, 0.25, -0.25, -0.75])) < 1e-15);
        let mut rng_c = [0.1, -0.3, 0.2];
        for _ in 0..10 {
            let c = CConfig::new(rng_c[0], rng_c[1], rng_c[2]).unwrap();
            let rho = bell_diagonal(&c).unwrap();
            assert!(rho.trace_product(h.matrix()).norm() < 1e-15);
            rng_c.rotate_left(1);
        }
    }

    #[test]
    fn gibbs_examples() {
        let h = CompositeHamiltonian::default();
        let g0 = gibbs_state(h.matrix(), 0.0).unwrap();
        assert!(g0.max_abs_diff(&CMatrix::identity(4).scale(0.25)) < 1e-15);

        let cold = gibbs_state(&h.local(Subsystem::A), 60.0).unwrap();
        assert!((cold[(1, 1)].re - 1.0).abs() < 1e-12);

        let g = gibbs_state(&h.local(Subsystem::A), 1.0).unwrap();
        let z = 0.5f64.exp() + (-0.5f64).exp();
        // H_A = diag(+1/2, -1/2): the lower level carries e^{+1/2}
        assert!((g[(0, 0)].re - (-0.5f64).exp() / z).abs() < 1e-14);
        assert!((g[(1, 1)].re - 0.5f64.exp() / z).abs() < 1e-14);
        let comm = *h.matrix() * *gibbs_state(h.matrix(), 0.7).unwrap().matrix()
            - *gibbs_state(h.matrix(), 0.7).unwrap().matrix() * *h.matrix();
        assert!(comm.max_abs() < 1e-15);
        assert!(eig_hermitian(&g).unwrap().values()[0] > KERNEL_THRESHOLD);
        assert!(gibbs_state(h.matrix(), f64::NAN).is_err());
    }

    #[test]
    fn validate_reports_each_failure() {
        assert!(validate(&CMatrix::identity(4).scale(0.25)).is_ok());
        let not_psd = CMatrix::diag(&[0.5, 0.6, 0.0, -0.1]);
        assert!(matches!(validate(&not_psd), Err(Error::NotPsd { .. })));
        let off = CMatrix::diag(&[0.25, 0.25, 0.25, 0.249_999_999]);
        match validate(&off) {
            Err(Error::NonUnitTrace { violation }) => assert!((violation - 1e-9).abs() < 1e-12),
            other => panic!("expected NonUnitTrace, got {other:?}"),
        }
        let mut skew = CMatrix::identity(4).scale(0.25);
        skew[(0, 1)] = C64::new(0.1, 0.0);
        assert!(matches!(validate(&skew), Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn bell_marginals_are_maximally_mixed() {
        for c in [CConfig::BASELINE, CConfig::new(0.2, 0.5, -0.1).unwrap()] {
            let rho = bell_diagonal(&c).unwrap();
            for j in [Subsystem::A, Subsystem::B] {
                assert!(rho.partial(j).max_abs_diff(&CMatrix::identity(2).scale(0.5)) < 1e-15);
            }
        }
    }
}
