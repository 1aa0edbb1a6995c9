//! Scalar functionals of two-qubit states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{
    eig_hermitian, func_on_support, kron, pauli, range_projector, symmetric3_eigenvalues, CMatrix,
};
use crate::states::{CompositeHamiltonian, DensityMatrix};

/// Wootters concurrence.
///
/// The `lambda_i` are the square roots of the eigenvalues of
/// `sqrt(rho) rho~ sqrt(rho)`, which is Hermitian PSD and isospectral with
/// the non-Hermitian product `rho rho~`.
pub fn concurrence(rho: &DensityMatrix) -> f64 {
    let yy = {
        let y = pauli(2).expect("sigma_y");
        kron(&y, &y).expect("2x2")
    };
    let flipped = yy * rho.conj() * yy;
    let eig = eig_hermitian(rho).expect("density matrix is Hermitian");
    let root = eig.rebuild(|w| w.max(0.0).sqrt());
    let r2 = (root * flipped * root).hermitian_part();
    let mut lambdas: Vec<f64> = eig_hermitian(&r2)
        .expect("Hermitian by construction")
        .values()
        .iter()
        .map(|w| w.max(0.0).sqrt())
        .collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).clamp(0.0, 1.0)
}

/// Correlation tensor `t_ij = Tr(rho sigma_i (x) sigma_j)` for i, j in x, y, z.
pub fn correlation_matrix(rho: &DensityMatrix) -> [[f64; 3]; 3] {
    let mut t = [[0.0; 3]; 3];
    for (i, row) in t.iter_mut().enumerate() {
        let si = pauli(i + 1).expect("pauli");
        for (j, tij) in row.iter_mut().enumerate() {
            let sj = pauli(j + 1).expect("pauli");
            *tij = rho.trace_product(&kron(&si, &sj).expect("2x2")).re;
        }
    }
    t
}

/// Maximal CHSH expectation, `2 sqrt(h1 + h2)` with `h1 >= h2` the two
/// largest eigenvalues of `T^T T`.
pub fn chsh_max(rho: &DensityMatrix) -> f64 {
    let t = correlation_matrix(rho);
    let mut tt = [[0.0; 3]; 3];
    for (i, row) in tt.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| t[k][i] * t[k][j]).sum();
        }
    }
    let h = symmetric3_eigenvalues(tt);
    2.0 * (h[1] + h[2]).max(0.0).sqrt()
}

/// Von Neumann entropy on the support, in nats.
pub fn entropy(rho: &DensityMatrix, kappa: f64) -> f64 {
    let eig = eig_hermitian(rho).expect("density matrix is Hermitian");
    eig.values()
        .iter()
        .filter(|&&w| w > kappa)
        .map(|&w| -w * w.ln())
        .sum()
}

/// Relative entropy `D(rho || rho0)`; infinite when the support of `rho`
/// leaks out of the support of `rho0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RelativeEntropy {
    Finite(f64),
    Infinite,
}

impl RelativeEntropy {
    pub fn value(&self) -> f64 {
        match self {
            RelativeEntropy::Finite(v) => *v,
            RelativeEntropy::Infinite => f64::INFINITY,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, RelativeEntropy::Infinite)
    }
}

impl Serialize for RelativeEntropy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RelativeEntropy::Finite(v) => s.serialize_f64(*v),
            RelativeEntropy::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for RelativeEntropy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(RelativeEntropy::Finite(v)),
            Raw::Text(t) if t == "inf" => Ok(RelativeEntropy::Infinite),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("bad relative entropy {t:?}"))),
        }
    }
}

pub fn relative_entropy(rho: &DensityMatrix, rho0: &DensityMatrix, kappa: f64) -> RelativeEntropy {
    let support0 = range_projector(rho0, kappa).expect("density matrix is Hermitian");
    if rho.trace_product(&support0.kernel()).re > kappa {
        return RelativeEntropy::Infinite;
    }
    let log_rho = func_on_support(&eig_hermitian(rho).expect("Hermitian"), f64::ln, kappa)
        .expect("ln finite above kappa");
    let log_rho0 = func_on_support(&eig_hermitian(rho0).expect("Hermitian"), f64::ln, kappa)
        .expect("ln finite above kappa");
    let d = rho.trace_product(&log_rho).re - rho.trace_product(&log_rho0).re;
    RelativeEntropy::Finite(d.max(0.0))
}

pub fn energy(rho: &DensityMatrix, h: &CMatrix) -> f64 {
    rho.trace_product(h).re
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.trace_product(rho).re
}

pub fn linear_entropy(rho: &DensityMatrix) -> f64 {
    1.0 - purity(rho)
}

/// Every functional tracked along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureSet {
    pub concurrence: f64,
    pub chsh_max: f64,
    pub entropy: f64,
    pub energy: f64,
    pub relative_entropy: RelativeEntropy,
    pub linear_entropy: f64,
    pub purity: f64,
}

impl MeasureSet {
    /// Evaluates all measures; the relative entropy is taken against
    /// `reference`, or is zero when no reference is given.
    pub fn evaluate(
        rho: &DensityMatrix,
        h: &CompositeHamiltonian,
        reference: Option<&DensityMatrix>,
        kappa: f64,
    ) -> MeasureSet {
        let purity = purity(rho);
        MeasureSet {
            concurrence: concurrence(rho),
            chsh_max: chsh_max(rho),
            entropy: entropy(rho, kappa),
            energy: energy(rho, h.matrix()),
            relative_entropy: reference
                .map(|r| relative_entropy(rho, r, kappa))
                .unwrap_or(RelativeEntropy::Finite(0.0)),
            linear_entropy: 1.0 - purity,
            purity,
        }
    }
}

/// Pearson correlation coefficient of two equally long samples.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::InvalidParameter(
            "pearson needs at least two samples".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let scale = (mx.abs() + my.abs()).max(1.0);
    if sxx <= (1e-14 * scale).powi(2) * n || syy <= (1e-14 * scale).powi(2) * n {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
