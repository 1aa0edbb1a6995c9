//! Dense complex matrices for single- and two-qubit operators.
//!
//! Everything in this crate lives in either a 2-dimensional (one qubit) or a
//! 4-dimensional (two qubits) Hilbert space, so [`CMatrix`] stores its entries
//! inline in a fixed 16-slot array and is `Copy`. The two-qubit basis is
//! ordered `|00>, |01>, |10>, |11>` with subsystem A as the left Kronecker
//! factor.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Default kernel threshold for support projections and matrix functions.
pub const KERNEL_THRESHOLD: f64 = 1e-12;

/// Tolerance on `max |m - m^dagger|` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Square complex matrix of dimension 2 or 4, row-major.
#[derive(Clone, Copy, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: [C64; 16],
}

/// One side of the bipartition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Subsystem {
    A,
    B,
}

impl Subsystem {
    pub fn other(self) -> Subsystem {
        match self {
            Subsystem::A => Subsystem::B,
            Subsystem::B => Subsystem::A,
        }
    }
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 2 || dim == 4, "CMatrix dimension must be 2 or 4, got {dim}");
        CMatrix { dim, data: [ZERO; 16] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from real rows. Panics if the rows are not square.
    pub fn from_real_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        Self::from_fn(N, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn from_rows<const N: usize>(rows: [[C64; N]; N]) -> Self {
        Self::from_fn(N, |i, j| rows[i][j])
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(*v, 0.0);
        }
        m
    }

    /// Outer product `|u><v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        assert_eq!(u.len(), v.len());
        Self::from_fn(u.len(), |i, j| u[i] * v[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(i, j)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &CMatrix) -> C64 {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        for z in out.data.iter_mut() {
            *z *= s;
        }
        out
    }

    pub fn scale_c(&self, s: C64) -> Self {
        let mut out = *self;
        for z in out.data.iter_mut() {
            *z *= s;
        }
        out
    }

    pub fn entries(&self) -> impl Iterator<Item = &C64> {
        self.data[..self.dim * self.dim].iter()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |m - m^dagger|` over entries.
    pub fn hermitian_violation(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_violation() <= tol
    }

    /// `(m + m^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        (*self - *other).max_abs()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.dim && j < self.dim);
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.dim && j < self.dim);
        &mut self.data[i * self.dim + j]
    }
}

impl Add for CMatrix {
    type Output = CMatrix;
    fn add(mut self, rhs: CMatrix) -> CMatrix {
        self += rhs;
        self
    }
}

impl AddAssign for CMatrix {
    fn add_assign(&mut self, rhs: CMatrix) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in addition");
        for (a, b) in self.data.iter_mut().zip(rhs.data.iter()) {
            *a += *b;
        }
    }
}

impl Sub for CMatrix {
    type Output = CMatrix;
    fn sub(mut self, rhs: CMatrix) -> CMatrix {
        self -= rhs;
        self
    }
}

impl SubAssign for CMatrix {
    fn sub_assign(&mut self, rhs: CMatrix) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in subtraction");
        for (a, b) in self.data.iter_mut().zip(rhs.data.iter()) {
            *a -= *b;
        }
    }
}

impl Neg for CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale(-1.0)
    }
}

impl Mul for CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: CMatrix) -> CMatrix {
        &self * &rhs
    }
}

impl Mul<&CMatrix> for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in product");
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Mul<f64> for CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: f64) -> CMatrix {
        self.scale(rhs)
    }
}

impl Mul<CMatrix> for f64 {
    type Output = CMatrix;
    fn mul(self, rhs: CMatrix) -> CMatrix {
        rhs.scale(self)
    }
}

impl Mul<C64> for CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: C64) -> CMatrix {
        self.scale_c(rhs)
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Pauli matrix by index: 0 = identity, 1 = x, 2 = y, 3 = z.
pub fn pauli(index: usize) -> Result<CMatrix> {
    let i = C64::new(0.0, 1.0);
    let m = match index {
        0 => CMatrix::identity(2),
        1 => CMatrix::from_rows([[ZERO, ONE], [ONE, ZERO]]),
        2 => CMatrix::from_rows([[ZERO, -i], [i, ZERO]]),
        3 => CMatrix::from_rows([[ONE, ZERO], [ZERO, -ONE]]),
        other => return Err(Error::PauliIndex(other)),
    };
    Ok(m)
}

/// Kronecker product of two single-qubit operators.
pub fn kron(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    check_dim(a, 2)?;
    check_dim(b, 2)?;
    Ok(CMatrix::from_fn(4, |r, c| {
        a[(r / 2, c / 2)] * b[(r % 2, c % 2)]
    }))
}

/// Reduced operator on the kept subsystem.
pub fn partial_trace(m: &CMatrix, keep: Subsystem) -> Result<CMatrix> {
    check_dim(m, 4)?;
    let out = match keep {
        Subsystem::A => CMatrix::from_fn(2, |a, ap| {
            (0..2).map(|b| m[(2 * a + b, 2 * ap + b)]).sum()
        }),
        Subsystem::B => CMatrix::from_fn(2, |b, bp| {
            (0..2).map(|a| m[(2 * a + b, 2 * a + bp)]).sum()
        }),
    };
    Ok(out)
}

/// Embeds a single-qubit operator on `site` into the two-qubit space,
/// tensored with `rest` on the other side.
pub fn embed(op: &CMatrix, rest: &CMatrix, site: Subsystem) -> Result<CMatrix> {
    match site {
        Subsystem::A => kron(op, rest),
        Subsystem::B => kron(rest, op),
    }
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    check_dim(b, a.dim())?;
    Ok(a * b - b * a)
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    check_dim(b, a.dim())?;
    Ok(a * b + b * a)
}

fn check_dim(m: &CMatrix, expected: usize) -> Result<()> {
    if m.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: m.dim(),
        });
    }
    Ok(())
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone, Copy)]
pub struct HermitianEig {
    values: [f64; 4],
    /// Eigenvectors stored as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl HermitianEig {
    /// Eigenvalues in ascending order.
    pub fn values(&self) -> &[f64] {
        &self.values[..self.vectors.dim()]
    }

    pub fn dim(&self) -> usize {
        self.vectors.dim()
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// Rebuilds `sum_k g(w_k) |v_k><v_k|`.
    pub fn rebuild(&self, mut g: impl FnMut(f64) -> f64) -> CMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n);
        for k in 0..n {
            let w = g(self.values[k]);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vi * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.rebuild(|w| w)
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Eigenvalues are returned in ascending order. Each eigenvector is
/// re-orthogonalized against the preceding columns (Gram-Schmidt in index
/// order) and its phase fixed so that its largest-magnitude component is real
/// and positive, which makes the output a deterministic function of the input.
pub fn eig_hermitian(m: &CMatrix) -> Result<HermitianEig> {
    let violation = m.hermitian_violation();
    if violation > HERMITIAN_TOL {
        return Err(Error::NonHermitian { violation });
    }
    Ok(jacobi(&m.hermitian_part()))
}

fn jacobi(m: &CMatrix) -> HermitianEig {
    let n = m.dim();
    let mut a = *m;
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-18 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = 0.5 * (2.0 * mag).atan2(aqq - app);
                let (s, c) = theta.sin_cos();
                let cph = phase.conj();

                // a <- a G, with G = diag-phase * real rotation on (p, q)
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * cph * s;
                    a[(k, q)] = akp * s + akq * cph * c;
                }
                // a <- G^dagger a
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * phase * s;
                    a[(q, k)] = apk * s + aqk * phase * c;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * cph * s;
                    v[(k, q)] = vkp * s + vkq * cph * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));

    let mut values = [0.0; 4];
    let mut vectors = CMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        values[col] = a[(src, src)].re;
        let mut u: Vec<C64> = v.column(src);
        for prev in 0..col {
            let proj: C64 = (0..n).map(|i| vectors[(i, prev)].conj() * u[i]).sum();
            for (i, ui) in u.iter_mut().enumerate() {
                *ui -= vectors[(i, prev)] * proj;
            }
        }
        let norm = u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut lead = 0;
        for i in 1..n {
            if u[i].norm() > u[lead].norm() + 1e-12 {
                lead = i;
            }
        }
        let fix = u[lead].conj() / (u[lead].norm() * norm);
        for (i, ui) in u.iter().enumerate() {
            vectors[(i, col)] = *ui * fix;
        }
    }
    HermitianEig { values, vectors }
}

/// Applies `f` to every eigenvalue of a Hermitian matrix.
pub fn matrix_func(m: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    let eig = eig_hermitian(m)?;
    Ok(eig.rebuild(f))
}

/// Applies `f` only on the support of a PSD matrix: eigenvalues at or below
/// `kappa` are mapped to zero.
pub fn matrix_func_on_support(
    m: &CMatrix,
    f: impl Fn(f64) -> f64,
    kappa: f64,
) -> Result<CMatrix> {
    let eig = eig_hermitian(m)?;
    func_on_support(&eig, f, kappa)
}

pub(crate) fn func_on_support(
    eig: &HermitianEig,
    f: impl Fn(f64) -> f64,
    kappa: f64,
) -> Result<CMatrix> {
    for &w in eig.values() {
        if w > kappa && !f(w).is_finite() {
            return Err(Error::FunctionUndefined { eigenvalue: w });
        }
    }
    Ok(eig.rebuild(|w| if w > kappa { f(w) } else { 0.0 }))
}

/// `B ln m` with `B` the support projector.
pub fn log_on_support(m: &CMatrix, kappa: f64) -> Result<CMatrix> {
    matrix_func_on_support(m, f64::ln, kappa)
}

pub fn sqrt_on_support(m: &CMatrix, kappa: f64) -> Result<CMatrix> {
    matrix_func_on_support(m, f64::sqrt, kappa)
}

/// Orthogonal projector onto the range of a PSD matrix.
#[derive(Debug, Clone, Copy)]
pub struct SupportProjector {
    pub matrix: CMatrix,
    pub rank: usize,
    pub threshold: f64,
}

impl SupportProjector {
    /// Projector onto the kernel, `I - B`.
    pub fn kernel(&self) -> CMatrix {
        CMatrix::identity(self.matrix.dim()) - self.matrix
    }
}

pub fn range_projector(m: &CMatrix, kappa: f64) -> Result<SupportProjector> {
    let eig = eig_hermitian(m)?;
    let rank = eig.values().iter().filter(|&&w| w > kappa).count();
    Ok(SupportProjector {
        matrix: eig.rebuild(|w| if w > kappa { 1.0 } else { 0.0 }),
        rank,
        threshold: kappa,
    })
}

/// Eigenvalues of a real symmetric 3x3 matrix, ascending.
pub(crate) fn symmetric3_eigenvalues(m: [[f64; 3]; 3]) -> [f64; 3] {
    // Jacobi on the real matrix; a 3x3 symmetric block does not fit CMatrix.
    let mut a = m;
    for _ in 0..64 {
        let off = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
        if off < 1e-36 {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..3 {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (2.0 * a[p][q]).atan2(a[q][q] - a[p][p]);
                let (s, c) = theta.sin_cos();
                for row in a.iter_mut() {
                    let (kp, kq) = (row[p], row[q]);
                    row[p] = c * kp - s * kq;
                    row[q] = s * kp + c * kq;
                }
                for k in 0..3 {
                    let (pk, qk) = (a[p][k], a[q][k]);
                    a[p][k] = c * pk - s * qk;
                    a[q][k] = s * pk + c * qk;
                }
            }
        }
    }
    let mut w = [a[0][0], a[1][1], a[2][2]];
    w.sort_by(f64::total_cmp);
    w
}
