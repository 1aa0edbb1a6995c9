//! Initial-state ensembles around a Bell-diagonal reference.
//!
//! Two generators: the one-parameter mix toward the x-polarized product
//! state, and a random perturbation of `sqrt(rho0)` by Gaussian Pauli-product
//! noise, pulled back onto the surface of equal trace, energy and purity by
//! three Lagrange-type multipliers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{concurrence, relative_entropy};
use crate::qmat::{kron, pauli, sqrt_on_support, CMatrix, KERNEL_THRESHOLD};
use crate::states::{pure_x_state, validate, CompositeHamiltonian, DensityMatrix};

/// Residual max-abs accepted as a root.
pub const ROOT_TOL: f64 = 1e-10;
/// Roots closer than this are the same root.
pub const DEDUP_DIST: f64 = 1e-6;
pub const MAX_NEWTON_ITERS: usize = 200;
/// Extra draws allowed per record after the first one fails.
pub const MAX_RETRIES: usize = 8;

const GRID: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

/// `zeta rho0 + (1 - zeta) |++><++|`.
pub fn weighted_average(rho0: &DensityMatrix, zeta: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&zeta) {
        return Err(Error::InvalidParameter(format!("zeta must lie in [0, 1], got {zeta}")));
    }
    Ok(rho0.mix(&pure_x_state(), zeta))
}

/// Real coefficients `eta_ij` of the perturbation `1/2 sum eta_ij sigma_i (x) sigma_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuePerturbation {
    pub eta: [[f64; 4]; 4],
    pub sigma: f64,
    pub seed: u64,
}

impl GuePerturbation {
    pub fn zero() -> Self {
        GuePerturbation {
            eta: [[0.0; 4]; 4],
            sigma: 0.0,
            seed: 0,
        }
    }

    pub fn matrix(&self) -> CMatrix {
        let mut m = CMatrix::zeros(4);
        for (i, row) in self.eta.iter().enumerate() {
            let si = pauli(i).expect("pauli");
            for (j, &e) in row.iter().enumerate() {
                m += kron(&si, &pauli(j).expect("pauli")).expect("2x2").scale(0.5 * e);
            }
        }
        m
    }

    fn draw(sigma: f64, seed: u64, rng: &mut ChaCha8Rng) -> Result<Self> {
        let normal = Normal::new(0.0, sigma)
            .map_err(|e| Error::InvalidParameter(format!("sigma = {sigma}: {e}")))?;
        let mut eta = [[0.0; 4]; 4];
        for row in eta.iter_mut() {
            for e in row.iter_mut() {
                *e = normal.sample(rng);
            }
        }
        Ok(GuePerturbation { eta, sigma, seed })
    }
}

pub fn sample_gue(sigma: f64, seed: u64) -> Result<GuePerturbation> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    GuePerturbation::draw(sigma, seed, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `sqrt(rho0) + 1/2 sum eta_ij sigma_i (x) sigma_j`.
pub fn perturb_sqrt(rho0: &DensityMatrix, eta: &GuePerturbation) -> CMatrix {
    sqrt_on_support(rho0, KERNEL_THRESHOLD).expect("state is Hermitian") + eta.matrix()
}

/// The restoration map `lambda -> gamma_eps - sum lambda_i K_i` and the three
/// conserved quantities it has to hit.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    gamma_eps: CMatrix,
    h: CMatrix,
    k: [CMatrix; 3],
    targets: [f64; 3],
}

impl ConstraintSystem {
    pub fn new(gamma_eps: &CMatrix, h: &CompositeHamiltonian, rho0: &DensityMatrix) -> Self {
        let g = *gamma_eps;
        let hm = *h.matrix();
        let g2 = g * g;
        let k = [
            g.scale(2.0),
            hm * g + g * hm,
            // -{2 g^2 - I, g}
            (g2 * g).scale(-4.0) + g.scale(2.0),
        ];
        ConstraintSystem {
            gamma_eps: g,
            h: hm,
            k,
            targets: [rho0.trace().re, rho0.trace_product(&hm).re, rho0.trace_product(rho0).re],
        }
    }

    pub fn targets(&self) -> [f64; 3] {
        self.targets
    }

    pub fn gamma_r(&self, lambda: &[f64; 3]) -> CMatrix {
        let mut g = self.gamma_eps;
        for (l, k) in lambda.iter().zip(&self.k) {
            g -= k.scale(*l);
        }
        g
    }

    /// `(Tr g^2 - 1, Tr(g^2 H) - E0, Tr g^4 - P0)` at `g = gamma_r(lambda)`.
    pub fn residuals(&self, lambda: &[f64; 3]) -> [f64; 3] {
        let g = self.gamma_r(lambda);
        let g2 = g * g;
        [
            g2.trace().re - self.targets[0],
            g2.trace_product(&self.h).re - self.targets[1],
            g2.trace_product(&g2).re - self.targets[2],
        ]
    }

    pub fn jacobian(&self, lambda: &[f64; 3]) -> [[f64; 3]; 3] {
        let g = self.gamma_r(lambda);
        let g3 = g * g * g;
        let mut jac = [[0.0; 3]; 3];
        for (i, k) in self.k.iter().enumerate() {
            let gk = g * *k;
            jac[0][i] = -2.0 * gk.trace().re;
            jac[1][i] = -(gk + *k * g).trace_product(&self.h).re;
            jac[2][i] = -4.0 * g3.trace_product(k).re;
        }
        jac
    }
}

pub fn constraint_residuals(
    lambda: &[f64; 3],
    gamma_eps: &CMatrix,
    h: &CompositeHamiltonian,
    rho0: &DensityMatrix,
) -> [f64; 3] {
    ConstraintSystem::new(gamma_eps, h, rho0).residuals(lambda)
}

fn max_abs3(v: &[f64; 3]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    let scale = a.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&p, &q| m[p][col].abs().total_cmp(&m[q][col].abs()))?;
        if m[piv][col].abs() <= 1e-14 * scale {
            return None;
        }
        m.swap(col, piv);
        for row in (col + 1)..3 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = ((i + 1)..3).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][3] - s) / m[i][i];
    }
    Some(x)
}

fn newton(sys: &ConstraintSystem, start: [f64; 3]) -> Option<([f64; 3], f64)> {
    let mut lambda = start;
    let mut r = sys.residuals(&lambda);
    let mut norm = max_abs3(&r);
    for _ in 0..MAX_NEWTON_ITERS {
        if norm <= ROOT_TOL {
            break;
        }
        let step = solve3(sys.jacobian(&lambda), [-r[0], -r[1], -r[2]])?;
        let mut t = 1.0;
        loop {
            let trial = [
                lambda[0] + t * step[0],
                lambda[1] + t * step[1],
                lambda[2] + t * step[2],
            ];
            let rt = sys.residuals(&trial);
            let nt = max_abs3(&rt);
            if nt < norm {
                lambda = trial;
                r = rt;
                norm = nt;
                break;
            }
            t *= 0.5;
            if t < 1e-10 {
                return None;
            }
        }
        if lambda.iter().any(|l| !l.is_finite() || l.abs() > 1e6) {
            return None;
        }
    }
    if norm > ROOT_TOL {
        return None;
    }
    // A couple of polishing steps; keep them only if they help.
    for _ in 0..3 {
        let Some(step) = solve3(sys.jacobian(&lambda), [-r[0], -r[1], -r[2]]) else {
            break;
        };
        let trial = [lambda[0] + step[0], lambda[1] + step[1], lambda[2] + step[2]];
        let rt = sys.residuals(&trial);
        if max_abs3(&rt) >= norm {
            break;
        }
        lambda = trial;
        r = rt;
        norm = max_abs3(&rt);
    }
    Some((lambda, norm))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub lambda: [f64; 3],
    pub residual: f64,
}

/// Multi-start damped Newton over the grid `{-1, -1/2, 0, 1/2, 1}^3`.
///
/// Roots are returned sorted by `|lambda|`, so the unperturbed root comes
/// first when it exists.
pub fn solve_constraints(
    gamma_eps: &CMatrix,
    h: &CompositeHamiltonian,
    rho0: &DensityMatrix,
) -> Result<Vec<Root>> {
    let sys = ConstraintSystem::new(gamma_eps, h, rho0);
    let mut roots: Vec<Root> = Vec::new();
    for a in GRID {
        for b in GRID {
            for c in GRID {
                let Some((lambda, residual)) = newton(&sys, [a, b, c]) else {
                    continue;
                };
                let dup = roots.iter().any(|r| {
                    let d2: f64 = (0..3).map(|i| (r.lambda[i] - lambda[i]).powi(2)).sum();
                    d2.sqrt() < DEDUP_DIST
                });
                if !dup {
                    roots.push(Root { lambda, residual });
                }
            }
        }
    }
    if roots.is_empty() {
        return Err(Error::NoRootFound);
    }
    let norm = |r: &Root| r.lambda.iter().map(|x| x * x).sum::<f64>();
    roots.sort_by(|p, q| norm(p).total_cmp(&norm(q)));
    Ok(roots)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRecord {
    pub index: usize,
    /// Draw number within this record's RNG stream that produced the state.
    pub attempt: usize,
    pub eta: GuePerturbation,
    pub all_roots: Vec<Root>,
    pub selected_root: usize,
    #[serde(skip, default = "placeholder_state")]
    pub rho_perturbed: Option<DensityMatrix>,
    pub constraint_residuals: [f64; 3],
    pub concurrence_distance: f64,
}

fn placeholder_state() -> Option<DensityMatrix> {
    None
}

impl PerturbationRecord {
    pub fn state(&self) -> &DensityMatrix {
        self.rho_perturbed.as_ref().expect("record built by select_root")
    }
}

/// Keeps the root whose state is closest in concurrence to `rho0`; ties go to
/// the smaller relative entropy `D(rho || rho0)`, then to the earlier root.
pub fn select_root(
    roots: &[Root],
    eta: &GuePerturbation,
    h: &CompositeHamiltonian,
    rho0: &DensityMatrix,
) -> Result<PerturbationRecord> {
    let gamma_eps = perturb_sqrt(rho0, eta);
    let sys = ConstraintSystem::new(&gamma_eps, h, rho0);
    let e0 = concurrence(rho0);
    let mut best: Option<(usize, f64, f64, DensityMatrix)> = None;
    for (k, root) in roots.iter().enumerate() {
        let g = sys.gamma_r(&root.lambda);
        let Ok(rho) = validate(&(g * g).hermitian_part()) else {
            continue;
        };
        let dist = (concurrence(&rho) - e0).abs();
        let better = match &best {
            None => true,
            Some((_, bd, brel, _)) => {
                // Distinct roots can square to the same state (sign flips of
                // gamma); exact ties keep the earlier, smaller-|lambda| root.
                if (dist - bd).abs() <= 1e-12 {
                    relative_entropy(&rho, rho0, KERNEL_THRESHOLD).value() < *brel - 1e-12
                } else {
                    dist < *bd
                }
            }
        };
        if better {
            let rel = relative_entropy(&rho, rho0, KERNEL_THRESHOLD).value();
            best = Some((k, dist, rel, rho));
        }
    }
    let (k, dist, _, rho) = best.ok_or(Error::AllRootsInvalid { roots: roots.len() })?;
    Ok(PerturbationRecord {
        index: 0,
        attempt: 0,
        eta: *eta,
        all_roots: roots.to_vec(),
        selected_root: k,
        rho_perturbed: Some(rho),
        constraint_residuals: sys.residuals(&roots[k].lambda),
        concurrence_distance: dist,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchDiagnostics {
    pub requested: usize,
    pub produced: usize,
    /// Records whose every draw failed.
    pub failed_records: Vec<usize>,
    pub resampled_draws: usize,
    pub no_root: usize,
    pub all_roots_invalid: usize,
    pub max_root_count: usize,
}

impl BatchDiagnostics {
    pub fn failure_fraction(&self) -> f64 {
        if self.requested == 0 {
            0.0
        } else {
            self.failed_records.len() as f64 / self.requested as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct Batch {
    pub records: Vec<PerturbationRecord>,
    pub diagnostics: BatchDiagnostics,
}

struct Outcome {
    record: Option<PerturbationRecord>,
    no_root: usize,
    invalid: usize,
}

fn generate_one(index: usize, sigma: f64, seed: u64, rho0: &DensityMatrix, h: &CompositeHamiltonian) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Outcome {
        record: None,
        no_root: 0,
        invalid: 0,
    };
    for attempt in 0..=MAX_RETRIES {
        let eta = GuePerturbation::draw(sigma, seed, &mut rng)?;
        let roots = match solve_constraints(&perturb_sqrt(rho0, &eta), h, rho0) {
            Ok(r) => r,
            Err(_) => {
                out.no_root += 1;
                continue;
            }
        };
        match select_root(&roots, &eta, h, rho0) {
            Ok(mut rec) => {
                rec.index = index;
                rec.attempt = attempt;
                out.record = Some(rec);
                return Ok(out);
            }
            Err(_) => out.invalid += 1,
        }
    }
    log::warn!("record {index} (seed {seed}) failed after {} draws", MAX_RETRIES + 1);
    Ok(out)
}

/// `n` records with seeds `base_seed + index`; independent of thread count.
pub fn generate_batch(
    n: usize,
    sigma: f64,
    base_seed: u64,
    rho0: &DensityMatrix,
    h: &CompositeHamiltonian,
) -> Result<Batch> {
    if n == 0 {
        return Err(Error::InvalidParameter("batch size must be at least 1".into()));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let outcomes: Vec<Outcome> = (0..n)
        .into_par_iter()
        .map(|i| generate_one(i, sigma, base_seed.wrapping_add(i as u64), rho0, h))
        .collect::<Result<_>>()?;

    let mut diag = BatchDiagnostics {
        requested: n,
        ..Default::default()
    };
    let mut records = Vec::with_capacity(n);
    for (i, o) in outcomes.into_iter().enumerate() {
        diag.no_root += o.no_root;
        diag.all_roots_invalid += o.invalid;
        match o.record {
            Some(r) => {
                diag.resampled_draws += r.attempt;
                diag.max_root_count = diag.max_root_count.max(r.all_roots.len());
                records.push(r);
            }
            None => {
                diag.resampled_draws += MAX_RETRIES;
                diag.failed_records.push(i);
            }
        }
    }
    diag.produced = records.len();
    Ok(Batch {
        records,
        diagnostics: diag,
    })
}
