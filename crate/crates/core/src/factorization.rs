//! Products of positive elements.
//!
//! For `A = ⊕ M_{n_i}` an invertible element lies in the closure of the
//! products of positives exactly when its unitary polar part has determinant
//! one in every block. This module builds the constructive side of that
//! statement: the unitary polar path of `e^{tc}e^{td}`, its splitting into
//! short exponentials whose logs sum into the commutator subspace, explicit
//! commutators `vwv*w*` for determinant-one unitaries, and a numerical
//! factorizer into `m` positive factors. For elements outside the closure a
//! multi-start probe bounds the distance from above.

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{hermitian_part, unitary_eigen, AlgebraDescriptor, Block, Element, DEFAULT_BRANCH_GAP};
use crate::error::{Error, Result};
use crate::optimize::{self, BfgsOptions};
use crate::path::InvertiblePath;
use crate::sample;

/// Default phase tolerance of [`membership_test`].
pub const MEMBERSHIP_TOL: f64 = 1e-8;
/// Default bound on `‖u_{t_{k-1}}⁻¹u_{t_k} − 1‖` in [`split_into_exponentials`].
pub const DEFAULT_MAX_STEP_NORM: f64 = 0.5;
/// Largest number of steps an exponential splitting may use.
pub const MAX_PARTITION: usize = 1 << 16;
/// Default number of positive factors.
pub const DEFAULT_FACTORS: usize = 5;
/// Restarts are run in batches of this size; the search stops after the
/// first batch whose best run meets the target.
pub const RESTART_BATCH: usize = 4;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `t ↦ e^{tc}e^{td}·|e^{tc}e^{td}|⁻¹` on `[0, 1]`.
pub fn polar_path(c: &Element, d: &Element) -> Result<InvertiblePath> {
    InvertiblePath::product_polar(c.clone(), d.clone())
}

/// `u = ∏ e^{ih_k}` over a partition `0 = t₀ < … < t_N = 1` of a unitary path.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExponentialSplitting {
    pub partition: Vec<f64>,
    pub logs: Vec<Element>,
    pub endpoint: Element,
}

impl ExponentialSplitting {
    pub fn len(&self) -> usize {
        self.logs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logs.is_empty()
    }

    /// `∏_k e^{ih_k}`, left to right.
    pub fn product(&self) -> Result<Element> {
        let mut acc = Element::identity(self.endpoint.algebra());
        for h in &self.logs {
            acc = acc.mul(&h.exp_i_self_adjoint()?)?;
        }
        Ok(acc)
    }

    pub fn log_sum(&self) -> Result<Element> {
        let mut acc = Element::zero(self.endpoint.algebra());
        for h in &self.logs {
            acc = acc.add(h)?;
        }
        Ok(acc)
    }

    /// `‖∏ e^{ih_k} − u(1)‖`.
    pub fn reconstruction_error(&self) -> Result<f64> {
        self.product()?.distance(&self.endpoint)
    }
}

/// Split a unitary path starting at the identity into short exponentials.
///
/// Intervals are bisected until every step `u_a⁻¹u_b`, and both of its half
/// steps, lie within `max_step_norm` of the identity.
pub fn split_into_exponentials(path: &InvertiblePath, max_step_norm: f64) -> Result<ExponentialSplitting> {
    let [lo, hi] = path.domain();
    let alg = path.algebra().clone();
    let start = unitary_value(path, lo)?;
    let defect = start.distance(&Element::identity(&alg))?;
    if defect > 1e-8 {
        return Err(Error::InvalidPath(format!("path must start at the identity (defect {defect:e})")));
    }
    let end = unitary_value(path, hi)?;
    let mut partition = vec![lo];
    let mut steps = Vec::new();
    bisect(path, (lo, &start), (hi, &end), 0, max_step_norm, &mut partition, &mut steps)?;
    let logs = steps
        .iter()
        .map(|s| s.log_unitary_principal(DEFAULT_BRANCH_GAP))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExponentialSplitting { partition, logs, endpoint: end })
}

fn unitary_value(path: &InvertiblePath, t: f64) -> Result<Element> {
    let u = path.evaluate(t)?;
    let defect = u.unitary_defect();
    if defect > 1e-8 {
        return Err(Error::NotUnitaryPath { t, defect });
    }
    Ok(u)
}

fn step_norm(from: &Element, to: &Element) -> Result<f64> {
    Ok(from.adjoint().mul(to)?.sub(&Element::identity(from.algebra()))?.op_norm())
}

fn bisect(
    path: &InvertiblePath,
    (a, ua): (f64, &Element),
    (b, ub): (f64, &Element),
    depth: u32,
    max_step_norm: f64,
    partition: &mut Vec<f64>,
    steps: &mut Vec<Element>,
) -> Result<()> {
    let mid = 0.5 * (a + b);
    let um = unitary_value(path, mid)?;
    let fine = step_norm(ua, ub)? <= max_step_norm
        && step_norm(ua, &um)? <= max_step_norm
        && step_norm(&um, ub)? <= max_step_norm;
    if fine {
        partition.push(b);
        steps.push(ua.adjoint().mul(ub)?);
        return Ok(());
    }
    if (1usize << (depth + 1)) > MAX_PARTITION {
        return Err(Error::PartitionOverflow { limit: MAX_PARTITION });
    }
    bisect(path, (a, ua), (mid, &um), depth + 1, max_step_norm, partition, steps)?;
    bisect(path, (mid, &um), (b, ub), depth + 1, max_step_norm, partition, steps)
}

/// Unitaries `v, w` with `v w v* w* = u` for `u` of determinant one in every block.
///
/// Per block, with `u = Q diag(e^{iθ_j}) Q*` and the phases ordered and
/// shifted so that `Σθ_j = 0`, take `M = diag(e^{iφ_j})` with partial sums
/// `φ_j = θ_1 + … + θ_j` and the cyclic shift `S`. Then `M·S M* S*` is
/// `diag(e^{i(φ_j − φ_{j−1})}) = diag(e^{iθ_j})`, so `v = QMQ*`, `w = QSQ*`.
pub fn commutator_factor_su(u: &Element) -> Result<(Element, Element)> {
    let defect = u.unitary_defect();
    if defect > 1e-8 {
        return Err(Error::NotUnitary { defect });
    }
    let mut vs = Vec::new();
    let mut ws = Vec::new();
    for (i, b) in u.blocks().iter().enumerate() {
        let n = b.nrows();
        let det = b.clone().determinant();
        if (det - Complex64::new(1.0, 0.0)).norm() > 1e-8 {
            return Err(Error::DeterminantNotOne { block: i, re: det.re, im: det.im });
        }
        let id = Block::identity(n, n);
        if (b - &id).norm() == 0.0 {
            vs.push(id.clone());
            ws.push(id);
            continue;
        }
        let (q, phases) = unitary_eigen(b);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| phases[x].total_cmp(&phases[y]));
        let q = Block::from_fn(n, n, |r, c| q[(r, order[c])]);
        let mut theta: Vec<f64> = order.iter().map(|&j| phases[j]).collect();
        let winding = (theta.iter().sum::<f64>() / (2.0 * std::f64::consts::PI)).round();
        theta[n - 1] -= 2.0 * std::f64::consts::PI * winding;
        let mut phi = 0.0;
        let m = Block::from_diagonal(&DVector::from_iterator(
            n,
            theta.iter().map(|t| {
                phi += t;
                Complex64::from_polar(1.0, phi)
            }),
        ));
        let shift = Block::from_fn(n, n, |r, c| if r == (c + 1) % n { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) });
        vs.push(&q * m * q.adjoint());
        ws.push(&q * shift * q.adjoint());
    }
    Ok((Element::from_blocks(vs)?, Element::from_blocks(ws)?))
}

/// `v w v* w*`.
pub fn group_commutator(v: &Element, w: &Element) -> Result<Element> {
    Element::product([v, w, &v.adjoint(), &w.adjoint()])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub member: bool,
    /// `arg det` of the unitary polar part, per block, in `(−π, π]`.
    pub phases: Vec<f64>,
    pub tol: f64,
}

/// Whether invertible `x` lies in the closure of the products of positives:
/// every block of its unitary polar part must have determinant phase within `tol` of 0.
pub fn membership_test(x: &Element, tol: f64) -> Result<Membership> {
    let (u, _) = x.polar()?;
    let phases: Vec<f64> = u.block_determinants().iter().map(|d| d.arg()).collect();
    let member = phases.iter().all(|p| p.abs() <= tol);
    Ok(Membership { member, phases, tol })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Success threshold on `‖∏ p_j − x‖ / ‖x‖`.
    pub target_residual: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { restarts: 16, max_iterations: 2000, gradient_tolerance: 1e-10, target_residual: 1e-6, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositiveFactorization {
    pub factors: Vec<Element>,
    /// `‖∏ factors − target‖` in operator norm.
    pub residual: f64,
    pub target: Element,
    /// Restart that produced the factors, if any.
    pub restart: Option<usize>,
}

impl PositiveFactorization {
    pub fn new(factors: Vec<Element>, target: Element, restart: Option<usize>) -> Result<Self> {
        let residual = Self::compute_residual(&factors, &target)?;
        Ok(Self { factors, residual, target, restart })
    }

    pub fn compute_residual(factors: &[Element], target: &Element) -> Result<f64> {
        Element::product(factors)?.distance(target)
    }

    pub fn relative_residual(&self) -> f64 {
        self.residual / self.target.op_norm()
    }

    pub fn product(&self) -> Result<Element> {
        Element::product(&self.factors)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FactorModel {
    /// `p = e^h`, `h` self-adjoint: positive invertible factors.
    Exponential,
    /// `p = bb*`: arbitrary positive factors, singular ones included.
    Gram,
}

enum FactorCache {
    Exponential { q: Block, lambda: DVector<f64> },
    Gram { b: Block },
}

struct Problem<'a> {
    target: &'a Element,
    factors: usize,
    model: FactorModel,
    norm2: f64,
}

impl<'a> Problem<'a> {
    fn new(target: &'a Element, factors: usize, model: FactorModel) -> Self {
        let norm2 = target.frobenius_norm().powi(2).max(f64::MIN_POSITIVE);
        Self { target, factors, model, norm2 }
    }

    fn block_params(&self, n: usize) -> usize {
        match self.model {
            FactorModel::Exponential => n * n,
            FactorModel::Gram => 2 * n * n,
        }
    }

    fn sizes(&self) -> &[usize] {
        self.target.algebra().block_sizes()
    }

    fn dim(&self) -> usize {
        self.factors * self.sizes().iter().map(|&n| self.block_params(n)).sum::<usize>()
    }

    /// Offset of factor `j`, block `b`, in the parameter vector.
    fn offset(&self, j: usize, block: usize) -> usize {
        let per_factor: usize = self.sizes().iter().map(|&n| self.block_params(n)).sum();
        let within: usize = self.sizes()[..block].iter().map(|&n| self.block_params(n)).sum();
        j * per_factor + within
    }

    fn factor_block(&self, p: &[f64], n: usize) -> (Block, FactorCache) {
        match self.model {
            FactorModel::Exponential => {
                let eig = SymmetricEigen::new(hermitian_from_params(p, n));
                let q = eig.eigenvectors;
                let lambda = eig.eigenvalues;
                let d = Block::from_diagonal(&lambda.map(|l| Complex64::new(l.exp(), 0.0)));
                let value = hermitian_part(&(&q * d * q.adjoint()));
                (value, FactorCache::Exponential { q, lambda })
            }
            FactorModel::Gram => {
                let b = Block::from_fn(n, n, |r, c| {
                    let k = 2 * (r * n + c);
                    Complex64::new(p[k], p[k + 1])
                });
                (hermitian_part(&(&b * b.adjoint())), FactorCache::Gram { b })
            }
        }
    }

    /// Write the gradient with respect to the factor's parameters given the
    /// Euclidean gradient `g` with respect to the factor itself.
    fn backprop(&self, g: &Block, cache: &FactorCache, out: &mut [f64], scale: f64) {
        match cache {
            FactorCache::Exponential { q, lambda } => {
                let n = lambda.len();
                let mut gp = q.adjoint() * g * q;
                for k in 0..n {
                    for l in 0..n {
                        gp[(k, l)] *= exp_divided_difference(lambda[k], lambda[l]);
                    }
                }
                let gh = q * gp * q.adjoint();
                let mut idx = 0;
                for k in 0..n {
                    out[idx] = scale * gh[(k, k)].re;
                    idx += 1;
                }
                for k in 0..n {
                    for l in k + 1..n {
                        out[idx] = scale * (gh[(k, l)].re + gh[(l, k)].re);
                        out[idx + 1] = scale * (gh[(k, l)].im - gh[(l, k)].im);
                        idx += 2;
                    }
                }
            }
            FactorCache::Gram { b } => {
                let n = b.nrows();
                let z = (g + g.adjoint()) * b;
                for r in 0..n {
                    for c in 0..n {
                        let k = 2 * (r * n + c);
                        out[k] = scale * z[(r, c)].re;
                        out[k + 1] = scale * z[(r, c)].im;
                    }
                }
            }
        }
    }

    /// `‖∏ p_j − x‖_F² / ‖x‖_F²` and its gradient.
    fn value_and_gradient(&self, theta: &DVector<f64>) -> (f64, DVector<f64>) {
        let m = self.factors;
        let mut grad = DVector::zeros(theta.len());
        let mut value = 0.0;
        let scale = 2.0 / self.norm2;
        for (bi, (&n, xb)) in self.sizes().iter().zip(self.target.blocks()).enumerate() {
            let np = self.block_params(n);
            let built: Vec<(Block, FactorCache)> = (0..m)
                .map(|j| {
                    let o = self.offset(j, bi);
                    self.factor_block(&theta.as_slice()[o..o + np], n)
                })
                .collect();
            let id = Block::identity(n, n);
            let mut prefix = Vec::with_capacity(m + 1);
            prefix.push(id.clone());
            for (p, _) in &built {
                let next = prefix.last().unwrap() * p;
                prefix.push(next);
            }
            let mut suffix = vec![id; m + 1];
            for j in (0..m).rev() {
                suffix[j] = &built[j].0 * &suffix[j + 1];
            }
            let r = &prefix[m] - xb;
            value += r.norm_squared();
            for (j, (_, cache)) in built.iter().enumerate() {
                let g = prefix[j].adjoint() * &r * suffix[j + 1].adjoint();
                let o = self.offset(j, bi);
                self.backprop(&g, cache, &mut grad.as_mut_slice()[o..o + np], scale);
            }
        }
        (value / self.norm2, grad)
    }

    fn elements(&self, theta: &DVector<f64>) -> Vec<Element> {
        (0..self.factors)
            .map(|j| {
                let blocks = self
                    .sizes()
                    .iter()
                    .enumerate()
                    .map(|(bi, &n)| {
                        let o = self.offset(j, bi);
                        self.factor_block(&theta.as_slice()[o..o + self.block_params(n)], n).0
                    })
                    .collect();
                Element::from_blocks(blocks).expect("shapes follow the target")
            })
            .collect()
    }

    /// Exponential-model parameters `h_j = log p_j`, if every factor is invertible.
    fn params_from_factors(&self, factors: &[Element]) -> Option<DVector<f64>> {
        let mut theta = DVector::zeros(self.dim());
        for (j, p) in factors.iter().enumerate() {
            let h = p.log_positive().ok()?;
            for (bi, block) in h.blocks().iter().enumerate() {
                let o = self.offset(j, bi);
                let n = block.nrows();
                write_hermitian_params(block, &mut theta.as_mut_slice()[o..o + self.block_params(n)]);
            }
        }
        theta.iter().all(|v| v.is_finite()).then_some(theta)
    }

    fn initial_point(&self, rng: &mut ChaCha8Rng, spread: f64) -> DVector<f64> {
        let mut theta = DVector::zeros(self.dim());
        let norm = self.target.op_norm().max(f64::MIN_POSITIVE);
        for j in 0..self.factors {
            for (bi, &n) in self.sizes().iter().enumerate() {
                let o = self.offset(j, bi);
                let slot = &mut theta.as_mut_slice()[o..o + self.block_params(n)];
                match self.model {
                    FactorModel::Exponential => {
                        let g = sample::hermitian_gaussian_block(n, rng);
                        let s = spread / (n as f64).sqrt();
                        let shift = norm.ln() / self.factors as f64;
                        write_hermitian_params(&(g * Complex64::new(s, 0.0)), slot);
                        for k in 0..n {
                            slot[k] += shift;
                        }
                    }
                    FactorModel::Gram => {
                        let level = norm.powf(0.5 / self.factors as f64);
                        for r in 0..n {
                            for c in 0..n {
                                let k = 2 * (r * n + c);
                                let diag = if r == c { level } else { 0.0 };
                                slot[k] = diag + level * 0.5 * rng.random_range(-1.0..1.0);
                                slot[k + 1] = level * 0.5 * rng.random_range(-1.0..1.0);
                            }
                        }
                    }
                }
            }
        }
        theta
    }
}

fn hermitian_from_params(p: &[f64], n: usize) -> Block {
    let mut h = Block::zeros(n, n);
    for k in 0..n {
        h[(k, k)] = Complex64::new(p[k], 0.0);
    }
    let mut idx = n;
    for k in 0..n {
        for l in k + 1..n {
            h[(k, l)] = Complex64::new(p[idx], p[idx + 1]);
            h[(l, k)] = Complex64::new(p[idx], -p[idx + 1]);
            idx += 2;
        }
    }
    h
}

fn write_hermitian_params(h: &Block, out: &mut [f64]) {
    let n = h.nrows();
    for k in 0..n {
        out[k] = h[(k, k)].re;
    }
    let mut idx = n;
    for k in 0..n {
        for l in k + 1..n {
            out[idx] = h[(k, l)].re;
            out[idx + 1] = h[(k, l)].im;
            idx += 2;
        }
    }
}

/// `(e^a − e^b)/(a − b)`, equal to `e^a` on the diagonal.
fn exp_divided_difference(a: f64, b: f64) -> f64 {
    let half = 0.5 * (a - b);
    let sinhc = if half.abs() < 1e-4 { 1.0 + half * half / 6.0 } else { half.sinh() / half };
    (0.5 * (a + b)).exp() * sinhc
}

/// Size of the log-polar data of `x`, used to scale random initial factors.
fn log_polar_scale(x: &Element) -> f64 {
    let Ok((u, p)) = x.polar() else { return 1.0 };
    let a = p.log_positive().map(|l| l.op_norm()).unwrap_or(1.0);
    let b = u
        .unitary_phases()
        .map(|ph| ph.iter().flatten().fold(0.0f64, |m, t| m.max(t.abs())))
        .unwrap_or(1.0);
    (a + b).max(0.5)
}

struct Run {
    restart: usize,
    factors: Vec<Element>,
    residual: f64,
}

/// Multi-start BFGS on `problem`. With `polish`, each run is converted to
/// the exponential model and descended again from there.
fn run_restarts(problem: &Problem<'_>, polish: Option<&Problem<'_>>, opt: &OptimizerConfig, stop_below: Option<f64>) -> Result<Run> {
    let spread = log_polar_scale(problem.target);
    let bfgs = BfgsOptions {
        max_iterations: opt.max_iterations,
        gradient_tolerance: opt.gradient_tolerance,
        target_value: match stop_below {
            Some(rel) => {
                let frob_rel = 1e-2 * rel * problem.target.op_norm() / problem.norm2.sqrt();
                frob_rel * frob_rel
            }
            None => 0.0,
        },
    };
    let single = |r: usize| -> Result<Run> {
        let mut rng = ChaCha8Rng::seed_from_u64(opt.seed);
        rng.set_stream(r as u64);
        let x0 = problem.initial_point(&mut rng, spread);
        let result = optimize::minimize(&|theta: &DVector<f64>| problem.value_and_gradient(theta), x0, &bfgs);
        let mut factors = problem.elements(&result.x);
        if let Some(exp) = polish {
            let start = exp.params_from_factors(&factors).unwrap_or_else(|| exp.initial_point(&mut rng, spread));
            let polished = optimize::minimize(&|theta: &DVector<f64>| exp.value_and_gradient(theta), start, &bfgs);
            factors = exp.elements(&polished.x);
        }
        let residual = PositiveFactorization::compute_residual(&factors, problem.target)?;
        Ok(Run { restart: r, factors, residual })
    };
    let restarts = opt.restarts.max(1);
    let mut best: Option<Run> = None;
    let target_norm = problem.target.op_norm();
    for start in (0..restarts).step_by(RESTART_BATCH) {
        let batch: Vec<usize> = (start..(start + RESTART_BATCH).min(restarts)).collect();
        let runs = run_batch(&batch, &single)?;
        for run in runs {
            let better = match &best {
                None => true,
                Some(b) => run.residual < b.residual,
            };
            if better {
                best = Some(run);
            }
        }
        if let (Some(rel), Some(b)) = (stop_below, &best) {
            if b.residual <= rel * target_norm {
                break;
            }
        }
    }
    Ok(best.expect("at least one restart"))
}

#[cfg(feature = "parallel")]
fn run_batch<F>(batch: &[usize], single: &F) -> Result<Vec<Run>>
where
    F: Fn(usize) -> Result<Run> + Sync,
{
    use rayon::prelude::*;
    batch.par_iter().map(|&r| single(r)).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_batch<F>(batch: &[usize], single: &F) -> Result<Vec<Run>>
where
    F: Fn(usize) -> Result<Run> + Sync,
{
    batch.iter().map(|&r| single(r)).collect()
}

/// Factor invertible `x` in the closure of the products of positives into
/// `m` positive invertible factors `e^{h_1} ⋯ e^{h_m}`.
///
/// Each restart first descends in the Gram parameterization `p_j = b_j b_j*`,
/// which has far fewer spurious minima, then continues from `h_j = log p_j`.
pub fn factor_positive_products(x: &Element, m: usize, opt: &OptimizerConfig) -> Result<PositiveFactorization> {
    factor_positive_products_with_tol(x, m, opt, MEMBERSHIP_TOL)
}

/// [`factor_positive_products`] with an explicit phase tolerance for the membership precondition.
pub fn factor_positive_products_with_tol(
    x: &Element,
    m: usize,
    opt: &OptimizerConfig,
    membership_tol: f64,
) -> Result<PositiveFactorization> {
    if m == 0 {
        return Err(Error::InvalidElement("at least one factor is required".into()));
    }
    let membership = membership_test(x, membership_tol)?;
    if !membership.member {
        return Err(Error::NotInClosure { phases: membership.phases });
    }
    if x.is_positive_default() {
        let mut factors = vec![x.hermitian_part()];
        factors.extend(std::iter::repeat_n(Element::identity(x.algebra()), m - 1));
        return PositiveFactorization::new(factors, x.clone(), None);
    }
    let gram = Problem::new(x, m, FactorModel::Gram);
    let exp = Problem::new(x, m, FactorModel::Exponential);
    let run = run_restarts(&gram, Some(&exp), opt, Some(opt.target_residual))?;
    let result = PositiveFactorization::new(run.factors, x.clone(), Some(run.restart))?;
    if result.relative_residual() <= opt.target_residual {
        Ok(result)
    } else {
        Err(Error::FactorizationNoConvergence {
            best_relative_residual: result.relative_residual(),
            best: Box::new(result),
        })
    }
}

/// Best product of `m` positive (possibly singular) factors found by the probe.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistanceProbe {
    pub distance: f64,
    pub factors: Vec<Element>,
    pub restart: usize,
}

pub fn probe_distance(x: &Element, m: usize, opt: &OptimizerConfig) -> Result<DistanceProbe> {
    if m == 0 {
        return Err(Error::InvalidElement("at least one factor is required".into()));
    }
    let problem = Problem::new(x, m, FactorModel::Gram);
    let run = run_restarts(&problem, None, opt, None)?;
    Ok(DistanceProbe { distance: run.residual, factors: run.factors, restart: run.restart })
}

/// Upper bound on the operator-norm distance from `x` to the products of `m` positives.
pub fn best_approx_distance(x: &Element, m: usize, opt: &OptimizerConfig) -> f64 {
    probe_distance(x, m, opt).map(|p| p.distance).unwrap_or(f64::INFINITY)
}

/// Relative residual of [`factor_positive_products`] for each factor count.
pub fn residual_curve(x: &Element, counts: &[usize], opt: &OptimizerConfig) -> Result<Vec<(usize, f64)>> {
    counts
        .iter()
        .map(|&m| match factor_positive_products(x, m, opt) {
            Ok(f) => Ok((m, f.relative_residual())),
            Err(Error::FactorizationNoConvergence { best_relative_residual, .. }) => Ok((m, best_relative_residual)),
            Err(e) => Err(e),
        })
        .collect()
}

/// Determinant-one unitary times positive invertible: a random member of the closure.
pub fn random_member<R: Rng + ?Sized>(alg: &AlgebraDescriptor, rng: &mut R) -> Element {
    let u = sample::special_unitary(alg, rng);
    let a = sample::positive_invertible(alg, 1.0, rng);
    u.mul(&a).expect("same algebra")
}

/// `e^{ith}` as an element, for self-adjoint `h`.
pub fn unitary_exp_line(h: &Element) -> InvertiblePath {
    InvertiblePath::exp_line(h.scale(I))
}
