//! Finite direct sums of full matrix algebras `M_{n_1}(C) ⊕ … ⊕ M_{n_k}(C)`.
//!
//! An [`Element`] is a tuple of square complex blocks. Everything here acts
//! blockwise: the operator norm is the maximum over blocks, positivity and
//! unitarity are checked per block, and the universal trace is the tuple of
//! block traces.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Block = DMatrix<Complex64>;

/// Relative tolerance used by the default positivity and self-adjointness checks.
pub const POSITIVITY_REL_TOL: f64 = 1e-12;
/// Relative smallest-singular-value threshold below which an element counts as singular.
pub const SINGULAR_REL_TOL: f64 = 1e-12;
/// Default distance from -1 that a unitary eigenvalue must keep for the principal log.
pub const DEFAULT_BRANCH_GAP: f64 = 1e-6;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// The block sizes `n_1, …, n_k` of a finite-dimensional C*-algebra.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawDescriptor", into = "RawDescriptor")]
pub struct AlgebraDescriptor {
    block_sizes: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawDescriptor {
    block_sizes: Vec<usize>,
}

impl TryFrom<RawDescriptor> for AlgebraDescriptor {
    type Error = Error;
    fn try_from(raw: RawDescriptor) -> Result<Self> {
        AlgebraDescriptor::new(raw.block_sizes)
    }
}

impl From<AlgebraDescriptor> for RawDescriptor {
    fn from(d: AlgebraDescriptor) -> Self {
        RawDescriptor { block_sizes: d.block_sizes }
    }
}

impl AlgebraDescriptor {
    pub fn new(block_sizes: Vec<usize>) -> Result<Self> {
        if block_sizes.is_empty() {
            return Err(Error::InvalidDescriptor("at least one block is required".into()));
        }
        if block_sizes.contains(&0) {
            return Err(Error::InvalidDescriptor("block sizes must be positive".into()));
        }
        Ok(Self { block_sizes })
    }

    /// The full matrix algebra `M_n`.
    pub fn matrix(n: usize) -> Self {
        Self::new(vec![n]).expect("n must be positive")
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    /// Complex dimension `Σ n_i²`.
    pub fn dimension(&self) -> usize {
        self.block_sizes.iter().map(|n| n * n).sum()
    }

    /// Number of real coordinates of a self-adjoint element.
    pub fn self_adjoint_dimension(&self) -> usize {
        self.dimension()
    }
}

impl fmt::Display for AlgebraDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.block_sizes.iter().map(|n| format!("M{n}")).collect();
        write!(f, "{}", parts.join("⊕"))
    }
}

/// A block-diagonal element of `⊕ M_{n_i}(C)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    algebra: AlgebraDescriptor,
    blocks: Vec<Block>,
}

impl Element {
    pub fn from_blocks(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidElement("no blocks".into()));
        }
        let mut sizes = Vec::with_capacity(blocks.len());
        for (i, b) in blocks.iter().enumerate() {
            if b.nrows() != b.ncols() || b.nrows() == 0 {
                return Err(Error::InvalidElement(format!(
                    "block {i} has shape {}x{}",
                    b.nrows(),
                    b.ncols()
                )));
            }
            if b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidElement(format!("block {i} has non-finite entries")));
            }
            sizes.push(b.nrows());
        }
        Ok(Self { algebra: AlgebraDescriptor { block_sizes: sizes }, blocks })
    }

    /// A single-block element from a row-major list of rows.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidElement("rows must form a square matrix".into()));
        }
        let block = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::from_blocks(vec![block])
    }

    /// A single-block diagonal element.
    pub fn diagonal(entries: &[Complex64]) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidElement("empty diagonal".into()));
        }
        let v = nalgebra::DVector::from_column_slice(entries);
        Self::from_blocks(vec![DMatrix::from_diagonal(&v)])
    }

    /// A single-block diagonal element with real entries.
    pub fn real_diagonal(entries: &[f64]) -> Result<Self> {
        let c: Vec<Complex64> = entries.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::diagonal(&c)
    }

    /// Direct sum of single elements.
    pub fn direct_sum(parts: &[Element]) -> Result<Self> {
        Self::from_blocks(parts.iter().flat_map(|p| p.blocks.iter().cloned()).collect())
    }

    pub fn identity(algebra: &AlgebraDescriptor) -> Self {
        Self::scalar(algebra, Complex64::new(1.0, 0.0))
    }

    pub fn zero(algebra: &AlgebraDescriptor) -> Self {
        Self::scalar(algebra, Complex64::new(0.0, 0.0))
    }

    pub fn scalar(algebra: &AlgebraDescriptor, z: Complex64) -> Self {
        let blocks = algebra
            .block_sizes
            .iter()
            .map(|&n| DMatrix::from_diagonal_element(n, n, z))
            .collect();
        Self { algebra: algebra.clone(), blocks }
    }

    /// The element that is `z` times the unit of block `i` and zero elsewhere.
    pub fn block_unit(algebra: &AlgebraDescriptor, i: usize, z: Complex64) -> Self {
        let blocks = algebra
            .block_sizes
            .iter()
            .enumerate()
            .map(|(j, &n)| {
                if j == i {
                    DMatrix::from_diagonal_element(n, n, z)
                } else {
                    DMatrix::zeros(n, n)
                }
            })
            .collect();
        Self { algebra: algebra.clone(), blocks }
    }

    pub fn algebra(&self) -> &AlgebraDescriptor {
        &self.algebra
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<Block> {
        self.blocks
    }

    fn check_same(&self, other: &Element) -> Result<()> {
        if self.algebra != other.algebra {
            return Err(Error::DescriptorMismatch {
                left: self.algebra.block_sizes.clone(),
                right: other.algebra.block_sizes.clone(),
            });
        }
        Ok(())
    }

    /// Apply `f` to every block. `f` must preserve block shapes.
    pub fn map_blocks(&self, f: impl Fn(&Block) -> Block) -> Element {
        Element { algebra: self.algebra.clone(), blocks: self.blocks.iter().map(f).collect() }
    }

    fn try_map_blocks(&self, f: impl Fn(usize, &Block) -> Result<Block>) -> Result<Element> {
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(i, b)| f(i, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Element { algebra: self.algebra.clone(), blocks })
    }

    fn zip_blocks(&self, other: &Element, f: impl Fn(&Block, &Block) -> Block) -> Result<Element> {
        self.check_same(other)?;
        Ok(Element {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect(),
        })
    }

    pub fn adjoint(&self) -> Element {
        self.map_blocks(|b| b.adjoint())
    }

    pub fn mul(&self, other: &Element) -> Result<Element> {
        self.zip_blocks(other, |a, b| a * b)
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        self.zip_blocks(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        self.zip_blocks(other, |a, b| a - b)
    }

    pub fn scale(&self, z: Complex64) -> Element {
        self.map_blocks(|b| b * z)
    }

    pub fn scale_real(&self, x: f64) -> Element {
        self.scale(Complex64::new(x, 0.0))
    }

    /// `xy - yx`.
    pub fn commutator(&self, other: &Element) -> Result<Element> {
        self.zip_blocks(other, |a, b| a * b - b * a)
    }

    /// Product of a non-empty list of elements, left to right.
    pub fn product<'a>(factors: impl IntoIterator<Item = &'a Element>) -> Result<Element> {
        let mut it = factors.into_iter();
        let first = it
            .next()
            .ok_or_else(|| Error::InvalidElement("empty product".into()))?
            .clone();
        it.try_fold(first, |acc, f| acc.mul(f))
    }

    /// C*-norm: the largest singular value over all blocks.
    pub fn op_norm(&self) -> f64 {
        self.blocks.iter().map(block_op_norm).fold(0.0, f64::max)
    }

    /// Hilbert–Schmidt norm of the whole tuple.
    pub fn frobenius_norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
    }

    /// Smallest singular value over all blocks.
    pub fn min_singular_value(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.clone().singular_values().min())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn self_adjoint_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| block_op_norm(&(b - b.adjoint())))
            .fold(0.0, f64::max)
    }

    pub fn unitary_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let n = b.nrows();
                block_op_norm(&(b.adjoint() * b - Block::identity(n, n)))
            })
            .fold(0.0, f64::max)
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.self_adjoint_defect() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitary_defect() <= tol
    }

    /// `(x + x*)/2`.
    pub fn hermitian_part(&self) -> Element {
        self.map_blocks(hermitian_part)
    }

    /// Smallest eigenvalue of the self-adjoint part over all blocks.
    pub fn min_hermitian_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| SymmetricEigen::new(hermitian_part(b)).eigenvalues.min())
            .fold(f64::INFINITY, f64::min)
    }

    /// True iff `‖x − x*‖ ≤ tol` and every eigenvalue of `(x + x*)/2` is `≥ −tol`.
    pub fn is_positive(&self, tol: f64) -> bool {
        self.is_self_adjoint(tol) && self.min_hermitian_eigenvalue() >= -tol
    }

    /// Positivity with the tolerance scaled to the size of the element.
    pub fn is_positive_default(&self) -> bool {
        self.is_positive(POSITIVITY_REL_TOL * self.op_norm())
    }

    /// Singular-value threshold for this element.
    pub fn singular_threshold(&self) -> f64 {
        SINGULAR_REL_TOL * self.op_norm()
    }

    fn ensure_invertible(&self) -> Result<()> {
        let threshold = self.singular_threshold();
        let smallest = self.min_singular_value();
        if !(smallest > threshold) {
            return Err(Error::SingularInput { smallest, threshold });
        }
        Ok(())
    }

    pub fn inverse(&self) -> Result<Element> {
        self.ensure_invertible()?;
        let threshold = self.singular_threshold();
        self.try_map_blocks(|_, b| {
            b.clone()
                .try_inverse()
                .ok_or(Error::SingularInput { smallest: 0.0, threshold })
        })
    }

    /// Polar decomposition `x = u·|x|` of an invertible element.
    ///
    /// The unitary part comes from the scaled Newton iteration
    /// `X ← (γX + γ⁻¹X⁻*)/2`; the positive part is `(u*x + x*u)/2`.
    pub fn polar(&self) -> Result<(Element, Element)> {
        self.ensure_invertible()?;
        let mut us = Vec::with_capacity(self.blocks.len());
        let mut ps = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let u = newton_polar(b)?;
            let p = hermitian_part(&(u.adjoint() * b));
            us.push(u);
            ps.push(p);
        }
        Ok((
            Element { algebra: self.algebra.clone(), blocks: us },
            Element { algebra: self.algebra.clone(), blocks: ps },
        ))
    }

    /// `|x| = (x*x)^{1/2}`, defined for every element.
    pub fn modulus(&self) -> Element {
        self.map_blocks(|b| hermitian_function(&(b.adjoint() * b), |l| l.max(0.0).sqrt().into()))
    }

    /// Matrix exponential of an arbitrary element.
    pub fn exp(&self) -> Element {
        self.map_blocks(|b| b.clone().exp())
    }

    /// `e^h` for self-adjoint `h`, computed spectrally so the result is exactly Hermitian.
    pub fn exp_self_adjoint(&self) -> Result<Element> {
        self.require_self_adjoint()?;
        Ok(self.map_blocks(|b| hermitian_part(&hermitian_function(&hermitian_part(b), |l| l.exp().into()))))
    }

    /// `e^{ih}` for self-adjoint `h`.
    pub fn exp_i_self_adjoint(&self) -> Result<Element> {
        self.require_self_adjoint()?;
        Ok(self.map_blocks(|b| hermitian_function(&hermitian_part(b), |l| Complex64::new(0.0, l).exp())))
    }

    fn require_self_adjoint(&self) -> Result<()> {
        let defect = self.self_adjoint_defect();
        if defect > 1e-10 * self.op_norm().max(1.0) {
            return Err(Error::NotSelfAdjoint { defect });
        }
        Ok(())
    }

    /// Self-adjoint logarithm of a positive invertible element.
    pub fn log_positive(&self) -> Result<Element> {
        let norm = self.op_norm();
        if !self.is_positive_default() {
            return Err(Error::NotPositive);
        }
        let floor = SINGULAR_REL_TOL * norm;
        self.try_map_blocks(|_, b| {
            let eig = SymmetricEigen::new(hermitian_part(b));
            if eig.eigenvalues.iter().any(|&l| !(l > floor)) {
                return Err(Error::NotPositive);
            }
            Ok(hermitian_part(&spectral_synthesis(&eig, |l| l.ln().into())))
        })
    }

    /// Self-adjoint `h` with spectrum in `(−π, π)` and `e^{ih} = u`.
    ///
    /// Fails with [`Error::BranchCut`] when an eigenvalue of `u` lies within
    /// `gap` of `−1`.
    pub fn log_unitary_principal(&self, gap: f64) -> Result<Element> {
        let defect = self.unitary_defect();
        if defect > 1e-8 {
            return Err(Error::NotUnitary { defect });
        }
        self.try_map_blocks(|_, b| {
            let (q, phases) = unitary_eigen(b);
            for &theta in &phases {
                let distance = 2.0 * (theta / 2.0).cos().abs();
                if distance < gap {
                    return Err(Error::BranchCut { distance, gap });
                }
            }
            let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                phases.len(),
                phases.iter().map(|&t| Complex64::new(t, 0.0)),
            ));
            Ok(hermitian_part(&(&q * d * q.adjoint())))
        })
    }

    /// Principal logarithm of an arbitrary invertible element with no
    /// eigenvalues on the closed negative real axis.
    pub fn log_principal(&self) -> Result<Element> {
        self.ensure_invertible()?;
        self.try_map_blocks(|_, b| log_general(b))
    }

    /// Per-block eigenphases of a unitary, each in `(−π, π]`, sorted ascending.
    pub fn unitary_phases(&self) -> Result<Vec<Vec<f64>>> {
        let defect = self.unitary_defect();
        if defect > 1e-8 {
            return Err(Error::NotUnitary { defect });
        }
        Ok(self
            .blocks
            .iter()
            .map(|b| {
                let mut p = unitary_eigen(b).1;
                p.sort_by(|a, b| a.total_cmp(b));
                p
            })
            .collect())
    }

    pub fn block_determinants(&self) -> Vec<Complex64> {
        self.blocks.iter().map(|b| b.clone().determinant()).collect()
    }

    pub fn universal_trace(&self) -> TraceValue {
        TraceValue { algebra: self.algebra.clone(), coords: self.blocks.iter().map(|b| b.trace()).collect() }
    }

    /// `x − Σ (tr x_i / n_i)·1_i`, the nearest point of the commutator subspace.
    pub fn project_traceless(&self) -> Element {
        self.map_blocks(|b| {
            let n = b.nrows();
            let shift = b.trace() / n as f64;
            b - Block::from_diagonal_element(n, n, shift)
        })
    }

    /// Largest entrywise difference to another element, `∞` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Element) -> f64 {
        if self.algebra != other.algebra {
            return f64::INFINITY;
        }
        self.blocks
            .iter()
            .zip(&other.blocks)
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }

    /// Operator-norm distance to another element.
    pub fn distance(&self, other: &Element) -> Result<f64> {
        Ok(self.sub(other)?.op_norm())
    }
}

/// An element of `A/[A,A]‾ ≅ C^k`: one trace per block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceValue {
    pub algebra: AlgebraDescriptor,
    pub coords: Vec<Complex64>,
}

impl TraceValue {
    pub fn zero(algebra: &AlgebraDescriptor) -> Self {
        Self { algebra: algebra.clone(), coords: vec![Complex64::new(0.0, 0.0); algebra.num_blocks()] }
    }

    pub fn new(algebra: &AlgebraDescriptor, coords: Vec<Complex64>) -> Result<Self> {
        if coords.len() != algebra.num_blocks() {
            return Err(Error::RankMismatch { expected: algebra.num_blocks(), got: coords.len() });
        }
        Ok(Self { algebra: algebra.clone(), coords })
    }

    pub fn add(&self, other: &TraceValue) -> Result<TraceValue> {
        self.check_same(other)?;
        Ok(Self {
            algebra: self.algebra.clone(),
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &TraceValue) -> Result<TraceValue> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, z: Complex64) -> TraceValue {
        Self { algebra: self.algebra.clone(), coords: self.coords.iter().map(|c| c * z).collect() }
    }

    fn check_same(&self, other: &TraceValue) -> Result<()> {
        if self.algebra != other.algebra {
            return Err(Error::DescriptorMismatch {
                left: self.algebra.block_sizes.clone(),
                right: other.algebra.block_sizes.clone(),
            });
        }
        Ok(())
    }

    /// Quotient norm of `A/[A,A]‾` under the operator norm: `max_i |t_i| / n_i`.
    pub fn quotient_norm(&self) -> f64 {
        self.coords
            .iter()
            .zip(self.algebra.block_sizes())
            .map(|(c, &n)| c.norm() / n as f64)
            .fold(0.0, f64::max)
    }

    /// Largest coordinate modulus.
    pub fn max_abs(&self) -> f64 {
        self.coords.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn block_op_norm(b: &Block) -> f64 {
    if b.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return 0.0;
    }
    b.clone().singular_values().max()
}

pub(crate) fn hermitian_part(b: &Block) -> Block {
    (b + b.adjoint()) * Complex64::new(0.5, 0.0)
}

/// `Q f(Λ) Q*` from an eigendecomposition of a Hermitian block.
pub(crate) fn spectral_synthesis(eig: &SymmetricEigen<Complex64, nalgebra::Dyn>, f: impl Fn(f64) -> Complex64) -> Block {
    let q = &eig.eigenvectors;
    let d = nalgebra::DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|&l| f(l)));
    q * DMatrix::from_diagonal(&d) * q.adjoint()
}

/// `f(h)` for a Hermitian block `h`.
pub(crate) fn hermitian_function(h: &Block, f: impl Fn(f64) -> Complex64) -> Block {
    spectral_synthesis(&SymmetricEigen::new(hermitian_part(h)), f)
}

fn newton_polar(b: &Block) -> Result<Block> {
    let singular = || Error::SingularInput { smallest: 0.0, threshold: 0.0 };
    let mut x = b.clone();
    let mut scaled = true;
    for _ in 0..100 {
        let inv_adj = x.clone().try_inverse().ok_or_else(singular)?.adjoint();
        let gamma = if scaled { (inv_adj.norm() / x.norm()).sqrt() } else { 1.0 };
        let next = (&x * Complex64::new(gamma, 0.0) + inv_adj * Complex64::new(1.0 / gamma, 0.0))
            * Complex64::new(0.5, 0.0);
        let change = (&next - &x).norm() / next.norm();
        x = next;
        if change < 1e-2 {
            scaled = false;
        }
        if change < 1e-15 {
            break;
        }
    }
    Ok(x)
}

/// Eigendecomposition `u = Q diag(e^{iθ}) Q*` of a unitary block, `θ ∈ (−π, π]`.
///
/// The block is first rotated by a scalar phase that keeps its spectrum away
/// from `−1`, then diagonalized through the Hermitian Cayley transform
/// `K = i(1 − w)(1 + w)⁻¹`, whose eigenvalues are `tan(θ/2)`.
pub(crate) fn unitary_eigen(u: &Block) -> (Block, Vec<f64>) {
    let n = u.nrows();
    let id = Block::identity(n, n);
    let candidates = 2 * n + 1;
    let (phi, _) = (0..candidates)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / candidates as f64;
            let w = u * Complex64::from_polar(1.0, phi);
            (phi, (&id + w).singular_values().min())
        })
        .fold((0.0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
    let w = u * Complex64::from_polar(1.0, phi);
    let inv = (&id + &w).try_inverse().expect("rotation keeps 1 + w invertible");
    let cayley = hermitian_part(&((&id - &w) * inv * I));
    let eig = SymmetricEigen::new(cayley);
    let phases = eig.eigenvalues.iter().map(|&k| wrap_phase(2.0 * k.atan() - phi)).collect();
    (eig.eigenvectors, phases)
}

/// Wrap an angle into `(−π, π]`.
pub fn wrap_phase(theta: f64) -> f64 {
    let mut t = theta - 2.0 * PI * (theta / (2.0 * PI)).round();
    if t <= -PI {
        t += 2.0 * PI;
    }
    t
}

/// Principal log by inverse scaling and squaring: Denman–Beavers square roots
/// until the block is within 1/4 of the identity, then the Mercator series.
fn log_general(b: &Block) -> Result<Block> {
    let n = b.nrows();
    let id = Block::identity(n, n);
    let mut a = b.clone();
    let mut squarings = 0;
    while (&a - &id).norm() > 0.25 {
        if squarings > 60 {
            return Err(Error::BranchCut { distance: 0.0, gap: 0.0 });
        }
        a = sqrt_denman_beavers(&a)?;
        squarings += 1;
    }
    let e = &a - &id;
    let mut power = e.clone();
    let mut sum = e.clone();
    for k in 2..200 {
        power = &power * &e;
        let term = &power * Complex64::new(if k % 2 == 0 { -1.0 } else { 1.0 } / k as f64, 0.0);
        let small = term.norm() < 1e-18 * sum.norm().max(1e-300);
        sum += term;
        if small {
            break;
        }
    }
    Ok(sum * Complex64::new(2f64.powi(squarings), 0.0))
}

fn sqrt_denman_beavers(a: &Block) -> Result<Block> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = Block::identity(n, n);
    let singular = || Error::BranchCut { distance: 0.0, gap: 0.0 };
    for _ in 0..100 {
        let y_inv = y.clone().try_inverse().ok_or_else(singular)?;
        let z_inv = z.clone().try_inverse().ok_or_else(singular)?;
        let y_next = (&y + z_inv) * Complex64::new(0.5, 0.0);
        let z_next = (&z + y_inv) * Complex64::new(0.5, 0.0);
        let change = (&y_next - &y).norm() / y_next.norm();
        y = y_next;
        z = z_next;
        if change < 1e-15 {
            return Ok(y);
        }
    }
    Err(singular())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn descriptor_rejects_empty_and_zero() {
        assert!(AlgebraDescriptor::new(vec![]).is_err());
        assert!(AlgebraDescriptor::new(vec![2, 0]).is_err());
        assert_eq!(AlgebraDescriptor::new(vec![2, 3]).unwrap().dimension(), 13);
    }

    #[test]
    fn adjoint_of_identity() {
        let alg = AlgebraDescriptor::new(vec![2, 3]).unwrap();
        let one = Element::identity(&alg);
        assert_eq!(one.adjoint(), one);
    }

    #[test]
    fn times_inverse_is_identity() {
        let alg = AlgebraDescriptor::new(vec![2, 3]).unwrap();
        let x = sample::invertible(&alg, &mut rng(1));
        let prod = x.mul(&x.inverse().unwrap()).unwrap();
        assert!(prod.max_abs_diff(&Element::identity(&alg)) < 1e-12);
    }

    #[test]
    fn adjoint_reverses_products() {
        let alg = AlgebraDescriptor::matrix(3);
        let mut r = rng(2);
        let x = sample::gaussian(&alg, &mut r);
        let y = sample::gaussian(&alg, &mut r);
        let lhs = x.mul(&y).unwrap().adjoint();
        let rhs = y.adjoint().mul(&x.adjoint()).unwrap();
        // entrywise: (xy)*_{ij} = conj(Σ_k x_jk y_ki)
        for i in 0..3 {
            for j in 0..3 {
                let direct: Complex64 = (0..3).map(|k| x.blocks()[0][(j, k)] * y.blocks()[0][(k, i)]).sum();
                assert!((lhs.blocks()[0][(i, j)] - direct.conj()).norm() < 1e-13);
            }
        }
        assert!(lhs.max_abs_diff(&rhs) < 1e-13);
    }

    #[test]
    fn mismatched_algebras_are_rejected() {
        let x = Element::identity(&AlgebraDescriptor::matrix(2));
        let y = Element::identity(&AlgebraDescriptor::matrix(3));
        assert!(matches!(x.mul(&y), Err(Error::DescriptorMismatch { .. })));
        assert!(matches!(x.add(&y), Err(Error::DescriptorMismatch { .. })));
        assert!(matches!(x.commutator(&y), Err(Error::DescriptorMismatch { .. })));
    }

    #[test]
    fn commutator_closed_form() {
        let x = Element::real_diagonal(&[1.0, 2.0]).unwrap();
        let y = Element::from_rows(&[vec![c(0., 0.), c(1., 0.)], vec![c(0., 0.), c(0., 0.)]]).unwrap();
        let expected = Element::from_rows(&[vec![c(0., 0.), c(-1., 0.)], vec![c(0., 0.), c(0., 0.)]]).unwrap();
        assert!(x.commutator(&y).unwrap().max_abs_diff(&expected) < 1e-15);
        assert_eq!(x.commutator(&x).unwrap().op_norm(), 0.0);
    }

    #[test]
    fn trace_kills_commutators() {
        let alg = AlgebraDescriptor::new(vec![2, 3]).unwrap();
        let mut r = rng(3);
        for _ in 0..20 {
            let x = sample::gaussian(&alg, &mut r);
            let y = sample::gaussian(&alg, &mut r);
            let t = x.commutator(&y).unwrap().universal_trace();
            assert!(t.max_abs() <= 1e-12 * x.op_norm() * y.op_norm());
        }
    }

    #[test]
    fn op_norm_examples() {
        assert_eq!(Element::identity(&AlgebraDescriptor::matrix(3)).op_norm(), 1.0);
        assert!((Element::real_diagonal(&[3.0, -4.0]).unwrap().op_norm() - 4.0).abs() < 1e-14);
    }

    /// Power iteration on x*x as an independent estimate of the largest singular value.
    fn power_iteration_norm(b: &Block) -> f64 {
        let g = b.adjoint() * b;
        let mut v = nalgebra::DVector::from_element(b.ncols(), c(1.0, 0.3));
        let mut lambda = 0.0;
        for _ in 0..5000 {
            let w = &g * &v;
            lambda = w.norm() / v.norm();
            v = &w / Complex64::new(w.norm(), 0.0);
        }
        lambda.sqrt()
    }

    #[test]
    fn op_norm_matches_power_iteration() {
        let x = sample::gaussian(&AlgebraDescriptor::matrix(4), &mut rng(4));
        let oracle = power_iteration_norm(&x.blocks()[0]);
        assert!((x.op_norm() - oracle).abs() < 1e-10, "{} vs {}", x.op_norm(), oracle);
    }

    #[test]
    fn positivity_examples() {
        assert!(Element::identity(&AlgebraDescriptor::matrix(2)).is_positive(0.0));
        assert!(!Element::real_diagonal(&[1.0, -1.0]).unwrap().is_positive(1e-12));
        let y = sample::gaussian(&AlgebraDescriptor::new(vec![2, 3]).unwrap(), &mut rng(5));
        assert!(y.adjoint().mul(&y).unwrap().is_positive(1e-10));
    }

    #[test]
    fn polar_of_positive_is_trivial() {
        let alg = AlgebraDescriptor::new(vec![2, 3]).unwrap();
        let a = sample::positive_invertible(&alg, 1.0, &mut rng(6));
        let (u, p) = a.polar().unwrap();
        assert!(u.max_abs_diff(&Element::identity(&alg)) < 1e-12);
        assert!(p.max_abs_diff(&a) < 1e-12);
    }

    #[test]
    fn polar_of_negative_scalar() {
        let x = Element::real_diagonal(&[-2.0]).unwrap();
        let (u, p) = x.polar().unwrap();
        assert!((u.blocks()[0][(0, 0)] - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((p.blocks()[0][(0, 0)] - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn polar_matches_svd_oracle() {
        let x = sample::invertible(&AlgebraDescriptor::matrix(3), &mut rng(7));
        let (u, p) = x.polar().unwrap();
        // oracle: x = V Σ W*, u = V W*, p = W Σ W*
        let svd = x.blocks()[0].clone().svd(true, true);
        let v = svd.u.unwrap();
        let w = svd.v_t.unwrap().adjoint();
        let sigma = DMatrix::from_diagonal(&svd.singular_values.map(|s| c(s, 0.0)));
        let u_oracle = &v * w.adjoint();
        let p_oracle = &w * sigma * w.adjoint();
        assert!((&u.blocks()[0] - u_oracle).norm() < 1e-10);
        assert!((&p.blocks()[0] - p_oracle).norm() < 1e-10);
        assert!(u.mul(&p).unwrap().max_abs_diff(&x) < 1e-10 * x.op_norm());
    }

    #[test]
    fn polar_rejects_singular() {
        let x = Element::real_diagonal(&[1.0, 0.0]).unwrap();
        assert!(matches!(x.polar(), Err(Error::SingularInput { .. })));
    }

    #[test]
    fn exp_log_examples() {
        let alg = AlgebraDescriptor::matrix(2);
        assert!(Element::zero(&alg).exp().max_abs_diff(&Element::identity(&alg)) < 1e-15);
        let a = Element::real_diagonal(&[std::f64::consts::E, 1.0]).unwrap();
        let l = a.log_positive().unwrap();
        assert!(l.max_abs_diff(&Element::real_diagonal(&[1.0, 0.0]).unwrap()) < 1e-15);
    }

    #[test]
    fn exp_inverts_log_positive() {
        let a = sample::positive_invertible(&AlgebraDescriptor::new(vec![3, 2]).unwrap(), 1.5, &mut rng(8));
        let l = a.log_positive().unwrap();
        // eigendecomposition oracle: a = Q Λ Q*, log a = Q log Λ Q*
        for (ab, lb) in a.blocks().iter().zip(l.blocks()) {
            let eig = SymmetricEigen::new(ab.clone());
            let oracle = &eig.eigenvectors
                * DMatrix::from_diagonal(&eig.eigenvalues.map(|x| c(x.ln(), 0.0)))
                * eig.eigenvectors.adjoint();
            assert!((lb - oracle).norm() < 1e-10);
        }
        assert!(l.exp().max_abs_diff(&a) < 1e-10);
    }

    #[test]
    fn log_positive_rejects_indefinite() {
        let x = Element::real_diagonal(&[1.0, -1.0]).unwrap();
        assert!(matches!(x.log_positive(), Err(Error::NotPositive)));
    }

    #[test]
    fn log_unitary_branch_cut() {
        let u = Element::real_diagonal(&[1.0, -1.0]).unwrap();
        assert!(matches!(u.log_unitary_principal(DEFAULT_BRANCH_GAP), Err(Error::BranchCut { .. })));
        let v = Element::diagonal(&[Complex64::from_polar(1.0, 3.0), Complex64::from_polar(1.0, -2.5)]).unwrap();
        let h = v.log_unitary_principal(DEFAULT_BRANCH_GAP).unwrap();
        assert!(h.max_abs_diff(&Element::real_diagonal(&[3.0, -2.5]).unwrap()) < 1e-12);
    }

    #[test]
    fn log_principal_general_recovers_small_log() {
        let alg = AlgebraDescriptor::new(vec![2, 3]).unwrap();
        let l = sample::gaussian(&alg, &mut rng(9));
        let l = l.scale_real(1.5 / l.op_norm());
        let back = l.exp().log_principal().unwrap();
        assert!(back.max_abs_diff(&l) < 1e-11);
    }

    #[test]
    fn universal_trace_examples() {
        let alg = AlgebraDescriptor::new(vec![2, 3]).unwrap();
        let t = Element::identity(&alg).universal_trace();
        assert_eq!(t.coords, vec![c(2.0, 0.0), c(3.0, 0.0)]);
        let nil = Element::from_rows(&[vec![c(0., 0.), c(1., 0.)], vec![c(0., 0.), c(0., 0.)]]).unwrap();
        assert_eq!(nil.universal_trace().coords, vec![c(0.0, 0.0)]);
    }

    #[test]
    fn quotient_norm_examples() {
        let alg = AlgebraDescriptor::matrix(2);
        assert_eq!(TraceValue::zero(&alg).quotient_norm(), 0.0);
        assert!((Element::identity(&alg).universal_trace().quotient_norm() - 1.0).abs() < 1e-15);
        let z = Element::diagonal(&[c(-3.0, 4.0)]).unwrap();
        assert!((z.universal_trace().quotient_norm() - 5.0).abs() < 1e-15);
    }

    /// Brute force: min over traceless c of ‖1 − c‖ in M₂, searched over a grid
    /// of c = [[a, b], [d, −a]] with real entries plus local refinement.
    #[test]
    fn quotient_norm_of_identity_by_brute_force() {
        let mut best = f64::INFINITY;
        let mut center = (0.0, 0.0, 0.0);
        let mut width = 2.0;
        for _ in 0..8 {
            let steps = 12;
            let (ca, cb, cd) = center;
            let mut local = (f64::INFINITY, center);
            for i in 0..=steps {
                for j in 0..=steps {
                    for k in 0..=steps {
                        let a = ca + width * (i as f64 / steps as f64 - 0.5);
                        let b = cb + width * (j as f64 / steps as f64 - 0.5);
                        let d = cd + width * (k as f64 / steps as f64 - 0.5);
                        let m = DMatrix::from_row_slice(2, 2, &[c(1.0 - a, 0.0), c(-b, 0.0), c(-d, 0.0), c(1.0 + a, 0.0)]);
                        let v = block_op_norm(&m);
                        if v < local.0 {
                            local = (v, (a, b, d));
                        }
                    }
                }
            }
            best = best.min(local.0);
            center = local.1;
            width /= 3.0;
        }
        let closed_form = Element::identity(&AlgebraDescriptor::matrix(2)).universal_trace().quotient_norm();
        assert!((best - closed_form).abs() < 1e-6, "brute force {best} vs {closed_form}");
    }

    #[test]
    fn project_traceless_examples() {
        let alg = AlgebraDescriptor::matrix(2);
        assert_eq!(Element::identity(&alg).project_traceless().op_norm(), 0.0);
        let nil = Element::from_rows(&[vec![c(0., 0.), c(1., 0.)], vec![c(0., 0.), c(0., 0.)]]).unwrap();
        assert_eq!(nil.project_traceless(), nil);
        let x = sample::gaussian(&AlgebraDescriptor::new(vec![2, 3]).unwrap(), &mut rng(10));
        let p = x.project_traceless();
        assert!(p.universal_trace().max_abs() < 1e-13);
        let gap = x.sub(&p).unwrap().op_norm();
        assert!((gap - x.universal_trace().quotient_norm()).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        let b = DMatrix::from_element(1, 1, c(f64::NAN, 0.0));
        assert!(Element::from_blocks(vec![b]).is_err());
    }
}
