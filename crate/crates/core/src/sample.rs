//! Seeded random elements for tests, demos and optimizer restarts.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::algebra::{hermitian_part, AlgebraDescriptor, Block, Element};

fn gaussian_block<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Block {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(s * re, s * im)
    })
}

fn build(alg: &AlgebraDescriptor, mut f: impl FnMut(usize) -> Block) -> Element {
    Element::from_blocks(alg.block_sizes().iter().map(|&n| f(n)).collect()).expect("shapes follow the descriptor")
}

/// Entries i.i.d. standard complex Gaussian.
pub fn gaussian<R: Rng + ?Sized>(alg: &AlgebraDescriptor, rng: &mut R) -> Element {
    build(alg, |n| gaussian_block(n, rng))
}

/// Self-adjoint with operator norm drawn uniformly from `[0.2, 1]·bound`.
pub fn self_adjoint<R: Rng + ?Sized>(alg: &AlgebraDescriptor, bound: f64, rng: &mut R) -> Element {
    let h = gaussian(alg, rng).hermitian_part();
    let target = bound * rng.random_range(0.2..=1.0);
    let norm = h.op_norm();
    if norm == 0.0 {
        return h;
    }
    h.scale_real(target / norm).hermitian_part()
}

/// `e^h` with `h` from [`self_adjoint`], so eigenvalues lie in `[e^{-bound}, e^{bound}]`.
pub fn positive_invertible<R: Rng + ?Sized>(alg: &AlgebraDescriptor, log_bound: f64, rng: &mut R) -> Element {
    self_adjoint(alg, log_bound, rng).exp_self_adjoint().expect("input is self-adjoint")
}

/// Haar-distributed unitary (QR of a Gaussian with the phases of `R` removed).
pub fn unitary<R: Rng + ?Sized>(alg: &AlgebraDescriptor, rng: &mut R) -> Element {
    build(alg, |n| {
        let qr = gaussian_block(n, rng).qr();
        let (q, r) = qr.unpack();
        let phases = DMatrix::from_diagonal(&r.diagonal().map(|z| {
            if z.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                z / z.norm()
            }
        }));
        q * phases
    })
}

/// Haar unitary rescaled to determinant one in every block.
pub fn special_unitary<R: Rng + ?Sized>(alg: &AlgebraDescriptor, rng: &mut R) -> Element {
    let u = unitary(alg, rng);
    let blocks = u
        .blocks()
        .iter()
        .map(|b| {
            let n = b.nrows() as f64;
            let det = b.clone().determinant();
            b * Complex64::from_polar(1.0, -det.arg() / n)
        })
        .collect();
    Element::from_blocks(blocks).expect("shapes preserved")
}

/// Haar unitary times a positive invertible element.
pub fn invertible<R: Rng + ?Sized>(alg: &AlgebraDescriptor, rng: &mut R) -> Element {
    let u = unitary(alg, rng);
    let a = positive_invertible(alg, 1.0, rng);
    u.mul(&a).expect("same algebra")
}

/// Gaussian element with its smallest singular value in every block set to zero.
pub fn singular<R: Rng + ?Sized>(alg: &AlgebraDescriptor, rng: &mut R) -> Element {
    build(alg, |n| {
        let svd = gaussian_block(n, rng).svd(true, true);
        let mut s = svd.singular_values.clone();
        let last = s.len() - 1;
        s[last] = 0.0;
        let sigma = DMatrix::from_diagonal(&s.map(|x| Complex64::new(x, 0.0)));
        svd.u.unwrap() * sigma * svd.v_t.unwrap()
    })
}

/// Hermitian part of a Gaussian block, exposed for parameter initialization.
pub(crate) fn hermitian_gaussian_block<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Block {
    hermitian_part(&gaussian_block(n, rng))
}
