//! The trace determinant `Δ̃_T(α) = ∫ T(α'(t)α(t)⁻¹) dt` of a path of
//! invertibles, its reduction modulo `2πi·T(K₀(A)) = 2πi·Z^k`, and the loop
//! map sending a unitary loop to an affine function on the trace simplex.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{unitary_eigen, wrap_phase, Element, TraceValue, DEFAULT_BRANCH_GAP};
use crate::checker::AffFunction;
use crate::error::{Error, Result};
use crate::path::{InvertiblePath, Side};
use crate::quadrature::{integrate, QuadratureConfig, QuadratureStats};

const TWO_PI: f64 = 2.0 * PI;

/// Endpoint tolerance for loops at the identity.
pub const LOOP_ENDPOINT_TOL: f64 = 1e-8;
/// Unitarity tolerance for loop values.
pub const LOOP_UNITARY_TOL: f64 = 1e-8;

/// `Δ̃_T(α)` by Simpson quadrature on each smooth piece of the path.
pub fn path_determinant(path: &InvertiblePath, quad: &QuadratureConfig) -> Result<TraceValue> {
    Ok(path_determinant_with_stats(path, quad)?.0)
}

pub fn path_determinant_with_stats(path: &InvertiblePath, quad: &QuadratureConfig) -> Result<(TraceValue, QuadratureStats)> {
    if quad.steps < 2 {
        return Err(Error::InvalidPath("quadrature needs at least 2 steps".into()));
    }
    let alg = path.algebra().clone();
    let k = alg.num_blocks();
    let [lo, hi] = path.domain();
    let mut knots = vec![lo];
    knots.extend(path.breakpoints());
    knots.push(hi);
    let mut stats = QuadratureStats::default();
    let mut total = vec![Complex64::new(0.0, 0.0); k];
    for w in knots.windows(2) {
        let piece = QuadratureConfig { tol: quad.tol * (w[1] - w[0]) / (hi - lo), ..*quad };
        let end = w[1];
        let integrand = |t: f64| -> Result<Vec<Complex64>> {
            let side = if t >= end { Side::Left } else { Side::Right };
            let (value, deriv) = path.evaluate_sided(t, side)?;
            let inv = value.inverse().map_err(|_| Error::SingularValueOnPath { t })?;
            Ok(deriv.mul(&inv)?.universal_trace().coords)
        };
        let part = integrate(&integrand, w[0], w[1], k, &piece, &mut stats)?;
        for (acc, v) in total.iter_mut().zip(part) {
            *acc += v;
        }
    }
    Ok((TraceValue::new(&alg, total)?, stats))
}

/// A class in `(A/[A,A]‾) / 2πi·Z^k`, held by its canonical representative
/// whose imaginary coordinates lie in `[0, 2π)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeQuotientValue {
    pub representative: TraceValue,
}

impl LatticeQuotientValue {
    /// Max-norm distance between two classes, minimized over the lattice.
    pub fn distance(&self, other: &LatticeQuotientValue) -> f64 {
        self.representative
            .coords
            .iter()
            .zip(&other.representative.coords)
            .map(|(a, b)| {
                let d = a - b;
                d.re.abs().max(wrap_phase(d.im).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Imaginary parts this close below `2π` reduce to `0`.
pub const LATTICE_SNAP_TOL: f64 = 1e-9;

/// Subtract `2πi·m`, `m ∈ Z^k`, so each imaginary part lands in `[0, 2π)`.
/// Parts within [`LATTICE_SNAP_TOL`] of a lattice point map to `0`.
pub fn lattice_reduce(v: &TraceValue) -> LatticeQuotientValue {
    let coords = v
        .coords
        .iter()
        .map(|c| {
            let mut im = c.im - TWO_PI * (c.im / TWO_PI).floor();
            if im >= TWO_PI - LATTICE_SNAP_TOL {
                im = 0.0;
            }
            Complex64::new(c.re, im)
        })
        .collect();
    LatticeQuotientValue { representative: TraceValue { algebra: v.algebra.clone(), coords } }
}

/// Max-norm distance from `v` to the lattice `2πi·Z^k`.
pub fn distance_to_lattice(v: &TraceValue) -> f64 {
    v.coords
        .iter()
        .map(|c| c.re.abs().max(wrap_phase(c.im).abs()))
        .fold(0.0, f64::max)
}

/// Connecting path `t ↦ e^{ith}·e^{tc}` from 1 to `x = u·e^c`, `u = e^{ih}`.
pub fn connecting_path(x: &Element) -> Result<InvertiblePath> {
    let (u, p) = x.polar()?;
    let h = unitary_log(&u)?;
    let c = p.log_positive()?;
    InvertiblePath::pointwise_product(
        InvertiblePath::exp_line(h.scale(Complex64::new(0.0, 1.0))),
        InvertiblePath::exp_line(c),
    )
}

/// Principal log when the spectrum avoids the branch gap; otherwise the log
/// from the rotated eigenbasis, whose phases in `(−π, π]` still exponentiate to `u`.
fn unitary_log(u: &Element) -> Result<Element> {
    match u.log_unitary_principal(DEFAULT_BRANCH_GAP) {
        Err(Error::BranchCut { .. }) => {
            let blocks = u
                .blocks()
                .iter()
                .map(|b| {
                    let (q, phases) = unitary_eigen(b);
                    let d = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                        phases.len(),
                        phases.iter().map(|&t| Complex64::new(t, 0.0)),
                    ));
                    &q * d * q.adjoint()
                })
                .collect();
            Ok(Element::from_blocks(blocks)?.hermitian_part())
        }
        other => other,
    }
}

/// `Δ_T(x)`: the determinant of a connecting path, reduced modulo the lattice.
pub fn determinant_mod_lattice(x: &Element, quad: &QuadratureConfig) -> Result<LatticeQuotientValue> {
    let path = connecting_path(x)?;
    Ok(lattice_reduce(&path_determinant(&path, quad)?))
}

/// Result of evaluating `Δ_T(x)` along two unrelated connecting paths.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossCheckedDeterminant {
    pub value: LatticeQuotientValue,
    pub alternative: LatticeQuotientValue,
    pub discrepancy: f64,
}

/// Self-test mode of [`determinant_mod_lattice`]: also integrates along
/// `t ↦ e^{ith'}·((1 − t) + t·|x|)`, where `h'` winds the top eigenphase of
/// each block once more around the circle, and reports the disagreement
/// modulo the lattice.
pub fn determinant_mod_lattice_cross_checked(x: &Element, quad: &QuadratureConfig) -> Result<CrossCheckedDeterminant> {
    let value = determinant_mod_lattice(x, quad)?;
    let (u, p) = x.polar()?;
    let blocks = u
        .blocks()
        .iter()
        .map(|b| {
            let (q, mut phases) = unitary_eigen(b);
            if let Some((i, _)) = phases.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)) {
                phases[i] -= TWO_PI;
            }
            let d = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                phases.len(),
                phases.iter().map(|&t| Complex64::new(t, 0.0)),
            ));
            &q * d * q.adjoint()
        })
        .collect();
    let h = Element::from_blocks(blocks)?.hermitian_part();
    let path = InvertiblePath::pointwise_product(
        InvertiblePath::exp_line(h.scale(Complex64::new(0.0, 1.0))),
        InvertiblePath::segment(Element::identity(x.algebra()), p)?,
    )?;
    let alternative = lattice_reduce(&path_determinant(&path, quad)?);
    let discrepancy = value.distance(&alternative);
    Ok(CrossCheckedDeterminant { value, alternative, discrepancy })
}

/// Image of a unitary loop under the loop map: `h = Δ̃_T(α)/2πi`, read as the
/// affine function taking the value `Re(h_i)/n_i` at the `i`-th extreme trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopPairing {
    pub function: AffFunction,
    /// `Δ̃_T(α)/2πi` before normalization.
    pub winding: TraceValue,
    /// Largest `|Im(h_i)|`; zero for exact unitary loops.
    pub imaginary_residual: f64,
}

pub fn delta_1_0(lp: &InvertiblePath, quad: &QuadratureConfig) -> Result<LoopPairing> {
    let alg = lp.algebra().clone();
    let one = Element::identity(&alg);
    let [lo, hi] = lp.domain();
    let defect = lp.evaluate(lo)?.distance(&one)?.max(lp.evaluate(hi)?.distance(&one)?);
    if defect > LOOP_ENDPOINT_TOL {
        return Err(Error::NotALoop { defect });
    }
    for j in 0..=32 {
        let t = lo + (hi - lo) * j as f64 / 32.0;
        let defect = lp.evaluate(t)?.unitary_defect();
        if defect > LOOP_UNITARY_TOL {
            return Err(Error::NotUnitaryPath { t, defect });
        }
    }
    let det = path_determinant(lp, quad)?;
    let winding = det.scale(Complex64::new(0.0, -1.0 / TWO_PI));
    let values = winding.coords.iter().zip(alg.block_sizes()).map(|(h, &n)| h.re / n as f64).collect();
    let imaginary_residual = winding.coords.iter().map(|h| h.im.abs()).fold(0.0, f64::max);
    Ok(LoopPairing { function: AffFunction { values }, winding, imaginary_residual })
}
