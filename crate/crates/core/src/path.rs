//! Smooth paths of invertible elements.
//!
//! Closed-form kinds carry exact derivatives. Sampled paths are interpolated
//! by geodesics `α_j·exp(s·log(α_j⁻¹α_{j+1}))`, whose derivative on each
//! segment is also exact; the knots are reported as breakpoints so that
//! quadrature never integrates across a kink.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{hermitian_part, AlgebraDescriptor, Block, Element};
use crate::error::{Error, Result};

/// A parameter/value pair of a sampled path.
/// Which one-sided derivative to take at a breakpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn flip(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub t: f64,
    pub value: Element,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathKind {
    /// `t ↦ e^{tc}`.
    ExpLine { c: Element },
    /// `t ↦ e^{tc}e^{td}·|e^{tc}e^{td}|⁻¹`, the unitary part of a product of two positives.
    ProductPolar { c: Element, d: Element },
    /// Geodesic interpolation between samples.
    Sampled {
        samples: Vec<PathSample>,
        #[serde(skip)]
        logs: Vec<Element>,
    },
    /// Affine segment `(1 − s)·from + s·to`.
    Segment { from: Element, to: Element },
    PointwiseProduct { first: Box<InvertiblePath>, second: Box<InvertiblePath> },
    /// `first` followed by `second`, the latter shifted to start where `first` ends.
    Concatenation { first: Box<InvertiblePath>, second: Box<InvertiblePath> },
    /// `t ↦ α(t₁ + t₂ − t)`.
    Reversal { path: Box<InvertiblePath> },
    /// `t ↦ |α(t)|`.
    Modulus { path: Box<InvertiblePath> },
    /// `t ↦ α(t)²`.
    Square { path: Box<InvertiblePath> },
}

/// A path `[t₁, t₂] → GL(A)`. Construction validates the path; every value
/// produced by [`InvertiblePath::evaluate`] is checked for invertibility.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "UncheckedPath")]
pub struct InvertiblePath {
    domain: [f64; 2],
    #[serde(flatten)]
    kind: PathKind,
}

#[derive(Deserialize)]
struct UncheckedPath {
    domain: [f64; 2],
    #[serde(flatten)]
    kind: PathKind,
}

impl TryFrom<UncheckedPath> for InvertiblePath {
    type Error = Error;
    fn try_from(raw: UncheckedPath) -> Result<Self> {
        InvertiblePath::new(raw.domain, raw.kind)
    }
}

const UNIT: [f64; 2] = [0.0, 1.0];

impl InvertiblePath {
    pub fn new(domain: [f64; 2], kind: PathKind) -> Result<Self> {
        let mut p = Self { domain, kind };
        p.validate()?;
        Ok(p)
    }

    pub fn exp_line(c: Element) -> Self {
        Self::new(UNIT, PathKind::ExpLine { c }).expect("exponential lines are always valid")
    }

    pub fn exp_line_on(c: Element, domain: [f64; 2]) -> Result<Self> {
        Self::new(domain, PathKind::ExpLine { c })
    }

    /// The constant path at the identity.
    pub fn constant(algebra: &AlgebraDescriptor) -> Self {
        Self::exp_line(Element::zero(algebra))
    }

    pub fn product_polar(c: Element, d: Element) -> Result<Self> {
        Self::new(UNIT, PathKind::ProductPolar { c, d })
    }

    pub fn sampled(samples: Vec<PathSample>) -> Result<Self> {
        let domain = match (samples.first(), samples.last()) {
            (Some(a), Some(b)) => [a.t, b.t],
            _ => return Err(Error::InvalidPath("no samples".into())),
        };
        Self::new(domain, PathKind::Sampled { samples, logs: Vec::new() })
    }

    pub fn segment(from: Element, to: Element) -> Result<Self> {
        Self::new(UNIT, PathKind::Segment { from, to })
    }

    pub fn pointwise_product(first: InvertiblePath, second: InvertiblePath) -> Result<Self> {
        Self::new(first.domain, PathKind::PointwiseProduct { first: Box::new(first), second: Box::new(second) })
    }

    pub fn concatenation(first: InvertiblePath, second: InvertiblePath) -> Result<Self> {
        let domain = [first.domain[0], first.domain[1] + second.length()];
        Self::new(domain, PathKind::Concatenation { first: Box::new(first), second: Box::new(second) })
    }

    pub fn reversal(path: InvertiblePath) -> Self {
        let domain = path.domain;
        Self::new(domain, PathKind::Reversal { path: Box::new(path) }).expect("reversal of a valid path")
    }

    pub fn modulus(path: InvertiblePath) -> Self {
        let domain = path.domain;
        Self::new(domain, PathKind::Modulus { path: Box::new(path) }).expect("modulus of a valid path")
    }

    pub fn square(path: InvertiblePath) -> Self {
        let domain = path.domain;
        Self::new(domain, PathKind::Square { path: Box::new(path) }).expect("square of a valid path")
    }

    pub fn domain(&self) -> [f64; 2] {
        self.domain
    }

    pub fn length(&self) -> f64 {
        self.domain[1] - self.domain[0]
    }

    pub fn kind(&self) -> &PathKind {
        &self.kind
    }

    pub fn algebra(&self) -> &AlgebraDescriptor {
        match &self.kind {
            PathKind::ExpLine { c } | PathKind::ProductPolar { c, .. } => c.algebra(),
            PathKind::Sampled { samples, .. } => samples[0].value.algebra(),
            PathKind::Segment { from, .. } => from.algebra(),
            PathKind::PointwiseProduct { first, .. } | PathKind::Concatenation { first, .. } => first.algebra(),
            PathKind::Reversal { path } | PathKind::Modulus { path } | PathKind::Square { path } => path.algebra(),
        }
    }

    /// Interior parameters where the path is only piecewise smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        let [lo, hi] = self.domain;
        let mut out = match &self.kind {
            PathKind::ExpLine { .. } | PathKind::ProductPolar { .. } | PathKind::Segment { .. } => Vec::new(),
            PathKind::Sampled { samples, .. } => samples[1..samples.len() - 1].iter().map(|s| s.t).collect(),
            PathKind::PointwiseProduct { first, second } => {
                let mut v = first.breakpoints();
                v.extend(second.breakpoints());
                v
            }
            PathKind::Concatenation { first, second } => {
                let shift = first.domain[1] - second.domain[0];
                let mut v = first.breakpoints();
                v.push(first.domain[1]);
                v.extend(second.breakpoints().into_iter().map(|t| t + shift));
                v
            }
            PathKind::Reversal { path } => path.breakpoints().into_iter().map(|t| lo + hi - t).collect(),
            PathKind::Modulus { path } | PathKind::Square { path } => path.breakpoints(),
        };
        out.retain(|&t| t > lo && t < hi);
        out.sort_by(|a, b| a.total_cmp(b));
        out.dedup();
        out
    }

    fn validate(&mut self) -> Result<()> {
        let [lo, hi] = self.domain;
        if !lo.is_finite() || !hi.is_finite() || !(lo < hi) {
            return Err(Error::InvalidPath(format!("bad domain [{lo}, {hi}]")));
        }
        let same_domain = |d: [f64; 2]| {
            let eps = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
            (d[0] - lo).abs() <= eps && (d[1] - hi).abs() <= eps
        };
        match &mut self.kind {
            PathKind::ExpLine { .. } => {}
            PathKind::ProductPolar { c, d } => {
                if c.algebra() != d.algebra() {
                    return Err(mismatch(c, d));
                }
                for x in [&*c, &*d] {
                    let defect = x.self_adjoint_defect();
                    if defect > 1e-10 * x.op_norm().max(1.0) {
                        return Err(Error::NotSelfAdjoint { defect });
                    }
                }
            }
            PathKind::Sampled { samples, logs } => {
                *logs = validate_samples(samples)?;
            }
            PathKind::Segment { from, to } => {
                if from.algebra() != to.algebra() {
                    return Err(mismatch(from, to));
                }
                for j in 0..=64 {
                    let s = j as f64 / 64.0;
                    let x = from.scale_real(1.0 - s).add(&to.scale_real(s))?;
                    if !(x.min_singular_value() > x.singular_threshold()) {
                        return Err(Error::SingularValueOnPath { t: lo + s * (hi - lo) });
                    }
                }
            }
            PathKind::PointwiseProduct { first, second } => {
                if first.algebra() != second.algebra() {
                    return Err(Error::DescriptorMismatch {
                        left: first.algebra().block_sizes().to_vec(),
                        right: second.algebra().block_sizes().to_vec(),
                    });
                }
                if !same_domain(first.domain) || !same_domain(second.domain) {
                    return Err(Error::InvalidPath("pointwise product needs equal domains".into()));
                }
            }
            PathKind::Concatenation { first, second } => {
                if first.algebra() != second.algebra() {
                    return Err(Error::DescriptorMismatch {
                        left: first.algebra().block_sizes().to_vec(),
                        right: second.algebra().block_sizes().to_vec(),
                    });
                }
                if !same_domain([first.domain[0], first.domain[1] + second.length()]) {
                    return Err(Error::InvalidPath("concatenation domain must join the two pieces".into()));
                }
            }
            PathKind::Reversal { path } | PathKind::Modulus { path } | PathKind::Square { path } => {
                if !same_domain(path.domain) {
                    return Err(Error::InvalidPath("derived path must keep the domain".into()));
                }
            }
        }
        Ok(())
    }

    fn clamp(&self, t: f64) -> Result<f64> {
        let [lo, hi] = self.domain;
        let eps = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
        if !(t >= lo - eps && t <= hi + eps) {
            return Err(Error::OutOfDomain { t, lo, hi });
        }
        Ok(t.clamp(lo, hi))
    }

    pub fn evaluate(&self, t: f64) -> Result<Element> {
        Ok(self.evaluate_with_derivative(t)?.0)
    }

    /// `(α(t), α'(t))`. At a breakpoint the derivative is the one from the right.
    pub fn evaluate_with_derivative(&self, t: f64) -> Result<(Element, Element)> {
        self.evaluate_sided(t, Side::Right)
    }

    /// `(α(t), α'(t))` with the one-sided derivative from `side` at breakpoints.
    pub fn evaluate_sided(&self, t: f64, side: Side) -> Result<(Element, Element)> {
        let t = self.clamp(t)?;
        let (value, deriv) = match &self.kind {
            PathKind::ExpLine { c } => {
                let v = c.scale_real(t).exp();
                let d = c.mul(&v)?;
                (v, d)
            }
            PathKind::ProductPolar { c, d } => {
                let ec = c.scale_real(t).exp_self_adjoint()?;
                let ed = d.scale_real(t).exp_self_adjoint()?;
                let a = ec.mul(&ed)?;
                let da = c.mul(&a)?.add(&a.mul(d)?)?;
                let p = polar_with_derivative(&a, &da).map_err(|_| Error::SingularValueOnPath { t })?;
                (p.unitary, p.unitary_derivative)
            }
            PathKind::Sampled { samples, logs } => {
                let j = match side {
                    Side::Left => samples.partition_point(|s| s.t < t),
                    Side::Right => samples.partition_point(|s| s.t <= t),
                }
                .clamp(1, samples.len() - 1)
                    - 1;
                let (a, b) = (&samples[j], &samples[j + 1]);
                let dt = b.t - a.t;
                let owned;
                let log = match logs.get(j) {
                    Some(l) => l,
                    None => {
                        owned = geodesic_log(&a.value, &b.value)?;
                        &owned
                    }
                };
                let v = a.value.mul(&log.scale_real((t - a.t) / dt).exp())?;
                let d = v.mul(log)?.scale_real(1.0 / dt);
                (v, d)
            }
            PathKind::Segment { from, to } => {
                let len = self.length();
                let s = (t - self.domain[0]) / len;
                let v = from.scale_real(1.0 - s).add(&to.scale_real(s))?;
                let d = to.sub(from)?.scale_real(1.0 / len);
                (v, d)
            }
            PathKind::PointwiseProduct { first, second } => {
                let (a, da) = first.evaluate_sided(t, side)?;
                let (b, db) = second.evaluate_sided(t, side)?;
                (a.mul(&b)?, da.mul(&b)?.add(&a.mul(&db)?)?)
            }
            PathKind::Concatenation { first, second } => {
                let joint = first.domain[1];
                if t < joint || (t == joint && side == Side::Left) {
                    first.evaluate_sided(t, side)?
                } else {
                    second.evaluate_sided(t - joint + second.domain[0], side)?
                }
            }
            PathKind::Reversal { path } => {
                let (v, d) = path.evaluate_sided(self.domain[0] + self.domain[1] - t, side.flip())?;
                (v, d.scale_real(-1.0))
            }
            PathKind::Modulus { path } => {
                let (a, da) = path.evaluate_sided(t, side)?;
                let p = polar_with_derivative(&a, &da).map_err(|_| Error::SingularValueOnPath { t })?;
                (p.modulus, p.modulus_derivative)
            }
            PathKind::Square { path } => {
                let (a, da) = path.evaluate_sided(t, side)?;
                (a.mul(&a)?, da.mul(&a)?.add(&a.mul(&da)?)?)
            }
        };
        if !(value.min_singular_value() > value.singular_threshold()) {
            return Err(Error::SingularValueOnPath { t });
        }
        Ok((value, deriv))
    }
}

fn mismatch(a: &Element, b: &Element) -> Error {
    Error::DescriptorMismatch { left: a.algebra().block_sizes().to_vec(), right: b.algebra().block_sizes().to_vec() }
}

fn geodesic_log(a: &Element, b: &Element) -> Result<Element> {
    a.inverse()?.mul(b)?.log_principal()
}

fn validate_samples(samples: &[PathSample]) -> Result<Vec<Element>> {
    if samples.len() < 2 {
        return Err(Error::InvalidPath("a sampled path needs at least two samples".into()));
    }
    let alg = samples[0].value.algebra();
    let one = Element::identity(alg);
    for s in samples {
        if s.value.algebra() != alg {
            return Err(mismatch(&samples[0].value, &s.value));
        }
        if !s.t.is_finite() {
            return Err(Error::InvalidPath("non-finite sample parameter".into()));
        }
        if !(s.value.min_singular_value() > s.value.singular_threshold()) {
            return Err(Error::SingularValueOnPath { t: s.t });
        }
    }
    let mut logs = Vec::with_capacity(samples.len() - 1);
    for w in samples.windows(2) {
        if !(w[1].t > w[0].t) {
            return Err(Error::InvalidPath("sample parameters must increase strictly".into()));
        }
        let step = w[1].value.mul(&w[0].value.inverse()?)?.sub(&one)?.op_norm();
        if !(step < 0.5) {
            return Err(Error::InvalidPath(format!(
                "samples at t = {} and t = {} are too far apart (‖α(t')α(t)⁻¹ − 1‖ = {step:.3})",
                w[0].t, w[1].t
            )));
        }
        logs.push(geodesic_log(&w[0].value, &w[1].value)?);
    }
    Ok(logs)
}

/// Polar factors of `a` together with their derivatives along `a'`.
pub struct PolarDerivative {
    pub unitary: Element,
    pub modulus: Element,
    pub unitary_derivative: Element,
    pub modulus_derivative: Element,
}

/// Differentiates `a = u·m` along `da`. The derivative of the modulus solves
/// the Sylvester equation `m·X + X·m = da*·a + a*·da` in the eigenbasis of `m`.
pub fn polar_with_derivative(a: &Element, da: &Element) -> Result<PolarDerivative> {
    let (u, m) = a.polar()?;
    let mut dms = Vec::new();
    let mut dus = Vec::new();
    for ((ab, dab), (ub, mb)) in a.blocks().iter().zip(da.blocks()).zip(u.blocks().iter().zip(m.blocks())) {
        let eig = SymmetricEigen::new(hermitian_part(mb));
        let q = &eig.eigenvectors;
        let s = &eig.eigenvalues;
        let rhs = dab.adjoint() * ab + ab.adjoint() * dab;
        let mut x = q.adjoint() * rhs * q;
        let n = s.len();
        for i in 0..n {
            for j in 0..n {
                x[(i, j)] /= s[i] + s[j];
            }
        }
        let dm = hermitian_part(&(q * x * q.adjoint()));
        let minv = q
            * Block::from_diagonal(&s.map(|v| Complex64::new(1.0 / v, 0.0)))
            * q.adjoint();
        let du = (dab - ub * &dm) * minv;
        dms.push(dm);
        dus.push(du);
    }
    Ok(PolarDerivative {
        unitary: u,
        modulus: m,
        unitary_derivative: Element::from_blocks(dus)?,
        modulus_derivative: Element::from_blocks(dms)?,
    })
}

/// Fourth-order central difference of the path at `t`, used to cross-check
/// closed-form derivatives.
pub fn central_difference(path: &InvertiblePath, t: f64, h: f64) -> Result<Element> {
    let f = |s: f64| path.evaluate(s);
    let (m2, m1, p1, p2) = (f(t - 2.0 * h)?, f(t - h)?, f(t + h)?, f(t + 2.0 * h)?);
    let num = m2.sub(&m1.scale_real(8.0))?.add(&p1.scale_real(8.0))?.sub(&p2)?;
    Ok(num.scale_real(1.0 / (12.0 * h)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{E, PI};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn exp_line_endpoints() {
        let c = Element::real_diagonal(&[1.0, 2.0]).unwrap();
        let p = InvertiblePath::exp_line(c);
        assert!(p.evaluate(0.0).unwrap().max_abs_diff(&Element::identity(p.algebra())) < 1e-15);
        let end = Element::real_diagonal(&[E, E * E]).unwrap();
        assert!(p.evaluate(1.0).unwrap().max_abs_diff(&end) < 1e-13);
    }

    #[test]
    fn out_of_domain() {
        let p = InvertiblePath::constant(&AlgebraDescriptor::matrix(2));
        assert!(matches!(p.evaluate(1.5), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn product_polar_values_are_unitary() {
        let alg = AlgebraDescriptor::new(vec![2, 3]).unwrap();
        let mut r = rng(11);
        let c = sample::self_adjoint(&alg, 2.0, &mut r);
        let d = sample::self_adjoint(&alg, 2.0, &mut r);
        let p = InvertiblePath::product_polar(c, d).unwrap();
        for j in 0..=16 {
            let u = p.evaluate(j as f64 / 16.0).unwrap();
            assert!(u.unitary_defect() < 1e-10);
        }
    }

    #[test]
    fn closed_form_derivatives_match_finite_differences() {
        let alg = AlgebraDescriptor::new(vec![2, 3]).unwrap();
        let mut r = rng(12);
        let c = sample::self_adjoint(&alg, 1.5, &mut r);
        let d = sample::self_adjoint(&alg, 1.5, &mut r);
        let g = sample::gaussian(&alg, &mut r).scale_real(0.5);
        let paths = vec![
            InvertiblePath::product_polar(c.clone(), d.clone()).unwrap(),
            InvertiblePath::modulus(InvertiblePath::pointwise_product(
                InvertiblePath::exp_line(c.clone()),
                InvertiblePath::exp_line(d.clone()),
            ).unwrap()),
            InvertiblePath::square(InvertiblePath::exp_line(g.clone())),
            InvertiblePath::reversal(InvertiblePath::exp_line(g)),
        ];
        for p in &paths {
            for t in [0.2, 0.5, 0.8] {
                let (_, exact) = p.evaluate_with_derivative(t).unwrap();
                let fd = central_difference(p, t, 1e-3).unwrap();
                assert!(exact.max_abs_diff(&fd) < 1e-8, "{:?}", exact.max_abs_diff(&fd));
            }
        }
    }

    #[test]
    fn sampled_path_interpolates_samples() {
        let alg = AlgebraDescriptor::matrix(2);
        let c = sample::gaussian(&alg, &mut rng(13));
        let line = InvertiblePath::exp_line(c.scale_real(0.8 / c.op_norm()));
        let samples: Vec<PathSample> = (0..=8)
            .map(|j| {
                let t = j as f64 / 8.0;
                PathSample { t, value: line.evaluate(t).unwrap() }
            })
            .collect();
        let p = InvertiblePath::sampled(samples.clone()).unwrap();
        assert_eq!(p.breakpoints().len(), 7);
        for s in &samples {
            assert!(p.evaluate(s.t).unwrap().max_abs_diff(&s.value) < 1e-12);
        }
        // the geodesic through samples of an exponential line is the line itself
        assert!(p.evaluate(0.3).unwrap().max_abs_diff(&line.evaluate(0.3).unwrap()) < 1e-12);
    }

    #[test]
    fn sampled_path_rejects_large_steps_and_disorder() {
        let alg = AlgebraDescriptor::matrix(1);
        let one = Element::identity(&alg);
        let far = Element::real_diagonal(&[3.0]).unwrap();
        let bad = InvertiblePath::sampled(vec![PathSample { t: 0.0, value: one.clone() }, PathSample { t: 1.0, value: far }]);
        assert!(matches!(bad, Err(Error::InvalidPath(_))));
        let disorder = InvertiblePath::sampled(vec![PathSample { t: 1.0, value: one.clone() }, PathSample { t: 0.0, value: one }]);
        assert!(disorder.is_err());
    }

    #[test]
    fn segment_through_singular_is_rejected() {
        let a = Element::real_diagonal(&[1.0]).unwrap();
        let b = Element::real_diagonal(&[-1.0]).unwrap();
        assert!(matches!(InvertiblePath::segment(a, b), Err(Error::SingularValueOnPath { .. })));
    }

    #[test]
    fn concatenation_domain_and_breakpoint() {
        let alg = AlgebraDescriptor::matrix(1);
        let w = Element::diagonal(&[Complex64::new(0.0, 2.0 * PI)]).unwrap();
        let a = InvertiblePath::exp_line(w.clone());
        let b = InvertiblePath::exp_line_on(w, [2.0, 3.0]).unwrap();
        let p = InvertiblePath::concatenation(a, b).unwrap();
        assert_eq!(p.domain(), [0.0, 2.0]);
        assert_eq!(p.breakpoints(), vec![1.0]);
        assert!(p.evaluate(1.5).is_ok());
        assert_eq!(p.algebra(), &alg);
    }
}
