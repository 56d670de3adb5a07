//! The four conditions characterizing density of the products of positives:
//! no nonzero finite-dimensional representations, stable rank one, trivial
//! `K₁`, and dense range of the pairing `ρ: K₀(A) → Aff(T(A))`.
//!
//! Block algebras `⊕M_{n_i}` always fail the first and last conditions. The
//! failure of density is witnessed by an affine function far from the image
//! lattice `⊕(1/n_i)ℤ`. Abstract descriptors supply asserted flags plus `K₀`
//! generator images of the form `a + bθ` with `θ` a symbolic irrational, and
//! density of the generated subgroup of `ℝ` is decided in exact arithmetic.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraDescriptor, Element};
use crate::determinant::delta_1_0;
use crate::error::{Error, Result};
use crate::path::InvertiblePath;
use crate::quadrature::QuadratureConfig;
use crate::sample;

/// Distance from the image lattice below which a loop pairing counts as consistent.
pub const PAIRING_TOL: f64 = 1e-6;

/// The extreme tracial states `τ_i(x) = tr(x_i)/n_i` of a block algebra.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSimplex {
    pub algebra: AlgebraDescriptor,
}

impl TraceSimplex {
    pub fn new(algebra: AlgebraDescriptor) -> Self {
        Self { algebra }
    }

    pub fn rank(&self) -> usize {
        self.algebra.num_blocks()
    }

    pub fn evaluate(&self, x: &Element) -> Result<Vec<Complex64>> {
        if x.algebra() != &self.algebra {
            return Err(Error::DescriptorMismatch {
                left: self.algebra.block_sizes().to_vec(),
                right: x.algebra().block_sizes().to_vec(),
            });
        }
        Ok(x.blocks().iter().map(|b| b.trace() / b.nrows() as f64).collect())
    }
}

/// An affine function on the trace simplex, given by its values at the extreme points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffFunction {
    pub values: Vec<f64>,
}

impl AffFunction {
    pub fn zero(rank: usize) -> Self {
        Self { values: vec![0.0; rank] }
    }

    pub fn rank(&self) -> usize {
        self.values.len()
    }

    /// Sup norm; an affine function on a simplex attains it at an extreme point.
    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn add(&self, other: &AffFunction) -> Result<AffFunction> {
        self.check_rank(other)?;
        Ok(Self { values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect() })
    }

    pub fn sub(&self, other: &AffFunction) -> Result<AffFunction> {
        self.check_rank(other)?;
        Ok(Self { values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect() })
    }

    /// Value at the tracial state with barycentric weights `w`.
    pub fn at(&self, weights: &[f64]) -> Result<f64> {
        if weights.len() != self.rank() {
            return Err(Error::RankMismatch { expected: self.rank(), got: weights.len() });
        }
        Ok(self.values.iter().zip(weights).map(|(v, w)| v * w).sum())
    }

    fn check_rank(&self, other: &AffFunction) -> Result<()> {
        if self.rank() != other.rank() {
            return Err(Error::RankMismatch { expected: self.rank(), got: other.rank() });
        }
        Ok(())
    }
}

/// `ρ(g)` with exact rational values `g_i / n_i`.
pub fn rho_exact(g: &[i64], simplex: &TraceSimplex) -> Result<Vec<BigRational>> {
    let sizes = simplex.algebra.block_sizes();
    if g.len() != sizes.len() {
        return Err(Error::RankMismatch { expected: sizes.len(), got: g.len() });
    }
    Ok(g.iter()
        .zip(sizes)
        .map(|(&gi, &n)| BigRational::new(BigInt::from(gi), BigInt::from(n)))
        .collect())
}

/// `ρ([p] − [q])(τ) = τ(p) − τ(q)`, with `K₀ = ℤ^k` and `g` in the block basis.
pub fn rho(g: &[i64], simplex: &TraceSimplex) -> Result<AffFunction> {
    let exact = rho_exact(g, simplex)?;
    Ok(AffFunction { values: exact.iter().map(rational_to_f64).collect() })
}

fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Nearest point of `⊕(1/n_i)ℤ` to `f` in the max norm, as a `K₀` class, and its distance.
pub fn nearest_lattice_point(f: &AffFunction, alg: &AlgebraDescriptor) -> Result<(Vec<i64>, f64)> {
    let sizes = alg.block_sizes();
    if f.rank() != sizes.len() {
        return Err(Error::RankMismatch { expected: sizes.len(), got: f.rank() });
    }
    let g: Vec<i64> = f.values.iter().zip(sizes).map(|(v, &n)| (v * n as f64).round() as i64).collect();
    let dist = f
        .values
        .iter()
        .zip(&g)
        .zip(sizes)
        .map(|((v, &gi), &n)| (v - gi as f64 / n as f64).abs())
        .fold(0.0, f64::max);
    Ok((g, dist))
}

/// A real number `a + bθ` with rational `a, b` and a fixed symbolic irrational `θ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThetaRational {
    #[serde(with = "rational_string")]
    pub a: BigRational,
    #[serde(with = "rational_string", default = "BigRational::zero")]
    pub b: BigRational,
}

impl ThetaRational {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        Self { a, b }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        Self { a: &self.a * q, b: &self.b * q }
    }
}

impl std::fmt::Display for ThetaRational {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.a.is_zero(), self.b.is_zero()) {
            (_, true) => write!(f, "{}", self.a),
            (true, false) => write!(f, "{}", theta_term(&self.b)),
            (false, false) => write!(f, "{} + {}", self.a, theta_term(&self.b)),
        }
    }
}

fn theta_term(b: &BigRational) -> String {
    if b.is_one() {
        "θ".into()
    } else if (-b).is_one() {
        "-θ".into()
    } else {
        format!("{b}θ")
    }
}

/// Parse `"p/q"`, `"p"` or a decimal such as `"0.25"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let bad = || Error::InvalidRational(s.to_string());
    if let Some((p, q)) = t.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((whole, frac)) = t.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let whole: BigInt = match whole {
            "" | "-" | "+" => BigInt::zero(),
            w => w.parse().map_err(|_| bad())?,
        };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac: BigInt = frac.parse().map_err(|_| bad())?;
        let mag = BigRational::from_integer(whole.abs()) + BigRational::new(frac, scale);
        return Ok(if negative { -mag } else { mag });
    }
    t.parse::<BigInt>().map(BigRational::from_integer).map_err(|_| bad())
}

mod rational_string {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&q.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Image of one `K₀` generator: a scalar for rank one, otherwise one value per extreme trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneratorImage {
    Scalar(ThetaRational),
    Vector(Vec<ThetaRational>),
}

impl GeneratorImage {
    pub fn rank(&self) -> usize {
        match self {
            Self::Scalar(_) => 1,
            Self::Vector(v) => v.len(),
        }
    }

    fn scalar(&self) -> Option<&ThetaRational> {
        match self {
            Self::Scalar(x) => Some(x),
            Self::Vector(v) if v.len() == 1 => Some(&v[0]),
            Self::Vector(_) => None,
        }
    }
}

/// `K₀` together with its pairing into `Aff(T(A))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum K0Data {
    /// `K₀(⊕M_{n_i}) = ℤ^k` with `ρ(g) = (g_i/n_i)_i`.
    Blocks { block_sizes: Vec<usize> },
    Abstract { rank: usize, generators: Vec<GeneratorImage> },
}

impl K0Data {
    pub fn for_algebra(alg: &AlgebraDescriptor) -> Self {
        Self::Blocks { block_sizes: alg.block_sizes().to_vec() }
    }

    pub fn rank(&self) -> usize {
        match self {
            Self::Blocks { block_sizes } => block_sizes.len(),
            Self::Abstract { rank, .. } => *rank,
        }
    }

    /// The pairing as a `k × k` rational matrix (block case) or the list of generator images.
    pub fn pairing_matrix(&self) -> Vec<Vec<ThetaRational>> {
        match self {
            Self::Blocks { block_sizes } => (0..block_sizes.len())
                .map(|i| {
                    (0..block_sizes.len())
                        .map(|j| {
                            let a = if i == j {
                                BigRational::new(BigInt::one(), BigInt::from(block_sizes[i]))
                            } else {
                                BigRational::zero()
                            };
                            ThetaRational::new(a, BigRational::zero())
                        })
                        .collect()
                })
                .collect(),
            Self::Abstract { generators, .. } => generators
                .iter()
                .map(|g| match g {
                    GeneratorImage::Scalar(x) => vec![x.clone()],
                    GeneratorImage::Vector(v) => v.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Computed,
    ClosedForm,
    Asserted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// The identity representation on `ℂ^dimension`.
    IdentityRepresentation { dimension: usize },
    /// Singular samples moved to invertibles by `x + εu`, `u` a polar isometry of `x`.
    InvertibleDensityProbe { samples: usize, epsilon: f64, max_distance: f64, min_singular_value: f64 },
    /// `K₁(⊕M_{n_i}) = 0`.
    ClosedForm { statement: String },
    Asserted,
    /// An affine function at positive distance from the image of `ρ`.
    LatticeGap { function: AffFunction, nearest: Vec<i64>, distance: f64, exact_distance: String },
    /// Two generators whose ratio is irrational.
    IrrationalPair { first: usize, second: usize, cross_determinant: String },
    /// The image of `ρ` is cyclic, generated by this element.
    CyclicSubgroup { generator: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub holds: bool,
    pub source: Source,
    pub witness: Witness,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub no_findim_reps: Condition,
    pub stable_rank_one: Condition,
    pub k1_trivial: Condition,
    pub rho_dense: Condition,
    pub apfp_verdict: bool,
}

impl ConditionReport {
    fn assemble(no_findim_reps: Condition, stable_rank_one: Condition, k1_trivial: Condition, rho_dense: Condition) -> Self {
        let apfp_verdict = no_findim_reps.holds && stable_rank_one.holds && k1_trivial.holds && rho_dense.holds;
        Self { no_findim_reps, stable_rank_one, k1_trivial, rho_dense, apfp_verdict }
    }

    pub fn failing_conditions(&self) -> Vec<&'static str> {
        [
            ("no_findim_reps", &self.no_findim_reps),
            ("stable_rank_one", &self.stable_rank_one),
            ("k1_trivial", &self.k1_trivial),
            ("rho_dense", &self.rho_dense),
        ]
        .into_iter()
        .filter(|(_, c)| !c.holds)
        .map(|(name, _)| name)
        .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityProbeOptions {
    pub samples: usize,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for DensityProbeOptions {
    fn default() -> Self {
        Self { samples: 100, epsilon: 1e-7, seed: 0 }
    }
}

pub fn check_conditions(alg: &AlgebraDescriptor) -> ConditionReport {
    check_conditions_with(alg, &DensityProbeOptions::default())
}

pub fn check_conditions_with(alg: &AlgebraDescriptor, probe: &DensityProbeOptions) -> ConditionReport {
    let no_findim_reps = Condition {
        holds: false,
        source: Source::ClosedForm,
        witness: Witness::IdentityRepresentation { dimension: alg.block_sizes().iter().sum() },
    };
    let stable_rank_one = invertible_density_probe(alg, probe);
    let k1_trivial = Condition {
        holds: true,
        source: Source::ClosedForm,
        witness: Witness::ClosedForm { statement: "K1 of a finite direct sum of matrix algebras is 0".into() },
    };
    ConditionReport::assemble(no_findim_reps, stable_rank_one, k1_trivial, lattice_gap(alg))
}

/// The function `c_i = 1/(2n_i)` and its exact distance to `⊕(1/n_i)ℤ`.
fn lattice_gap(alg: &AlgebraDescriptor) -> Condition {
    let sizes = alg.block_sizes();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let c: Vec<BigRational> = sizes.iter().map(|&n| &half / BigInt::from(n)).collect();
    let mut nearest = Vec::with_capacity(sizes.len());
    let mut exact = BigRational::zero();
    for (ci, &n) in c.iter().zip(sizes) {
        let scaled = ci * BigInt::from(n);
        let g = scaled.floor().to_integer();
        let d = (ci - BigRational::new(g.clone(), BigInt::from(n))).abs();
        nearest.push(g.to_i64().unwrap_or(0));
        if d > exact {
            exact = d;
        }
    }
    Condition {
        holds: false,
        source: Source::Computed,
        witness: Witness::LatticeGap {
            function: AffFunction { values: c.iter().map(rational_to_f64).collect() },
            nearest,
            distance: rational_to_f64(&exact),
            exact_distance: exact.to_string(),
        },
    }
}

fn invertible_density_probe(alg: &AlgebraDescriptor, opts: &DensityProbeOptions) -> Condition {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut max_distance = 0.0f64;
    let mut min_sv = f64::INFINITY;
    for _ in 0..opts.samples {
        let x = sample::singular(alg, &mut rng);
        let u = polar_isometry(&x);
        let y = x.add(&u.scale_real(opts.epsilon)).expect("same algebra");
        max_distance = max_distance.max(y.distance(&x).expect("same algebra"));
        min_sv = min_sv.min(y.min_singular_value());
    }
    let holds = opts.samples > 0 && max_distance <= 1e-6 && min_sv > 0.5 * opts.epsilon;
    Condition {
        holds,
        source: Source::Computed,
        witness: Witness::InvertibleDensityProbe {
            samples: opts.samples,
            epsilon: opts.epsilon,
            max_distance,
            min_singular_value: min_sv,
        },
    }
}

/// A unitary `u` with `x = u|x|`, from the singular value decomposition.
fn polar_isometry(x: &Element) -> Element {
    x.map_blocks(|b| {
        let svd = b.clone().svd(true, true);
        let u: DMatrix<Complex64> = svd.u.expect("requested");
        u * svd.v_t.expect("requested")
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbstractFlags {
    pub no_findim_reps: bool,
    pub stable_rank_one: bool,
    pub k1_trivial: bool,
    /// Required when the rank exceeds one; checked against the computation otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_dense: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbstractDescriptor {
    pub rank: usize,
    pub generators: Vec<GeneratorImage>,
    pub flags: AbstractFlags,
}

impl AbstractDescriptor {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidDescriptor(e.to_string()))
    }

    pub fn k0(&self) -> K0Data {
        K0Data::Abstract { rank: self.rank, generators: self.generators.clone() }
    }
}

/// Outcome of the exact rank-one density decision.
#[derive(Clone, Debug, PartialEq)]
pub enum Density {
    Dense { first: usize, second: usize, cross_determinant: BigRational },
    Cyclic { generator: ThetaRational },
}

/// Decide whether the subgroup of `ℝ` generated by `a_j + b_jθ` is dense.
///
/// It is dense exactly when it is not cyclic, that is when two generators
/// have an irrational ratio, that is when some `a_i b_j − a_j b_i ≠ 0`.
pub fn decide_density(generators: &[ThetaRational]) -> Density {
    for i in 0..generators.len() {
        for j in i + 1..generators.len() {
            let (gi, gj) = (&generators[i], &generators[j]);
            let det = &gi.a * &gj.b - &gj.a * &gi.b;
            if !det.is_zero() {
                return Density::Dense { first: i, second: j, cross_determinant: det };
            }
        }
    }
    let Some(base) = generators.iter().find(|g| !g.is_zero()) else {
        return Density::Cyclic { generator: ThetaRational::new(BigRational::zero(), BigRational::zero()) };
    };
    // every generator is a rational multiple q_j of `base`; the group is gcd(q_j)·base
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for g in generators {
        let q = if base.a.is_zero() { &g.b / &base.b } else { &g.a / &base.a };
        num = num.gcd(q.numer());
        den = den.lcm(q.denom());
    }
    Density::Cyclic { generator: base.scale(&BigRational::new(num, den)) }
}

pub fn check_abstract(desc: &AbstractDescriptor) -> Result<ConditionReport> {
    if desc.rank == 0 {
        return Err(Error::InvalidDescriptor("rank must be positive".into()));
    }
    for g in &desc.generators {
        if g.rank() != desc.rank {
            return Err(Error::RankMismatch { expected: desc.rank, got: g.rank() });
        }
    }
    let asserted = |holds: bool| Condition { holds, source: Source::Asserted, witness: Witness::Asserted };
    let rho_dense = if desc.rank == 1 {
        let scalars: Vec<ThetaRational> = desc.generators.iter().filter_map(|g| g.scalar().cloned()).collect();
        let condition = match decide_density(&scalars) {
            Density::Dense { first, second, cross_determinant } => Condition {
                holds: true,
                source: Source::Computed,
                witness: Witness::IrrationalPair { first, second, cross_determinant: cross_determinant.to_string() },
            },
            Density::Cyclic { generator } => Condition {
                holds: false,
                source: Source::Computed,
                witness: Witness::CyclicSubgroup { generator: generator.to_string() },
            },
        };
        if let Some(claimed) = desc.flags.rho_dense {
            if claimed != condition.holds {
                return Err(Error::InconsistentFlags(format!(
                    "rho_dense asserted {claimed} but the generators give {}",
                    condition.holds
                )));
            }
        }
        condition
    } else {
        match desc.flags.rho_dense {
            Some(holds) => asserted(holds),
            None => return Err(Error::RankTooHighForDensity { rank: desc.rank }),
        }
    };
    Ok(ConditionReport::assemble(
        asserted(desc.flags.no_findim_reps),
        asserted(desc.flags.stable_rank_one),
        asserted(desc.flags.k1_trivial),
        rho_dense,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingCheck {
    pub consistent: bool,
    pub function: AffFunction,
    /// Nearest `K₀` class and its image under `ρ`.
    pub nearest_class: Vec<i64>,
    pub nearest: AffFunction,
    pub distance: f64,
}

/// Whether `Δ₁⁰` of a unitary loop lands on `ρ(K₀(A))`.
pub fn pairing_consistency(alg: &AlgebraDescriptor, lp: &InvertiblePath, quad: &QuadratureConfig) -> Result<PairingCheck> {
    if lp.algebra() != alg {
        return Err(Error::DescriptorMismatch { left: alg.block_sizes().to_vec(), right: lp.algebra().block_sizes().to_vec() });
    }
    let pairing = delta_1_0(lp, quad)?;
    let (class, distance) = nearest_lattice_point(&pairing.function, alg)?;
    let nearest = rho(&class, &TraceSimplex::new(alg.clone()))?;
    Ok(PairingCheck { consistent: distance <= PAIRING_TOL, function: pairing.function, nearest_class: class, nearest, distance })
}
