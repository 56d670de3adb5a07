//! Bundled scenarios. Each one builds its inputs from the run seed, checks a
//! list of bounds and reports every intermediate value.

use apfp_core::algebra::{AlgebraDescriptor, Element};
use apfp_core::checker::pairing_consistency;
use apfp_core::determinant::{distance_to_lattice, path_determinant};
use apfp_core::error::Error;
use apfp_core::factorization::{commutator_factor_su, group_commutator, polar_path, split_into_exponentials, unitary_exp_line};
use apfp_core::path::InvertiblePath;
use apfp_core::sample;
use clap::ValueEnum;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{exit, CliError};
use crate::report::{Report, Row};

const SELF_ADJOINT_BOUND: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemoName {
    PolarPathDeterminantZero,
    SplittingTraceZero,
    CommutatorWitness,
    LoopLattice,
}

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    value: f64,
    bound: f64,
    passed: bool,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn at_most(&mut self, name: impl Into<String>, value: f64, bound: f64) {
        self.0.push(Check { name: name.into(), value, bound, passed: value <= bound });
    }

    fn all_passed(&self) -> bool {
        self.0.iter().all(|c| c.passed)
    }
}

fn m23() -> AlgebraDescriptor {
    AlgebraDescriptor::new(vec![2, 3]).expect("valid block sizes")
}

fn seeded_pair(cfg: &RunConfig) -> (Element, Element) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let c = sample::self_adjoint(&m23(), SELF_ADJOINT_BOUND, &mut rng);
    let d = sample::self_adjoint(&m23(), SELF_ADJOINT_BOUND, &mut rng);
    (c, d)
}

fn polar_path_determinant_zero(cfg: &RunConfig, checks: &mut Checks) -> Result<Value, Error> {
    let (c, d) = seeded_pair(cfg);
    let path = polar_path(&c, &d)?;
    let det = path_determinant(&path, &cfg.quadrature)?;
    let endpoint = path.evaluate(1.0)?;
    checks.at_most("max_abs_determinant", det.max_abs(), 1e-7);
    checks.at_most("endpoint_unitary_defect", endpoint.unitary_defect(), 1e-10);
    Ok(json!({ "c": c, "d": d, "determinant": det.coords, "endpoint": endpoint }))
}

fn splitting_trace_zero(cfg: &RunConfig, checks: &mut Checks) -> Result<Value, Error> {
    let (c, d) = seeded_pair(cfg);
    let path = polar_path(&c, &d)?;
    let split = split_into_exponentials(&path, cfg.tol("max_step_norm"))?;
    let trace = split.log_sum()?.universal_trace();
    let reconstruction = split.reconstruction_error()?;
    checks.at_most("quotient_norm_of_log_sum", trace.quotient_norm(), 1e-7);
    checks.at_most("reconstruction_error", reconstruction, 1e-8);
    Ok(json!({
        "c": c,
        "d": d,
        "steps": split.len(),
        "partition": split.partition,
        "log_sum_trace": trace.coords,
        "reconstruction_error": reconstruction,
    }))
}

fn commutator_witness(cfg: &RunConfig, checks: &mut Checks) -> Result<Value, Error> {
    let (c, d) = seeded_pair(cfg);
    let u = polar_path(&c, &d)?.evaluate(1.0)?;
    let (v, w) = commutator_factor_su(&u)?;
    let error = group_commutator(&v, &w)?.distance(&u)?;
    checks.at_most("commutator_error", error, 1e-8);
    checks.at_most("v_unitary_defect", v.unitary_defect(), 1e-10);
    checks.at_most("w_unitary_defect", w.unitary_defect(), 1e-10);
    Ok(json!({ "u": u, "block_determinants": u.block_determinants(), "v": v, "w": w, "commutator_error": error }))
}

fn loop_lattice(cfg: &RunConfig, checks: &mut Checks) -> Result<Value, Error> {
    let alg = m23();
    let windings: [[i64; 2]; 4] = [[1, 0], [0, 1], [2, -1], [-3, 4]];
    let mut loops = Vec::new();
    for w in windings {
        let mut h = Element::zero(&alg).into_blocks();
        for (block, &k) in h.iter_mut().zip(&w) {
            block[(0, 0)] = Complex64::new(std::f64::consts::TAU * k as f64, 0.0);
        }
        let lp: InvertiblePath = unitary_exp_line(&Element::from_blocks(h)?);
        let det = path_determinant(&lp, &cfg.quadrature)?;
        let pairing = pairing_consistency(&alg, &lp, &cfg.quadrature)?;
        let label = format!("{}_{}", w[0], w[1]);
        checks.at_most(format!("lattice_distance_{label}"), distance_to_lattice(&det), 1e-6);
        checks.at_most(format!("pairing_distance_{label}"), pairing.distance, cfg.tol("pairing"));
        loops.push(json!({
            "winding": w,
            "determinant": det.coords,
            "delta_1_0": pairing.function.values,
            "nearest_class": pairing.nearest_class,
        }));
    }
    Ok(json!({ "algebra": alg, "loops": loops }))
}

pub fn run(name: DemoName, cfg: &RunConfig) -> Result<(Report, u8), CliError> {
    let mut report = Report::new("demo", cfg);
    let mut checks = Checks::default();
    let scenario = match name {
        DemoName::PolarPathDeterminantZero => polar_path_determinant_zero,
        DemoName::SplittingTraceZero => splitting_trace_zero,
        DemoName::CommutatorWitness => commutator_witness,
        DemoName::LoopLattice => loop_lattice,
    };
    let intermediates = report.timed("scenario", || scenario(cfg, &mut checks))?;
    let passed = checks.all_passed();
    for c in &checks.0 {
        report.rows.push(Row::scalar(&c.name, c.value));
    }
    report.rows.push(Row::flag("passed", passed));
    report.result = json!({ "name": name, "passed": passed, "checks": checks.0, "intermediates": intermediates });
    Ok((report, if passed { exit::OK } else { exit::DEMO_FAILED }))
}
