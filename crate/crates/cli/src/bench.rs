//! Wall-clock timings of the main operations on seeded inputs. Each timing
//! entry is the median over `repeats` runs; `result` holds the quantities
//! computed so the work cannot be skipped and the run can be sanity-checked.

use std::time::Instant;

use apfp_core::algebra::AlgebraDescriptor;
use apfp_core::checker::{check_conditions_with, DensityProbeOptions};
use apfp_core::determinant::path_determinant;
use apfp_core::error::Error;
use apfp_core::factorization::{
    commutator_factor_su, factor_positive_products_with_tol, group_commutator, polar_path, random_member,
    split_into_exponentials,
};
use apfp_core::path::InvertiblePath;
use apfp_core::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::error::{exit, CliError};
use crate::report::{Report, Row};

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

struct Bench<'a> {
    repeats: usize,
    report: &'a mut Report,
    values: Map<String, Value>,
}

impl Bench<'_> {
    fn case(&mut self, name: &str, f: impl Fn() -> Result<f64, Error>) -> Result<(), Error> {
        let mut times = Vec::with_capacity(self.repeats);
        let mut value = 0.0;
        for _ in 0..self.repeats {
            let start = Instant::now();
            value = f()?;
            times.push(start.elapsed().as_secs_f64() * 1e3);
        }
        let ms = median(times);
        self.report.timing_ms.insert(name.to_string(), ms);
        self.report.rows.push(Row::scalar(format!("{name}_ms"), ms));
        self.values.insert(name.to_string(), json!(value));
        Ok(())
    }
}

pub fn run(repeats: usize, cfg: &RunConfig) -> Result<(Report, u8), CliError> {
    if repeats == 0 {
        return Err(CliError::Config("--repeats must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let m23 = AlgebraDescriptor::new(vec![2, 3])?;
    let c = sample::self_adjoint(&m23, 2.0, &mut rng);
    let d = sample::self_adjoint(&m23, 2.0, &mut rng);
    let su6 = sample::special_unitary(&AlgebraDescriptor::matrix(6), &mut rng);
    let member3 = random_member(&AlgebraDescriptor::matrix(3), &mut rng);
    let check_alg = AlgebraDescriptor::new(vec![2, 3, 4])?;

    let mut report = Report::new("bench", cfg);
    let mut bench = Bench { repeats, report: &mut report, values: Map::new() };
    let quad = cfg.quadrature;
    bench.case("exp_line_determinant", || Ok(path_determinant(&InvertiblePath::exp_line(c.clone()), &quad)?.max_abs()))?;
    bench.case("polar_path_determinant", || Ok(path_determinant(&polar_path(&c, &d)?, &quad)?.max_abs()))?;
    bench.case("exponential_splitting", || {
        Ok(split_into_exponentials(&polar_path(&c, &d)?, cfg.tol("max_step_norm"))?.len() as f64)
    })?;
    bench.case("commutator_factor_su6", || {
        let (v, w) = commutator_factor_su(&su6)?;
        group_commutator(&v, &w)?.distance(&su6)
    })?;
    bench.case("factor_m3_five_factors", || {
        Ok(factor_positive_products_with_tol(&member3, 5, &cfg.optimizer, cfg.tol("membership"))?.relative_residual())
    })?;
    bench.case("check_conditions_m2_m3_m4", || {
        let probe = DensityProbeOptions { seed: cfg.seed, ..DensityProbeOptions::default() };
        let cr = check_conditions_with(&check_alg, &probe);
        Ok(if cr.apfp_verdict { 1.0 } else { 0.0 })
    })?;
    let values = std::mem::take(&mut bench.values);
    report.result = json!({ "repeats": repeats, "values": values });
    Ok((report, exit::OK))
}
