//! Composite Simpson quadrature for vector-valued integrands with step doubling.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Initial number of Simpson panels per smooth piece (rounded up to even).
    pub steps: usize,
    /// Stop once two successive halvings agree to this absolute tolerance.
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { steps: 256, tol: 1e-9, max_steps: 1 << 20 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadratureStats {
    pub evaluations: usize,
    pub final_steps: usize,
    pub last_change: f64,
}

/// Integrate `f` over `[a, b]`. `f(t)` returns a fixed-length vector.
///
/// Node values may be computed in parallel; sums are always accumulated in
/// node order so the result does not depend on the thread count.
pub fn integrate<F>(f: &F, a: f64, b: f64, dim: usize, cfg: &QuadratureConfig, stats: &mut QuadratureStats) -> Result<Vec<Complex64>>
where
    F: Fn(f64) -> Result<Vec<Complex64>> + Sync,
{
    let zero = vec![Complex64::new(0.0, 0.0); dim];
    if b == a {
        return Ok(zero);
    }
    let mut n = cfg.steps.max(2);
    n += n % 2;
    let h0 = (b - a) / n as f64;
    let nodes: Vec<f64> = (0..=n).map(|j| if j == n { b } else { a + j as f64 * h0 }).collect();
    let values = eval_all(f, &nodes)?;
    stats.evaluations += values.len();

    let mut ends = zero.clone();
    let mut odd = zero.clone();
    let mut even = zero.clone();
    for (j, v) in values.iter().enumerate() {
        let target = if j == 0 || j == n {
            &mut ends
        } else if j % 2 == 1 {
            &mut odd
        } else {
            &mut even
        };
        accumulate(target, v);
    }
    let mut estimate = simpson(&ends, &odd, &even, h0);

    loop {
        if 2 * n > cfg.max_steps {
            stats.final_steps = n;
            return Err(Error::NoConvergence { last_change: stats.last_change, steps: n });
        }
        let h = (b - a) / (2 * n) as f64;
        let nodes: Vec<f64> = (0..n).map(|j| a + (2 * j + 1) as f64 * h).collect();
        let values = eval_all(f, &nodes)?;
        stats.evaluations += values.len();
        for (e, o) in even.iter_mut().zip(&odd) {
            *e += o;
        }
        odd = zero.clone();
        for v in &values {
            accumulate(&mut odd, v);
        }
        n *= 2;
        let refined = simpson(&ends, &odd, &even, h);
        let change = refined.iter().zip(&estimate).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        estimate = refined;
        stats.last_change = change;
        stats.final_steps = n;
        if change <= cfg.tol {
            return Ok(estimate);
        }
    }
}

fn accumulate(target: &mut [Complex64], v: &[Complex64]) {
    for (t, x) in target.iter_mut().zip(v) {
        *t += x;
    }
}

fn simpson(ends: &[Complex64], odd: &[Complex64], even: &[Complex64], h: f64) -> Vec<Complex64> {
    ends.iter()
        .zip(odd)
        .zip(even)
        .map(|((e, o), v)| (e + o * 4.0 + v * 2.0) * (h / 3.0))
        .collect()
}

#[cfg(feature = "parallel")]
fn eval_all<F>(f: &F, nodes: &[f64]) -> Result<Vec<Vec<Complex64>>>
where
    F: Fn(f64) -> Result<Vec<Complex64>> + Sync,
{
    use rayon::prelude::*;
    nodes.par_iter().map(|&t| f(t)).collect()
}

#[cfg(not(feature = "parallel"))]
fn eval_all<F>(f: &F, nodes: &[f64]) -> Result<Vec<Vec<Complex64>>>
where
    F: Fn(f64) -> Result<Vec<Complex64>> + Sync,
{
    nodes.iter().map(|&t| f(t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn cubic_is_exact() {
        let f = |t: f64| Ok(vec![c(t * t * t - 2.0 * t), Complex64::new(0.0, 1.0)]);
        let mut stats = QuadratureStats::default();
        let v = integrate(&f, 0.0, 2.0, 2, &QuadratureConfig::default(), &mut stats).unwrap();
        assert!((v[0] - c(0.0)).norm() < 1e-14);
        assert!((v[1] - Complex64::new(0.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn smooth_integrand_converges() {
        let f = |t: f64| Ok(vec![c((5.0 * t).sin())]);
        let mut stats = QuadratureStats::default();
        let cfg = QuadratureConfig { steps: 4, tol: 1e-12, max_steps: 1 << 16 };
        let v = integrate(&f, 0.0, 1.0, 1, &cfg, &mut stats).unwrap();
        let exact = (1.0 - 5f64.cos()) / 5.0;
        assert!((v[0].re - exact).abs() < 1e-11);
        assert!(stats.final_steps > 4);
    }

    #[test]
    fn gives_up_past_max_steps() {
        let f = |t: f64| Ok(vec![c(if t < 0.3 { 0.0 } else { 1.0 })]);
        let cfg = QuadratureConfig { steps: 4, tol: 1e-15, max_steps: 64 };
        let mut stats = QuadratureStats::default();
        assert!(matches!(integrate(&f, 0.0, 1.0, 1, &cfg, &mut stats), Err(Error::NoConvergence { .. })));
    }
}
