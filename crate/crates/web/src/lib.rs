//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Three operations are exported, each returning a JSON string:
//! the unitary part of a product of two positive paths with its running
//! determinant, the pairing of a winding loop with `K₀`, and factorization
//! (or the distance probe) for a 2×2 matrix.

use apfp_core::algebra::{AlgebraDescriptor, Element};
use apfp_core::checker::pairing_consistency;
use apfp_core::determinant::path_determinant;
use apfp_core::error::{Error, Result};
use apfp_core::factorization::{factor_positive_products, membership_test, probe_distance, unitary_exp_line, OptimizerConfig, MEMBERSHIP_TOL};
use apfp_core::path::{InvertiblePath, PathKind};
use apfp_core::quadrature::QuadratureConfig;
use apfp_core::sample;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const MAX_SAMPLES: usize = 400;
const MAX_RESTARTS: usize = 64;

/// Running determinant and eigenphases of `t ↦ polar part of e^{tc}e^{td}` on `M₂ ⊕ M₃`.
pub fn polar_path_curve(seed: u64, samples: usize, bound: f64) -> Result<Value> {
    if !(2..=MAX_SAMPLES).contains(&samples) {
        return Err(Error::InvalidPath(format!("samples must lie in 2..={MAX_SAMPLES}")));
    }
    let alg = AlgebraDescriptor::new(vec![2, 3])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = sample::self_adjoint(&alg, bound, &mut rng);
    let d = sample::self_adjoint(&alg, bound, &mut rng);
    let quad = QuadratureConfig { steps: 16, ..QuadratureConfig::default() };
    let piece = |a: f64, b: f64| {
        let kind = PathKind::ProductPolar { c: c.clone(), d: d.clone() };
        InvertiblePath::new([a, b], kind)
    };

    let mut ts = Vec::with_capacity(samples);
    let mut phases = Vec::with_capacity(samples);
    let mut running = Vec::with_capacity(samples);
    let mut total = vec![Complex64::new(0.0, 0.0); alg.num_blocks()];
    for j in 0..samples {
        let t = j as f64 / (samples - 1) as f64;
        if j > 0 {
            let step = path_determinant(&piece(ts[j - 1], t)?, &quad)?;
            for (acc, z) in total.iter_mut().zip(&step.coords) {
                *acc += z;
            }
        }
        let u = piece(0.0, 1.0)?.evaluate(t)?;
        ts.push(t);
        phases.push(u.unitary_phases()?);
        running.push(total.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>());
    }
    let determinant = path_determinant(&piece(0.0, 1.0)?, &QuadratureConfig::default())?;
    Ok(json!({
        "t": ts,
        "phases": phases,
        "running_determinant": running,
        "determinant": determinant.coords,
        "max_abs_determinant": determinant.max_abs(),
    }))
}

/// The loop `t ↦ e^{2πi t·diag(k_i, 0, …)}` and its image under the pairing.
pub fn winding_pairing(block_sizes: &[usize], windings: &[i64]) -> Result<Value> {
    let alg = AlgebraDescriptor::new(block_sizes.to_vec())?;
    if windings.len() != alg.num_blocks() {
        return Err(Error::RankMismatch { expected: alg.num_blocks(), got: windings.len() });
    }
    let mut h = Element::zero(&alg).into_blocks();
    for (block, &k) in h.iter_mut().zip(windings) {
        block[(0, 0)] = Complex64::new(std::f64::consts::TAU * k as f64, 0.0);
    }
    let lp = unitary_exp_line(&Element::from_blocks(h)?);
    let quad = QuadratureConfig::default();
    let det = path_determinant(&lp, &quad)?;
    let check = pairing_consistency(&alg, &lp, &quad)?;
    Ok(json!({
        "determinant": det.coords,
        "delta_1_0": check.function.values,
        "nearest_class": check.nearest_class,
        "nearest_rho_image": check.nearest.values,
        "distance": check.distance,
        "consistent": check.consistent,
    }))
}

/// Membership, then either a positive factorization or the distance probe,
/// for the 2×2 matrix with row-major `[re, im]` entries.
pub fn factor_2x2(entries: &[f64], factors: usize, restarts: usize, seed: u64) -> Result<Value> {
    if entries.len() != 8 {
        return Err(Error::InvalidElement("expected 8 numbers: re, im of a11, a12, a21, a22".into()));
    }
    if restarts == 0 || restarts > MAX_RESTARTS {
        return Err(Error::InvalidElement(format!("restarts must lie in 1..={MAX_RESTARTS}")));
    }
    let z = |k: usize| Complex64::new(entries[2 * k], entries[2 * k + 1]);
    let x = Element::from_rows(&[vec![z(0), z(1)], vec![z(2), z(3)]])?;
    let opt = OptimizerConfig { restarts, seed, ..OptimizerConfig::default() };
    let membership = membership_test(&x, MEMBERSHIP_TOL)?;
    if !membership.member {
        let probe = probe_distance(&x, factors, &opt)?;
        return Ok(json!({
            "member": false,
            "phases": membership.phases,
            "distance": probe.distance,
            "factors": probe.factors,
        }));
    }
    let (f, converged) = match factor_positive_products(&x, factors, &opt) {
        Ok(f) => (f, true),
        Err(Error::FactorizationNoConvergence { best, .. }) => (*best, false),
        Err(e) => return Err(e),
    };
    Ok(json!({
        "member": true,
        "phases": membership.phases,
        "converged": converged,
        "relative_residual": f.relative_residual(),
        "factors": f.factors,
        "eigenvalues": f.factors.iter().map(|p| p.min_hermitian_eigenvalue()).collect::<Vec<_>>(),
    }))
}

fn export(r: Result<Value>) -> std::result::Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = polarPathCurve)]
pub fn polar_path_curve_js(seed: u32, samples: u32, bound: f64) -> std::result::Result<String, JsError> {
    export(polar_path_curve(seed.into(), samples as usize, bound))
}

#[wasm_bindgen(js_name = windingPairing)]
pub fn winding_pairing_js(block_sizes: Vec<u32>, windings: Vec<i32>) -> std::result::Result<String, JsError> {
    let sizes: Vec<usize> = block_sizes.iter().map(|&n| n as usize).collect();
    let windings: Vec<i64> = windings.iter().map(|&k| k.into()).collect();
    export(winding_pairing(&sizes, &windings))
}

#[wasm_bindgen(js_name = factor2x2)]
pub fn factor_2x2_js(entries: Vec<f64>, factors: u32, restarts: u32, seed: u32) -> std::result::Result<String, JsError> {
    export(factor_2x2(&entries, factors as usize, restarts as usize, seed.into()))
}
