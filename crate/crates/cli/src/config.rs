use std::collections::BTreeMap;

use apfp_core::checker::PAIRING_TOL;
use apfp_core::factorization::{OptimizerConfig, DEFAULT_MAX_STEP_NORM, MEMBERSHIP_TOL};
use apfp_core::quadrature::QuadratureConfig;
use serde::Serialize;

use crate::report::OutputFormat;

/// Named tolerances that can be overridden with `--tol NAME=VALUE`.
pub const TOLERANCE_NAMES: [&str; 3] = ["membership", "max_step_norm", "pairing"];

/// Everything that influences a report's numbers. Echoed into every report.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub quadrature: QuadratureConfig,
    pub optimizer: OptimizerConfig,
    pub output_format: OutputFormat,
}

impl RunConfig {
    pub fn new(
        seed: u64,
        overrides: &[(String, f64)],
        quadrature: QuadratureConfig,
        optimizer: OptimizerConfig,
        output_format: OutputFormat,
    ) -> Result<Self, String> {
        let mut tolerances: BTreeMap<String, f64> = [
            ("membership".to_string(), MEMBERSHIP_TOL),
            ("max_step_norm".to_string(), DEFAULT_MAX_STEP_NORM),
            ("pairing".to_string(), PAIRING_TOL),
        ]
        .into_iter()
        .collect();
        for (name, value) in overrides {
            if !TOLERANCE_NAMES.contains(&name.as_str()) {
                return Err(format!("unknown tolerance `{name}` (known: {})", TOLERANCE_NAMES.join(", ")));
            }
            if !(value.is_finite() && *value > 0.0) {
                return Err(format!("tolerance `{name}` must be positive"));
            }
            tolerances.insert(name.clone(), *value);
        }
        Ok(Self { seed, tolerances, quadrature, optimizer, output_format })
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances[name]
    }
}

/// Parse `NAME=VALUE`.
pub fn parse_override(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let value: f64 = value.trim().parse().map_err(|e| format!("bad value in `{s}`: {e}"))?;
    Ok((name.trim().to_string(), value))
}
