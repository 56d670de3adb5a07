use std::io::Read;
use std::path::Path;

use apfp_core::algebra::{AlgebraDescriptor, Element};
use apfp_core::checker::{
    check_abstract, check_conditions_with, pairing_consistency, AbstractDescriptor, ConditionReport, DensityProbeOptions,
    Witness,
};
use apfp_core::determinant::{
    delta_1_0, distance_to_lattice, lattice_reduce, path_determinant_with_stats, LOOP_ENDPOINT_TOL, LOOP_UNITARY_TOL,
};
use apfp_core::error::Error;
use apfp_core::factorization::{factor_positive_products_with_tol, membership_test, probe_distance, PositiveFactorization};
use apfp_core::path::InvertiblePath;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{exit, CliError};
use crate::report::{Report, Row};

/// Points at which path diagnostics are sampled.
const DIAGNOSTIC_SAMPLES: usize = 32;

pub fn read_input(path: &Path) -> Result<String, CliError> {
    let read_err = |source| CliError::Read { path: path.to_path_buf(), source };
    if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(read_err)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(read_err)
    }
}

fn parse<T: DeserializeOwned>(text: &str, what: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse { what: what.to_string(), message: e.to_string() })
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report values always serialize")
}

#[derive(Debug, serde::Serialize)]
struct PathDiagnostics {
    samples: usize,
    start_distance_to_identity: f64,
    end_distance_to_identity: f64,
    closed: bool,
    based_at_identity: bool,
    max_unitary_defect: f64,
    unitary: bool,
    max_self_adjoint_defect: f64,
    min_hermitian_eigenvalue: f64,
    positive: bool,
    min_singular_value: f64,
}

fn diagnose(path: &InvertiblePath) -> Result<PathDiagnostics, Error> {
    let one = Element::identity(path.algebra());
    let [lo, hi] = path.domain();
    let start = path.evaluate(lo)?;
    let end = path.evaluate(hi)?;
    let mut d = PathDiagnostics {
        samples: DIAGNOSTIC_SAMPLES + 1,
        start_distance_to_identity: start.distance(&one)?,
        end_distance_to_identity: end.distance(&one)?,
        closed: start.distance(&end)? <= LOOP_ENDPOINT_TOL,
        based_at_identity: false,
        max_unitary_defect: 0.0,
        unitary: false,
        max_self_adjoint_defect: 0.0,
        min_hermitian_eigenvalue: f64::INFINITY,
        positive: false,
        min_singular_value: f64::INFINITY,
    };
    d.based_at_identity = d.start_distance_to_identity.max(d.end_distance_to_identity) <= LOOP_ENDPOINT_TOL;
    for j in 0..=DIAGNOSTIC_SAMPLES {
        let x = path.evaluate(lo + (hi - lo) * j as f64 / DIAGNOSTIC_SAMPLES as f64)?;
        d.max_unitary_defect = d.max_unitary_defect.max(x.unitary_defect());
        d.max_self_adjoint_defect = d.max_self_adjoint_defect.max(x.self_adjoint_defect());
        d.min_hermitian_eigenvalue = d.min_hermitian_eigenvalue.min(x.min_hermitian_eigenvalue());
        d.min_singular_value = d.min_singular_value.min(x.min_singular_value());
    }
    d.unitary = d.max_unitary_defect <= LOOP_UNITARY_TOL;
    d.positive = d.max_self_adjoint_defect <= 1e-10 && d.min_hermitian_eigenvalue > 0.0;
    Ok(d)
}

pub fn det_path(file: &Path, cfg: &RunConfig) -> Result<(Report, u8), CliError> {
    let path: InvertiblePath = parse(&read_input(file)?, "path")?;
    let mut report = Report::new("det-path", cfg);
    let (det, stats) = report.timed("path_determinant", || path_determinant_with_stats(&path, &cfg.quadrature))?;
    let canonical = lattice_reduce(&det);
    let lattice_distance = distance_to_lattice(&det);
    let diagnostics = report.timed("diagnostics", || diagnose(&path))?;

    report.rows.push(Row::blocks("determinant", &det.coords));
    report.rows.push(Row::blocks("canonical_representative", &canonical.representative.coords));
    report.rows.push(Row::scalar("lattice_distance", lattice_distance));
    report.rows.push(Row::flag("closed", diagnostics.closed));
    report.rows.push(Row::flag("unitary", diagnostics.unitary));
    report.rows.push(Row::flag("positive", diagnostics.positive));

    let mut result = json!({
        "algebra": path.algebra(),
        "determinant": det.coords,
        "canonical_representative": canonical.representative.coords,
        "lattice_distance": lattice_distance,
        "quadrature": stats,
        "diagnostics": diagnostics,
    });
    if diagnostics.based_at_identity && diagnostics.unitary {
        let alg = path.algebra().clone();
        let pairing = report.timed("delta_1_0", || delta_1_0(&path, &cfg.quadrature))?;
        let check = report.timed("pairing_consistency", || pairing_consistency(&alg, &path, &cfg.quadrature))?;
        let consistent = check.distance <= cfg.tol("pairing");
        report.rows.push(Row::real_blocks("delta_1_0", &pairing.function.values));
        report.rows.push(Row::real_blocks("nearest_rho_image", &check.nearest.values));
        report.rows.push(Row::scalar("pairing_distance", check.distance));
        report.rows.push(Row::flag("pairing_consistent", consistent));
        result["loop_pairing"] = json!({
            "delta_1_0": pairing.function.values,
            "winding": pairing.winding.coords,
            "imaginary_residual": pairing.imaginary_residual,
            "nearest_class": check.nearest_class,
            "nearest_rho_image": check.nearest.values,
            "distance": check.distance,
            "consistent": consistent,
        });
    }
    report.result = result;
    Ok((report, exit::OK))
}

fn read_element(file: &Path) -> Result<Element, CliError> {
    parse(&read_input(file)?, "element")
}

fn is_identity(x: &Element) -> bool {
    x.distance(&Element::identity(x.algebra())).is_ok_and(|d| d == 0.0)
}

fn factorization_value(f: &PositiveFactorization) -> Value {
    json!({
        "factors": f.factors,
        "residual": f.residual,
        "relative_residual": f.relative_residual(),
        "restart": f.restart,
        "nontrivial_factors": f.factors.iter().filter(|p| !is_identity(p)).count(),
        "min_factor_eigenvalue": f.factors.iter().map(Element::min_hermitian_eigenvalue).fold(f64::INFINITY, f64::min),
    })
}

fn factorization_rows(report: &mut Report, f: &PositiveFactorization) {
    report.rows.push(Row::scalar("residual", f.residual));
    report.rows.push(Row::scalar("relative_residual", f.relative_residual()));
    for (j, p) in f.factors.iter().enumerate() {
        report.rows.push(Row::blocks(format!("factor_{j}_trace"), &p.universal_trace().coords));
    }
}

pub fn factor(file: &Path, m: usize, cfg: &RunConfig) -> Result<(Report, u8), CliError> {
    let x = read_element(file)?;
    let mut report = Report::new("factor", cfg);
    let tol = cfg.tol("membership");
    let membership = report.timed("membership_test", || membership_test(&x, tol))?;
    report.rows.push(Row::flag("member", membership.member));
    report.rows.push(Row::real_blocks("determinant_phase", &membership.phases));

    if !membership.member {
        let probe = report.timed("probe_distance", || probe_distance(&x, m, &cfg.optimizer))?;
        report.rows.push(Row::scalar("distance_probe", probe.distance));
        report.result = json!({
            "status": "not_in_closure",
            "factors_requested": m,
            "membership": membership,
            "distance_probe": { "distance": probe.distance, "restart": probe.restart, "factors": probe.factors },
        });
        return Ok((report, exit::NOT_IN_CLOSURE));
    }

    match report.timed("factor_positive_products", || factor_positive_products_with_tol(&x, m, &cfg.optimizer, tol)) {
        Ok(f) => {
            factorization_rows(&mut report, &f);
            let mut result = json!({ "status": "converged", "factors_requested": m, "membership": membership });
            result["factorization"] = factorization_value(&f);
            report.result = result;
            Ok((report, exit::OK))
        }
        Err(Error::FactorizationNoConvergence { best, .. }) => {
            factorization_rows(&mut report, &best);
            let mut result = json!({ "status": "no_convergence", "factors_requested": m, "membership": membership });
            result["best"] = factorization_value(&best);
            report.result = result;
            Ok((report, exit::NO_CONVERGENCE))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn membership(file: &Path, cfg: &RunConfig) -> Result<(Report, u8), CliError> {
    let x = read_element(file)?;
    let mut report = Report::new("membership", cfg);
    let m = report.timed("membership_test", || membership_test(&x, cfg.tol("membership")))?;
    report.rows.push(Row::flag("member", m.member));
    report.rows.push(Row::real_blocks("determinant_phase", &m.phases));
    report.result = json!({ "algebra": x.algebra(), "membership": m });
    Ok((report, exit::OK))
}

enum Descriptor {
    Blocks(AlgebraDescriptor),
    Abstract(AbstractDescriptor),
}

fn parse_descriptor(text: &str) -> Result<Descriptor, CliError> {
    let value: Value = parse(text, "descriptor")?;
    let parse_err = |message: String| CliError::Parse { what: "descriptor".into(), message };
    if value.get("block_sizes").is_some() {
        let alg = serde_json::from_value(value).map_err(|e| parse_err(e.to_string()))?;
        Ok(Descriptor::Blocks(alg))
    } else if value.get("rank").is_some() {
        Ok(Descriptor::Abstract(AbstractDescriptor::from_json(text)?))
    } else {
        Err(parse_err("expected `block_sizes` or `rank`, `generators` and `flags`".into()))
    }
}

fn condition_rows(report: &mut Report, cr: &ConditionReport) {
    for (name, c) in [
        ("no_findim_reps", &cr.no_findim_reps),
        ("stable_rank_one", &cr.stable_rank_one),
        ("k1_trivial", &cr.k1_trivial),
        ("rho_dense", &cr.rho_dense),
    ] {
        report.rows.push(Row::flag(name, c.holds));
        if let Witness::LatticeGap { function, distance, .. } = &c.witness {
            report.rows.push(Row::real_blocks(format!("{name}_witness_function"), &function.values));
            report.rows.push(Row::scalar(format!("{name}_witness_distance"), *distance));
        }
    }
    report.rows.push(Row::flag("apfp_verdict", cr.apfp_verdict));
}

pub fn check(file: &Path, cfg: &RunConfig) -> Result<(Report, u8), CliError> {
    let descriptor = parse_descriptor(&read_input(file)?)?;
    let mut report = Report::new("check", cfg);
    let (input, cr) = match descriptor {
        Descriptor::Blocks(alg) => {
            let probe = DensityProbeOptions { seed: cfg.seed, ..DensityProbeOptions::default() };
            let cr = report.timed("check_conditions", || check_conditions_with(&alg, &probe));
            (to_value(&alg), cr)
        }
        Descriptor::Abstract(desc) => {
            let cr = report.timed("check_abstract", || check_abstract(&desc))?;
            (to_value(&desc), cr)
        }
    };
    condition_rows(&mut report, &cr);
    report.result = json!({
        "descriptor": input,
        "conditions": cr,
        "failing_conditions": cr.failing_conditions(),
        "apfp_verdict": cr.apfp_verdict,
    });
    Ok((report, exit::OK))
}
