use std::f64::consts::PI;
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use serde_json::{json, Value};

use super::manifest::{ExperimentManifest, Task};
use super::report::{emit_report, CheckResult, Report};
use crate::counting::{
    berger_bott_curve, classify_growth, minimal_gromov_constant, torus_count_integral_oracle_curve, CountingCurve,
    GromovOptions, GrowthClass,
};
use crate::error::{Error, Result};
use crate::flow::{integrate_geodesic, propagate_jacobi, JacobiSystem};
use crate::herglotz::{
    adapted_complex_structure_at, b_decomposition_min_eigenvalue, check_identity_chain, check_theorem_nice,
    det_growth_bound, minkowski_det_lower_bound, stieltjes_invert, HerglotzMatrix, C64,
};
use crate::linalg::{max_abs, min_sym_eigenvalue};
use crate::manifolds::{sphere_volume, unit_sphere_quadrature, ManifoldKind, ManifoldSpec};
use crate::output::{fmt_f64, write_csv};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const ORACLE_TOL: f64 = 0.02;
const CLOSED_FORM_TOL: f64 = 1e-3;
const CLOSED_IDENTITY_TOL: f64 = 1e-8;
const NUMERIC_IDENTITY_TOL: f64 = 1e-5;
const SINGULAR_CLEARANCE: f64 = 0.1;
const POLE_CLEARANCE: f64 = 0.05;
const POSITIVITY_SAMPLES: usize = 100;
const B_SAMPLES: usize = 50;
const DET_SAMPLES: usize = 100;
const MINKOWSKI_PAIRS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    Validation,
    Numerical,
    Verification,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::Validation => 2,
            ExitStatus::Numerical => 3,
            ExitStatus::Verification => 4,
        }
    }
}

/// A failure together with the operation and the manifest key it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct RunError {
    pub module: &'static str,
    pub operation: &'static str,
    pub parameter: String,
    pub source: Error,
}

impl RunError {
    pub fn status(&self) -> ExitStatus {
        if self.source.is_validation() {
            ExitStatus::Validation
        } else {
            ExitStatus::Numerical
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}::{} (parameter `{}`): {}", self.module, self.operation, self.parameter, self.source)
    }
}

impl std::error::Error for RunError {}

trait Context<T> {
    fn ctx(self, module: &'static str, operation: &'static str, parameter: &str) -> std::result::Result<T, RunError>;
}

impl<T> Context<T> for Result<T> {
    fn ctx(self, module: &'static str, operation: &'static str, parameter: &str) -> std::result::Result<T, RunError> {
        self.map_err(|source| RunError { module, operation, parameter: parameter.to_string(), source })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: ExitStatus,
    /// One line per check.
    pub summary: String,
    pub report: Report,
    pub artifacts: Vec<Artifact>,
}

struct TaskOutput {
    results: Value,
    checks: Vec<CheckResult>,
    tables: Vec<Artifact>,
}

fn header(m: &ExperimentManifest) -> Vec<(String, String)> {
    let manifold = m.manifold.as_ref().map(ManifoldSpec::tag).unwrap_or_else(|| m.space.to_string());
    vec![
        ("manifest_sha256".into(), m.sha256.clone()),
        ("version".into(), VERSION.into()),
        ("task".into(), m.task.name().into()),
        ("manifold".into(), manifold),
    ]
}

fn csv_artifact(name: String, write: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Artifact {
    let mut bytes = Vec::new();
    write(&mut bytes).expect("writing to memory");
    Artifact { name, bytes }
}

/// Run the task of `m` and build its artifacts in memory. Nothing is written.
pub fn execute(m: &ExperimentManifest) -> std::result::Result<RunOutcome, RunError> {
    let out = match m.task {
        Task::Count => counting(m, false)?,
        Task::Growth => counting(m, true)?,
        Task::HerglotzVerify => herglotz_verify(m)?,
        Task::LemmaSuite => lemma_suite(m)?,
        Task::Gromov => gromov(m)?,
    };
    let (summary, report) = emit_report(&out.checks);
    let head = header(m);
    let mut doc = serde_json::Map::new();
    for (k, v) in &head {
        doc.insert(k.clone(), Value::String(v.clone()));
    }
    doc.insert("results".into(), out.results);
    doc.insert("report".into(), serde_json::to_value(&report).expect("report serializes"));
    let mut json_bytes = serde_json::to_vec_pretty(&Value::Object(doc)).expect("JSON serializes");
    json_bytes.push(b'\n');

    let mut text = String::new();
    for (k, v) in &head {
        text.push_str(&format!("# {k}={v}\n"));
    }
    text.push_str(&summary);

    let mut artifacts = out.tables;
    artifacts.push(Artifact { name: format!("{}.json", m.prefix), bytes: json_bytes });
    artifacts.push(Artifact { name: format!("{}_report.txt", m.prefix), bytes: text.into_bytes() });
    let status = if report.all_pass() { ExitStatus::Success } else { ExitStatus::Verification };
    Ok(RunOutcome { status, summary, report, artifacts })
}

/// Write every artifact into `dir`, in order, from the calling thread.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(&a.name);
            std::fs::write(&path, &a.bytes)?;
            Ok(path)
        })
        .collect()
}

/// Execute the manifest and write its outputs to the configured directory.
pub fn run_manifest(m: &ExperimentManifest) -> std::result::Result<(RunOutcome, Vec<PathBuf>), RunError> {
    let outcome = execute(m)?;
    let paths = write_artifacts(&m.out_dir, &outcome.artifacts).map_err(|e| RunError {
        module: "cli",
        operation: "write_artifacts",
        parameter: "output.dir".into(),
        source: Error::Configuration(format!("{}: {e}", m.out_dir.display())),
    })?;
    Ok((outcome, paths))
}

fn spec_of(m: &ExperimentManifest) -> &ManifoldSpec {
    m.manifold.as_ref().expect("validated manifests carry a manifold for this task")
}

fn same_class(a: &GrowthClass, b: &GrowthClass) -> bool {
    match (a, b) {
        (GrowthClass::Polynomial { degree: x }, GrowthClass::Polynomial { degree: y }) => x == y,
        (GrowthClass::Exponential { .. }, GrowthClass::Exponential { .. }) => true,
        _ => false,
    }
}

/// `int_0^T |sin(k s)| / k ds`.
fn sine_integral(k: f64, t: f64) -> f64 {
    let half_periods = (k * t / PI).floor();
    let rest = k * t - half_periods * PI;
    (2.0 * half_periods + 1.0 - rest.cos()) / (k * k)
}

/// Closed-form counting integral where one is available.
fn closed_form_total(spec: &ManifoldSpec, t: f64) -> Option<f64> {
    let n = spec.dim();
    let flat = matches!(spec.kind(), ManifoldKind::FlatTorus { .. })
        || matches!(spec.kind(), ManifoldKind::ConstantCurvature { curvature, .. } if *curvature == 0.0);
    if flat {
        return Some(sphere_volume(n) * t.powi(n as i32) / n as f64);
    }
    match spec.kind() {
        ManifoldKind::ConstantCurvature { curvature, dim: 2 } if *curvature > 0.0 => {
            Some(2.0 * PI * sine_integral(curvature.sqrt(), t))
        }
        _ => None,
    }
}

fn curve_points(c: &CountingCurve) -> Value {
    json!(c.points().iter().map(|&(t, v)| [t, v]).collect::<Vec<_>>())
}

fn counting(m: &ExperimentManifest, require_class: bool) -> std::result::Result<TaskOutput, RunError> {
    let spec = spec_of(m);
    let quad = unit_sphere_quadrature(spec.dim(), m.scheme, m.order, m.seed).ctx(
        "manifolds",
        "unit_sphere_quadrature",
        "task.scheme/task.order",
    )?;
    let curve =
        berger_bott_curve(spec, &spec.base_point(), &m.ts, &quad, m.step).ctx("counting", "berger_bott_curve", "task.t/task.step")?;
    let mut checks = Vec::new();

    let (growth, growth_error) = match classify_growth(&curve) {
        Ok(g) => (Some(g), None),
        Err(e) if require_class => return Err(e).ctx("counting", "classify_growth", "task.t"),
        Err(e) => (None, Some(e.to_string())),
    };
    if let Some(expected) = &m.expected_growth {
        let ok = growth.as_ref().is_some_and(|g| same_class(&g.class, expected));
        checks.push(CheckResult::holds("growth-class", "counting curve has the expected growth type", ok));
    }

    let closed: Option<Vec<f64>> = m.ts.iter().map(|&t| closed_form_total(spec, t)).collect();
    if let Some(closed) = &closed {
        let worst = curve.values().iter().zip(closed).map(|(v, c)| ((v - c) / c).abs()).fold(0.0, f64::max);
        checks.push(CheckResult::at_most(
            "closed-form",
            "counting integral = explicit integral of |det H|",
            worst,
            CLOSED_FORM_TOL,
        ));
    }

    let mut tables = vec![csv_artifact(format!("{}.csv", m.prefix), |buf| curve.write_csv(buf, &header(m)))];
    let mut oracle_json = Value::Null;
    if let (ManifoldKind::FlatTorus { basis }, true) = (spec.kind(), m.oracle_samples > 0) {
        let oracle = torus_count_integral_oracle_curve(basis, &m.ts, m.oracle_samples, m.seed).ctx(
            "counting",
            "torus_count_integral_oracle",
            "task.oracle_samples",
        )?;
        let worst = curve
            .values()
            .iter()
            .zip(oracle.values())
            .map(|(v, o)| ((v - o) / v).abs())
            .fold(0.0, f64::max);
        checks.push(CheckResult::at_most(
            "oracle-equivalence",
            "counting integral = lattice count integral",
            worst,
            ORACLE_TOL,
        ));
        oracle_json = curve_points(&oracle);
        tables.push(csv_artifact(format!("{}_oracle.csv", m.prefix), |buf| oracle.write_csv(buf, &header(m))));
    }

    let results = json!({
        "curve": curve_points(&curve),
        "growth": growth,
        "growth_error": growth_error,
        "oracle": oracle_json,
    });
    Ok(TaskOutput { results, checks, tables })
}

fn nonnegative_constant(m: &ExperimentManifest, operation: &'static str) -> std::result::Result<f64, RunError> {
    let spec = spec_of(m);
    match spec.constant_curvature_value() {
        Some(c) if c >= 0.0 => Ok(c),
        _ => Err(Error::Unsupported(format!("{spec} has no closed-form Herglotz extension to the upper half-plane")))
            .ctx("herglotz", operation, "manifold.kind"),
    }
}

fn herglotz_verify(m: &ExperimentManifest) -> std::result::Result<TaskOutput, RunError> {
    let c = nonnegative_constant(m, "stieltjes_invert")?;
    let n = spec_of(m).dim();
    let g = HerglotzMatrix::closed_form(c, n).ctx("herglotz", "closed_form", "manifold.n")?.neg_inverse();
    let fd = stieltjes_invert(&g, m.interval, &m.tau_schedule, m.atom_threshold).ctx(
        "herglotz",
        "stieltjes_invert",
        "task.interval/task.tau",
    )?;
    let (a, b) = m.interval;
    let poles: Vec<f64> = g.poles_in(a, b).into_iter().filter(|p| *p > a && *p < b).collect();
    let location = poles
        .iter()
        .map(|p| fd.atoms.iter().map(|at| (at.t - p).abs()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let id = DMatrix::<f64>::identity(n - 1, n - 1);
    let mass = fd.atoms.iter().map(|at| max_abs(&(&at.mass - &id * PI)) / PI).fold(0.0, f64::max);
    let checks = vec![
        CheckResult::holds("atom-count", "atoms sit exactly at the real poles of G", fd.atoms.len() == poles.len()),
        CheckResult::at_most("atom-location", "atoms sit exactly at the real poles of G", location, 1e-4),
        CheckResult::at_most("atom-mass", "every atom has mass pi Id", mass, 0.02),
        CheckResult::at_most("linear-term", "A = 0", max_abs(&fd.a), 1e-3),
        CheckResult::holds("no-continuous-part", "no mass off the poles", !fd.continuous_part_flagged),
    ];
    Ok(TaskOutput { results: json!({ "poles": poles, "fatou": fd }), checks, tables: Vec::new() })
}

fn random_direction(spec: &ManifoldSpec, x: &DVector<f64>, rng: &mut ChaCha8Rng) -> Result<DVector<f64>> {
    let basis = spec.tangent_basis(x.as_slice())?;
    let coeffs: Vec<f64> = basis.iter().map(|_| rng.sample(StandardNormal)).collect();
    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    Ok(basis.iter().zip(&coeffs).fold(DVector::zeros(x.len()), |acc, (b, c)| acc + b * (c / norm)))
}

/// `count` points of `(lo, hi)` whose distance to `avoid` is at least `clearance`.
fn sample_off(
    rng: &mut ChaCha8Rng,
    lo: f64,
    hi: f64,
    count: usize,
    clearance: f64,
    avoid: impl Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..1000 * count {
        if out.len() == count {
            break;
        }
        let s = rng.random_range(lo..hi);
        if avoid(s) >= clearance {
            out.push(s);
        }
    }
    if out.len() < count {
        return Err(Error::input(format!("could not find {count} samples in ({lo}, {hi}) away from singular points")));
    }
    Ok(out)
}

fn random_psd(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    let rank = rng.random_range(0..=k);
    let x = DMatrix::from_fn(k, rank, |_, _| rng.sample::<f64, _>(StandardNormal));
    crate::linalg::symmetrize(&(&x * x.transpose()))
}

#[derive(Serialize)]
struct IdentitySample {
    sigma: f64,
    key1: f64,
    xi_identity: f64,
}

fn lemma_suite(m: &ExperimentManifest) -> std::result::Result<TaskOutput, RunError> {
    let spec = spec_of(m);
    let n = spec.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(m.seed);
    let constant = spec.constant_curvature_value();
    let mut checks = Vec::new();
    let mut results = serde_json::Map::new();

    let (js, tol) = match constant {
        Some(c) => {
            let t = m.ts.last().copied().unwrap_or(10.0);
            (JacobiSystem::closed_form(c, n, t, m.step).ctx("flow", "closed_form_jacobi", "task.t/task.step")?, CLOSED_IDENTITY_TOL)
        }
        None => {
            let t = m.ts.last().copied().unwrap_or(5.0);
            let x = spec.base_point();
            let theta = random_direction(spec, &x, &mut rng).ctx("manifolds", "tangent_basis", "manifold.kind")?;
            let traj = integrate_geodesic(spec, &x, &theta, t, m.step).ctx("flow", "integrate_geodesic", "task.t/task.step")?;
            let js = propagate_jacobi(spec, &traj, m.step).ctx("flow", "propagate_jacobi", "task.step")?;
            checks.push(CheckResult::at_most("wronskian", "the Wronskian of (Xi, H) is constant", js.wronskian_drift(), 1e-8));
            (js, NUMERIC_IDENTITY_TOL)
        }
    };

    let t_end = js.final_time();
    let singular = js.singular_set().clone();
    let sigmas = sample_off(&mut rng, 0.0, t_end, m.samples, SINGULAR_CLEARANCE, |s| singular.distance(s))
        .ctx("herglotz", "check_identity_chain", "task.samples/task.t")?;
    let mut identity = Vec::with_capacity(sigmas.len());
    let (mut key1, mut xi, mut consistent) = (0.0_f64, 0.0_f64, true);
    for &s in &sigmas {
        let chain = check_identity_chain(&js, s, tol).ctx("herglotz", "check_identity_chain", "task.samples")?;
        key1 = key1.max(chain.key1);
        xi = xi.max(chain.xi_identity);
        consistent &= chain.consistent;
        identity.push(IdentitySample { sigma: s, key1: chain.key1, xi_identity: chain.xi_identity });
    }
    checks.push(CheckResult::at_most("key-identity", "det(H^T H) det(G') = 1", key1, tol));
    checks.push(CheckResult::at_most("xi-identity", "Xi^T Xi f' = Id", xi, tol));
    checks.push(CheckResult::holds("identity-chain", "the two identities pass or fail together", consistent));
    results.insert("identities".into(), serde_json::to_value(identity).expect("serializes"));

    let (fh, nice_samples, derivative_tol) = match constant {
        Some(c) => (HerglotzMatrix::closed_form(c, n).ctx("herglotz", "closed_form", "manifold.n")?, vec![C64::i()], 1e-8),
        None => (HerglotzMatrix::real_axis(js.clone()), sigmas.iter().map(|&s| C64::new(s, 0.0)).collect(), NUMERIC_IDENTITY_TOL),
    };
    let nice = check_theorem_nice(&fh, &nice_samples).ctx("herglotz", "check_theorem_nice", "task.samples")?;
    checks.push(CheckResult::at_most("normalization-value", "f(0) = 0", nice.value_at_zero, 1e-10));
    checks.push(CheckResult::at_most("normalization-derivative", "f'(0) = Id", nice.derivative_defect_at_zero, derivative_tol));
    checks.push(CheckResult::at_most("symmetry", "f is symmetric", nice.max_symmetry_defect, 1e-10));
    results.insert("normalization".into(), serde_json::to_value(&nice).expect("serializes"));

    if let Some(c) = constant.filter(|c| *c >= 0.0) {
        let g = fh.neg_inverse();
        let (mut im_f, mut im_g) = (f64::INFINITY, f64::INFINITY);
        for _ in 0..POSITIVITY_SAMPLES {
            let z = C64::new(rng.random_range(-10.0..10.0), 10f64.powf(rng.random_range(-2.0..1.0)));
            im_f = im_f.min(min_sym_eigenvalue(&fh.evaluate(z).ctx("herglotz", "evaluate", "task.seed")?.im()));
            im_g = im_g.min(min_sym_eigenvalue(&g.evaluate(z).ctx("herglotz", "evaluate", "task.seed")?.im()));
        }
        checks.push(CheckResult::above("positivity-f", "Im f > 0 on the upper half-plane", im_f, 0.0));
        checks.push(CheckResult::above("positivity-g", "Im G > 0 on the upper half-plane", im_g, 0.0));

        let poles = g.poles_in(-1.0, 11.0);
        let pole_distance = |s: f64| poles.iter().map(|p| (s - p).abs()).fold(f64::INFINITY, f64::min);
        let b_sigmas = sample_off(&mut rng, 0.0, 10.0, B_SAMPLES, POLE_CLEARANCE, pole_distance)
            .ctx("herglotz", "b_decomposition_min_eigenvalue", "task.seed")?;
        let mut b_min = f64::INFINITY;
        for s in b_sigmas {
            b_min = b_min.min(b_decomposition_min_eigenvalue(&g, s).ctx("herglotz", "b_decomposition_min_eigenvalue", "task.seed")?);
        }
        checks.push(CheckResult::at_least("b-decomposition", "G' - Id / sigma^2 is positive semidefinite", b_min, -1e-10));

        let det_sigmas = sample_off(&mut rng, 0.0, 10.0, DET_SAMPLES, POLE_CLEARANCE, pole_distance)
            .ctx("herglotz", "det_growth_bound", "task.seed")?;
        let (mut excess, mut all_equal) = (f64::NEG_INFINITY, true);
        for s in det_sigmas {
            let r = det_growth_bound(c, n, s).ctx("herglotz", "det_growth_bound", "task.seed")?;
            excess = excess.max((r.lhs - r.rhs) / r.rhs.max(1.0));
            all_equal &= r.equality;
        }
        checks.push(CheckResult::at_most("determinant-bound", "1 / det G' <= sigma^(2n-2)", excess, 1e-10));
        if c == 0.0 {
            checks.push(CheckResult::holds("determinant-equality", "equality in the flat case", all_equal));
        }

        let j = adapted_complex_structure_at(&fh).ctx("herglotz", "adapted_complex_structure_at", "manifold.kind")?;
        let square = &j * &j + DMatrix::identity(j.nrows(), j.nrows());
        checks.push(CheckResult::at_most("complex-structure", "J^2 = -Id", max_abs(&square), 1e-8));
        results.insert("positivity".into(), json!({ "min_im_f": im_f, "min_im_g": im_g, "min_b": b_min }));
    }

    let mut worst = 0.0_f64;
    for i in 0..MINKOWSKI_PAIRS {
        let k = 1 + i % 6;
        let (a1, a2) = (random_psd(&mut rng, k), random_psd(&mut rng, k));
        let r = minkowski_det_lower_bound(&a1, &a2).ctx("herglotz", "minkowski_det_lower_bound", "task.seed")?;
        worst = worst.max(-r.margin / r.scale);
    }
    checks.push(CheckResult::at_most("minkowski", "det(A1 + A2) >= det A1 + det A2", worst, 1e-12));

    Ok(TaskOutput { results: Value::Object(results), checks, tables: Vec::new() })
}

fn gromov(m: &ExperimentManifest) -> std::result::Result<TaskOutput, RunError> {
    let opts = GromovOptions { scheme: m.scheme, order: m.order, step: m.step, seed: m.seed };
    let search = minimal_gromov_constant(m.space, m.k_max, &m.c_grid, &opts).ctx(
        "counting",
        "check_gromov_inequality",
        "task.space/task.c_grid",
    )?;
    let checks = vec![CheckResult::holds(
        "gromov-constant",
        "Betti sums bounded by the normalized counting integral at T = C k",
        search.minimal_constant.is_some(),
    )];
    let mut columns = vec!["k".to_string(), "betti_sum".to_string()];
    columns.extend(search.reports.iter().map(|r| format!("rhs_C={}", fmt_f64(r.constant))));
    let rows: Vec<Vec<f64>> = (0..m.k_max)
        .map(|i| {
            let mut row = vec![(i + 1) as f64, search.reports[0].rows[i].betti_sum as f64];
            row.extend(search.reports.iter().map(|r| r.rows[i].rhs));
            row
        })
        .collect();
    let table = csv_artifact(format!("{}.csv", m.prefix), |buf| write_csv(buf, &header(m), &columns, rows));
    Ok(TaskOutput { results: serde_json::to_value(&search).expect("serializes"), checks, tables: vec![table] })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(text: &str) -> std::result::Result<RunOutcome, RunError> {
        execute(&ExperimentManifest::parse(text).unwrap())
    }

    #[test]
    fn sphere_count_is_linear() {
        let out = run("[manifold]\nkind=sphere\nn=2\n[task]\ntask=count\nt_range=1,30,30\norder=8\nstep=1e-2\nexpected_growth=polynomial(1)\n").unwrap();
        assert_eq!(out.status, ExitStatus::Success, "{}", out.summary);
        let names: Vec<&str> = out.artifacts.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(names, ["count.csv", "count.json", "count_report.txt"]);
        let csv = String::from_utf8(out.artifacts[0].bytes.clone()).unwrap();
        assert!(csv.starts_with("# manifest_sha256="));
        assert!(csv.contains(&format!("# version={VERSION}")));
        let doc: Value = serde_json::from_slice(&out.artifacts[1].bytes).unwrap();
        assert_eq!(doc["results"]["growth"]["class"], "polynomial");
        assert_eq!(doc["results"]["growth"]["degree"], 1);
    }

    #[test]
    fn torus_oracle_passes() {
        let out = run("[manifold]\nkind=flat_torus\nn=2\n[task]\ntask=count\nt=1,2,5\norder=16\nstep=1e-2\noracle_samples=20000\n").unwrap();
        assert_eq!(out.status, ExitStatus::Success, "{}", out.summary);
        assert!(out.summary.contains("PASS oracle-equivalence"));
        assert!(out.summary.contains("PASS closed-form"));
    }

    #[test]
    fn herglotz_sphere() {
        let out = run("[manifold]\nkind=sphere\nn=3\n[task]\ntask=herglotz_verify\n").unwrap();
        assert_eq!(out.status, ExitStatus::Success, "{}", out.summary);
        let err = run("[manifold]\nkind=hyperbolic\nn=3\n[task]\ntask=herglotz_verify\n").unwrap_err();
        assert_eq!(err.status(), ExitStatus::Validation);
        assert!(err.to_string().contains("herglotz::stieltjes_invert"));
    }

    #[test]
    fn lemma_suite_sphere() {
        let out = run("[manifold]\nkind=sphere\nn=3\n[task]\ntask=lemma_suite\n").unwrap();
        assert_eq!(out.status, ExitStatus::Success, "{}", out.summary);
        assert!(out.report.checks.len() >= 12);
    }

    #[test]
    fn error_classes() {
        let err = run("[manifold]\nkind=sphere\nn=2\n[task]\ntask=count\nt=0.5,1\nstep=0.9\n").unwrap_err();
        assert_eq!(err.status(), ExitStatus::Numerical, "{err}");
        assert!(err.to_string().contains("counting::berger_bott_curve"));
        let err = ExperimentManifest::parse("[manifold]\nkind=flat_torus\nbasis=1 0; 2 0\n[task]\ntask=count\nt=1\n").unwrap_err();
        assert!(err.is_validation() && err.to_string().contains("[manifold]"), "{err}");
    }

    #[test]
    fn sine_integral_matches_quadrature() {
        let k = 1.3;
        let t = 7.7;
        let h = t / 200_000.0;
        let num: f64 = (0..200_000).map(|i| ((i as f64 + 0.5) * h * k).sin().abs() / k * h).sum();
        assert!((sine_integral(k, t) - num).abs() < 1e-8);
    }
}
