use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;
use nalgebra::DMatrix;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::counting::{GrowthClass, LoopSpace};
use crate::error::{Error, Result};
use crate::herglotz::{DEFAULT_ATOM_THRESHOLD, DEFAULT_TAU_SCHEDULE};
use crate::manifolds::{ManifoldSpec, QuadratureScheme, Warp};

const MANIFOLD_KEYS: &[&str] = &["kind", "c", "n", "basis", "warp", "warp_param", "entire_tube"];
const TASK_KEYS: &[&str] = &[
    "task",
    "t",
    "t_range",
    "scheme",
    "order",
    "step",
    "seed",
    "oracle_samples",
    "expected_growth",
    "tau",
    "interval",
    "atom_threshold",
    "samples",
    "k_max",
    "c_grid",
    "space",
];
const OUTPUT_KEYS: &[&str] = &["dir", "prefix"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Count,
    Growth,
    HerglotzVerify,
    LemmaSuite,
    Gromov,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Count => "count",
            Task::Growth => "growth",
            Task::HerglotzVerify => "herglotz_verify",
            Task::LemmaSuite => "lemma_suite",
            Task::Gromov => "gromov",
        }
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "count" => Task::Count,
            "growth" => Task::Growth,
            "herglotz_verify" | "herglotz" => Task::HerglotzVerify,
            "lemma_suite" | "verify" => Task::LemmaSuite,
            "gromov" => Task::Gromov,
            other => return Err(Error::Configuration(format!("[task] task: unknown task `{other}`"))),
        })
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Key-value pairs of a manifest, by section, before validation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawManifest {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl RawManifest {
    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Configuration(format!("manifest: {e}")))?;
        let mut raw = RawManifest::default();
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if let Some((key, _)) = props.iter().next() {
                    return Err(Error::Configuration(format!("manifest: key `{key}` outside any section")));
                }
                continue;
            };
            for (key, value) in props.iter() {
                if props.get_all(key).count() > 1 {
                    return Err(Error::Configuration(format!("[{section}] {key}: given more than once")));
                }
                raw.set(section, key, value)?;
            }
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Configuration(format!("manifest {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Insert or override one key.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        let known = match section {
            "manifold" => MANIFOLD_KEYS,
            "task" => TASK_KEYS,
            "output" => OUTPUT_KEYS,
            other => return Err(Error::Configuration(format!("manifest: unknown section [{other}]"))),
        };
        if !known.contains(&key) {
            return Err(Error::Configuration(format!("[{section}] {key}: unknown key")));
        }
        self.sections.entry(section.to_string()).or_default().insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    /// Sorted `[section]` / `key = value` text of every section except `[output]`.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (section, props) in self.sections.iter().filter(|(s, _)| s.as_str() != "output") {
            out.push_str(&format!("[{section}]\n"));
            for (k, v) in props {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }

    pub fn sha256(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<ExperimentManifest> {
        ExperimentManifest::from_raw(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentManifest {
    pub manifold: Option<ManifoldSpec>,
    pub task: Task,
    pub ts: Vec<f64>,
    pub scheme: QuadratureScheme,
    pub order: usize,
    pub step: f64,
    pub seed: u64,
    pub oracle_samples: usize,
    pub expected_growth: Option<GrowthClass>,
    pub tau_schedule: Vec<f64>,
    pub interval: (f64, f64),
    pub atom_threshold: f64,
    pub samples: usize,
    pub k_max: usize,
    pub c_grid: Vec<f64>,
    pub space: LoopSpace,
    pub out_dir: PathBuf,
    pub prefix: String,
    pub sha256: String,
}

fn bad(section: &str, key: &str, msg: impl fmt::Display) -> Error {
    Error::Configuration(format!("[{section}] {key}: {msg}"))
}

fn number<T: FromStr>(raw: &RawManifest, section: &str, key: &str) -> Result<Option<T>> {
    raw.get(section, key)
        .map(|v| v.parse::<T>().map_err(|_| bad(section, key, format!("cannot parse `{v}`"))))
        .transpose()
}

fn list(raw: &RawManifest, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
    let Some(v) = raw.get(section, key) else { return Ok(None) };
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| bad(section, key, format!("cannot parse `{s}`"))))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn positive(section: &str, key: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(bad(section, key, format!("must be positive, got {x}")))
    }
}

fn positive_int(section: &str, key: &str, x: usize) -> Result<usize> {
    if x == 0 {
        return Err(bad(section, key, "must be positive"));
    }
    Ok(x)
}

fn increasing(section: &str, key: &str, xs: &[f64]) -> Result<()> {
    for &x in xs {
        positive(section, key, x)?;
    }
    if let Some(w) = xs.windows(2).find(|w| w[0] >= w[1]) {
        return Err(bad(section, key, format!("must be strictly increasing ({} then {})", w[0], w[1])));
    }
    Ok(())
}

/// `polynomial(d)` or `exponential`.
fn parse_growth(v: &str) -> Result<GrowthClass> {
    if v == "exponential" {
        return Ok(GrowthClass::Exponential { rate: f64::NAN });
    }
    v.strip_prefix("polynomial(")
        .and_then(|r| r.strip_suffix(')'))
        .and_then(|d| d.trim().parse().ok())
        .map(|degree| GrowthClass::Polynomial { degree })
        .ok_or_else(|| bad("task", "expected_growth", format!("expected `polynomial(d)` or `exponential`, got `{v}`")))
}

fn parse_basis(v: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = v
        .split(';')
        .map(|row| {
            row.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|_| bad("manifold", "basis", format!("cannot parse `{s}`"))))
                .collect()
        })
        .collect::<Result<_>>()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(bad("manifold", "basis", "rows must form a square matrix"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[j][i]))
}

fn parse_manifold(raw: &RawManifest) -> Result<Option<ManifoldSpec>> {
    let Some(kind) = raw.get("manifold", "kind") else {
        return Ok(None);
    };
    let n: Option<usize> = number(raw, "manifold", "n")?;
    let need_n = || n.ok_or_else(|| bad("manifold", "n", "required"));
    let c: Option<f64> = number(raw, "manifold", "c")?;
    let wrap = |e: Error| match e {
        Error::Input(m) => bad("manifold", kind, m),
        other => other,
    };
    let spec = match kind {
        "constant_curvature" => {
            ManifoldSpec::constant_curvature(c.ok_or_else(|| bad("manifold", "c", "required"))?, need_n()?)
        }
        "sphere" => {
            let c = c.unwrap_or(1.0);
            if c <= 0.0 {
                return Err(bad("manifold", "c", "a sphere needs c > 0"));
            }
            ManifoldSpec::constant_curvature(c, need_n()?)
        }
        "hyperbolic" => {
            let c = c.unwrap_or(-1.0);
            if c >= 0.0 {
                return Err(bad("manifold", "c", "hyperbolic space needs c < 0"));
            }
            ManifoldSpec::constant_curvature(c, need_n()?)
        }
        "euclidean" => ManifoldSpec::constant_curvature(0.0, need_n()?),
        "flat_torus" => match raw.get("manifold", "basis") {
            Some(b) => {
                let basis = parse_basis(b)?;
                if n.is_some_and(|n| n != basis.nrows()) {
                    return Err(bad("manifold", "n", "does not match the basis size"));
                }
                ManifoldSpec::flat_torus(basis)
            }
            None => ManifoldSpec::flat_torus(DMatrix::identity(need_n()?, need_n()?)),
        },
        "warped_product" => {
            let id = raw.get("manifold", "warp").ok_or_else(|| bad("manifold", "warp", "required"))?;
            let warp = Warp::from_id(id, number(raw, "manifold", "warp_param")?)?;
            ManifoldSpec::warped_product(warp, need_n()?)
        }
        other => return Err(Error::OutOfCatalog(format!("manifold kind `{other}`"))),
    }
    .map_err(wrap)?;
    match number::<bool>(raw, "manifold", "entire_tube")? {
        Some(flag) => spec.with_entire_tube(flag).map(Some).map_err(|e| match e {
            Error::Input(m) => bad("manifold", "entire_tube", m),
            other => other,
        }),
        None => Ok(Some(spec)),
    }
}

impl ExperimentManifest {
    fn from_raw(raw: &RawManifest) -> Result<Self> {
        let task: Task = raw.get("task", "task").ok_or_else(|| bad("task", "task", "required"))?.parse()?;
        let manifold = parse_manifold(raw)?;
        if manifold.is_none() && task != Task::Gromov {
            return Err(bad("manifold", "kind", format!("required for task {task}")));
        }

        let ts = match (list(raw, "task", "t")?, list(raw, "task", "t_range")?) {
            (Some(_), Some(_)) => return Err(bad("task", "t", "give either t or t_range, not both")),
            (Some(ts), None) => ts,
            (None, Some(r)) => {
                let [a, b, count] = r[..] else {
                    return Err(bad("task", "t_range", "expected `start, stop, count`"));
                };
                positive("task", "t_range", a)?;
                if !(b > a) || count < 2.0 || count.fract() != 0.0 {
                    return Err(bad("task", "t_range", "need start < stop and an integer count >= 2"));
                }
                let m = count as usize;
                (0..m).map(|i| a + (b - a) * i as f64 / (m - 1) as f64).collect()
            }
            (None, None) => Vec::new(),
        };
        increasing("task", "t", &ts)?;
        if ts.is_empty() && matches!(task, Task::Count | Task::Growth) {
            return Err(bad("task", "t", format!("required for task {task}")));
        }

        let dim = manifold.as_ref().map(ManifoldSpec::dim).unwrap_or(2);
        let scheme = match raw.get("task", "scheme") {
            Some(s) => s.parse::<QuadratureScheme>().map_err(|_| bad("task", "scheme", format!("unknown scheme `{s}`")))?,
            None if dim <= 4 => QuadratureScheme::ProductGauss,
            None => QuadratureScheme::MonteCarlo,
        };
        let (default_order, default_step) = match task {
            Task::Gromov => (8, 1e-2),
            _ => (32, crate::flow::DEFAULT_STEP),
        };
        let order = positive_int("task", "order", number(raw, "task", "order")?.unwrap_or(default_order))?;
        let step = positive("task", "step", number(raw, "task", "step")?.unwrap_or(default_step))?;
        let seed = number(raw, "task", "seed")?.unwrap_or(0);
        let oracle_samples = number(raw, "task", "oracle_samples")?.unwrap_or(0);
        let expected_growth = raw.get("task", "expected_growth").map(parse_growth).transpose()?;

        let tau_schedule = list(raw, "task", "tau")?.unwrap_or_else(|| DEFAULT_TAU_SCHEDULE.to_vec());
        for &tau in &tau_schedule {
            positive("task", "tau", tau)?;
        }
        if tau_schedule.len() < 2 || tau_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return Err(bad("task", "tau", "need at least two strictly decreasing values"));
        }
        let interval = match list(raw, "task", "interval")? {
            Some(v) => match v[..] {
                [a, b] if a < b => (a, b),
                _ => return Err(bad("task", "interval", "expected `a, b` with a < b")),
            },
            None => (-1.0, 7.0),
        };
        let atom_threshold =
            positive("task", "atom_threshold", number(raw, "task", "atom_threshold")?.unwrap_or(DEFAULT_ATOM_THRESHOLD))?;
        let samples = positive_int("task", "samples", number(raw, "task", "samples")?.unwrap_or(20))?;
        let k_max = positive_int("task", "k_max", number(raw, "task", "k_max")?.unwrap_or(50))?;
        let c_grid = list(raw, "task", "c_grid")?.unwrap_or_else(|| vec![0.5, 1.0, 2.0, 5.0, 10.0]);
        if c_grid.is_empty() {
            return Err(bad("task", "c_grid", "empty"));
        }
        increasing("task", "c_grid", &c_grid)?;
        let space = match raw.get("task", "space") {
            Some(s) => s.parse::<LoopSpace>().map_err(|e| match e {
                Error::Input(m) => bad("task", "space", m),
                other => other,
            })?,
            None => LoopSpace::Sphere(2),
        };

        let out_dir = PathBuf::from(raw.get("output", "dir").unwrap_or("."));
        let prefix = raw.get("output", "prefix").unwrap_or(task.name()).to_string();
        if prefix.is_empty() || prefix.contains(['/', '\\']) {
            return Err(bad("output", "prefix", "must be a plain file name"));
        }
        Ok(Self {
            manifold,
            task,
            ts,
            scheme,
            order,
            step,
            seed,
            oracle_samples,
            expected_growth,
            tau_schedule,
            interval,
            atom_threshold,
            samples,
            k_max,
            c_grid,
            space,
            out_dir,
            prefix,
            sha256: raw.sha256(),
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        RawManifest::parse(text)?.validate()
    }
}
