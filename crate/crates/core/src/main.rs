use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use grauert::cli::{run_manifest, ExitStatus, RawManifest, Task};

#[derive(Parser)]
#[command(name = "grauert", version, about = "Geodesic counting and Herglotz verification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Counting integral curve over a list of T values.
    Count(Common),
    /// Counting curve plus polynomial/exponential classification.
    Growth(Common),
    /// Stieltjes inversion of -f^-1 for a constant curvature closed form.
    Herglotz(Common),
    /// Identity and inequality suite.
    Verify(Common),
    /// Search for a Gromov constant on a grid.
    Gromov(Common),
}

impl Command {
    fn split(self) -> (Task, Common) {
        match self {
            Command::Count(c) => (Task::Count, c),
            Command::Growth(c) => (Task::Growth, c),
            Command::Herglotz(c) => (Task::HerglotzVerify, c),
            Command::Verify(c) => (Task::LemmaSuite, c),
            Command::Gromov(c) => (Task::Gromov, c),
        }
    }
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,

    #[arg(long)]
    kind: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    basis: Option<String>,
    #[arg(long)]
    warp: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    warp_param: Option<String>,
    #[arg(long)]
    entire_tube: Option<String>,

    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t_range: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    order: Option<String>,
    #[arg(long)]
    step: Option<String>,
    #[arg(long)]
    oracle_samples: Option<String>,
    #[arg(long)]
    expected_growth: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    interval: Option<String>,
    #[arg(long)]
    atom_threshold: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    k_max: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    c_grid: Option<String>,
    #[arg(long)]
    space: Option<String>,
    #[arg(long)]
    prefix: Option<String>,
}

impl Common {
    fn overrides(&self) -> Vec<(&'static str, &'static str, String)> {
        let seed = self.seed.map(|s| s.to_string());
        let out = self.out.as_ref().map(|p| p.display().to_string());
        [
            ("manifold", "kind", &self.kind),
            ("manifold", "c", &self.c),
            ("manifold", "n", &self.n),
            ("manifold", "basis", &self.basis),
            ("manifold", "warp", &self.warp),
            ("manifold", "warp_param", &self.warp_param),
            ("manifold", "entire_tube", &self.entire_tube),
            ("task", "t", &self.t),
            ("task", "t_range", &self.t_range),
            ("task", "scheme", &self.scheme),
            ("task", "order", &self.order),
            ("task", "step", &self.step),
            ("task", "seed", &seed),
            ("task", "oracle_samples", &self.oracle_samples),
            ("task", "expected_growth", &self.expected_growth),
            ("task", "tau", &self.tau),
            ("task", "interval", &self.interval),
            ("task", "atom_threshold", &self.atom_threshold),
            ("task", "samples", &self.samples),
            ("task", "k_max", &self.k_max),
            ("task", "c_grid", &self.c_grid),
            ("task", "space", &self.space),
            ("output", "dir", &out),
            ("output", "prefix", &self.prefix),
        ]
        .into_iter()
        .filter_map(|(s, k, v)| v.clone().map(|v| (s, k, v)))
        .collect()
    }
}

fn main() -> ExitCode {
    let (task, common) = Cli::parse().command.split();
    let raw = (|| {
        let mut raw = match &common.manifest {
            Some(path) => RawManifest::load(path)?,
            None => RawManifest::default(),
        };
        raw.set("task", "task", task.name())?;
        for (section, key, value) in common.overrides() {
            raw.set(section, key, &value)?;
        }
        raw.validate()
    })();
    let manifest = match raw {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: cli::validate_manifest: {e}");
            return ExitCode::from(ExitStatus::Validation.code() as u8);
        }
    };
    match run_manifest(&manifest) {
        Ok((outcome, paths)) => {
            if !common.quiet {
                print!("{}", outcome.summary);
                for p in paths {
                    println!("wrote {}", p.display());
                }
            }
            ExitCode::from(outcome.status.code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.status().code() as u8)
        }
    }
}
