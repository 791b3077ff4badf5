//! Named, reproducible experiments: registry, configuration, runner and
//! output manifest.

mod cache;
mod config;
mod expr;
mod output;
mod runs;

pub use cache::{cache_dir, engine, shell_counts, CACHE_ENV};
pub use config::{ExperimentConfig, PartialConfig};
pub use expr::parse_real;
pub use output::{
    num, sha256_hex, Manifest, ManifestEntry, VerdictFile, SCHEMA_VERSION, SOJOURN_COLUMNS, STAIRCASE_COLUMNS,
    TRACE_COLUMNS, WEYL_SUM_COLUMNS,
};

use crate::asymptotics_lab::VerdictRow;
use crate::error::{LabError, Result};
use serde::Serialize;
use std::path::PathBuf;
use std::time::Instant;

/// One registry entry.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExperimentInfo {
    pub name: &'static str,
    pub description: &'static str,
    /// The statement the experiment checks.
    pub anchor: &'static str,
    /// Declared wall-clock budget on one commodity core.
    pub budget_seconds: u64,
    pub outputs: &'static [&'static str],
}

const REGISTRY: &[ExperimentInfo] = &[
    ExperimentInfo {
        name: "torus-weyl",
        description: "sharp ladder sums on a torus against the lattice-count main term",
        anchor: "lattice-count identity and the 8 eps (1 - c^2)^(-1/2) lambda asymptote",
        budget_seconds: 60,
        outputs: &["weyl_sum.csv"],
    },
    ExperimentInfo {
        name: "torus-fuzzy-components",
        description: "wide versus narrow smooth windows at a rational slope on T^2",
        anchor: "main coefficient proportional to the sum of psi_hat over maximal components",
        budget_seconds: 300,
        outputs: &["weyl_sum.csv", "weyl_sum_reference.csv"],
    },
    ExperimentInfo {
        name: "sphere-jump-scaling",
        description: "eigenspace jumps on great circles of S^2 and S^3 and their growth exponents",
        anchor: "one admissible degree per even N; jumps of order lambda^(n-2)",
        budget_seconds: 300,
        outputs: &["jumps.csv"],
    },
    ExperimentInfo {
        name: "zonal-meridian",
        description: "Legendre p-product coefficients of the zonal harmonic on a meridian",
        anchor: "zonal coefficients p_j p_k with p_j = 4^(-j) binom(2j, j); restricted norm log N + gamma",
        budget_seconds: 120,
        outputs: &["zonal.csv"],
    },
    ExperimentInfo {
        name: "sojourn-detect",
        description: "tapered trace S(t) and its detected singular support against the sojourn catalog",
        anchor: "singular support of the trace equals the set of sojourn times",
        budget_seconds: 300,
        outputs: &["trace.csv", "sojourn.csv"],
    },
    ExperimentInfo {
        name: "epsilon-staircase",
        description: "eps -> J_eps at one level, with gap analysis at rational slopes",
        anchor: "gaps m - (p/q) N are at least 1/q",
        budget_seconds: 60,
        outputs: &["staircase.csv", "staircase_torus.csv"],
    },
    ExperimentInfo {
        name: "tauberian-smoothing",
        description: "sharp minus mollified ladder sum as a function of the mollifier scale T",
        anchor: "Tauberian remainder gamma(c, eps) / T lambda^(n-1)",
        budget_seconds: 120,
        outputs: &["tauberian.csv"],
    },
    ExperimentInfo {
        name: "forbidden-decay",
        description: "ladders with slope above one and weights beyond mu > lambda",
        anchor: "coefficients in the forbidden region mu > lambda decay rapidly (vanish on models)",
        budget_seconds: 60,
        outputs: &["weyl_sum.csv", "weyl_sum_sphere.csv"],
    },
    ExperimentInfo {
        name: "biangle-solve",
        description: "multistart bi-angle solver with component dimension probes",
        anchor: "bi-angle components are clean of dimension n + d - 2 when maximal",
        budget_seconds: 120,
        outputs: &["components.json", "sojourn.csv"],
    },
    ExperimentInfo {
        name: "clairaut-return",
        description: "return times to a latitude circle on surfaces of revolution",
        anchor: "Clairaut integral fixes the return time along a latitude circle",
        budget_seconds: 120,
        outputs: &["clairaut.csv"],
    },
];

/// Registered experiments, in stable order.
pub fn list_experiments() -> &'static [ExperimentInfo] {
    REGISTRY
}

pub fn find_experiment(name: &str) -> Option<&'static ExperimentInfo> {
    REGISTRY.iter().find(|e| e.name == name)
}

/// What a run produced.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
    pub verdicts: Vec<VerdictRow>,
}

impl ExperimentResult {
    pub fn failed(&self) -> usize {
        self.verdicts.iter().filter(|v| !v.pass).count()
    }

    pub fn passed(&self) -> usize {
        self.verdicts.len() - self.failed()
    }
}

/// Process exit code for an error: 2 for usage problems, 3 for numerical ones.
pub fn exit_code(err: &LabError) -> i32 {
    match err {
        LabError::InvalidParameter(_)
        | LabError::Unsupported(_)
        | LabError::UnknownExperiment(_)
        | LabError::Serialization(_) => 2,
        _ => 3,
    }
}

/// Run one experiment and write its outputs, `verdicts.json`, `config.toml`
/// and `manifest.json` into `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let info = find_experiment(&cfg.experiment).ok_or_else(|| LabError::UnknownExperiment(cfg.experiment.clone()))?;
    let threads = if cfg.deterministic { 1 } else { cfg.jobs };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::Numeric(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let mut outputs = pool.install(|| runs::dispatch(info.name, cfg))?;

    let passed = outputs.verdicts.iter().filter(|v| v.pass).count();
    let verdicts = VerdictFile {
        schema_version: SCHEMA_VERSION,
        experiment: info.name.to_string(),
        passed,
        failed: outputs.verdicts.len() - passed,
        rows: outputs.verdicts.clone(),
    };
    outputs.add_json("verdicts.json", &verdicts)?;
    outputs.add("config.toml", cfg.to_toml()?.into_bytes());

    std::fs::create_dir_all(&cfg.out)?;
    let mut entries = Vec::new();
    let mut files = Vec::new();
    for (name, bytes) in &outputs.files {
        let path = cfg.out.join(name);
        std::fs::write(&path, bytes)?;
        entries.push(ManifestEntry { path: name.clone(), bytes: bytes.len() as u64, sha256: sha256_hex(bytes) });
        files.push(path);
    }
    let wall = start.elapsed().as_secs_f64();
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        experiment: info.name.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_seconds: wall,
        files: entries,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| LabError::Serialization(e.to_string()))?;
    bytes.push(b'\n');
    let manifest_path = cfg.out.join("manifest.json");
    std::fs::write(&manifest_path, bytes)?;
    files.push(manifest_path);

    Ok(ExperimentResult {
        experiment: info.name.to_string(),
        out_dir: cfg.out.clone(),
        files,
        wall_clock_seconds: wall,
        verdicts: outputs.verdicts,
    })
}
