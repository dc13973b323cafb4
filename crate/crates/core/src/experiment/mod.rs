//! Seeded single runs and ensembles, with deterministic file output.

mod config;
pub mod output;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

pub use config::{
    load_config, EvolutionSection, ExperimentConfig, GridSection, InputBeamSection, OutputsSection,
    SpeckleSection,
};

use crate::disorder::{generate_potential, PotentialField, RNG_ALGORITHM};
use crate::error::{Error, Result, Warning};
use crate::grid::{gaussian_input, SimulationGrid};
use crate::observables::{intensity_profile, IntensitySample, ObservableRecord};
use crate::propagation::{evolve, free_gaussian_variance};

/// Environment variable holding the worker-pool size for ensembles.
pub const THREADS_ENV: &str = "KICKED_BEAM_THREADS";

/// Marker present in the output directory while a run is in progress or
/// after it aborted.
pub const INCOMPLETE_MARKER: &str = "RUN_INCOMPLETE";

pub const MANIFEST_FILE: &str = "manifest.json";

/// Identifier of [`realization_seed`], recorded in manifests.
pub const SEED_MIXER: &str = "splitmix64: seeds[i] = output i+1 of SplitMix64 started at base_seed";

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed for realization `index`: the `(index + 1)`-th SplitMix64 output from
/// state `base_seed`.
pub fn realization_seed(base_seed: u64, index: u64) -> u64 {
    let mut z = base_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Everything produced by one disorder realization.
#[derive(Clone, Debug)]
pub struct RealizationOutput {
    pub index: usize,
    pub seed: u64,
    pub series: Vec<ObservableRecord>,
    pub profile: Vec<IntensitySample>,
    pub potential: PotentialField,
    pub warnings: Vec<Warning>,
    pub wall_clock_seconds: f64,
}

/// Builds the potential for `index` (or the zero potential for control runs).
pub fn realization_potential(
    config: &ExperimentConfig,
    grid: &Arc<SimulationGrid>,
    index: usize,
) -> Result<PotentialField> {
    if config.disable_potential {
        return Ok(PotentialField::zero(grid.clone()));
    }
    let seed = realization_seed(config.base_seed, index as u64);
    generate_potential(&config.speckle(seed), grid)
}

pub fn run_realization(config: &ExperimentConfig, index: usize) -> Result<RealizationOutput> {
    let started = Instant::now();
    config.validate()?;
    let grid = Arc::new(config.grid()?);
    let seed = realization_seed(config.base_seed, index as u64);
    let params = config.evolution()?;

    let mut warnings = Vec::new();
    if !config.disable_potential {
        warnings.extend(config.speckle(seed).resolution_warning(&grid));
    }
    let potential = realization_potential(config, &grid, index)?;
    let input = gaussian_input(&grid, config.input_beam.sigma0, config.input_beam.center)?;

    let mut series = Vec::new();
    let mut observe_error = None;
    let evolution = evolve(&input, &potential, &params, |step, z, field| {
        match ObservableRecord::from_field(step, z, field) {
            Ok(r) => series.push(r),
            Err(e) => {
                observe_error.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = observe_error {
        return Err(e);
    }
    warnings.extend(evolution.warnings);

    Ok(RealizationOutput {
        index,
        seed,
        series,
        profile: intensity_profile(&evolution.field),
        potential,
        warnings,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}

/// How an ensemble distributes realizations over threads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parallelism {
    Serial,
    /// Worker pool of the given size; 0 lets rayon pick.
    Threads(usize),
}

impl Parallelism {
    /// Reads [`THREADS_ENV`]; unset or empty means auto-detect.
    pub fn from_env() -> Result<Self> {
        match std::env::var(THREADS_ENV) {
            Ok(v) if !v.trim().is_empty() => v
                .trim()
                .parse()
                .map(Parallelism::Threads)
                .map_err(|_| Error::config(THREADS_ENV, format!("expected a thread count, got `{v}`"))),
            _ => Ok(Parallelism::Threads(0)),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SoftwareInfo {
    pub name: String,
    pub version: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RealizationEntry {
    pub index: usize,
    pub seed: u64,
    pub wall_clock_seconds: f64,
    pub warnings: Vec<Warning>,
    pub error: Option<String>,
}

/// Record of an ensemble run, written as `manifest.json`.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub software: SoftwareInfo,
    pub config: ExperimentConfig,
    pub rng_algorithm: String,
    pub seed_mixer: String,
    pub seeds: Vec<u64>,
    pub realizations: Vec<RealizationEntry>,
    /// SHA-256 (hex) of every data file written, keyed by file name.
    pub files: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn failures(&self) -> impl Iterator<Item = &RealizationEntry> {
        self.realizations.iter().filter(|r| r.error.is_some())
    }
}

/// Mean of each observable across realizations, record by record.
pub fn ensemble_mean_series(runs: &[&RealizationOutput]) -> Vec<ObservableRecord> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    let n = runs.len() as f64;
    let len = runs.iter().map(|r| r.series.len()).min().unwrap_or(0);
    (0..len)
        .map(|k| {
            let mean = |f: fn(&ObservableRecord) -> f64| runs.iter().map(|r| f(&r.series[k])).sum::<f64>() / n;
            ObservableRecord {
                step: first.series[k].step,
                z: first.series[k].z,
                norm: mean(|r| r.norm),
                centroid: mean(|r| r.centroid),
                sqrt_variance: mean(|r| r.sqrt_variance),
                participation_ratio: mean(|r| r.participation_ratio),
                peak_intensity: mean(|r| r.peak_intensity),
                boundary_leak: mean(|r| r.boundary_leak),
            }
        })
        .collect()
}

/// Sample-wise mean of `log10 |phi|^2` across realizations.
pub fn ensemble_log_profile(runs: &[&RealizationOutput]) -> (Vec<f64>, Vec<f64>) {
    let Some(first) = runs.first() else {
        return (Vec::new(), Vec::new());
    };
    let n = runs.len() as f64;
    let x = first.profile.iter().map(|s| s.x).collect();
    let mean = (0..first.profile.len())
        .map(|j| runs.iter().map(|r| r.profile[j].log10_intensity).sum::<f64>() / n)
        .collect();
    (x, mean)
}

/// Runs all realizations, writes per-realization and ensemble artifacts plus
/// `manifest.json` into `config.outputs.directory`.
///
/// Aggregation happens after every worker finishes, in index order, so file
/// contents do not depend on scheduling. A realization that fails is recorded
/// in the manifest and excluded from ensemble means.
pub fn run_ensemble(config: &ExperimentConfig, parallelism: Parallelism) -> Result<RunManifest> {
    run_ensemble_collect(config, parallelism).map(|(m, _)| m)
}

/// [`run_ensemble`], also returning the in-memory realization results.
pub fn run_ensemble_collect(
    config: &ExperimentConfig,
    parallelism: Parallelism,
) -> Result<(RunManifest, Vec<Result<RealizationOutput>>)> {
    config.validate()?;
    let dir = config.outputs.directory.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let marker = dir.join(INCOMPLETE_MARKER);
    fs::write(&marker, b"run in progress or aborted\n").map_err(|e| Error::io(&marker, e))?;

    let results = execute(config, parallelism)?;
    let manifest = write_outputs(config, &dir, &results)?;

    fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    Ok((manifest, results))
}

fn execute(config: &ExperimentConfig, parallelism: Parallelism) -> Result<Vec<Result<RealizationOutput>>> {
    let n = config.n_realizations;
    Ok(match parallelism {
        Parallelism::Serial => (0..n).map(|i| run_realization(config, i)).collect(),
        Parallelism::Threads(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Contract(format!("cannot build worker pool: {e}")))?;
            pool.install(|| (0..n).into_par_iter().map(|i| run_realization(config, i)).collect())
        }
    })
}

fn write_outputs(
    config: &ExperimentConfig,
    dir: &Path,
    results: &[Result<RealizationOutput>],
) -> Result<RunManifest> {
    let outputs = &config.outputs;
    let mut files = BTreeMap::new();
    let mut entries = Vec::new();
    let mut successes = Vec::new();

    let mut write = |name: String, bytes: Vec<u8>| -> Result<()> {
        let digest = output::write_artifact(&dir.join(&name), &bytes)?;
        files.insert(name, digest);
        Ok(())
    };

    for (index, result) in results.iter().enumerate() {
        let seed = realization_seed(config.base_seed, index as u64);
        match result {
            Ok(run) => {
                if outputs.observables {
                    write(format!("observables_{index}.csv"), output::observables_csv(&run.series))?;
                }
                if outputs.profiles {
                    write(format!("profile_{index}.csv"), output::profile_csv(&run.profile))?;
                }
                if outputs.potentials {
                    write(format!("potential_{index}.csv"), output::potential_csv(&run.potential))?;
                }
                entries.push(RealizationEntry {
                    index,
                    seed,
                    wall_clock_seconds: run.wall_clock_seconds,
                    warnings: run.warnings.clone(),
                    error: None,
                });
                successes.push(run);
            }
            Err(e) => entries.push(RealizationEntry {
                index,
                seed,
                wall_clock_seconds: 0.0,
                warnings: Vec::new(),
                error: Some(e.to_string()),
            }),
        }
    }

    if outputs.ensemble && !successes.is_empty() {
        write(
            "observables_mean.csv".into(),
            output::observables_csv(&ensemble_mean_series(&successes)),
        )?;
        let (x, mean) = ensemble_log_profile(&successes);
        write("profile_logmean.csv".into(), output::logmean_csv(&x, &mean))?;
    }

    let manifest = RunManifest {
        software: SoftwareInfo {
            name: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
        },
        config: config.clone(),
        rng_algorithm: RNG_ALGORITHM.into(),
        seed_mixer: SEED_MIXER.into(),
        seeds: (0..config.n_realizations)
            .map(|i| realization_seed(config.base_seed, i as u64))
            .collect(),
        realizations: entries,
        files,
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Free-run comparison rows `(z, sqrt_variance, analytic, relative_error)`.
pub fn free_spreading_table(config: &ExperimentConfig, series: &[ObservableRecord]) -> Vec<Vec<f64>> {
    series
        .iter()
        .map(|r| {
            let exact = free_gaussian_variance(config.input_beam.sigma0, config.evolution.wavenumber, r.z).sqrt();
            vec![r.z, r.sqrt_variance, exact, (r.sqrt_variance - exact).abs() / exact]
        })
        .collect()
}

pub const FREE_TABLE_FILE: &str = "free_vs_analytic.csv";
pub const FREE_TABLE_HEADER: [&str; 4] = ["z", "sqrt_variance", "analytic_sqrt_variance", "relative_error"];

/// Control run without potential; also writes [`FREE_TABLE_FILE`] comparing
/// realization 0 against the analytic spreading law.
pub fn run_free(config: &ExperimentConfig, parallelism: Parallelism) -> Result<(RunManifest, PathBuf)> {
    let config = ExperimentConfig {
        disable_potential: true,
        ..config.clone()
    };
    let (manifest, results) = run_ensemble_collect(&config, parallelism)?;
    let series = match results.first() {
        Some(Ok(run)) => run.series.as_slice(),
        _ => &[],
    };
    let path = config.outputs.directory.join(FREE_TABLE_FILE);
    output::write_artifact(&path, &output::table_csv(&FREE_TABLE_HEADER, &free_spreading_table(&config, series)))?;
    Ok((manifest, path))
}
