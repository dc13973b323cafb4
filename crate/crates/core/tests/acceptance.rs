//! End-to-end acceptance checks. Prints one `PASS`/`FAIL` line per criterion
//! and exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use kicked_beam::disorder::{autocorrelation, draw_spike_positions, mean_potential, spike_height, PotentialField};
use kicked_beam::experiment::{
    realization_potential, realization_seed, run_ensemble, run_realization, ExperimentConfig, Parallelism,
    MANIFEST_FILE, THREADS_ENV,
};
use kicked_beam::grid::{gaussian_input, ComplexField, SimulationGrid};
use kicked_beam::observables::{fit_tails, intensity_profile, IntensitySample, ObservableRecord, TailFit, TailFitConfig};
use kicked_beam::propagation::{drift, evolve, free_gaussian_variance, EvolutionParams, KickSign};
use num_complex::Complex64;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn criterion_1() -> Outcome {
    let config = ExperimentConfig::reference();
    let started = Instant::now();
    let run = run_realization(&config, 0).expect("reference realization");
    let seconds = started.elapsed().as_secs_f64();
    let worst = run.series.iter().map(|r| (r.norm - 1.0).abs()).fold(0.0, f64::max);
    let reached_end = run.series.last().map(|r| r.step) == Some(10_000);
    outcome(
        worst < 1e-10 && seconds < 10.0 && reached_end,
        format!(
            "max |norm-1| = {worst:.3e} over {} records; runtime {seconds:.2} s",
            run.series.len()
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut config = ExperimentConfig::reference();
    config.grid.n_points = 16_384;
    config.grid.half_extent = 600.0;
    config.disable_potential = true;
    config.evolution.kick_count = 2_000;
    config.evolution.record_stride = 10;
    let run = run_realization(&config, 0).expect("free run");

    let sigma0 = config.input_beam.sigma0;
    let k = config.evolution.wavenumber;
    let mut worst = 0.0f64;
    let mut checked = 0;
    for r in run.series.iter().filter(|r| r.z <= 20.0 + 1e-9 && r.boundary_leak < 1e-8) {
        let exact = free_gaussian_variance(sigma0, k, r.z);
        let var = r.sqrt_variance * r.sqrt_variance;
        worst = worst.max((var - exact).abs() / exact);
        checked += 1;
    }

    let grid = Arc::new(SimulationGrid::new(512, 20.0).unwrap());
    let field = ComplexField::from_fn(grid, |x| {
        Complex64::new((-(x - 1.0) * (x - 1.0)).exp(), (0.3 * x).sin() * (-x * x / 4.0).exp())
    });
    let (a, b, kw) = (0.37, 1.9, 1.3);
    let two_step = drift(&drift(&field, a, kw), b, kw);
    let one_step = drift(&field, a + b, kw);
    let composition = two_step
        .values()
        .iter()
        .zip(one_step.values())
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max);

    outcome(
        checked > 100 && worst < 1e-4 && composition < 1e-12,
        format!("max rel variance error {worst:.3e} over {checked} records (z <= 20); drift composition {composition:.3e}"),
    )
}

fn e_fold_lag(c: &[(f64, f64)]) -> Option<f64> {
    let c0 = c[0].1;
    let target = (-1.0f64).exp();
    c.windows(2).find_map(|w| {
        let (r0, r1) = (w[0].1 / c0, w[1].1 / c0);
        (r0 >= target && r1 < target).then(|| w[0].0 + (r0 - target) / (r0 - r1) * (w[1].0 - w[0].0))
    })
}

fn criterion_3() -> Outcome {
    let config = ExperimentConfig::reference();
    let grid = Arc::new(config.grid().unwrap());
    let extent = config.speckle.spike_extent;
    let expected_mean = config.speckle.n_spikes as f64 * config.speckle.spike_strength / (2.0 * extent);

    let first = realization_potential(&config, &grid, 0).unwrap();
    let mean = mean_potential(&first, extent);
    let mean_ok = (mean - expected_mean).abs() <= 0.02 * expected_mean;

    let seeds = 128;
    let per_seed: Vec<(Vec<(f64, f64)>, f64)> = (0..seeds)
        .into_par_iter()
        .map(|i| {
            let pot = realization_potential(&config, &grid, i).unwrap();
            let c = autocorrelation(&pot, 0.5);
            let vs = spike_height(&pot, extent);
            let gap = (c[0].1 - vs * vs).abs();
            (c, gap)
        })
        .collect();
    let worst_identity = per_seed.iter().map(|(_, d)| *d).fold(0.0, f64::max);
    let mut averaged = per_seed[0].0.clone();
    for (c, _) in &per_seed[1..] {
        for (acc, (_, v)) in averaged.iter_mut().zip(c) {
            acc.1 += v;
        }
    }
    let expected_lag = config.speckle.spike_width * 2f64.sqrt();
    let lag = e_fold_lag(&averaged);
    let lag_ok = lag.is_some_and(|d| (d - expected_lag).abs() <= 0.1 * expected_lag);

    outcome(
        mean_ok && lag_ok && worst_identity < 1e-10,
        format!(
            "<V> = {mean:.5} (expected {expected_mean}); e-fold lag over {seeds} seeds = {} (expected {expected_lag:.5}); max |C(0)-V_S^2| = {worst_identity:.3e}",
            lag.map_or("none".into(), |d| format!("{d:.5}"))
        ),
    )
}

/// Snapshots of one disordered realization at z = 50 and z = 100.
struct Localized {
    sigma_mid: f64,
    sigma_end: f64,
    profile_mid: Vec<IntensitySample>,
    profile_end: Vec<IntensitySample>,
}

fn run_localized(config: &ExperimentConfig, index: usize) -> Localized {
    let grid = Arc::new(config.grid().unwrap());
    let params = config.evolution().unwrap();
    let mid_step = params.kick_count / 2;
    let pot = realization_potential(config, &grid, index).unwrap();
    let input = gaussian_input(&grid, config.input_beam.sigma0, config.input_beam.center).unwrap();
    let mut sigma_mid = f64::NAN;
    let mut profile_mid = Vec::new();
    let evolution = evolve(&input, &pot, &params, |step, z, field| {
        if step == mid_step {
            sigma_mid = ObservableRecord::from_field(step, z, field).unwrap().sqrt_variance;
            profile_mid = intensity_profile(field);
        }
    })
    .unwrap();
    let end = ObservableRecord::from_field(params.kick_count, params.z_at(params.kick_count), &evolution.field).unwrap();
    Localized {
        sigma_mid,
        sigma_end: end.sqrt_variance,
        profile_mid,
        profile_end: intensity_profile(&evolution.field),
    }
}

fn criterion_4(runs: &[Localized]) -> Outcome {
    let changes: Vec<f64> = runs.iter().map(|r| (r.sigma_end - r.sigma_mid).abs() / r.sigma_mid).collect();
    let localized = median(changes.clone());

    let mut control = ExperimentConfig::reference();
    control.grid.n_points = 16_384;
    control.grid.half_extent = 600.0;
    control.disable_potential = true;
    let free = run_localized(&control, 0);
    let free_change = (free.sigma_end - free.sigma_mid) / free.sigma_mid;
    let free_ratio = free.sigma_end / free.sigma_mid;

    outcome(
        localized < 0.2 && free_change > 10.0 * localized,
        format!(
            "median relative change of sqrt_variance over z in [50,100] = {localized:.4} (per seed: {}); control relative growth {free_change:.4} = {:.1}x the localized change (control sqrt_variance ratio {free_ratio:.4})",
            changes.iter().map(|c| format!("{c:.3}")).collect::<Vec<_>>().join(" "),
            free_change / localized
        ),
    )
}

fn both_exponential(fits: &Option<(TailFit, TailFit)>) -> bool {
    fits.as_ref().is_some_and(|(l, r)| l.is_exponential() && r.is_exponential())
}

fn xi_agrees(mid: &Option<(TailFit, TailFit)>, end: &Option<(TailFit, TailFit)>) -> bool {
    let (Some(mid), Some(end)) = (mid, end) else {
        return false;
    };
    [(&mid.0, &end.0), (&mid.1, &end.1)].iter().all(|(a, b)| {
        match (a.localization_length(), b.localization_length()) {
            (Some(xa), Some(xb)) if xa > 0.0 && xb > 0.0 => (xb - xa).abs() <= 0.3 * xa,
            _ => false,
        }
    })
}

fn criterion_5(runs: &[Localized]) -> Outcome {
    let cfg = TailFitConfig::default();
    let smoothed = TailFitConfig::smoothed();
    let config = ExperimentConfig::reference();
    let grid = Arc::new(config.grid().unwrap());
    let input = gaussian_input(&grid, config.input_beam.sigma0, config.input_beam.center).unwrap();
    let input_fit = fit_tails(&intensity_profile(&input), &cfg).ok();
    let gaussian_rejected = !both_exponential(&input_fit)
        && input_fit.as_ref().is_none_or(|(l, r)| !l.is_exponential() && !r.is_exponential());

    let mut exponential = 0;
    let mut exponential_smoothed = 0;
    let mut stable = 0;
    let mut rows = Vec::new();
    for run in runs {
        let end = fit_tails(&run.profile_end, &cfg).ok();
        let mid = fit_tails(&run.profile_mid, &cfg).ok();
        exponential += both_exponential(&end) as usize;
        exponential_smoothed += both_exponential(&fit_tails(&run.profile_end, &smoothed).ok()) as usize;
        stable += xi_agrees(&mid, &end) as usize;
        rows.push(match &end {
            Some((l, r)) => format!(
                "[rms {:.2}/{:.2} curv {:.2}/{:.2}]",
                l.rms_residual, r.rms_residual, l.curvature_index, r.curvature_index
            ),
            None => "[no fit]".into(),
        });
    }
    let n = runs.len();
    outcome(
        exponential >= 8 && gaussian_rejected && stable >= 8,
        format!(
            "both tails exponential in {exponential}/{n} seeds (smoothed fit: {exponential_smoothed}/{n}); input Gaussian rejected: {gaussian_rejected}; xi stable within 30% in {stable}/{n}; fits {}",
            rows.join(" ")
        ),
    )
}

fn run_cli(out: &Path, threads: &str) -> BTreeMap<String, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_kicked-beam"))
        .args(["run", "--seed", "7", "--realizations", "4", "--out"])
        .arg(out)
        .env(THREADS_ENV, threads)
        .status()
        .expect("spawn kicked-beam");
    assert!(status.success(), "kicked-beam run failed: {status}");
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join(MANIFEST_FILE)).unwrap()).unwrap();
    serde_json::from_value(manifest["files"].clone()).unwrap()
}

fn criterion_6() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let first = run_cli(&dir.path().join("a"), "4");
    let second = run_cli(&dir.path().join("b"), "4");
    let serial_cli = run_cli(&dir.path().join("c"), "1");

    let mut config = ExperimentConfig::reference();
    config.base_seed = 7;
    config.n_realizations = 4;
    config.outputs.directory = dir.path().join("d");
    let serial = run_ensemble(&config, Parallelism::Serial).unwrap().files;
    config.outputs.directory = dir.path().join("e");
    let parallel = run_ensemble(&config, Parallelism::Threads(3)).unwrap().files;

    let repeat_ok = !first.is_empty() && first == second;
    let thread_ok = first == serial_cli && serial == parallel && serial == first;
    outcome(
        repeat_ok && thread_ok,
        format!(
            "{} file digests; repeated run identical: {repeat_ok}; serial vs parallel identical: {thread_ok}",
            first.len()
        ),
    )
}

/// Direct O(n^2) evaluation of the kick-drift map, independent of the FFT path.
fn brute_force(
    psi0: &[Complex64],
    n: usize,
    half_extent: f64,
    spikes: &[f64],
    strength: f64,
    width: f64,
    params: &EvolutionParams,
) -> Vec<Complex64> {
    let dx = 2.0 * half_extent / n as f64;
    let potential: Vec<f64> = (0..n)
        .map(|j| {
            let x = -half_extent + j as f64 * dx;
            spikes
                .iter()
                .map(|p| strength * (-((x - p) / width).powi(2)).exp() / (width * PI.sqrt()))
                .sum()
        })
        .collect();
    let sign = match params.kick_sign {
        KickSign::Schrodinger => 1.0,
        KickSign::Flipped => -1.0,
    };
    let amplitude = (1.0 - params.loss_per_kick).sqrt();
    let mut psi = psi0.to_vec();
    for _ in 0..params.kick_count {
        for (p, v) in psi.iter_mut().zip(&potential) {
            *p *= Complex64::from_polar(amplitude, -sign * v * params.dt);
        }
        let spectrum: Vec<Complex64> = (0..n)
            .map(|m| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, p) in psi.iter().enumerate() {
                    acc += p * Complex64::from_polar(1.0, -2.0 * PI * (m * j) as f64 / n as f64);
                }
                let index = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
                let q = index * 2.0 * PI / (n as f64 * dx);
                acc * Complex64::from_polar(1.0, -params.drift_distance * q * q / (2.0 * params.wavenumber))
            })
            .collect();
        psi = (0..n)
            .map(|j| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (m, c) in spectrum.iter().enumerate() {
                    acc += c * Complex64::from_polar(1.0, 2.0 * PI * (m * j) as f64 / n as f64);
                }
                acc / n as f64
            })
            .collect();
    }
    psi
}

fn criterion_7() -> Outcome {
    let (n, half_extent, strength, width) = (64, 8.0, 1.7, 0.6);
    let grid = Arc::new(SimulationGrid::new(n, half_extent).unwrap());
    let spikes = draw_spike_positions(5, 7.0, realization_seed(11, 0));
    let pot = PotentialField::from_spikes(grid.clone(), spikes.clone(), strength, width);
    let input = ComplexField::from_fn(grid.clone(), |x| {
        Complex64::from_polar((-(x - 0.5) * (x - 0.5) / 3.0).exp(), 0.4 * x)
    });
    let mut worst = 0.0f64;
    for (kick_sign, loss) in [(KickSign::Schrodinger, 0.0), (KickSign::Flipped, 0.02)] {
        let params = EvolutionParams {
            wavenumber: 1.3,
            drift_distance: 0.45,
            kick_count: 3,
            dt: 0.3,
            kick_sign,
            loss_per_kick: loss,
            record_stride: 1,
        };
        let fast = evolve(&input, &pot, &params, |_, _, _| {}).unwrap().field;
        let slow = brute_force(input.values(), n, half_extent, &spikes, strength, width, &params);
        let diff = fast
            .values()
            .iter()
            .zip(&slow)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        worst = worst.max(diff);
    }
    outcome(worst < 1e-10, format!("max pointwise difference {worst:.3e} (64 points, 5 spikes, 3 steps)"))
}

fn main() {
    let started = Instant::now();
    let config = ExperimentConfig::reference();
    let mut results = vec![
        ("1 unitarity and runtime", criterion_1()),
        ("2 free propagation oracle", criterion_2()),
        ("3 disorder statistics", criterion_3()),
        ("7 brute-force equivalence", criterion_7()),
    ];
    // Criterion 1 is timed on its own; the ensemble below may use every core.
    let runs: Vec<Localized> = (0..10).into_par_iter().map(|i| run_localized(&config, i)).collect();
    results.push(("4 localization vs ballistic control", criterion_4(&runs)));
    results.push(("5 exponential tails", criterion_5(&runs)));
    results.push(("6 determinism", criterion_6()));
    results.sort_by_key(|(name, _)| name.to_string());

    let mut failures = 0;
    for (name, o) in &results {
        println!("criterion {name}: {} | {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failures += (!o.pass) as usize;
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1} s",
        results.len() - failures,
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
