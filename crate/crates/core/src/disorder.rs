//! Static phase-print potential built from randomly placed Gaussian spikes,
//! plus the window statistics used to characterize it.

use std::f64::consts::PI;
use std::sync::Arc;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result, Warning};
use crate::grid::SimulationGrid;

/// Identifier of the spike-position generator, recorded in run manifests.
///
/// ChaCha8 seeded through `seed_from_u64`; each position uses the top 53 bits
/// of one `next_u64` draw as a uniform variate in `[0, 1)`.
pub const RNG_ALGORITHM: &str = "chacha8-seed_from_u64/u53-uniform";

#[derive(Clone, Debug, PartialEq)]
pub struct SpeckleConfig {
    /// Number of spikes S.
    pub n_spikes: usize,
    /// Spike strength V0.
    pub spike_strength: f64,
    /// Spike width sigma.
    pub spike_width: f64,
    /// Spikes are drawn uniformly on `[-spike_extent, spike_extent]`.
    pub spike_extent: f64,
    pub seed: u64,
}

impl SpeckleConfig {
    /// Parameters of the reference configuration: S=300, L=30, V0=1, sigma=0.1.
    pub fn reference(seed: u64) -> Self {
        Self {
            n_spikes: 300,
            spike_strength: 1.0,
            spike_width: 0.1,
            spike_extent: 30.0,
            seed,
        }
    }

    pub fn validate(&self, grid: &SimulationGrid) -> Result<()> {
        if !(self.spike_width > 0.0 && self.spike_width.is_finite()) {
            return Err(Error::config(
                "speckle.spike_width",
                format!("must be positive, got {}", self.spike_width),
            ));
        }
        if !(self.spike_extent > 0.0 && self.spike_extent.is_finite()) {
            return Err(Error::config(
                "speckle.spike_extent",
                format!("must be positive, got {}", self.spike_extent),
            ));
        }
        if self.spike_extent > grid.half_extent() {
            return Err(Error::config(
                "speckle.spike_extent",
                format!(
                    "{} exceeds the grid half extent {}",
                    self.spike_extent,
                    grid.half_extent()
                ),
            ));
        }
        if !self.spike_strength.is_finite() {
            return Err(Error::config("speckle.spike_strength", "must be finite"));
        }
        Ok(())
    }

    /// Warns when spikes are narrower than two grid spacings.
    pub fn resolution_warning(&self, grid: &SimulationGrid) -> Option<Warning> {
        (self.spike_width < 2.0 * grid.dx()).then(|| Warning::UnderResolvedSpikes {
            spike_width: self.spike_width,
            dx: grid.dx(),
        })
    }

    /// Mean spike spacing `D = 2L/S`.
    pub fn avg_spacing(&self) -> f64 {
        2.0 * self.spike_extent / self.n_spikes as f64
    }
}

/// Realized potential samples `V(x_j)`.
#[derive(Clone, Debug)]
pub struct PotentialField {
    grid: Arc<SimulationGrid>,
    values: Vec<f64>,
    spike_positions: Vec<f64>,
}

impl PotentialField {
    /// Sums spikes of the given strength and width at fixed positions.
    pub fn from_spikes(
        grid: Arc<SimulationGrid>,
        spike_positions: Vec<f64>,
        strength: f64,
        width: f64,
    ) -> Self {
        let values = grid
            .positions()
            .iter()
            .map(|&x| {
                strength
                    * spike_positions
                        .iter()
                        .map(|&p| spike_profile(x - p, width))
                        .sum::<f64>()
            })
            .collect();
        Self {
            grid,
            values,
            spike_positions,
        }
    }

    /// Wraps arbitrary samples, mostly for tests and control runs.
    pub fn from_values(grid: Arc<SimulationGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::Contract(format!(
                "potential has {} samples but grid has {}",
                values.len(),
                grid.n_points()
            )));
        }
        Ok(Self {
            grid,
            values,
            spike_positions: Vec::new(),
        })
    }

    pub fn zero(grid: Arc<SimulationGrid>) -> Self {
        let values = vec![0.0; grid.n_points()];
        Self {
            grid,
            values,
            spike_positions: Vec::new(),
        }
    }

    pub fn grid(&self) -> &Arc<SimulationGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Spike centers in draw order.
    pub fn spike_positions(&self) -> &[f64] {
        &self.spike_positions
    }
}

/// Characterization of one potential realization over its window.
#[derive(Clone, Debug, PartialEq)]
pub struct DisorderStats {
    pub mean_v: f64,
    pub avg_spacing: f64,
    pub spike_height: f64,
    pub autocorrelation: Vec<(f64, f64)>,
}

impl DisorderStats {
    pub fn compute(pot: &PotentialField, config: &SpeckleConfig, max_lag: f64) -> Self {
        let window = config.spike_extent;
        Self {
            mean_v: mean_potential(pot, window),
            avg_spacing: config.avg_spacing(),
            spike_height: spike_height(pot, window),
            autocorrelation: autocorrelation(pot, max_lag),
        }
    }
}

/// Unit-mass Gaussian spike `(sigma sqrt(pi))^-1 exp(-x^2/sigma^2)`.
pub fn spike_profile(x: f64, sigma: f64) -> f64 {
    let u = x / sigma;
    (-u * u).exp() / (sigma * PI.sqrt())
}

/// Draws `n` positions i.i.d. uniform on `[-extent, extent]`.
pub fn draw_spike_positions(n: usize, extent: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            -extent + 2.0 * extent * u
        })
        .collect()
}

pub fn generate_potential(config: &SpeckleConfig, grid: &Arc<SimulationGrid>) -> Result<PotentialField> {
    config.validate(grid)?;
    let positions = draw_spike_positions(config.n_spikes, config.spike_extent, config.seed);
    Ok(PotentialField::from_spikes(
        grid.clone(),
        positions,
        config.spike_strength,
        config.spike_width,
    ))
}

/// Average of `f(V)` over `[-window, window]`.
///
/// A window that covers the whole periodic grid is integrated with the
/// rectangle rule over one period (exact trapezoid for periodic data);
/// a narrower window uses the trapezoid rule over the enclosed samples.
fn window_average(pot: &PotentialField, window: f64, f: impl Fn(f64) -> f64) -> f64 {
    let grid = pot.grid();
    let dx = grid.dx();
    if window >= grid.half_extent() {
        let sum: f64 = pot.values.iter().map(|&v| f(v)).sum();
        return sum / grid.n_points() as f64;
    }
    let tol = 1e-9 * dx;
    let inside: Vec<(f64, f64)> = grid
        .positions()
        .iter()
        .zip(&pot.values)
        .filter(|(&x, _)| x >= -window - tol && x <= window + tol)
        .map(|(&x, &v)| (x, f(v)))
        .collect();
    match inside.len() {
        0 => 0.0,
        1 => inside[0].1,
        _ => {
            let integral: f64 = inside.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * dx).sum();
            let span = inside[inside.len() - 1].0 - inside[0].0;
            integral / span
        }
    }
}

/// Window average `int V dx / 2L` over `[-window, window]`.
pub fn mean_potential(pot: &PotentialField, window: f64) -> f64 {
    window_average(pot, window, |v| v)
}

/// Root-mean-square fluctuation of V about its window mean.
pub fn spike_height(pot: &PotentialField, window: f64) -> f64 {
    let mean = mean_potential(pot, window);
    window_average(pot, window, |v| (v - mean) * (v - mean)).sqrt()
}

/// `C(d) = <V(x) V(x+d)> - <V>^2` at lags `0, dx, 2dx, ...` up to `max_lag`.
///
/// Each lag averages over the overlap region of the grid (no periodic
/// wrapping); the subtracted term is the product of the two overlap-region
/// means, which collapses to the plain variance at lag 0.
pub fn autocorrelation(pot: &PotentialField, max_lag: f64) -> Vec<(f64, f64)> {
    let n = pot.values.len();
    let dx = pot.grid().dx();
    let max_m = ((max_lag / dx + 1e-9).floor().max(0.0) as usize).min(n - 1);
    (0..=max_m)
        .map(|m| {
            let count = (n - m) as f64;
            let a = &pot.values[..n - m];
            let b = &pot.values[m..];
            let mean_a = a.iter().sum::<f64>() / count;
            let mean_b = b.iter().sum::<f64>() / count;
            let cov = a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - mean_a) * (y - mean_b))
                .sum::<f64>()
                / count;
            (m as f64 * dx, cov)
        })
        .collect()
}
