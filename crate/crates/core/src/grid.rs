//! Uniform periodic lattice, its spectral conjugate, and the sampled complex
//! envelope that the propagation and observables modules operate on.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Fraction of the grid on each side treated as the boundary band.
pub const BOUNDARY_FRACTION: f64 = 0.05;

/// Uniform lattice on `[-half_extent, +half_extent)` with periodic boundary.
///
/// Frequencies are angular spatial frequencies stored in standard DFT order:
/// non-negative indices first, then the negative ones, with the unpaired
/// Nyquist term `-pi/dx` at index `n_points / 2`.
#[derive(Clone, PartialEq)]
pub struct SimulationGrid {
    n_points: usize,
    half_extent: f64,
    dx: f64,
    positions: Vec<f64>,
    frequencies: Vec<f64>,
}

impl SimulationGrid {
    pub fn new(n_points: usize, half_extent: f64) -> Result<Self> {
        if n_points < 2 || !n_points.is_power_of_two() {
            return Err(Error::config(
                "grid.n_points",
                format!("must be a power of two >= 2, got {n_points}"),
            ));
        }
        if !(half_extent > 0.0 && half_extent.is_finite()) {
            return Err(Error::config(
                "grid.half_extent",
                format!("must be positive and finite, got {half_extent}"),
            ));
        }
        let dx = 2.0 * half_extent / n_points as f64;
        let positions = (0..n_points).map(|j| -half_extent + j as f64 * dx).collect();
        let dq = 2.0 * PI / (n_points as f64 * dx);
        let half = n_points / 2;
        let frequencies = (0..n_points)
            .map(|j| {
                let m = if j < half { j as i64 } else { j as i64 - n_points as i64 };
                m as f64 * dq
            })
            .collect();
        Ok(Self {
            n_points,
            half_extent,
            dx,
            positions,
            frequencies,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn half_extent(&self) -> f64 {
        self.half_extent
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Spectral spacing `2 pi / (n dx)`.
    pub fn dq(&self) -> f64 {
        2.0 * PI / (self.n_points as f64 * self.dx)
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Number of samples in each outer boundary band (at least one).
    pub fn boundary_band(&self) -> usize {
        ((self.n_points as f64 * BOUNDARY_FRACTION).floor() as usize).max(1)
    }
}

impl fmt::Debug for SimulationGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimulationGrid")
            .field("n_points", &self.n_points)
            .field("half_extent", &self.half_extent)
            .field("dx", &self.dx)
            .finish()
    }
}

/// Sampled complex envelope on a shared grid.
#[derive(Clone, Debug)]
pub struct ComplexField {
    grid: Arc<SimulationGrid>,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Arc<SimulationGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::Contract(format!(
                "field has {} samples but grid has {}",
                values.len(),
                grid.n_points()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<SimulationGrid>) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); grid.n_points()];
        Self { grid, values }
    }

    /// Samples `f(x_j)` at every grid position.
    pub fn from_fn(grid: Arc<SimulationGrid>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.positions().iter().map(|&x| f(x)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<SimulationGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn intensities(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(|v| v.norm_sqr())
    }

    /// Rescales to unit norm. A zero field is left untouched.
    pub fn normalize(&mut self) {
        let n = norm(self);
        if n > 0.0 {
            let inv = 1.0 / n;
            self.values.iter_mut().for_each(|v| *v *= inv);
        }
    }

    pub fn shares_grid(&self, other: &SimulationGrid) -> bool {
        *self.grid == *other
    }
}

/// `sqrt(sum |phi_j|^2 dx)`.
pub fn norm(field: &ComplexField) -> f64 {
    (field.intensities().sum::<f64>() * field.grid.dx()).sqrt()
}

/// Normalized Gaussian beam `(pi s^2)^(-1/4) exp(-(x-c)^2 / (2 s^2))`.
pub fn gaussian_input(grid: &Arc<SimulationGrid>, width: f64, center: f64) -> Result<ComplexField> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::config(
            "input_beam.sigma0",
            format!("must be positive, got {width}"),
        ));
    }
    let h = grid.half_extent();
    if !(center >= -h && center < h) {
        return Err(Error::config(
            "input_beam.center",
            format!("{center} lies outside the grid [-{h}, {h})"),
        ));
    }
    let resolved = grid
        .positions()
        .iter()
        .filter(|&&x| (x - center).abs() <= 3.0 * width)
        .count();
    if resolved < 8 {
        return Err(Error::Resolution(format!(
            "beam width {width} covers only {resolved} samples within +-3 sigma (need 8)"
        )));
    }
    let amp = (PI * width * width).powf(-0.25);
    let mut field = ComplexField::from_fn(grid.clone(), |x| {
        let u = (x - center) / width;
        Complex64::new(amp * (-0.5 * u * u).exp(), 0.0)
    });
    field.normalize();
    Ok(field)
}

/// Forward/inverse DFT pair: forward unnormalized, inverse carrying `1/n`.
pub struct SpectralTransform {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    n: usize,
}

impl SpectralTransform {
    pub fn new(n_points: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n_points);
        let inverse = planner.plan_fft_inverse(n_points);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            n: n_points,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.forward.process_with_scratch(data, &mut self.scratch);
    }

    /// Inverse transform including the `1/n` factor.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.inverse_unnormalized(data);
        let inv = 1.0 / self.n as f64;
        data.iter_mut().for_each(|v| *v *= inv);
    }

    /// Inverse transform without the `1/n` factor, for callers that fold the
    /// normalization into a spectral multiplier.
    pub fn inverse_unnormalized(&mut self, data: &mut [Complex64]) {
        self.inverse.process_with_scratch(data, &mut self.scratch);
    }
}
