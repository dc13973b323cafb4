//! Localization diagnostics computed from field snapshots.
//!
//! Every observable is intensity-normalized, so multiplying a field by a
//! nonzero complex constant leaves all of them unchanged. Integrals are plain
//! Riemann sums on the uniform grid.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{norm, ComplexField};

/// Floor applied before taking logarithms of intensities.
pub const LOG_FLOOR: f64 = 1e-300;

/// Per-record scalars written to `observables_r.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObservableRecord {
    pub step: usize,
    pub z: f64,
    pub norm: f64,
    pub centroid: f64,
    pub sqrt_variance: f64,
    pub participation_ratio: f64,
    pub peak_intensity: f64,
    pub boundary_leak: f64,
}

impl ObservableRecord {
    pub fn from_field(step: usize, z: f64, field: &ComplexField) -> Result<Self> {
        let (centroid, sqrt_variance) = moments(field)?;
        Ok(Self {
            step,
            z,
            norm: norm(field),
            centroid,
            sqrt_variance,
            participation_ratio: participation_ratio(field)?,
            peak_intensity: peak_intensity(field),
            boundary_leak: boundary_leak(field),
        })
    }
}

/// Centroid `<x>` and spread `sqrt(<x^2> - <x>^2)` of `|phi|^2`.
pub fn moments(field: &ComplexField) -> Result<(f64, f64)> {
    let x = field.grid().positions();
    let (mut m0, mut m1) = (0.0, 0.0);
    for (xi, i) in x.iter().zip(field.intensities()) {
        m0 += i;
        m1 += xi * i;
    }
    if !(m0 > 0.0) {
        return Err(Error::UndefinedMoments);
    }
    let centroid = m1 / m0;
    // Central second moment avoids cancellation for off-center packets.
    let var = x
        .iter()
        .zip(field.intensities())
        .map(|(xi, i)| (xi - centroid) * (xi - centroid) * i)
        .sum::<f64>()
        / m0;
    Ok((centroid, var.max(0.0).sqrt()))
}

/// `(sum |phi|^2 dx)^2 / (sum |phi|^4 dx)`, an effective support width.
pub fn participation_ratio(field: &ComplexField) -> Result<f64> {
    let dx = field.grid().dx();
    let (mut s2, mut s4) = (0.0, 0.0);
    for i in field.intensities() {
        s2 += i;
        s4 += i * i;
    }
    if !(s4 > 0.0) {
        return Err(Error::UndefinedMoments);
    }
    Ok(s2 * s2 * dx / s4)
}

pub fn peak_intensity(field: &ComplexField) -> f64 {
    field.intensities().fold(0.0, f64::max)
}

/// Largest intensity in the outer boundary bands relative to the peak.
pub fn boundary_leak(field: &ComplexField) -> f64 {
    let peak = peak_intensity(field);
    if peak <= 0.0 {
        return 0.0;
    }
    let band = field.grid().boundary_band();
    let v = field.values();
    let n = v.len();
    v[..band]
        .iter()
        .chain(&v[n - band..])
        .map(|c| c.norm_sqr())
        .fold(0.0, f64::max)
        / peak
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntensitySample {
    pub x: f64,
    pub intensity: f64,
    pub log10_intensity: f64,
    /// Intensity was below [`LOG_FLOOR`] and the logarithm was clamped.
    pub floored: bool,
}

impl IntensitySample {
    pub fn new(x: f64, intensity: f64) -> Self {
        let floored = !(intensity >= LOG_FLOOR);
        Self {
            x,
            intensity,
            log10_intensity: intensity.max(LOG_FLOOR).log10(),
            floored,
        }
    }
}

pub fn intensity_profile(field: &ComplexField) -> Vec<IntensitySample> {
    field
        .grid()
        .positions()
        .iter()
        .zip(field.intensities())
        .map(|(&x, i)| IntensitySample::new(x, i))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailClass {
    Exponential,
    NonExponential,
}

/// Fit window and classification thresholds for [`fit_tails`].
#[derive(Clone, Debug, PartialEq)]
pub struct TailFitConfig {
    /// Lower bound of `intensity / peak` for samples in the fit window.
    pub rel_lo: f64,
    /// Upper bound of `intensity / peak`.
    pub rel_hi: f64,
    /// Fraction of the grid at each edge excluded from the fit.
    pub edge_fraction: f64,
    pub min_samples: usize,
    /// Largest rms residual of the linear fit, in natural-log units.
    pub max_rms_residual: f64,
    pub max_curvature_index: f64,
    /// Width in samples of the centered moving average applied to
    /// `ln |phi|^2` before fitting; 1 fits the raw profile.
    pub smoothing_window: usize,
}

impl Default for TailFitConfig {
    fn default() -> Self {
        Self {
            rel_lo: 1e-10,
            rel_hi: 1e-3,
            edge_fraction: 0.05,
            min_samples: 16,
            max_rms_residual: 0.8,
            max_curvature_index: 0.3,
            smoothing_window: 1,
        }
    }
}

impl TailFitConfig {
    /// Default window with an 11-sample moving average of the log profile.
    pub fn smoothed() -> Self {
        Self {
            smoothing_window: 11,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailFit {
    pub side: Side,
    /// `d ln|phi|^2 / d|x - centroid|` from the linear fit.
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    /// Relative change of the local log-slope across the fit window, from a
    /// quadratic fit: `2 |c| W / |b|` with `ln I = a + b s + c s^2`, `s`
    /// centered on the window and `W` its width.
    pub curvature_index: f64,
    pub n_samples: usize,
    pub classification: TailClass,
}

impl TailFit {
    /// `xi = -2 / slope`, defined for decaying tails.
    pub fn localization_length(&self) -> Option<f64> {
        (self.slope < 0.0).then(|| -2.0 / self.slope)
    }

    pub fn is_exponential(&self) -> bool {
        self.classification == TailClass::Exponential
    }
}

/// Centered moving average with the window truncated at the ends.
fn moving_average(y: &[f64], window: usize) -> Vec<f64> {
    if window <= 1 {
        return y.to_vec();
    }
    let half = window / 2;
    let mut prefix = Vec::with_capacity(y.len() + 1);
    prefix.push(0.0);
    for v in y {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..y.len())
        .map(|j| {
            let lo = j.saturating_sub(half);
            let hi = (j + half + 1).min(y.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Least-squares line; returns `(slope, intercept, rms_residual)`.
fn fit_line(u: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = u.len() as f64;
    let um = u.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let (mut suu, mut suy) = (0.0, 0.0);
    for (a, b) in u.iter().zip(y) {
        suu += (a - um) * (a - um);
        suy += (a - um) * (b - ym);
    }
    let slope = suy / suu;
    let intercept = ym - slope * um;
    let ss: f64 = u
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    (slope, intercept, (ss / n).sqrt())
}

/// Least-squares `a + b s + c s^2` with `s = u - mean(u)`; returns `(b, c, width)`.
fn fit_quadratic(u: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = u.len() as f64;
    let um = u.iter().sum::<f64>() / n;
    let (lo, hi) = u
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let width = hi - lo;
    // Scale s to O(1) for conditioning of the normal equations.
    let scale = if width > 0.0 { width } else { 1.0 };
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for (a, b) in u.iter().zip(y) {
        let s = (a - um) / scale;
        let basis = [1.0, s, s * s];
        for r in 0..3 {
            rhs[r] += basis[r] * b;
            for c in 0..3 {
                m[r][c] += basis[r] * basis[c];
            }
        }
    }
    let coef = solve3(m, rhs);
    (coef[1] / scale, coef[2] / (scale * scale), width)
}

/// Gaussian elimination with partial pivoting on a 3x3 system.
fn solve3(mut m: [[f64; 3]; 3], mut rhs: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let acc: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (rhs[row] - acc) / m[row][row];
    }
    x
}

/// Fits `ln |phi|^2` against `|x - centroid|` on each side of the centroid.
///
/// Samples enter the fit when their (optionally smoothed) intensity relative
/// to the raw peak lies in `[rel_lo, rel_hi]` and they are outside the
/// excluded edge bands. A tail is classified exponential when it decays and
/// both the rms residual and the curvature index are under their thresholds.
pub fn fit_tails(profile: &[IntensitySample], config: &TailFitConfig) -> Result<(TailFit, TailFit)> {
    let total: f64 = profile.iter().map(|s| s.intensity).sum();
    let peak = profile.iter().map(|s| s.intensity).fold(0.0, f64::max);
    if !(total > 0.0) {
        return Err(Error::UndefinedMoments);
    }
    let centroid = profile.iter().map(|s| s.x * s.intensity).sum::<f64>() / total;
    let raw: Vec<f64> = profile.iter().map(|s| s.intensity.max(LOG_FLOOR).ln()).collect();
    let logs = moving_average(&raw, config.smoothing_window);
    let ln_peak = peak.ln();
    let (ln_lo, ln_hi) = (config.rel_lo.ln(), config.rel_hi.ln());
    let n = profile.len();
    let edge = (n as f64 * config.edge_fraction).floor() as usize;

    let fit_side = |side: Side| -> Result<TailFit> {
        let mut u = Vec::new();
        let mut y = Vec::new();
        for j in edge..n.saturating_sub(edge) {
            let x = profile[j].x;
            let on_side = match side {
                Side::Left => x < centroid,
                Side::Right => x > centroid,
            };
            let rel = logs[j] - ln_peak;
            if on_side && rel >= ln_lo && rel <= ln_hi {
                u.push((x - centroid).abs());
                y.push(logs[j]);
            }
        }
        if u.len() < config.min_samples.max(3) {
            return Err(Error::InsufficientTail {
                side: side.name(),
                found: u.len(),
                needed: config.min_samples.max(3),
            });
        }
        let (slope, intercept, rms_residual) = fit_line(&u, &y);
        let (local_slope, curvature, width) = fit_quadratic(&u, &y);
        let curvature_index = 2.0 * curvature.abs() * width / local_slope.abs();
        let exponential = slope < 0.0
            && rms_residual < config.max_rms_residual
            && curvature_index < config.max_curvature_index;
        Ok(TailFit {
            side,
            slope,
            intercept,
            rms_residual,
            curvature_index,
            n_samples: u.len(),
            classification: if exponential {
                TailClass::Exponential
            } else {
                TailClass::NonExponential
            },
        })
    };
    Ok((fit_side(Side::Left)?, fit_side(Side::Right)?))
}
