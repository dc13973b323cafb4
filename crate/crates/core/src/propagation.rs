//! Kick–drift map: a phase print by the static potential followed by
//! free-space dispersion over the inter-reflection distance.
//!
//! The drift is the exact Fresnel transfer function `exp(-i d q^2 / 2k)`
//! applied in the spectral basis; the kick multiplies each sample by
//! `sqrt(1 - alpha) exp(i theta_j)`. One step applies the kick first and then
//! the drift, and `evolve` composes `N` such steps.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::disorder::PotentialField;
use crate::error::{Error, Result, Warning};
use crate::grid::{ComplexField, SimulationGrid, SpectralTransform};
use crate::observables::boundary_leak;

/// Boundary intensity (relative to peak) above which a leak warning is raised.
pub const LEAK_THRESHOLD: f64 = 1e-8;

/// Sign applied to the kick phase.
///
/// `Schrodinger` gives `exp(-i V dt)`, matching a potential term in the
/// Schrödinger equation; `Flipped` gives `exp(+i V dt)`, the sign written
/// for the raw SLM phase print.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum KickSign {
    #[default]
    Schrodinger,
    Flipped,
}

impl KickSign {
    pub fn factor(self) -> f64 {
        match self {
            KickSign::Schrodinger => 1.0,
            KickSign::Flipped => -1.0,
        }
    }

    pub fn from_int(v: i64) -> Option<Self> {
        match v {
            1 => Some(KickSign::Schrodinger),
            -1 => Some(KickSign::Flipped),
            _ => None,
        }
    }

    pub fn as_int(self) -> i64 {
        match self {
            KickSign::Schrodinger => 1,
            KickSign::Flipped => -1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionParams {
    /// Optical wavenumber k, the analog of `1/hbar`.
    pub wavenumber: f64,
    /// Free path d between reflections.
    pub drift_distance: f64,
    pub kick_count: usize,
    /// Time per kick; the kick phase is `-V dt` for the default sign.
    pub dt: f64,
    pub kick_sign: KickSign,
    /// Intensity fraction absorbed per reflection.
    pub loss_per_kick: f64,
    pub record_stride: usize,
}

impl Default for EvolutionParams {
    /// k = 1, d = dt = 0.01, 10^4 kicks, one record per 100 kicks, lossless.
    fn default() -> Self {
        Self {
            wavenumber: 1.0,
            drift_distance: 0.01,
            kick_count: 10_000,
            dt: 0.01,
            kick_sign: KickSign::Schrodinger,
            loss_per_kick: 0.0,
            record_stride: 100,
        }
    }
}

impl EvolutionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.wavenumber > 0.0 && self.wavenumber.is_finite()) {
            return Err(Error::config(
                "evolution.wavenumber",
                format!("must be positive, got {}", self.wavenumber),
            ));
        }
        if !(self.drift_distance > 0.0 && self.drift_distance.is_finite()) {
            return Err(Error::config(
                "evolution.drift_distance",
                format!("must be positive, got {}", self.drift_distance),
            ));
        }
        if !self.dt.is_finite() {
            return Err(Error::config("evolution.dt", "must be finite"));
        }
        if !(0.0..1.0).contains(&self.loss_per_kick) {
            return Err(Error::config(
                "evolution.loss_per_kick",
                format!("must lie in [0, 1), got {}", self.loss_per_kick),
            ));
        }
        if self.record_stride == 0 {
            return Err(Error::config("evolution.record_stride", "must be at least 1"));
        }
        Ok(())
    }

    /// Propagation distance after `step` kicks.
    pub fn z_at(&self, step: usize) -> f64 {
        step as f64 * self.drift_distance
    }

    /// Whether observables are recorded after `step` kicks.
    pub fn is_recorded(&self, step: usize) -> bool {
        step == 0 || step == self.kick_count || step % self.record_stride == 0
    }
}

/// Spectral multiplier `exp(-i distance q^2 / 2k) * scale`.
fn drift_multiplier(grid: &SimulationGrid, distance: f64, k: f64, scale: f64) -> Vec<Complex64> {
    grid.frequencies()
        .iter()
        .map(|&q| Complex64::from_polar(scale, -distance * q * q / (2.0 * k)))
        .collect()
}

/// Free-space propagation by `distance`.
pub fn drift(field: &ComplexField, distance: f64, k: f64) -> ComplexField {
    let grid = field.grid().clone();
    let mut fft = SpectralTransform::new(grid.n_points());
    let multiplier = drift_multiplier(&grid, distance, k, 1.0);
    let mut out = field.clone();
    let values = out.values_mut();
    fft.forward(values);
    values.iter_mut().zip(&multiplier).for_each(|(v, m)| *v *= m);
    fft.inverse(values);
    out
}

/// Phase print `sqrt(1 - loss) exp(i phase_j)` applied sample by sample.
pub fn kick(field: &ComplexField, phase: &[f64], loss: f64) -> Result<ComplexField> {
    if phase.len() != field.values().len() {
        return Err(Error::Contract(format!(
            "phase has {} samples but field has {}",
            phase.len(),
            field.values().len()
        )));
    }
    if !(0.0..1.0).contains(&loss) {
        return Err(Error::Contract(format!("loss {loss} outside [0, 1)")));
    }
    let amplitude = (1.0 - loss).sqrt();
    let mut out = field.clone();
    out.values_mut()
        .iter_mut()
        .zip(phase)
        .for_each(|(v, &theta)| *v *= Complex64::from_polar(amplitude, theta));
    Ok(out)
}

/// Kick phase `theta_j = -sign * V_j * dt`.
pub fn kick_phase(potential: &PotentialField, params: &EvolutionParams) -> Vec<f64> {
    let scale = -params.kick_sign.factor() * params.dt;
    potential.values().iter().map(|&v| scale * v).collect()
}

/// Precomputed kick and drift factors for repeated application on one grid.
pub struct KickDriftMap {
    kick: Vec<Complex64>,
    drift: Vec<Complex64>,
    fft: SpectralTransform,
}

impl KickDriftMap {
    pub fn new(potential: &PotentialField, params: &EvolutionParams) -> Result<Self> {
        params.validate()?;
        let grid = potential.grid();
        let amplitude = (1.0 - params.loss_per_kick).sqrt();
        let kick = kick_phase(potential, params)
            .into_iter()
            .map(|theta| Complex64::from_polar(amplitude, theta))
            .collect();
        // The inverse transform's 1/n is folded into the drift multiplier.
        let drift = drift_multiplier(
            grid,
            params.drift_distance,
            params.wavenumber,
            1.0 / grid.n_points() as f64,
        );
        Ok(Self {
            kick,
            drift,
            fft: SpectralTransform::new(grid.n_points()),
        })
    }

    /// One kick followed by one drift, in place.
    pub fn apply(&mut self, values: &mut [Complex64]) {
        values.iter_mut().zip(&self.kick).for_each(|(v, k)| *v *= k);
        self.fft.forward(values);
        values.iter_mut().zip(&self.drift).for_each(|(v, m)| *v *= m);
        self.fft.inverse_unnormalized(values);
    }
}

fn check_shared_grid(field: &ComplexField, potential: &PotentialField) -> Result<()> {
    if field.shares_grid(potential.grid()) {
        Ok(())
    } else {
        Err(Error::Contract(format!(
            "field grid {:?} differs from potential grid {:?}",
            field.grid(),
            potential.grid()
        )))
    }
}

/// A single reflection: kick by the potential, then drift by `d`.
pub fn step(field: &ComplexField, potential: &PotentialField, params: &EvolutionParams) -> Result<ComplexField> {
    check_shared_grid(field, potential)?;
    let kicked = kick(field, &kick_phase(potential, params), params.loss_per_kick)?;
    params.validate()?;
    Ok(drift(&kicked, params.drift_distance, params.wavenumber))
}

/// Final field plus any warnings raised along the way.
#[derive(Debug)]
pub struct Evolution {
    pub field: ComplexField,
    pub warnings: Vec<Warning>,
}

/// Applies `kick_count` steps, calling `observer(step, z, field)` at step 0,
/// every `record_stride` steps, and after the last step.
///
/// A boundary-leak warning is emitted the first time a recorded field has
/// more than [`LEAK_THRESHOLD`] of its peak intensity in the outer bands.
pub fn evolve<F>(
    field: &ComplexField,
    potential: &PotentialField,
    params: &EvolutionParams,
    mut observer: F,
) -> Result<Evolution>
where
    F: FnMut(usize, f64, &ComplexField),
{
    check_shared_grid(field, potential)?;
    let mut map = KickDriftMap::new(potential, params)?;
    let mut current = field.clone();
    let mut warnings = Vec::new();
    let mut leak_reported = false;

    let mut record = |step: usize, current: &ComplexField, warnings: &mut Vec<Warning>| {
        let z = params.z_at(step);
        if !leak_reported {
            let leak = boundary_leak(current);
            if leak > LEAK_THRESHOLD {
                warnings.push(Warning::BoundaryLeak { step, z, leak });
                leak_reported = true;
            }
        }
        observer(step, z, current);
    };

    record(0, &current, &mut warnings);
    for s in 1..=params.kick_count {
        map.apply(current.values_mut());
        if params.is_recorded(s) {
            record(s, &current, &mut warnings);
        }
    }
    Ok(Evolution {
        field: current,
        warnings,
    })
}

/// Closed-form freely spreading Gaussian with complex width
/// `s^2 = sigma0^2 + i z / k`, centered at the origin and normalized on the grid.
pub fn analytic_free_gaussian(
    sigma0: f64,
    k: f64,
    z: f64,
    grid: &Arc<SimulationGrid>,
) -> Result<ComplexField> {
    if !(sigma0 > 0.0 && sigma0.is_finite()) {
        return Err(Error::config("input_beam.sigma0", format!("must be positive, got {sigma0}")));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::config("evolution.wavenumber", format!("must be positive, got {k}")));
    }
    let s2 = Complex64::new(sigma0 * sigma0, z / k);
    let prefactor = (PI * sigma0 * sigma0).powf(-0.25) * sigma0 / s2.sqrt();
    let mut field = ComplexField::from_fn(grid.clone(), |x| prefactor * (-(x * x) / (2.0 * s2)).exp());
    field.normalize();
    Ok(field)
}

/// Position variance `sigma0^2 (1 + (z / (k sigma0^2))^2) / 2` of a free Gaussian.
pub fn free_gaussian_variance(sigma0: f64, k: f64, z: f64) -> f64 {
    let r = z / (k * sigma0 * sigma0);
    0.5 * sigma0 * sigma0 * (1.0 + r * r)
}
