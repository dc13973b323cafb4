use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::disorder::SpeckleConfig;
use crate::error::{Error, Result};
use crate::grid::SimulationGrid;
use crate::propagation::{EvolutionParams, KickSign};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n_points: usize,
    pub half_extent: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n_points: 4096,
            half_extent: 30.0,
        }
    }
}

/// Speckle parameters; the seed comes from the realization index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeckleSection {
    pub n_spikes: usize,
    pub spike_strength: f64,
    pub spike_width: f64,
    pub spike_extent: f64,
}

impl Default for SpeckleSection {
    fn default() -> Self {
        let r = SpeckleConfig::reference(0);
        Self {
            n_spikes: r.n_spikes,
            spike_strength: r.spike_strength,
            spike_width: r.spike_width,
            spike_extent: r.spike_extent,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputBeamSection {
    pub sigma0: f64,
    pub center: f64,
}

impl Default for InputBeamSection {
    fn default() -> Self {
        Self {
            sigma0: 1.0,
            center: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionSection {
    pub wavenumber: f64,
    pub drift_distance: f64,
    pub kick_count: usize,
    pub dt: f64,
    /// `1` for `exp(-i V dt)`, `-1` for `exp(+i V dt)`.
    pub kick_sign: i64,
    pub loss_per_kick: f64,
    pub record_stride: usize,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        let p = EvolutionParams::default();
        Self {
            wavenumber: p.wavenumber,
            drift_distance: p.drift_distance,
            kick_count: p.kick_count,
            dt: p.dt,
            kick_sign: p.kick_sign.as_int(),
            loss_per_kick: p.loss_per_kick,
            record_stride: p.record_stride,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputsSection {
    pub directory: PathBuf,
    pub observables: bool,
    pub profiles: bool,
    pub potentials: bool,
    pub ensemble: bool,
}

impl Default for OutputsSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("results"),
            observables: true,
            profiles: true,
            potentials: true,
            ensemble: true,
        }
    }
}

/// Full run description. Defaults reproduce the reference experiment.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSection,
    pub speckle: SpeckleSection,
    pub input_beam: InputBeamSection,
    pub evolution: EvolutionSection,
    pub base_seed: u64,
    pub n_realizations: usize,
    pub outputs: OutputsSection,
    pub disable_potential: bool,
    /// Permits `evolution.dt != evolution.drift_distance`.
    pub allow_dt_mismatch: bool,
}

impl ExperimentConfig {
    pub fn reference() -> Self {
        Self {
            n_realizations: 1,
            ..Self::default()
        }
    }

    pub fn grid(&self) -> Result<SimulationGrid> {
        SimulationGrid::new(self.grid.n_points, self.grid.half_extent)
    }

    pub fn speckle(&self, seed: u64) -> SpeckleConfig {
        SpeckleConfig {
            n_spikes: self.speckle.n_spikes,
            spike_strength: self.speckle.spike_strength,
            spike_width: self.speckle.spike_width,
            spike_extent: self.speckle.spike_extent,
            seed,
        }
    }

    pub fn evolution(&self) -> Result<EvolutionParams> {
        let kick_sign = KickSign::from_int(self.evolution.kick_sign).ok_or_else(|| {
            Error::config(
                "evolution.kick_sign",
                format!("must be 1 or -1, got {}", self.evolution.kick_sign),
            )
        })?;
        Ok(EvolutionParams {
            wavenumber: self.evolution.wavenumber,
            drift_distance: self.evolution.drift_distance,
            kick_count: self.evolution.kick_count,
            dt: self.evolution.dt,
            kick_sign,
            loss_per_kick: self.evolution.loss_per_kick,
            record_stride: self.evolution.record_stride,
        })
    }

    /// Checks every section and the `dt == drift_distance` identification.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        self.speckle(0).validate(&grid)?;
        let params = self.evolution()?;
        params.validate()?;
        let beam = &self.input_beam;
        if !(beam.sigma0 > 0.0 && beam.sigma0.is_finite()) {
            return Err(Error::config(
                "input_beam.sigma0",
                format!("must be positive, got {}", beam.sigma0),
            ));
        }
        let h = grid.half_extent();
        if !(beam.center >= -h && beam.center < h) {
            return Err(Error::config(
                "input_beam.center",
                format!("{} lies outside the grid [-{h}, {h})", beam.center),
            ));
        }
        if !self.allow_dt_mismatch && params.dt != params.drift_distance {
            return Err(Error::config(
                "evolution.dt",
                format!(
                    "dt = {} must equal drift_distance = {} (z plays the role of time); set allow_dt_mismatch = true to override",
                    params.dt, params.drift_distance
                ),
            ));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }
}

/// Parses a TOML config document, applies defaults, and validates it.
pub fn load_config(document: &str) -> Result<ExperimentConfig> {
    let de = toml::Deserializer::parse(document).map_err(|e| Error::Parse(e.to_string()))?;
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(path, e.into_inner().message().to_string())
    })?;
    config.validate()?;
    Ok(config)
}
