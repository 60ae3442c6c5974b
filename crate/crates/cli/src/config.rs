//! JSON run configuration: one self-describing document per run.
//!
//! Every block is schema checked with unknown keys rejected, and the digest
//! of the effective configuration (after a `--seed` override) is embedded in
//! every output file so results can be traced back to their inputs.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use squeezelab::correlations::BeamKind;
use squeezelab::decomposition::{schmidt_decompose, SqueezerSpectrum};
use squeezelab::export::JsaDocument;
use squeezelab::spectral::{
    auto_grid, build_fwm_jsa, build_pdc_jsa, DispersionModel, FieldDispersion, FrequencyGrid,
    JointSpectralAmplitude, PhaseMatching, PumpEnvelope, DEFAULT_PUMP_QUADRATURE,
};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceConfig>,
    /// Path to a previously exported `jsa.json`, an alternative to `source`
    /// for the decompose command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jsa_input: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector: Option<DetectorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlations: Option<CorrelationsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Digest of the effective configuration, embedded in every output.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let hash = Sha256::digest(&canonical);
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn effective_seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceConfig {
    Pdc(PdcSource),
    Fwm(FwmSource),
    Explicit(ExplicitSource),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdcSource {
    pub pump: PumpConfig,
    pub dispersion: DispersionConfig,
    pub length: f64,
    pub phasematching: PhaseMatching,
    pub coupling_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FwmSource {
    pub pump: PumpConfig,
    pub pump2: PumpConfig,
    pub dispersion: DispersionConfig,
    pub length: f64,
    pub coupling_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump_quadrature_points: Option<usize>,
}

/// Direct squeezer description: exactly one of `r`, `lambda`, `thermal`,
/// `uniform`; the latter three need `gain`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal: Option<ThermalSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalSource {
    pub mu: f64,
    pub modes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpConfig {
    pub amplitude: f64,
    pub central_frequency: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionConfig {
    pub pump: FieldConfig,
    pub signal: FieldConfig,
    pub idler: FieldConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub reference_frequency: f64,
    pub k0: f64,
    pub k1: f64,
    #[serde(default)]
    pub k2: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridConfig {
    Explicit(GridExplicit),
    Auto(GridAuto),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridExplicit {
    pub start_s: f64,
    pub step_s: f64,
    pub n_s: usize,
    pub start_i: f64,
    pub step_i: f64,
    pub n_i: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAuto {
    #[serde(default = "default_grid_points")]
    pub n_s: usize,
    #[serde(default = "default_grid_points")]
    pub n_i: usize,
}

fn default_grid_points() -> usize {
    128
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub efficiency_signal: f64,
    pub efficiency_idler: f64,
    pub mode: DetectorModeConfig,
    /// Beamsplitter ratio for click detection; defaults to 0.5.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splitting: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorModeConfig {
    NumberResolving,
    HbtClick,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub beam: BeamKind,
    pub n_pulses: usize,
    pub orders: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationsConfig {
    pub beam: BeamKind,
    pub orders: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub beam: BeamKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g11: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepConfig {
    /// K against g² for uniform distributions.
    KVsG2 { k_min: usize, k_max: usize },
    /// μ vs g² law for geometric distributions.
    MuVsG2 {
        mu_min: f64,
        mu_max: f64,
        n_points: usize,
    },
    /// g², g³, g¹¹ against gain for the configured source distribution.
    CorrelationsVsB {
        b_min: f64,
        b_max: f64,
        n_points: usize,
    },
    /// Single-beam (g², g³) curve with its fitted slope for the configured
    /// source distribution.
    G3VsG2 {
        b_min: f64,
        b_max: f64,
        n_points: usize,
    },
    /// Emit the slope(μ) calibration table.
    SlopeMu {},
    /// Emit the slope(K) calibration table.
    SlopeK {},
}

/// Built source: either a full JSA pipeline or a bare squeezer spectrum.
pub enum BuiltSource {
    Spectral {
        jsa: Box<JointSpectralAmplitude>,
        spectrum: SqueezerSpectrum,
        modes: Box<squeezelab::SchmidtModes>,
    },
    Explicit {
        spectrum: SqueezerSpectrum,
    },
}

impl BuiltSource {
    pub fn spectrum(&self) -> &SqueezerSpectrum {
        match self {
            BuiltSource::Spectral { spectrum, .. } => spectrum,
            BuiltSource::Explicit { spectrum } => spectrum,
        }
    }
}

impl PumpConfig {
    fn build(&self) -> Result<PumpEnvelope, CliError> {
        PumpEnvelope::new(self.amplitude, self.central_frequency, self.width)
            .map_err(CliError::Domain)
    }
}

impl FieldConfig {
    fn build(&self) -> FieldDispersion {
        FieldDispersion {
            reference_frequency: self.reference_frequency,
            k0: self.k0,
            k1: self.k1,
            k2: self.k2,
        }
    }
}

impl DispersionConfig {
    fn build(&self) -> DispersionModel {
        DispersionModel {
            pump: self.pump.build(),
            signal: self.signal.build(),
            idler: self.idler.build(),
        }
    }
}

fn build_grid(
    grid: &Option<GridConfig>,
    pump_width: f64,
    dispersion: &DispersionModel,
    length: f64,
) -> Result<FrequencyGrid, CliError> {
    match grid {
        Some(GridConfig::Explicit(g)) => {
            FrequencyGrid::new(g.start_s, g.step_s, g.n_s, g.start_i, g.step_i, g.n_i)
                .map_err(CliError::Domain)
        }
        Some(GridConfig::Auto(g)) => {
            auto_grid(pump_width, dispersion, length, g.n_s, g.n_i).map_err(CliError::Domain)
        }
        None => auto_grid(
            pump_width,
            dispersion,
            length,
            default_grid_points(),
            default_grid_points(),
        )
        .map_err(CliError::Domain),
    }
}

impl ExplicitSource {
    pub fn build(&self) -> Result<SqueezerSpectrum, CliError> {
        let picked = [
            self.r.is_some(),
            self.lambda.is_some(),
            self.thermal.is_some(),
            self.uniform.is_some(),
        ]
        .iter()
        .filter(|p| **p)
        .count();
        if picked != 1 {
            return Err(CliError::Config(
                "explicit source needs exactly one of r, lambda, thermal, uniform".to_string(),
            ));
        }
        if let Some(r) = &self.r {
            return SqueezerSpectrum::from_amplitudes(r.clone()).map_err(CliError::Domain);
        }
        let gain = self.gain.ok_or_else(|| {
            CliError::Config("explicit source needs a gain with lambda, thermal or uniform".into())
        })?;
        if let Some(lambda) = &self.lambda {
            return SqueezerSpectrum::from_distribution(lambda.clone(), gain)
                .map_err(CliError::Domain);
        }
        if let Some(thermal) = &self.thermal {
            return SqueezerSpectrum::thermal(thermal.mu, thermal.modes, gain)
                .map_err(CliError::Domain);
        }
        SqueezerSpectrum::uniform(self.uniform.unwrap(), gain).map_err(CliError::Domain)
    }
}

impl SourceConfig {
    /// Build the source; spectral sources run through the decomposition.
    pub fn build(&self) -> Result<BuiltSource, CliError> {
        let jsa = match self {
            SourceConfig::Explicit(explicit) => {
                return Ok(BuiltSource::Explicit {
                    spectrum: explicit.build()?,
                })
            }
            SourceConfig::Pdc(pdc) => {
                let pump = pdc.pump.build()?;
                let dispersion = pdc.dispersion.build();
                let grid = build_grid(&pdc.grid, pump.width(), &dispersion, pdc.length)?;
                build_pdc_jsa(
                    &pump,
                    &dispersion,
                    pdc.length,
                    &grid,
                    pdc.phasematching,
                    pdc.coupling_scale,
                )
                .map_err(CliError::Domain)?
            }
            SourceConfig::Fwm(fwm) => {
                let pump = fwm.pump.build()?;
                let pump2 = fwm.pump2.build()?;
                let dispersion = fwm.dispersion.build();
                let width = pump.width().max(pump2.width());
                let grid = build_grid(&fwm.grid, width, &dispersion, fwm.length)?;
                build_fwm_jsa(
                    &pump,
                    &pump2,
                    &dispersion,
                    fwm.length,
                    &grid,
                    fwm.coupling_scale,
                    fwm.pump_quadrature_points.unwrap_or(DEFAULT_PUMP_QUADRATURE),
                )
                .map_err(CliError::Domain)?
            }
        };
        let (spectrum, modes) = schmidt_decompose(&jsa).map_err(CliError::Domain)?;
        Ok(BuiltSource::Spectral {
            jsa: Box::new(jsa),
            spectrum,
            modes: Box::new(modes),
        })
    }

    /// Build only the JSA, for the `jsa` command; explicit sources have none.
    pub fn build_jsa(&self) -> Result<JointSpectralAmplitude, CliError> {
        match self.build()? {
            BuiltSource::Spectral { jsa, .. } => Ok(*jsa),
            BuiltSource::Explicit { .. } => Err(CliError::Config(
                "jsa requires a spectral source (pdc or fwm)".to_string(),
            )),
        }
    }
}

/// Load a JSA from a previously exported JSON document.
pub fn load_jsa(path: &Path) -> Result<JointSpectralAmplitude, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let doc: JsaDocument = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    doc.into_jsa().map_err(CliError::Domain)
}
