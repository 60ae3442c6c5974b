//! CSV and JSON serialization of the domain types.
//!
//! CSV files carry a header row, '.' decimals and no locale dependence, so
//! repeated runs are byte identical. Floats are written in scientific
//! notation with the shortest digits that round-trip.

use std::io::{self, Write};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decomposition::{schmidt_number, SchmidtModes, SqueezerSpectrum, ThermalModeFit};
use crate::simulator::{EstimatedCorrelation, PulseEnsemble};
use crate::spectral::{FrequencyGrid, JointSpectralAmplitude};
use crate::{Error, Result};

/// JSON document form of a joint spectral amplitude: the grid and the
/// complex entries as `[re, im]` pairs in row-major (signal-major) order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsaDocument {
    pub grid: FrequencyGrid,
    pub values: Vec<Vec<[f64; 2]>>,
}

impl JsaDocument {
    pub fn from_jsa(jsa: &JointSpectralAmplitude) -> Self {
        let grid = jsa.grid().clone();
        let values = (0..grid.n_s())
            .map(|s| {
                (0..grid.n_i())
                    .map(|i| {
                        let v = jsa.values()[(s, i)];
                        [v.re, v.im]
                    })
                    .collect()
            })
            .collect();
        Self { grid, values }
    }

    /// Rebuild the amplitude matrix; the coupling constant is already folded
    /// into the stored entries, so it is taken as one.
    pub fn into_jsa(self) -> Result<JointSpectralAmplitude> {
        let n_s = self.grid.n_s();
        let n_i = self.grid.n_i();
        if self.values.len() != n_s || self.values.iter().any(|row| row.len() != n_i) {
            return Err(Error::invalid("jsa document", "values shape does not match grid"));
        }
        let matrix = DMatrix::from_fn(n_s, n_i, |s, i| {
            Complex64::new(self.values[s][i][0], self.values[s][i][1])
        });
        JointSpectralAmplitude::from_values(self.grid, matrix, 1.0)
    }
}

/// Decomposition summary: `{r, B, lambda, K, mu, residual}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub r: Vec<f64>,
    #[serde(rename = "B")]
    pub gain: f64,
    pub lambda: Vec<f64>,
    #[serde(rename = "K")]
    pub schmidt_number: f64,
    pub mu: Option<f64>,
    pub residual: Option<f64>,
}

impl SpectrumSummary {
    pub fn new(spectrum: &SqueezerSpectrum, fit: Option<&ThermalModeFit>) -> Self {
        Self {
            r: spectrum.amplitudes().to_vec(),
            gain: spectrum.gain(),
            lambda: spectrum.lambda().to_vec(),
            schmidt_number: schmidt_number(spectrum),
            mu: fit.map(|f| f.mu),
            residual: fit.map(|f| f.residual),
        }
    }
}

/// Simulation summary: `{orders, values, stderr, n_pulses, seed}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub orders: Vec<String>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_pulses: usize,
    pub seed: u64,
}

impl SimulationSummary {
    pub fn new(ensemble: &PulseEnsemble, estimates: &[EstimatedCorrelation]) -> Self {
        Self {
            orders: estimates.iter().map(|e| e.order.clone()).collect(),
            values: estimates.iter().map(|e| e.value).collect(),
            stderr: estimates.iter().map(|e| e.stderr).collect(),
            n_pulses: ensemble.n_pulses(),
            seed: ensemble.seed(),
        }
    }
}

/// Write a JSA as `omega_s,omega_i,re,im` rows.
pub fn write_jsa_csv<W: Write>(mut w: W, jsa: &JointSpectralAmplitude) -> io::Result<()> {
    writeln!(w, "omega_s,omega_i,re,im")?;
    let grid = jsa.grid();
    for s in 0..grid.n_s() {
        for i in 0..grid.n_i() {
            let v = jsa.values()[(s, i)];
            writeln!(
                w,
                "{:e},{:e},{:e},{:e}",
                grid.omega_s(s),
                grid.omega_i(i),
                v.re,
                v.im
            )?;
        }
    }
    Ok(())
}

/// Which arm of a mode pair to export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeArm {
    Signal,
    Idler,
}

/// Write mode functions as `k,omega,re,im` rows.
pub fn write_modes_csv<W: Write>(mut w: W, modes: &SchmidtModes, arm: ModeArm) -> io::Result<()> {
    writeln!(w, "k,omega,re,im")?;
    let grid = modes.grid();
    let (matrix, axis): (_, Vec<f64>) = match arm {
        ModeArm::Signal => (modes.psi(), grid.signal_axis()),
        ModeArm::Idler => (modes.phi(), grid.idler_axis()),
    };
    for k in 0..matrix.nrows() {
        for (col, omega) in axis.iter().enumerate() {
            let v = matrix[(k, col)];
            writeln!(w, "{k},{omega:e},{:e},{:e}", v.re, v.im)?;
        }
    }
    Ok(())
}

/// Write an ensemble as `pulse_index,n_signal,n_idler` rows.
pub fn write_ensemble_csv<W: Write>(mut w: W, ensemble: &PulseEnsemble) -> io::Result<()> {
    writeln!(w, "pulse_index,n_signal,n_idler")?;
    for (index, (n_s, n_i)) in ensemble.records().iter().enumerate() {
        writeln!(w, "{index},{n_s},{n_i}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::schmidt_decompose;
    use crate::spectral::{
        build_pdc_jsa, DispersionModel, FieldDispersion, PhaseMatching, PumpEnvelope,
    };

    fn sample_jsa() -> JointSpectralAmplitude {
        let pump = PumpEnvelope::new(1.0, 2.0, 0.5).unwrap();
        let field = |k1: f64| FieldDispersion {
            reference_frequency: 1.0,
            k0: 0.0,
            k1,
            k2: 0.0,
        };
        let dispersion = DispersionModel {
            pump: FieldDispersion {
                reference_frequency: 2.0,
                k0: 0.0,
                k1: 0.0,
                k2: 0.0,
            },
            signal: field(1.2),
            idler: field(-1.2),
        };
        let grid = FrequencyGrid::centered(1.0, 1.5, 12, 1.0, 1.5, 12).unwrap();
        build_pdc_jsa(
            &pump,
            &dispersion,
            1.0,
            &grid,
            PhaseMatching::GaussianApprox,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn jsa_json_round_trip_preserves_entries() {
        let jsa = sample_jsa();
        let doc = JsaDocument::from_jsa(&jsa);
        let text = serde_json::to_string(&doc).unwrap();
        let back: JsaDocument = serde_json::from_str(&text).unwrap();
        let rebuilt = back.into_jsa().unwrap();
        assert_eq!(rebuilt.grid(), jsa.grid());
        assert_eq!(rebuilt.values(), jsa.values());
    }

    #[test]
    fn jsa_csv_has_header_and_full_row_count() {
        let jsa = sample_jsa();
        let mut buf = Vec::new();
        write_jsa_csv(&mut buf, &jsa).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "omega_s,omega_i,re,im");
        assert_eq!(lines.len(), 1 + 12 * 12);
    }

    #[test]
    fn modes_csv_covers_all_modes() {
        let jsa = sample_jsa();
        let (spectrum, modes) = schmidt_decompose(&jsa).unwrap();
        let mut buf = Vec::new();
        write_modes_csv(&mut buf, &modes, ModeArm::Signal).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + spectrum.n_modes() * 12);
    }

    #[test]
    fn summary_serializes_spec_keys() {
        let spectrum = SqueezerSpectrum::thermal(0.5, 32, 1.0).unwrap();
        let fit = crate::decomposition::fit_thermal(&spectrum).unwrap();
        let summary = SpectrumSummary::new(&spectrum, Some(&fit));
        let value = serde_json::to_value(&summary).unwrap();
        for key in ["r", "B", "lambda", "K", "mu", "residual"] {
            assert!(value.get(key).is_some(), "missing key {key}");
        }
    }
}
