//! Schmidt decomposition of a joint spectral amplitude into independent
//! broadband squeezers.
//!
//! The singular values of the discretized kernel, rescaled by the grid cell
//! area, give the squeezing amplitudes r_k. Their Euclidean norm is the
//! optical gain B and the normalized distribution λ_k = r_k / B describes how
//! the squeezing is shared among modes.

use nalgebra::{Complex, DMatrix};
use num_complex::Complex64;
use serde::Serialize;

use crate::spectral::{FrequencyGrid, JointSpectralAmplitude};
use crate::{Error, Result};

/// Singular values below this fraction of the largest one are discarded.
pub const TRUNCATION_RELATIVE: f64 = 1e-12;

/// Modes below this fraction of λ_0 are excluded from the thermal fit.
pub const THERMAL_FIT_RELATIVE: f64 = 1e-6;

/// Squeezing amplitudes of a multimode squeezer, split into an overall
/// optical gain `B` and a normalized mode distribution `λ` with Σλ² = 1.
///
/// Constructed only through the validating constructors, so the invariants
/// hold for every value of this type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqueezerSpectrum {
    r: Vec<f64>,
    #[serde(rename = "B")]
    gain: f64,
    lambda: Vec<f64>,
}

impl SqueezerSpectrum {
    /// Build from raw squeezing amplitudes; they are sorted descending.
    pub fn from_amplitudes(mut amplitudes: Vec<f64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("spectrum", "no squeezing amplitudes"));
        }
        if amplitudes.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::invalid(
                "spectrum",
                "squeezing amplitudes must be finite and non-negative",
            ));
        }
        if amplitudes.iter().all(|r| *r == 0.0) {
            return Err(Error::DegenerateSpectrum);
        }
        amplitudes.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let gain = amplitudes.iter().map(|r| r * r).sum::<f64>().sqrt();
        let lambda = amplitudes.iter().map(|r| r / gain).collect();
        Ok(Self {
            r: amplitudes,
            gain,
            lambda,
        })
    }

    /// Build from a normalized mode distribution and a gain `B ≥ 0`.
    ///
    /// `B = 0` describes the vacuum; the distribution is renormalized so that
    /// Σλ² = 1 holds to machine precision.
    pub fn from_distribution(lambda: Vec<f64>, gain: f64) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::invalid("spectrum", "empty mode distribution"));
        }
        if lambda.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(Error::invalid(
                "spectrum",
                "mode distribution must be finite and non-negative",
            ));
        }
        if gain < 0.0 || !gain.is_finite() {
            return Err(Error::invalid("spectrum", format!("gain must be >= 0, got {gain}")));
        }
        let norm = lambda.iter().map(|l| l * l).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::DegenerateSpectrum);
        }
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(
                "spectrum",
                format!("mode distribution is not normalized: Σλ² = {}", norm * norm),
            ));
        }
        let mut lambda: Vec<f64> = lambda.iter().map(|l| l / norm).collect();
        lambda.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let r = lambda.iter().map(|l| gain * l).collect();
        Ok(Self { r, gain, lambda })
    }

    /// Thermal (geometric) distribution λ_k ∝ μ^k over `modes` modes.
    pub fn thermal(mu: f64, modes: usize, gain: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&mu) {
            return Err(Error::invalid("spectrum", format!("mu must lie in [0, 1), got {mu}")));
        }
        if modes == 0 {
            return Err(Error::invalid("spectrum", "need at least one mode"));
        }
        let mut lambda: Vec<f64> = (0..modes).map(|k| mu.powi(k as i32)).collect();
        lambda.retain(|l| *l > 0.0);
        let norm = lambda.iter().map(|l| l * l).sum::<f64>().sqrt();
        for l in &mut lambda {
            *l /= norm;
        }
        let r = lambda.iter().map(|l| gain * l).collect();
        Ok(Self { r, gain, lambda })
    }

    /// Uniform distribution over `modes` equally squeezed modes.
    pub fn uniform(modes: usize, gain: f64) -> Result<Self> {
        if modes == 0 {
            return Err(Error::invalid("spectrum", "need at least one mode"));
        }
        let l = 1.0 / (modes as f64).sqrt();
        Self::from_distribution(vec![l; modes], gain)
    }

    /// Squeezing amplitudes r_k = B λ_k, descending.
    pub fn amplitudes(&self) -> &[f64] {
        &self.r
    }

    /// Normalized mode distribution λ_k, descending, Σλ² = 1.
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Overall optical gain B.
    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn n_modes(&self) -> usize {
        self.r.len()
    }

    /// True when no mode carries any squeezing.
    pub fn is_vacuum(&self) -> bool {
        self.r.iter().all(|r| *r == 0.0)
    }

    /// Same distribution at a different gain.
    pub fn with_gain(&self, gain: f64) -> Result<Self> {
        Self::from_distribution(self.lambda.clone(), gain)
    }
}

/// Discretized broadband mode functions of the two beams.
///
/// Row k of `psi` samples ψ_k on the signal axis, row k of `phi` samples φ_k
/// on the idler axis. The rows are orthonormal under the quadrature inner
/// product `⟨u, v⟩ = Σ conj(u) v Δω`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtModes {
    psi: DMatrix<Complex64>,
    phi: DMatrix<Complex64>,
    grid: FrequencyGrid,
}

impl SchmidtModes {
    pub fn n_modes(&self) -> usize {
        self.psi.nrows()
    }

    pub fn psi(&self) -> &DMatrix<Complex64> {
        &self.psi
    }

    pub fn phi(&self) -> &DMatrix<Complex64> {
        &self.phi
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }
}

/// Result of fitting λ_k to a geometric law √(1-μ²) μ^k.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermalModeFit {
    /// Thermal mode parameter μ in [0, 1).
    pub mu: f64,
    /// RMS residual of the straight-line fit of ln λ_k against k.
    pub residual: f64,
}

/// Schmidt-decompose a joint spectral amplitude.
///
/// Returns the squeezer spectrum with `r_k = σ_k √(Δω_s Δω_i)` (continuum
/// kernel scaling, grid independent under refinement) and the quadrature
/// orthonormal mode functions. Modes below [`TRUNCATION_RELATIVE`] of the
/// leading singular value are dropped. The phase of each mode pair is fixed
/// so that the largest-magnitude entry of ψ_k is real and positive.
pub fn schmidt_decompose(
    jsa: &JointSpectralAmplitude,
) -> Result<(SqueezerSpectrum, SchmidtModes)> {
    let max_abs = jsa.values().iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    if max_abs == 0.0 {
        return Err(Error::DegenerateSpectrum);
    }

    let svd = jsa.values().clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let sigmas = svd.singular_values;

    let sigma0 = sigmas[0];
    let keep = sigmas
        .iter()
        .take_while(|s| **s >= TRUNCATION_RELATIVE * sigma0)
        .count()
        .max(1);

    let grid = jsa.grid().clone();
    let cell_scale = (grid.step_s() * grid.step_i()).sqrt();
    let r: Vec<f64> = sigmas.iter().take(keep).map(|s| s * cell_scale).collect();

    let s_norm = 1.0 / grid.step_s().sqrt();
    let i_norm = 1.0 / grid.step_i().sqrt();
    let mut psi = DMatrix::from_fn(keep, grid.n_s(), |k, s| u[(s, k)] * Complex::from(s_norm));
    let mut phi = DMatrix::from_fn(keep, grid.n_i(), |k, i| v_t[(k, i)] * Complex::from(i_norm));

    // Deterministic phase: rotate each ψ_k so its largest entry is real
    // positive; counter-rotate φ_k to keep the product unchanged.
    for k in 0..keep {
        let mut best = 0usize;
        let mut best_norm = 0.0f64;
        for s in 0..grid.n_s() {
            let n = psi[(k, s)].norm();
            if n > best_norm {
                best_norm = n;
                best = s;
            }
        }
        let phase = psi[(k, best)] / Complex::from(best_norm);
        let rot = phase.conj();
        for s in 0..grid.n_s() {
            psi[(k, s)] *= rot;
        }
        for i in 0..grid.n_i() {
            phi[(k, i)] *= phase;
        }
    }

    let spectrum = SqueezerSpectrum::from_amplitudes(r)?;
    Ok((spectrum, SchmidtModes { psi, phi, grid }))
}

/// Effective mode number `K = 1 / Σ λ_k⁴` (Schmidt number); K ≥ 1.
pub fn schmidt_number(spectrum: &SqueezerSpectrum) -> f64 {
    let quartic: f64 = spectrum.lambda().iter().map(|l| l.powi(4)).sum();
    1.0 / quartic
}

/// Fit λ_k to the geometric law by least squares of ln λ_k against k.
///
/// Modes below [`THERMAL_FIT_RELATIVE`] of λ_0 are excluded; at least three
/// usable modes are required.
pub fn fit_thermal(spectrum: &SqueezerSpectrum) -> Result<ThermalModeFit> {
    let lambda = spectrum.lambda();
    let floor = THERMAL_FIT_RELATIVE * lambda[0];
    let usable: Vec<f64> = lambda
        .iter()
        .copied()
        .filter(|l| *l >= floor && *l > 0.0)
        .collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientModes {
            usable: usable.len(),
        });
    }

    let n = usable.len() as f64;
    let logs: Vec<f64> = usable.iter().map(|l| l.ln()).collect();
    let mean_k = (usable.len() as f64 - 1.0) / 2.0;
    let mean_log = logs.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (k, log) in logs.iter().enumerate() {
        let dk = k as f64 - mean_k;
        sxx += dk * dk;
        sxy += dk * (log - mean_log);
    }
    let slope = sxy / sxx;
    let intercept = mean_log - slope * mean_k;
    let mu = slope.exp();
    if mu >= 1.0 {
        return Err(Error::domain(format!(
            "thermal fit slope is non-decaying: mu = {mu} outside [0, 1)"
        )));
    }
    let residual = (logs
        .iter()
        .enumerate()
        .map(|(k, log)| {
            let d = log - (intercept + slope * k as f64);
            d * d
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(ThermalModeFit { mu, residual })
}
