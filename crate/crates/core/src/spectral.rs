//! Discretized joint spectral amplitudes for PDC and FWM sources.
//!
//! A source is specified by a Gaussian pump envelope, a per-field dispersion
//! model and a medium length. The joint spectral amplitude (JSA) on a uniform
//! signal/idler frequency grid is the product of the pump envelope evaluated
//! at the sum frequency and a phasematching function of the phase mismatch Δk.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Width of the Gaussian that approximates sinc(x): exp(-0.193 x²).
pub const GAUSSIAN_SINC_FACTOR: f64 = 0.193;

/// Default number of trapezoid nodes for the FWM pump-frequency integral.
pub const DEFAULT_PUMP_QUADRATURE: usize = 256;

/// Normalized sinc with sinc(0) = 1.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Uniform discretization of the signal and idler frequency axes (rad/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    start_s: f64,
    step_s: f64,
    n_s: usize,
    start_i: f64,
    step_i: f64,
    n_i: usize,
}

impl FrequencyGrid {
    pub fn new(
        start_s: f64,
        step_s: f64,
        n_s: usize,
        start_i: f64,
        step_i: f64,
        n_i: usize,
    ) -> Result<Self> {
        if step_s <= 0.0 || !step_s.is_finite() {
            return Err(Error::invalid("grid", format!("step_s must be > 0, got {step_s}")));
        }
        if step_i <= 0.0 || !step_i.is_finite() {
            return Err(Error::invalid("grid", format!("step_i must be > 0, got {step_i}")));
        }
        if n_s < 2 || n_i < 2 {
            return Err(Error::invalid(
                "grid",
                format!("need at least 2 points per axis, got {n_s} x {n_i}"),
            ));
        }
        if !start_s.is_finite() || !start_i.is_finite() {
            return Err(Error::invalid("grid", "start frequencies must be finite"));
        }
        Ok(Self {
            start_s,
            step_s,
            n_s,
            start_i,
            step_i,
            n_i,
        })
    }

    /// Grid spanning `center ± half_span` on each axis.
    pub fn centered(
        center_s: f64,
        half_span_s: f64,
        n_s: usize,
        center_i: f64,
        half_span_i: f64,
        n_i: usize,
    ) -> Result<Self> {
        if half_span_s.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
            || half_span_i.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
        {
            return Err(Error::invalid("grid", "half spans must be > 0"));
        }
        let step_s = 2.0 * half_span_s / (n_s.max(2) - 1) as f64;
        let step_i = 2.0 * half_span_i / (n_i.max(2) - 1) as f64;
        Self::new(
            center_s - half_span_s,
            step_s,
            n_s,
            center_i - half_span_i,
            step_i,
            n_i,
        )
    }

    /// Signal frequency at index `k`, exactly `start_s + k * step_s`.
    pub fn omega_s(&self, k: usize) -> f64 {
        self.start_s + k as f64 * self.step_s
    }

    /// Idler frequency at index `k`, exactly `start_i + k * step_i`.
    pub fn omega_i(&self, k: usize) -> f64 {
        self.start_i + k as f64 * self.step_i
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_i(&self) -> usize {
        self.n_i
    }

    pub fn step_s(&self) -> f64 {
        self.step_s
    }

    pub fn step_i(&self) -> f64 {
        self.step_i
    }

    pub fn start_s(&self) -> f64 {
        self.start_s
    }

    pub fn start_i(&self) -> f64 {
        self.start_i
    }

    pub fn signal_axis(&self) -> Vec<f64> {
        (0..self.n_s).map(|k| self.omega_s(k)).collect()
    }

    pub fn idler_axis(&self) -> Vec<f64> {
        (0..self.n_i).map(|k| self.omega_i(k)).collect()
    }
}

/// Gaussian pump pulse envelope `amplitude * exp(-(ω-μ)²/(2σ²))`.
///
/// The exponent is negative so the envelope is a normalizable pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PumpEnvelope {
    amplitude: f64,
    central_frequency: f64,
    width: f64,
}

impl PumpEnvelope {
    pub fn new(amplitude: f64, central_frequency: f64, width: f64) -> Result<Self> {
        if amplitude <= 0.0 || !amplitude.is_finite() {
            return Err(Error::invalid("pump", format!("amplitude must be > 0, got {amplitude}")));
        }
        if width <= 0.0 || !width.is_finite() {
            return Err(Error::invalid("pump", format!("width must be > 0, got {width}")));
        }
        if !central_frequency.is_finite() {
            return Err(Error::invalid("pump", "central frequency must be finite"));
        }
        Ok(Self {
            amplitude,
            central_frequency,
            width,
        })
    }

    pub fn value(&self, omega: f64) -> f64 {
        let d = (omega - self.central_frequency) / self.width;
        self.amplitude * (-0.5 * d * d).exp()
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn central_frequency(&self) -> f64 {
        self.central_frequency
    }

    pub fn width(&self) -> f64 {
        self.width
    }
}

/// Second-order Taylor expansion of the wavenumber of one field:
/// `k(ω) = k0 + k1 (ω - ω0) + ½ k2 (ω - ω0)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDispersion {
    pub reference_frequency: f64,
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
}

impl FieldDispersion {
    pub fn wavenumber(&self, omega: f64) -> f64 {
        let d = omega - self.reference_frequency;
        self.k0 + self.k1 * d + 0.5 * self.k2 * d * d
    }
}

/// Dispersion of the three interacting fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionModel {
    pub pump: FieldDispersion,
    pub signal: FieldDispersion,
    pub idler: FieldDispersion,
}

/// Phase mismatch `Δk = k_p(ω_s + ω_i) - k_s(ω_s) - k_i(ω_i)` in 1/m.
pub fn phase_mismatch(dispersion: &DispersionModel, omega_s: f64, omega_i: f64) -> f64 {
    dispersion.pump.wavenumber(omega_s + omega_i)
        - dispersion.signal.wavenumber(omega_s)
        - dispersion.idler.wavenumber(omega_i)
}

/// Which phasematching function multiplies the pump envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMatching {
    /// sinc(Δk L / 2)
    ExactSinc,
    /// exp(-0.193 (Δk L / 2)²); makes a Gaussian pump yield a Gaussian JSA
    GaussianApprox,
}

/// Phasematching function evaluated at `x = Δk L / 2`.
pub fn phasematching_value(kind: PhaseMatching, x: f64) -> f64 {
    match kind {
        PhaseMatching::ExactSinc => sinc(x),
        PhaseMatching::GaussianApprox => (-GAUSSIAN_SINC_FACTOR * x * x).exp(),
    }
}

/// Complex joint spectral amplitude sampled on a [`FrequencyGrid`].
///
/// Entry `(s, i)` holds the amplitude for emitting a signal photon at
/// `ω_s(s)` and an idler photon at `ω_i(i)`. All physical prefactors of the
/// interaction are merged into a single positive `coupling_scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpectralAmplitude {
    grid: FrequencyGrid,
    values: DMatrix<Complex64>,
    coupling_scale: f64,
}

impl JointSpectralAmplitude {
    /// Wrap an explicit amplitude matrix; rows index signal, columns idler.
    pub fn from_values(
        grid: FrequencyGrid,
        values: DMatrix<Complex64>,
        coupling_scale: f64,
    ) -> Result<Self> {
        if values.nrows() != grid.n_s() || values.ncols() != grid.n_i() {
            return Err(Error::invalid(
                "jsa",
                format!(
                    "matrix is {}x{} but grid is {}x{}",
                    values.nrows(),
                    values.ncols(),
                    grid.n_s(),
                    grid.n_i()
                ),
            ));
        }
        if coupling_scale <= 0.0 || !coupling_scale.is_finite() {
            return Err(Error::invalid(
                "jsa",
                format!("coupling_scale must be > 0, got {coupling_scale}"),
            ));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::invalid("jsa", "matrix entries must be finite"));
        }
        Ok(Self {
            grid,
            values,
            coupling_scale,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &DMatrix<Complex64> {
        &self.values
    }

    pub fn coupling_scale(&self) -> f64 {
        self.coupling_scale
    }

    /// Frobenius norm of the amplitude matrix.
    pub fn frobenius_norm(&self) -> f64 {
        self.values.norm()
    }
}

fn check_length(length: f64) -> Result<()> {
    if length <= 0.0 || !length.is_finite() {
        return Err(Error::invalid("length", format!("must be > 0, got {length}")));
    }
    Ok(())
}

/// Build the PDC joint spectral amplitude
/// `coupling_scale · α(ω_s + ω_i) · φ(Δk L / 2)` on the grid.
pub fn build_pdc_jsa(
    pump: &PumpEnvelope,
    dispersion: &DispersionModel,
    length: f64,
    grid: &FrequencyGrid,
    phasematching: PhaseMatching,
    coupling_scale: f64,
) -> Result<JointSpectralAmplitude> {
    check_length(length)?;
    let values = DMatrix::from_fn(grid.n_s(), grid.n_i(), |s, i| {
        let omega_s = grid.omega_s(s);
        let omega_i = grid.omega_i(i);
        let dk = phase_mismatch(dispersion, omega_s, omega_i);
        let phi = phasematching_value(phasematching, 0.5 * dk * length);
        Complex64::new(coupling_scale * pump.value(omega_s + omega_i) * phi, 0.0)
    });
    JointSpectralAmplitude::from_values(grid.clone(), values, coupling_scale)
}

/// FWM phase mismatch for pump photons at `ω_p` and `ω_s + ω_i - ω_p`.
fn fwm_phase_mismatch(
    dispersion: &DispersionModel,
    omega_p: f64,
    omega_s: f64,
    omega_i: f64,
) -> f64 {
    dispersion.pump.wavenumber(omega_p) + dispersion.pump.wavenumber(omega_s + omega_i - omega_p)
        - dispersion.signal.wavenumber(omega_s)
        - dispersion.idler.wavenumber(omega_i)
}

/// Build the FWM joint spectral amplitude by trapezoid quadrature of
/// `∫ dω_p α₁(ω_p) α₂(ω_s + ω_i - ω_p) sinc(Δk L / 2)` over the pump axis.
///
/// The quadrature axis covers ±5σ of both pump envelopes; `quadrature_points`
/// trapezoid nodes are used (at least 16).
pub fn build_fwm_jsa(
    pump1: &PumpEnvelope,
    pump2: &PumpEnvelope,
    dispersion: &DispersionModel,
    length: f64,
    grid: &FrequencyGrid,
    coupling_scale: f64,
    quadrature_points: usize,
) -> Result<JointSpectralAmplitude> {
    check_length(length)?;
    if quadrature_points < 16 {
        return Err(Error::invalid(
            "pump quadrature",
            format!("need at least 16 nodes, got {quadrature_points}"),
        ));
    }

    // Window where the first envelope is non-negligible, united with the
    // window where the second envelope (as a function of ω_p, over the full
    // range of grid sum frequencies) is non-negligible.
    let sum_min = grid.omega_s(0) + grid.omega_i(0);
    let sum_max = grid.omega_s(grid.n_s() - 1) + grid.omega_i(grid.n_i() - 1);
    let c1 = pump1.central_frequency();
    let w1 = pump1.width();
    let w2 = pump2.width();
    let lo = (c1 - 5.0 * w1).min(sum_min - pump2.central_frequency() - 5.0 * w2);
    let hi = (c1 + 5.0 * w1).max(sum_max - pump2.central_frequency() + 5.0 * w2);
    let h = (hi - lo) / (quadrature_points - 1) as f64;
    let nodes: Vec<f64> = (0..quadrature_points)
        .map(|j| lo + j as f64 * h)
        .collect();

    let values = DMatrix::from_fn(grid.n_s(), grid.n_i(), |s, i| {
        let omega_s = grid.omega_s(s);
        let omega_i = grid.omega_i(i);
        let sum = omega_s + omega_i;
        let mut acc = 0.0;
        for (j, &omega_p) in nodes.iter().enumerate() {
            let dk = fwm_phase_mismatch(dispersion, omega_p, omega_s, omega_i);
            let f = pump1.value(omega_p) * pump2.value(sum - omega_p) * sinc(0.5 * dk * length);
            let weight = if j == 0 || j == quadrature_points - 1 {
                0.5
            } else {
                1.0
            };
            acc += weight * f;
        }
        Complex64::new(coupling_scale * acc * h, 0.0)
    });
    JointSpectralAmplitude::from_values(grid.clone(), values, coupling_scale)
}

/// Heuristic grid for a source: `n_s × n_i` nodes centered on the signal and
/// idler reference frequencies, spanning ±4 of the combined pump and
/// phasematching marginal width on each axis.
pub fn auto_grid(
    pump_width: f64,
    dispersion: &DispersionModel,
    length: f64,
    n_s: usize,
    n_i: usize,
) -> Result<FrequencyGrid> {
    check_length(length)?;
    if pump_width.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::invalid("pump", "width must be > 0"));
    }
    let pm_width = |k1_diff: f64| -> f64 {
        if k1_diff == 0.0 {
            f64::INFINITY
        } else {
            // exp(-0.193 ((L/2) k1_diff ν)²) = exp(-ν²/(2 w²))
            1.0 / ((2.0 * GAUSSIAN_SINC_FACTOR).sqrt() * 0.5 * length * k1_diff.abs())
        }
    };
    let cap = 10.0 * pump_width;
    let w_s = pm_width(dispersion.pump.k1 - dispersion.signal.k1).min(cap);
    let w_i = pm_width(dispersion.pump.k1 - dispersion.idler.k1).min(cap);
    let half_s = 4.0 * (pump_width * pump_width + w_s * w_s).sqrt();
    let half_i = 4.0 * (pump_width * pump_width + w_i * w_i).sqrt();
    FrequencyGrid::centered(
        dispersion.signal.reference_frequency,
        half_s,
        n_s,
        dispersion.idler.reference_frequency,
        half_i,
        n_i,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn flat_dispersion() -> DispersionModel {
        let field = |k0: f64| FieldDispersion {
            reference_frequency: 0.0,
            k0,
            k1: 0.0,
            k2: 0.0,
        };
        DispersionModel {
            pump: field(2.0e7),
            signal: field(1.0e7),
            idler: field(1.0e7),
        }
    }

    #[test]
    fn grid_axis_is_exact_affine() {
        let grid = FrequencyGrid::new(1.0e15, 2.0e11, 64, 2.0e15, 1.0e11, 32).unwrap();
        assert_eq!(grid.omega_s(0), 1.0e15);
        assert_eq!(grid.omega_s(63), 1.0e15 + 63.0 * 2.0e11);
        assert_eq!(grid.omega_i(31), 2.0e15 + 31.0 * 1.0e11);
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(FrequencyGrid::new(0.0, 0.0, 4, 0.0, 1.0, 4).is_err());
        assert!(FrequencyGrid::new(0.0, -1.0, 4, 0.0, 1.0, 4).is_err());
        assert!(FrequencyGrid::new(0.0, 1.0, 1, 0.0, 1.0, 4).is_err());
        assert!(FrequencyGrid::new(0.0, 1.0, 4, 0.0, 1.0, 0).is_err());
    }

    #[test]
    fn pump_envelope_is_a_decaying_gaussian() {
        let pump = PumpEnvelope::new(2.0, 1.0e15, 1.0e12).unwrap();
        assert_eq!(pump.value(1.0e15), 2.0);
        // one sigma off-center: exp(-1/2)
        assert_relative_eq!(
            pump.value(1.0e15 + 1.0e12),
            2.0 * (-0.5f64).exp(),
            max_relative = 1e-14
        );
        assert!(pump.value(1.0e15 + 8.0e12) < pump.value(1.0e15));
    }

    #[test]
    fn phase_mismatch_vanishes_for_matched_constant_wavenumbers() {
        let disp = flat_dispersion();
        for (ws, wi) in [(0.0, 0.0), (1.0e12, -3.0e12), (5.0e14, 2.0e14)] {
            assert_eq!(phase_mismatch(&disp, ws, wi), 0.0);
        }
    }

    #[test]
    fn phase_mismatch_linear_pump_term() {
        // Only the pump carries group velocity: Δk = k1p (ν_s + ν_i).
        let mut disp = flat_dispersion();
        disp.pump.k1 = 5.0e-9;
        let dk = phase_mismatch(&disp, 1.0e12, 1.0e12);
        assert_relative_eq!(dk, 5.0e-9 * 2.0e12, max_relative = 1e-12);
        assert_abs_diff_eq!(dk, 1.0e4, epsilon = 1e-8);
    }

    #[test]
    fn phase_mismatch_symmetric_under_arm_exchange() {
        let mut disp = flat_dispersion();
        disp.pump.k1 = 3.0e-9;
        disp.pump.k2 = 1.0e-24;
        disp.signal.k1 = 1.0e-9;
        disp.signal.k2 = 2.0e-25;
        disp.idler = disp.signal.clone();
        for (ws, wi) in [(1.0e12, -2.0e12), (3.0e11, 7.0e11), (-5.0e12, 1.0e12)] {
            assert_eq!(
                phase_mismatch(&disp, ws, wi),
                phase_mismatch(&disp, wi, ws)
            );
        }
    }

    #[test]
    fn sinc_hits_unity_at_zero_and_respects_bounds() {
        assert_eq!(sinc(0.0), 1.0);
        let mut x = -40.0;
        while x <= 40.0 {
            let v = sinc(x);
            assert!((-0.21724..=1.0).contains(&v), "sinc({x}) = {v}");
            let g = phasematching_value(PhaseMatching::GaussianApprox, x);
            assert!(g > 0.0 && g <= 1.0);
            x += 0.01;
        }
    }

    #[test]
    fn gaussian_phasematching_matches_quoted_value_at_unit_argument() {
        let phi = phasematching_value(PhaseMatching::GaussianApprox, 1.0);
        assert_eq!(phi, (-0.193f64).exp());
        assert_abs_diff_eq!(phi, 0.8245, epsilon = 5e-5);
    }

    #[test]
    fn pdc_jsa_reduces_to_pump_envelope_when_phase_matched() {
        let pump = PumpEnvelope::new(1.0, 2.0e15, 1.0e12).unwrap();
        let disp = flat_dispersion();
        let grid = FrequencyGrid::centered(1.0e15, 4.0e12, 16, 1.0e15, 4.0e12, 16).unwrap();
        let scale = 0.3;
        let jsa = build_pdc_jsa(&pump, &disp, 0.01, &grid, PhaseMatching::ExactSinc, scale).unwrap();
        for s in 0..16 {
            for i in 0..16 {
                let expected = scale * pump.value(grid.omega_s(s) + grid.omega_i(i));
                assert_relative_eq!(jsa.values()[(s, i)].re, expected, max_relative = 1e-14);
                assert_eq!(jsa.values()[(s, i)].im, 0.0);
            }
        }
    }

    #[test]
    fn pdc_jsa_scales_linearly_in_coupling() {
        let pump = PumpEnvelope::new(1.0, 2.0e15, 1.0e12).unwrap();
        let mut disp = flat_dispersion();
        disp.signal.k1 = 2.0e-10;
        let grid = FrequencyGrid::centered(1.0e15, 3.0e12, 12, 1.0e15, 3.0e12, 12).unwrap();
        let a = build_pdc_jsa(&pump, &disp, 0.01, &grid, PhaseMatching::ExactSinc, 1.0).unwrap();
        let b = build_pdc_jsa(&pump, &disp, 0.01, &grid, PhaseMatching::ExactSinc, 2.5).unwrap();
        for (x, y) in a.values().iter().zip(b.values().iter()) {
            assert_relative_eq!(2.5 * x.re, y.re, max_relative = 1e-14);
        }
    }

    #[test]
    fn pdc_jsa_rejects_nonpositive_length() {
        let pump = PumpEnvelope::new(1.0, 2.0e15, 1.0e12).unwrap();
        let disp = flat_dispersion();
        let grid = FrequencyGrid::centered(1.0e15, 3.0e12, 8, 1.0e15, 3.0e12, 8).unwrap();
        let err = build_pdc_jsa(&pump, &disp, 0.0, &grid, PhaseMatching::ExactSinc, 1.0);
        assert!(err.is_err());
        let err = build_pdc_jsa(&pump, &disp, -1.0, &grid, PhaseMatching::ExactSinc, 1.0);
        assert!(err.is_err());
    }

    #[test]
    fn fwm_jsa_rejects_coarse_quadrature() {
        let pump = PumpEnvelope::new(1.0, 2.0e15, 1.0e12).unwrap();
        let disp = flat_dispersion();
        let grid = FrequencyGrid::centered(2.0e15, 3.0e12, 8, 2.0e15, 3.0e12, 8).unwrap();
        let err = build_fwm_jsa(&pump, &pump, &disp, 0.01, &grid, 1.0, 15);
        assert!(err.is_err());
    }

    #[test]
    fn fwm_phase_matched_equal_pumps_is_gaussian_autoconvolution() {
        // With Δk ≡ 0 the integral is the autoconvolution of the envelope:
        // ∫ α(ω) α(S - ω) dω = A² σ √π exp(-(S - 2μ)² / (4σ²)).
        let mu = 2.0e15;
        let sigma = 1.0e12;
        let amp = 1.3;
        let pump = PumpEnvelope::new(amp, mu, sigma).unwrap();
        let disp = flat_dispersion(); // k0p matched: 2 k0p = k0s + k0i needs k0p = 1e7
        let mut disp = disp;
        disp.pump.k0 = 1.0e7; // 2*1e7 - 1e7 - 1e7 = 0
        let grid = FrequencyGrid::centered(2.0e15, 3.0e12, 24, 2.0e15, 3.0e12, 24).unwrap();
        let jsa = build_fwm_jsa(&pump, &pump, &disp, 0.01, &grid, 1.0, 512).unwrap();
        for s in 0..24 {
            for i in 0..24 {
                let sum = grid.omega_s(s) + grid.omega_i(i);
                let d = sum - 2.0 * mu;
                let expected =
                    amp * amp * sigma * std::f64::consts::PI.sqrt() * (-d * d / (4.0 * sigma * sigma)).exp();
                assert_relative_eq!(jsa.values()[(s, i)].re, expected, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn fwm_quadrature_converged_at_default_resolution() {
        let pump1 = PumpEnvelope::new(1.0, 2.0e15, 1.2e12).unwrap();
        let pump2 = PumpEnvelope::new(0.8, 2.1e15, 0.9e12).unwrap();
        let mut disp = flat_dispersion();
        disp.pump.k0 = 1.0e7;
        disp.pump.k1 = 1.0e-10;
        disp.signal.k1 = 3.0e-10;
        let grid = FrequencyGrid::centered(2.05e15, 4.0e12, 20, 2.05e15, 4.0e12, 20).unwrap();
        let coarse = build_fwm_jsa(&pump1, &pump2, &disp, 0.01, &grid, 1.0, 256).unwrap();
        let fine = build_fwm_jsa(&pump1, &pump2, &disp, 0.01, &grid, 1.0, 512).unwrap();
        let peak = coarse
            .values()
            .iter()
            .map(|v| v.norm())
            .fold(0.0f64, f64::max);
        for (a, b) in coarse.values().iter().zip(fine.values().iter()) {
            assert!((a - b).norm() <= 1e-6 * peak, "quadrature not converged");
        }
    }

    #[test]
    fn fwm_symmetric_dispersion_gives_symmetric_jsa() {
        let pump = PumpEnvelope::new(1.0, 2.0e15, 1.0e12).unwrap();
        let mut disp = flat_dispersion();
        disp.pump.k0 = 1.0e7;
        disp.signal.k1 = 2.0e-10;
        disp.idler.k1 = 2.0e-10;
        // identical axes so (s, i) and (i, s) address the same frequencies
        let grid = FrequencyGrid::centered(2.0e15, 3.0e12, 16, 2.0e15, 3.0e12, 16).unwrap();
        let jsa = build_fwm_jsa(&pump, &pump, &disp, 0.02, &grid, 1.0, 128).unwrap();
        for s in 0..16 {
            for i in 0..16 {
                assert_relative_eq!(
                    jsa.values()[(s, i)].re,
                    jsa.values()[(i, s)].re,
                    max_relative = 1e-10,
                    epsilon = 1e-300
                );
            }
        }
    }

    #[test]
    fn from_values_checks_dimensions_and_finiteness() {
        let grid = FrequencyGrid::centered(0.0, 1.0, 4, 0.0, 1.0, 4).unwrap();
        let bad = DMatrix::from_element(3, 4, Complex64::new(0.0, 0.0));
        assert!(JointSpectralAmplitude::from_values(grid.clone(), bad, 1.0).is_err());
        let mut nan = DMatrix::from_element(4, 4, Complex64::new(0.0, 0.0));
        nan[(1, 2)] = Complex64::new(f64::NAN, 0.0);
        assert!(JointSpectralAmplitude::from_values(grid.clone(), nan, 1.0).is_err());
        let ok = DMatrix::from_element(4, 4, Complex64::new(1.0, 0.0));
        assert!(JointSpectralAmplitude::from_values(grid, ok, 1.0).is_ok());
    }

    #[test]
    fn auto_grid_centers_on_reference_frequencies() {
        let mut disp = flat_dispersion();
        disp.signal.reference_frequency = 1.1e15;
        disp.idler.reference_frequency = 0.9e15;
        disp.signal.k1 = 2.0e-10;
        let grid = auto_grid(1.0e12, &disp, 0.01, 128, 64).unwrap();
        assert_eq!(grid.n_s(), 128);
        assert_eq!(grid.n_i(), 64);
        let mid_s = 0.5 * (grid.omega_s(0) + grid.omega_s(127));
        assert_relative_eq!(mid_s, 1.1e15, max_relative = 1e-12);
    }
}
