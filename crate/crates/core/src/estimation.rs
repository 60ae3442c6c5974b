//! Inversion of measured correlation values into the physical benchmarks of
//! a multimode squeezer: mode number K, thermal parameter μ and gain B.
//!
//! Twin beams invert in closed form from g² and g⁽¹'¹⁾. Single beams need a
//! joint look at g³ against g²: the slope of that curve in the low-gain
//! window encodes K and μ, inverted here through precomputed monotone
//! calibration tables.

use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use crate::correlations::{g11_twin, g2_single, g3_single};
use crate::decomposition::SqueezerSpectrum;
use crate::{Error, Result};

/// Gain window used to calibrate the slope tables.
pub const SLOPE_WINDOW: (f64, f64) = (0.01, 0.3);

/// Points per sweep when building the slope tables.
const SLOPE_TABLE_POINTS: usize = 24;

/// Bisection bracket for gain inversions.
const GAIN_BRACKET: (f64, f64) = (1e-6, 10.0);

/// Which physical quantity an estimate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    K,
    #[serde(rename = "mu")]
    Mu,
    B,
}

/// A point estimate of one benchmark together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub quantity: Quantity,
    pub value: f64,
    pub method: String,
    pub valid_domain_note: String,
}

impl EstimationResult {
    fn new(quantity: Quantity, value: f64, method: &str, note: &str) -> Self {
        Self {
            quantity,
            value,
            method: method.to_string(),
            valid_domain_note: note.to_string(),
        }
    }
}

/// A swept (g², g³) curve and the least-squares slope of g³ against g².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeCurve {
    /// (g², g³) pairs ordered by increasing gain.
    pub points: Vec<(f64, f64)>,
    /// Least-squares slope of g³ as a function of g².
    pub slope: f64,
}

/// Mode number from a low-gain twin-beam g²: `K = 1 / (g² - 1)`.
pub fn estimate_k_from_g2(g2: f64) -> Result<EstimationResult> {
    if !g2.is_finite() || g2 <= 1.0 || g2 > 2.0 {
        return Err(Error::domain(format!(
            "g2 = {g2} outside twin-beam low-gain domain (1, 2]"
        )));
    }
    Ok(EstimationResult::new(
        Quantity::K,
        1.0 / (g2 - 1.0),
        "lowgain_inverse_g2",
        "assumes low gain; K is exact for a uniform mode distribution",
    ))
}

/// Thermal parameter from a low-gain twin-beam g²: `μ = √(2/g² - 1)`.
pub fn estimate_mu_from_g2(g2: f64) -> Result<EstimationResult> {
    if !(1.0..=2.0).contains(&g2) {
        return Err(Error::domain(format!(
            "g2 = {g2} outside twin-beam low-gain domain [1, 2]"
        )));
    }
    Ok(EstimationResult::new(
        Quantity::Mu,
        (2.0 / g2 - 1.0).sqrt(),
        "lowgain_inverse_g2",
        "assumes low gain and a geometric mode distribution",
    ))
}

/// Bisection for a decreasing forward map; the target must be bracketed.
fn invert_decreasing(
    forward: impl Fn(f64) -> f64,
    target: f64,
    bracket: (f64, f64),
    above_err: &str,
    below_err: &str,
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if target > forward(lo) {
        return Err(Error::domain(above_err.to_string()));
    }
    if target < forward(hi) {
        return Err(Error::domain(below_err.to_string()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-14 * mid {
            break;
        }
        if forward(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn normalized_distribution(lambda: &[f64]) -> Result<SqueezerSpectrum> {
    SqueezerSpectrum::from_distribution(lambda.to_vec(), 1.0)
}

/// Optical gain from a twin-beam g⁽¹'¹⁾ measurement.
///
/// Without a mode distribution the low-gain closed form `B ≈ 1/√g¹¹` is
/// returned. With one, the exact forward map is inverted by bisection on
/// `B ∈ [1e-6, 10]`, valid where the map is still decreasing.
pub fn estimate_b_from_g11(g11: f64, lambda: Option<&[f64]>) -> Result<EstimationResult> {
    if !g11.is_finite() || g11 <= 1.0 {
        return Err(Error::domain(format!("g11 = {g11} must exceed 1")));
    }
    let Some(lambda) = lambda else {
        return Ok(EstimationResult::new(
            Quantity::B,
            1.0 / g11.sqrt(),
            "lowgain_inverse_g11",
            "low-gain closed form; accurate for B below roughly 0.05",
        ));
    };
    let base = normalized_distribution(lambda)?;
    let forward = |gain: f64| {
        g11_twin(&base.with_gain(gain).expect("valid distribution"))
            .expect("nonzero gain")
            .value
    };
    let gain = invert_decreasing(
        forward,
        g11,
        GAIN_BRACKET,
        &format!("g11 = {g11} above the inversion bracket (gain below 1e-6)"),
        &format!("g11 = {g11} below high-gain asymptote of the mode distribution"),
    )?;
    Ok(EstimationResult::new(
        Quantity::B,
        gain,
        "bisection_g11",
        "exact inversion of the twin-beam forward map over B in [1e-6, 10]",
    ))
}

/// Sweep the single-beam (g², g³) curve over a gain range and fit its slope.
pub fn sweep_single_beam_curve(
    lambda: &[f64],
    b_range: (f64, f64),
    n_points: usize,
) -> Result<SlopeCurve> {
    let (b_min, b_max) = b_range;
    let range_ok = b_min > 0.0 && b_max > b_min && b_max <= 3.0;
    if !range_ok {
        return Err(Error::invalid(
            "sweep range",
            format!("need 0 < min < max <= 3, got ({b_min}, {b_max})"),
        ));
    }
    if n_points < 8 {
        return Err(Error::invalid(
            "sweep range",
            format!("need at least 8 points, got {n_points}"),
        ));
    }
    let base = normalized_distribution(lambda)?;
    let step = (b_max - b_min) / (n_points - 1) as f64;
    let mut points = Vec::with_capacity(n_points);
    for j in 0..n_points {
        let spectrum = base.with_gain(b_min + j as f64 * step)?;
        points.push((g2_single(&spectrum)?.value, g3_single(&spectrum)?.value));
    }
    let slope = least_squares_slope(&points);
    Ok(SlopeCurve { points, slope })
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    sxy / sxx
}

struct SlopeTable {
    /// Parameter values, ascending.
    param: Vec<f64>,
    /// Slope at each parameter; strictly decreasing in the parameter.
    slope: Vec<f64>,
}

impl SlopeTable {
    /// Invert slope -> parameter by linear interpolation.
    fn invert(&self, slope: f64, what: &str) -> Result<f64> {
        let max = self.slope[0];
        let min = *self.slope.last().unwrap();
        if slope > max || slope < min {
            return Err(Error::domain(format!(
                "slope {slope} outside calibrated range [{min}, {max}] for {what}"
            )));
        }
        let pos = self
            .slope
            .windows(2)
            .position(|w| slope <= w[0] && slope >= w[1])
            .expect("bracketed by range check");
        let (s0, s1) = (self.slope[pos], self.slope[pos + 1]);
        let (p0, p1) = (self.param[pos], self.param[pos + 1]);
        let t = if s1 == s0 { 0.0 } else { (slope - s0) / (s1 - s0) };
        Ok(p0 + t * (p1 - p0))
    }
}

struct SlopeTables {
    mu: SlopeTable,
    k_uniform: SlopeTable,
}

/// Modes needed so a truncated geometric distribution carries all but 1e-14
/// of its weight.
pub fn thermal_mode_count(mu: f64) -> usize {
    if mu == 0.0 {
        1
    } else {
        let n = ((1e-14f64).ln() / (2.0 * mu.ln())).ceil() as usize;
        n.clamp(4, 2048)
    }
}

fn build_tables() -> SlopeTables {
    let mu_values: Vec<f64> = (0..=95).map(|i| i as f64 * 0.01).collect();
    let mut mu_slopes = Vec::with_capacity(mu_values.len());
    for &mu in &mu_values {
        let spectrum = SqueezerSpectrum::thermal(mu, thermal_mode_count(mu), 1.0)
            .expect("valid thermal distribution");
        let curve = sweep_single_beam_curve(spectrum.lambda(), SLOPE_WINDOW, SLOPE_TABLE_POINTS)
            .expect("valid calibration sweep");
        mu_slopes.push(curve.slope);
    }
    assert!(
        mu_slopes.windows(2).all(|w| w[0] > w[1]),
        "slope(mu) calibration table must be strictly decreasing"
    );

    let k_values: Vec<f64> = (1..=32).map(|k| k as f64).collect();
    let mut k_slopes = Vec::with_capacity(k_values.len());
    for k in 1..=32usize {
        let spectrum = SqueezerSpectrum::uniform(k, 1.0).expect("valid uniform distribution");
        let curve = sweep_single_beam_curve(spectrum.lambda(), SLOPE_WINDOW, SLOPE_TABLE_POINTS)
            .expect("valid calibration sweep");
        k_slopes.push(curve.slope);
    }
    assert!(
        k_slopes.windows(2).all(|w| w[0] > w[1]),
        "slope(K) calibration table must be strictly decreasing"
    );

    SlopeTables {
        mu: SlopeTable {
            param: mu_values,
            slope: mu_slopes,
        },
        k_uniform: SlopeTable {
            param: k_values,
            slope: k_slopes,
        },
    }
}

fn tables() -> &'static SlopeTables {
    static TABLES: OnceLock<SlopeTables> = OnceLock::new();
    TABLES.get_or_init(build_tables)
}

/// Calibration table (μ, slope) used by [`map_slope_to_mu`].
pub fn slope_table_mu() -> Vec<(f64, f64)> {
    let t = tables();
    t.mu.param.iter().copied().zip(t.mu.slope.iter().copied()).collect()
}

/// Calibration table (K, slope) used by [`map_slope_to_k`].
pub fn slope_table_k() -> Vec<(f64, f64)> {
    let t = tables();
    t.k_uniform
        .param
        .iter()
        .copied()
        .zip(t.k_uniform.slope.iter().copied())
        .collect()
}

/// Mode number of a single-beam squeezer from the g³-vs-g² slope, assuming
/// a uniform mode distribution.
pub fn map_slope_to_k(slope: f64) -> Result<EstimationResult> {
    let value = tables().k_uniform.invert(slope, "uniform K")?;
    Ok(EstimationResult::new(
        Quantity::K,
        value,
        "slope_table_uniform",
        "calibrated on uniform distributions with gain in [0.01, 0.3]",
    ))
}

/// Thermal parameter of a single-beam squeezer from the g³-vs-g² slope.
pub fn map_slope_to_mu(slope: f64) -> Result<EstimationResult> {
    let value = tables().mu.invert(slope, "thermal mu")?;
    Ok(EstimationResult::new(
        Quantity::Mu,
        value,
        "slope_table_thermal",
        "calibrated on geometric distributions with gain in [0.01, 0.3]",
    ))
}

/// Optical gain of a single-beam squeezer from its g².
///
/// For g² > 100 the low-gain closed form `B = 1/√g²` applies; otherwise the
/// exact forward map for the given mode distribution is inverted by
/// bisection.
pub fn estimate_b_single_from_g2(g2: f64, lambda: &[f64]) -> Result<EstimationResult> {
    if !g2.is_finite() || g2 <= 1.0 {
        return Err(Error::domain(format!("g2 = {g2} must exceed 1")));
    }
    if g2 > 100.0 {
        return Ok(EstimationResult::new(
            Quantity::B,
            1.0 / g2.sqrt(),
            "lowgain_inverse_g2",
            "low-gain closed form; applied for g2 > 100",
        ));
    }
    let base = normalized_distribution(lambda)?;
    let forward = |gain: f64| {
        g2_single(&base.with_gain(gain).expect("valid distribution"))
            .expect("nonzero gain")
            .value
    };
    let gain = invert_decreasing(
        forward,
        g2,
        GAIN_BRACKET,
        &format!("g2 = {g2} above the inversion bracket (gain below 1e-6)"),
        &format!("g2 = {g2} below high-gain asymptote of the mode distribution"),
    )?;
    Ok(EstimationResult::new(
        Quantity::B,
        gain,
        "bisection_g2_single",
        "exact inversion of the single-beam forward map over B in [1e-6, 10]",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::g2_twin_lowgain;
    use crate::decomposition::schmidt_number;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn k_from_g2_examples() {
        assert_abs_diff_eq!(estimate_k_from_g2(2.0).unwrap().value, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(estimate_k_from_g2(1.5).unwrap().value, 2.0, epsilon = 1e-14);
        let thermal = SqueezerSpectrum::thermal(0.6, 256, 1.0).unwrap();
        let g2 = g2_twin_lowgain(&thermal).value;
        assert_abs_diff_eq!(estimate_k_from_g2(g2).unwrap().value, 2.125, epsilon = 1e-9);

        for bad in [1.0, 0.9, 2.0001, 3.0] {
            let err = estimate_k_from_g2(bad).unwrap_err();
            assert!(err.to_string().contains("outside twin-beam low-gain domain"));
        }
    }

    #[test]
    fn mu_from_g2_examples() {
        assert_abs_diff_eq!(estimate_mu_from_g2(2.0).unwrap().value, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(estimate_mu_from_g2(1.0).unwrap().value, 1.0, epsilon = 1e-14);
        let thermal = SqueezerSpectrum::thermal(0.6, 256, 1.0).unwrap();
        let g2 = g2_twin_lowgain(&thermal).value;
        assert_abs_diff_eq!(estimate_mu_from_g2(g2).unwrap().value, 0.6, epsilon = 1e-6);
        assert!(estimate_mu_from_g2(0.99).is_err());
        assert!(estimate_mu_from_g2(2.01).is_err());
    }

    #[test]
    fn k_and_mu_round_trips_recover_spectrum_benchmarks() {
        for k in [1usize, 2, 4, 8, 16] {
            let spectrum = SqueezerSpectrum::uniform(k, 0.7).unwrap();
            let g2 = g2_twin_lowgain(&spectrum).value;
            let est = estimate_k_from_g2(g2).unwrap().value;
            assert_abs_diff_eq!(est, schmidt_number(&spectrum), epsilon = 1e-9);
            assert_abs_diff_eq!(est, k as f64, epsilon = 1e-9);
        }
        for i in 1..=9 {
            let mu = i as f64 * 0.1;
            let spectrum = SqueezerSpectrum::thermal(mu, 512, 0.3).unwrap();
            let g2 = g2_twin_lowgain(&spectrum).value;
            assert_abs_diff_eq!(estimate_mu_from_g2(g2).unwrap().value, mu, epsilon = 1e-6);
        }
    }

    #[test]
    fn b_from_g11_closed_form_and_round_trips() {
        let est = estimate_b_from_g11(1.0e4, None).unwrap();
        assert_abs_diff_eq!(est.value, 0.01, epsilon = 1e-12);

        // single-mode round trip
        let single = SqueezerSpectrum::from_distribution(vec![1.0], 0.3).unwrap();
        let g11 = g11_twin(&single).unwrap().value;
        let est = estimate_b_from_g11(g11, Some(&[1.0])).unwrap();
        assert_relative_eq!(est.value, 0.3, max_relative = 1e-8);

        // thermal mu = 0.6 at B = 1.2: exact inversion works, closed form is
        // off by far more than 5 percent
        let thermal = SqueezerSpectrum::thermal(0.6, 128, 1.2).unwrap();
        let g11 = g11_twin(&thermal).unwrap().value;
        let est = estimate_b_from_g11(g11, Some(thermal.lambda())).unwrap();
        assert_relative_eq!(est.value, 1.2, max_relative = 1e-8);
        let closed = estimate_b_from_g11(g11, None).unwrap().value;
        assert!((closed - 1.2).abs() / 1.2 > 0.05);

        assert!(estimate_b_from_g11(1.0, None).is_err());
        assert!(estimate_b_from_g11(0.5, None).is_err());
        // below the high-gain asymptote of a single mode (g11 -> 2)
        let err = estimate_b_from_g11(1.5, Some(&[1.0])).unwrap_err();
        assert!(err.to_string().contains("below high-gain asymptote"));
    }

    #[test]
    fn sweep_guards_and_shape() {
        let err = sweep_single_beam_curve(&[1.0], (0.2, 0.2), 16).unwrap_err();
        assert!(matches!(err, Error::InvalidInput { .. }));
        assert!(sweep_single_beam_curve(&[1.0], (0.0, 0.3), 16).is_err());
        assert!(sweep_single_beam_curve(&[1.0], (0.1, 3.5), 16).is_err());
        assert!(sweep_single_beam_curve(&[1.0], (0.01, 0.3), 7).is_err());

        let curve = sweep_single_beam_curve(&[1.0], SLOPE_WINDOW, 24).unwrap();
        assert_eq!(curve.points.len(), 24);
        // single mode: g3 = 15 + 9 (g2 - 3) exactly, slope 9 at every gain
        assert_relative_eq!(curve.slope, 9.0, max_relative = 1e-9);
        for (g2, g3) in &curve.points {
            assert_relative_eq!(*g3, 15.0 + 9.0 * (g2 - 3.0), max_relative = 1e-9);
        }
    }

    #[test]
    fn slopes_are_monotone_in_mu() {
        let mut last = f64::INFINITY;
        for i in 0..=9 {
            let mu = i as f64 * 0.1;
            let spectrum = SqueezerSpectrum::thermal(mu, thermal_mode_count(mu), 1.0).unwrap();
            let curve =
                sweep_single_beam_curve(spectrum.lambda(), SLOPE_WINDOW, 24).unwrap();
            assert!(curve.slope < last, "slope not decreasing at mu = {mu}");
            last = curve.slope;
        }
    }

    #[test]
    fn slope_round_trips() {
        // single mode through the table: K = 1 within 1 percent
        let curve = sweep_single_beam_curve(&[1.0], SLOPE_WINDOW, 24).unwrap();
        let k = map_slope_to_k(curve.slope).unwrap().value;
        assert_relative_eq!(k, 1.0, max_relative = 0.01);
        let mu = map_slope_to_mu(curve.slope).unwrap().value;
        assert_abs_diff_eq!(mu, 0.0, epsilon = 0.01);

        for mu_true in [0.3, 0.6, 0.9] {
            let spectrum =
                SqueezerSpectrum::thermal(mu_true, thermal_mode_count(mu_true), 1.0).unwrap();
            let curve = sweep_single_beam_curve(spectrum.lambda(), SLOPE_WINDOW, 24).unwrap();
            let est = map_slope_to_mu(curve.slope).unwrap().value;
            assert_relative_eq!(est, mu_true, max_relative = 0.02);
        }

        for k_true in [1usize, 2, 4] {
            let spectrum = SqueezerSpectrum::uniform(k_true, 1.0).unwrap();
            let curve = sweep_single_beam_curve(spectrum.lambda(), SLOPE_WINDOW, 24).unwrap();
            let est = map_slope_to_k(curve.slope).unwrap().value;
            assert_relative_eq!(est, k_true as f64, max_relative = 0.02);
        }
    }

    #[test]
    fn slope_out_of_range_is_rejected() {
        let err = map_slope_to_mu(100.0).unwrap_err();
        assert!(err.to_string().contains("outside calibrated range"));
        let err = map_slope_to_k(1.0).unwrap_err();
        assert!(err.to_string().contains("outside calibrated range"));
    }

    #[test]
    fn b_single_from_g2_examples() {
        let est = estimate_b_single_from_g2(1.0e4, &[1.0]).unwrap();
        assert_abs_diff_eq!(est.value, 0.01, epsilon = 1e-12);

        let single = SqueezerSpectrum::from_distribution(vec![1.0], 0.5).unwrap();
        let g2 = g2_single(&single).unwrap().value;
        let est = estimate_b_single_from_g2(g2, &[1.0]).unwrap();
        assert_relative_eq!(est.value, 0.5, max_relative = 1e-8);

        // exactly at the single-mode asymptote: no finite gain reaches 3
        let err = estimate_b_single_from_g2(3.0, &[1.0]).unwrap_err();
        assert!(err.to_string().contains("below high-gain asymptote"));
    }
}
