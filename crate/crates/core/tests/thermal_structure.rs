//! A Gaussian-approximated PDC kernel is an anticorrelated two-dimensional
//! Gaussian, whose Schmidt spectrum is geometric. These tests pin the whole
//! chain: build the kernel, decompose it, fit the geometric law and compare
//! against the analytic prediction for the squeezer distribution of a
//! Gaussian kernel exp(-a(x+y)² - b(x-y)²).

use approx::assert_relative_eq;
use squeezelab::correlations::g2_twin_lowgain;
use squeezelab::decomposition::{fit_thermal, schmidt_decompose, schmidt_number};
use squeezelab::estimation::estimate_mu_from_g2;
use squeezelab::spectral::{
    build_pdc_jsa, DispersionModel, FieldDispersion, FrequencyGrid, PhaseMatching, PumpEnvelope,
};

const PUMP_SIGMA: f64 = 1.0e12; // rad/s
const LENGTH: f64 = 0.01; // m
const GV_OFFSET: f64 = 8.05e-11; // s/m, k1 offset of signal/idler from pump

fn pump() -> PumpEnvelope {
    PumpEnvelope::new(1.0, 2.4e15, PUMP_SIGMA).unwrap()
}

/// Group-velocity matched configuration: signal and idler k1 offsets are
/// opposite, so the phasematching depends only on the difference frequency
/// and the kernel is exp(-a(ν_s+ν_i)² - b(ν_s-ν_i)²).
fn dispersion() -> DispersionModel {
    DispersionModel {
        pump: FieldDispersion {
            reference_frequency: 2.4e15,
            k0: 1.2e7,
            k1: 5.0e-9,
            k2: 0.0,
        },
        signal: FieldDispersion {
            reference_frequency: 1.2e15,
            k0: 6.0e6,
            k1: 5.0e-9 - GV_OFFSET,
            k2: 0.0,
        },
        idler: FieldDispersion {
            reference_frequency: 1.2e15,
            k0: 6.0e6,
            k1: 5.0e-9 + GV_OFFSET,
            k2: 0.0,
        },
    }
}

fn grid(n: usize) -> FrequencyGrid {
    // ±5.5 marginal standard deviations so that even the weakly occupied
    // modes fit inside the window
    let a = 1.0 / (2.0 * PUMP_SIGMA * PUMP_SIGMA);
    let b = gaussian_b();
    let sigma_marginal = ((a + b) / (8.0 * a * b)).sqrt();
    FrequencyGrid::centered(1.2e15, 5.5 * sigma_marginal, n, 1.2e15, 5.5 * sigma_marginal, n)
        .unwrap()
}

/// Exponent coefficient of the Gaussian phasematching along (ν_s - ν_i).
fn gaussian_b() -> f64 {
    0.193 * (0.5 * LENGTH * GV_OFFSET).powi(2)
}

/// Analytic squeezer-distribution decay of exp(-a(x+y)² - b(x-y)²): the
/// Schmidt basis is Hermite and λ_k ∝ μ^k with 2μ/(1+μ²) = |a-b|/(a+b).
fn analytic_mu() -> f64 {
    let a = 1.0 / (2.0 * PUMP_SIGMA * PUMP_SIGMA);
    let b = gaussian_b();
    let kappa = (a - b).abs() / (a + b);
    (1.0 - (1.0 - kappa * kappa).sqrt()) / kappa
}

fn build(n: usize) -> squeezelab::JointSpectralAmplitude {
    build_pdc_jsa(
        &pump(),
        &dispersion(),
        LENGTH,
        &grid(n),
        PhaseMatching::GaussianApprox,
        4.0e-13,
    )
    .unwrap()
}

#[test]
fn double_gaussian_kernel_has_geometric_mode_distribution() {
    let (spectrum, _) = schmidt_decompose(&build(128)).unwrap();
    let fit = fit_thermal(&spectrum).unwrap();
    assert!(
        fit.residual < 1e-3,
        "geometric fit residual too large: {}",
        fit.residual
    );

    let mu = analytic_mu();
    assert_relative_eq!(fit.mu, mu, max_relative = 1e-3);

    let k_analytic = (1.0 + mu * mu) / (1.0 - mu * mu);
    assert_relative_eq!(schmidt_number(&spectrum), k_analytic, max_relative = 3e-3);
}

#[test]
fn schmidt_number_is_stable_under_grid_refinement() {
    let (coarse, _) = schmidt_decompose(&build(64)).unwrap();
    let (fine, _) = schmidt_decompose(&build(128)).unwrap();
    let k64 = schmidt_number(&coarse);
    let k128 = schmidt_number(&fine);
    assert!(
        (k64 - k128).abs() / k128 < 1e-3,
        "K not converged: {k64} vs {k128}"
    );
}

#[test]
fn fitted_mu_agrees_with_g2_round_trip() {
    let (spectrum, _) = schmidt_decompose(&build(128)).unwrap();
    let fit = fit_thermal(&spectrum).unwrap();
    let g2 = g2_twin_lowgain(&spectrum).value;
    let mu_from_g2 = estimate_mu_from_g2(g2).unwrap().value;
    assert!(
        (fit.mu - mu_from_g2).abs() < 1e-3,
        "mu mismatch: fit {} vs g2 inversion {}",
        fit.mu,
        mu_from_g2
    );
}

#[test]
fn gain_scales_linearly_with_coupling_while_modes_do_not_move() {
    let jsa_weak = build_pdc_jsa(
        &pump(),
        &dispersion(),
        LENGTH,
        &grid(64),
        PhaseMatching::GaussianApprox,
        2.0e-13,
    )
    .unwrap();
    let jsa_strong = build_pdc_jsa(
        &pump(),
        &dispersion(),
        LENGTH,
        &grid(64),
        PhaseMatching::GaussianApprox,
        6.0e-13,
    )
    .unwrap();
    let (weak, _) = schmidt_decompose(&jsa_weak).unwrap();
    let (strong, _) = schmidt_decompose(&jsa_strong).unwrap();
    assert_relative_eq!(strong.gain(), 3.0 * weak.gain(), max_relative = 1e-10);
    for (a, b) in weak.lambda().iter().zip(strong.lambda().iter()) {
        assert!((a - b).abs() < 1e-10);
    }
}
