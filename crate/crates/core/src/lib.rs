//! Characterization toolkit for spectrally multimode squeezed light.
//!
//! The crate covers the full chain from source model to measured observable:
//!
//! * [`spectral`] builds discretized joint spectral amplitudes for parametric
//!   downconversion and four-wave mixing sources.
//! * [`decomposition`] splits a joint spectral amplitude into independent
//!   broadband squeezers via singular-value decomposition and fits the
//!   geometric (thermal) mode distribution.
//! * [`correlations`] evaluates broadband multimode correlation functions
//!   g⁽ⁿ⁾ and cross-correlations g⁽ⁿ'ᵐ⁾ in closed form.
//! * [`estimation`] inverts measured correlation values into the physical
//!   benchmarks: mode number K, thermal parameter μ and optical gain B.
//! * [`simulator`] is a Monte-Carlo photon-counting oracle with detector
//!   loss that validates the closed forms and their loss independence.
//! * [`export`] serializes the domain types to CSV and JSON.

pub mod correlations;
pub mod decomposition;
pub mod estimation;
pub mod export;
pub mod simulator;
pub mod spectral;

pub use correlations::{BeamKind, CorrelationValue, MeanPhoton, OrderSpec};
pub use decomposition::{SchmidtModes, SqueezerSpectrum, ThermalModeFit};
pub use estimation::{EstimationResult, Quantity, SlopeCurve};
pub use simulator::{DetectorMode, DetectorModel, EstimatedCorrelation, PulseEnsemble};
pub use spectral::{
    DispersionModel, FieldDispersion, FrequencyGrid, JointSpectralAmplitude, PhaseMatching,
    PumpEnvelope,
};

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A structural precondition on an input failed.
    #[error("invalid {what}: {why}")]
    InvalidInput {
        what: &'static str,
        why: String,
    },

    /// Every entry of the joint spectral amplitude is zero.
    #[error("degenerate spectrum: every joint amplitude is zero")]
    DegenerateSpectrum,

    /// Thermal fitting needs at least three modes above threshold.
    #[error("insufficient modes for thermal fit: {usable} usable, need at least 3")]
    InsufficientModes { usable: usize },

    /// Correlation functions of the vacuum state are undefined.
    #[error("vacuum has undefined {order}")]
    Vacuum { order: &'static str },

    /// Requested correlation order is outside the supported range.
    #[error("order unsupported: {why}")]
    OrderUnsupported { why: String },

    /// A measured value lies outside the domain an estimator can invert.
    #[error("{why}")]
    OutOfDomain { why: String },

    /// Squeezing amplitude too large for safe inverse-CDF table truncation.
    #[error("tail truncation unsafe: squeezing amplitude {max_r} exceeds {limit}")]
    TailTruncationUnsafe { max_r: f64, limit: f64 },

    /// An ensemble carries no detected photons.
    #[error("no counts: ensemble mean photon number is zero")]
    NoCounts,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(what: &'static str, why: impl Into<String>) -> Self {
        Error::InvalidInput {
            what,
            why: why.into(),
        }
    }

    pub(crate) fn domain(why: impl Into<String>) -> Self {
        Error::OutOfDomain { why: why.into() }
    }
}
