//! Monte-Carlo photon-counting oracle with detector loss.
//!
//! Pulses are sampled independently: every mode of a twin-beam squeezer
//! draws a geometric (thermal) photon number shared exactly between signal
//! and idler, every mode of a single-beam squeezer draws an even photon
//! number from the squeezed-vacuum distribution. Detector loss is binomial
//! thinning per arm. Correlation functions are then estimated from the
//! per-pulse records as normalized factorial moments with jackknife errors,
//! which is what makes the estimates loss independent.
//!
//! Each pulse derives its randomness from its own counter-selected stream of
//! the seeded generator, so ensembles are reproducible and independent of
//! how the pulse loop is scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::correlations::OrderSpec;
use crate::decomposition::SqueezerSpectrum;
use crate::{Error, Result};

/// Largest squeezing amplitude the single-beam sampler accepts.
pub const MAX_SINGLE_BEAM_AMPLITUDE: f64 = 5.0;

/// Cumulative mass kept when truncating the single-beam photon distribution.
const TABLE_MASS: f64 = 1.0 - 1e-12;

/// Number of jackknife blocks for standard errors.
const JACKKNIFE_BLOCKS: usize = 20;

const TWIN_STREAM: u64 = 1 << 56;
const SINGLE_STREAM: u64 = 2 << 56;
const HBT_STREAM: u64 = 3 << 56;

/// Detector efficiencies per arm and readout mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectorModel {
    efficiency_signal: f64,
    efficiency_idler: f64,
    mode: DetectorMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorMode {
    NumberResolving,
    HbtClick,
}

impl DetectorModel {
    pub fn new(efficiency_signal: f64, efficiency_idler: f64, mode: DetectorMode) -> Result<Self> {
        for (name, eta) in [
            ("efficiency_signal", efficiency_signal),
            ("efficiency_idler", efficiency_idler),
        ] {
            let eta_ok = eta > 0.0 && eta <= 1.0;
            if !eta_ok {
                return Err(Error::invalid(
                    "detector",
                    format!("{name} must lie in (0, 1], got {eta}"),
                ));
            }
        }
        Ok(Self {
            efficiency_signal,
            efficiency_idler,
            mode,
        })
    }

    pub fn efficiency_signal(&self) -> f64 {
        self.efficiency_signal
    }

    pub fn efficiency_idler(&self) -> f64 {
        self.efficiency_idler
    }

    pub fn mode(&self) -> DetectorMode {
        self.mode
    }
}

/// Per-pulse photon-count records after detector loss.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseEnsemble {
    records: Vec<(u32, u32)>,
    seed: u64,
    spectrum_hash: String,
}

impl PulseEnsemble {
    /// Wrap externally produced records (used by tests and file import).
    pub fn from_records(records: Vec<(u32, u32)>, seed: u64, spectrum_hash: String) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::invalid("ensemble", "no pulse records"));
        }
        Ok(Self {
            records,
            seed,
            spectrum_hash,
        })
    }

    pub fn n_pulses(&self) -> usize {
        self.records.len()
    }

    /// (n_signal, n_idler) per pulse.
    pub fn records(&self) -> &[(u32, u32)] {
        &self.records
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Digest of the generating spectrum, for provenance checks.
    pub fn spectrum_hash(&self) -> &str {
        &self.spectrum_hash
    }

    pub fn mean_signal(&self) -> f64 {
        self.records.iter().map(|r| r.0 as f64).sum::<f64>() / self.records.len() as f64
    }

    pub fn mean_idler(&self) -> f64 {
        self.records.iter().map(|r| r.1 as f64).sum::<f64>() / self.records.len() as f64
    }
}

/// Per-pulse numerator term of a factorial-moment estimator.
type PulseNumerator = Box<dyn Fn(&(u32, u32)) -> f64>;

/// An estimated correlation value with its jackknife standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatedCorrelation {
    pub order: String,
    pub value: f64,
    pub stderr: f64,
}

/// SHA-256 digest of the gain and mode distribution of a spectrum.
pub fn spectrum_digest(spectrum: &SqueezerSpectrum) -> String {
    let mut hasher = Sha256::new();
    hasher.update(spectrum.gain().to_bits().to_le_bytes());
    for l in spectrum.lambda() {
        hasher.update(l.to_bits().to_le_bytes());
    }
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn pulse_rng(base: &ChaCha8Rng, stream_tag: u64, pulse: u64) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(stream_tag | pulse);
    rng
}

/// Geometric photon number with P(n) = (1-q) q^n via inverse CDF;
/// `ln_q = ln(n̄ / (1 + n̄))`.
fn sample_geometric(rng: &mut ChaCha8Rng, ln_q: f64) -> u32 {
    let u: f64 = 1.0 - rng.random::<f64>(); // in (0, 1]
    (u.ln() / ln_q) as u32
}

/// Binomial thinning: each photon survives independently with probability
/// `eta`.
fn thin(rng: &mut ChaCha8Rng, n: u32, eta: f64) -> u32 {
    if eta >= 1.0 || n == 0 {
        return n;
    }
    Binomial::new(n as u64, eta)
        .expect("eta validated")
        .sample(rng) as u32
}

/// Sample per-pulse twin-beam records.
///
/// Per mode the photon number is geometric with mean sinh² r_k; signal and
/// idler share it exactly before loss. Each arm is then thinned with its
/// detector efficiency.
pub fn sample_twin_beam(
    spectrum: &SqueezerSpectrum,
    detector: &DetectorModel,
    n_pulses: usize,
    seed: u64,
) -> Result<PulseEnsemble> {
    if n_pulses == 0 {
        return Err(Error::invalid("n_pulses", "need at least one pulse"));
    }
    let ln_q: Vec<f64> = spectrum
        .amplitudes()
        .iter()
        .filter(|r| **r > 0.0)
        .map(|r| {
            let nb = r.sinh().powi(2);
            (nb / (1.0 + nb)).ln()
        })
        .collect();
    let base = ChaCha8Rng::seed_from_u64(seed);
    let eta_s = detector.efficiency_signal();
    let eta_i = detector.efficiency_idler();
    let records: Vec<(u32, u32)> = (0..n_pulses as u64)
        .into_par_iter()
        .map(|pulse| {
            let mut rng = pulse_rng(&base, TWIN_STREAM, pulse);
            let mut total: u32 = 0;
            for lq in &ln_q {
                total = total.saturating_add(sample_geometric(&mut rng, *lq));
            }
            let n_s = thin(&mut rng, total, eta_s);
            let n_i = thin(&mut rng, total, eta_i);
            (n_s, n_i)
        })
        .collect();
    PulseEnsemble::from_records(records, seed, spectrum_digest(spectrum))
}

/// Cumulative distribution of the even photon number of one squeezed-vacuum
/// mode, truncated at cumulative mass `TABLE_MASS`.
fn squeezed_vacuum_cdf(r: f64) -> Vec<f64> {
    let t = r.tanh().powi(2);
    let mut p = 1.0 / r.cosh(); // P(n = 0)
    let mut cum = p;
    let mut table = vec![cum];
    let mut m = 0u32;
    while cum < TABLE_MASS {
        // P(2m+2) / P(2m) = tanh²r (2m+1) / (2m+2)
        p *= t * (2 * m + 1) as f64 / (2 * m + 2) as f64;
        cum += p;
        table.push(cum);
        m += 1;
    }
    table
}

/// Sample per-pulse single-beam records; the idler channel is zero.
///
/// Per mode an even photon number 2m is drawn from the squeezed-vacuum
/// distribution by inverse CDF on a truncated table. Amplitudes above
/// [`MAX_SINGLE_BEAM_AMPLITUDE`] are rejected to keep the truncation safe.
pub fn sample_single_beam(
    spectrum: &SqueezerSpectrum,
    detector: &DetectorModel,
    n_pulses: usize,
    seed: u64,
) -> Result<PulseEnsemble> {
    if n_pulses == 0 {
        return Err(Error::invalid("n_pulses", "need at least one pulse"));
    }
    let max_r = spectrum.amplitudes().first().copied().unwrap_or(0.0);
    if max_r > MAX_SINGLE_BEAM_AMPLITUDE {
        return Err(Error::TailTruncationUnsafe {
            max_r,
            limit: MAX_SINGLE_BEAM_AMPLITUDE,
        });
    }
    let tables: Vec<Vec<f64>> = spectrum
        .amplitudes()
        .iter()
        .filter(|r| **r > 0.0)
        .map(|r| squeezed_vacuum_cdf(*r))
        .collect();
    let base = ChaCha8Rng::seed_from_u64(seed);
    let eta_s = detector.efficiency_signal();
    let records: Vec<(u32, u32)> = (0..n_pulses as u64)
        .into_par_iter()
        .map(|pulse| {
            let mut rng = pulse_rng(&base, SINGLE_STREAM, pulse);
            let mut total: u32 = 0;
            for table in &tables {
                let u: f64 = rng.random();
                let m = table.partition_point(|c| *c < u).min(table.len() - 1);
                total = total.saturating_add(2 * m as u32);
            }
            (thin(&mut rng, total, eta_s), 0)
        })
        .collect();
    PulseEnsemble::from_records(records, seed, spectrum_digest(spectrum))
}

fn falling_factorial(x: f64, order: u32) -> f64 {
    (0..order).map(|t| x - t as f64).product()
}

/// Block boundaries for `blocks` near-equal jackknife blocks.
fn block_ranges(n: usize, blocks: usize) -> Vec<(usize, usize)> {
    (0..blocks)
        .map(|j| (j * n / blocks, (j + 1) * n / blocks))
        .collect()
}

/// Jackknife standard error from per-block sums of a ratio estimator.
///
/// `combine` maps (numerator sum, signal sum, idler sum, pulse count) to the
/// estimator value.
fn jackknife(
    block_stats: &[(f64, f64, f64, usize)],
    combine: impl Fn(f64, f64, f64, usize) -> f64,
) -> (f64, f64) {
    let total: (f64, f64, f64, usize) = block_stats.iter().fold(
        (0.0, 0.0, 0.0, 0usize),
        |acc, b| (acc.0 + b.0, acc.1 + b.1, acc.2 + b.2, acc.3 + b.3),
    );
    let full = combine(total.0, total.1, total.2, total.3);
    let blocks = block_stats.len();
    let leave_outs: Vec<f64> = block_stats
        .iter()
        .map(|b| {
            combine(
                total.0 - b.0,
                total.1 - b.1,
                total.2 - b.2,
                total.3 - b.3,
            )
        })
        .collect();
    let mean = leave_outs.iter().sum::<f64>() / blocks as f64;
    let var = leave_outs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        * (blocks as f64 - 1.0)
        / blocks as f64;
    (full, var.sqrt())
}

/// Estimate normalized factorial moments from an ensemble.
///
/// Marginal orders evaluate the signal arm: `mean[N(N-1)…(N-n+1)] /
/// mean[N]^n`. Cross orders use both arms. Standard errors come from a
/// 20-block jackknife.
pub fn estimate_correlations(
    ensemble: &PulseEnsemble,
    orders: &[OrderSpec],
) -> Result<Vec<EstimatedCorrelation>> {
    let n = ensemble.n_pulses();
    if n < 100 {
        return Err(Error::invalid(
            "ensemble",
            format!("need at least 100 pulses for estimation, got {n}"),
        ));
    }
    let ranges = block_ranges(n, JACKKNIFE_BLOCKS);
    let records = ensemble.records();

    orders
        .iter()
        .map(|order| {
            let (need_idler, numerator): (bool, PulseNumerator) = match order {
                OrderSpec::Marginal(k) => {
                    let k = *k;
                    (false, Box::new(move |r| falling_factorial(r.0 as f64, k)))
                }
                OrderSpec::Cross(a, b) => {
                    let (a, b) = (*a, *b);
                    (
                        true,
                        Box::new(move |r| {
                            falling_factorial(r.0 as f64, a) * falling_factorial(r.1 as f64, b)
                        }),
                    )
                }
            };
            let block_stats: Vec<(f64, f64, f64, usize)> = ranges
                .iter()
                .map(|(lo, hi)| {
                    let mut num = 0.0;
                    let mut ns = 0.0;
                    let mut ni = 0.0;
                    for r in &records[*lo..*hi] {
                        num += numerator(r);
                        ns += r.0 as f64;
                        ni += r.1 as f64;
                    }
                    (num, ns, ni, hi - lo)
                })
                .collect();

            let ns_total: f64 = block_stats.iter().map(|b| b.1).sum();
            let ni_total: f64 = block_stats.iter().map(|b| b.2).sum();
            if ns_total == 0.0 || (need_idler && ni_total == 0.0) {
                return Err(Error::NoCounts);
            }

            let (value, stderr) = match order {
                OrderSpec::Marginal(k) => {
                    let k = *k as i32;
                    jackknife(&block_stats, move |num, ns, _, count| {
                        let c = count as f64;
                        (num / c) / (ns / c).powi(k)
                    })
                }
                OrderSpec::Cross(a, b) => {
                    let (a, b) = (*a as i32, *b as i32);
                    jackknife(&block_stats, move |num, ns, ni, count| {
                        let c = count as f64;
                        (num / c) / ((ns / c).powi(a) * (ni / c).powi(b))
                    })
                }
            };
            Ok(EstimatedCorrelation {
                order: order.label(),
                value,
                stderr,
            })
        })
        .collect()
}

/// Hanbury Brown–Twiss click estimator of g² behind a beamsplitter.
///
/// Every signal photon of a pulse is routed to arm 1 with probability
/// `splitting`, else to arm 2; a click is one or more photons in an arm. The
/// returned ratio P(coincidence) / (P(click 1) P(click 2)) converges to g²
/// only in the low-flux limit; at higher flux the clicks saturate and the
/// estimate is biased low.
pub fn hbt_click_estimate_g2(
    ensemble: &PulseEnsemble,
    splitting: f64,
) -> Result<EstimatedCorrelation> {
    let splitting_ok = splitting > 0.0 && splitting < 1.0;
    if !splitting_ok {
        return Err(Error::invalid(
            "splitting",
            format!("must lie strictly in (0, 1), got {splitting}; a degenerate splitter leaves no counts in one arm"),
        ));
    }
    let n = ensemble.n_pulses();
    if n < 100 {
        return Err(Error::invalid(
            "ensemble",
            format!("need at least 100 pulses for estimation, got {n}"),
        ));
    }
    let base = ChaCha8Rng::seed_from_u64(ensemble.seed());
    let clicks: Vec<(bool, bool)> = ensemble
        .records()
        .par_iter()
        .enumerate()
        .map(|(pulse, record)| {
            let mut rng = pulse_rng(&base, HBT_STREAM, pulse as u64);
            let arm1 = thin(&mut rng, record.0, splitting);
            (arm1 > 0, record.0 - arm1 > 0)
        })
        .collect();

    let block_stats: Vec<(f64, f64, f64, usize)> = block_ranges(n, JACKKNIFE_BLOCKS)
        .iter()
        .map(|(lo, hi)| {
            let mut c12 = 0.0;
            let mut c1 = 0.0;
            let mut c2 = 0.0;
            for (a, b) in &clicks[*lo..*hi] {
                c1 += *a as u32 as f64;
                c2 += *b as u32 as f64;
                c12 += (*a && *b) as u32 as f64;
            }
            (c12, c1, c2, hi - lo)
        })
        .collect();
    let c1_total: f64 = block_stats.iter().map(|b| b.1).sum();
    let c2_total: f64 = block_stats.iter().map(|b| b.2).sum();
    if c1_total == 0.0 || c2_total == 0.0 {
        return Err(Error::NoCounts);
    }
    let (value, stderr) = jackknife(&block_stats, |c12, c1, c2, count| {
        let c = count as f64;
        (c12 / c) / ((c1 / c) * (c2 / c))
    });
    Ok(EstimatedCorrelation {
        order: "g2".to_string(),
        value,
        stderr,
    })
}
