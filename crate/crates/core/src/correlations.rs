//! Broadband multimode correlation functions in closed form.
//!
//! All quantities are normalized factorial moments of the total photon
//! number summed over every spectral mode, evaluated for multimode twin-beam
//! and single-beam squeezers. They are independent of loss by construction,
//! which is what makes them useful benchmarks.
//!
//! Beyond the hand-derived g², g³ and g⁽¹'¹⁾ formulas, an exact moment
//! engine combines per-mode thermal factorial moments ⟨:n^m:⟩ = m! n̄^m over
//! independent modes for arbitrary orders (marginal n ≤ 8, cross n + m ≤ 6).

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::decomposition::SqueezerSpectrum;
use crate::{Error, Result};

/// Largest marginal order the moment engine accepts.
pub const MAX_MARGINAL_ORDER: u32 = 8;

/// Largest combined cross order n + m the moment engine accepts.
pub const MAX_CROSS_ORDER: u32 = 6;

/// Mean photon number per beam, `⟨n⟩ = Σ_k sinh² r_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanPhoton(pub f64);

impl MeanPhoton {
    pub fn value(&self) -> f64 {
        self.0
    }
}

/// A normalized correlation value together with its order label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationValue {
    pub order: String,
    pub value: f64,
}

impl CorrelationValue {
    fn new(order: impl Into<String>, value: f64) -> Self {
        debug_assert!(value.is_finite());
        Self {
            order: order.into(),
            value,
        }
    }
}

/// Whether a spectrum describes a twin-beam or a single-beam squeezer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamKind {
    Twin,
    Single,
}

/// Requested correlation order: marginal g⁽ⁿ⁾ or cross g⁽ⁿ'ᵐ⁾.
///
/// Labels use single digits: `"g2"` is the marginal second order, `"g11"`
/// the (1,1) cross-correlation, `"g21"` the (2,1) cross-correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderSpec {
    Marginal(u32),
    Cross(u32, u32),
}

impl OrderSpec {
    pub fn label(&self) -> String {
        match self {
            OrderSpec::Marginal(n) => format!("g{n}"),
            OrderSpec::Cross(n, m) => format!("g{n}{m}"),
        }
    }
}

impl fmt::Display for OrderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl FromStr for OrderSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s
            .strip_prefix('g')
            .ok_or_else(|| Error::OrderUnsupported {
                why: format!("label {s:?} does not start with 'g'"),
            })?;
        let parse = |c: char| -> Result<u32> {
            c.to_digit(10).ok_or_else(|| Error::OrderUnsupported {
                why: format!("label {s:?} contains a non-digit order"),
            })
        };
        let chars: Vec<char> = digits.chars().collect();
        match chars.as_slice() {
            [n] => Ok(OrderSpec::Marginal(parse(*n)?)),
            [n, m] => Ok(OrderSpec::Cross(parse(*n)?, parse(*m)?)),
            _ => Err(Error::OrderUnsupported {
                why: format!("label {s:?} must be gN or gNM with single digits"),
            }),
        }
    }
}

/// Power sums of sinh²(r_k) shared by every closed form, so that algebraic
/// identities between them hold bit-exactly.
struct HyperbolicSums {
    s2: f64,
    s4: f64,
    s6: f64,
}

fn hyperbolic_sums(spectrum: &SqueezerSpectrum) -> HyperbolicSums {
    let mut s2 = 0.0;
    let mut s4 = 0.0;
    let mut s6 = 0.0;
    for r in spectrum.amplitudes() {
        let sh2 = r.sinh().powi(2);
        s2 += sh2;
        s4 += sh2 * sh2;
        s6 += sh2 * sh2 * sh2;
    }
    HyperbolicSums { s2, s4, s6 }
}

fn require_light(spectrum: &SqueezerSpectrum, order: &'static str) -> Result<()> {
    if spectrum.is_vacuum() {
        return Err(Error::Vacuum { order });
    }
    Ok(())
}

/// Mean photon number per beam, `Σ_k sinh²(B λ_k)`.
pub fn mean_photon(spectrum: &SqueezerSpectrum) -> MeanPhoton {
    MeanPhoton(hyperbolic_sums(spectrum).s2)
}

/// Twin-beam marginal g²: `1 + Σ sinh⁴ r_k / (Σ sinh² r_k)²`.
///
/// Exact at every gain and independent of loss.
pub fn g2_twin(spectrum: &SqueezerSpectrum) -> Result<CorrelationValue> {
    require_light(spectrum, "g2")?;
    let s = hyperbolic_sums(spectrum);
    Ok(CorrelationValue::new("g2", 1.0 + s.s4 / (s.s2 * s.s2)))
}

/// Low-gain limit of the twin-beam g²: `1 + Σ λ_k⁴ = 1 + 1/K`.
///
/// Gain-independent; valid for sinh r_k ≈ r_k.
pub fn g2_twin_lowgain(spectrum: &SqueezerSpectrum) -> CorrelationValue {
    let quartic: f64 = spectrum.lambda().iter().map(|l| l.powi(4)).sum();
    CorrelationValue::new("g2", 1.0 + quartic)
}

/// Twin-beam cross-correlation g⁽¹'¹⁾:
/// `1 + 1/Σ sinh² r_k + Σ sinh⁴ r_k / (Σ sinh² r_k)²`.
pub fn g11_twin(spectrum: &SqueezerSpectrum) -> Result<CorrelationValue> {
    require_light(spectrum, "g11")?;
    let s = hyperbolic_sums(spectrum);
    Ok(CorrelationValue::new(
        "g11",
        1.0 + 1.0 / s.s2 + s.s4 / (s.s2 * s.s2),
    ))
}

/// Single-beam g²: `1 + 2 Σ sinh⁴ / (Σ sinh²)² + 1 / Σ sinh²`.
pub fn g2_single(spectrum: &SqueezerSpectrum) -> Result<CorrelationValue> {
    require_light(spectrum, "g2")?;
    let s = hyperbolic_sums(spectrum);
    Ok(CorrelationValue::new(
        "g2",
        1.0 + 2.0 * s.s4 / (s.s2 * s.s2) + 1.0 / s.s2,
    ))
}

/// Single-beam g³ (five terms):
/// `1 + 6 Σs⁴/(Σs²)² + 8 Σs⁶/(Σs²)³ + 3/Σs² + 6 Σs⁴/(Σs²)³`
/// with `s²ⁿ = sinh²ⁿ r_k`.
pub fn g3_single(spectrum: &SqueezerSpectrum) -> Result<CorrelationValue> {
    require_light(spectrum, "g3")?;
    let s = hyperbolic_sums(spectrum);
    let d2 = s.s2 * s.s2;
    let d3 = d2 * s.s2;
    Ok(CorrelationValue::new(
        "g3",
        1.0 + 6.0 * s.s4 / d2 + 8.0 * s.s6 / d3 + 3.0 / s.s2 + 6.0 * s.s4 / d3,
    ))
}

/// Complete homogeneous symmetric polynomials h_0..h_n of the per-mode mean
/// photon numbers, via the Newton recurrence h_m = (1/m) Σ_j p_j h_{m-j}.
fn homogeneous_sums(means: &[f64], n: usize) -> Vec<f64> {
    let mut power_sums = vec![0.0; n + 1];
    for (j, slot) in power_sums.iter_mut().enumerate().skip(1) {
        *slot = means.iter().map(|x| x.powi(j as i32)).sum();
    }
    let mut h = vec![0.0; n + 1];
    h[0] = 1.0;
    for m in 1..=n {
        let mut acc = 0.0;
        for j in 1..=m {
            acc += power_sums[j] * h[m - j];
        }
        h[m] = acc / m as f64;
    }
    h
}

fn factorial(n: u32) -> f64 {
    (1..=n as u64).product::<u64>() as f64
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut acc = 1.0;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc
}

/// Exact twin-beam marginal g⁽ⁿ⁾ for 1 ≤ n ≤ 8.
///
/// Modes are independent with thermal per-mode factorial moments, so
/// `⟨:N^n:⟩ = n! h_n(n̄_1, …, n̄_K)` with h_n the complete homogeneous
/// symmetric polynomial — the multinomial combination in closed form.
pub fn gn_twin(spectrum: &SqueezerSpectrum, n: u32) -> Result<CorrelationValue> {
    if !(1..=MAX_MARGINAL_ORDER).contains(&n) {
        return Err(Error::OrderUnsupported {
            why: format!("marginal order {n} outside [1, {MAX_MARGINAL_ORDER}]"),
        });
    }
    require_light(spectrum, "gn")?;
    let means: Vec<f64> = spectrum
        .amplitudes()
        .iter()
        .map(|r| r.sinh().powi(2))
        .collect();
    let h = homogeneous_sums(&means, n as usize);
    let total: f64 = means.iter().sum();
    let value = factorial(n) * h[n as usize] / total.powi(n as i32);
    Ok(CorrelationValue::new(OrderSpec::Marginal(n).label(), value))
}

/// Per-mode joint factorial moment `E[n⁽ᵃ⁾ n⁽ᵇ⁾]` of a geometric photon
/// number with mean `nb`, where n⁽ᵃ⁾ is the falling factorial. Signal and
/// idler of one twin-beam mode share the same photon number, so the joint
/// moment reduces to this single-variable expectation.
fn joint_thermal_factorial_moment(nb: f64, a: u32, b: u32) -> f64 {
    let mut acc = 0.0;
    for j in 0..=a.min(b) {
        acc += binomial(a, j)
            * binomial(b, j)
            * factorial(j)
            * factorial(a + b - j)
            * nb.powi((a + b - j) as i32);
    }
    acc
}

/// Exact twin-beam cross-correlation g⁽ⁿ'ᵐ⁾ for 1 ≤ n + m ≤ 6.
pub fn gnm_twin_cross(spectrum: &SqueezerSpectrum, n: u32, m: u32) -> Result<CorrelationValue> {
    let total_order = n + m;
    if !(1..=MAX_CROSS_ORDER).contains(&total_order) {
        return Err(Error::OrderUnsupported {
            why: format!("cross order ({n}, {m}) outside 1 <= n+m <= {MAX_CROSS_ORDER}"),
        });
    }
    require_light(spectrum, "gnm")?;
    let means: Vec<f64> = spectrum
        .amplitudes()
        .iter()
        .map(|r| r.sinh().powi(2))
        .collect();

    // Truncated bivariate product over modes of
    //   G_k(x, y) = Σ_{a,b} E[n⁽ᵃ⁾ n⁽ᵇ⁾] / (a! b!) x^a y^b,
    // so that ⟨:N_s^n :: N_i^m:⟩ = n! m! [x^n y^m] Π_k G_k.
    let (nx, ny) = (n as usize, m as usize);
    let mut prod = vec![vec![0.0f64; ny + 1]; nx + 1];
    prod[0][0] = 1.0;
    for &nb in &means {
        let mut g = vec![vec![0.0f64; ny + 1]; nx + 1];
        for (a, row) in g.iter_mut().enumerate() {
            for (b, entry) in row.iter_mut().enumerate() {
                *entry = joint_thermal_factorial_moment(nb, a as u32, b as u32)
                    / (factorial(a as u32) * factorial(b as u32));
            }
        }
        let mut next = vec![vec![0.0f64; ny + 1]; nx + 1];
        for a1 in 0..=nx {
            for b1 in 0..=ny {
                if prod[a1][b1] == 0.0 {
                    continue;
                }
                for a2 in 0..=(nx - a1) {
                    for b2 in 0..=(ny - b1) {
                        next[a1 + a2][b1 + b2] += prod[a1][b1] * g[a2][b2];
                    }
                }
            }
        }
        prod = next;
    }
    let total: f64 = means.iter().sum();
    let value = factorial(n) * factorial(m) * prod[nx][ny]
        / (total.powi(n as i32) * total.powi(m as i32));
    Ok(CorrelationValue::new(OrderSpec::Cross(n, m).label(), value))
}

/// Evaluate a batch of correlation orders against one spectrum.
///
/// Twin beams route through the exact moment engine; single beams support
/// the g¹ (trivially 1), g² and g³ closed forms.
pub fn evaluate_orders(
    spectrum: &SqueezerSpectrum,
    beam: BeamKind,
    orders: &[OrderSpec],
) -> Result<Vec<CorrelationValue>> {
    orders
        .iter()
        .map(|order| match (beam, order) {
            (BeamKind::Twin, OrderSpec::Marginal(n)) => gn_twin(spectrum, *n),
            (BeamKind::Twin, OrderSpec::Cross(n, m)) => gnm_twin_cross(spectrum, *n, *m),
            (BeamKind::Single, OrderSpec::Marginal(1)) => {
                require_light(spectrum, "g1")?;
                Ok(CorrelationValue::new("g1", 1.0))
            }
            (BeamKind::Single, OrderSpec::Marginal(2)) => g2_single(spectrum),
            (BeamKind::Single, OrderSpec::Marginal(3)) => g3_single(spectrum),
            (BeamKind::Single, other) => Err(Error::OrderUnsupported {
                why: format!("single-beam closed forms cover g1, g2, g3; got {other}"),
            }),
        })
        .collect()
}
