//! Boltzmann and Pólya-Boltzmann primitives.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::cycle_index::{CycleIndexPoly, CycleType};
use crate::error::{Error, Result};
use crate::rational;
use crate::series::TruncatedSeries;

/// Size law `P(n) ∝ g_n y^n`; mass beyond the truncation is reported, not distributed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeDistribution {
    pub y: f64,
    pub probabilities: Vec<f64>,
    /// Upper bound on the probability of sizes beyond the truncation.
    pub mass_defect: f64,
}

pub fn boltzmann_size_distribution(series: &TruncatedSeries, y: f64) -> Result<SizeDistribution> {
    let ev = series.evaluate(y)?;
    let total = ev.total();
    if !(total > 0.0) {
        return Err(Error::ZeroMass);
    }
    let probabilities = series
        .coeffs()
        .iter()
        .enumerate()
        .map(|(n, c)| if y == 0.0 { if n == 0 { rational::to_f64(c) / total } else { 0.0 } } else {
            (rational::ln(c) + n as f64 * y.ln() - total.ln()).exp()
        })
        .collect();
    Ok(SizeDistribution { y, probabilities, mass_defect: ev.tail_bound / total })
}

/// Cumulative size table of one Boltzmann law, cut at `kmax`; draws above `kmax` are
/// reported as overflow.
#[derive(Clone, Debug)]
pub(crate) struct SizeTable {
    cum: Vec<f64>,
}

impl SizeTable {
    /// Law `P(k) = g_k x^k / norm` for `k ≤ kmax`.
    pub(crate) fn new(series: &TruncatedSeries, x: f64, norm: f64, kmax: usize) -> Self {
        let lx = x.ln();
        let ln_norm = norm.ln();
        let mut acc = 0.0;
        let cum = series
            .coeffs()
            .iter()
            .take(kmax + 1)
            .enumerate()
            .map(|(k, c)| {
                if !num_traits::Zero::is_zero(c) {
                    acc += (rational::ln(c) + k as f64 * lx - ln_norm).exp();
                }
                acc
            })
            .collect();
        SizeTable { cum }
    }

    /// `Some(k)`, or `None` for a size beyond the table.
    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        let u: f64 = rng.gen();
        let k = self.cum.partition_point(|&c| c <= u);
        (k < self.cum.len()).then_some(k)
    }
}

/// `m_i ~ Poisson(y_i / i)` independently: the Pólya-Boltzmann law of `Z_SET`.
///
/// Indices are visited until the remaining intensity `Σ_{i>I} y_i/i` is below `1e-12`,
/// judged from a geometric majorant of the last two intensities.
pub fn sample_set_symmetry<R: Rng + ?Sized>(y: &dyn Fn(usize) -> f64, rng: &mut R) -> Result<CycleType> {
    let mut parts = Vec::new();
    let mut prev = f64::INFINITY;
    for i in 1..=1_000_000usize {
        let lambda = y(i) / i as f64;
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::TailNotControlled { x: y(i), ratio: f64::NAN });
        }
        if lambda > 0.0 {
            let m = Poisson::new(lambda).map_err(|e| Error::InvalidArgument(e.to_string()))?.sample(rng);
            if m > 0.0 {
                parts.push((i, m as usize));
            }
        }
        let ratio = if prev > 0.0 { lambda / prev } else { 0.0 };
        if i >= 2 && ratio < 0.9 && lambda * ratio / (1.0 - ratio) < 1e-12 {
            return Ok(CycleType::new(parts));
        }
        prev = lambda;
    }
    Err(Error::TailNotControlled { x: y(1), ratio: 1.0 })
}

/// Cycle type drawn from the stored terms of `z`, proportional to `coeff · Π y_i^{m_i}`.
pub fn sample_general_symmetry<R: Rng + ?Sized>(
    z: &CycleIndexPoly,
    y: &dyn Fn(usize) -> f64,
    rng: &mut R,
) -> Result<CycleType> {
    z.sample(y, rng)
}
