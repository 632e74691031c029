//! Truncated univariate power series with exact non-negative rational coefficients.

use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit;
use crate::rational::{self, Rational};

/// Default truncation order for series computations.
pub const DEFAULT_TRUNCATION: usize = 256;

/// Power series `Σ_{n ≤ N} g_n z^n`, known exactly up to its truncation order `N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncatedSeries {
    coeffs: Vec<Rational>,
    span: usize,
}

impl TruncatedSeries {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        if coeffs.is_empty() {
            coeffs.push(Rational::zero());
        }
        let span = lattice_span(&coeffs);
        TruncatedSeries { coeffs, span }
    }

    pub fn zero(truncation: usize) -> Self {
        Self::new(vec![Rational::zero(); truncation + 1])
    }

    pub fn one(truncation: usize) -> Self {
        let mut c = vec![Rational::zero(); truncation + 1];
        c[0] = Rational::one();
        Self::new(c)
    }

    /// `c · z^k`, truncated.
    pub fn monomial(c: Rational, k: usize, truncation: usize) -> Self {
        let mut v = vec![Rational::zero(); truncation + 1];
        if k <= truncation {
            v[k] = c;
        }
        Self::new(v)
    }

    pub fn from_integers(values: &[i64]) -> Self {
        Self::new(values.iter().map(|&v| rational::int(v)).collect())
    }

    /// `Σ_{n ≤ N} z^n`.
    pub fn geometric(truncation: usize) -> Self {
        Self::new(vec![Rational::one(); truncation + 1])
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn span(&self) -> usize {
        self.span
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> Rational {
        self.coeffs.get(n).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn into_coeffs(self) -> Vec<Rational> {
        self.coeffs
    }

    pub fn truncate(&self, truncation: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(truncation + 1, Rational::zero());
        Self::new(c)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.coeffs.iter().all(|c| !c.is_negative_value())
    }

    /// Indices with nonzero coefficients.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, _)| i)
    }

    /// Smallest index with a nonzero coefficient.
    pub fn valuation(&self) -> Option<usize> {
        self.support().next()
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.truncation().min(other.truncation());
        Self::new((0..=n).map(|i| &self.coeffs[i] + &other.coeffs[i]).collect())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    /// Cauchy product truncated at the smaller truncation order.
    pub fn mul(&self, other: &Self) -> Self {
        let n = self.truncation().min(other.truncation());
        let mut out = vec![Rational::zero(); n + 1];
        let a_nz: Vec<usize> = self.support().filter(|&i| i <= n).collect();
        let b_nz: Vec<usize> = other.support().filter(|&i| i <= n).collect();
        for &i in &a_nz {
            for &j in &b_nz {
                if i + j > n {
                    break;
                }
                out[i + j] += &self.coeffs[i] * &other.coeffs[j];
            }
        }
        Self::new(out)
    }

    /// `g(z^k)`, truncated at the same order.
    pub fn substitute_power(&self, k: usize) -> Self {
        assert!(k >= 1, "substitute_power requires k >= 1");
        let n = self.truncation();
        let mut out = vec![Rational::zero(); n + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            if i * k > n {
                break;
            }
            out[i * k] = c.clone();
        }
        Self::new(out)
    }

    /// Formal exponential via `n e_n = Σ_{k=1}^{n} k a_k e_{n-k}`.
    pub fn exp_series(&self) -> Result<Self> {
        if !self.coeffs[0].is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        let n = self.truncation();
        let weighted: Vec<(usize, Rational)> = self
            .support()
            .map(|k| (k, &self.coeffs[k] * Rational::from_integer(k.into())))
            .collect();
        let mut e = vec![Rational::zero(); n + 1];
        e[0] = Rational::one();
        for m in 1..=n {
            let mut acc = Rational::zero();
            for (k, ka) in &weighted {
                if *k > m {
                    break;
                }
                if !e[m - k].is_zero() {
                    acc += ka * &e[m - k];
                }
            }
            e[m] = acc / Rational::from_integer(m.into());
        }
        Ok(Self::new(e))
    }

    /// `1 / (1 - a)` for `a` with zero constant term.
    pub fn geometric_of(&self) -> Result<Self> {
        if !self.coeffs[0].is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        let n = self.truncation();
        let nz: Vec<usize> = self.support().collect();
        let mut q = vec![Rational::zero(); n + 1];
        q[0] = Rational::one();
        for m in 1..=n {
            let mut acc = Rational::zero();
            for &k in &nz {
                if k > m {
                    break;
                }
                acc += &self.coeffs[k] * &q[m - k];
            }
            q[m] = acc;
        }
        Ok(Self::new(q))
    }

    /// `log(1 / (1 - z)) = Σ_{n ≥ 1} z^n / n`, truncated.
    pub fn log_geometric(truncation: usize) -> Self {
        let mut c = vec![Rational::zero(); truncation + 1];
        for (n, slot) in c.iter_mut().enumerate().skip(1) {
            *slot = rational::ratio(1, n as i64);
        }
        Self::new(c)
    }

    /// Natural log of each coefficient (`-inf` for zeros).
    pub fn log_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(rational::ln).collect()
    }

    /// Partial sum at `x` with a geometric tail majorant.
    ///
    /// The tail ratio is the larger of the maximal term ratio over the last window and the
    /// extrapolated limit `(x/ρ̂)^d`. Fails when that ratio is not below 1.
    pub fn evaluate(&self, x: f64) -> Result<Evaluation> {
        if x < 0.0 || !x.is_finite() {
            return Err(Error::InvalidArgument(format!("evaluation point {x} must be >= 0")));
        }
        let support: Vec<usize> = self.support().collect();
        if x == 0.0 {
            return Ok(Evaluation { value: rational::to_f64(&self.coeffs[0]), tail_bound: 0.0 });
        }
        let lnx = x.ln();
        let logs = self.log_coeffs();
        let term = |n: usize| (logs[n] + n as f64 * lnx).exp();
        let value: f64 = support.iter().map(|&n| term(n)).sum();
        if support.len() < 2 {
            // polynomial with at most one term: no tail beyond truncation is implied
            return Ok(Evaluation { value, tail_bound: 0.0 });
        }
        let d = self.span;
        let pairs: Vec<(usize, usize)> = support
            .windows(2)
            .filter(|w| w[1] - w[0] == d)
            .map(|w| (w[0], w[1]))
            .collect();
        if pairs.is_empty() {
            return Ok(Evaluation { value, tail_bound: 0.0 });
        }
        let window = window_len(pairs.len());
        let recent = &pairs[pairs.len() - window..];
        let mut ratio = recent
            .iter()
            .map(|&(a, b)| (logs[b] - logs[a] + (b - a) as f64 * lnx).exp())
            .fold(0.0f64, f64::max);
        if let Ok(est) = self.radius_estimate() {
            ratio = ratio.max((x / est.rho).powi(d as i32));
        }
        if !(ratio < 1.0 - 1e-9) {
            return Err(Error::TailNotControlled { x, ratio });
        }
        let last = *support.last().unwrap();
        let tail_bound = term(last) * ratio / (1.0 - ratio);
        Ok(Evaluation { value, tail_bound })
    }

    /// Estimates the radius of convergence from the coefficient ratios.
    ///
    /// Uses `q_n = (g_n / g_{n+d})^{1/d}` over the last window of lattice indices and
    /// extrapolates `q_n = ρ + b_1/n + ... + b_K/n^K` to `n → ∞`. The spread is the
    /// difference between the degree-K and degree-(K-1) extrapolations.
    pub fn radius_estimate(&self) -> Result<RadiusEstimate> {
        let d = self.span;
        let ratios = self.lattice_ratios();
        if ratios.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "{} usable coefficient ratios, need at least 3",
                ratios.len()
            )));
        }
        let window = window_len(ratios.len());
        let pts = &ratios[ratios.len() - window..];
        let n0 = pts[0].0 as f64;
        let ts: Vec<f64> = pts.iter().map(|&(n, _)| n0 / n as f64).collect();
        let ys: Vec<f64> = pts.iter().map(|&(_, q)| q).collect();
        let max_deg = 4.min(pts.len() - 2).max(1);
        let hi = fit::polynomial_intercept(&ts, &ys, max_deg)
            .ok_or_else(|| Error::InsufficientData("ratio fit failed".into()))?;
        let lo = fit::polynomial_intercept(&ts, &ys, max_deg - 1).unwrap_or(hi);
        Ok(RadiusEstimate { rho: hi, span: d, spread: (hi - lo).abs(), window: pts.to_vec() })
    }

    /// `(n, (g_n/g_{n+d})^{1/d})` over consecutive nonzero lattice indices.
    pub fn lattice_ratios(&self) -> Vec<(usize, f64)> {
        let d = self.span;
        let support: Vec<usize> = self.support().filter(|&n| n > 0).collect();
        support
            .windows(2)
            .filter(|w| w[1] - w[0] == d)
            .map(|w| {
                let q = &self.coeffs[w[0]] / &self.coeffs[w[1]];
                (w[0], rational::to_f64(&q).powf(1.0 / d as f64))
            })
            .collect()
    }

    /// Value at the radius of convergence `rho`, where terms decay only polynomially.
    ///
    /// Terms `a_n = g_n ρ^n` on the lattice are fitted over `[N/2, N]` by
    /// `ln a_n = α − β ln n + c_1/n + c_2/n² + c_3/n³`; the tail beyond `N` is summed
    /// from the fit. Fails when the fitted decay exponent is not clearly above 1.
    pub fn evaluate_at_radius(&self, rho: f64) -> Result<RadiusEvaluation> {
        let logs = self.log_coeffs();
        let lnr = rho.ln();
        let support: Vec<usize> = self.support().filter(|&n| n > 0).collect();
        let partial: f64 = self.support().map(|n| (logs[n] + n as f64 * lnr).exp()).sum();
        let Some(&n_max) = support.last().filter(|&&n| n + self.span > self.truncation()) else {
            // A polynomial: the sum is exact.
            return Ok(RadiusEvaluation { value: partial, partial, tail: 0.0, tail_uncertainty: 0.0, beta: f64::INFINITY });
        };
        let pts: Vec<usize> = support.iter().copied().filter(|&n| 2 * n >= n_max).collect();
        if pts.len() < 8 {
            return Err(Error::InsufficientData(format!(
                "{} lattice points in the tail window, need at least 8",
                pts.len()
            )));
        }
        let xs: Vec<f64> = pts.iter().map(|&n| n as f64).collect();
        let ys: Vec<f64> = pts.iter().map(|&n| logs[n] + n as f64 * lnr).collect();
        let scale = n_max as f64;
        let model = |order: usize| {
            let basis = move |n: f64| {
                let mut b = vec![1.0, -(n / scale).ln()];
                for k in 1..=order {
                    b.push((scale / n).powi(k as i32));
                }
                b
            };
            fit::least_squares(&xs, &ys, &basis).map(|c| (c, basis))
        };
        let d = self.span as f64;
        let tail_of = |order: usize| -> Option<(f64, f64)> {
            let (c, basis) = model(order)?;
            let beta = c[1];
            let f = |n: f64| basis(n).iter().zip(&c).map(|(b, c)| b * c).sum::<f64>().exp();
            Some((tail_sum(&f, n_max as f64, d, beta), beta))
        };
        let (tail, beta) = tail_of(3).ok_or_else(|| Error::InsufficientData("tail fit failed".into()))?;
        let (tail_lo, _) = tail_of(2).unwrap_or((tail, beta));
        if !(beta > 1.05) {
            return Err(Error::TailNotControlled { x: rho, ratio: 1.0 });
        }
        Ok(RadiusEvaluation { value: partial + tail, partial, tail, tail_uncertainty: (tail - tail_lo).abs(), beta })
    }
}

/// Sum of `f(n)` over lattice points `n = n_max + d, n_max + 2d, ...` where
/// `f(n) ~ n^{-β}` with `β > 1`.
fn tail_sum(f: &dyn Fn(f64) -> f64, n_max: f64, d: f64, beta: f64) -> f64 {
    let mut n = n_max + d;
    let mut acc = 0.0;
    let limit = n_max.max(1.0) * 4096.0;
    while n <= limit {
        acc += f(n);
        n += d;
    }
    // Euler-Maclaurin remainder for the power-law tail beyond the explicit sum.
    let last = n - d;
    let fl = f(last);
    acc + fl * last / ((beta - 1.0) * d) - fl / 2.0
}

fn window_len(points: usize) -> usize {
    (points / 10).max(10).min(points)
}

fn lattice_span(coeffs: &[Rational]) -> usize {
    let nz: Vec<usize> = coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, _)| i).collect();
    match nz.len() {
        0 => 1,
        1 => nz[0].max(1),
        _ => nz.windows(2).fold(0usize, |g, w| g.gcd(&(w[1] - w[0]))).max(1),
    }
}

trait NonNeg {
    fn is_negative_value(&self) -> bool;
}

impl NonNeg for Rational {
    fn is_negative_value(&self) -> bool {
        num_traits::Signed::is_negative(self)
    }
}

/// Float value of a truncated series with a tail majorant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub value: f64,
    pub tail_bound: f64,
}

impl Evaluation {
    pub fn total(&self) -> f64 {
        self.value + self.tail_bound
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusEstimate {
    pub rho: f64,
    pub span: usize,
    pub spread: f64,
    /// The `(n, q_n)` points used for the extrapolation.
    pub window: Vec<(usize, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadiusEvaluation {
    pub value: f64,
    pub partial: f64,
    pub tail: f64,
    pub tail_uncertainty: f64,
    pub beta: f64,
}

#[derive(Serialize, Deserialize)]
struct SeriesJson {
    truncation: usize,
    span: usize,
    coeffs: Vec<String>,
}

impl Serialize for TruncatedSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesJson {
            truncation: self.truncation(),
            span: self.span,
            coeffs: self.coeffs.iter().map(rational::to_string).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TruncatedSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = SeriesJson::deserialize(d)?;
        let coeffs = raw
            .coeffs
            .iter()
            .map(|s| rational::parse(s))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        if coeffs.len() != raw.truncation + 1 {
            return Err(serde::de::Error::custom("coefficient count does not match truncation"));
        }
        Ok(TruncatedSeries::new(coeffs))
    }
}
