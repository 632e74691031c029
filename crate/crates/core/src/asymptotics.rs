//! Numerical diagnostics for subexponential coefficient sequences and the ratio
//! `[z^n] F̃∘G̃ / [z^n] G̃`.
//!
//! Nothing here decides membership in a class of sequences; every report gives windowed
//! deviations from the predicted limits, and the trend between two windows.

use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gibbs::{GibbsModel, OuterKind};
use crate::rational;
use crate::series::{RadiusEstimate, RadiusEvaluation, TruncatedSeries};

/// Minimum number of nonzero lattice coefficients for a diagnosis.
pub const MIN_POINTS: usize = 20;

/// Mean and last relative deviation `|x_n / target − 1|` over a window of a track.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowDeviation {
    pub from: usize,
    pub to: usize,
    pub points: usize,
    pub mean: f64,
    pub last: f64,
}

/// Deviation over the last 10% (at least 10) of the track points with `n ≤ end`.
pub fn window_deviation(track: &[(usize, f64)], target: f64, end: usize) -> Option<WindowDeviation> {
    let pts: Vec<&(usize, f64)> = track.iter().filter(|p| p.0 <= end).collect();
    if pts.is_empty() || !target.is_finite() || target == 0.0 {
        return None;
    }
    let w = (pts.len() / 10).max(10).min(pts.len());
    let window = &pts[pts.len() - w..];
    let dev = |x: f64| (x / target - 1.0).abs();
    Some(WindowDeviation {
        from: window[0].0,
        to: window[w - 1].0,
        points: w,
        mean: window.iter().map(|p| dev(p.1)).sum::<f64>() / w as f64,
        last: dev(window[w - 1].1),
    })
}

/// Deviations in the last window and in the window ending at half the truncation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trend {
    pub target: f64,
    pub half: Option<WindowDeviation>,
    pub last: Option<WindowDeviation>,
}

impl Trend {
    fn new(track: &[(usize, f64)], target: f64, n: usize) -> Self {
        Trend { target, half: window_deviation(track, target, n / 2), last: window_deviation(track, target, n) }
    }

    /// True if the mean deviation of the last window is below that of the half window.
    pub fn shrinks(&self) -> bool {
        matches!((&self.half, &self.last), (Some(h), Some(l)) if l.mean < h.mean)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubexpReport {
    pub truncation: usize,
    pub span: usize,
    pub rho: RadiusEstimate,
    /// `(n, g_n / g_{n+d})`.
    pub ratio_track: Vec<(usize, f64)>,
    /// `(n, (1/g_n) Σ_{i+j=n} g_i g_j)`.
    pub convolution_track: Vec<(usize, f64)>,
    /// `g(ρ)`; `None` if the fitted tail does not converge.
    pub g_at_rho: Option<RadiusEvaluation>,
    /// Deviation of the ratio track from `ρ^d`.
    pub ratio: Trend,
    /// Deviation of the convolution track from `2 g(ρ)`, when finite.
    pub convolution: Option<Trend>,
    pub verdict_hint: String,
}

/// Natural logarithms of the coefficients; `-∞` for zeros.
fn logs(g: &TruncatedSeries) -> Vec<f64> {
    g.coeffs().iter().map(|c| if c.is_zero() { f64::NEG_INFINITY } else { rational::ln(c) }).collect()
}

pub fn diagnose_subexponential(g: &TruncatedSeries) -> Result<SubexpReport> {
    let d = g.span();
    let n = g.truncation();
    let l = logs(g);
    let lattice: Vec<usize> = g.support().filter(|&k| k > 0 && k % d == 0).collect();
    if lattice.len() < MIN_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} nonzero lattice coefficients, need at least {MIN_POINTS}",
            lattice.len()
        )));
    }
    if !g.is_nonnegative() {
        return Err(Error::InvalidArgument("coefficients must be non-negative".into()));
    }
    let rho = g.radius_estimate()?;
    let ratio_track: Vec<(usize, f64)> = lattice
        .iter()
        .filter(|&&k| k + d <= n && l[k + d].is_finite())
        .map(|&k| (k, (l[k] - l[k + d]).exp()))
        .collect();
    let support: Vec<usize> = g.support().collect();
    let convolution_track: Vec<(usize, f64)> = lattice
        .iter()
        .map(|&k| {
            let s = support
                .iter()
                .take_while(|&&i| i <= k)
                .filter(|&&i| l[k - i].is_finite())
                .map(|&i| (l[i] + l[k - i] - l[k]).exp())
                .fold(0.0, |a, b| a + b);
            (k, s)
        })
        .collect();
    let g_at_rho = g.evaluate_at_radius(rho.rho).ok();
    let ratio = Trend::new(&ratio_track, rho.rho.powi(d as i32), n);
    let convolution = g_at_rho.as_ref().map(|e| Trend::new(&convolution_track, 2.0 * e.value, n));
    let verdict_hint = match &convolution {
        None => "g(ρ) is not finite by the fitted tail: the convolution condition cannot hold".to_string(),
        Some(c) => format!(
            "ratio deviation {} between windows, convolution deviation {}; a finite truncation cannot certify membership",
            if ratio.shrinks() { "shrinks" } else { "does not shrink" },
            if c.shrinks() { "shrinks" } else { "does not shrink" },
        ),
    };
    Ok(SubexpReport {
        truncation: n,
        span: d,
        rho,
        ratio_track,
        convolution_track,
        g_at_rho,
        ratio,
        convolution,
        verdict_hint,
    })
}

/// Coefficients of `f(g(ρ̂ z))` in floating point, by Horner's scheme on the tilted series.
fn compose_tilted(f: &TruncatedSeries, g_tilted: &[f64]) -> Vec<f64> {
    let n = g_tilted.len() - 1;
    let fc: Vec<f64> = f.coeffs().iter().map(rational::to_f64).collect();
    let degree = fc.iter().rposition(|&c| c != 0.0).unwrap_or(0).min(n);
    let mut acc = vec![0.0; n + 1];
    acc[0] = fc[degree];
    for k in (0..degree).rev() {
        let mut next = vec![0.0; n + 1];
        for (i, &a) in acc.iter().enumerate().filter(|(_, a)| **a != 0.0) {
            for (j, &b) in g_tilted.iter().enumerate().take(n + 1 - i).skip(1) {
                next[i + j] += a * b;
            }
        }
        next[0] += fc[k];
        acc = next;
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosureReport {
    /// `(n, [z^n] f(g(z)) / [z^n] g(z))`.
    pub ratio_track: Vec<(usize, f64)>,
    /// `f′(g(ρ))`.
    pub target: f64,
    pub g_at_rho: f64,
    pub trend: Trend,
}

pub fn check_closure_under_composition(f: &TruncatedSeries, g: &TruncatedSeries) -> Result<ClosureReport> {
    if !f.is_nonnegative() || !g.is_nonnegative() {
        return Err(Error::InvalidArgument("coefficients must be non-negative".into()));
    }
    if !g.coeff(0).is_zero() {
        return Err(Error::InnerHasConstantTerm);
    }
    let n = g.truncation().min(f.truncation());
    let rho = g.radius_estimate()?.rho;
    let g_at_rho = g.evaluate_at_radius(rho)?.value;
    let derivative: Vec<_> = f.coeffs().iter().enumerate().skip(1).map(|(k, c)| c * rational::int(k as i64)).collect();
    let fprime = TruncatedSeries::new(if derivative.is_empty() { vec![Zero::zero()] } else { derivative });
    let target = fprime.evaluate(g_at_rho)?.total();
    let lr = rho.ln();
    let gt: Vec<f64> = logs(g)
        .iter()
        .take(n + 1)
        .enumerate()
        .map(|(k, &x)| if x.is_finite() { (x + k as f64 * lr).exp() } else { 0.0 })
        .collect();
    let composed = compose_tilted(f, &gt);
    let ratio_track: Vec<(usize, f64)> =
        (1..=n).filter(|&k| gt[k] > 0.0).map(|k| (k, composed[k] / gt[k])).collect();
    let trend = Trend::new(&ratio_track, target, n);
    Ok(ClosureReport { ratio_track, target, g_at_rho, trend })
}

/// The ratio `r_n = [z^n] F̃∘G̃ / [z^n] G̃` and its predicted limit `C`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioReport {
    pub truncation: usize,
    pub rho: RadiusEstimate,
    pub inner_at_rho: RadiusEvaluation,
    /// `C = (∂_{z_1} Z_F)(G̃(ρ), G̃^{ν²}(ρ²), …)`.
    pub constant: f64,
    /// `C` from the coefficients of `F′ ∘ G` summed at `ρ` with a fitted tail.
    pub constant_from_derived_series: f64,
    /// For `F = SET` with outer atom weight `c`: `c · F̃∘G̃(ρ)`, equal to `C` since
    /// `∂_{z_1} Z_SET = Z_SET`.
    pub constant_from_composite: Option<f64>,
    pub track: Vec<(usize, f64)>,
    pub trend: Trend,
}

pub fn coefficient_ratio_experiment(model: &GibbsModel) -> Result<RatioReport> {
    let rho = model.radius()?.clone();
    let inner_at_rho = model.inner_at_rho()?;
    let args = model.outer_arguments(rho.rho)?;
    let constant = model.derived_cycle_index().evaluate_value(&|i| args.get(i - 1).copied().unwrap_or(0.0));
    let constant_from_derived_series = model.derived_series()?.evaluate_at_radius(rho.rho)?.value;
    let composite = model.composite_series()?;
    let constant_from_composite = match model.outer_kind() {
        OuterKind::Set(c) => Some(rational::to_f64(c) * composite.evaluate_at_radius(rho.rho)?.value),
        _ => None,
    };
    let inner = model.inner_series(1)?;
    let (li, lc) = (logs(&inner), logs(&composite));
    let track: Vec<(usize, f64)> =
        (1..=model.truncation()).filter(|&k| li[k].is_finite()).map(|k| (k, (lc[k] - li[k]).exp())).collect();
    let trend = Trend::new(&track, constant, model.truncation());
    Ok(RatioReport {
        truncation: model.truncation(),
        rho,
        inner_at_rho,
        constant,
        constant_from_derived_series,
        constant_from_composite,
        track,
        trend,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeRow {
    pub epsilon: f64,
    /// `G̃(ρ) + ε`.
    pub first_argument: f64,
    pub value: f64,
    /// Difference between the cycle index truncated at `N` and at `N/2`.
    pub residual: f64,
    /// The value is infinite or the truncation residual exceeds `10⁻³` of it.
    pub divergence_flag: bool,
}

/// Evaluates `Z_F(G̃(ρ) + ε, G̃^{ν²}((ρ+ε)²), …)` for each `ε`.
pub fn analyticity_probe(model: &GibbsModel, epsilons: &[f64]) -> Result<Vec<ProbeRow>> {
    let rho = model.rho()?;
    let g_rho = model.inner_at_rho()?.value;
    let z = model.cycle_index();
    epsilons
        .iter()
        .map(|&eps| {
            let x = rho + eps;
            let mut args = vec![g_rho + eps];
            for i in 2..=z.truncation() {
                // an argument outside the disc of convergence counts as divergent
                let v = model.inner_value(i, x).unwrap_or(f64::INFINITY);
                args.push(v);
                if v < 1e-18 {
                    break;
                }
            }
            let ev = z.evaluate_at(&|i| args.get(i - 1).copied().unwrap_or(0.0));
            let divergence_flag = !ev.value.is_finite() || !(ev.residual <= 1e-3 * ev.value.abs());
            Ok(ProbeRow { epsilon: eps, first_argument: g_rho + eps, value: ev.value, residual: ev.residual, divergence_flag })
        })
        .collect()
}
