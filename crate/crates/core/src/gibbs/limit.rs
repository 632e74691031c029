//! The limit object `R`: a Boltzmann-distributed `F′ ∘ G` object at the radius `ρ`.

use num_traits::Zero;
use serde::Serialize;

use super::model::GibbsModel;
use crate::error::{Error, Result};
use crate::rational;
use crate::species::enumerate::{Enumerator, DEFAULT_GUARD};
use crate::species::Obj;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitEntry {
    pub object: Obj,
    pub size: usize,
    pub probability: f64,
    /// Probabilities recomputed at the ends of the radius uncertainty interval; `None`
    /// where the model is not evaluable.
    pub at_lower_rho: Option<f64>,
    pub at_upper_rho: Option<f64>,
}

/// `P(R = r) = μ(r) ρ^{|r|} / D(ρ)` for all orbits up to the cap, with `D` the
/// generating series of `F′ ∘ G`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitLaw {
    pub cap: usize,
    pub rho: f64,
    pub rho_spread: f64,
    /// `D(ρ)` from the derivative of the outer cycle index.
    pub normalizer: f64,
    /// `D(ρ)` from the coefficients of `F′ ∘ G` with a fitted tail.
    pub normalizer_from_series: f64,
    pub entries: Vec<LimitEntry>,
    /// `P(|R| > cap)`, from the coefficients of `F′ ∘ G`.
    pub tail: f64,
    pub enumerated_mass: f64,
    /// `|enumerated mass + tail − 1|`.
    pub normalization_error: f64,
}

impl LimitLaw {
    pub fn probability(&self, r: &Obj) -> f64 {
        self.entries.binary_search_by(|e| e.object.cmp(r)).map(|i| self.entries[i].probability).unwrap_or(0.0)
    }

    /// `P(|R| = k)` for `k ≤ cap`.
    pub fn size_law(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cap + 1];
        for e in &self.entries {
            out[e.size] += e.probability;
        }
        out
    }
}

/// Outer arguments at `x`. With `at_radius`, `G̃(x)` is summed with the fitted power-law
/// tail; otherwise `x` must lie inside the disc of convergence.
fn arguments_at(model: &GibbsModel, x: f64, at_radius: bool) -> Result<Vec<f64>> {
    let base = model.rho().map_or(x, |r| x.min(r));
    let mut args = model.outer_arguments(base)?;
    if base != x || at_radius {
        args[0] = if at_radius {
            model.inner_series(1)?.evaluate_at_radius(x)?.value
        } else {
            model.inner_value(1, x)?
        };
        for i in 2..=args.len() {
            args[i - 1] = model.inner_value(i, x)?;
        }
    }
    Ok(args)
}

/// `D(x) = (∂_{z_1} Z_F)(G̃(x), G̃^{ν²}(x²), …)`.
fn derived_value(model: &GibbsModel, args: &[f64]) -> f64 {
    model.derived_cycle_index().evaluate_value(&|i| args.get(i - 1).copied().unwrap_or(0.0))
}

/// The limit law: [`boltzmann_remainder_law`] at the estimated radius, with each
/// probability also recomputed at `ρ ± spread`.
pub fn limit_remainder_distribution(model: &GibbsModel, cap: usize) -> Result<LimitLaw> {
    let radius = model.radius()?.clone();
    law_at(model, radius.rho, true, Some(radius.spread), cap)
}

/// Boltzmann law of `F′ ∘ G` at a parameter `x` inside the disc of convergence.
pub fn boltzmann_remainder_law(model: &GibbsModel, x: f64, cap: usize) -> Result<LimitLaw> {
    law_at(model, x, false, None, cap)
}

fn law_at(model: &GibbsModel, x: f64, at_radius: bool, spread: Option<f64>, cap: usize) -> Result<LimitLaw> {
    if !(x > 0.0) {
        return Err(Error::InvalidArgument(format!("Boltzmann parameter {x} must be positive")));
    }
    let args = arguments_at(model, x, at_radius)?;
    let normalizer = derived_value(model, &args);
    if !(normalizer > 0.0) || !normalizer.is_finite() {
        return Err(Error::TailNotControlled { x, ratio: f64::NAN });
    }
    let derived = model.derived_series()?;
    let n = model.truncation();
    let (series_value, series_tail) = if at_radius {
        let e = derived.evaluate_at_radius(x)?;
        (e.value, e.tail)
    } else {
        let e = derived.evaluate(x)?;
        (e.total(), e.tail_bound)
    };
    let term = |k: usize| {
        let c = derived.coeff(k);
        if c.is_zero() { 0.0 } else { (rational::ln(&c) + k as f64 * x.ln()).exp() }
    };
    let beyond: f64 = (cap + 1..=n).map(term).sum::<f64>() + series_tail;

    let sensitivity = |y: f64| -> Option<(f64, f64)> {
        let a = arguments_at(model, y, true).ok()?;
        let d = derived_value(model, &a);
        (d.is_finite() && d > 0.0).then_some((y, d))
    };
    let spread = spread.filter(|&s| s > 0.0);
    let lower = spread.and_then(|s| sensitivity(x - s));
    let upper = spread.and_then(|s| sensitivity(x + s));

    let mut en = Enumerator::new(model.graph(), cap.max(DEFAULT_GUARD));
    let mut entries = Vec::new();
    for k in 0..=cap.min(n) {
        for (obj, w) in en.objects(model.derived_node(), k)?.iter() {
            let lw = rational::ln(w);
            let p_at = |(y, d): (f64, f64)| (lw + k as f64 * y.ln() - d.ln()).exp();
            entries.push(LimitEntry {
                object: obj.clone(),
                size: k,
                probability: p_at((x, normalizer)),
                at_lower_rho: lower.map(p_at),
                at_upper_rho: upper.map(p_at),
            });
        }
    }
    entries.sort_by(|a, b| a.object.cmp(&b.object));
    let enumerated_mass: f64 = entries.iter().map(|e| e.probability).sum();
    let tail = beyond / normalizer;
    Ok(LimitLaw {
        cap,
        rho: x,
        rho_spread: spread.unwrap_or(0.0),
        normalizer,
        normalizer_from_series: series_value,
        entries,
        tail,
        enumerated_mass,
        normalization_error: (enumerated_mass + tail - 1.0).abs(),
    })
}

/// Law of `c(R)`, the number of components of `R`.
///
/// Under the Boltzmann law at `ρ` the outer `F′`-structure of `R` carries a symmetry drawn
/// from `∂_{z_1} Z_F` at the arguments `G̃^{ν^i}(ρ^i)`; an `i`-cycle contributes `i`
/// components, so `c(R)` is the degree of that cycle type.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentLaw {
    /// `P(c(R) = k)` for `k ≤ max_count`.
    pub probabilities: Vec<f64>,
    /// `P(c(R) > max_count)`, from the normalizer.
    pub tail: f64,
    /// `|Σ_k P(c(R) = k) − 1|` with the sum over all degrees within the truncation,
    /// normalized by `D(ρ)` from the coefficients of `F′ ∘ G`.
    pub normalization_error: f64,
}

impl ComponentLaw {
    pub fn new(model: &GibbsModel, max_count: usize) -> Result<Self> {
        let rho = model.rho()?;
        let args = arguments_at(model, rho, true)?;
        let arg = |i: usize| args.get(i - 1).copied().unwrap_or(0.0);
        let ci = model.derived_cycle_index();
        let normalizer = ci.evaluate_value(&arg);
        let full_degree = ci.truncation();
        let full = ci.degree_law(&arg, full_degree);
        let series_normalizer = model.derived_series()?.evaluate_at_radius(rho)?.value;
        let probabilities: Vec<f64> = full.iter().take(max_count + 1).map(|w| w / normalizer).collect();
        let shown: f64 = probabilities.iter().sum();
        Ok(ComponentLaw {
            tail: (1.0 - shown).max(0.0),
            normalization_error: (full.iter().sum::<f64>() / series_normalizer - 1.0).abs(),
            probabilities,
        })
    }

    /// Law of `1 + c(R)` as `(k, P)` pairs.
    pub fn shifted(&self) -> Vec<(usize, f64)> {
        self.probabilities.iter().enumerate().map(|(k, &p)| (k + 1, p)).collect()
    }
}
