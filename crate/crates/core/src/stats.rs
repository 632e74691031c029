//! Empirical laws, total variation estimates and the experiment drivers for the remainder
//! and the component count.

use std::collections::BTreeMap;
use std::fmt::Display;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::gibbs::limit::{limit_remainder_distribution, ComponentLaw, LimitLaw};
use crate::gibbs::remainder::{extract_remainder, remainder_law};
use crate::gibbs::{GibbsModel, Method, SnSampler};
use crate::parallel::{self, Execution};
use crate::rational;
use crate::species::enumerate::{Enumerator, DEFAULT_GUARD};
use crate::species::Obj;

/// Level of the confidence radii.
pub const CONFIDENCE: f64 = 0.99;

/// Counts over keys up to a cap, and a bucket for everything beyond it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmpiricalLaw<K: Ord> {
    counts: BTreeMap<K, u64>,
    total: u64,
    tail_bucket: u64,
}

impl<K: Ord> Default for EmpiricalLaw<K> {
    fn default() -> Self {
        EmpiricalLaw { counts: BTreeMap::new(), total: 0, tail_bucket: 0 }
    }
}

impl<K: Ord> EmpiricalLaw<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, key: K) {
        *self.counts.entry(key).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn observe_tail(&mut self) {
        self.tail_bucket += 1;
        self.total += 1;
    }

    /// Adds the counts of `other`; merging is associative and commutative.
    pub fn merge(&mut self, other: EmpiricalLaw<K>) {
        for (k, c) in other.counts {
            *self.counts.entry(k).or_insert(0) += c;
        }
        self.total += other.total;
        self.tail_bucket += other.tail_bucket;
    }

    pub fn counts(&self) -> &BTreeMap<K, u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn tail_bucket(&self) -> u64 {
        self.tail_bucket
    }

    pub fn frequency(&self, key: &K) -> f64 {
        *self.counts.get(key).unwrap_or(&0) as f64 / self.total as f64
    }

    pub fn tail_frequency(&self) -> f64 {
        self.tail_bucket as f64 / self.total as f64
    }
}

impl<K: Ord> FromIterator<Option<K>> for EmpiricalLaw<K> {
    /// `None` is an observation beyond the cap.
    fn from_iter<I: IntoIterator<Item = Option<K>>>(iter: I) -> Self {
        let mut law = EmpiricalLaw::new();
        for k in iter {
            match k {
                Some(k) => law.observe(k),
                None => law.observe_tail(),
            }
        }
        law
    }
}

struct DisplayKeys<'a, K>(&'a BTreeMap<K, u64>);

impl<K: Display> Serialize for DisplayKeys<'_, K> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0 {
            m.serialize_entry(&k.to_string(), v)?;
        }
        m.end()
    }
}

impl<K: Ord + Display> Serialize for EmpiricalLaw<K> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(3))?;
        m.serialize_entry("counts", &DisplayKeys(&self.counts))?;
        m.serialize_entry("total", &self.total)?;
        m.serialize_entry("tail_bucket", &self.tail_bucket)?;
        m.end()
    }
}

/// Probabilities on keys up to a cap, plus the mass beyond it.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactLaw<K: Ord> {
    probabilities: BTreeMap<K, f64>,
    tail: f64,
}

impl<K: Ord> ExactLaw<K> {
    pub fn new(probabilities: BTreeMap<K, f64>, tail: f64) -> Result<Self> {
        if probabilities.values().chain([&tail]).any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidArgument("probabilities must be finite and non-negative".into()));
        }
        Ok(ExactLaw { probabilities, tail })
    }

    pub fn probabilities(&self) -> &BTreeMap<K, f64> {
        &self.probabilities
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn probability(&self, key: &K) -> f64 {
        self.probabilities.get(key).copied().unwrap_or(0.0)
    }

    pub fn mass(&self) -> f64 {
        self.probabilities.values().sum::<f64>() + self.tail
    }
}

impl ExactLaw<Obj> {
    pub fn from_limit(law: &LimitLaw) -> Self {
        ExactLaw { probabilities: law.entries.iter().map(|e| (e.object.clone(), e.probability)).collect(), tail: law.tail }
    }
}

/// `d_TV` between two laws projected onto their keys plus a tail bucket.
pub fn tv_exact<K: Ord>(p: &ExactLaw<K>, q: &ExactLaw<K>) -> f64 {
    let mut sum = (p.tail - q.tail).abs();
    for (k, a) in &p.probabilities {
        sum += (a - q.probability(k)).abs();
    }
    for (k, b) in &q.probabilities {
        if !p.probabilities.contains_key(k) {
            sum += b;
        }
    }
    sum / 2.0
}

/// Projected TV estimate between an empirical and an exact law.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TvEstimate {
    /// `½ Σ_k |p̂_k − q_k| + ½ |p̂_tail − q_tail|`, a lower bound for the TV over the full
    /// key space.
    pub distance: f64,
    /// `distance + min(p̂_tail, q_tail)`, an upper bound for the TV over the full key space.
    pub upper_bound: f64,
    /// Confidence radius at level [`CONFIDENCE`] for the fluctuation of `distance`.
    pub radius: f64,
    /// Plug-in estimate `½ Σ_k sqrt(p̂_k (1 − p̂_k) / N)` of the upward bias of `distance`.
    pub bias_estimate: f64,
    pub samples: u64,
    pub keys: usize,
}

/// `sqrt(ln(2/α) / (2N))` with `α = 1 − CONFIDENCE`.
///
/// Changing one of the `N` observations moves the projected distance by at most `1/N`,
/// so by the bounded-differences inequality
/// `P(|d̂ − E d̂| ≥ t) ≤ 2 exp(−2 N t²)`, the same form as the Dvoretzky-Kiefer-Wolfowitz
/// bound for distribution functions.
pub fn confidence_radius(samples: u64) -> f64 {
    ((2.0 / (1.0 - CONFIDENCE)).ln() / (2.0 * samples as f64)).sqrt()
}

/// Radius at level [`CONFIDENCE`] for the TV between the empirical law of `N` draws and
/// the true law on `K` keys, from `P(‖p̂ − p‖₁ ≥ ε) ≤ (2^K − 2) exp(−N ε² / 2)`.
///
/// Unlike [`confidence_radius`] it bounds the distance itself, bias included, so it grows
/// with the number of keys.
pub fn multinomial_tv_radius(keys: usize, samples: u64) -> f64 {
    let k = keys.max(2) as f64;
    // ln(2^K − 2) = K ln 2 + ln(1 − 2^{1−K})
    let ln_count = k * std::f64::consts::LN_2 + (-(2f64.powf(1.0 - k))).ln_1p();
    let l1 = (2.0 * (ln_count + (1.0 / (1.0 - CONFIDENCE)).ln()) / samples as f64).sqrt();
    l1 / 2.0
}

pub fn tv_distance<K: Ord + Display>(p: &EmpiricalLaw<K>, q: &ExactLaw<K>) -> Result<TvEstimate> {
    if p.total == 0 {
        return Err(Error::InsufficientData("empty empirical law".into()));
    }
    if let Some(k) = p.counts.keys().find(|k| !q.probabilities.contains_key(k)) {
        return Err(Error::KeyMismatch(k.to_string()));
    }
    let n = p.total as f64;
    let mut sum = 0.0;
    let mut bias = 0.0;
    for (k, &b) in &q.probabilities {
        let a = p.frequency(k);
        sum += (a - b).abs();
        bias += (a * (1.0 - a) / n).sqrt();
    }
    let pt = p.tail_frequency();
    sum += (pt - q.tail).abs();
    bias += (pt * (1.0 - pt) / n).sqrt();
    let distance = sum / 2.0;
    Ok(TvEstimate {
        distance,
        upper_bound: distance + pt.min(q.tail),
        radius: confidence_radius(p.total),
        bias_estimate: bias / 2.0,
        samples: p.total,
        keys: q.probabilities.len() + 1,
    })
}

/// True if every consecutive pair decreases by more than the sum of the two radii.
pub fn decreasing_beyond_radii(estimates: &[TvEstimate]) -> bool {
    estimates.windows(2).all(|w| w[0].distance - w[1].distance > w[0].radius + w[1].radius)
}

/// Seed of the draws at size `n` in a run seeded with `seed`.
pub fn size_seed(seed: u64, n: usize) -> u64 {
    seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Remainder of one draw of `S_n`: `(remainder or None beyond the cap, remainder size,
/// component count of S_n)`.
type Fragment = (Option<Obj>, usize, usize);

fn draw_fragments(
    model: &GibbsModel,
    n: usize,
    samples: usize,
    cap: usize,
    method: Method,
    seed: u64,
    exec: Execution,
) -> Result<Vec<Fragment>> {
    model.check_lattice(n)?;
    let sampler = SnSampler::new(model, n, method)?;
    parallel::run(exec, size_seed(seed, n), samples, |_, rng| {
        let s = sampler.sample(rng)?;
        let f = extract_remainder(model, &s, rng)?;
        let size = f.remainder_size;
        Ok(((size <= cap).then_some(f.remainder), size, f.component_count))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RemainderRow {
    pub n: usize,
    pub tv: TvEstimate,
    pub mean_remainder_size: f64,
    /// Fraction of draws whose remainder exceeds the cap.
    pub beyond_cap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RemainderTvReport {
    pub cap: usize,
    pub samples: usize,
    pub seed: u64,
    pub method: Method,
    pub rho: f64,
    pub rho_spread: f64,
    pub limit_tail: f64,
    pub limit_normalization_error: f64,
    pub rows: Vec<RemainderRow>,
    /// The TV sequence decreases between consecutive sizes by more than the radii.
    pub decreasing: bool,
}

/// Empirical law of the remainder `R_n` against the limit law of `R`, for each size.
pub fn remainder_tv_experiment(
    model: &GibbsModel,
    sizes: &[usize],
    samples: usize,
    cap: usize,
    seed: u64,
    method: Method,
    exec: Execution,
) -> Result<RemainderTvReport> {
    for &n in sizes {
        model.check_lattice(n)?;
        model.check_size(n)?;
    }
    let limit = limit_remainder_distribution(model, cap)?;
    let exact = ExactLaw::from_limit(&limit);
    let mut rows = Vec::new();
    for &n in sizes {
        let frags = draw_fragments(model, n, samples, cap, method, seed, exec)?;
        let mean = frags.iter().map(|f| f.1 as f64).sum::<f64>() / samples as f64;
        let law: EmpiricalLaw<Obj> = frags.into_iter().map(|f| f.0).collect();
        let tv = tv_distance(&law, &exact)?;
        rows.push(RemainderRow { n, mean_remainder_size: mean, beyond_cap: law.tail_frequency(), tv });
    }
    let decreasing = decreasing_beyond_radii(&rows.iter().map(|r| r.tv.clone()).collect::<Vec<_>>());
    Ok(RemainderTvReport {
        cap,
        samples,
        seed,
        method,
        rho: limit.rho,
        rho_spread: limit.rho_spread,
        limit_tail: limit.tail,
        limit_normalization_error: limit.normalization_error,
        rows,
        decreasing,
    })
}

/// Exact law of the remainder `R_n`, by enumerating all composite objects of size `n`.
pub fn exact_remainder_law(model: &GibbsModel, n: usize, cap: usize) -> Result<ExactLaw<Obj>> {
    let mut en = Enumerator::new(model.graph(), n.max(DEFAULT_GUARD));
    let objs = en.objects(model.composite_node(), n)?;
    let total: f64 = objs.iter().map(|(_, w)| rational::to_f64(w)).sum();
    let mut probabilities = BTreeMap::new();
    let mut tail = 0.0;
    for (s, w) in objs.iter() {
        let p = rational::to_f64(w) / total;
        for (r, q) in remainder_law(model, s)? {
            if r.size() <= cap {
                *probabilities.entry(r).or_insert(0.0) += p * q;
            } else {
                tail += p * q;
            }
        }
    }
    ExactLaw::new(probabilities, tail)
}

/// Empirical law of `R_n`; remainders larger than the cap fall into the tail bucket.
pub fn empirical_remainder_law(
    model: &GibbsModel,
    n: usize,
    samples: usize,
    cap: usize,
    seed: u64,
    method: Method,
    exec: Execution,
) -> Result<EmpiricalLaw<Obj>> {
    let frags = draw_fragments(model, n, samples, cap, method, seed, exec)?;
    Ok(frags.into_iter().map(|f| f.0).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelfTestRow {
    pub n: usize,
    pub tv: TvEstimate,
    /// `distance ≤ bias_estimate + radius`.
    pub consistent: bool,
}

/// Sampled remainders of `S_n` against the exact push-forward of the enumerated law.
pub fn remainder_self_test(
    model: &GibbsModel,
    n: usize,
    samples: usize,
    cap: usize,
    seed: u64,
    method: Method,
    exec: Execution,
) -> Result<SelfTestRow> {
    let exact = exact_remainder_law(model, n, cap)?;
    let law = empirical_remainder_law(model, n, samples, cap, seed, method, exec)?;
    let tv = tv_distance(&law, &exact)?;
    let consistent = tv.distance <= tv.bias_estimate + tv.radius;
    Ok(SelfTestRow { n, tv, consistent })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentCountReport {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub empirical: EmpiricalLaw<usize>,
    /// `P(1 + c(R) = k)`.
    pub limit: Vec<(usize, f64)>,
    pub limit_tail: f64,
    pub limit_normalization_error: f64,
    pub tv: TvEstimate,
}

/// Empirical law of the number of components of `S_n` against the law of `1 + c(R)`.
pub fn component_count_experiment(
    model: &GibbsModel,
    n: usize,
    samples: usize,
    seed: u64,
    method: Method,
    exec: Execution,
) -> Result<ComponentCountReport> {
    model.check_lattice(n)?;
    let max_count = n.min(model.truncation());
    let law = ComponentLaw::new(model, max_count)?;
    let limit: Vec<(usize, f64)> = law.shifted();
    let exact = ExactLaw::new(limit.iter().copied().collect(), law.tail)?;
    let sampler = SnSampler::new(model, n, method)?;
    let counts = parallel::run(exec, size_seed(seed, n), samples, |_, rng| {
        Ok(sampler.sample(rng)?.component_count())
    })?;
    let empirical: EmpiricalLaw<usize> = counts.into_iter().map(|c| (c <= max_count + 1).then_some(c)).collect();
    let tv = tv_distance(&empirical, &exact)?;
    Ok(ComponentCountReport {
        n,
        samples,
        seed,
        empirical,
        limit,
        limit_tail: law.tail,
        limit_normalization_error: law.normalization_error,
        tv,
    })
}
