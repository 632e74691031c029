//! The coupled object `Ŝ_n`: a limit remainder `R` with one inner object of size
//! `n − |R|` attached at its `*`.

use rand::Rng;
use serde::Serialize;

use super::limit::limit_remainder_distribution;
use super::model::GibbsModel;
use super::remainder::attach_component;
use crate::error::{Error, Result};
use crate::rational;
use crate::species::Obj;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum HatSample {
    Object(Obj),
    /// `|R| ≥ n`.
    Placeholder,
}

/// Sampler of `Ŝ_n` with the size law of `R` precomputed.
pub struct HatSampler<'m> {
    model: &'m GibbsModel,
    n: usize,
    /// `P(|R| ≤ k)` for `k < n`.
    cum: Vec<f64>,
}

impl<'m> HatSampler<'m> {
    pub fn new(model: &'m GibbsModel, n: usize) -> Result<Self> {
        model.check_size(n)?;
        let rho = model.rho()?;
        let normalizer = limit_remainder_distribution(model, 0)?.normalizer;
        let derived = model.derived_series()?;
        let mut acc = 0.0;
        let cum = (0..n)
            .map(|k| {
                let c = derived.coeff(k);
                if !num_traits::Zero::is_zero(&c) {
                    acc += (rational::ln(&c) + k as f64 * rho.ln() - normalizer.ln()).exp();
                }
                acc
            })
            .collect();
        Ok(HatSampler { model, n, cum })
    }

    /// `P(|R| ≥ n)`.
    pub fn placeholder_probability(&self) -> f64 {
        (1.0 - self.cum.last().copied().unwrap_or(0.0)).max(0.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<HatSample> {
        let u: f64 = rng.gen();
        let k = self.cum.partition_point(|&c| c <= u);
        if k >= self.n {
            return Ok(HatSample::Placeholder);
        }
        let m = self.model;
        if num_traits::Zero::is_zero(&m.engine().coeff(m.inner_node(), 1, self.n - k)?) {
            return Err(Error::EmptySize(self.n - k));
        }
        let r = m.unranker().sample(m.derived_node(), 1, k, rng)?;
        let g = m.unranker().sample(m.inner_node(), 1, self.n - k, rng)?;
        Ok(HatSample::Object(attach_component(m, &r, &g)?))
    }
}

pub fn sample_hat_s_n<R: Rng + ?Sized>(model: &GibbsModel, n: usize, rng: &mut R) -> Result<HatSample> {
    HatSampler::new(model, n)?.sample(rng)
}
