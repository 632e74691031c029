//! Joint generating function of the fixpoint count and the size on longer cycles.

use serde::Serialize;

use super::model::GibbsModel;
use super::sampler::CompositeSampler;
use crate::error::{Error, Result};
use crate::parallel::{self, Execution};

/// Monte Carlo estimate of `E[y^f w^h]` next to its closed form, where `f` is the number
/// of fixpoints of the outer symmetry and `h` the total size attached to its longer cycles,
/// for the Pólya-Boltzmann composite at `ρ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PgfReport {
    pub y: f64,
    pub w: f64,
    pub samples: usize,
    pub estimate: f64,
    pub standard_error: f64,
    /// `Z_F(y G̃(ρ), G̃^{ν²}((wρ)²), …) / Z_F(G̃(ρ), G̃^{ν²}(ρ²), …)`.
    pub exact: f64,
}

impl PgfReport {
    /// `|estimate − exact|` in standard errors.
    pub fn z_score(&self) -> f64 {
        let d = (self.estimate - self.exact).abs();
        if self.standard_error > 0.0 { d / self.standard_error } else if d == 0.0 { 0.0 } else { f64::INFINITY }
    }
}

pub fn cycle_statistics_pgf_check(
    model: &GibbsModel,
    y: f64,
    w: f64,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<PgfReport> {
    if !(0.0..=1.0).contains(&y) || !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidArgument("y and w must lie in [0, 1]".into()));
    }
    let rho = model.rho()?;
    let sampler = CompositeSampler::new(model, rho)?;
    let args = sampler.arguments().to_vec();
    let arg = |i: usize| args.get(i - 1).copied().unwrap_or(0.0);
    let mut shifted = Vec::with_capacity(args.len());
    shifted.push(y * args[0]);
    for i in 2..=args.len() {
        shifted.push(model.inner_value(i, w * rho)?);
    }
    let z = model.cycle_index();
    let exact = z.evaluate_value(&|i| shifted.get(i - 1).copied().unwrap_or(0.0)) / z.evaluate_value(&arg);

    let values = parallel::run(exec, seed, samples, |_, rng| {
        let ct = sampler.draw_symmetry(rng)?;
        let mut h = 0usize;
        for &(i, m) in ct.parts().iter().filter(|p| p.0 >= 2) {
            for _ in 0..m {
                h += i * sampler.draw_inner_size(i, rng)?;
            }
        }
        Ok(y.powi(ct.fixpoints() as i32) * w.powi(h as i32))
    })?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(PgfReport { y, w, samples, estimate: mean, standard_error: (var / n).sqrt(), exact })
}
