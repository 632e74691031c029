//! Pólya-Boltzmann sampling of composite structures and exact-size conditioning.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use super::boltzmann::{sample_set_symmetry, SizeTable};
use super::model::{GibbsModel, OuterKind};
use crate::cycle_index::CycleType;
use crate::error::{Error, Result};
use crate::rational;
use crate::species::Obj;

/// Attempts allowed per rejection draw unless configured otherwise.
pub const DEFAULT_REJECTION_BUDGET: u64 = 10_000_000;

/// One inner object shared by all atoms of a cycle of the outer symmetry.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Attachment {
    pub cycle_length: usize,
    pub object: Obj,
}

/// Outer symmetry together with one inner object per cycle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryDraw {
    pub cycle_type: CycleType,
    pub attachments: Vec<Attachment>,
    pub size: usize,
}

impl SymmetryDraw {
    /// The unlabelled composite object, when the outer species is SET or SEQ.
    pub fn composite_object(&self, kind: &OuterKind) -> Option<Obj> {
        let copies = || {
            self.attachments
                .iter()
                .flat_map(|a| std::iter::repeat_n(Obj::comp(a.object.clone()), a.cycle_length))
                .collect::<Vec<_>>()
        };
        match kind {
            OuterKind::Set(_) => Some(Obj::set(copies())),
            OuterKind::Seq(_) => Some(Obj::Seq(copies())),
            OuterKind::General => None,
        }
    }

    pub fn fixpoints(&self) -> usize {
        self.cycle_type.fixpoints()
    }

    /// Total size attached to cycles of length at least 2.
    pub fn size_on_long_cycles(&self) -> usize {
        self.attachments.iter().filter(|a| a.cycle_length >= 2).map(|a| a.cycle_length * a.object.size()).sum()
    }
}

/// Pólya-Boltzmann sampler of the composite species at a fixed parameter `y`.
///
/// The outer symmetry is drawn at arguments `Ĝ_i = G̃^{ν^i}(y^i)`, and an `i`-cycle then
/// receives an inner object of size `k` with probability `g^{(i)}_k y^{ik} / Ĝ_i`. Sizes are
/// drawn before objects so that rejected draws cost no inner sampling.
pub struct CompositeSampler<'m> {
    model: &'m GibbsModel,
    y: f64,
    args: Vec<f64>,
    tables: Vec<SizeTable>,
    outer_weight: f64,
}

impl<'m> CompositeSampler<'m> {
    pub fn new(model: &'m GibbsModel, y: f64) -> Result<Self> {
        if !(y > 0.0) {
            return Err(Error::InvalidArgument(format!("Boltzmann parameter {y} must be positive")));
        }
        let args = model.outer_arguments(y)?;
        let n = model.truncation();
        let tables = args
            .iter()
            .enumerate()
            .map(|(j, &a)| {
                let i = j + 1;
                Ok(SizeTable::new(&model.inner_series(i as u32)?, y.powi(i as i32), a, n / i))
            })
            .collect::<Result<Vec<_>>>()?;
        let outer_weight = match model.outer_kind() {
            OuterKind::Set(c) | OuterKind::Seq(c) => rational::to_f64(c),
            OuterKind::General => 1.0,
        };
        if let OuterKind::Seq(_) = model.outer_kind() {
            let q = outer_weight * args[0];
            if !(q < 1.0) {
                return Err(Error::TailNotControlled { x: y, ratio: q });
            }
        }
        Ok(CompositeSampler { model, y, args, tables, outer_weight })
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    /// Outer arguments `Ĝ_i`, `i ≥ 1`.
    pub fn arguments(&self) -> &[f64] {
        &self.args
    }

    fn arg(&self, i: usize) -> f64 {
        self.args.get(i - 1).copied().unwrap_or(0.0)
    }

    pub fn draw_symmetry<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CycleType> {
        match self.model.outer_kind() {
            OuterKind::Set(_) => {
                let c = self.outer_weight;
                sample_set_symmetry(&|i| c.powi(i as i32) * self.arg(i), rng)
            }
            OuterKind::Seq(_) => {
                let q = self.outer_weight * self.args[0];
                let k = Geometric::new(1.0 - q).map_err(|e| Error::InvalidArgument(e.to_string()))?.sample(rng);
                Ok(CycleType::new(vec![(1, k as usize)]))
            }
            OuterKind::General => self.model.cycle_index().sample(&|i| self.arg(i), rng),
        }
    }

    /// Size of the inner object on an `i`-cycle.
    pub fn draw_inner_size<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> Result<usize> {
        let n = self.model.truncation();
        self.tables
            .get(i - 1)
            .and_then(|t| t.draw(rng))
            .ok_or(Error::TruncationExceeded { requested: n + 1, truncation: n })
    }

    /// Symmetry and per-cycle inner sizes `(cycle length, size)` in draw order; `None`
    /// once the total exceeds `limit` or the truncation.
    pub fn draw_sizes<R: Rng + ?Sized>(
        &self,
        limit: usize,
        rng: &mut R,
    ) -> Result<Option<(CycleType, Vec<(usize, usize)>, usize)>> {
        let ct = self.draw_symmetry(rng)?;
        let mut sizes = Vec::with_capacity(ct.cycle_count());
        let mut total = 0usize;
        for &(i, m) in ct.parts() {
            let Some(table) = self.tables.get(i - 1) else {
                return Ok(None);
            };
            for _ in 0..m {
                let Some(k) = table.draw(rng) else {
                    return Ok(None);
                };
                total += i * k;
                if total > limit {
                    return Ok(None);
                }
                sizes.push((i, k));
            }
        }
        Ok(Some((ct, sizes, total)))
    }

    fn attach<R: Rng + ?Sized>(&self, ct: CycleType, sizes: Vec<(usize, usize)>, size: usize, rng: &mut R) -> Result<SymmetryDraw> {
        let inner = self.model.inner_node();
        let attachments = sizes
            .into_iter()
            .map(|(i, k)| {
                Ok(Attachment { cycle_length: i, object: self.model.unranker().sample(inner, i as u32, k, rng)? })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SymmetryDraw { cycle_type: ct, attachments, size })
    }

    /// Unconditioned draw; fails if the size exceeds the truncation.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SymmetryDraw> {
        let n = self.model.truncation();
        match self.draw_sizes(n, rng)? {
            Some((ct, sizes, size)) => self.attach(ct, sizes, size, rng),
            None => Err(Error::TruncationExceeded { requested: n + 1, truncation: n }),
        }
    }

    /// Draw conditioned on total size `n`, by rejection.
    pub fn sample_conditioned<R: Rng + ?Sized>(&self, n: usize, budget: u64, rng: &mut R) -> Result<SymmetryDraw> {
        for _ in 0..budget {
            if let Some((ct, sizes, size)) = self.draw_sizes(n, rng)? {
                if size == n {
                    return self.attach(ct, sizes, size, rng);
                }
            }
        }
        Err(Error::RejectionBudgetExceeded(budget))
    }
}

/// Boltzmann draw of the composite species at parameter `y`.
pub fn sample_composite<R: Rng + ?Sized>(model: &GibbsModel, y: f64, rng: &mut R) -> Result<SymmetryDraw> {
    CompositeSampler::new(model, y)?.sample(rng)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rejection,
    #[default]
    ExactRecursive,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Rejection => "rejection",
            Method::ExactRecursive => "exact_recursive",
        })
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rejection" => Ok(Method::Rejection),
            "exact" | "exact_recursive" => Ok(Method::ExactRecursive),
            _ => Err(Error::InvalidArgument(format!("unknown sampling method `{s}`"))),
        }
    }
}

/// Sampler of `S_n`: composite objects of size `n`, with probability proportional to
/// their weight.
pub struct SnSampler<'m> {
    model: &'m GibbsModel,
    n: usize,
    method: Method,
    rejection: Option<CompositeSampler<'m>>,
    budget: u64,
}

impl<'m> SnSampler<'m> {
    pub fn new(model: &'m GibbsModel, n: usize, method: Method) -> Result<Self> {
        model.check_size(n)?;
        let rejection = match method {
            Method::ExactRecursive => None,
            Method::Rejection => {
                if *model.outer_kind() == OuterKind::General {
                    return Err(Error::Unsupported(
                        "rejection sampling needs a SET or SEQ outer species; use exact_recursive".into(),
                    ));
                }
                Some(tuned_sampler(model, n)?)
            }
        };
        Ok(SnSampler { model, n, method, rejection, budget: DEFAULT_REJECTION_BUDGET })
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Boltzmann parameter used by the rejection sampler.
    pub fn parameter(&self) -> Option<f64> {
        self.rejection.as_ref().map(CompositeSampler::y)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Obj> {
        match &self.rejection {
            None => self.model.unranker().sample(self.model.composite_node(), 1, self.n, rng),
            Some(s) => {
                let draw = s.sample_conditioned(self.n, self.budget, rng)?;
                Ok(draw.composite_object(self.model.outer_kind()).expect("SET or SEQ outer species"))
            }
        }
    }
}

/// `y* = ρ (1 − 1/n)^{1/d}`, moved inwards until the sampler's arguments are evaluable.
fn tuned_sampler(model: &GibbsModel, n: usize) -> Result<CompositeSampler<'_>> {
    let composite_rho = model.composite_series()?.radius_estimate().ok().map(|r| r.rho);
    let rho = match (model.rho().ok(), composite_rho) {
        (Some(a), Some(b)) => a.min(b),
        (a, b) => a.or(b).ok_or(Error::InnerNotSubexponential)?,
    };
    let d = model.span() as f64;
    let mut y = rho * (1.0 - 1.0 / n as f64).powf(1.0 / d);
    let mut last = None;
    for _ in 0..200 {
        match CompositeSampler::new(model, y) {
            Ok(s) => return Ok(s),
            Err(e @ (Error::TailNotControlled { .. } | Error::InsufficientData(_))) => last = Some(e),
            Err(e) => return Err(e),
        }
        y *= 1.0 - 1.0 / (4.0 * n as f64);
    }
    Err(last.unwrap_or(Error::TailNotControlled { x: y, ratio: 1.0 }))
}

/// One draw of `S_n`.
pub fn sample_s_n<R: Rng + ?Sized>(model: &GibbsModel, n: usize, rng: &mut R, method: Method) -> Result<Obj> {
    SnSampler::new(model, n, method)?.sample(rng)
}
