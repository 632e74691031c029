//! The composite model `F^ω ∘ G^ν` and its cached series.

use std::sync::Arc;

use num_traits::Zero;
use serde::Serialize;

use crate::cycle_index::{CycleIndex, FactoredCycleIndex};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::series::{RadiusEstimate, RadiusEvaluation, TruncatedSeries};
use crate::species::graph::{Graph, Node, NodeId};
use crate::species::{cycle_index as species_ci, Engine, Expr, SpeciesSpec, Unranker, WeightModel};

/// Truncation of the cycle index of an outer species that is not a plain SET or SEQ.
pub const GENERAL_CYCLE_INDEX_TRUNCATION: usize = 16;

/// Outer species with a closed-form cycle index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum OuterKind {
    /// `SET` with each outer atom weighted by the given constant.
    Set(#[serde(with = "rational::serde_str")] Rational),
    /// `SEQ` with each outer atom weighted by the given constant.
    Seq(#[serde(with = "rational::serde_str")] Rational),
    General,
}

pub struct GibbsModel {
    spec: SpeciesSpec,
    truncation: usize,
    engine: Arc<Engine>,
    unranker: Arc<Unranker>,
    outer: NodeId,
    inner: NodeId,
    composite: NodeId,
    derived: NodeId,
    kind: OuterKind,
    cycle_index: CycleIndex,
    derived_cycle_index: CycleIndex,
    inner_series: TruncatedSeries,
    radius: Option<RadiusEstimate>,
}

/// True if the root of the spec resolves to `COMPOSE(F, G)`.
pub fn has_composite_root(spec: &SpeciesSpec) -> bool {
    split_root(spec).is_ok()
}

/// Splits the root of a spec into outer and inner species.
fn split_root(spec: &SpeciesSpec) -> Result<(Expr, Expr)> {
    let mut e = spec.root_expr().clone();
    for _ in 0..=spec.definitions.len() {
        match e {
            Expr::Compose(f, g) => return Ok((*f, *g)),
            Expr::Ref(ref n) => e = spec.get(n).ok_or_else(|| Error::UnknownName(n.clone()))?.clone(),
            Expr::Weighted(inner, WeightModel::Unit) => e = *inner,
            _ => break,
        }
    }
    Err(Error::InvalidArgument("the model root must be COMPOSE(F, G)".into()))
}

impl GibbsModel {
    /// Model from a spec whose root is `COMPOSE(F, G)`.
    pub fn new(spec: &SpeciesSpec, truncation: usize) -> Result<Self> {
        let (f, g) = split_root(spec)?;
        Self::from_parts(spec, &f, &g, truncation)
    }

    /// Model `f ∘ g`, with references resolved in `spec`.
    pub fn from_parts(spec: &SpeciesSpec, f: &Expr, g: &Expr, truncation: usize) -> Result<Self> {
        if truncation < 2 {
            return Err(Error::InvalidArgument("truncation must be at least 2".into()));
        }
        let mut graph = Graph::new();
        let inner = graph.compile_expr(spec, g)?;
        match graph.valuation(inner) {
            None => return Err(Error::InvalidArgument("the inner species has no objects".into())),
            Some(0) => return Err(Error::InnerHasConstantTerm),
            Some(_) => {}
        }
        let outer = graph.compile_expr(spec, f)?;
        let composite = graph.compile_over(spec, f, inner)?;
        let derived = graph.compile_over(spec, &Expr::derive(f.clone()), inner)?;
        let kind = match graph.node(graph.resolve(outer)) {
            Node::Set(a) => match graph.node(graph.resolve(*a)) {
                Node::Atom(c) => OuterKind::Set(c.clone()),
                _ => OuterKind::General,
            },
            Node::Seq(a) => match graph.node(graph.resolve(*a)) {
                Node::Atom(c) => OuterKind::Seq(c.clone()),
                _ => OuterKind::General,
            },
            _ => OuterKind::General,
        };
        let cycle_index = match &kind {
            OuterKind::Set(c) => CycleIndex::Factored(FactoredCycleIndex::set(truncation, c)),
            OuterKind::Seq(c) => CycleIndex::Factored(FactoredCycleIndex::seq(truncation, c)),
            OuterKind::General => CycleIndex::Sparse(species_ci::of_node(
                &graph,
                outer,
                truncation.min(GENERAL_CYCLE_INDEX_TRUNCATION),
            )?),
        };
        let derived_cycle_index = cycle_index.derivative_z1();
        let engine = Arc::new(Engine::new(Arc::new(graph)));
        let unranker = Arc::new(Unranker::new(engine.clone()));
        let inner_series = engine.series(inner, 1, truncation)?;
        let composite_series = engine.series(composite, 1, truncation)?;
        if composite_series.coeffs().iter().skip(1).all(Zero::is_zero) {
            return Err(Error::InvalidArgument("the composite species has no objects of positive size".into()));
        }
        let radius = if is_polynomial(&inner_series) { None } else { inner_series.radius_estimate().ok() };
        Ok(GibbsModel {
            spec: spec.clone(),
            truncation,
            engine,
            unranker,
            outer,
            inner,
            composite,
            derived,
            kind,
            cycle_index,
            derived_cycle_index,
            inner_series,
            radius,
        })
    }

    pub fn spec(&self) -> &SpeciesSpec {
        &self.spec
    }
    pub fn truncation(&self) -> usize {
        self.truncation
    }
    pub fn engine(&self) -> &Arc<Engine> {
        &self.engine
    }
    pub fn unranker(&self) -> &Arc<Unranker> {
        &self.unranker
    }
    pub fn graph(&self) -> &Graph {
        self.engine.graph()
    }
    pub fn outer_node(&self) -> NodeId {
        self.outer
    }
    pub fn inner_node(&self) -> NodeId {
        self.inner
    }
    pub fn composite_node(&self) -> NodeId {
        self.composite
    }
    pub fn derived_node(&self) -> NodeId {
        self.derived
    }
    pub fn outer_kind(&self) -> &OuterKind {
        &self.kind
    }

    /// Cycle index sum of the outer species.
    pub fn cycle_index(&self) -> &CycleIndex {
        &self.cycle_index
    }

    /// `∂/∂z_1` of the outer cycle index.
    pub fn derived_cycle_index(&self) -> &CycleIndex {
        &self.derived_cycle_index
    }

    /// `G̃^{ν^i}(z)`, truncated at the model truncation.
    pub fn inner_series(&self, i: u32) -> Result<TruncatedSeries> {
        if i == 1 {
            return Ok(self.inner_series.clone());
        }
        self.engine.series(self.inner, i, self.truncation)
    }

    pub fn outer_series(&self) -> Result<TruncatedSeries> {
        self.engine.series(self.outer, 1, self.truncation)
    }

    pub fn composite_series(&self) -> Result<TruncatedSeries> {
        self.engine.series(self.composite, 1, self.truncation)
    }

    /// Generating series of `F′ ∘ G`.
    pub fn derived_series(&self) -> Result<TruncatedSeries> {
        self.engine.series(self.derived, 1, self.truncation)
    }

    pub fn radius(&self) -> Result<&RadiusEstimate> {
        self.radius.as_ref().ok_or(Error::InnerNotSubexponential)
    }

    pub fn rho(&self) -> Result<f64> {
        Ok(self.radius()?.rho)
    }

    /// Lattice span of the inner series.
    pub fn span(&self) -> usize {
        self.inner_series.span()
    }

    /// `G̃(ρ)`, summed up to the truncation with a fitted power-law tail.
    pub fn inner_at_rho(&self) -> Result<RadiusEvaluation> {
        self.inner_series.evaluate_at_radius(self.rho()?)
    }

    /// `G̃^{ν^i}(x^i)` for `i ≥ 1`; at `x = ρ` the `i = 1` value includes the fitted tail,
    /// elsewhere the geometric tail majorant is added.
    pub fn inner_value(&self, i: usize, x: f64) -> Result<f64> {
        if i == 1 {
            if let Some(r) = &self.radius {
                if x >= r.rho {
                    if x > r.rho * (1.0 + 1e-12) {
                        return Err(Error::TailNotControlled { x, ratio: x / r.rho });
                    }
                    return Ok(self.inner_series.evaluate_at_radius(r.rho)?.value);
                }
            }
        }
        let xi = x.powi(i as i32);
        if xi < 1e-300 {
            return Ok(0.0);
        }
        let s = self.inner_series(i as u32)?;
        Ok(s.evaluate(xi)?.total())
    }

    /// Outer arguments `(G̃^{ν^i}(x^i))_{i ≥ 1}`, up to the last index that can matter.
    pub fn outer_arguments(&self, x: f64) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        let vmin = self.graph().valuation(self.inner).unwrap_or(1);
        for i in 1..=self.truncation {
            let v = self.inner_value(i, x)?;
            out.push(v);
            // The inner series starts at z^{vmin}, so later arguments are below x^{i·vmin}.
            if i >= 2 && (v < 1e-18 || (x.ln() * (i * vmin) as f64) < -45.0) {
                break;
            }
        }
        Ok(out)
    }

    /// Fails unless composite objects of size `n` exist within the truncation.
    pub fn check_size(&self, n: usize) -> Result<()> {
        if n > self.truncation {
            return Err(Error::TruncationExceeded { requested: n, truncation: self.truncation });
        }
        if self.engine.coeff(self.composite, 1, n)?.is_zero() {
            return Err(Error::EmptySize(n));
        }
        Ok(())
    }

    /// Lattice condition `n ≡ 0 mod d` on the inner span.
    pub fn check_lattice(&self, n: usize) -> Result<()> {
        let d = self.span();
        if n % d != 0 {
            return Err(Error::OffLattice { n, span: d, residue: n % d });
        }
        Ok(())
    }
}

/// A truncated series is treated as a polynomial if its support ends at least one
/// lattice step before the truncation order.
pub fn is_polynomial(s: &TruncatedSeries) -> bool {
    match s.support().last() {
        None => true,
        Some(last) => last + s.span() <= s.truncation(),
    }
}
