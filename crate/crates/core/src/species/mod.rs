//! Weighted species: specification, compilation, coefficients, enumeration and
//! unranking.

pub mod cycle_index;
pub mod dsl;
pub mod engine;
pub mod enumerate;
pub mod graph;
pub mod object;
pub mod spec;
pub mod unrank;

use std::sync::Arc;

use crate::error::Result;
use crate::rational::Rational;
use crate::series::TruncatedSeries;

pub use engine::Engine;
pub use graph::{Graph, NodeId};
pub use object::Obj;
pub use spec::{builtin, Expr, SpeciesSpec, WeightModel};
pub use unrank::Unranker;

/// A compiled specification together with its coefficient engine.
pub struct Species {
    spec: SpeciesSpec,
    root: NodeId,
    engine: Arc<Engine>,
    unranker: Arc<Unranker>,
}

impl Species {
    pub fn compile(spec: &SpeciesSpec) -> Result<Self> {
        let mut g = Graph::new();
        let root = g.compile_spec(spec)?;
        Ok(Self::from_graph(spec.clone(), g, root))
    }

    pub fn parse(src: &str) -> Result<Self> {
        Self::compile(&dsl::parse_any(src)?)
    }

    fn from_graph(spec: SpeciesSpec, g: Graph, root: NodeId) -> Self {
        let engine = Arc::new(Engine::new(Arc::new(g)));
        let unranker = Arc::new(Unranker::new(engine.clone()));
        Species { spec, root, engine, unranker }
    }

    pub fn spec(&self) -> &SpeciesSpec {
        &self.spec
    }

    pub fn root(&self) -> NodeId {
        self.root
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

    /// Generating series of `ν^power`, truncated at `n`; power 0 counts objects.
    pub fn ogf(&self, power: u32, n: usize) -> Result<TruncatedSeries> {
        self.engine.series(self.root, power, n)
    }

    /// All objects of size `n` with their weights; fails beyond `guard`.
    pub fn enumerate(&self, n: usize, guard: usize) -> Result<Vec<(Obj, Rational)>> {
        let mut en = enumerate::Enumerator::new(self.graph(), guard);
        Ok(en.objects(self.root, n)?.as_ref().clone())
    }

    /// The object whose weight-proportional cell in `[0, 1)` contains `u`.
    pub fn unrank_by_weight(&self, n: usize, u: &Rational) -> Result<Obj> {
        self.unranker.unrank(self.root, 1, n, u)
    }

    /// Cycle index sum truncated at total degree `n`.
    pub fn cycle_index(&self, n: usize) -> Result<crate::cycle_index::CycleIndexPoly> {
        cycle_index::of_node(self.graph(), self.root, n)
    }
}

/// Canonical form of an object.
pub fn canonicalize(obj: &Obj) -> Obj {
    obj.canonicalize()
}
