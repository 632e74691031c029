//! Compiled node graph of a specification.
//!
//! Compilation pushes atom-multiplicative weights down to the atoms and replaces the atoms
//! of a composition's outer species by [`Node::Comp`] nodes carrying the inner species.
//! Every node then has a weight that is multiplicative over its sub-structures, which is
//! what the coefficient engine, the enumerator and the samplers need.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_traits::{One, Zero};

use super::spec::{Expr, SpeciesSpec, WeightModel};
use crate::error::{Error, Result};
use crate::rational::Rational;

pub type NodeId = usize;
pub type DefId = usize;

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Zero,
    /// Size-0 object of weight `c`.
    One(Rational),
    /// The `*`-placeholder of a derivative, weight `c`.
    Star(Rational),
    Atom(Rational),
    Union(NodeId, NodeId),
    Product(NodeId, NodeId),
    Set(NodeId),
    Seq(NodeId),
    Ref(DefId),
    /// Outer atom of weight `c` carrying an inner structure.
    Comp(NodeId, Rational),
    Table(NodeId, Arc<BTreeMap<String, Rational>>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Ctx {
    Plain(Rational),
    Comp(NodeId, Rational),
}

/// Which structures a derivative marks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Target {
    /// Plain atoms; the chain rule descends into components.
    Atoms,
    /// Components carrying the given inner node.
    Components(NodeId),
}

#[derive(Clone, Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    defs: Vec<Option<NodeId>>,
    def_names: Vec<String>,
    def_nodes: Vec<NodeId>,
    interned: HashMap<NodeKey, NodeId>,
    compiled_refs: HashMap<(String, Ctx), DefId>,
    derived: HashMap<(NodeId, Target), NodeId>,
    /// Components introduced by a composition, whose inner species must not have size-0
    /// objects. Derivatives may legitimately mark an inner structure of size 0.
    compositions: Vec<NodeId>,
    derived_defs: HashMap<(DefId, Target), DefId>,
    valuation: Vec<Option<usize>>,
    unit_weight: Vec<bool>,
    contains_one: Vec<bool>,
    analysed: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum NodeKey {
    Zero,
    One(Rational),
    Star(Rational),
    Atom(Rational),
    Union(NodeId, NodeId),
    Product(NodeId, NodeId),
    Set(NodeId),
    Seq(NodeId),
    Comp(NodeId, Rational),
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn def_name(&self, d: DefId) -> &str {
        &self.def_names[d]
    }

    /// Follows references to the first non-reference node.
    pub fn resolve(&self, mut id: NodeId) -> NodeId {
        let mut hops = 0;
        while let Node::Ref(d) = self.nodes[id] {
            id = self.defs[d].expect("definition compiled");
            hops += 1;
            if hops > self.defs.len() {
                break;
            }
        }
        id
    }

    /// Smallest size of an object with nonzero weight, `None` for the empty species.
    pub fn valuation(&self, id: NodeId) -> Option<usize> {
        self.valuation[id]
    }

    /// True if every object has weight 1, so all weight powers coincide.
    pub fn is_unit_weighted(&self, id: NodeId) -> bool {
        self.unit_weight[id]
    }

    fn push(&mut self, node: Node) -> NodeId {
        let key = match &node {
            Node::Zero => Some(NodeKey::Zero),
            Node::One(c) => Some(NodeKey::One(c.clone())),
            Node::Star(c) => Some(NodeKey::Star(c.clone())),
            Node::Atom(c) => Some(NodeKey::Atom(c.clone())),
            Node::Union(a, b) => Some(NodeKey::Union(*a, *b)),
            Node::Product(a, b) => Some(NodeKey::Product(*a, *b)),
            Node::Set(a) => Some(NodeKey::Set(*a)),
            Node::Seq(a) => Some(NodeKey::Seq(*a)),
            Node::Comp(a, c) => Some(NodeKey::Comp(*a, c.clone())),
            Node::Ref(_) | Node::Table(..) => None,
        };
        if let Some(k) = &key {
            if let Some(&id) = self.interned.get(k) {
                return id;
            }
        }
        self.nodes.push(node);
        let id = self.nodes.len() - 1;
        if let Some(k) = key {
            self.interned.insert(k, id);
        }
        id
    }

    fn new_def(&mut self, name: String) -> (DefId, NodeId) {
        self.defs.push(None);
        self.def_names.push(name);
        let d = self.defs.len() - 1;
        self.nodes.push(Node::Ref(d));
        self.def_nodes.push(self.nodes.len() - 1);
        (d, self.nodes.len() - 1)
    }

    /// Compiles the root of `spec` and analyses the graph.
    pub fn compile_spec(&mut self, spec: &SpeciesSpec) -> Result<NodeId> {
        self.compile_expr(spec, spec.root_expr())
    }

    /// Compiles an expression whose references resolve in `spec`.
    pub fn compile_expr(&mut self, spec: &SpeciesSpec, expr: &Expr) -> Result<NodeId> {
        spec.validate()?;
        let id = self.compile(spec, expr, &Ctx::Plain(Rational::one()))?;
        self.analyse()?;
        Ok(id)
    }

    /// Compiles `expr` with each of its atoms carrying an `inner` structure, i.e. the
    /// composition `expr ∘ inner`. A `DERIVE` at the top differentiates with respect to
    /// those components, giving `expr′ ∘ inner`.
    pub fn compile_over(&mut self, spec: &SpeciesSpec, expr: &Expr, inner: NodeId) -> Result<NodeId> {
        spec.validate()?;
        let id = self.compile(spec, expr, &Ctx::Comp(inner, Rational::one()))?;
        self.analyse()?;
        Ok(id)
    }

    /// Derivative of a compiled node with respect to its atoms.
    pub fn derivative(&mut self, id: NodeId) -> Result<NodeId> {
        let d = self.derive(id, Target::Atoms)?;
        self.analyse()?;
        Ok(d)
    }

    fn compile(&mut self, spec: &SpeciesSpec, expr: &Expr, ctx: &Ctx) -> Result<NodeId> {
        Ok(match expr {
            Expr::Atom => match ctx {
                Ctx::Plain(c) => self.push(Node::Atom(c.clone())),
                Ctx::Comp(g, c) => {
                    let id = self.push(Node::Comp(*g, c.clone()));
                    self.compositions.push(id);
                    id
                }
            },
            Expr::Epsilon => self.push(Node::One(Rational::one())),
            Expr::Set(e) => {
                let a = self.compile(spec, e, ctx)?;
                self.push(Node::Set(a))
            }
            Expr::Seq(e) => {
                let a = self.compile(spec, e, ctx)?;
                self.push(Node::Seq(a))
            }
            Expr::Union(a, b) => {
                let (a, b) = (self.compile(spec, a, ctx)?, self.compile(spec, b, ctx)?);
                self.push(Node::Union(a, b))
            }
            Expr::Product(a, b) => {
                let (a, b) = (self.compile(spec, a, ctx)?, self.compile(spec, b, ctx)?);
                self.push(Node::Product(a, b))
            }
            Expr::Compose(f, g) => {
                let inner = self.compile(spec, g, ctx)?;
                self.compile(spec, f, &Ctx::Comp(inner, Rational::one()))?
            }
            Expr::Derive(e) => {
                let body = self.compile(spec, e, ctx)?;
                self.analyse()?;
                let target = match ctx {
                    Ctx::Plain(_) => Target::Atoms,
                    Ctx::Comp(g, _) => Target::Components(*g),
                };
                self.derive(body, target)?
            }
            Expr::Weighted(e, w) => match w {
                WeightModel::Unit => self.compile(spec, e, ctx)?,
                WeightModel::AtomMultiplicative(c) => {
                    let ctx = match ctx {
                        Ctx::Plain(s) => Ctx::Plain(s * c),
                        Ctx::Comp(g, s) => Ctx::Comp(*g, s * c),
                    };
                    self.compile(spec, e, &ctx)?
                }
                WeightModel::Table(t) => {
                    let a = self.compile(spec, e, ctx)?;
                    let id = self.nodes.len();
                    self.nodes.push(Node::Table(a, Arc::new(t.clone())));
                    id
                }
            },
            Expr::Ref(name) => {
                let key = (name.clone(), ctx.clone());
                if let Some(&d) = self.compiled_refs.get(&key) {
                    return Ok(self.ref_node(d));
                }
                let (d, node) = self.new_def(name.clone());
                self.compiled_refs.insert(key, d);
                let body_expr = spec.get(name).ok_or_else(|| Error::UnknownName(name.clone()))?;
                let body = self.compile(spec, body_expr, ctx)?;
                self.defs[d] = Some(body);
                node
            }
        })
    }

    fn ref_node(&self, d: DefId) -> NodeId {
        self.def_nodes[d]
    }

    fn derive(&mut self, id: NodeId, target: Target) -> Result<NodeId> {
        if let Some(&d) = self.derived.get(&(id, target)) {
            return Ok(d);
        }
        let node = self.nodes[id].clone();
        let out = match node {
            Node::Zero | Node::One(_) | Node::Star(_) => self.push(Node::Zero),
            Node::Atom(c) => match target {
                Target::Atoms => self.push(Node::Star(c)),
                Target::Components(_) => self.push(Node::Zero),
            },
            Node::Comp(g, c) => match target {
                Target::Components(h) if h == g => self.push(Node::Star(c)),
                _ => {
                    let dg = self.derive(g, target)?;
                    self.push(Node::Comp(dg, c))
                }
            },
            Node::Union(a, b) => {
                let (da, db) = (self.derive(a, target)?, self.derive(b, target)?);
                self.push(Node::Union(da, db))
            }
            Node::Product(a, b) => {
                let (da, db) = (self.derive(a, target)?, self.derive(b, target)?);
                let l = self.push(Node::Product(da, b));
                let r = self.push(Node::Product(a, db));
                self.push(Node::Union(l, r))
            }
            Node::Set(a) => {
                let da = self.derive(a, target)?;
                self.push(Node::Product(id, da))
            }
            Node::Seq(a) => {
                let da = self.derive(a, target)?;
                let l = self.push(Node::Product(id, da));
                self.push(Node::Product(l, id))
            }
            Node::Ref(d) => {
                if let Some(&dd) = self.derived_defs.get(&(d, target)) {
                    self.ref_node(dd)
                } else {
                    let body = self.defs[d].ok_or_else(|| {
                        Error::Unsupported(format!("derivative of `{}` inside its own definition", self.def_names[d]))
                    })?;
                    let name = format!("{}'", self.def_names[d]);
                    let (dd, node) = self.new_def(name);
                    self.derived_defs.insert((d, target), dd);
                    self.derived.insert((id, target), node);
                    let db = self.derive(body, target)?;
                    self.defs[dd] = Some(db);
                    node
                }
            }
            Node::Table(..) => return Err(Error::Unsupported("derivative of a table-weighted species".into())),
        };
        self.derived.insert((id, target), out);
        Ok(out)
    }

    /// Recomputes valuations and weight flags and checks well-foundedness.
    fn analyse(&mut self) -> Result<()> {
        let n = self.nodes.len();
        if self.analysed == n && self.defs.iter().all(Option::is_some) {
            return Ok(());
        }
        if self.defs.iter().any(Option::is_none) {
            // Still inside a recursive definition; checked once it is complete.
            return Ok(());
        }
        self.valuation = vec![None; n];
        loop {
            let mut changed = false;
            for id in 0..n {
                let v = self.val_step(id);
                if v != self.valuation[id] {
                    self.valuation[id] = v;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        self.unit_weight = vec![true; n];
        loop {
            let mut changed = false;
            for id in 0..n {
                let u = self.unit_step(id);
                if u != self.unit_weight[id] {
                    self.unit_weight[id] = u;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        self.contains_one = vec![false; n];
        loop {
            let mut changed = false;
            for id in 0..n {
                let c = self.one_step(id);
                if c != self.contains_one[id] {
                    self.contains_one[id] = c;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for &id in &self.compositions {
            if let Node::Comp(g, _) = self.nodes[id] {
                if self.valuation[g] == Some(0) || self.contains_one[g] {
                    return Err(Error::InnerHasConstantTerm);
                }
            }
        }
        for id in 0..n {
            match self.nodes[id] {
                Node::Set(a) | Node::Seq(a) if self.valuation[a] == Some(0) => {
                    return Err(Error::IllFoundedRecursion(
                        "SET or SEQ applied to a species with objects of size 0".into(),
                    ));
                }
                _ => {}
            }
        }
        self.analysed = n;
        Ok(())
    }

    fn val_step(&self, id: NodeId) -> Option<usize> {
        let v = &self.valuation;
        match &self.nodes[id] {
            Node::Zero => None,
            Node::One(c) | Node::Star(c) => (!c.is_zero()).then_some(0),
            Node::Atom(c) => (!c.is_zero()).then_some(1),
            Node::Union(a, b) => match (v[*a], v[*b]) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, y) => x.or(y),
            },
            Node::Product(a, b) => Some(v[*a]? + v[*b]?),
            Node::Set(_) | Node::Seq(_) => Some(0),
            Node::Ref(d) => v[self.defs[*d].expect("compiled")],
            Node::Comp(g, c) => {
                if c.is_zero() {
                    None
                } else {
                    v[*g]
                }
            }
            Node::Table(a, t) => {
                if t.values().all(Zero::is_zero) {
                    None
                } else {
                    v[*a]
                }
            }
        }
    }

    fn unit_step(&self, id: NodeId) -> bool {
        let u = &self.unit_weight;
        match &self.nodes[id] {
            Node::Zero => true,
            Node::One(c) | Node::Star(c) | Node::Atom(c) => c.is_one(),
            Node::Union(a, b) | Node::Product(a, b) => u[*a] && u[*b],
            Node::Set(a) | Node::Seq(a) => u[*a],
            Node::Ref(d) => u[self.defs[*d].expect("compiled")],
            Node::Comp(g, c) => c.is_one() && u[*g],
            Node::Table(..) => false,
        }
    }

    fn one_step(&self, id: NodeId) -> bool {
        let c = &self.contains_one;
        match &self.nodes[id] {
            Node::Zero | Node::Atom(_) | Node::Star(_) => false,
            Node::One(_) => true,
            Node::Union(a, b) | Node::Product(a, b) => c[*a] || c[*b],
            Node::Set(a) | Node::Seq(a) | Node::Comp(a, _) | Node::Table(a, _) => c[*a],
            Node::Ref(d) => c[self.defs[*d].expect("compiled")],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::species::dsl;

    #[test]
    fn weights_are_pushed_to_atoms() {
        let spec = dsl::parse("S := WEIGHTED(SEQ(ATOM*ATOM), ATOM_MULT(1/2))").unwrap();
        let mut g = Graph::new();
        let root = g.compile_spec(&spec).unwrap();
        let Node::Seq(p) = g.node(g.resolve(root)) else { panic!() };
        let Node::Product(a, b) = g.node(*p) else { panic!() };
        assert_eq!(g.node(*a), &Node::Atom(crate::rational::ratio(1, 2)));
        assert_eq!(a, b);
        assert!(!g.is_unit_weighted(root));
    }

    #[test]
    fn composition_replaces_outer_atoms() {
        let spec = dsl::parse("T := ATOM * SET(T); M := COMPOSE(SET, T)").unwrap();
        let mut g = Graph::new();
        let root = g.compile_spec(&spec).unwrap();
        let Node::Set(c) = g.node(g.resolve(root)) else { panic!() };
        assert!(matches!(g.node(*c), Node::Comp(..)));
        assert_eq!(g.valuation(root), Some(0));
        assert!(g.is_unit_weighted(root));
    }

    #[test]
    fn ill_founded_definitions_are_rejected() {
        let mut g = Graph::new();
        let spec = dsl::parse("T := SET(T)").unwrap();
        assert!(matches!(g.compile_spec(&spec), Err(Error::IllFoundedRecursion(_))));
        let mut g = Graph::new();
        let spec = dsl::parse("M := COMPOSE(SET, EPSILON + ATOM)").unwrap();
        assert!(matches!(g.compile_spec(&spec), Err(Error::InnerHasConstantTerm)));
        let mut g = Graph::new();
        let spec = dsl::parse("M := COMPOSE(SET, SEQ)").unwrap();
        assert!(matches!(g.compile_spec(&spec), Err(Error::InnerHasConstantTerm)));
    }

    #[test]
    fn derivative_of_a_table_is_unsupported() {
        let mut g = Graph::new();
        let spec = dsl::parse("M := DERIVE(WEIGHTED(ATOM, TABLE{\"a\": 2}))").unwrap();
        assert!(matches!(g.compile_spec(&spec), Err(Error::Unsupported(_))));
    }
}
