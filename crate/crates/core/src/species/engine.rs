//! Online coefficient engine.
//!
//! Coefficients of every (node, weight power) pair are produced one index at a time. A
//! coefficient is only computed once every coefficient it depends on exists, so recursive
//! definitions are resolved without fixpoint iteration; a request that needs itself at the
//! same index means the recursion is not well-founded.
//!
//! The power `p` selects the weight `ν^p`: power 0 counts objects, power `i` is what an
//! `i`-cycle of a symmetry sees.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use parking_lot::Mutex;

use super::enumerate::{Enumerator, DEFAULT_GUARD};
use super::graph::{Graph, Node, NodeId};
use super::object::Obj;
use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::series::TruncatedSeries;

type Key = (NodeId, u32);

#[derive(Default)]
struct State {
    coeffs: HashMap<Key, Arc<Vec<Rational>>>,
    /// `k·a_k` of the logarithm of a multiset construction.
    aux: HashMap<Key, Vec<Rational>>,
    active: HashSet<Key>,
    table_sizes: HashMap<NodeId, usize>,
}

pub struct Engine {
    graph: Arc<Graph>,
    state: Mutex<State>,
}

impl Engine {
    pub fn new(graph: Arc<Graph>) -> Self {
        Engine { graph, state: Mutex::new(State::default()) }
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    fn key(&self, id: NodeId, p: u32) -> Key {
        let id = self.graph.resolve(id);
        if self.graph.is_unit_weighted(id) {
            (id, 1)
        } else {
            (id, p)
        }
    }

    /// Coefficients `0..=n` (possibly more) of node `id` at weight power `p`.
    pub fn coefficients(&self, id: NodeId, p: u32, n: usize) -> Result<Arc<Vec<Rational>>> {
        let key = self.key(id, p);
        let mut st = self.state.lock();
        self.ensure(&mut st, key, n)?;
        Ok(st.coeffs[&key].clone())
    }

    pub fn coeff(&self, id: NodeId, p: u32, k: usize) -> Result<Rational> {
        Ok(self.coefficients(id, p, k)?[k].clone())
    }

    /// Generating series truncated at order `n`.
    pub fn series(&self, id: NodeId, p: u32, n: usize) -> Result<TruncatedSeries> {
        let c = self.coefficients(id, p, n)?;
        Ok(TruncatedSeries::new(c[..=n].to_vec()))
    }

    fn len(st: &State, key: Key) -> usize {
        st.coeffs.get(&key).map_or(0, |v| v.len())
    }

    fn ensure(&self, st: &mut State, key: Key, n: usize) -> Result<()> {
        loop {
            let k = Self::len(st, key);
            if k > n {
                return Ok(());
            }
            if !st.active.insert(key) {
                let name = self.describe(key.0);
                return Err(Error::IllFoundedRecursion(name));
            }
            let prepared = self.prepare(st, key, k);
            st.active.remove(&key);
            prepared?;
            let v = self.compute(st, key, k)?;
            Arc::make_mut(st.coeffs.entry(key).or_default()).push(v);
        }
    }

    fn describe(&self, id: NodeId) -> String {
        for d in 0.. {
            if d >= self.graph.len() {
                break;
            }
            if let Node::Ref(def) = self.graph.node(d) {
                if self.graph.resolve(d) == id {
                    return self.graph.def_name(*def).to_string();
                }
            }
        }
        format!("node {id}")
    }

    fn child(&self, st: &mut State, id: NodeId, p: u32, n: usize) -> Result<Key> {
        let key = self.key(id, p);
        self.ensure(st, key, n)?;
        Ok(key)
    }

    fn prepare(&self, st: &mut State, (id, p): Key, k: usize) -> Result<()> {
        match self.graph.node(id).clone() {
            Node::Zero | Node::One(_) | Node::Star(_) | Node::Atom(_) | Node::Ref(_) => {}
            Node::Union(a, b) => {
                self.child(st, a, p, k)?;
                self.child(st, b, p, k)?;
            }
            Node::Product(a, b) => {
                if let (Some(va), Some(vb)) = (self.graph.valuation(a), self.graph.valuation(b)) {
                    if k >= va + vb {
                        self.child(st, a, p, k - vb)?;
                        self.child(st, b, p, k - va)?;
                    }
                }
            }
            Node::Seq(a) => {
                if k > 0 {
                    self.child(st, a, p, k)?;
                }
            }
            Node::Set(a) => {
                for i in 1..=k {
                    if k % i == 0 {
                        self.child(st, a, p * i as u32, k / i)?;
                    }
                }
            }
            Node::Comp(g, _) => {
                self.child(st, g, p, k)?;
            }
            Node::Table(_, ref table) => {
                if !st.table_sizes.contains_key(&id) {
                    let max = table
                        .keys()
                        .map(|s| Obj::parse(s).map(|o| o.size()))
                        .collect::<Result<Vec<_>>>()?
                        .into_iter()
                        .max()
                        .unwrap_or(0);
                    st.table_sizes.insert(id, max);
                }
            }
        }
        Ok(())
    }

    fn get(st: &State, id: NodeId, p: u32, graph: &Graph, k: usize) -> Rational {
        let id = graph.resolve(id);
        let key = if graph.is_unit_weighted(id) { (id, 1) } else { (id, p) };
        st.coeffs[&key][k].clone()
    }

    fn compute(&self, st: &mut State, (id, p): Key, k: usize) -> Result<Rational> {
        let g = &*self.graph;
        let wpow = |c: &Rational| rational::pow(c, p);
        Ok(match g.node(id).clone() {
            Node::Zero => Rational::zero(),
            Node::One(c) | Node::Star(c) => if k == 0 { wpow(&c) } else { Rational::zero() },
            Node::Atom(c) => if k == 1 { wpow(&c) } else { Rational::zero() },
            Node::Ref(_) => unreachable!("resolved"),
            Node::Union(a, b) => Self::get(st, a, p, g, k) + Self::get(st, b, p, g, k),
            Node::Product(a, b) => {
                let mut acc = Rational::zero();
                if let (Some(va), Some(vb)) = (g.valuation(a), g.valuation(b)) {
                    if k >= va + vb {
                        let (ka, kb) = (self.key(a, p), self.key(b, p));
                        let (ca, cb) = (&st.coeffs[&ka], &st.coeffs[&kb]);
                        for i in va..=k - vb {
                            if !ca[i].is_zero() && !cb[k - i].is_zero() {
                                acc += &ca[i] * &cb[k - i];
                            }
                        }
                    }
                }
                acc
            }
            Node::Seq(a) => {
                if k == 0 {
                    return Ok(Rational::one());
                }
                let ka = self.key(a, p);
                let (ca, own) = (&st.coeffs[&ka], &st.coeffs[&(id, p)]);
                let mut acc = Rational::zero();
                for j in 1..=k {
                    if !ca[j].is_zero() {
                        acc += &ca[j] * &own[k - j];
                    }
                }
                acc
            }
            Node::Set(a) => {
                if k == 0 {
                    st.aux.entry((id, p)).or_default().push(Rational::zero());
                    return Ok(Rational::one());
                }
                let mut s = Rational::zero();
                for i in 1..=k {
                    if k % i == 0 {
                        let d = k / i;
                        let c = Self::get(st, a, p * i as u32, g, d);
                        if !c.is_zero() {
                            s += c * rational::int(d as i64);
                        }
                    }
                }
                st.aux.entry((id, p)).or_default().push(s);
                let (aux, own) = (&st.aux[&(id, p)], &st.coeffs[&(id, p)]);
                let mut acc = Rational::zero();
                for j in 1..=k {
                    if !aux[j].is_zero() {
                        acc += &aux[j] * &own[k - j];
                    }
                }
                acc / rational::int(k as i64)
            }
            Node::Comp(a, c) => wpow(&c) * Self::get(st, a, p, g, k),
            Node::Table(a, table) => {
                if k > st.table_sizes[&id] {
                    return Ok(Rational::zero());
                }
                let mut en = Enumerator::new(g, DEFAULT_GUARD.max(k));
                let mut acc = Rational::zero();
                for (o, _) in en.objects(a, k)?.iter() {
                    if let Some(w) = table.get(&o.to_string()) {
                        if w.is_positive() {
                            acc += wpow(w);
                        }
                    }
                }
                acc
            }
        })
    }
}
