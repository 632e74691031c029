//! Cycle index sums of compiled species.

use std::collections::{HashMap, HashSet};

use super::graph::{Graph, Node, NodeId};
use crate::cycle_index::CycleIndexPoly;
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

type Key = (NodeId, u32, usize);

/// Truncated cycle index sum of `id`. Recursive definitions are solved by iterating
/// from the empty species until the truncation is stable.
pub fn of_node(g: &Graph, id: NodeId, truncation: usize) -> Result<CycleIndexPoly> {
    let mut prev: HashMap<Key, CycleIndexPoly> = HashMap::new();
    for _ in 0..4 * truncation + 16 {
        let mut ev = Eval { g, prev: &prev, needed: HashSet::new(), memo: HashMap::new() };
        let root = ev.node(id, 1, truncation)?;
        let mut next = HashMap::new();
        let mut queue: Vec<Key> = ev.needed.drain().collect();
        while let Some(k) = queue.pop() {
            if next.contains_key(&k) {
                continue;
            }
            let body = ev.node(g.resolve(k.0), k.1, k.2)?;
            next.insert(k, body);
            queue.extend(ev.needed.drain());
        }
        if next == prev {
            return Ok(root);
        }
        prev = next;
    }
    Err(Error::IllFoundedRecursion("cycle index iteration did not stabilise".into()))
}

struct Eval<'a> {
    g: &'a Graph,
    prev: &'a HashMap<Key, CycleIndexPoly>,
    needed: HashSet<Key>,
    memo: HashMap<Key, CycleIndexPoly>,
}

impl Eval<'_> {
    fn node(&mut self, id: NodeId, p: u32, t: usize) -> Result<CycleIndexPoly> {
        let p = if self.g.is_unit_weighted(self.g.resolve(id)) { 1 } else { p };
        let key = (id, p, t);
        if let Some(v) = self.memo.get(&key) {
            return Ok(v.clone());
        }
        let w = |c: &Rational| rational::pow(c, p);
        let out = match self.g.node(id).clone() {
            Node::Zero => CycleIndexPoly::zero(t),
            Node::One(c) | Node::Star(c) => CycleIndexPoly::constant(w(&c), t),
            Node::Atom(c) => CycleIndexPoly::variable(1, w(&c), t),
            Node::Union(a, b) => self.node(a, p, t)?.add(&self.node(b, p, t)?),
            Node::Product(a, b) => self.node(a, p, t)?.mul(&self.node(b, p, t)?),
            Node::Set(a) => {
                let mut log = CycleIndexPoly::zero(t);
                for i in 1..=t {
                    let z = self.node(a, p * i as u32, t / i)?.dilate(i, t);
                    log = log.add(&z.scale(&rational::ratio(1, i as i64)));
                }
                log.exp()?
            }
            Node::Seq(a) => self.node(a, p, t)?.geometric()?,
            Node::Comp(a, c) => self.node(a, p, t)?.scale(&w(&c)),
            Node::Ref(_) => {
                self.needed.insert(key);
                self.prev.get(&key).cloned().unwrap_or_else(|| CycleIndexPoly::zero(t))
            }
            Node::Table(..) => {
                return Err(Error::Unsupported("cycle index of a table-weighted species".into()));
            }
        };
        self.memo.insert(key, out.clone());
        Ok(out)
    }
}
