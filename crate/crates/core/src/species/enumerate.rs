//! Exhaustive enumeration of orbit representatives.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use num_traits::{One, Zero};

use super::graph::{Graph, Node, NodeId};
use super::object::Obj;
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Default upper bound on enumerated sizes.
pub const DEFAULT_GUARD: usize = 14;

pub type Weighted = Arc<Vec<(Obj, Rational)>>;

/// Memoised enumerator of the nonzero-weight objects of each node and size.
pub struct Enumerator<'g> {
    graph: &'g Graph,
    guard: usize,
    memo: HashMap<(NodeId, usize), Weighted>,
    active: HashSet<(NodeId, usize)>,
}

impl<'g> Enumerator<'g> {
    pub fn new(graph: &'g Graph, guard: usize) -> Self {
        Enumerator { graph, guard, memo: HashMap::new(), active: HashSet::new() }
    }

    /// Canonical objects of size `n` with their weights, sorted by encoding.
    pub fn objects(&mut self, id: NodeId, n: usize) -> Result<Weighted> {
        if n > self.guard {
            return Err(Error::SizeGuardExceeded { n, guard: self.guard });
        }
        let id = self.graph.resolve(id);
        if let Some(v) = self.memo.get(&(id, n)) {
            return Ok(v.clone());
        }
        if !self.active.insert((id, n)) {
            return Err(Error::IllFoundedRecursion(format!("node {id} at size {n}")));
        }
        let out = self.compute(id, n);
        self.active.remove(&(id, n));
        let mut out = out?;
        out.retain(|(_, w)| !w.is_zero());
        out.sort_by(|a, b| a.0.cmp(&b.0));
        let out = Arc::new(out);
        self.memo.insert((id, n), out.clone());
        Ok(out)
    }

    fn compute(&mut self, id: NodeId, n: usize) -> Result<Vec<(Obj, Rational)>> {
        let node = self.graph.node(id).clone();
        Ok(match node {
            Node::Zero => vec![],
            Node::One(c) => if n == 0 { vec![(Obj::Unit, c)] } else { vec![] },
            Node::Star(c) => if n == 0 { vec![(Obj::Star, c)] } else { vec![] },
            Node::Atom(c) => if n == 1 { vec![(Obj::Atom, c)] } else { vec![] },
            Node::Ref(_) => unreachable!("resolved"),
            Node::Union(a, b) => {
                let mut out: Vec<_> =
                    self.objects(a, n)?.iter().map(|(o, w)| (Obj::Inl(Box::new(o.clone())), w.clone())).collect();
                out.extend(self.objects(b, n)?.iter().map(|(o, w)| (Obj::Inr(Box::new(o.clone())), w.clone())));
                out
            }
            Node::Product(a, b) => {
                let mut out = Vec::new();
                let (Some(va), Some(vb)) = (self.graph.valuation(a), self.graph.valuation(b)) else {
                    return Ok(vec![]);
                };
                for k in va..=n.saturating_sub(vb) {
                    if k + vb > n {
                        break;
                    }
                    let xs = self.objects(a, k)?;
                    if xs.is_empty() {
                        continue;
                    }
                    let ys = self.objects(b, n - k)?;
                    for (x, wx) in xs.iter() {
                        for (y, wy) in ys.iter() {
                            out.push((Obj::pair(x.clone(), y.clone()), wx * wy));
                        }
                    }
                }
                out
            }
            Node::Seq(a) => {
                if n == 0 {
                    return Ok(vec![(Obj::Seq(vec![]), Rational::one())]);
                }
                let mut out = Vec::new();
                for k in 1..=n {
                    let xs = self.objects(a, k)?;
                    if xs.is_empty() {
                        continue;
                    }
                    let rest = self.objects(id, n - k)?;
                    for (x, wx) in xs.iter() {
                        for (r, wr) in rest.iter() {
                            let Obj::Seq(tail) = r else { unreachable!() };
                            let mut v = Vec::with_capacity(tail.len() + 1);
                            v.push(x.clone());
                            v.extend(tail.iter().cloned());
                            out.push((Obj::Seq(v), wx * wr));
                        }
                    }
                }
                out
            }
            Node::Set(a) => {
                let mut items: Vec<(Obj, Rational, usize)> = Vec::new();
                for k in 1..=n {
                    items.extend(self.objects(a, k)?.iter().map(|(o, w)| (o.clone(), w.clone(), k)));
                }
                let mut out = Vec::new();
                let mut chosen = Vec::new();
                multisets(&items, items.len(), n, &mut chosen, &mut out);
                out
            }
            Node::Comp(g, c) => self.objects(g, n)?.iter().map(|(o, w)| (Obj::comp(o.clone()), w * &c)).collect(),
            Node::Table(a, table) => self
                .objects(a, n)?
                .iter()
                .filter_map(|(o, _)| table.get(&o.to_string()).map(|w| (o.clone(), w.clone())))
                .collect(),
        })
    }
}

/// Multisets of `items` (each usable repeatedly) of total size `remaining`, choosing
/// indices in non-increasing order below `limit`.
fn multisets(
    items: &[(Obj, Rational, usize)],
    limit: usize,
    remaining: usize,
    chosen: &mut Vec<usize>,
    out: &mut Vec<(Obj, Rational)>,
) {
    if remaining == 0 {
        let children = chosen.iter().map(|&i| items[i].0.clone()).collect();
        let w = chosen.iter().fold(Rational::one(), |acc, &i| acc * &items[i].1);
        out.push((Obj::set(children), w));
        return;
    }
    for i in 0..limit {
        if items[i].2 <= remaining {
            chosen.push(i);
            multisets(items, i + 1, remaining - items[i].2, chosen, out);
            chosen.pop();
        }
    }
}
