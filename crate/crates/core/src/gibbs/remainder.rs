//! Removing a largest component: the map from `F ∘ G` objects to `F′ ∘ G` objects.
//!
//! The encodings follow the derivative rules of the species graph, so a remainder is a
//! valid object of the derived node and compares equal to its enumerated orbit:
//! a removed component becomes `*`; in a product the marked side is tagged `L`/`R`; a
//! multiset splits into `(rest, marked element)`; a sequence into
//! `((prefix, marked element), suffix)`.

use rand::Rng;
use serde::Serialize;

use super::model::GibbsModel;
use crate::error::{Error, Result};
use crate::species::graph::{Graph, Node, NodeId};
use crate::species::Obj;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FragmentRecord {
    /// The `F′ ∘ G` object left after removing one largest component.
    pub remainder: Obj,
    pub remainder_size: usize,
    /// Number of components of the original object.
    pub component_count: usize,
    pub largest_size: usize,
}

impl FragmentRecord {
    /// Number of components of the remainder.
    pub fn remainder_components(&self) -> usize {
        self.component_count - 1
    }
}

fn mismatch(obj: &Obj) -> Error {
    Error::InvalidArgument(format!("object {obj} does not belong to the species"))
}

/// Paths (child indices) and sizes of the components of `obj`, in traversal order.
pub fn components(model: &GibbsModel, node: NodeId, obj: &Obj) -> Result<Vec<(Vec<usize>, usize)>> {
    let mut out = Vec::new();
    collect(model.graph(), model.inner_node(), node, obj, &mut Vec::new(), &mut out)?;
    Ok(out)
}

fn collect(
    g: &Graph,
    inner: NodeId,
    node: NodeId,
    obj: &Obj,
    path: &mut Vec<usize>,
    out: &mut Vec<(Vec<usize>, usize)>,
) -> Result<()> {
    let mut descend = |child: NodeId, x: &Obj, i: usize, out: &mut Vec<_>| {
        path.push(i);
        let r = collect(g, inner, child, x, path, out);
        path.pop();
        r
    };
    match (g.node(g.resolve(node)), obj) {
        (Node::Comp(h, _), Obj::Comp(x)) if *h == inner => out.push((path.clone(), x.size())),
        (Node::Comp(h, _), Obj::Comp(x)) => descend(*h, x, 0, out)?,
        (Node::Union(a, _), Obj::Inl(x)) => descend(*a, x, 0, out)?,
        (Node::Union(_, b), Obj::Inr(x)) => descend(*b, x, 0, out)?,
        (Node::Product(a, b), Obj::Pair(x, y)) => {
            descend(*a, x, 0, out)?;
            descend(*b, y, 1, out)?;
        }
        (Node::Set(a), Obj::Set(v)) | (Node::Seq(a), Obj::Seq(v)) => {
            for (i, x) in v.iter().enumerate() {
                descend(*a, x, i, out)?;
            }
        }
        (Node::Table(a, _), x) => collect(g, inner, *a, x, path, out)?,
        (Node::One(_), Obj::Unit) | (Node::Star(_), Obj::Star) | (Node::Atom(_), Obj::Atom) => {}
        _ => return Err(mismatch(obj)),
    }
    Ok(())
}

/// Replaces the component at `path` by `*`, giving an object of the derived node.
fn remove_at(g: &Graph, inner: NodeId, node: NodeId, obj: &Obj, path: &[usize]) -> Result<Obj> {
    let rest = path.get(1..).unwrap_or(&[]);
    Ok(match (g.node(g.resolve(node)), obj) {
        (Node::Comp(h, _), Obj::Comp(_)) if *h == inner && path.is_empty() => Obj::Star,
        (Node::Comp(h, _), Obj::Comp(x)) if *h != inner => Obj::comp(remove_at(g, inner, *h, x, rest)?),
        (Node::Union(a, _), Obj::Inl(x)) => Obj::Inl(Box::new(remove_at(g, inner, *a, x, rest)?)),
        (Node::Union(_, b), Obj::Inr(x)) => Obj::Inr(Box::new(remove_at(g, inner, *b, x, rest)?)),
        (Node::Product(a, b), Obj::Pair(x, y)) => match path.first() {
            Some(0) => Obj::Inl(Box::new(Obj::pair(remove_at(g, inner, *a, x, rest)?, (**y).clone()))),
            Some(1) => Obj::Inr(Box::new(Obj::pair((**x).clone(), remove_at(g, inner, *b, y, rest)?))),
            _ => return Err(mismatch(obj)),
        },
        (Node::Set(a), Obj::Set(v)) => {
            let i = *path.first().filter(|&&i| i < v.len()).ok_or_else(|| mismatch(obj))?;
            let mut others = v.clone();
            let x = others.remove(i);
            Obj::pair(Obj::Set(others), remove_at(g, inner, *a, &x, rest)?)
        }
        (Node::Seq(a), Obj::Seq(v)) => {
            let i = *path.first().filter(|&&i| i < v.len()).ok_or_else(|| mismatch(obj))?;
            let marked = remove_at(g, inner, *a, &v[i], rest)?;
            Obj::pair(Obj::pair(Obj::Seq(v[..i].to_vec()), marked), Obj::Seq(v[i + 1..].to_vec()))
        }
        _ => return Err(mismatch(obj)),
    })
}

/// Inverse of the removal: puts `component` at the `*` of a derived object.
fn insert_at(g: &Graph, inner: NodeId, node: NodeId, obj: &Obj, component: &Obj) -> Result<Obj> {
    let ins = |n: NodeId, x: &Obj| insert_at(g, inner, n, x, component);
    Ok(match (g.node(g.resolve(node)), obj) {
        (Node::Comp(h, _), Obj::Star) if *h == inner => Obj::comp(component.clone()),
        (Node::Comp(h, _), Obj::Comp(x)) if *h != inner => Obj::comp(ins(*h, x)?),
        (Node::Union(a, _), Obj::Inl(x)) => Obj::Inl(Box::new(ins(*a, x)?)),
        (Node::Union(_, b), Obj::Inr(x)) => Obj::Inr(Box::new(ins(*b, x)?)),
        (Node::Product(a, b), Obj::Inl(p)) | (Node::Product(a, b), Obj::Inr(p)) => {
            let Obj::Pair(x, y) = &**p else { return Err(mismatch(obj)) };
            if matches!(obj, Obj::Inl(_)) {
                Obj::pair(ins(*a, x)?, (**y).clone())
            } else {
                Obj::pair((**x).clone(), ins(*b, y)?)
            }
        }
        (Node::Set(a), Obj::Pair(rest, x)) => {
            let Obj::Set(v) = &**rest else { return Err(mismatch(obj)) };
            let mut v = v.clone();
            v.push(ins(*a, x)?);
            Obj::set(v)
        }
        (Node::Seq(a), Obj::Pair(left, suffix)) => {
            let (Obj::Pair(prefix, x), Obj::Seq(suf)) = (&**left, &**suffix) else { return Err(mismatch(obj)) };
            let Obj::Seq(pre) = &**prefix else { return Err(mismatch(obj)) };
            let mut v = pre.clone();
            v.push(ins(*a, x)?);
            v.extend(suf.iter().cloned());
            Obj::Seq(v)
        }
        _ => return Err(mismatch(obj)),
    })
}

/// Removes one component of maximal size, chosen uniformly among all maximal ones.
pub fn extract_remainder<R: Rng + ?Sized>(model: &GibbsModel, s: &Obj, rng: &mut R) -> Result<FragmentRecord> {
    let comps = components(model, model.composite_node(), s)?;
    let largest = comps.iter().map(|c| c.1).max().ok_or_else(|| {
        Error::InvalidArgument(format!("object {s} has no component to remove"))
    })?;
    let maximal: Vec<&Vec<usize>> = comps.iter().filter(|c| c.1 == largest).map(|c| &c.0).collect();
    let path = maximal[rng.gen_range(0..maximal.len())];
    let remainder = remove_at(model.graph(), model.inner_node(), model.composite_node(), s, path)?;
    Ok(FragmentRecord {
        remainder_size: remainder.size(),
        remainder,
        component_count: comps.len(),
        largest_size: largest,
    })
}

/// All remainders of `s` with their probabilities under the uniform choice of a maximal
/// component.
pub fn remainder_law(model: &GibbsModel, s: &Obj) -> Result<Vec<(Obj, f64)>> {
    let comps = components(model, model.composite_node(), s)?;
    let largest = comps.iter().map(|c| c.1).max().ok_or_else(|| mismatch(s))?;
    let maximal: Vec<&Vec<usize>> = comps.iter().filter(|c| c.1 == largest).map(|c| &c.0).collect();
    let p = 1.0 / maximal.len() as f64;
    let mut law: std::collections::BTreeMap<Obj, f64> = Default::default();
    for path in maximal {
        let r = remove_at(model.graph(), model.inner_node(), model.composite_node(), s, path)?;
        *law.entry(r).or_default() += p;
    }
    Ok(law.into_iter().collect())
}

/// Composite object obtained by putting `component` at the `*` of `derived`.
pub fn attach_component(model: &GibbsModel, derived: &Obj, component: &Obj) -> Result<Obj> {
    insert_at(model.graph(), model.inner_node(), model.composite_node(), derived, component)
}

/// Number of components of an object of the derived species.
pub fn derived_component_count(model: &GibbsModel, r: &Obj) -> Result<usize> {
    Ok(components(model, model.derived_node(), r)?.len())
}
