//! Weight-proportional unranking and exact sampling at a fixed size.
//!
//! Both walk the same recursive decomposition; they differ in who answers the decisions.
//! [`Position`] consumes an exact point `u ∈ [0, 1)` and maps it to the object whose cell
//! (of width proportional to its weight) contains `u`. [`RandomChoice`] draws each
//! decision from an exact integer distribution. Multisets are decomposed by
//! (largest part size, multiplicity) when unranking, and by marked cycles when sampling;
//! the latter only needs independent draws and cached tables.

use std::sync::Arc;

use dashmap::DashMap;
use num_bigint::{BigInt, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use super::engine::Engine;
use super::enumerate::{Enumerator, Weighted, DEFAULT_GUARD};
use super::graph::{Node, NodeId};
use super::object::Obj;
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// A finite weighted decision with labels.
#[derive(Debug)]
pub struct Choice {
    labels: Vec<(usize, usize)>,
    weights: Vec<Rational>,
    /// Exclusive prefix sums of the weights.
    prefix: Vec<Rational>,
    total: Rational,
    /// Inclusive prefix sums of the weights scaled to integers.
    int_prefix: Vec<BigInt>,
}

impl Choice {
    pub fn new(entries: Vec<((usize, usize), Rational)>) -> Result<Self> {
        let entries: Vec<_> = entries.into_iter().filter(|(_, w)| !w.is_zero()).collect();
        if entries.is_empty() {
            return Err(Error::ZeroMass);
        }
        let lcm = entries.iter().fold(BigInt::one(), |acc, (_, w)| acc.lcm(w.denom()));
        let (mut labels, mut weights, mut prefix, mut int_prefix) = (vec![], vec![], vec![], vec![]);
        let (mut total, mut itotal) = (Rational::zero(), BigInt::zero());
        for (l, w) in entries {
            if w.is_negative() {
                return Err(Error::InvalidArgument("negative weight".into()));
            }
            prefix.push(total.clone());
            total += &w;
            itotal += w.numer() * (&lcm / w.denom());
            int_prefix.push(itotal.clone());
            labels.push(l);
            weights.push(w);
        }
        Ok(Choice { labels, weights, prefix, total, int_prefix })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> (usize, usize) {
        self.labels[i]
    }

    pub fn total(&self) -> &Rational {
        &self.total
    }
}

/// Source of decisions for the recursive generator.
pub trait Chooser {
    /// True if distinct inputs must map to distinct objects.
    const BIJECTIVE: bool;
    fn pick(&mut self, c: &Choice) -> usize;
    /// Index in `0..count`, uniformly.
    fn pick_uniform(&mut self, count: &BigInt) -> BigInt;
}

/// Decisions read off an exact position in `[0, 1)`.
#[derive(Clone, Debug)]
pub struct Position {
    pub u: Rational,
}

impl Chooser for Position {
    const BIJECTIVE: bool = true;

    fn pick(&mut self, c: &Choice) -> usize {
        let target = &self.u * &c.total;
        let i = c.prefix.partition_point(|x| *x <= target) - 1;
        self.u = (target - &c.prefix[i]) / &c.weights[i];
        i
    }

    fn pick_uniform(&mut self, count: &BigInt) -> BigInt {
        let x = &self.u * Rational::from_integer(count.clone());
        let idx = x.floor().to_integer();
        self.u = x - Rational::from_integer(idx.clone());
        idx
    }
}

/// Decisions drawn from a random source.
pub struct RandomChoice<'a, R: Rng + ?Sized> {
    pub rng: &'a mut R,
}

impl<R: Rng + ?Sized> Chooser for RandomChoice<'_, R> {
    const BIJECTIVE: bool = false;

    fn pick(&mut self, c: &Choice) -> usize {
        if c.len() == 1 {
            return 0;
        }
        let total = c.int_prefix.last().expect("nonempty");
        let r = self.rng.gen_bigint_range(&BigInt::zero(), total);
        c.int_prefix.partition_point(|x| *x <= r)
    }

    fn pick_uniform(&mut self, count: &BigInt) -> BigInt {
        self.rng.gen_bigint_range(&BigInt::zero(), count)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum ChoiceKey {
    Union(NodeId, u32, usize),
    Product(NodeId, u32, usize),
    Seq(NodeId, u32, usize),
    Cycles(NodeId, u32, usize),
    Block(NodeId, u32, usize, usize),
    Table(NodeId, u32, usize),
}

/// `M[n][m]`: weight of multisets of size `n` with parts of size at most `m`, and
/// `H[m][j]`: weight of `j`-multisets of size-`m` parts.
#[derive(Default)]
struct BlockTables {
    m: Vec<Vec<Rational>>,
    h: Vec<Vec<Rational>>,
}

pub struct Unranker {
    engine: Arc<Engine>,
    choices: DashMap<ChoiceKey, Arc<Choice>>,
    blocks: DashMap<(NodeId, u32), Arc<BlockTables>>,
    objects: DashMap<(NodeId, usize), Weighted>,
    guard: usize,
}

impl Unranker {
    pub fn new(engine: Arc<Engine>) -> Self {
        Unranker {
            engine,
            choices: DashMap::new(),
            blocks: DashMap::new(),
            objects: DashMap::new(),
            guard: DEFAULT_GUARD,
        }
    }

    pub fn engine(&self) -> &Arc<Engine> {
        &self.engine
    }

    /// Object of size `n` whose weight cell contains `u`; weights are `ν^p`.
    pub fn unrank(&self, id: NodeId, p: u32, n: usize, u: &Rational) -> Result<Obj> {
        if u.is_negative() || *u >= Rational::one() {
            return Err(Error::InvalidArgument("position must lie in [0, 1)".into()));
        }
        self.generate(id, p, n, &mut Position { u: u.clone() })
    }

    /// Exact draw of a size-`n` object with probability proportional to `ν^p`.
    pub fn sample<R: Rng + ?Sized>(&self, id: NodeId, p: u32, n: usize, rng: &mut R) -> Result<Obj> {
        self.generate(id, p, n, &mut RandomChoice { rng })
    }

    fn coeffs(&self, id: NodeId, p: u32, n: usize) -> Result<Arc<Vec<Rational>>> {
        self.engine.coefficients(id, p, n)
    }

    fn choice(&self, key: ChoiceKey, n: usize, build: impl FnOnce() -> Result<Choice>) -> Result<Arc<Choice>> {
        if let Some(c) = self.choices.get(&key) {
            return Ok(c.clone());
        }
        let c = Arc::new(build().map_err(|e| if e == Error::ZeroMass { Error::EmptySize(n) } else { e })?);
        self.choices.insert(key, c.clone());
        Ok(c)
    }

    fn objects_of(&self, id: NodeId, n: usize) -> Result<Weighted> {
        if let Some(v) = self.objects.get(&(id, n)) {
            return Ok(v.clone());
        }
        let mut en = Enumerator::new(self.engine.graph(), self.guard);
        let v = en.objects(id, n)?;
        self.objects.insert((id, n), v.clone());
        Ok(v)
    }

    pub fn generate<C: Chooser>(&self, id: NodeId, p: u32, n: usize, ch: &mut C) -> Result<Obj> {
        let g = self.engine.graph().clone();
        let id = g.resolve(id);
        let p = if g.is_unit_weighted(id) { 1 } else { p };
        match g.node(id).clone() {
            Node::Zero => Err(Error::EmptySize(n)),
            Node::One(_) if n == 0 => Ok(Obj::Unit),
            Node::Star(_) if n == 0 => Ok(Obj::Star),
            Node::Atom(_) if n == 1 => Ok(Obj::Atom),
            Node::One(_) | Node::Star(_) | Node::Atom(_) => Err(Error::EmptySize(n)),
            Node::Ref(_) => unreachable!("resolved"),
            Node::Union(a, b) => {
                let c = self.choice(ChoiceKey::Union(id, p, n), n, || {
                    Choice::new(vec![
                        ((0, 0), self.coeffs(a, p, n)?[n].clone()),
                        ((1, 0), self.coeffs(b, p, n)?[n].clone()),
                    ])
                })?;
                let (side, _) = c.label(ch.pick(&c));
                Ok(if side == 0 {
                    Obj::Inl(Box::new(self.generate(a, p, n, ch)?))
                } else {
                    Obj::Inr(Box::new(self.generate(b, p, n, ch)?))
                })
            }
            Node::Product(a, b) => {
                let c = self.choice(ChoiceKey::Product(id, p, n), n, || {
                    let (ca, cb) = (self.coeffs(a, p, n)?, self.coeffs(b, p, n)?);
                    Choice::new((0..=n).map(|k| ((k, 0), &ca[k] * &cb[n - k])).collect())
                })?;
                let (k, _) = c.label(ch.pick(&c));
                let x = self.generate(a, p, k, ch)?;
                let y = self.generate(b, p, n - k, ch)?;
                Ok(Obj::pair(x, y))
            }
            Node::Seq(a) => {
                let mut items = Vec::new();
                let mut rest = n;
                while rest > 0 {
                    let c = self.choice(ChoiceKey::Seq(id, p, rest), rest, || {
                        let (ca, cq) = (self.coeffs(a, p, rest)?, self.coeffs(id, p, rest)?);
                        Choice::new((1..=rest).map(|j| ((j, 0), &ca[j] * &cq[rest - j])).collect())
                    })?;
                    let (j, _) = c.label(ch.pick(&c));
                    items.push(self.generate(a, p, j, ch)?);
                    rest -= j;
                }
                Ok(Obj::Seq(items))
            }
            Node::Comp(inner, _) => Ok(Obj::comp(self.generate(inner, p, n, ch)?)),
            Node::Table(a, table) => {
                let objs = self.objects_of(a, n)?;
                let c = self.choice(ChoiceKey::Table(id, p, n), n, || {
                    Choice::new(
                        objs.iter()
                            .enumerate()
                            .filter_map(|(i, (o, _))| {
                                table.get(&o.to_string()).map(|w| ((i, 0), rational::pow(w, p)))
                            })
                            .collect(),
                    )
                })?;
                let (i, _) = c.label(ch.pick(&c));
                Ok(objs[i].0.clone())
            }
            Node::Set(a) => {
                let mut children = Vec::new();
                if C::BIJECTIVE {
                    self.set_blocks(id, a, p, n, n, ch, &mut children)?;
                } else {
                    self.set_cycles(id, a, p, n, ch, &mut children)?;
                }
                Ok(Obj::set(children))
            }
        }
    }

    /// Multiset by marked cycles: with probability `d·A^{(pi)}_d·E_{n-di} / (n·E_n)` the
    /// next block is `i` identical copies of a size-`d` object drawn at weight power `p·i`.
    fn set_cycles<C: Chooser>(
        &self,
        id: NodeId,
        a: NodeId,
        p: u32,
        n: usize,
        ch: &mut C,
        out: &mut Vec<Obj>,
    ) -> Result<()> {
        let mut rest = n;
        while rest > 0 {
            let c = self.choice(ChoiceKey::Cycles(id, p, rest), rest, || {
                let e = self.coeffs(id, p, rest)?;
                let mut entries = Vec::new();
                for i in 1..=rest {
                    let ca = self.coeffs(a, p * i as u32, rest / i)?;
                    for d in 1..=rest / i {
                        let w = &ca[d] * &e[rest - d * i] * rational::int(d as i64);
                        entries.push(((d, i), w));
                    }
                }
                Choice::new(entries)
            })?;
            let (d, i) = c.label(ch.pick(&c));
            let x = self.generate(a, p * i as u32, d, ch)?;
            out.extend(std::iter::repeat_n(x, i));
            rest -= d * i;
        }
        Ok(())
    }

    fn block_tables(&self, id: NodeId, a: NodeId, p: u32, n: usize) -> Result<Arc<BlockTables>> {
        if let Some(t) = self.blocks.get(&(id, p)) {
            if t.m.len() > n {
                return Ok(t.clone());
            }
        }
        let mut h = vec![vec![Rational::one()]];
        for m in 1..=n {
            // Newton's identities over the power sums A^{(pi)}_m.
            let jmax = n / m;
            let mut row = vec![Rational::one()];
            let sums: Vec<Rational> =
                (1..=jmax).map(|i| self.coeffs(a, p * i as u32, m).map(|c| c[m].clone())).collect::<Result<_>>()?;
            for j in 1..=jmax {
                let mut acc = Rational::zero();
                for i in 1..=j {
                    acc += &sums[i - 1] * &row[j - i];
                }
                row.push(acc / rational::int(j as i64));
            }
            h.push(row);
        }
        let mut mt = vec![vec![Rational::zero(); n + 1]; n + 1];
        for row in mt.iter_mut() {
            row[0] = Rational::zero();
        }
        for m in 0..=n {
            mt[0][m] = Rational::one();
        }
        for m in 1..=n {
            for k in 1..=n {
                let mut acc = mt[k][m - 1].clone();
                for j in 1..=k / m {
                    acc += &h[m][j] * &mt[k - j * m][m - 1];
                }
                mt[k][m] = acc;
            }
        }
        let t = Arc::new(BlockTables { m: mt, h });
        self.blocks.insert((id, p), t.clone());
        Ok(t)
    }

    /// Multiset by blocks: choose the largest part size `m` and its multiplicity `j`, then
    /// a `j`-multiset of size-`m` parts, then the rest with parts smaller than `m`.
    #[allow(clippy::too_many_arguments)]
    fn set_blocks<C: Chooser>(
        &self,
        id: NodeId,
        a: NodeId,
        p: u32,
        n: usize,
        mmax: usize,
        ch: &mut C,
        out: &mut Vec<Obj>,
    ) -> Result<()> {
        if n == 0 {
            return Ok(());
        }
        let t = self.block_tables(id, a, p, n)?;
        let c = self.choice(ChoiceKey::Block(id, p, n, mmax), n, || {
            let mut entries = Vec::new();
            for m in 1..=mmax.min(n) {
                for j in 1..=n / m {
                    entries.push(((m, j), &t.h[m][j] * &t.m[n - j * m][m - 1]));
                }
            }
            Choice::new(entries)
        })?;
        let (m, j) = c.label(ch.pick(&c));
        self.multiset_of_size(a, p, m, j, ch, out)?;
        self.set_blocks(id, a, p, n - j * m, m - 1, ch, out)
    }

    /// A `j`-multiset of size-`m` objects of `a`, proportional to the product of `ν^p`.
    fn multiset_of_size<C: Chooser>(
        &self,
        a: NodeId,
        p: u32,
        m: usize,
        j: usize,
        ch: &mut C,
        out: &mut Vec<Obj>,
    ) -> Result<()> {
        let count = self.coeffs(a, 0, m)?[m].clone();
        let p1 = self.coeffs(a, p, m)?[m].clone();
        let p2 = self.coeffs(a, 2 * p, m)?[m].clone();
        if &p1 * &p1 == &count * &p2 {
            // All size-m objects share one weight: a uniform multiset of their ranks.
            let s = count.to_integer();
            let total = rational::binomial(&(&s + BigInt::from(j) - BigInt::one()), j as u32);
            let mut r = ch.pick_uniform(&total);
            let mut ranks = Vec::with_capacity(j);
            let mut hi: BigInt = &s + BigInt::from(j) - BigInt::one();
            for k in (1..=j).rev() {
                // largest c < hi with C(c, k) <= r
                let (mut lo, mut up) = (BigInt::from(k - 1), hi.clone());
                while &up - &lo > BigInt::one() {
                    let mid: BigInt = (&lo + &up) / 2;
                    if rational::binomial(&mid, k as u32) <= r {
                        lo = mid;
                    } else {
                        up = mid;
                    }
                }
                r -= rational::binomial(&lo, k as u32);
                ranks.push(&lo - BigInt::from(k - 1));
                hi = lo;
            }
            for idx in ranks {
                let u = Rational::new(idx, s.clone());
                out.push(self.generate(a, p, m, &mut Position { u })?);
            }
            return Ok(());
        }
        let objs = self.objects_of(a, m)?;
        let w: Vec<Rational> = objs.iter().map(|(_, w)| rational::pow(w, p)).collect();
        // hm[r][x]: weight of r-multisets over objects 0..=x
        let len = w.len();
        let mut hm = vec![vec![Rational::one(); len]];
        for r in 1..=j {
            let mut row = Vec::with_capacity(len);
            for x in 0..len {
                let mut v = &w[x] * &hm[r - 1][x];
                if x > 0 {
                    v += &row[x - 1];
                }
                row.push(v);
            }
            hm.push(row);
        }
        let mut limit = len;
        for r in (1..=j).rev() {
            let c = Choice::new((0..limit).map(|x| ((x, 0), &w[x] * &hm[r - 1][x])).collect())?;
            let (x, _) = c.label(ch.pick(&c));
            out.push(objs[x].0.clone());
            limit = x + 1;
        }
        Ok(())
    }
}

