//! Truncated cycle index sums in the variables `z_1, z_2, ...`.
//!
//! Two representations are kept. [`CycleIndexPoly`] stores every monomial (cycle type)
//! of weighted degree at most `N`; it is general but the number of terms grows like
//! the partition numbers. [`FactoredCycleIndex`] stores a product `Π_i P_i(z_i)` of
//! univariate factors, which covers SET and SEQ exactly at any truncation.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};
use crate::series::TruncatedSeries;

/// Cycle type of a permutation: sorted `(cycle length i, count m_i)` with `m_i > 0`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CycleType(Vec<(usize, usize)>);

impl CycleType {
    pub fn new(mut parts: Vec<(usize, usize)>) -> Self {
        parts.retain(|&(_, m)| m > 0);
        parts.sort_unstable();
        let mut merged: Vec<(usize, usize)> = Vec::with_capacity(parts.len());
        for (i, m) in parts {
            match merged.last_mut() {
                Some((j, k)) if *j == i => *k += m,
                _ => merged.push((i, m)),
            }
        }
        CycleType(merged)
    }

    pub fn empty() -> Self {
        CycleType(Vec::new())
    }

    /// Cycle type of a permutation given as an image vector.
    pub fn of_permutation(perm: &[usize]) -> Self {
        let mut seen = vec![false; perm.len()];
        let mut parts = Vec::new();
        for start in 0..perm.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                x = perm[x];
                len += 1;
            }
            parts.push((len, 1));
        }
        CycleType::new(parts)
    }

    pub fn parts(&self) -> &[(usize, usize)] {
        &self.0
    }

    pub fn multiplicity(&self, i: usize) -> usize {
        self.0.iter().find(|&&(j, _)| j == i).map_or(0, |&(_, m)| m)
    }

    /// Weighted degree `Σ i·m_i`.
    pub fn degree(&self) -> usize {
        self.0.iter().map(|&(i, m)| i * m).sum()
    }

    pub fn fixpoints(&self) -> usize {
        self.multiplicity(1)
    }

    pub fn cycle_count(&self) -> usize {
        self.0.iter().map(|&(_, m)| m).sum()
    }

    pub fn mul(&self, other: &CycleType) -> CycleType {
        CycleType::new(self.0.iter().chain(other.0.iter()).copied().collect())
    }

    /// Monomial value `Π y_i^{m_i}`.
    pub fn monomial_value(&self, args: &dyn Fn(usize) -> f64) -> f64 {
        self.0.iter().map(|&(i, m)| args(i).powi(m as i32)).product()
    }

    /// Replaces each variable `z_j` by `z_{k·j}`.
    pub fn dilate(&self, k: usize) -> CycleType {
        CycleType(self.0.iter().map(|&(i, m)| (i * k, m)).collect())
    }
}

/// All partitions of `n` as cycle types.
pub fn partitions(n: usize) -> Vec<CycleType> {
    fn rec(rest: usize, max: usize, acc: &mut Vec<(usize, usize)>, out: &mut Vec<CycleType>) {
        if rest == 0 {
            out.push(CycleType::new(acc.clone()));
            return;
        }
        for part in (1..=max.min(rest)).rev() {
            for m in (1..=rest / part).rev() {
                acc.push((part, m));
                rec(rest - part * m, part - 1, acc, out);
                acc.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

/// Truncated multivariate cycle index sum: cycle types of degree `≤ N` with coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleIndexPoly {
    terms: BTreeMap<CycleType, Rational>,
    truncation: usize,
}

impl CycleIndexPoly {
    pub fn zero(truncation: usize) -> Self {
        CycleIndexPoly { terms: BTreeMap::new(), truncation }
    }

    pub fn constant(c: Rational, truncation: usize) -> Self {
        let mut p = Self::zero(truncation);
        p.add_term(CycleType::empty(), c);
        p
    }

    pub fn one(truncation: usize) -> Self {
        Self::constant(Rational::one(), truncation)
    }

    /// `c · z_i`.
    pub fn variable(i: usize, c: Rational, truncation: usize) -> Self {
        let mut p = Self::zero(truncation);
        p.add_term(CycleType::new(vec![(i, 1)]), c);
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (CycleType, Rational)>, truncation: usize) -> Self {
        let mut p = Self::zero(truncation);
        for (t, c) in terms {
            p.add_term(t, c);
        }
        p
    }

    /// `Z_SET = exp(Σ_i z_i / i)`; the coefficient of `Π z_i^{m_i}` is `Π 1/(i^{m_i} m_i!)`.
    pub fn z_set(truncation: usize) -> Self {
        let mut p = Self::zero(truncation);
        for k in 0..=truncation {
            for ct in partitions(k) {
                let denom = ct.parts().iter().fold(num_bigint::BigInt::one(), |acc, &(i, m)| {
                    acc * num_bigint::BigInt::from(i).pow(m as u32) * rational::factorial(m as u32)
                });
                p.add_term(ct, Rational::new(1.into(), denom));
            }
        }
        p
    }

    /// `Z_SEQ = 1/(1 - z_1)`: sequences only have trivial automorphisms.
    pub fn z_seq(truncation: usize) -> Self {
        Self::from_terms((0..=truncation).map(|k| (CycleType::new(vec![(1, k)]), Rational::one())), truncation)
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn terms(&self) -> &BTreeMap<CycleType, Rational> {
        &self.terms
    }

    pub fn coeff(&self, ct: &CycleType) -> Rational {
        self.terms.get(ct).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn constant_term(&self) -> Rational {
        self.coeff(&CycleType::empty())
    }

    fn add_term(&mut self, ct: CycleType, c: Rational) {
        if ct.degree() > self.truncation || c.is_zero() {
            return;
        }
        let slot = self.terms.entry(ct).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            // keep the map free of cancelled entries
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn truncate(&self, truncation: usize) -> Self {
        Self::from_terms(self.terms.iter().map(|(t, c)| (t.clone(), c.clone())), truncation)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.truncate(self.truncation.min(other.truncation));
        for (t, c) in &other.terms {
            out.add_term(t.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::from_terms(self.terms.iter().map(|(t, x)| (t.clone(), x * c)), self.truncation)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.truncation.min(other.truncation);
        let mut acc: HashMap<CycleType, Rational> = HashMap::new();
        for (ta, ca) in &self.terms {
            let da = ta.degree();
            if da > n {
                continue;
            }
            for (tb, cb) in &other.terms {
                if da + tb.degree() > n {
                    continue;
                }
                *acc.entry(ta.mul(tb)).or_insert_with(Rational::zero) += ca * cb;
            }
        }
        Self::from_terms(acc, n)
    }

    /// Replaces every `z_j` by `z_{k·j}`.
    pub fn dilate(&self, k: usize, truncation: usize) -> Self {
        Self::from_terms(self.terms.iter().map(|(t, c)| (t.dilate(k), c.clone())), truncation)
    }

    /// `exp(A)` for `A` without constant term.
    pub fn exp(&self) -> Result<Self> {
        if !self.constant_term().is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        let n = self.truncation;
        let mut out = Self::one(n);
        let mut power = Self::one(n);
        for k in 1..=n {
            power = power.mul(self).scale(&rational::ratio(1, k as i64));
            if power.is_empty() {
                break;
            }
            out = out.add(&power);
        }
        Ok(out)
    }

    /// `1/(1 - A)` for `A` without constant term.
    pub fn geometric(&self) -> Result<Self> {
        if !self.constant_term().is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        let n = self.truncation;
        let mut out = Self::one(n);
        let mut power = Self::one(n);
        for _ in 1..=n {
            power = power.mul(self);
            if power.is_empty() {
                break;
            }
            out = out.add(&power);
        }
        Ok(out)
    }

    /// Plethystic substitution `Z(Q_1, Q_2, ...)` with `Q_i = inner(i)` already expressed in
    /// the dilated variables `z_i, z_{2i}, ...`.
    pub fn compose(&self, inner: &dyn Fn(usize) -> Self) -> Result<Self> {
        let n = self.truncation;
        let mut cache: HashMap<usize, Self> = HashMap::new();
        let mut powers: HashMap<(usize, usize), Self> = HashMap::new();
        let mut out = Self::zero(n);
        for (ct, c) in &self.terms {
            let mut term = Self::constant(c.clone(), n);
            for &(i, m) in ct.parts() {
                let q = cache.entry(i).or_insert_with(|| inner(i).truncate(n)).clone();
                if !q.constant_term().is_zero() {
                    return Err(Error::InnerHasConstantTerm);
                }
                let p = powers.entry((i, m)).or_insert_with(|| (0..m).fold(Self::one(n), |acc, _| acc.mul(&q)));
                term = term.mul(p);
            }
            out = out.add(&term);
        }
        Ok(out)
    }

    /// Formal partial derivative in `z_1`; the truncation drops by one.
    pub fn derivative_z1(&self) -> Self {
        let n = self.truncation.saturating_sub(1);
        let terms = self.terms.iter().filter_map(|(t, c)| {
            let m = t.multiplicity(1);
            if m == 0 {
                return None;
            }
            let mut parts: Vec<(usize, usize)> = t.parts().to_vec();
            for p in parts.iter_mut() {
                if p.0 == 1 {
                    p.1 -= 1;
                }
            }
            Some((CycleType::new(parts), c * rational::int(m as i64)))
        });
        Self::from_terms(terms, n)
    }

    /// `Z(z, z², z³, ...)`.
    pub fn specialize_ogf(&self) -> TruncatedSeries {
        let mut c = vec![Rational::zero(); self.truncation + 1];
        for (t, x) in &self.terms {
            c[t.degree()] += x;
        }
        TruncatedSeries::new(c)
    }

    /// `Z(inner(1)(z), inner(2)(z²), ...)` computed term by term.
    pub fn plethysm_with_weights(&self, inner: &dyn Fn(usize) -> TruncatedSeries) -> Result<TruncatedSeries> {
        let mut subst: HashMap<usize, TruncatedSeries> = HashMap::new();
        let mut n = self.truncation;
        for ct in self.terms.keys() {
            for &(i, _) in ct.parts() {
                if !subst.contains_key(&i) {
                    let s = inner(i);
                    if !s.coeff(0).is_zero() {
                        return Err(Error::InnerHasConstantTerm);
                    }
                    n = n.min(s.truncation());
                    subst.insert(i, s.substitute_power(i));
                }
            }
        }
        let mut powers: HashMap<(usize, usize), TruncatedSeries> = HashMap::new();
        let mut out = TruncatedSeries::zero(n);
        for (ct, c) in &self.terms {
            if ct.degree() > n {
                continue;
            }
            let mut term = TruncatedSeries::monomial(c.clone(), 0, n);
            for &(i, m) in ct.parts() {
                let p = powers.entry((i, m)).or_insert_with(|| {
                    let s = subst[&i].truncate(n);
                    (0..m).fold(TruncatedSeries::one(n), |acc, _| acc.mul(&s))
                });
                term = term.mul(p);
            }
            out = out.add(&term);
        }
        Ok(out)
    }

    pub fn evaluate_value(&self, args: &dyn Fn(usize) -> f64) -> f64 {
        self.terms.iter().map(|(t, c)| rational::to_f64(c) * t.monomial_value(args)).sum()
    }

    /// Numeric value with the truncation residual `|Z_N(y) − Z_{N/2}(y)|`.
    pub fn evaluate_at(&self, args: &dyn Fn(usize) -> f64) -> CycleEvaluation {
        let full = self.evaluate_value(args);
        let half = self.truncate(self.truncation / 2).evaluate_value(args);
        CycleEvaluation { value: full, residual: (full - half).abs() }
    }

    /// Draws a cycle type with probability `∝ coeff(λ)·Π y_i^{m_i}` over the stored terms.
    pub fn sample<R: Rng + ?Sized>(&self, args: &dyn Fn(usize) -> f64, rng: &mut R) -> Result<CycleType> {
        let weights: Vec<(f64, &CycleType)> =
            self.terms.iter().map(|(t, c)| (rational::to_f64(c) * t.monomial_value(args), t)).collect();
        let total: f64 = weights.iter().map(|w| w.0).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::ZeroMass);
        }
        let mut u = rng.gen::<f64>() * total;
        for (w, t) in &weights {
            if u < *w {
                return Ok((*t).clone());
            }
            u -= w;
        }
        Ok(weights.iter().rev().find(|w| w.0 > 0.0).unwrap().1.clone())
    }
}

/// `Π_i P_i(z_i)`, each factor a truncated polynomial in a single variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactoredCycleIndex {
    truncation: usize,
    /// variable index `i` → coefficients of `z_i^m`, `m ≤ N / i`
    factors: BTreeMap<usize, Vec<Rational>>,
}

impl FactoredCycleIndex {
    /// `exp(Σ_i c^i z_i / i)`: SET with each outer atom weighted by `c`.
    pub fn set(truncation: usize, atom_weight: &Rational) -> Self {
        let mut factors = BTreeMap::new();
        for i in 1..=truncation {
            let x = rational::pow(atom_weight, i as u32) / rational::int(i as i64);
            let mut coeffs = vec![Rational::one()];
            for m in 1..=truncation / i {
                let next = coeffs[m - 1].clone() * &x / rational::int(m as i64);
                coeffs.push(next);
            }
            factors.insert(i, coeffs);
        }
        FactoredCycleIndex { truncation, factors }
    }

    /// `1/(1 − c z_1)`.
    pub fn seq(truncation: usize, atom_weight: &Rational) -> Self {
        let coeffs = (0..=truncation).map(|m| rational::pow(atom_weight, m as u32)).collect();
        FactoredCycleIndex { truncation, factors: BTreeMap::from([(1, coeffs)]) }
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn factor(&self, i: usize) -> Option<&[Rational]> {
        self.factors.get(&i).map(|v| v.as_slice())
    }

    pub fn variables(&self) -> impl Iterator<Item = usize> + '_ {
        self.factors.keys().copied()
    }

    pub fn truncate(&self, truncation: usize) -> Self {
        let factors = self
            .factors
            .iter()
            .filter(|(&i, _)| i <= truncation.max(1))
            .map(|(&i, c)| (i, c.iter().take(truncation / i + 1).cloned().collect()))
            .collect();
        FactoredCycleIndex { truncation, factors }
    }

    pub fn derivative_z1(&self) -> Self {
        let n = self.truncation.saturating_sub(1);
        let mut out = self.truncate(n);
        let f1 = self.factors.get(&1).cloned().unwrap_or_else(|| vec![Rational::one()]);
        let d: Vec<Rational> = f1.iter().enumerate().skip(1).map(|(m, c)| c * rational::int(m as i64)).take(n + 1).collect();
        out.factors.insert(1, if d.is_empty() { vec![Rational::zero()] } else { d });
        out
    }

    /// Expands into the sparse representation (only sensible for small truncation).
    pub fn to_poly(&self) -> CycleIndexPoly {
        let n = self.truncation;
        self.factors.iter().fold(CycleIndexPoly::one(n), |acc, (&i, coeffs)| {
            let f = CycleIndexPoly::from_terms(
                coeffs.iter().enumerate().map(|(m, c)| (CycleType::new(vec![(i, m)]), c.clone())),
                n,
            );
            acc.mul(&f)
        })
    }

    pub fn specialize_ogf(&self) -> TruncatedSeries {
        let n = self.truncation;
        self.plethysm_with_weights(&|_| TruncatedSeries::monomial(Rational::one(), 1, n)).expect("atoms have no constant term")
    }

    /// `Π_i P_i(inner(i)(z^i))`.
    pub fn plethysm_with_weights(&self, inner: &dyn Fn(usize) -> TruncatedSeries) -> Result<TruncatedSeries> {
        let mut subst = Vec::new();
        let mut n = self.truncation;
        for &i in self.factors.keys() {
            let s = inner(i);
            if !s.coeff(0).is_zero() {
                return Err(Error::InnerHasConstantTerm);
            }
            n = n.min(s.truncation());
            subst.push((i, s));
        }
        let mut out = TruncatedSeries::one(n);
        for (i, s) in subst {
            if i > n {
                // z^i-substituted series has no terms at or below n
                let c0 = self.factors[&i][0].clone();
                out = out.scale(&c0);
                continue;
            }
            let s = s.truncate(n).substitute_power(i);
            let coeffs = &self.factors[&i];
            let mut acc = TruncatedSeries::monomial(coeffs[0].clone(), 0, n);
            let mut power = TruncatedSeries::one(n);
            for c in coeffs.iter().skip(1) {
                power = power.mul(&s);
                if power.valuation().is_none() {
                    break;
                }
                if !c.is_zero() {
                    acc = acc.add(&power.scale(c));
                }
            }
            out = out.mul(&acc);
        }
        Ok(out)
    }

    fn factor_value(coeffs: &[Rational], y: f64) -> f64 {
        if y == 0.0 {
            return rational::to_f64(&coeffs[0]);
        }
        let ly = y.abs().ln();
        let sign: f64 = if y < 0.0 { -1.0 } else { 1.0 };
        coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(m, c)| sign.powi(m as i32) * (rational::ln(c) + m as f64 * ly).exp())
            .sum()
    }

    pub fn evaluate_value(&self, args: &dyn Fn(usize) -> f64) -> f64 {
        self.factors.iter().map(|(&i, c)| Self::factor_value(c, args(i))).product()
    }

    pub fn evaluate_at(&self, args: &dyn Fn(usize) -> f64) -> CycleEvaluation {
        let full = self.evaluate_value(args);
        let half = self.truncate(self.truncation / 2).evaluate_value(args);
        CycleEvaluation { value: full, residual: (full - half).abs() }
    }

    /// Independent per-variable draws: `P(m_i = m) ∝ c_{i,m} y_i^m`.
    pub fn sample<R: Rng + ?Sized>(&self, args: &dyn Fn(usize) -> f64, rng: &mut R) -> Result<CycleType> {
        let mut parts = Vec::new();
        for (&i, coeffs) in &self.factors {
            let y = args(i);
            let w: Vec<f64> = coeffs
                .iter()
                .enumerate()
                .map(|(m, c)| if c.is_zero() { 0.0 } else if m == 0 { rational::to_f64(c) } else { (rational::ln(c) + m as f64 * y.ln()).exp() })
                .collect();
            let total: f64 = w.iter().sum();
            if !(total > 0.0) || !total.is_finite() {
                return Err(Error::ZeroMass);
            }
            let mut u = rng.gen::<f64>() * total;
            let mut pick = w.len() - 1;
            for (m, x) in w.iter().enumerate() {
                if u < *x {
                    pick = m;
                    break;
                }
                u -= x;
            }
            parts.push((i, pick));
        }
        Ok(CycleType::new(parts))
    }
}

/// Either representation of a cycle index sum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CycleIndex {
    Sparse(CycleIndexPoly),
    Factored(FactoredCycleIndex),
}

impl CycleIndex {
    pub fn truncation(&self) -> usize {
        match self {
            CycleIndex::Sparse(p) => p.truncation(),
            CycleIndex::Factored(f) => f.truncation(),
        }
    }

    pub fn derivative_z1(&self) -> Self {
        match self {
            CycleIndex::Sparse(p) => CycleIndex::Sparse(p.derivative_z1()),
            CycleIndex::Factored(f) => CycleIndex::Factored(f.derivative_z1()),
        }
    }

    pub fn plethysm_with_weights(&self, inner: &dyn Fn(usize) -> TruncatedSeries) -> Result<TruncatedSeries> {
        match self {
            CycleIndex::Sparse(p) => p.plethysm_with_weights(inner),
            CycleIndex::Factored(f) => f.plethysm_with_weights(inner),
        }
    }

    pub fn specialize_ogf(&self) -> TruncatedSeries {
        match self {
            CycleIndex::Sparse(p) => p.specialize_ogf(),
            CycleIndex::Factored(f) => f.specialize_ogf(),
        }
    }

    pub fn evaluate_at(&self, args: &dyn Fn(usize) -> f64) -> CycleEvaluation {
        match self {
            CycleIndex::Sparse(p) => p.evaluate_at(args),
            CycleIndex::Factored(f) => f.evaluate_at(args),
        }
    }

    pub fn evaluate_value(&self, args: &dyn Fn(usize) -> f64) -> f64 {
        match self {
            CycleIndex::Sparse(p) => p.evaluate_value(args),
            CycleIndex::Factored(f) => f.evaluate_value(args),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, args: &dyn Fn(usize) -> f64, rng: &mut R) -> Result<CycleType> {
        match self {
            CycleIndex::Sparse(p) => p.sample(args, rng),
            CycleIndex::Factored(f) => f.sample(args, rng),
        }
    }

    /// Unnormalized law of the degree `Σ i·m_i` under the weights `coeff · Π args(i)^{m_i}`,
    /// for degrees `0..=max_degree`.
    pub fn degree_law(&self, args: &dyn Fn(usize) -> f64, max_degree: usize) -> Vec<f64> {
        let mut out = vec![0.0; max_degree + 1];
        match self {
            CycleIndex::Sparse(p) => {
                for (ct, c) in p.terms() {
                    if ct.degree() <= max_degree {
                        out[ct.degree()] += rational::to_f64(c) * ct.monomial_value(args);
                    }
                }
            }
            CycleIndex::Factored(f) => {
                out[0] = 1.0;
                for (&i, coeffs) in &f.factors {
                    let y = args(i);
                    let mut next = vec![0.0; max_degree + 1];
                    for (m, c) in coeffs.iter().enumerate() {
                        if i * m > max_degree {
                            break;
                        }
                        if c.is_zero() {
                            continue;
                        }
                        let w = rational::to_f64(c) * y.powi(m as i32);
                        for k in 0..=max_degree - i * m {
                            next[k + i * m] += w * out[k];
                        }
                    }
                    out = next;
                }
            }
        }
        out
    }

    pub fn to_poly(&self) -> CycleIndexPoly {
        match self {
            CycleIndex::Sparse(p) => p.clone(),
            CycleIndex::Factored(f) => f.to_poly(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CycleEvaluation {
    pub value: f64,
    pub residual: f64,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    cycle_type: BTreeMap<String, usize>,
    coeff: String,
}

impl Serialize for CycleIndexPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let terms: Vec<TermJson> = self
            .terms
            .iter()
            .map(|(t, c)| TermJson {
                cycle_type: t.parts().iter().map(|&(i, m)| (i.to_string(), m)).collect(),
                coeff: rational::to_string(c),
            })
            .collect();
        terms.serialize(s)
    }
}

impl CycleIndexPoly {
    /// Parses the JSON term list; the truncation is the largest degree present unless given.
    pub fn from_json(value: &serde_json::Value, truncation: Option<usize>) -> Result<Self> {
        let terms: Vec<TermJson> =
            serde_json::from_value(value.clone()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let mut parsed = Vec::new();
        for t in terms {
            let mut parts = Vec::new();
            for (k, m) in t.cycle_type {
                let i: usize = k.parse().map_err(|_| Error::InvalidArgument(format!("bad cycle length {k:?}")))?;
                if i == 0 {
                    return Err(Error::InvalidArgument("cycle length 0".into()));
                }
                parts.push((i, m));
            }
            parsed.push((CycleType::new(parts), rational::parse(&t.coeff)?));
        }
        let n = truncation.unwrap_or_else(|| parsed.iter().map(|(t, _)| t.degree()).max().unwrap_or(0));
        Ok(Self::from_terms(parsed, n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn ct(parts: &[(usize, usize)]) -> CycleType {
        CycleType::new(parts.to_vec())
    }

    /// Brute force: group all permutations of `[k]` by cycle type, divided by `k!`.
    fn set_symmetries_by_type(k: usize) -> BTreeMap<CycleType, Rational> {
        let mut perm: Vec<usize> = (0..k).collect();
        let mut out: BTreeMap<CycleType, Rational> = BTreeMap::new();
        let fact = rational::factorial(k as u32);
        loop {
            *out.entry(CycleType::of_permutation(&perm)).or_insert_with(Rational::zero) +=
                Rational::new(1.into(), fact.clone());
            // next lexicographic permutation
            let Some(i) = (0..k.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else { break };
            let j = (i + 1..k).rev().find(|&j| perm[j] > perm[i]).unwrap();
            perm.swap(i, j);
            perm[i + 1..].reverse();
        }
        out
    }

    fn partition_count(n: usize) -> i64 {
        // brute force by counting non-increasing part sequences
        fn rec(rest: usize, max: usize) -> i64 {
            if rest == 0 {
                return 1;
            }
            (1..=max.min(rest)).map(|p| rec(rest - p, p)).sum()
        }
        rec(n, n)
    }

    #[test]
    fn z_set_small_coefficients() {
        let z = CycleIndexPoly::z_set(6);
        assert_eq!(z.coeff(&CycleType::empty()), int(1));
        assert_eq!(z.coeff(&ct(&[(1, 2)])), ratio(1, 2));
        assert_eq!(z.coeff(&ct(&[(2, 1)])), ratio(1, 2));
        assert_eq!(z.coeff(&ct(&[(1, 1), (2, 1)])), ratio(1, 2));
    }

    #[test]
    fn z_set_matches_brute_force_symmetries() {
        let z = CycleIndexPoly::z_set(5);
        for k in 0..=5 {
            for (t, c) in set_symmetries_by_type(k) {
                assert_eq!(z.coeff(&t), c, "cycle type {t:?}");
            }
        }
    }

    #[test]
    fn z_seq_matches_brute_force_symmetries() {
        // only the identity fixes a linear order; k! orders each contribute 1/k!
        let z = CycleIndexPoly::z_seq(5);
        for k in 0..=5 {
            assert_eq!(z.coeff(&ct(&[(1, k)])), int(1));
        }
        assert_eq!(z.len(), 6);
    }

    #[test]
    fn z_set_specializes_to_one_set_per_size() {
        // Each unlabelled object of size k accounts for exactly k! symmetries, and
        // SET has a single object per size.
        let n = 12;
        assert_eq!(CycleIndexPoly::z_set(n).specialize_ogf(), TruncatedSeries::geometric(n));
        let via_exp = TruncatedSeries::log_geometric(n).exp_series().unwrap();
        assert_eq!(CycleIndexPoly::z_set(n).specialize_ogf(), via_exp);
    }

    #[test]
    fn multisets_of_integers_give_partition_numbers() {
        let n = 12;
        let positive = |i: usize| {
            let _ = i;
            let mut c = vec![int(1); n + 1];
            c[0] = int(0);
            TruncatedSeries::new(c)
        };
        let ogf = CycleIndexPoly::z_set(n).plethysm_with_weights(&positive).unwrap();
        for k in 0..=n {
            assert_eq!(ogf.coeff(k), int(partition_count(k)));
        }
        assert_eq!(&ogf.coeffs()[..7], TruncatedSeries::from_integers(&[1, 1, 2, 3, 5, 7, 11]).coeffs());
    }

    #[test]
    fn z_seq_examples() {
        let z = CycleIndexPoly::z_seq(2);
        assert_eq!(z, CycleIndexPoly::from_terms([(CycleType::empty(), int(1)), (ct(&[(1, 1)]), int(1)), (ct(&[(1, 2)]), int(1))], 2));
        assert_eq!(CycleIndexPoly::z_seq(9).specialize_ogf(), TruncatedSeries::geometric(9));
        let d = CycleIndexPoly::z_seq(6).derivative_z1();
        for k in 0..=5 {
            assert_eq!(d.coeff(&ct(&[(1, k)])), int(k as i64 + 1));
        }
    }

    #[test]
    fn derivative_examples() {
        for n in [1, 4, 7] {
            assert_eq!(CycleIndexPoly::z_set(n).derivative_z1(), CycleIndexPoly::z_set(n - 1));
        }
        let p = CycleIndexPoly::from_terms([(ct(&[(1, 1), (2, 1)]), int(1))], 5);
        assert_eq!(p.derivative_z1(), CycleIndexPoly::from_terms([(ct(&[(2, 1)]), int(1))], 4));
        let cube = CycleIndexPoly::from_terms([(ct(&[(1, 3)]), int(1))], 5);
        assert_eq!(cube.derivative_z1().derivative_z1(), CycleIndexPoly::from_terms([(ct(&[(1, 1)]), int(6))], 3));
    }

    #[test]
    fn plethysm_examples() {
        let n = 12;
        let atom = |i: usize| TruncatedSeries::monomial(int(1), 1, n + i);
        let sets = CycleIndexPoly::z_set(n).plethysm_with_weights(&atom).unwrap();
        assert_eq!(sets, TruncatedSeries::geometric(n));
        assert_eq!(CycleIndexPoly::z_seq(n).plethysm_with_weights(&atom).unwrap(), TruncatedSeries::geometric(n));
        let positive = |_: usize| TruncatedSeries::new((0..=n).map(|k| int((k > 0) as i64)).collect());
        let comps = CycleIndexPoly::z_seq(n).plethysm_with_weights(&positive).unwrap();
        for k in 1..=n {
            assert_eq!(comps.coeff(k), int(1 << (k - 1)));
        }
        let bad = CycleIndexPoly::z_set(3).plethysm_with_weights(&|_| TruncatedSeries::one(3));
        assert_eq!(bad, Err(Error::InnerHasConstantTerm));
    }

    #[test]
    fn single_z2_term_specializes() {
        let p = CycleIndexPoly::from_terms([(ct(&[(2, 1)]), ratio(1, 2))], 4);
        assert_eq!(p.specialize_ogf(), TruncatedSeries::new(vec![int(0), int(0), ratio(1, 2), int(0), int(0)]));
    }

    #[test]
    fn factored_matches_sparse() {
        let n = 9;
        let f = FactoredCycleIndex::set(n, &int(1));
        assert_eq!(f.to_poly(), CycleIndexPoly::z_set(n));
        assert_eq!(f.derivative_z1().to_poly(), CycleIndexPoly::z_set(n - 1));
        let s = FactoredCycleIndex::seq(n, &int(1));
        assert_eq!(s.to_poly(), CycleIndexPoly::z_seq(n));
        assert_eq!(s.derivative_z1().to_poly(), CycleIndexPoly::z_seq(n).derivative_z1());
        let inner = |i: usize| TruncatedSeries::new((0..=n).map(|k| if k == 0 { int(0) } else { int((k * i) as i64) }).collect());
        assert_eq!(f.plethysm_with_weights(&inner).unwrap(), CycleIndexPoly::z_set(n).plethysm_with_weights(&inner).unwrap());
        assert_eq!(f.specialize_ogf(), CycleIndexPoly::z_set(n).specialize_ogf());
    }

    #[test]
    fn weighted_set_factor() {
        let f = FactoredCycleIndex::set(4, &ratio(1, 2)).to_poly();
        // z_2 coefficient: c^2 / 2
        assert_eq!(f.coeff(&ct(&[(2, 1)])), ratio(1, 8));
        assert_eq!(f.coeff(&ct(&[(1, 2)])), ratio(1, 8));
    }

    #[test]
    fn evaluate_examples() {
        let x: f64 = 0.5;
        let z = CycleIndexPoly::z_set(30);
        let ev = z.evaluate_at(&|i| x.powi(i as i32));
        assert!((ev.value - 2.0).abs() < 1e-6, "{ev:?}");
        assert!(ev.residual < 1e-3);
        let f = FactoredCycleIndex::set(200, &int(1));
        let ev = f.evaluate_at(&|i| x.powi(i as i32));
        assert!((ev.value - 2.0).abs() < 1e-12 && ev.residual < 1e-12, "{ev:?}");
        let seq = CycleIndexPoly::z_seq(80).evaluate_at(&|i| if i == 1 { 1.0 / 3.0 } else { 0.0 });
        assert!((seq.value - 1.5).abs() < 1e-12);
    }

    #[test]
    fn compose_matches_univariate_plethysm() {
        // SET ∘ SET(ATOM): cycle index then specialize equals plethysm with the SET(ATOM) OGF
        let n = 7;
        let outer = CycleIndexPoly::z_set(n);
        let inner_ci = |i: usize| {
            let mut q = CycleIndexPoly::z_set(n);
            q = q.add(&CycleIndexPoly::constant(int(-1), n));
            q.dilate(i, n)
        };
        let composed = outer.compose(&inner_ci).unwrap().specialize_ogf();
        let inner_ogf = |_i: usize| {
            let mut c = vec![int(1); n + 1];
            c[0] = int(0);
            TruncatedSeries::new(c)
        };
        assert_eq!(composed, outer.plethysm_with_weights(&inner_ogf).unwrap());
    }

    #[test]
    fn json_terms() {
        let p = CycleIndexPoly::z_set(2);
        let js = serde_json::to_value(&p).unwrap();
        let back = CycleIndexPoly::from_json(&js, Some(2)).unwrap();
        assert_eq!(back, p);
        assert!(js.as_array().unwrap().iter().any(|t| t["coeff"] == "1/2" && t["cycle_type"]["2"] == 1));
    }

    #[test]
    fn partitions_are_counted() {
        for n in 0..12 {
            assert_eq!(partitions(n).len() as i64, partition_count(n));
        }
    }
}
