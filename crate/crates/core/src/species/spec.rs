//! Symbolic species specifications.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Expression over the species constructors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Expr {
    /// A single object of size 1.
    Atom,
    /// A single object of size 0.
    Epsilon,
    Set(Box<Expr>),
    Seq(Box<Expr>),
    /// `Compose(F, G)`: partitions whose blocks carry `G`-structures and whose set of
    /// blocks carries an `F`-structure.
    Compose(Box<Expr>, Box<Expr>),
    Derive(Box<Expr>),
    Union(Box<Expr>, Box<Expr>),
    Product(Box<Expr>, Box<Expr>),
    /// Reference to a named definition; definitions may be recursive.
    Ref(String),
    Weighted(Box<Expr>, WeightModel),
}

impl Expr {
    pub fn set(e: Expr) -> Expr {
        Expr::Set(Box::new(e))
    }
    pub fn seq(e: Expr) -> Expr {
        Expr::Seq(Box::new(e))
    }
    pub fn compose(f: Expr, g: Expr) -> Expr {
        Expr::Compose(Box::new(f), Box::new(g))
    }
    pub fn derive(e: Expr) -> Expr {
        Expr::Derive(Box::new(e))
    }
    pub fn union(a: Expr, b: Expr) -> Expr {
        Expr::Union(Box::new(a), Box::new(b))
    }
    pub fn product(a: Expr, b: Expr) -> Expr {
        Expr::Product(Box::new(a), Box::new(b))
    }
    pub fn name(n: &str) -> Expr {
        Expr::Ref(n.to_string())
    }
    pub fn weighted(e: Expr, w: WeightModel) -> Expr {
        Expr::Weighted(Box::new(e), w)
    }

    fn visit_refs(&self, f: &mut dyn FnMut(&str)) {
        match self {
            Expr::Atom | Expr::Epsilon => {}
            Expr::Ref(n) => f(n),
            Expr::Set(e) | Expr::Seq(e) | Expr::Derive(e) | Expr::Weighted(e, _) => e.visit_refs(f),
            Expr::Compose(a, b) | Expr::Union(a, b) | Expr::Product(a, b) => {
                a.visit_refs(f);
                b.visit_refs(f);
            }
        }
    }
}

/// How a species weights its objects.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WeightModel {
    Unit,
    /// `ω(F) = c^{|F|}`.
    AtomMultiplicative(#[serde(with = "rational::serde_str")] Rational),
    /// Explicit weights keyed by canonical bracket notation; objects not listed are dropped.
    Table(#[serde(with = "rational::serde_map")] BTreeMap<String, Rational>),
}

impl WeightModel {
    pub fn validate(&self) -> Result<()> {
        let neg = |q: &Rational| num_traits::Signed::is_negative(q);
        match self {
            WeightModel::Unit => Ok(()),
            WeightModel::AtomMultiplicative(c) if neg(c) || num_traits::Zero::is_zero(c) => {
                Err(Error::InvalidArgument("atom weight must be positive".into()))
            }
            WeightModel::AtomMultiplicative(_) => Ok(()),
            WeightModel::Table(t) => {
                if t.values().any(neg) {
                    return Err(Error::InvalidArgument("table weights must be non-negative".into()));
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Definition {
    pub name: String,
    pub expr: Expr,
}

/// A set of (possibly recursive) named definitions with a designated root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeciesSpec {
    pub definitions: Vec<Definition>,
    pub root: String,
}

impl SpeciesSpec {
    /// Spec consisting of a single anonymous expression.
    pub fn of(expr: Expr) -> Self {
        SpeciesSpec { definitions: vec![Definition { name: "_".into(), expr }], root: "_".into() }
    }

    pub fn new(definitions: Vec<(&str, Expr)>, root: &str) -> Result<Self> {
        let spec = SpeciesSpec {
            definitions: definitions.into_iter().map(|(n, e)| Definition { name: n.to_string(), expr: e }).collect(),
            root: root.to_string(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn get(&self, name: &str) -> Option<&Expr> {
        self.definitions.iter().find(|d| d.name == name).map(|d| &d.expr)
    }

    pub fn root_expr(&self) -> &Expr {
        self.get(&self.root).expect("validated root")
    }

    /// Same definitions, different root.
    pub fn with_root(&self, root: &str) -> Result<Self> {
        let mut s = self.clone();
        s.root = root.to_string();
        s.validate()?;
        Ok(s)
    }

    /// Same definitions plus an extra anonymous root expression.
    pub fn with_root_expr(&self, expr: Expr) -> Result<Self> {
        let mut s = self.clone();
        let name = format!("_root{}", s.definitions.len());
        s.definitions.push(Definition { name: name.clone(), expr });
        s.root = name;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for d in &self.definitions {
            if !seen.insert(d.name.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate definition `{}`", d.name)));
            }
        }
        if self.get(&self.root).is_none() {
            return Err(Error::UnknownName(self.root.clone()));
        }
        let mut missing = None;
        for d in &self.definitions {
            d.expr.visit_refs(&mut |n| {
                if self.get(n).is_none() && missing.is_none() {
                    missing = Some(n.to_string());
                }
            });
            visit_weights(&d.expr, &mut |w| w.validate())?;
        }
        match missing {
            Some(n) => Err(Error::UnknownName(n)),
            None => Ok(()),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: SpeciesSpec = serde_json::from_str(s).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }
}

fn visit_weights(e: &Expr, f: &mut dyn FnMut(&WeightModel) -> Result<()>) -> Result<()> {
    match e {
        Expr::Atom | Expr::Epsilon | Expr::Ref(_) => Ok(()),
        Expr::Weighted(x, w) => {
            f(w)?;
            visit_weights(x, f)
        }
        Expr::Set(x) | Expr::Seq(x) | Expr::Derive(x) => visit_weights(x, f),
        Expr::Compose(a, b) | Expr::Union(a, b) | Expr::Product(a, b) => {
            visit_weights(a, f)?;
            visit_weights(b, f)
        }
    }
}

/// Builtin specifications used by examples, tests and the CLI.
pub mod builtin {
    use super::*;

    /// Pólya trees: `T := ATOM * SET(T)`.
    pub fn polya_trees() -> SpeciesSpec {
        SpeciesSpec::new(vec![("T", Expr::product(Expr::Atom, Expr::set(Expr::name("T"))))], "T").unwrap()
    }

    /// Forests of Pólya trees: `MODEL := COMPOSE(SET, T)`.
    pub fn forests() -> SpeciesSpec {
        SpeciesSpec::new(
            vec![
                ("T", Expr::product(Expr::Atom, Expr::set(Expr::name("T")))),
                ("MODEL", Expr::compose(Expr::set(Expr::Atom), Expr::name("T"))),
            ],
            "MODEL",
        )
        .unwrap()
    }
}
