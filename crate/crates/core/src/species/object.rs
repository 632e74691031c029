//! Canonical encodings of unlabelled objects.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Orbit representative of an unlabelled structure.
///
/// Children of [`Obj::Set`] are kept sorted, so two objects are isomorphic exactly when
/// their encodings are equal. [`Obj::Comp`] marks a component: an outer atom carrying an
/// inner object. [`Obj::Star`] is the `*`-placeholder of a derived structure and does
/// not count towards the size.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Obj {
    Unit,
    Star,
    Atom,
    Inl(Box<Obj>),
    Inr(Box<Obj>),
    Pair(Box<Obj>, Box<Obj>),
    Set(Vec<Obj>),
    Seq(Vec<Obj>),
    Comp(Box<Obj>),
}

impl Obj {
    pub fn pair(a: Obj, b: Obj) -> Obj {
        Obj::Pair(Box::new(a), Box::new(b))
    }

    pub fn comp(inner: Obj) -> Obj {
        Obj::Comp(Box::new(inner))
    }

    /// A multiset; the children are sorted into canonical order.
    pub fn set(mut children: Vec<Obj>) -> Obj {
        children.sort();
        Obj::Set(children)
    }

    /// Number of atoms, not counting `*`.
    pub fn size(&self) -> usize {
        match self {
            Obj::Unit | Obj::Star => 0,
            Obj::Atom => 1,
            Obj::Inl(x) | Obj::Inr(x) | Obj::Comp(x) => x.size(),
            Obj::Pair(a, b) => a.size() + b.size(),
            Obj::Set(v) | Obj::Seq(v) => v.iter().map(Obj::size).sum(),
        }
    }

    /// Sizes of the outermost components, in traversal order.
    pub fn component_sizes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit_components(&mut |c| out.push(c.size()));
        out
    }

    pub fn component_count(&self) -> usize {
        let mut n = 0;
        self.visit_components(&mut |_| n += 1);
        n
    }

    pub fn largest_component(&self) -> usize {
        self.component_sizes().into_iter().max().unwrap_or(0)
    }

    fn visit_components(&self, f: &mut dyn FnMut(&Obj)) {
        match self {
            Obj::Comp(x) => f(x),
            Obj::Unit | Obj::Star | Obj::Atom => {}
            Obj::Inl(x) | Obj::Inr(x) => x.visit_components(f),
            Obj::Pair(a, b) => {
                a.visit_components(f);
                b.visit_components(f);
            }
            Obj::Set(v) | Obj::Seq(v) => v.iter().for_each(|c| c.visit_components(f)),
        }
    }

    pub fn contains_star(&self) -> bool {
        match self {
            Obj::Star => true,
            Obj::Unit | Obj::Atom => false,
            Obj::Inl(x) | Obj::Inr(x) | Obj::Comp(x) => x.contains_star(),
            Obj::Pair(a, b) => a.contains_star() || b.contains_star(),
            Obj::Set(v) | Obj::Seq(v) => v.iter().any(Obj::contains_star),
        }
    }

    /// Canonical form: sorts the children of every multiset, bottom-up.
    pub fn canonicalize(&self) -> Obj {
        match self {
            Obj::Unit | Obj::Star | Obj::Atom => self.clone(),
            Obj::Inl(x) => Obj::Inl(Box::new(x.canonicalize())),
            Obj::Inr(x) => Obj::Inr(Box::new(x.canonicalize())),
            Obj::Comp(x) => Obj::comp(x.canonicalize()),
            Obj::Pair(a, b) => Obj::pair(a.canonicalize(), b.canonicalize()),
            Obj::Set(v) => Obj::set(v.iter().map(Obj::canonicalize).collect()),
            Obj::Seq(v) => Obj::Seq(v.iter().map(Obj::canonicalize).collect()),
        }
    }

    pub fn is_canonical(&self) -> bool {
        match self {
            Obj::Unit | Obj::Star | Obj::Atom => true,
            Obj::Inl(x) | Obj::Inr(x) | Obj::Comp(x) => x.is_canonical(),
            Obj::Pair(a, b) => a.is_canonical() && b.is_canonical(),
            Obj::Set(v) => v.windows(2).all(|w| w[0] <= w[1]) && v.iter().all(Obj::is_canonical),
            Obj::Seq(v) => v.iter().all(Obj::is_canonical),
        }
    }

    /// Parses the bracket notation produced by `Display`.
    pub fn parse(s: &str) -> Result<Obj> {
        let mut p = ObjParser { src: s.as_bytes(), pos: 0 };
        let obj = p.obj()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("trailing input"));
        }
        Ok(obj)
    }
}

/// Bracket notation: `a` atom, `*` placeholder, `1` unit, `(x,y)` pair, `{..}` multiset,
/// `[..]` sequence, `<x>` component, `L(x)` / `R(x)` union branches.
impl fmt::Display for Obj {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, open: char, v: &[Obj], close: char) -> fmt::Result {
            write!(f, "{open}")?;
            for (i, c) in v.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, "{close}")
        }
        match self {
            Obj::Unit => write!(f, "1"),
            Obj::Star => write!(f, "*"),
            Obj::Atom => write!(f, "a"),
            Obj::Inl(x) => write!(f, "L({x})"),
            Obj::Inr(x) => write!(f, "R({x})"),
            Obj::Pair(a, b) => write!(f, "({a},{b})"),
            Obj::Comp(x) => write!(f, "<{x}>"),
            Obj::Set(v) => list(f, '{', v, '}'),
            Obj::Seq(v) => list(f, '[', v, ']'),
        }
    }
}

struct ObjParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl ObjParser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse { line: 1, column: self.pos + 1, message: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn list(&mut self, close: u8) -> Result<Vec<Obj>> {
        let mut out = Vec::new();
        if self.peek() == Some(close) {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            out.push(self.obj()?);
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(c) if c == close => {
                    self.pos += 1;
                    return Ok(out);
                }
                _ => return Err(self.err("expected ',' or closing bracket")),
            }
        }
    }

    fn obj(&mut self) -> Result<Obj> {
        let c = self.peek().ok_or_else(|| self.err("unexpected end of input"))?;
        self.pos += 1;
        match c {
            b'1' => Ok(Obj::Unit),
            b'*' => Ok(Obj::Star),
            b'a' => Ok(Obj::Atom),
            b'L' | b'R' => {
                self.expect(b'(')?;
                let x = Box::new(self.obj()?);
                self.expect(b')')?;
                Ok(if c == b'L' { Obj::Inl(x) } else { Obj::Inr(x) })
            }
            b'(' => {
                let a = self.obj()?;
                self.expect(b',')?;
                let b = self.obj()?;
                self.expect(b')')?;
                Ok(Obj::pair(a, b))
            }
            b'<' => {
                let x = self.obj()?;
                self.expect(b'>')?;
                Ok(Obj::comp(x))
            }
            b'{' => Ok(Obj::Set(self.list(b'}')?)),
            b'[' => Ok(Obj::Seq(self.list(b']')?)),
            _ => {
                self.pos -= 1;
                Err(self.err("unexpected character"))
            }
        }
    }
}
