//! Text syntax for species specifications.
//!
//! ```text
//! # Pólya trees and forests of them
//! T     := ATOM * SET(T);
//! MODEL := COMPOSE(SET, T)
//! ```
//!
//! `+` is disjoint union and binds weaker than `*` (product). Bare `SET` and `SEQ` stand
//! for `SET(ATOM)` and `SEQ(ATOM)`. Weights are attached with
//! `WEIGHTED(expr, ATOM_MULT(1/2))`, `WEIGHTED(expr, UNIT)` or
//! `WEIGHTED(expr, TABLE{"(a,a)": 3, "a": 1})`. The root is the last definition.

use std::collections::BTreeMap;

use super::spec::{Definition, Expr, SpeciesSpec, WeightModel};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Str(String),
    Define,
    Sym(char),
}

struct Lexed {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Lexed>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, column, message: &str| Error::Parse { line, column, message: message.to_string() };
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
        } else if c.is_whitespace() {
            advance(1, &mut i, &mut col);
        } else if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Lexed { tok: Tok::Ident(chars[start..i].iter().collect()), line: l0, column: c0 });
        } else if c.is_ascii_digit() || c == '-' {
            let start = i;
            i += 1;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '/') {
                i += 1;
            }
            col += i - start;
            out.push(Lexed { tok: Tok::Number(chars[start..i].iter().collect()), line: l0, column: c0 });
        } else if c == '"' {
            let start = i + 1;
            i += 1;
            while i < chars.len() && chars[i] != '"' {
                if chars[i] == '\n' {
                    return Err(err(l0, c0, "unterminated string"));
                }
                i += 1;
            }
            if i == chars.len() {
                return Err(err(l0, c0, "unterminated string"));
            }
            let s: String = chars[start..i].iter().collect();
            i += 1;
            col += i - start + 1;
            out.push(Lexed { tok: Tok::Str(s), line: l0, column: c0 });
        } else if c == ':' && chars.get(i + 1) == Some(&'=') {
            advance(2, &mut i, &mut col);
            out.push(Lexed { tok: Tok::Define, line: l0, column: c0 });
        } else if "()+*,;{}:".contains(c) {
            advance(1, &mut i, &mut col);
            out.push(Lexed { tok: Tok::Sym(c), line: l0, column: c0 });
        } else {
            return Err(err(l0, c0, &format!("unexpected character '{c}'")));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn err_at(&self, pos: usize, msg: &str) -> Error {
        let (line, column) = self.toks.get(pos).map(|t| (t.line, t.column)).unwrap_or(self.end);
        Error::Parse { line, column, message: msg.to_string() }
    }

    fn err(&self, msg: &str) -> Error {
        self.err_at(self.pos, msg)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|t| &t.tok)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{c}'")))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    fn rational(&mut self) -> Result<Rational> {
        match self.peek() {
            Some(Tok::Number(s)) => {
                let q = rational::parse(s).map_err(|_| self.err("malformed number"))?;
                self.pos += 1;
                Ok(q)
            }
            _ => Err(self.err("expected number")),
        }
    }

    fn spec(&mut self) -> Result<SpeciesSpec> {
        let mut defs: Vec<Definition> = Vec::new();
        while self.peek().is_some() {
            if self.eat(';') {
                continue;
            }
            let at = self.pos;
            let name = self.ident()?;
            if self.peek() != Some(&Tok::Define) {
                return Err(self.err("expected ':='"));
            }
            self.pos += 1;
            let expr = self.expr()?;
            if defs.iter().any(|d| d.name == name) {
                return Err(self.err_at(at, &format!("duplicate definition `{name}`")));
            }
            defs.push(Definition { name, expr });
            if self.peek().is_some() && !self.eat(';') && self.peek2() != Some(&Tok::Define) {
                return Err(self.err("expected ';' or a new definition"));
            }
        }
        let root = defs.last().map(|d| d.name.clone()).ok_or_else(|| self.err("no definitions"))?;
        let spec = SpeciesSpec { definitions: defs, root };
        spec.validate()?;
        Ok(spec)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut e = self.term()?;
        while self.eat('+') {
            e = Expr::union(e, self.term()?);
        }
        Ok(e)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut e = self.factor()?;
        while self.eat('*') {
            e = Expr::product(e, self.factor()?);
        }
        Ok(e)
    }

    fn args(&mut self, n: usize) -> Result<Vec<Expr>> {
        self.expect('(')?;
        let mut out = vec![self.expr()?];
        for _ in 1..n {
            self.expect(',')?;
            out.push(self.expr()?);
        }
        self.expect(')')?;
        Ok(out)
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat('(') {
            let e = self.expr()?;
            self.expect(')')?;
            return Ok(e);
        }
        let at = self.pos;
        let name = self.ident()?;
        let one = |p: &mut Parser| -> Result<Expr> { Ok(p.args(1)?.remove(0)) };
        let two = |p: &mut Parser| -> Result<(Expr, Expr)> {
            let mut v = p.args(2)?;
            let b = v.pop().unwrap();
            Ok((v.pop().unwrap(), b))
        };
        Ok(match name.as_str() {
            "ATOM" | "Z" => Expr::Atom,
            "EPSILON" | "E" => Expr::Epsilon,
            "SET" | "SEQ" => {
                let inner = if self.peek() == Some(&Tok::Sym('(')) { one(self)? } else { Expr::Atom };
                if name == "SET" {
                    Expr::set(inner)
                } else {
                    Expr::seq(inner)
                }
            }
            "DERIVE" => Expr::derive(one(self)?),
            "COMPOSE" => {
                let (f, g) = two(self)?;
                Expr::compose(f, g)
            }
            "UNION" => {
                let (a, b) = two(self)?;
                Expr::union(a, b)
            }
            "PRODUCT" => {
                let (a, b) = two(self)?;
                Expr::product(a, b)
            }
            "WEIGHTED" => {
                self.expect('(')?;
                let e = self.expr()?;
                self.expect(',')?;
                let w = self.weight()?;
                self.expect(')')?;
                Expr::weighted(e, w)
            }
            "UNIT" | "ATOM_MULT" | "TABLE" => return Err(self.err_at(at, "weight model outside WEIGHTED")),
            _ => Expr::Ref(name),
        })
    }

    fn weight(&mut self) -> Result<WeightModel> {
        let at = self.pos;
        match self.ident()?.as_str() {
            "UNIT" => Ok(WeightModel::Unit),
            "ATOM_MULT" => {
                self.expect('(')?;
                let c = self.rational()?;
                self.expect(')')?;
                Ok(WeightModel::AtomMultiplicative(c))
            }
            "TABLE" => {
                self.expect('{')?;
                let mut table = BTreeMap::new();
                if !self.eat('}') {
                    loop {
                        let key = match self.peek() {
                            Some(Tok::Str(s)) => s.clone(),
                            _ => return Err(self.err("expected quoted object")),
                        };
                        let canon = super::object::Obj::parse(&key)
                            .map_err(|_| self.err("malformed object in table"))?
                            .canonicalize()
                            .to_string();
                        self.pos += 1;
                        self.expect(':')?;
                        table.insert(canon, self.rational()?);
                        if self.eat('}') {
                            break;
                        }
                        self.expect(',')?;
                    }
                }
                Ok(WeightModel::Table(table))
            }
            _ => Err(self.err_at(at, "expected UNIT, ATOM_MULT or TABLE")),
        }
    }
}

/// Parses the text syntax into a validated spec.
pub fn parse(src: &str) -> Result<SpeciesSpec> {
    let toks = lex(src)?;
    let line_count = src.lines().count().max(1);
    let last_len = src.lines().last().map(|l| l.chars().count()).unwrap_or(0);
    let mut p = Parser { toks, pos: 0, end: (line_count, last_len + 1) };
    p.spec()
}

/// Parses either JSON (if the text starts with `{`) or the text syntax.
pub fn parse_any(src: &str) -> Result<SpeciesSpec> {
    if src.trim_start().starts_with('{') {
        SpeciesSpec::from_json(src)
    } else {
        parse(src)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::species::spec::builtin;

    #[test]
    fn forests_parse() {
        let spec = parse("# forests\nT := ATOM * SET(T);\nMODEL := COMPOSE(SET, T)\n").unwrap();
        assert_eq!(spec, builtin::forests());
    }

    #[test]
    fn precedence_and_sugar() {
        let spec = parse("S := ATOM + ATOM * SEQ").unwrap();
        assert_eq!(
            spec.root_expr(),
            &Expr::union(Expr::Atom, Expr::product(Expr::Atom, Expr::seq(Expr::Atom)))
        );
    }

    #[test]
    fn definitions_without_semicolons() {
        let spec = parse("A := ATOM\nB := SET(A)").unwrap();
        assert_eq!(spec.root, "B");
    }

    #[test]
    fn weights() {
        let spec = parse("S := WEIGHTED(SEQ, ATOM_MULT(1/2)) + WEIGHTED(ATOM*ATOM, TABLE{\"(a,a)\": 3})").unwrap();
        let Expr::Union(a, b) = spec.root_expr() else { panic!() };
        assert_eq!(**a, Expr::weighted(Expr::seq(Expr::Atom), WeightModel::AtomMultiplicative(rational::ratio(1, 2))));
        let Expr::Weighted(_, WeightModel::Table(t)) = &**b else { panic!() };
        assert_eq!(t["(a,a)"], rational::int(3));
    }

    #[test]
    fn errors_carry_positions() {
        match parse("T := ATOM *\n  SET(T") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse("T := ATOM $ T") {
            Err(Error::Parse { line: 1, column: 11, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("T := SET(U)"), Err(Error::UnknownName(n)) if n == "U"));
        assert!(parse("T := ATOM; T := ATOM").is_err());
        assert!(parse("T := WEIGHTED(ATOM, ATOM_MULT(-1))").is_err());
    }

    #[test]
    fn json_roundtrip() {
        let spec = builtin::forests();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(parse_any(&json).unwrap(), spec);
        let w = parse("S := WEIGHTED(SEQ, ATOM_MULT(1/2))").unwrap();
        let json = serde_json::to_string(&w).unwrap();
        assert!(json.contains("\"1/2\""));
        assert_eq!(SpeciesSpec::from_json(&json).unwrap(), w);
    }
}
