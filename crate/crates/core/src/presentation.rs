//! Polynomial presentations `F_p[x_1..x_n]/(f_1..f_s)` and their compilation
//! to structure constants.
//!
//! Compilation runs Buchberger's algorithm in graded reverse-lexicographic
//! order, takes the standard monomials (ascending, so `1` comes first) as the
//! basis, and fills the multiplication table with normal forms.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{AlgebraError, AlgebraMorphism, Element, FiniteLocalAlgebra};
use crate::field::{FieldConfig, FieldError};

pub const DEFAULT_DIM_CAP: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PresentationError {
    #[error("{line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{line}:{column}: unknown variable `{name}`")]
    UnknownVariable { name: String, line: usize, column: usize },
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("invalid field: {0}")]
    Field(#[from] FieldError),
    #[error("not zero-dimensional: no power of `{0}` is a leading monomial, so the quotient is infinite")]
    NotZeroDimensional(String),
    #[error("not local: {0}")]
    NotLocal(String),
    #[error("degree bound {bound} exceeded")]
    DegreeBoundExceeded { bound: usize },
    #[error("quotient dimension exceeds the cap of {cap}")]
    DimensionCapExceeded { cap: usize },
    #[error("relation `{0}` is not sent to zero by the substitution")]
    RelationNotPreserved(String),
    #[error("expected {expected} generator images, got {found}")]
    ImageCount { expected: usize, found: usize },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Exponent vector ordered by graded reverse-lexicographic order.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Monomial(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `other / self`, assuming divisibility.
    pub fn quotient_of(&self, other: &Monomial) -> Monomial {
        Monomial(other.0.iter().zip(&self.0).map(|(a, b)| a - b).collect())
    }

    pub fn lcm(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(&a, &b)| a.max(b)).collect())
    }

    pub fn coprime(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(&a, &b)| a == 0 || b == 0)
    }

    /// Pure power `x_i^a` with `a > 0`, if this monomial is one.
    pub fn pure_power(&self) -> Option<usize> {
        let mut found = None;
        for (i, &a) in self.0.iter().enumerate() {
            if a > 0 {
                if found.is_some() {
                    return None;
                }
                found = Some(i);
            }
        }
        found
    }

    pub fn render(&self, vars: &[String]) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0)
            .map(|(i, &a)| if a == 1 { vars[i].clone() } else { format!("{}^{}", vars[i], a) })
            .collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            o => return o,
        }
        for (a, b) in self.0.iter().zip(&other.0).rev() {
            if a != b {
                // smaller exponent in the last differing variable is larger
                return b.cmp(a);
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse polynomial over `F_p`: nonzero coefficients keyed by monomial.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Poly {
    field: FieldConfig,
    nvars: usize,
    terms: BTreeMap<Monomial, u64>,
}

impl Poly {
    pub fn zero(field: FieldConfig, nvars: usize) -> Self {
        Poly {
            field,
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(field: FieldConfig, nvars: usize, c: u64) -> Self {
        let mut p = Self::zero(field, nvars);
        p.add_term(Monomial::one(nvars), c);
        p
    }

    pub fn var(field: FieldConfig, nvars: usize, i: usize) -> Self {
        let mut p = Self::zero(field, nvars);
        p.add_term(Monomial::var(nvars, i), 1);
        p
    }

    pub fn monomial(field: FieldConfig, m: Monomial, c: u64) -> Self {
        let mut p = Self::zero(field, m.0.len());
        p.add_term(m, c);
        p
    }

    pub fn field(&self) -> FieldConfig {
        self.field
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, u64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    /// Leading term in grevlex.
    pub fn leading(&self) -> Option<(&Monomial, u64)> {
        self.terms.iter().next_back().map(|(m, &c)| (m, c))
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn constant_term(&self) -> u64 {
        self.terms.get(&Monomial::one(self.nvars)).copied().unwrap_or(0)
    }

    pub fn add_term(&mut self, m: Monomial, c: u64) {
        let c = self.field.reduce(c);
        if c == 0 {
            return;
        }
        let f = self.field;
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = f.add(*o.get(), c);
                if s == 0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        self.scale(self.field.neg(1))
    }

    pub fn scale(&self, c: u64) -> Poly {
        let mut out = Poly::zero(self.field, self.nvars);
        for (m, &a) in &self.terms {
            out.add_term(m.clone(), self.field.mul(a, c));
        }
        out
    }

    /// `c * m * self`
    pub fn mul_term(&self, m: &Monomial, c: u64) -> Poly {
        let mut out = Poly::zero(self.field, self.nvars);
        for (n, &a) in &self.terms {
            out.add_term(n.mul(m), self.field.mul(a, c));
        }
        out
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.field, self.nvars);
        for (m, &a) in &self.terms {
            for (n, &b) in &other.terms {
                out.add_term(m.mul(n), self.field.mul(a, b));
            }
        }
        out
    }

    /// `self^e`, refusing results above `max_degree`.
    pub fn pow(&self, e: u64, max_degree: usize) -> Result<Poly, PresentationError> {
        if (self.degree() as u128) * (e as u128) > max_degree as u128 {
            return Err(PresentationError::DegreeBoundExceeded { bound: max_degree });
        }
        let mut acc = Poly::constant(self.field, self.nvars, 1);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        Ok(acc)
    }

    fn monic(&self) -> Poly {
        match self.leading() {
            Some((_, c)) => self.scale(self.field.inv(c)),
            None => self.clone(),
        }
    }

    pub fn render(&self, vars: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .rev()
            .map(|(m, &c)| {
                let mono = m.render(vars);
                match (c, mono.as_str()) {
                    (_, "1") => c.to_string(),
                    (1, _) => mono,
                    _ => format!("{c}*{mono}"),
                }
            })
            .collect();
        parts.join(" + ")
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
    Comma,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, PresentationError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut line, mut col) = (1, 1);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        let simple = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push(Token { tok, line: l0, column: c0 });
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Int(chars[start..i].iter().collect()),
                line: l0,
                column: c0,
            });
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: l0,
                column: c0,
            });
            continue;
        }
        return Err(PresentationError::Syntax {
            line: l0,
            column: c0,
            message: format!("unexpected character `{c}`"),
        });
    }
    out.push(Token { tok: Tok::Eof, line, column: col });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    field: FieldConfig,
    vars: &'a [String],
    max_degree: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, t: &Token, message: impl Into<String>) -> Result<T, PresentationError> {
        Err(PresentationError::Syntax {
            line: t.line,
            column: t.column,
            message: message.into(),
        })
    }

    fn int_mod_p(&self, digits: &str) -> u64 {
        digits
            .bytes()
            .fold(0u64, |acc, b| self.field.mul_add((b - b'0') as u64, acc, 10))
    }

    fn expr(&mut self) -> Result<Poly, PresentationError> {
        let mut acc = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.bump();
                    acc = acc.add(&self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Poly, PresentationError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.bump();
                    acc = acc.mul(&self.unary()?);
                }
                Tok::Ident(_) | Tok::Int(_) | Tok::LParen => {
                    let t = self.peek().clone();
                    return self.err(&t, "implicit multiplication is not allowed; use `*`");
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Poly, PresentationError> {
        match self.peek().tok {
            Tok::Minus => {
                self.bump();
                Ok(self.unary()?.neg())
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Poly, PresentationError> {
        let base = self.atom()?;
        if self.peek().tok != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let t = self.bump();
        let Tok::Int(digits) = &t.tok else {
            return self.err(&t, "expected a non-negative integer exponent");
        };
        let e: u64 = match digits.parse() {
            Ok(e) => e,
            Err(_) => return self.err(&t, "exponent too large"),
        };
        base.pow(e, self.max_degree)
    }

    fn atom(&mut self) -> Result<Poly, PresentationError> {
        let n = self.vars.len();
        let t = self.bump();
        match &t.tok {
            Tok::Int(d) => Ok(Poly::constant(self.field, n, self.int_mod_p(d))),
            Tok::Ident(name) => match self.vars.iter().position(|v| v == name) {
                Some(i) => Ok(Poly::var(self.field, n, i)),
                None => Err(PresentationError::UnknownVariable {
                    name: name.clone(),
                    line: t.line,
                    column: t.column,
                }),
            },
            Tok::LParen => {
                let inner = self.expr()?;
                let close = self.bump();
                if close.tok != Tok::RParen {
                    return self.err(&close, "expected `)`");
                }
                Ok(inner)
            }
            Tok::Eof => self.err(&t, "unexpected end of input"),
            other => self.err(&t, format!("unexpected token {other:?}")),
        }
    }
}

fn parser<'a>(field: FieldConfig, vars: &'a [String], text: &str, max_degree: usize) -> Result<Parser<'a>, PresentationError> {
    Ok(Parser {
        toks: lex(text)?,
        pos: 0,
        field,
        vars,
        max_degree,
    })
}

/// Parses one polynomial expression in the given variables.
pub fn parse_poly(field: FieldConfig, vars: &[String], text: &str, max_degree: usize) -> Result<Poly, PresentationError> {
    let mut p = parser(field, vars, text, max_degree)?;
    let out = p.expr()?;
    let t = p.peek().clone();
    if t.tok != Tok::Eof {
        return p.err(&t, format!("unexpected token {:?}", t.tok));
    }
    Ok(out)
}

/// Parses a comma-separated list of polynomials. Blank input is the empty
/// list.
pub fn parse_poly_list(field: FieldConfig, vars: &[String], text: &str, max_degree: usize) -> Result<Vec<Poly>, PresentationError> {
    let mut p = parser(field, vars, text, max_degree)?;
    let mut out = Vec::new();
    if p.peek().tok == Tok::Eof {
        return Ok(out);
    }
    loop {
        out.push(p.expr()?);
        let t = p.bump();
        match &t.tok {
            Tok::Comma => continue,
            Tok::Eof => return Ok(out),
            other => return p.err(&t, format!("expected `,` or end of input, found {other:?}")),
        }
    }
}

fn check_identifier(name: &str) -> bool {
    let mut cs = name.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic()) && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A presentation `F_p[vars]/(relations)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Presentation {
    pub field: FieldConfig,
    pub variables: Vec<String>,
    pub relations: Vec<Poly>,
    pub degree_bound: Option<usize>,
}

impl Presentation {
    pub fn new(field: FieldConfig, variables: Vec<String>, relations: Vec<Poly>) -> Result<Self, PresentationError> {
        let mut seen = BTreeSet::new();
        for v in &variables {
            if !check_identifier(v) {
                return Err(PresentationError::Syntax {
                    line: 1,
                    column: 1,
                    message: format!("invalid variable name `{v}`"),
                });
            }
            if !seen.insert(v.clone()) {
                return Err(PresentationError::DuplicateVariable(v.clone()));
            }
        }
        Ok(Presentation {
            field,
            variables,
            relations,
            degree_bound: None,
        })
    }

    /// Parses relations such as `"x^2, x*y, y^2"`.
    pub fn parse(p: u64, variables: &[&str], relations: &str) -> Result<Self, PresentationError> {
        let field = FieldConfig::new(p)?;
        let vars: Vec<String> = variables.iter().map(|s| s.to_string()).collect();
        let rels = parse_poly_list(field, &vars, relations, 2 * DEFAULT_DIM_CAP)?;
        Self::new(field, vars, rels)
    }

    pub fn with_degree_bound(mut self, bound: usize) -> Self {
        self.degree_bound = Some(bound);
        self
    }

    pub fn nvars(&self) -> usize {
        self.variables.len()
    }

    /// Compiles with the default dimension cap.
    pub fn compile(&self) -> Result<CompiledAlgebra, PresentationError> {
        self.compile_with_cap(DEFAULT_DIM_CAP)
    }

    pub fn compile_with_cap(&self, dim_cap: usize) -> Result<CompiledAlgebra, PresentationError> {
        let n = self.nvars();
        let field = self.field;
        for r in &self.relations {
            if r.constant_term() != 0 {
                return Err(PresentationError::NotLocal(format!(
                    "relation `{}` has a nonzero constant term, so the variables do not generate a proper ideal",
                    r.render(&self.variables)
                )));
            }
        }
        let bound = self.degree_bound.unwrap_or(2 * dim_cap);
        let gb = groebner_basis(self.relations.clone(), bound)?;
        let leads: Vec<Monomial> = gb.iter().map(|g| g.leading().unwrap().0.clone()).collect();
        for i in 0..n {
            if !leads.iter().any(|m| m.pure_power() == Some(i)) {
                return Err(PresentationError::NotZeroDimensional(self.variables[i].clone()));
            }
        }
        let is_standard = |m: &Monomial| !leads.iter().any(|l| l.divides(m));
        // Standard monomials form an order ideal: breadth-first from 1.
        let mut standard = BTreeSet::new();
        let mut queue = VecDeque::from([Monomial::one(n)]);
        standard.insert(Monomial::one(n));
        while let Some(m) = queue.pop_front() {
            for i in 0..n {
                let next = m.mul(&Monomial::var(n, i));
                if is_standard(&next) && standard.insert(next.clone()) {
                    if standard.len() > dim_cap {
                        return Err(PresentationError::DimensionCapExceeded { cap: dim_cap });
                    }
                    queue.push_back(next);
                }
            }
        }
        let basis: Vec<Monomial> = standard.into_iter().collect();
        let index: HashMap<Monomial, usize> = basis.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let d = basis.len();
        let mut nf = NormalForms {
            field,
            gb: &gb,
            index: &index,
            dim: d,
            memo: HashMap::new(),
        };
        for i in 0..n {
            let x = Monomial::var(n, i);
            let v = nf.monomial(&x);
            if v[0] != 0 {
                return Err(PresentationError::NotLocal(format!(
                    "`{}` reduces to a unit",
                    self.variables[i]
                )));
            }
            let mut e = x.clone();
            e.0[i] = d as u32;
            if nf.monomial(&e).iter().any(|&c| c != 0) {
                return Err(PresentationError::NotLocal(format!(
                    "`{}` is not nilpotent in the quotient",
                    self.variables[i]
                )));
            }
        }
        let mut products = Vec::with_capacity(d * d);
        for a in &basis {
            for b in &basis {
                products.push(nf.monomial(&a.mul(b)));
            }
        }
        let labels = basis.iter().map(|m| m.render(&self.variables)).collect();
        let algebra = FiniteLocalAlgebra::from_trusted(field, d, products, labels)
            .map_err(|e| PresentationError::NotLocal(e.to_string()))?;
        Ok(CompiledAlgebra {
            presentation: self.clone(),
            algebra: Arc::new(algebra),
            basis,
            groebner: gb,
        })
    }
}

struct NormalForms<'a> {
    field: FieldConfig,
    gb: &'a [Poly],
    index: &'a HashMap<Monomial, usize>,
    dim: usize,
    memo: HashMap<Monomial, Vec<u64>>,
}

impl NormalForms<'_> {
    /// Coordinates of the normal form of a monomial. Recursion terminates
    /// because every rewrite replaces `m` by strictly smaller monomials.
    fn monomial(&mut self, m: &Monomial) -> Vec<u64> {
        if let Some(&i) = self.index.get(m) {
            let mut v = vec![0; self.dim];
            v[i] = 1;
            return v;
        }
        if let Some(v) = self.memo.get(m) {
            return v.clone();
        }
        let f = self.field;
        let g = self
            .gb
            .iter()
            .find(|g| g.leading().unwrap().0.divides(m))
            .expect("non-standard monomial is divisible by a leading monomial");
        let lead = g.leading().unwrap().0.clone();
        let q = lead.quotient_of(m);
        let mut out = vec![0; self.dim];
        for (t, c) in g.terms() {
            if *t == lead {
                continue;
            }
            let sub = self.monomial(&t.mul(&q));
            let nc = f.neg(c);
            for (o, s) in out.iter_mut().zip(sub) {
                if s != 0 {
                    *o = f.mul_add(*o, nc, s);
                }
            }
        }
        self.memo.insert(m.clone(), out.clone());
        out
    }
}

fn reduce_full(f: &Poly, gb: &[Poly]) -> Poly {
    let mut rem = Poly::zero(f.field, f.nvars);
    let mut p = f.clone();
    while let Some((m, c)) = p.leading().map(|(m, c)| (m.clone(), c)) {
        match gb.iter().find(|g| g.leading().unwrap().0.divides(&m)) {
            Some(g) => {
                let (lm, lc) = g.leading().unwrap();
                let q = lm.quotient_of(&m);
                let factor = f.field.mul(c, f.field.inv(lc));
                p = p.sub(&g.mul_term(&q, factor));
            }
            None => {
                p.terms.remove(&m);
                rem.add_term(m, c);
            }
        }
    }
    rem
}

/// Reduced Gröbner basis in grevlex. Fails if an S-polynomial exceeds the
/// degree bound.
pub fn groebner_basis(gens: Vec<Poly>, degree_bound: usize) -> Result<Vec<Poly>, PresentationError> {
    let mut g: Vec<Poly> = Vec::new();
    for p in gens {
        if p.degree() as usize > degree_bound {
            return Err(PresentationError::DegreeBoundExceeded { bound: degree_bound });
        }
        let r = reduce_full(&p, &g);
        if !r.is_zero() {
            g.push(r.monic());
        }
    }
    // pairs ordered by (degree of lcm, i, j) for a deterministic normal strategy
    let mut pairs: BTreeSet<(u32, usize, usize)> = BTreeSet::new();
    for j in 0..g.len() {
        for i in 0..j {
            let l = g[i].leading().unwrap().0.lcm(g[j].leading().unwrap().0);
            pairs.insert((l.degree(), i, j));
        }
    }
    while let Some((deg, i, j)) = pairs.pop_first() {
        let (li, lj) = (g[i].leading().unwrap().0.clone(), g[j].leading().unwrap().0.clone());
        if li.coprime(&lj) {
            continue;
        }
        if deg as usize > degree_bound {
            return Err(PresentationError::DegreeBoundExceeded { bound: degree_bound });
        }
        let l = li.lcm(&lj);
        let s = g[i].mul_term(&li.quotient_of(&l), 1).sub(&g[j].mul_term(&lj.quotient_of(&l), 1));
        let r = reduce_full(&s, &g);
        if r.is_zero() {
            continue;
        }
        let r = r.monic();
        let k = g.len();
        let lk = r.leading().unwrap().0.clone();
        g.push(r);
        for (i, gi) in g[..k].iter().enumerate() {
            let l = gi.leading().unwrap().0.lcm(&lk);
            pairs.insert((l.degree(), i, k));
        }
    }
    // minimalise
    let mut minimal: Vec<Poly> = Vec::new();
    for (idx, p) in g.iter().enumerate() {
        let lp = p.leading().unwrap().0;
        let redundant = g.iter().enumerate().any(|(o, q)| {
            let lq = q.leading().unwrap().0;
            o != idx && lq.divides(lp) && (lq != lp || o < idx)
        });
        if !redundant {
            minimal.push(p.clone());
        }
    }
    // interreduce tails
    let mut reduced = Vec::with_capacity(minimal.len());
    for i in 0..minimal.len() {
        let others: Vec<Poly> = minimal
            .iter()
            .enumerate()
            .filter(|&(o, _)| o != i)
            .map(|(_, q)| q.clone())
            .collect();
        let (lm, _) = minimal[i].leading().unwrap();
        let lead = Poly::monomial(minimal[i].field, lm.clone(), 1);
        let tail = minimal[i].sub(&lead);
        reduced.push(lead.add(&reduce_full(&tail, &others)));
    }
    reduced.sort_by(|a, b| a.leading().unwrap().0.cmp(b.leading().unwrap().0));
    Ok(reduced)
}

/// A compiled presentation: the algebra plus the monomial basis it was built
/// on.
#[derive(Debug, Clone)]
pub struct CompiledAlgebra {
    presentation: Presentation,
    algebra: Arc<FiniteLocalAlgebra>,
    basis: Vec<Monomial>,
    groebner: Vec<Poly>,
}

impl CompiledAlgebra {
    pub fn algebra(&self) -> &Arc<FiniteLocalAlgebra> {
        &self.algebra
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    pub fn variables(&self) -> &[String] {
        &self.presentation.variables
    }

    /// Standard monomials, ascending in grevlex; index `i` is basis `e_i`.
    pub fn basis_monomials(&self) -> &[Monomial] {
        &self.basis
    }

    pub fn groebner_basis(&self) -> &[Poly] {
        &self.groebner
    }

    pub fn variable(&self, i: usize) -> Element {
        self.evaluate_at(&self.variable_images(), &Poly::var(self.presentation.field, self.presentation.nvars(), i))
    }

    fn variable_images(&self) -> Vec<Element> {
        let n = self.presentation.nvars();
        (0..n)
            .map(|i| {
                let m = Monomial::var(n, i);
                match self.basis.iter().position(|b| *b == m) {
                    Some(k) => self.algebra.basis_element(k),
                    // x_i is not standard: its normal form has lower terms.
                    None => self.normal_form_by_reduction(&Poly::var(self.presentation.field, n, i)),
                }
            })
            .collect()
    }

    fn normal_form_by_reduction(&self, p: &Poly) -> Element {
        let r = reduce_full(p, &self.groebner);
        let mut coords = vec![0; self.algebra.dim()];
        for (m, c) in r.terms() {
            let k = self.basis.iter().position(|b| b == m).expect("remainder is standard");
            coords[k] = c;
        }
        self.algebra.element(coords).unwrap()
    }

    fn evaluate_at(&self, images: &[Element], p: &Poly) -> Element {
        evaluate_poly(&self.algebra, images, p)
    }

    /// Normal form of a polynomial, as an element of the algebra.
    pub fn normal_form(&self, p: &Poly) -> Element {
        self.normal_form_by_reduction(p)
    }

    pub fn parse_element(&self, text: &str) -> Result<Element, PresentationError> {
        let bound = self.presentation.degree_bound.unwrap_or(2 * DEFAULT_DIM_CAP);
        let p = parse_poly(self.presentation.field, &self.presentation.variables, text, bound)?;
        Ok(self.normal_form(&p))
    }

    /// The morphism to `target` sending each variable to the given image,
    /// after checking every relation maps to zero.
    pub fn substitution_morphism(&self, target: Arc<FiniteLocalAlgebra>, images: &[Element]) -> Result<AlgebraMorphism, PresentationError> {
        let n = self.presentation.nvars();
        if images.len() != n {
            return Err(PresentationError::ImageCount {
                expected: n,
                found: images.len(),
            });
        }
        for img in images {
            target.check(img)?;
        }
        for r in &self.presentation.relations {
            if !evaluate_poly(&target, images, r).is_zero() {
                return Err(PresentationError::RelationNotPreserved(r.render(&self.presentation.variables)));
            }
        }
        let basis_images: Vec<Element> = self
            .basis
            .iter()
            .map(|m| evaluate_poly(&target, images, &Poly::monomial(self.presentation.field, m.clone(), 1)))
            .collect();
        Ok(AlgebraMorphism::from_basis_images(Arc::clone(&self.algebra), target, &basis_images)?)
    }
}

/// Evaluates `p` at `x_i = images[i]` inside `alg`.
pub fn evaluate_poly(alg: &FiniteLocalAlgebra, images: &[Element], p: &Poly) -> Element {
    let mut powers: Vec<Vec<Element>> = images.iter().map(|x| vec![alg.one(), x.clone()]).collect();
    let mut acc = alg.zero();
    for (m, c) in p.terms() {
        let mut t = alg.scalar(c);
        for (i, &e) in m.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            while powers[i].len() <= e as usize {
                let next = alg.mul(powers[i].last().unwrap(), &images[i]);
                powers[i].push(next);
            }
            t = alg.mul(&t, &powers[i][e as usize]);
            if t.is_zero() {
                break;
            }
        }
        acc = alg.add(&acc, &t);
    }
    acc
}

/// `F_p[y_1..y_r]/(y)^{t+1}`: all monomials of degree at most `t`, products
/// truncated above degree `t`.
pub fn truncated_poly_algebra(field: FieldConfig, r: usize, t: u32, dim_cap: usize) -> Result<CompiledAlgebra, PresentationError> {
    // dim = C(r + t, r)
    let mut dim: u128 = 1;
    for k in 1..=r as u128 {
        dim = dim * (t as u128 + k) / k;
        if dim > dim_cap as u128 {
            return Err(PresentationError::DimensionCapExceeded { cap: dim_cap });
        }
    }
    let vars: Vec<String> = (1..=r).map(|i| format!("y{i}")).collect();
    let mut monos = vec![Monomial::one(r)];
    let mut frontier = vec![Monomial::one(r)];
    for _ in 0..t {
        let mut next = BTreeSet::new();
        for m in &frontier {
            for i in 0..r {
                next.insert(m.mul(&Monomial::var(r, i)));
            }
        }
        frontier = next.into_iter().collect();
        monos.extend(frontier.iter().cloned());
    }
    monos.sort();
    let index: HashMap<Monomial, usize> = monos.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
    let d = monos.len();
    let mut products = Vec::with_capacity(d * d);
    for a in &monos {
        for b in &monos {
            let mut v = vec![0; d];
            if let Some(&k) = index.get(&a.mul(b)) {
                v[k] = 1;
            }
            products.push(v);
        }
    }
    let labels = monos.iter().map(|m| m.render(&vars)).collect();
    let algebra = FiniteLocalAlgebra::from_trusted(field, d, products, labels)?;
    // The degree-(t+1) monomials form a Gröbner basis of the truncation ideal.
    let relations: Vec<Poly> = if r == 0 {
        Vec::new()
    } else {
        let mut top = vec![Monomial::one(r)];
        for _ in 0..=t {
            let mut next = BTreeSet::new();
            for m in &top {
                for i in 0..r {
                    next.insert(m.mul(&Monomial::var(r, i)));
                }
            }
            top = next.into_iter().collect();
        }
        top.into_iter().map(|m| Poly::monomial(field, m, 1)).collect()
    };
    Ok(CompiledAlgebra {
        presentation: Presentation {
            field,
            variables: vars,
            relations: relations.clone(),
            degree_bound: None,
        },
        algebra: Arc::new(algebra),
        basis: monos,
        groebner: relations,
    })
}

impl fmt::Display for Presentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rels: Vec<String> = self.relations.iter().map(|r| r.render(&self.variables)).collect();
        write!(f, "{}[{}]/({})", self.field, self.variables.join(","), rels.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64) -> FieldConfig {
        FieldConfig::new(p).unwrap()
    }

    fn vars(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn grevlex_order() {
        let m = |e: &[u32]| Monomial(e.to_vec());
        assert!(m(&[0, 0]) < m(&[1, 0]));
        assert!(m(&[1, 0]) > m(&[0, 1]));
        // degree 2 in x,y,z: x^2 > xy > y^2 > xz > yz > z^2
        let ordered = [m(&[0, 0, 2]), m(&[0, 1, 1]), m(&[1, 0, 1]), m(&[0, 2, 0]), m(&[1, 1, 0]), m(&[2, 0, 0])];
        for w in ordered.windows(2) {
            assert!(w[0] < w[1], "{:?} < {:?}", w[0], w[1]);
        }
    }

    #[test]
    fn parse_examples() {
        let v = vars(&["x"]);
        let p = parse_poly(f(2), &v, "x^2", 100).unwrap();
        assert_eq!(p, Poly::monomial(f(2), Monomial(vec![2]), 1));
        let s = vars(&["S"]);
        let p = parse_poly(f(2), &s, "(1+S)^2 - 1", 100).unwrap();
        assert_eq!(p, Poly::monomial(f(2), Monomial(vec![2]), 1));
        let v = vars(&["x", "y"]);
        let p = parse_poly(f(3), &v, "x*y + y*x", 100).unwrap();
        assert_eq!(p, Poly::monomial(f(3), Monomial(vec![1, 1]), 2));
        let p = parse_poly(f(5), &v, "-x - -y + 7", 100).unwrap();
        assert_eq!(p.render(&v), "4*x + y + 2");
    }

    #[test]
    fn parse_errors() {
        let v = vars(&["x", "y"]);
        assert_eq!(
            parse_poly(f(2), &v, "2x", 100),
            Err(PresentationError::Syntax {
                line: 1,
                column: 2,
                message: "implicit multiplication is not allowed; use `*`".into()
            })
        );
        assert_eq!(
            parse_poly(f(2), &v, "x + z", 100),
            Err(PresentationError::UnknownVariable {
                name: "z".into(),
                line: 1,
                column: 5
            })
        );
        assert!(matches!(parse_poly(f(2), &v, "(x + y", 100), Err(PresentationError::Syntax { column: 7, .. })));
        assert!(matches!(parse_poly(f(2), &v, "x^y", 100), Err(PresentationError::Syntax { column: 3, .. })));
        assert!(matches!(parse_poly(f(2), &v, "x ^ 1000", 100), Err(PresentationError::DegreeBoundExceeded { bound: 100 })));
        assert!(matches!(Presentation::parse(4, &["x"], "x^2"), Err(PresentationError::Field(_))));
        assert_eq!(parse_poly_list(f(2), &v, "  ", 10).unwrap(), vec![]);
        assert_eq!(parse_poly_list(f(2), &v, "x, y^2", 10).unwrap().len(), 2);
    }

    #[test]
    fn compile_examples() {
        let c = Presentation::parse(2, &["x"], "x^2").unwrap().compile().unwrap();
        assert_eq!(c.algebra().dim(), 2);
        assert_eq!(c.algebra().labels(), &["1", "x"]);

        let c = Presentation::parse(2, &["x", "y"], "x^2, x*y, y^2").unwrap().compile().unwrap();
        assert_eq!(c.algebra().dim(), 3);
        assert_eq!(c.algebra().labels(), &["1", "y", "x"]);

        let c = Presentation::parse(2, &["S"], "(1+S)^4 - 1").unwrap().compile().unwrap();
        let t = Presentation::parse(2, &["S"], "S^4").unwrap().compile().unwrap();
        assert_eq!(c.algebra().dim(), 4);
        assert_eq!(**c.algebra(), **t.algebra());
    }

    #[test]
    fn compile_rejections() {
        let r = Presentation::parse(2, &["x"], "x^2 - 1").unwrap().compile();
        assert!(matches!(r, Err(PresentationError::NotLocal(_))), "{r:?}");
        let r = Presentation::parse(2, &["S"], "(1+S)^3 - 1").unwrap().compile();
        assert!(matches!(r, Err(PresentationError::NotLocal(_))), "{r:?}");
        let r = Presentation::parse(3, &["x", "y"], "x^2").unwrap().compile();
        assert_eq!(r.unwrap_err(), PresentationError::NotZeroDimensional("y".into()));
        let r = Presentation::parse(2, &["x"], "x^300").unwrap().compile_with_cap(100);
        assert!(matches!(r, Err(PresentationError::DegreeBoundExceeded { bound: 200 })), "{r:?}");
        let r = Presentation::parse(2, &["x", "y"], "x^20, y^20").unwrap().compile_with_cap(50);
        assert_eq!(r.unwrap_err(), PresentationError::DimensionCapExceeded { cap: 50 });
    }

    #[test]
    fn nonmonomial_relations() {
        // x^2 - y^2, xy over F_3: Gorenstein of dim 4 with basis 1, y, x, y^2.
        let c = Presentation::parse(3, &["x", "y"], "x^2 - y^2, x*y").unwrap().compile().unwrap();
        let a = c.algebra();
        assert_eq!(a.dim(), 4);
        a.validate().unwrap();
        let x = c.variable(0);
        let y = c.variable(1);
        assert_eq!(a.mul(&x, &x), a.mul(&y, &y));
        assert!(a.mul(&x, &y).is_zero());
        for r in &c.presentation().relations {
            assert!(c.normal_form(r).is_zero());
        }
    }

    #[test]
    fn truncated_examples() {
        let k = truncated_poly_algebra(f(2), 0, 3, 100).unwrap();
        assert_eq!(k.algebra().dim(), 1);
        let a = truncated_poly_algebra(f(2), 1, 3, 100).unwrap();
        let b = Presentation::parse(2, &["y1"], "y1^4").unwrap().compile().unwrap();
        assert_eq!(**a.algebra(), **b.algebra());
        let c = truncated_poly_algebra(f(2), 2, 2, 100).unwrap();
        assert_eq!(c.algebra().dim(), 6);
        assert!(truncated_poly_algebra(f(2), 4, 10, 100).is_err());
    }
}
