//! Session-file language and the `gsym` command-line front end.
//!
//! A session declares a chart and names expressions over it:
//!
//! ```text
//! manifold n=2 trunc=5;
//! gen x : (0,0);
//! gen p : (0,0);
//! form w = d(x)*d(p);
//! let h = x^2 + 1/2*p^2;
//! system osc = hamiltonian(w, h);
//! ```
//!
//! Expressions are differential forms; functions are forms of degree zero.
//! `d:x` denotes the differential of `x` and is how forms render.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::{AlgebraContext, Ctx, Element, Q};
use crate::calculus::{de_rham, interior, lie_derivative, FCtx, Form, FormContext, VectorField};
use crate::darboux::{darboux_normalize_with, verify_normal_form, DEFAULT_MAX_PASSES};
use crate::degree::{Degree, MAX_RANK};
use crate::dynamics::{
    build_gauge_system, build_hamiltonian_system, hamilton_equations, linear_flow, standard_cohomology,
    write_trajectory_csv,
};
use crate::error::Error;
use crate::random::random_homogeneous_in;
use crate::symplectic::{build_structure, SymplecticStructure};

pub const SCHEMA: &str = "gsym-report/1";
pub const DEFAULT_TRUNC: u32 = 6;
pub const TRUNC_ENV: &str = "GS_TRUNC_DEFAULT";
pub const MAX_TRUNC: u32 = 64;
const MAX_EXPONENT: u32 = 64;
const MAX_DEPTH: usize = 64;
const MAX_DIGITS: usize = 80;
const RESERVED: &[&str] = &[
    "manifold", "gen", "let", "form", "system", "d", "i", "L", "bracket", "hamiltonian", "gauge", "n", "trunc",
];

pub const BUILTIN_SESSIONS: &[(&str, &str)] = &[
    ("r2211", include_str!("../sessions/r2211.gs")),
    ("r1111", include_str!("../sessions/r1111.gs")),
    ("para_oscillator", include_str!("../sessions/para_oscillator.gs")),
    ("bialgebroid", include_str!("../sessions/bialgebroid.gs")),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

/// Parse or evaluation failure at a source position.
#[derive(Clone, Debug, PartialEq)]
pub struct SessionError {
    pub pos: Pos,
    pub message: String,
    /// Library error raised while evaluating, if any.
    pub cause: Option<Error>,
}

impl fmt::Display for SessionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.pos.line, self.pos.col, self.message)
    }
}

impl std::error::Error for SessionError {}

fn fail<T>(pos: Pos, message: impl Into<String>) -> Result<T, SessionError> {
    Err(SessionError {
        pos,
        message: message.into(),
        cause: None,
    })
}

fn lib_err(pos: Pos, e: Error) -> SessionError {
    SessionError {
        pos,
        message: e.to_string(),
        cause: Some(e),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Diff(String),
    Num(Q),
    Sym(char),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    pos: Pos,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn lex(text: &str) -> Result<Vec<Token>, SessionError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let advance = |i: &mut usize, col: &mut usize, k: usize| {
        *i += k;
        *col += k;
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
        } else if c.is_whitespace() {
            advance(&mut i, &mut col, 1);
        } else if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut col, 1);
            }
        } else if is_ident_start(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                advance(&mut i, &mut col, 1);
            }
            let word: String = chars[start..i].iter().collect();
            if word == "d" && chars.get(i) == Some(&':') && chars.get(i + 1).is_some_and(|&c| is_ident_start(c)) {
                advance(&mut i, &mut col, 1);
                let s = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    advance(&mut i, &mut col, 1);
                }
                out.push(Token { tok: Tok::Diff(chars[s..i].iter().collect()), pos });
            } else {
                out.push(Token { tok: Tok::Ident(word), pos });
            }
        } else if c.is_ascii_digit() {
            let digits = |i: &mut usize, col: &mut usize| {
                let s = *i;
                while *i < chars.len() && chars[*i].is_ascii_digit() {
                    *i += 1;
                    *col += 1;
                }
                chars[s..*i].iter().collect::<String>()
            };
            let whole = digits(&mut i, &mut col);
            let mut num: BigInt = whole.parse().expect("digits");
            let mut den = BigInt::from(1);
            let mut len = whole.len();
            if chars.get(i) == Some(&'.') && chars.get(i + 1).is_some_and(char::is_ascii_digit) {
                advance(&mut i, &mut col, 1);
                let frac = digits(&mut i, &mut col);
                len += frac.len();
                let scale = num_traits::pow(BigInt::from(10), frac.len());
                num = num * &scale + frac.parse::<BigInt>().expect("digits");
                den = scale;
            }
            if chars.get(i) == Some(&'/') && chars.get(i + 1).is_some_and(char::is_ascii_digit) {
                advance(&mut i, &mut col, 1);
                let d = digits(&mut i, &mut col);
                len += d.len();
                let d: BigInt = d.parse().expect("digits");
                if d == BigInt::from(0) {
                    return fail(pos, "zero denominator");
                }
                den *= d;
            }
            if len > MAX_DIGITS {
                return fail(pos, "numeric literal is too long");
            }
            out.push(Token { tok: Tok::Num(Q::new(num, den)), pos });
        } else if "+-*^(),;=:".contains(c) {
            out.push(Token { tok: Tok::Sym(c), pos });
            advance(&mut i, &mut col, 1);
        } else {
            return fail(pos, format!("unexpected character {c:?}"));
        }
    }
    out.push(Token { tok: Tok::Eof, pos: Pos { line, col } });
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BindingKind {
    Let,
    Form,
}

#[derive(Clone, Debug)]
pub struct Binding {
    pub name: String,
    pub kind: BindingKind,
    pub value: Form,
    pub pos: Pos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Hamiltonian,
    Gauge,
}

#[derive(Clone, Debug)]
pub struct SystemDecl {
    pub name: String,
    pub kind: SystemKind,
    pub form: String,
    pub function: Element,
    pub pos: Pos,
}

/// Parsed session: chart header, generators, named values and systems.
#[derive(Clone, Debug, Default)]
pub struct SessionFile {
    pub rank: Option<usize>,
    pub trunc: Option<u32>,
    pub generators: Vec<(String, Degree)>,
    pub bindings: Vec<Binding>,
    pub systems: Vec<SystemDecl>,
    pub warnings: Vec<String>,
    fctx: Option<FCtx>,
}

impl SessionFile {
    pub fn fctx(&self) -> Option<&FCtx> {
        self.fctx.as_ref()
    }

    pub fn ctx(&self) -> Option<&Ctx> {
        self.fctx.as_ref().map(|f| f.base())
    }

    pub fn binding(&self, name: &str) -> Option<&Binding> {
        self.bindings.iter().find(|b| b.name == name)
    }

    pub fn forms(&self) -> impl Iterator<Item = &Binding> {
        self.bindings.iter().filter(|b| b.kind == BindingKind::Form)
    }

    pub fn system(&self, name: &str) -> Option<&SystemDecl> {
        self.systems.iter().find(|s| s.name == name)
    }

    /// Evaluates an expression against the session's generators and bindings.
    pub fn eval(&self, text: &str) -> Result<Form, SessionError> {
        let Some(fctx) = &self.fctx else {
            return fail(Pos { line: 1, col: 1 }, "session declares no chart");
        };
        let mut p = SessionParser::new(lex(text)?, self.clone());
        p.session.fctx = Some(fctx.clone());
        let v = p.expr()?;
        p.expect_eof()?;
        Ok(v)
    }

    /// Canonical session text; parsing it back reproduces the same session.
    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(n) = self.rank {
            out.push_str(&format!("manifold n={n} trunc={};\n", self.trunc.unwrap_or(DEFAULT_TRUNC)));
        }
        for (name, d) in &self.generators {
            out.push_str(&format!("gen {name} : {d};\n"));
        }
        for b in &self.bindings {
            let kw = match b.kind {
                BindingKind::Let => "let",
                BindingKind::Form => "form",
            };
            out.push_str(&format!("{kw} {} = {};\n", b.name, b.value));
        }
        for s in &self.systems {
            let kw = match s.kind {
                SystemKind::Hamiltonian => "hamiltonian",
                SystemKind::Gauge => "gauge",
            };
            out.push_str(&format!("system {} = {kw}({}, {});\n", s.name, s.form, s.function));
        }
        out
    }
}

pub fn parse_session(text: &str) -> Result<SessionFile, SessionError> {
    let mut p = SessionParser::new(lex(text)?, SessionFile::default());
    p.session_file()?;
    Ok(p.session)
}

/// Parses an expression over the generators of `fctx` alone.
pub fn parse_expression(fctx: &FCtx, text: &str) -> Result<Form, SessionError> {
    let session = SessionFile {
        fctx: Some(fctx.clone()),
        ..SessionFile::default()
    };
    session.eval(text)
}

fn truncation_default(pos: Pos) -> Result<u32, SessionError> {
    match std::env::var(TRUNC_ENV) {
        Err(_) => Ok(DEFAULT_TRUNC),
        Ok(v) => match v.trim().parse::<u32>() {
            Ok(t) if (1..=MAX_TRUNC).contains(&t) => Ok(t),
            _ => fail(pos, format!("{TRUNC_ENV}={v:?} is not a truncation order in 1..={MAX_TRUNC}")),
        },
    }
}

struct SessionParser {
    toks: Vec<Token>,
    at: usize,
    depth: usize,
    session: SessionFile,
    structures: HashMap<String, SymplecticStructure>,
}

impl SessionParser {
    fn new(toks: Vec<Token>, session: SessionFile) -> SessionParser {
        SessionParser {
            toks,
            at: 0,
            depth: 0,
            session,
            structures: HashMap::new(),
        }
    }

    fn peek(&self) -> &Token {
        &self.toks[self.at]
    }


    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("identifier {s:?}"),
            Tok::Diff(s) => format!("differential d:{s}"),
            Tok::Num(q) => format!("number {q}"),
            Tok::Sym(c) => format!("{c:?}"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<Pos, SessionError> {
        let t = self.bump();
        if t.tok == Tok::Sym(c) {
            Ok(t.pos)
        } else {
            fail(t.pos, format!("expected {c:?}, found {}", Self::describe(&t.tok)))
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Pos), SessionError> {
        let t = self.bump();
        match t.tok {
            Tok::Ident(s) => Ok((s, t.pos)),
            other => fail(t.pos, format!("expected a name, found {}", Self::describe(&other))),
        }
    }

    fn expect_int(&mut self) -> Result<(u32, Pos), SessionError> {
        let t = self.bump();
        match &t.tok {
            Tok::Num(q) if q.is_integer() => match u32::try_from(q.to_integer()) {
                Ok(v) => Ok((v, t.pos)),
                Err(_) => fail(t.pos, format!("integer {q} is out of range")),
            },
            other => fail(t.pos, format!("expected an integer, found {}", Self::describe(other))),
        }
    }

    fn expect_eof(&mut self) -> Result<(), SessionError> {
        let t = self.peek().clone();
        if t.tok == Tok::Eof {
            Ok(())
        } else {
            fail(t.pos, format!("unexpected {}", Self::describe(&t.tok)))
        }
    }

    fn keyword(&mut self, word: &str) -> Result<Pos, SessionError> {
        let (w, pos) = self.expect_ident()?;
        if w == word {
            Ok(pos)
        } else {
            fail(pos, format!("expected {word:?}, found {w:?}"))
        }
    }

    fn session_file(&mut self) -> Result<(), SessionError> {
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::Eof => break,
                Tok::Ident(w) => match w.as_str() {
                    "manifold" => self.header()?,
                    "gen" => self.generator()?,
                    "let" => self.binding(BindingKind::Let)?,
                    "form" => self.binding(BindingKind::Form)?,
                    "system" => self.system()?,
                    _ => return fail(t.pos, format!("expected a statement, found {w:?}")),
                },
                other => return fail(t.pos, format!("expected a statement, found {}", Self::describe(other))),
            }
        }
        if self.session.rank.is_some() && self.session.fctx.is_none() {
            let pos = self.peek().pos;
            self.freeze(pos)?;
        }
        Ok(())
    }

    fn header(&mut self) -> Result<(), SessionError> {
        let pos = self.keyword("manifold")?;
        if self.session.rank.is_some() {
            return fail(pos, "duplicate manifold header");
        }
        let (mut n, mut trunc) = (None, None);
        while self.peek().tok != Tok::Sym(';') {
            let (key, kpos) = self.expect_ident()?;
            self.expect_sym('=')?;
            let (v, vpos) = self.expect_int()?;
            match key.as_str() {
                "n" if n.is_none() => {
                    if !(1..=MAX_RANK as u32).contains(&v) {
                        return fail(vpos, format!("grading rank {v} outside 1..={MAX_RANK}"));
                    }
                    n = Some(v as usize);
                }
                "trunc" if trunc.is_none() => {
                    if !(1..=MAX_TRUNC).contains(&v) {
                        return fail(vpos, format!("truncation {v} outside 1..={MAX_TRUNC}"));
                    }
                    trunc = Some(v);
                }
                _ => return fail(kpos, format!("unexpected header field {key:?}")),
            }
        }
        self.expect_sym(';')?;
        let Some(n) = n else {
            return fail(pos, "manifold header needs n=<rank>");
        };
        self.session.rank = Some(n);
        self.session.trunc = Some(match trunc {
            Some(t) => t,
            None => truncation_default(pos)?,
        });
        Ok(())
    }

    fn check_fresh(&self, name: &str, pos: Pos) -> Result<(), SessionError> {
        if RESERVED.contains(&name) {
            return fail(pos, format!("{name:?} is reserved"));
        }
        if self.session.generators.iter().any(|(g, _)| g == name)
            || self.session.binding(name).is_some()
            || self.session.system(name).is_some()
        {
            return fail(pos, format!("{name:?} is already defined"));
        }
        Ok(())
    }

    fn generator(&mut self) -> Result<(), SessionError> {
        let pos = self.keyword("gen")?;
        let Some(n) = self.session.rank else {
            return fail(pos, "generator declared before the manifold header");
        };
        if self.session.fctx.is_some() {
            return fail(pos, "generators must be declared before any definition");
        }
        let mut names = vec![self.expect_ident()?];
        while self.peek().tok == Tok::Sym(',') {
            self.bump();
            names.push(self.expect_ident()?);
        }
        self.expect_sym(':')?;
        let open = self.expect_sym('(')?;
        let mut bits = Vec::new();
        loop {
            let (b, bpos) = self.expect_int()?;
            if b > 1 {
                return fail(bpos, format!("degree entry {b} is not a bit"));
            }
            bits.push(b as u8);
            if self.peek().tok == Tok::Sym(')') {
                break;
            }
            self.expect_sym(',')?;
            if bits.len() > MAX_RANK {
                return fail(open, "degree tuple is too long");
            }
        }
        self.expect_sym(')')?;
        self.expect_sym(';')?;
        if bits.len() != n {
            return Err(lib_err(
                open,
                Error::Dimension(format!("degree has {} entries, the manifold has n={n}", bits.len())),
            ));
        }
        let degree = Degree::from_bits(&bits).map_err(|e| lib_err(open, e))?;
        for (name, npos) in names {
            if name.contains("__") || name.starts_with('_') {
                return fail(npos, format!("{name:?} is not a valid generator name"));
            }
            self.check_fresh(&name, npos)?;
            self.session.generators.push((name, degree));
        }
        Ok(())
    }

    fn freeze(&mut self, pos: Pos) -> Result<FCtx, SessionError> {
        if let Some(f) = &self.session.fctx {
            return Ok(f.clone());
        }
        let Some(n) = self.session.rank else {
            return fail(pos, "definition before the manifold header");
        };
        let gens: Vec<(&str, Degree)> = self.session.generators.iter().map(|(s, d)| (s.as_str(), *d)).collect();
        let trunc = self.session.trunc.unwrap_or(DEFAULT_TRUNC);
        let ctx = AlgebraContext::new(n, &gens, trunc).map_err(|e| lib_err(pos, e))?;
        let fctx = FormContext::new(&ctx).map_err(|e| lib_err(pos, e))?;
        self.session.fctx = Some(fctx.clone());
        Ok(fctx)
    }

    fn binding(&mut self, kind: BindingKind) -> Result<(), SessionError> {
        let pos = self.bump().pos;
        self.freeze(pos)?;
        let (name, npos) = self.expect_ident()?;
        self.check_fresh(&name, npos)?;
        self.expect_sym('=')?;
        let value = self.expr()?;
        self.expect_sym(';')?;
        if value.value().truncated() {
            self.session.warnings.push(format!(
                "{}:{}: {name} dropped terms of order >= {}",
                npos.line,
                npos.col,
                self.session.trunc.unwrap_or(DEFAULT_TRUNC)
            ));
        }
        self.session.bindings.push(Binding { name, kind, value, pos: npos });
        Ok(())
    }

    fn system(&mut self) -> Result<(), SessionError> {
        let pos = self.keyword("system")?;
        self.freeze(pos)?;
        let (name, npos) = self.expect_ident()?;
        self.check_fresh(&name, npos)?;
        self.expect_sym('=')?;
        let (kw, kpos) = self.expect_ident()?;
        let kind = match kw.as_str() {
            "hamiltonian" => SystemKind::Hamiltonian,
            "gauge" => SystemKind::Gauge,
            _ => return fail(kpos, format!("expected hamiltonian or gauge, found {kw:?}")),
        };
        self.expect_sym('(')?;
        let (form, fpos) = self.expect_ident()?;
        match self.session.binding(&form) {
            Some(b) if b.kind == BindingKind::Form => {}
            _ => return fail(fpos, format!("{form:?} is not a declared form")),
        }
        self.expect_sym(',')?;
        let function = self.function_arg()?;
        self.expect_sym(')')?;
        self.expect_sym(';')?;
        self.session.systems.push(SystemDecl { name, kind, form, function, pos: npos });
        Ok(())
    }

    fn fctx(&mut self) -> Result<FCtx, SessionError> {
        let pos = self.peek().pos;
        self.freeze(pos)
    }

    fn function_arg(&mut self) -> Result<Element, SessionError> {
        let pos = self.peek().pos;
        let v = self.expr()?;
        v.as_function()
            .map_err(|_| SessionError { pos, message: format!("{v} is not a function"), cause: None })
    }

    fn expr(&mut self) -> Result<Form, SessionError> {
        let mut acc = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Sym('+') => {
                    self.bump();
                    acc = &acc + &self.term()?;
                }
                Tok::Sym('-') => {
                    self.bump();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Form, SessionError> {
        let mut acc = self.unary()?;
        while self.peek().tok == Tok::Sym('*') {
            self.bump();
            acc = &acc * &self.unary()?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Form, SessionError> {
        if self.peek().tok == Tok::Sym('-') {
            let pos = self.bump().pos;
            self.enter(pos)?;
            let v = -&self.unary()?;
            self.depth -= 1;
            return Ok(v);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Form, SessionError> {
        let mut base = self.atom()?;
        while self.peek().tok == Tok::Sym('^') {
            self.bump();
            let (k, kpos) = self.expect_int()?;
            if k > MAX_EXPONENT {
                return fail(kpos, format!("exponent {k} exceeds {MAX_EXPONENT}"));
            }
            let one = Form::constant(base.fctx(), Q::from_integer(1.into()));
            base = (0..k).fold(one, |acc, _| &acc * &base);
        }
        Ok(base)
    }

    fn enter(&mut self, pos: Pos) -> Result<(), SessionError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return fail(pos, "expression nests too deeply");
        }
        Ok(())
    }

    fn atom(&mut self) -> Result<Form, SessionError> {
        let t = self.bump();
        let fctx = self.fctx()?;
        self.enter(t.pos)?;
        let v = match &t.tok {
            Tok::Num(q) => Form::constant(&fctx, q.clone()),
            Tok::Sym('(') => {
                let v = self.expr()?;
                self.expect_sym(')')?;
                v
            }
            Tok::Diff(name) => match fctx.base().index_of(name) {
                Ok(i) => Form::differential(&fctx, i),
                Err(_) => return fail(t.pos, format!("unknown generator {name:?} in d:{name}")),
            },
            Tok::Ident(name) if self.peek().tok == Tok::Sym('(') && ["d", "i", "L", "bracket"].contains(&name.as_str()) => {
                self.bump();
                let v = self.call(name, &fctx)?;
                self.expect_sym(')')?;
                v
            }
            Tok::Ident(name) => {
                if let Ok(i) = fctx.base().index_of(name) {
                    Form::coordinate(&fctx, i)
                } else if let Some(b) = self.session.binding(name) {
                    b.value.clone()
                } else {
                    return fail(t.pos, format!("unknown identifier {name:?}"));
                }
            }
            other => return fail(t.pos, format!("expected an expression, found {}", Self::describe(other))),
        };
        self.depth -= 1;
        Ok(v)
    }

    fn coordinate_field(&mut self, fctx: &FCtx) -> Result<VectorField, SessionError> {
        let (name, pos) = self.expect_ident()?;
        match fctx.base().index_of(&name) {
            Ok(i) => Ok(VectorField::coordinate(fctx.base(), i)),
            Err(_) => fail(pos, format!("{name:?} is not a generator")),
        }
    }

    fn call(&mut self, name: &str, fctx: &FCtx) -> Result<Form, SessionError> {
        match name {
            "d" => Ok(de_rham(&self.expr()?)),
            "i" | "L" => {
                let x = self.coordinate_field(fctx)?;
                self.expect_sym(',')?;
                let a = self.expr()?;
                Ok(if name == "i" { interior(&x, &a) } else { lie_derivative(&x, &a) })
            }
            _ => {
                let (form, fpos) = self.expect_ident()?;
                let s = match self.structures.get(&form) {
                    Some(s) => s.clone(),
                    None => {
                        let Some(b) = self.session.binding(&form) else {
                            return fail(fpos, format!("unknown form {form:?}"));
                        };
                        let s = build_structure(&b.value).map_err(|e| lib_err(fpos, e))?;
                        self.structures.insert(form.clone(), s.clone());
                        s
                    }
                };
                self.expect_sym(',')?;
                let f = self.function_arg()?;
                self.expect_sym(',')?;
                let g = self.function_arg()?;
                Ok(Form::function(fctx, &s.poisson_bracket(&f, &g)))
            }
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "gsym", version, about = "Graded symplectic geometry on a formal chart")]
pub struct Cli {
    /// Print the report as JSON.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build every form (or one) and report nondegeneracy, closedness and layout.
    Check {
        session: String,
        #[arg(long)]
        form: Option<String>,
    },
    /// Poisson bracket {f, g}.
    Bracket {
        session: String,
        #[arg(allow_hyphen_values = true)]
        f: String,
        #[arg(allow_hyphen_values = true)]
        g: String,
        #[arg(long)]
        form: Option<String>,
    },
    /// Hamiltonian vector field of f.
    Hvf {
        session: String,
        #[arg(allow_hyphen_values = true)]
        f: String,
        #[arg(long)]
        form: Option<String>,
    },
    /// Jacobi residual of a triple, given or drawn from a seed.
    Jacobi {
        session: String,
        #[arg(allow_hyphen_values = true)]
        exprs: Vec<String>,
        #[arg(long)]
        random: Option<u64>,
        #[arg(long)]
        form: Option<String>,
    },
    /// Darboux normal form.
    Darboux {
        session: String,
        #[arg(long)]
        form: Option<String>,
        #[arg(long, default_value_t = DEFAULT_MAX_PASSES)]
        max_passes: usize,
        #[arg(long, value_enum)]
        report: Option<ReportFormat>,
    },
    /// Standard cohomology of a gauge system.
    Cohomology {
        session: String,
        system: String,
        #[arg(long)]
        accept_truncation: bool,
    },
    /// Hamilton's equations of a Hamiltonian system.
    Equations { session: String, system: String },
    /// Linear flow of a Hamiltonian system as CSV.
    Simulate {
        session: String,
        system: String,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Restriction to the degree-zero coordinates.
    Reduce {
        session: String,
        #[arg(long)]
        form: Option<String>,
    },
    /// BV-like Laplacian of f for an odd canonical structure.
    Bv {
        session: String,
        #[arg(allow_hyphen_values = true)]
        f: String,
        #[arg(long)]
        form: Option<String>,
    },
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Session(SessionError),
    Math(Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Session(e) => write!(f, "session error: {e}"),
            CliError::Math(e) => write!(f, "{e}"),
        }
    }
}

fn is_mathematical(e: &Error) -> bool {
    !matches!(
        e,
        Error::Parse(_) | Error::UnknownGenerator(_) | Error::Config(_) | Error::Dimension(_) | Error::ContextMismatch
    )
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Session(e) => match &e.cause {
                Some(c) if is_mathematical(c) => 2,
                _ => 1,
            },
            CliError::Math(e) if is_mathematical(e) => 2,
            CliError::Math(_) => 1,
        }
    }
}

impl From<SessionError> for CliError {
    fn from(e: SessionError) -> Self {
        CliError::Session(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Math(e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Ok,
    Fail,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub verdict: Verdict,
    pub values: Value,
    pub elapsed_ms: f64,
    #[serde(skip)]
    pub text: String,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Ok => 0,
            Verdict::Fail => 2,
            Verdict::Error => 1,
        }
    }
}

pub fn load_session(arg: &str) -> Result<SessionFile, CliError> {
    let text = match arg.strip_prefix("builtin:") {
        Some(name) => BUILTIN_SESSIONS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| t.to_string())
            .ok_or_else(|| CliError::Usage(format!("no builtin session {name:?}")))?,
        None => std::fs::read_to_string(arg).map_err(|e| CliError::Usage(format!("cannot read {arg}: {e}")))?,
    };
    Ok(parse_session(&text)?)
}

fn structure(s: &SessionFile, name: Option<&str>) -> Result<(String, SymplecticStructure), CliError> {
    let b = match name {
        Some(n) => s
            .binding(n)
            .filter(|b| b.kind == BindingKind::Form)
            .ok_or_else(|| CliError::Usage(format!("no form named {n:?}")))?,
        None => {
            let forms: Vec<&Binding> = s.forms().collect();
            match forms[..] {
                [b] => b,
                [] => return Err(CliError::Usage("session declares no forms".into())),
                _ => return Err(CliError::Usage("session declares several forms; choose one with --form".into())),
            }
        }
    };
    Ok((b.name.clone(), build_structure(&b.value)?))
}

fn function(s: &SessionFile, text: &str) -> Result<Element, CliError> {
    let v = s.eval(text)?;
    v.as_function()
        .map_err(|_| CliError::Usage(format!("{text:?} evaluates to {v}, which is not a function")))
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

struct Outcome {
    verdict: Verdict,
    values: Value,
    text: String,
}

fn ok(values: Value, text: String) -> Outcome {
    Outcome { verdict: Verdict::Ok, values, text }
}

fn check(s: &SessionFile, form: Option<&str>) -> Result<Outcome, CliError> {
    let names: Vec<String> = match form {
        Some(n) => vec![structure(s, Some(n))?.0],
        None => s.forms().map(|b| b.name.clone()).collect(),
    };
    if names.is_empty() {
        return Err(CliError::Usage("session declares no forms".into()));
    }
    let mut all_ok = true;
    let mut lines = Vec::new();
    let mut reports = Vec::new();
    for name in names {
        let b = s.binding(&name).expect("listed form");
        match build_structure(&b.value) {
            Ok(st) => {
                let r = st.report();
                let kind = if st.is_closed() { "symplectic" } else { "almost symplectic" };
                all_ok &= st.is_closed();
                lines.push(format!("{name}: {kind}, degree {}, closed: {}", r.degree, yes(st.is_closed())));
                let sig: Vec<String> = r.signature.iter().filter(|(_, q)| *q > 0).map(|(d, q)| format!("{d}^{q}")).collect();
                lines.push(format!("  signature: {}", sig.join(" ")));
                let blocks: Vec<String> = r.blocks.iter().map(|(a, b)| format!("{a}<->{b}")).collect();
                lines.push(format!("  blocks: {}", blocks.join(" ")));
                if !st.is_closed() {
                    let residues = st.check_closed().residues;
                    lines.push(format!("  closure residues: {}", residues.len()));
                }
                reports.push(json!({"name": name, "symplectic": st.is_closed(), "nondegenerate": true, "report": r}));
            }
            Err(e) => {
                all_ok = false;
                lines.push(format!("{name}: not a symplectic structure: {e}"));
                reports.push(json!({"name": name, "symplectic": false, "nondegenerate": false, "error": e.to_string()}));
            }
        }
    }
    Ok(Outcome {
        verdict: if all_ok { Verdict::Ok } else { Verdict::Fail },
        values: json!({ "forms": reports }),
        text: lines.join("\n"),
    })
}

fn random_triple(s: &SessionFile, seed: u64) -> Result<Vec<Element>, CliError> {
    let ctx = s.ctx().ok_or_else(|| CliError::Usage("session declares no chart".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hi = ctx.trunc().min(3);
    Ok((0..3).map(|_| random_homogeneous_in(&mut rng, ctx, None, 3, 1.min(hi), hi)).collect())
}

fn dispatch(cmd: &Command, forced_json: &mut bool) -> Result<Outcome, CliError> {
    match cmd {
        Command::Check { session, form } => check(&load_session(session)?, form.as_deref()),
        Command::Bracket { session, f, g, form } => {
            let s = load_session(session)?;
            let (name, st) = structure(&s, form.as_deref())?;
            let (fe, ge) = (function(&s, f)?, function(&s, g)?);
            let b = st.poisson_bracket(&fe, &ge);
            Ok(ok(
                json!({"form": name, "f": fe.to_string(), "g": ge.to_string(), "bracket": b.to_string()}),
                format!("{{{fe}, {ge}}} = {b}"),
            ))
        }
        Command::Hvf { session, f, form } => {
            let s = load_session(session)?;
            let (name, st) = structure(&s, form.as_deref())?;
            let fe = function(&s, f)?;
            let x = st.hamiltonian_vf(&fe)?;
            let ctx = st.ctx();
            let comps: Vec<(String, String)> = (0..ctx.len())
                .filter(|&i| !x.component(i).is_zero())
                .map(|i| (ctx.name(i).to_string(), x.component(i).to_string()))
                .collect();
            Ok(ok(
                json!({"form": name, "f": fe.to_string(), "degree": x.degree().to_string(), "field": x.render(), "components": comps}),
                format!("X_{{{fe}}} = {}", x.render()),
            ))
        }
        Command::Jacobi { session, exprs, random, form } => {
            let s = load_session(session)?;
            let (name, st) = structure(&s, form.as_deref())?;
            let triple = match (random, exprs.len()) {
                (Some(seed), 0) => random_triple(&s, *seed)?,
                (None, 3) => exprs.iter().map(|e| function(&s, e)).collect::<Result<Vec<_>, _>>()?,
                _ => return Err(CliError::Usage("jacobi takes three expressions or --random <seed>".into())),
            };
            let cut = st.ctx().trunc().saturating_sub(2);
            let residual = st.jacobiator(&triple[0], &triple[1], &triple[2]).truncate_at(cut);
            let text = format!(
                "f = {}\ng = {}\nh = {}\nresidual: {residual} (orders below {cut})",
                triple[0], triple[1], triple[2]
            );
            Ok(Outcome {
                verdict: if residual.is_zero() { Verdict::Ok } else { Verdict::Fail },
                values: json!({
                    "form": name,
                    "closed": st.is_closed(),
                    "triple": triple.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
                    "residual": residual.to_string(),
                    "compared_below": cut,
                }),
                text,
            })
        }
        Command::Darboux { session, form, max_passes, report } => {
            if *report == Some(ReportFormat::Json) {
                *forced_json = true;
            }
            let s = load_session(session)?;
            let (name, st) = structure(&s, form.as_deref())?;
            let r = darboux_normalize_with(&st, *max_passes)?;
            let check = verify_normal_form(&st, &r)?;
            let rep = r.report(&st);
            let mut lines = vec![format!("{name}: degree {}", rep.degree)];
            let pairs: Vec<String> = rep.pairs.iter().map(|(q, p)| format!("({q}, {p})")).collect();
            lines.push(format!("pairs: {}", pairs.join(" ")));
            let diags: Vec<String> = rep
                .diagonals
                .iter()
                .map(|(y, e, w)| format!("{y} (eps = {}{}, weight {w})", if *e < 0 { "-" } else { "+" }, 1))
                .collect();
            lines.push(format!("diagonals: {}", diags.join(" ")));
            lines.push(format!("normal form: {}", rep.normal_form));
            lines.push("substitution:".into());
            lines.extend(rep.substitution.iter().map(|(x, img)| format!("  {x} = {img}")));
            lines.push(format!("residual order: {} after {} passes", rep.residual_order, rep.passes));
            lines.push(format!("verified: {}", yes(check.ok)));
            Ok(Outcome {
                verdict: if check.ok { Verdict::Ok } else { Verdict::Fail },
                values: json!({"form": name, "normal_form": rep, "verified": check.ok, "residual_lowest_order": check.lowest_order}),
                text: lines.join("\n"),
            })
        }
        Command::Cohomology { session, system, accept_truncation } => {
            let s = load_session(session)?;
            let (sys, st) = system_of(&s, system, SystemKind::Gauge)?;
            let g = build_gauge_system(&st, &sys.function)?;
            let c = standard_cohomology(&g, *accept_truncation)?;
            let mut lines = vec![format!("Q degree {}, truncation dependent: {}", c.differential_degree, yes(c.truncation_dependent))];
            lines.extend(c.sectors.iter().map(|x| {
                format!("{}: dim {}, ker {}, im {}, H {}", x.degree, x.dimension, x.kernel, x.image, x.cohomology)
            }));
            Ok(ok(serde_json::to_value(&c).expect("serializable"), lines.join("\n")))
        }
        Command::Equations { session, system } => {
            let s = load_session(session)?;
            let (sys, st) = system_of(&s, system, SystemKind::Hamiltonian)?;
            let h = build_hamiltonian_system(&st, &sys.function)?;
            let ctx = st.ctx();
            let eqs: Vec<(String, String)> = hamilton_equations(&h)
                .iter()
                .enumerate()
                .map(|(i, e)| (ctx.name(i).to_string(), e.to_string()))
                .collect();
            let text = eqs.iter().map(|(x, e)| format!("d({x})/dt = {e}")).collect::<Vec<_>>().join("\n");
            Ok(ok(json!({"system": sys.name, "hamiltonian": sys.function.to_string(), "equations": eqs}), text))
        }
        Command::Simulate { session, system, t_end, dt, out } => {
            let s = load_session(session)?;
            let (sys, st) = system_of(&s, system, SystemKind::Hamiltonian)?;
            let h = build_hamiltonian_system(&st, &sys.function)?;
            let states = linear_flow(&h, *t_end, *dt)?;
            let mut csv = Vec::new();
            write_trajectory_csv(st.ctx(), &states, &mut csv)?;
            let last = states.last().expect("initial state");
            let ctx = st.ctx();
            let mut fin = serde_json::Map::new();
            for i in 0..ctx.len() {
                for j in 0..ctx.len() {
                    fin.insert(format!("{}->{}", ctx.name(i), ctx.name(j)), json!(last.coefficients[j][i]));
                }
            }
            let mut values = json!({"system": sys.name, "t_end": last.t, "dt": dt, "samples": states.len(), "final": fin});
            let text = match out {
                Some(path) => {
                    std::fs::write(path, &csv).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
                    values["out"] = json!(path.display().to_string());
                    format!("wrote {} samples to {}", states.len(), path.display())
                }
                None => String::from_utf8(csv).expect("utf-8 csv").trim_end().to_string(),
            };
            Ok(ok(values, text))
        }
        Command::Reduce { session, form } => {
            let s = load_session(session)?;
            let (name, st) = structure(&s, form.as_deref())?;
            let r = st.reduce()?;
            Ok(Outcome {
                verdict: if r.nondegenerate { Verdict::Ok } else { Verdict::Fail },
                values: json!({"form": name, "reduced": r.form.to_string(), "nondegenerate": r.nondegenerate}),
                text: format!("kappa({name}) = {}, nondegenerate: {}", r.form, yes(r.nondegenerate)),
            })
        }
        Command::Bv { session, f, form } => {
            let s = load_session(session)?;
            let (name, st) = structure(&s, form.as_deref())?;
            let fe = function(&s, f)?;
            let lap = st.bv_laplacian(&fe)?;
            Ok(ok(
                json!({"form": name, "f": fe.to_string(), "laplacian": lap.to_string()}),
                format!("Delta({fe}) = {lap}"),
            ))
        }
    }
}

fn system_of(s: &SessionFile, name: &str, kind: SystemKind) -> Result<(SystemDecl, SymplecticStructure), CliError> {
    let sys = s
        .system(name)
        .ok_or_else(|| CliError::Usage(format!("no system named {name:?}")))?
        .clone();
    if sys.kind != kind {
        return Err(CliError::Usage(format!("system {name:?} is not a {kind:?} system")));
    }
    let (_, st) = structure(s, Some(&sys.form))?;
    Ok((sys, st))
}

/// Runs one parsed invocation; `command` is echoed into the report.
pub fn run(cli: &Cli, command: &str) -> (Report, bool) {
    let start = Instant::now();
    let mut json = cli.json;
    let (verdict, values, text) = match dispatch(&cli.command, &mut json) {
        Ok(o) => (o.verdict, o.values, o.text),
        Err(e) => {
            let code = e.exit_code();
            let verdict = if code == 2 { Verdict::Fail } else { Verdict::Error };
            (verdict, json!({"error": e.to_string()}), e.to_string())
        }
    };
    let report = Report {
        schema: SCHEMA,
        command: command.to_string(),
        verdict,
        values,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        text,
    };
    (report, json)
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let target: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(target, "{e}");
            return code;
        }
    };
    let command = args.iter().skip(1).cloned().collect::<Vec<_>>().join(" ");
    let (report, json) = run(&cli, &command);
    let code = report.exit_code();
    if json {
        let _ = writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("serializable"));
    } else if report.verdict == Verdict::Error {
        let _ = writeln!(err, "{}", report.text);
    } else {
        let _ = writeln!(out, "{}", report.text);
        let _ = writeln!(out, "verdict: {}", if report.verdict == Verdict::Ok { "ok" } else { "fail" });
    }
    code
}
