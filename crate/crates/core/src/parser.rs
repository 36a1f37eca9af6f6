//! Parser for the textual law language.
//!
//! ```text
//! // Yellow lights
//! d = 2;
//! p = (trafficLightAhead.color == yellow) & stoplineAhead(d);
//! law = G (p -> F[0,3] (speed < 0.5));
//! trace |= law;
//! ```
//!
//! Precedence, loosest first: `->` (right associative), `|`, `&`, `U`
//! (between unary operands), then the prefix operators `~ G F N`.

use std::collections::HashMap;
use std::fmt;

use crate::ast::{fmt_num, BoolExpr, CmpOp, Formula, Interval, Operand, Side, SignalArg, SignalRef};
use crate::trace::{Lookup, SignalRegistry, ValueKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical(String),
    Syntax(String),
    UndefinedName(String),
    DuplicateDefinition(String),
    Type(String),
    MalformedInterval(String),
    UnknownSignal(String),
    NoLaw,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.line, self.col)?;
        match &self.kind {
            ParseErrorKind::Lexical(m) => write!(f, "lexical error: {m}"),
            ParseErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            ParseErrorKind::UndefinedName(n) => write!(f, "undefined name `{n}`"),
            ParseErrorKind::DuplicateDefinition(n) => write!(f, "`{n}` is defined twice"),
            ParseErrorKind::Type(m) => write!(f, "type error: {m}"),
            ParseErrorKind::MalformedInterval(m) => write!(f, "malformed interval: {m}"),
            ParseErrorKind::UnknownSignal(m) => write!(f, "unknown signal: {m}"),
            ParseErrorKind::NoLaw => write!(f, "no formula definition to use as the law"),
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Treat unknown identifiers as free propositions (Boolean when standing
    /// alone, numeric when compared with a number) instead of rejecting them.
    pub permissive: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Definition {
    pub name: String,
    /// Body with every reference to an earlier definition expanded.
    pub body: Formula,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecFile {
    pub constants: Vec<(String, f64)>,
    pub definitions: Vec<Definition>,
    pub law: String,
}

impl SpecFile {
    pub fn get(&self, name: &str) -> Option<&Formula> {
        self.definitions.iter().find(|d| d.name == name).map(|d| &d.body)
    }

    pub fn law_formula(&self) -> &Formula {
        self.get(&self.law).expect("law names a definition")
    }
}

pub fn parse_spec(text: &str) -> Result<SpecFile, ParseError> {
    parse_spec_with(text, ParseOptions::default())
}

pub fn parse_spec_with(text: &str, opts: ParseOptions) -> Result<SpecFile, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, opts, defs: HashMap::new(), consts: HashMap::new() };
    p.spec()
}

/// Parses a bare formula such as `G[0,5] (speed < 80)`.
pub fn parse_formula(text: &str, opts: ParseOptions) -> Result<Formula, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0, opts, defs: HashMap::new(), consts: HashMap::new() };
    let f = p.implication()?;
    if !p.at(&Tok::Eof) {
        return Err(p.err_here(ParseErrorKind::Syntax(format!("unexpected {}", p.peek().describe()))));
    }
    Ok(f)
}

// ---------------------------------------------------------------- lexer

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    And,
    Or,
    Not,
    Arrow,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Semi,
    Assign,
    Models,
    Minus,
    Cmp(CmpOp),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("number {}", fmt_num(*n)),
            Tok::Eof => "end of input".into(),
            Tok::Cmp(op) => format!("`{}`", op.symbol()),
            other => {
                let s = match other {
                    Tok::And => "&",
                    Tok::Or => "|",
                    Tok::Not => "~",
                    Tok::Arrow => "->",
                    Tok::LParen => "(",
                    Tok::RParen => ")",
                    Tok::LBrack => "[",
                    Tok::RBrack => "]",
                    Tok::Comma => ",",
                    Tok::Semi => ";",
                    Tok::Assign => "=",
                    Tok::Models => "|=",
                    _ => "-",
                };
                format!("`{s}`")
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        let (start_line, start_col) = (line, col);
        let mut push = |tok, len: usize, i: &mut usize, col: &mut usize| {
            out.push(Spanned { tok, line: start_line, col: start_col });
            *i += len;
            *col += len;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '/' if next == Some('/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '&' => push(Tok::And, 1, &mut i, &mut col),
            '|' if next == Some('=') => push(Tok::Models, 2, &mut i, &mut col),
            '|' => push(Tok::Or, 1, &mut i, &mut col),
            '~' => push(Tok::Not, 1, &mut i, &mut col),
            '-' if next == Some('>') => push(Tok::Arrow, 2, &mut i, &mut col),
            '-' => push(Tok::Minus, 1, &mut i, &mut col),
            '(' => push(Tok::LParen, 1, &mut i, &mut col),
            ')' => push(Tok::RParen, 1, &mut i, &mut col),
            '[' => push(Tok::LBrack, 1, &mut i, &mut col),
            ']' => push(Tok::RBrack, 1, &mut i, &mut col),
            ',' => push(Tok::Comma, 1, &mut i, &mut col),
            ';' => push(Tok::Semi, 1, &mut i, &mut col),
            '=' if next == Some('=') => push(Tok::Cmp(CmpOp::Eq), 2, &mut i, &mut col),
            '=' => push(Tok::Assign, 1, &mut i, &mut col),
            '!' if next == Some('=') => push(Tok::Cmp(CmpOp::Ne), 2, &mut i, &mut col),
            '>' if next == Some('=') => push(Tok::Cmp(CmpOp::Ge), 2, &mut i, &mut col),
            '>' => push(Tok::Cmp(CmpOp::Gt), 1, &mut i, &mut col),
            '<' if next == Some('=') => push(Tok::Cmp(CmpOp::Le), 2, &mut i, &mut col),
            '<' => push(Tok::Cmp(CmpOp::Lt), 1, &mut i, &mut col),
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                let s: String = chars[i..j].iter().collect();
                let n = s.parse().expect("digits form a valid float");
                push(Tok::Num(n), j - i, &mut i, &mut col);
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                // dotted access is part of the identifier: trafficLightAhead.color
                while j < chars.len()
                    && (chars[j].is_ascii_alphanumeric()
                        || chars[j] == '_'
                        || (chars[j] == '.' && chars.get(j + 1).is_some_and(|c| c.is_ascii_alphabetic())))
                {
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                push(Tok::Ident(s), j - i, &mut i, &mut col);
            }
            other => {
                return Err(ParseError {
                    line,
                    col,
                    kind: ParseErrorKind::Lexical(format!("unexpected character `{other}`")),
                })
            }
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

// ---------------------------------------------------------------- parser

/// Operand before name resolution.
#[derive(Debug, Clone)]
enum Raw {
    Num(f64),
    Name { name: String, arg: Option<RawArg>, line: usize, col: usize },
}

#[derive(Debug, Clone)]
enum RawArg {
    Num(f64),
    Name(String),
}

/// Operand after resolution, with its kind.
enum Typed {
    Num(Operand),
    Enum(Operand, Option<&'static [&'static str]>),
    Bool(SignalRef),
    /// Bare identifier that may be an enum literal.
    Literal(String),
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    opts: ParseOptions,
    defs: HashMap<String, Formula>,
    consts: HashMap<String, f64>,
}

const TEMPORAL: [&str; 4] = ["G", "F", "U", "N"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == t
    }

    fn at_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, kind: ParseErrorKind) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError { line: s.line, col: s.col, kind }
    }

    fn expect(&mut self, t: Tok) -> Result<Spanned, ParseError> {
        if *self.peek() == t {
            Ok(self.bump())
        } else {
            Err(self.err_here(ParseErrorKind::Syntax(format!(
                "expected {}, found {}",
                t.describe(),
                self.peek().describe()
            ))))
        }
    }

    fn ident(&mut self) -> Result<(String, usize, usize), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let sp = self.bump();
                Ok((s, sp.line, sp.col))
            }
            other => Err(self.err_here(ParseErrorKind::Syntax(format!("expected a name, found {}", other.describe())))),
        }
    }

    fn spec(&mut self) -> Result<SpecFile, ParseError> {
        let mut constants = Vec::new();
        let mut definitions: Vec<Definition> = Vec::new();
        let mut law: Option<String> = None;
        while !self.at(&Tok::Eof) {
            // `Trace trace = EXE(scenario0);` binds a trace; the CLI does that itself.
            if self.at_ident("Trace") && matches!(self.peek_at(1), Tok::Ident(_)) {
                while !self.at(&Tok::Semi) && !self.at(&Tok::Eof) {
                    self.bump();
                }
                self.expect(Tok::Semi)?;
                continue;
            }
            let (name, line, col) = self.ident()?;
            if self.at(&Tok::Models) {
                self.bump();
                let (target, tl, tc) = self.ident()?;
                self.expect(Tok::Semi)?;
                if !self.defs.contains_key(&target) {
                    return Err(ParseError { line: tl, col: tc, kind: ParseErrorKind::UndefinedName(target) });
                }
                if law.is_some() {
                    return Err(ParseError {
                        line,
                        col,
                        kind: ParseErrorKind::Syntax("more than one `|=` law binding".into()),
                    });
                }
                law = Some(target);
                continue;
            }
            self.expect(Tok::Assign)?;
            if self.defs.contains_key(&name) || self.consts.contains_key(&name) {
                return Err(ParseError { line, col, kind: ParseErrorKind::DuplicateDefinition(name) });
            }
            if let Some(n) = self.constant_body() {
                self.expect(Tok::Semi)?;
                self.consts.insert(name.clone(), n);
                constants.push((name, n));
                continue;
            }
            let body = self.implication()?;
            self.expect(Tok::Semi)?;
            self.defs.insert(name.clone(), body.clone());
            definitions.push(Definition { name, body });
        }
        let law = match law.or_else(|| definitions.last().map(|d| d.name.clone())) {
            Some(l) => l,
            None => return Err(self.err_here(ParseErrorKind::NoLaw)),
        };
        Ok(SpecFile { constants, definitions, law })
    }

    /// `name = 2;` or `name = -1.5;`
    fn constant_body(&mut self) -> Option<f64> {
        let (neg, k) = if self.at(&Tok::Minus) { (true, 1) } else { (false, 0) };
        if let (Tok::Num(n), Tok::Semi) = (self.peek_at(k).clone(), self.peek_at(k + 1)) {
            self.pos += k + 1;
            return Some(if neg { -n } else { n });
        }
        None
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if self.at(&Tok::Arrow) {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.conjunction()?;
        while self.at(&Tok::Or) {
            self.bump();
            f = Formula::or(f, self.conjunction()?);
        }
        Ok(f)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.until()?;
        while self.at(&Tok::And) {
            self.bump();
            f = Formula::and(f, self.until()?);
        }
        Ok(f)
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.unary()?;
        while self.at_ident("U") {
            self.bump();
            let i = self.interval()?;
            f = Formula::until(i, f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if self.at(&Tok::Not) {
            self.bump();
            return Ok(Formula::not(self.unary()?));
        }
        if let Tok::Ident(op) = self.peek().clone() {
            // An operator letter directly followed by a comparison is a signal.
            let operator = matches!(op.as_str(), "G" | "F" | "N")
                && !matches!(self.peek_at(1), Tok::Cmp(_) | Tok::Semi | Tok::RParen | Tok::Eof);
            if operator {
                self.bump();
                return Ok(match op.as_str() {
                    "G" => {
                        let i = self.interval()?;
                        Formula::always(i, self.unary()?)
                    }
                    "F" => {
                        let i = self.interval()?;
                        Formula::eventually(i, self.unary()?)
                    }
                    _ => Formula::next(self.unary()?),
                });
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        if self.at(&Tok::LParen) {
            self.bump();
            let f = self.implication()?;
            self.expect(Tok::RParen)?;
            return Ok(f);
        }
        self.atom()
    }

    fn interval(&mut self) -> Result<Interval, ParseError> {
        if !self.at(&Tok::LBrack) {
            return Ok(Interval::UNBOUNDED);
        }
        let open = self.bump();
        let lo = self.bound(false)?.ok_or_else(|| ParseError {
            line: open.line,
            col: open.col,
            kind: ParseErrorKind::MalformedInterval("lower bound cannot be infinite".into()),
        })?;
        self.expect(Tok::Comma)?;
        let hi = self.bound(true)?;
        self.expect(Tok::RBrack)?;
        Interval::new(lo, hi).ok_or_else(|| ParseError {
            line: open.line,
            col: open.col,
            kind: ParseErrorKind::MalformedInterval(format!(
                "lower bound {lo} exceeds upper bound {}",
                hi.map_or("inf".into(), |h| h.to_string())
            )),
        })
    }

    /// An interval bound: a non-negative integer, a named constant, or `inf`.
    fn bound(&mut self, allow_inf: bool) -> Result<Option<u32>, ParseError> {
        let here = self.toks[self.pos].clone();
        let bad = |msg: String| ParseError { line: here.line, col: here.col, kind: ParseErrorKind::MalformedInterval(msg) };
        let value = match &here.tok {
            Tok::Num(n) => *n,
            Tok::Ident(s) if s == "inf" => {
                self.bump();
                return if allow_inf { Ok(None) } else { Err(bad("lower bound cannot be infinite".into())) };
            }
            Tok::Ident(s) => match self.consts.get(s) {
                Some(v) => *v,
                None => {
                    return Err(ParseError {
                        line: here.line,
                        col: here.col,
                        kind: ParseErrorKind::UndefinedName(s.clone()),
                    })
                }
            },
            other => return Err(bad(format!("expected a step count, found {}", other.describe()))),
        };
        self.bump();
        if value < 0.0 || value.fract() != 0.0 || value > f64::from(u32::MAX) {
            return Err(bad(format!("bound {} is not a non-negative integer", fmt_num(value))));
        }
        Ok(Some(value as u32))
    }

    fn raw_operand(&mut self) -> Result<Raw, ParseError> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Raw::Num(n))
            }
            Tok::Minus => {
                self.bump();
                match self.peek().clone() {
                    Tok::Num(n) => {
                        self.bump();
                        Ok(Raw::Num(-n))
                    }
                    other => Err(self.err_here(ParseErrorKind::Syntax(format!(
                        "expected a number after `-`, found {}",
                        other.describe()
                    )))),
                }
            }
            Tok::Ident(name) if !TEMPORAL.contains(&name.as_str()) || matches!(self.peek_at(1), Tok::Cmp(_)) => {
                let sp = self.bump();
                let arg = if self.at(&Tok::LParen) && self.is_signal_arg() {
                    self.bump();
                    let a = match self.bump().tok {
                        Tok::Num(n) => RawArg::Num(n),
                        Tok::Ident(s) => RawArg::Name(s),
                        _ => unreachable!("checked by is_signal_arg"),
                    };
                    self.expect(Tok::RParen)?;
                    Some(a)
                } else {
                    None
                };
                Ok(Raw::Name { name, arg, line: sp.line, col: sp.col })
            }
            other => Err(self.err_here(ParseErrorKind::Syntax(format!("unexpected {}", other.describe())))),
        }
    }

    /// `(` NUMBER `)` or `(` IDENT `)` right after a name is a signal parameter.
    fn is_signal_arg(&self) -> bool {
        matches!(self.peek_at(1), Tok::Num(_) | Tok::Ident(_)) && matches!(self.peek_at(2), Tok::RParen)
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.raw_operand()?;
        if let Tok::Cmp(op) = *self.peek() {
            self.bump();
            let rhs = self.raw_operand()?;
            return self.comparison(lhs, op, rhs).map(Formula::Atom);
        }
        match lhs {
            Raw::Num(n) => Err(self.err_here(ParseErrorKind::Type(format!(
                "number {} used as a formula",
                fmt_num(n)
            )))),
            Raw::Name { name, arg, line, col } => {
                if arg.is_none() {
                    if let Some(f) = self.defs.get(&name) {
                        return Ok(f.clone());
                    }
                }
                match self.resolve(&name, arg, line, col, true)? {
                    Typed::Bool(r) => Ok(Formula::Atom(BoolExpr::Var(r))),
                    Typed::Num(_) | Typed::Enum(..) => Err(ParseError {
                        line,
                        col,
                        kind: ParseErrorKind::Type(format!("`{name}` is not Boolean; compare it with a value")),
                    }),
                    Typed::Literal(n) => Err(ParseError { line, col, kind: ParseErrorKind::UndefinedName(n) }),
                }
            }
        }
    }

    fn signal_ref(&self, name: &str, arg: Option<RawArg>, line: usize, col: usize) -> Result<SignalRef, ParseError> {
        let arg = match arg {
            None => None,
            Some(RawArg::Num(n)) => Some(SignalArg::Num(n)),
            Some(RawArg::Name(s)) if s == "l" => Some(SignalArg::Side(Side::L)),
            Some(RawArg::Name(s)) if s == "r" => Some(SignalArg::Side(Side::R)),
            Some(RawArg::Name(s)) => match self.consts.get(&s) {
                Some(v) => Some(SignalArg::Num(*v)),
                None => return Err(ParseError { line, col, kind: ParseErrorKind::UndefinedName(s) }),
            },
        };
        Ok(SignalRef { path: name.to_string(), arg })
    }

    /// Resolves a name used as an operand. `standalone` means it is not part
    /// of a comparison, which decides the kind of a permissive free name.
    fn resolve(
        &self,
        name: &str,
        arg: Option<RawArg>,
        line: usize,
        col: usize,
        standalone: bool,
    ) -> Result<Typed, ParseError> {
        if arg.is_none() {
            if let Some(v) = self.consts.get(name) {
                return Ok(Typed::Num(Operand::Num(*v)));
            }
            if self.defs.contains_key(name) {
                return Err(ParseError {
                    line,
                    col,
                    kind: ParseErrorKind::Type(format!("formula `{name}` used as a value")),
                });
            }
        }
        let r = self.signal_ref(name, arg, line, col)?;
        let reg = SignalRegistry::global();
        match reg.lookup(&r) {
            Lookup::Found(spec) => Ok(match spec.kind {
                ValueKind::Number => Typed::Num(Operand::Signal(r)),
                ValueKind::Bool => Typed::Bool(r),
                ValueKind::Enum(dom) => Typed::Enum(Operand::Signal(r), Some(dom)),
            }),
            Lookup::BadArg(spec) => Err(ParseError {
                line,
                col,
                kind: ParseErrorKind::UnknownSignal(match spec.arg {
                    crate::trace::ArgKind::Distance => format!("`{name}` needs a distance, as in {name}(2)"),
                    crate::trace::ArgKind::Side => format!("`{name}` takes `l` or `r`"),
                    crate::trace::ArgKind::None => format!("`{name}` takes no parameter"),
                }),
            }),
            Lookup::Unknown if r.arg.is_none() && !name.contains('.') && !standalone => Ok(Typed::Literal(name.into())),
            Lookup::Unknown if self.opts.permissive => Ok(if standalone {
                Typed::Bool(r)
            } else {
                Typed::Num(Operand::Signal(r))
            }),
            Lookup::Unknown if standalone && r.arg.is_none() && !name.contains('.') => {
                Err(ParseError { line, col, kind: ParseErrorKind::UndefinedName(name.into()) })
            }
            Lookup::Unknown => Err(ParseError { line, col, kind: ParseErrorKind::UnknownSignal(format!("`{}`", r.key())) }),
        }
    }

    fn comparison(&self, lhs: Raw, op: CmpOp, rhs: Raw) -> Result<BoolExpr, ParseError> {
        let pos = |r: &Raw| match r {
            Raw::Name { line, col, .. } => (*line, *col),
            Raw::Num(_) => {
                let s = &self.toks[self.pos.saturating_sub(1)];
                (s.line, s.col)
            }
        };
        let (line, col) = pos(&lhs);
        let type_err = |msg: String| ParseError { line, col, kind: ParseErrorKind::Type(msg) };
        let typed = |r: Raw| -> Result<Typed, ParseError> {
            match r {
                Raw::Num(n) => Ok(Typed::Num(Operand::Num(n))),
                Raw::Name { name, arg, line, col } => self.resolve(&name, arg, line, col, false),
            }
        };
        let (l, r) = (typed(lhs)?, typed(rhs)?);
        let enum_op = |dom: &[&str]| {
            if matches!(op, CmpOp::Eq | CmpOp::Ne) {
                Ok(())
            } else {
                Err(type_err(format!(
                    "enum values ({}) only support == and !=, not {}",
                    dom.join(", "),
                    op.symbol()
                )))
            }
        };
        let literal = |lit: &str, dom: Option<&'static [&'static str]>| match dom {
            Some(d) if !d.contains(&lit) => Err(type_err(format!("`{lit}` is not one of {}", d.join(", ")))),
            _ => Ok(Operand::Enum(lit.to_string())),
        };
        match (l, r) {
            (Typed::Num(a), Typed::Num(b)) => Ok(BoolExpr::cmp(a, op, b)),
            (Typed::Enum(a, dom), Typed::Literal(lit)) => {
                enum_op(dom.unwrap_or(&[]))?;
                Ok(BoolExpr::cmp(a, op, literal(&lit, dom)?))
            }
            (Typed::Literal(lit), Typed::Enum(b, dom)) => {
                enum_op(dom.unwrap_or(&[]))?;
                Ok(BoolExpr::cmp(literal(&lit, dom)?, op, b))
            }
            (Typed::Enum(a, da), Typed::Enum(b, db)) => {
                if da != db {
                    return Err(type_err("comparing enums of different kinds".into()));
                }
                enum_op(da.unwrap_or(&[]))?;
                Ok(BoolExpr::cmp(a, op, b))
            }
            (Typed::Literal(lit), Typed::Literal(_)) => {
                Err(ParseError { line, col, kind: ParseErrorKind::UnknownSignal(format!("`{lit}`")) })
            }
            // a free name compared with a number is a numeric proposition
            (Typed::Num(a), Typed::Literal(lit)) if self.opts.permissive => {
                Ok(BoolExpr::cmp(a, op, Operand::Signal(SignalRef::plain(lit))))
            }
            (Typed::Literal(lit), Typed::Num(b)) if self.opts.permissive => {
                Ok(BoolExpr::cmp(Operand::Signal(SignalRef::plain(lit)), op, b))
            }
            (Typed::Num(_), Typed::Literal(lit)) | (Typed::Literal(lit), Typed::Num(_)) => {
                Err(ParseError { line, col, kind: ParseErrorKind::UnknownSignal(format!("`{lit}`")) })
            }
            (Typed::Num(_), Typed::Enum(..)) | (Typed::Enum(..), Typed::Num(_)) => {
                Err(type_err("enum compared with a number".into()))
            }
            (Typed::Bool(s), _) | (_, Typed::Bool(s)) => {
                Err(type_err(format!("Boolean signal `{}` cannot be compared; use it directly", s.key())))
            }
        }
    }
}

// ---------------------------------------------------------------- renderer

fn render_atom(e: &BoolExpr) -> String {
    match e {
        BoolExpr::Var(s) => s.key(),
        BoolExpr::Cmp { lhs, op, rhs } => format!("({lhs} {} {rhs})", op.symbol()),
    }
}

fn op_interval(name: &str, i: &Interval) -> String {
    if i.is_unbounded_default() {
        name.to_string()
    } else {
        format!("{name}{i}")
    }
}

/// Fully parenthesized text that parses back to the same tree.
pub fn render_formula(f: &Formula) -> String {
    match f {
        Formula::Atom(e) => render_atom(e),
        Formula::Not(a) => format!("~({})", render_formula(a)),
        Formula::And(a, b) => format!("({}) & ({})", render_formula(a), render_formula(b)),
        Formula::Or(a, b) => format!("({}) | ({})", render_formula(a), render_formula(b)),
        Formula::Implies(a, b) => format!("({}) -> ({})", render_formula(a), render_formula(b)),
        Formula::Until(i, a, b) => {
            format!("({}) {} ({})", render_formula(a), op_interval("U", i), render_formula(b))
        }
        Formula::Always(i, a) => format!("{} ({})", op_interval("G", i), render_formula(a)),
        Formula::Eventually(i, a) => format!("{} ({})", op_interval("F", i), render_formula(a)),
        Formula::Next(a) => format!("N ({})", render_formula(a)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::structural_equal;

    fn law(text: &str) -> Formula {
        parse_spec(text).unwrap().law_formula().clone()
    }

    #[test]
    fn single_operator_sentence() {
        assert_eq!(
            law("law = G[0,5] (speed < 80);"),
            Formula::always(Interval::bounded(0, 5), Formula::atom(BoolExpr::num_cmp("speed", CmpOp::Lt, 80.0)))
        );
    }

    #[test]
    fn until_inside_eventually() {
        let f = law("p2 = F[0,2]((speed<0.5)U(~PriorityNPCAhead));");
        let expected = Formula::eventually(
            Interval::bounded(0, 2),
            Formula::until(
                Interval::UNBOUNDED,
                Formula::atom(BoolExpr::num_cmp("speed", CmpOp::Lt, 0.5)),
                Formula::not(Formula::var("PriorityNPCAhead")),
            ),
        );
        assert_eq!(f, expected);
    }

    #[test]
    fn precedence() {
        let opts = ParseOptions { permissive: true };
        let f = parse_formula("a | b & c -> d -> e", opts).unwrap();
        let v = Formula::var;
        let expected = Formula::implies(
            Formula::or(v("a"), Formula::and(v("b"), v("c"))),
            Formula::implies(v("d"), v("e")),
        );
        assert_eq!(f, expected);
        let g = parse_formula("~a U b & G c", opts).unwrap();
        assert_eq!(
            g,
            Formula::and(
                Formula::until(Interval::UNBOUNDED, Formula::not(Formula::var("a")), Formula::var("b")),
                Formula::always(Interval::UNBOUNDED, Formula::var("c"))
            )
        );
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_spec("x = G (speed < 80);\ny = speed $ 3;").unwrap_err();
        assert_eq!((e.line, e.col), (2, 11));
        assert!(matches!(e.kind, ParseErrorKind::Lexical(_)));

        let e = parse_spec("x = G (spede < 80);").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::UnknownSignal(_)), "{e}");

        let e = parse_spec("x = foo;").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UndefinedName("foo".into()));

        let e = parse_spec("x = hornOn;\nx = hornOn;").unwrap_err();
        assert_eq!((e.line, e.kind.clone()), (2, ParseErrorKind::DuplicateDefinition("x".into())));

        let e = parse_spec("x = trafficLightAhead.color == 3;").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Type(_)), "{e}");

        let e = parse_spec("x = trafficLightAhead.color > green;").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Type(_)), "{e}");

        let e = parse_spec("x = trafficLightAhead.color == purple;").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Type(_)), "{e}");

        let e = parse_spec("x = F[3,1] (speed > 1);").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::MalformedInterval(_)), "{e}");

        let e = parse_spec("x = stoplineAhead;").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::UnknownSignal(_)), "{e}");
    }

    #[test]
    fn constants_and_bindings() {
        let spec = parse_spec(
            "Trace trace = EXE(scenario0);\nd = 2; k = 3;\na = stoplineAhead(d);\nb = F[0,k] (speed > -1);\nmain = G (a -> b);\nc = hornOn;\ntrace |= main;",
        )
        .unwrap();
        assert_eq!(spec.law, "main");
        assert_eq!(spec.constants, vec![("d".into(), 2.0), ("k".into(), 3.0)]);
        let expected = law("main = G (stoplineAhead(2) -> F[0,3] (speed > -1));");
        assert_eq!(spec.law_formula(), &expected);
    }

    #[test]
    fn render_round_trip() {
        let text = "law = G ((trafficLightAhead.color == yellow) & stoplineAhead(3.5) & ~stoplineAhead(0) & currentLane.number > 0 -> F[0,3] (speed < 0.5)) & N (hornOn U[1,inf] PriorityNPCAhead(r));";
        let f = law(text);
        let back = law(&format!("law = {};", render_formula(&f)));
        assert!(structural_equal(&f, &back));
        assert_eq!(f, back);
    }

    #[test]
    fn render_scheme() {
        let f = Formula::eventually(Interval::UNBOUNDED, Formula::and(Formula::var("a"), Formula::not(Formula::var("c"))));
        assert_eq!(render_formula(&f), "F ((a) & (~(c)))");
        assert_eq!(render_formula(&Formula::atom(BoolExpr::num_cmp("speed", CmpOp::Gt, 80.0))), "(speed > 80)");
    }
}
