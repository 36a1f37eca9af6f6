//! Formula syntax tree for driver-oriented traffic-law specifications.
//!
//! A [`Formula`] is built from Boolean atoms ([`BoolExpr`]) with the usual
//! propositional connectives and the bounded temporal operators `G`, `F`,
//! `U` and `N`. Intervals count trace steps.
//!
//! Downstream engines (robustness, violation enumeration) work on the *core
//! form*: no `Implies` node and no double negation. [`normalize`] produces it.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Step interval `[lo, hi]` attached to a temporal operator. `hi == None`
/// stands for `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    lo: u32,
    hi: Option<u32>,
}

impl Interval {
    /// `[0, +inf)`, the interval of an operator written without brackets.
    pub const UNBOUNDED: Interval = Interval { lo: 0, hi: None };

    /// Returns `None` when `lo > hi`.
    pub fn new(lo: u32, hi: Option<u32>) -> Option<Self> {
        match hi {
            Some(h) if lo > h => None,
            _ => Some(Interval { lo, hi }),
        }
    }

    pub fn bounded(lo: u32, hi: u32) -> Self {
        Self::new(lo, Some(hi)).expect("interval lower bound exceeds upper bound")
    }

    pub fn lo(&self) -> u32 {
        self.lo
    }

    pub fn hi(&self) -> Option<u32> {
        self.hi
    }

    pub fn is_unbounded_default(&self) -> bool {
        *self == Self::UNBOUNDED
    }

    /// Absolute step range `t + I` clipped to `[0, last]`, or `None` when the
    /// window falls entirely past the end of the trace.
    pub fn window(&self, t: usize, last: usize) -> Option<(usize, usize)> {
        let start = t.checked_add(self.lo as usize)?;
        if start > last {
            return None;
        }
        let end = match self.hi {
            Some(h) => t.saturating_add(h as usize).min(last),
            None => last,
        };
        Some((start, end))
    }
}

impl Default for Interval {
    fn default() -> Self {
        Self::UNBOUNDED
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.hi {
            Some(h) => write!(f, "[{},{}]", self.lo, h),
            None => write!(f, "[{},inf]", self.lo),
        }
    }
}

/// Side of the road the driver sits on; parameter of the priority signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    L,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SignalArg {
    Num(f64),
    Side(Side),
}

/// Reference to a named signal, e.g. `speed`, `trafficLightAhead.color`,
/// `stoplineAhead(2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRef {
    pub path: String,
    pub arg: Option<SignalArg>,
}

impl SignalRef {
    pub fn plain(path: impl Into<String>) -> Self {
        SignalRef { path: path.into(), arg: None }
    }

    pub fn with_num(path: impl Into<String>, arg: f64) -> Self {
        SignalRef { path: path.into(), arg: Some(SignalArg::Num(arg)) }
    }

    /// Fully-resolved scene key.
    pub fn key(&self) -> String {
        match self.arg {
            None => self.path.clone(),
            Some(SignalArg::Num(n)) => format!("{}({})", self.path, fmt_num(n)),
            Some(SignalArg::Side(Side::L)) => format!("{}(l)", self.path),
            Some(SignalArg::Side(Side::R)) => format!("{}(r)", self.path),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Operand {
    Signal(SignalRef),
    Num(f64),
    Enum(String),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Signal(s) => f.write_str(&s.key()),
            Operand::Num(n) => f.write_str(&fmt_num(*n)),
            Operand::Enum(e) => f.write_str(e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Gt,
    Lt,
    Ge,
    Le,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Gt => ">",
            CmpOp::Lt => "<",
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoolExpr {
    Var(SignalRef),
    Cmp { lhs: Operand, op: CmpOp, rhs: Operand },
}

impl BoolExpr {
    pub fn var(name: impl Into<String>) -> Self {
        BoolExpr::Var(SignalRef::plain(name))
    }

    pub fn cmp(lhs: Operand, op: CmpOp, rhs: Operand) -> Self {
        BoolExpr::Cmp { lhs, op, rhs }
    }

    /// `signal op number`, the most common atom shape.
    pub fn num_cmp(signal: impl Into<String>, op: CmpOp, value: f64) -> Self {
        BoolExpr::Cmp {
            lhs: Operand::Signal(SignalRef::plain(signal)),
            op,
            rhs: Operand::Num(value),
        }
    }

    pub fn signals(&self) -> Vec<&SignalRef> {
        match self {
            BoolExpr::Var(s) => vec![s],
            BoolExpr::Cmp { lhs, rhs, .. } => [lhs, rhs]
                .into_iter()
                .filter_map(|o| match o {
                    Operand::Signal(s) => Some(s),
                    _ => None,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Formula {
    Atom(BoolExpr),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Until(Interval, Box<Formula>, Box<Formula>),
    Always(Interval, Box<Formula>),
    Eventually(Interval, Box<Formula>),
    Next(Box<Formula>),
}

impl Formula {
    pub fn atom(expr: BoolExpr) -> Self {
        Formula::Atom(expr)
    }

    /// Boolean variable atom.
    pub fn var(name: impl Into<String>) -> Self {
        Formula::Atom(BoolExpr::var(name))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn until(i: Interval, a: Formula, b: Formula) -> Self {
        Formula::Until(i, Box::new(a), Box::new(b))
    }

    pub fn always(i: Interval, f: Formula) -> Self {
        Formula::Always(i, Box::new(f))
    }

    pub fn eventually(i: Interval, f: Formula) -> Self {
        Formula::Eventually(i, Box::new(f))
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    /// True when the tree contains no `Implies` node.
    pub fn is_implication_free(&self) -> bool {
        match self {
            Formula::Atom(_) => true,
            Formula::Implies(..) => false,
            Formula::Not(a) | Formula::Always(_, a) | Formula::Eventually(_, a) | Formula::Next(a) => {
                a.is_implication_free()
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(_, a, b) => {
                a.is_implication_free() && b.is_implication_free()
            }
        }
    }

    /// Core form: implication-free and without `~~x` anywhere.
    pub fn is_core(&self) -> bool {
        match self {
            Formula::Atom(_) => true,
            Formula::Implies(..) => false,
            Formula::Not(a) => !matches!(**a, Formula::Not(_)) && a.is_core(),
            Formula::Always(_, a) | Formula::Eventually(_, a) | Formula::Next(a) => a.is_core(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(_, a, b) => a.is_core() && b.is_core(),
        }
    }

    /// Visits every atom in left-to-right order.
    pub fn for_each_atom<'a>(&'a self, visit: &mut impl FnMut(&'a BoolExpr)) {
        match self {
            Formula::Atom(e) => visit(e),
            Formula::Not(a) | Formula::Always(_, a) | Formula::Eventually(_, a) | Formula::Next(a) => {
                a.for_each_atom(visit)
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Until(_, a, b) => {
                a.for_each_atom(visit);
                b.for_each_atom(visit);
            }
        }
    }

    /// Distinct scene keys referenced by the formula, sorted.
    pub fn signal_keys(&self) -> Vec<String> {
        let mut keys = Vec::new();
        self.for_each_atom(&mut |atom| {
            for s in atom.signals() {
                keys.push(s.key());
            }
        });
        keys.sort();
        keys.dedup();
        keys
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(_) => 1,
            Formula::Not(a) | Formula::Always(_, a) | Formula::Eventually(_, a) | Formula::Next(a) => 1 + a.size(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Until(_, a, b) => {
                1 + a.size() + b.size()
            }
        }
    }
}

/// Rewrites every `a -> b` into `~a | b`, leaving all other structure alone.
pub fn eliminate_implications(f: &Formula) -> Formula {
    match f {
        Formula::Atom(e) => Formula::Atom(e.clone()),
        Formula::Not(a) => Formula::not(eliminate_implications(a)),
        Formula::And(a, b) => Formula::and(eliminate_implications(a), eliminate_implications(b)),
        Formula::Or(a, b) => Formula::or(eliminate_implications(a), eliminate_implications(b)),
        Formula::Implies(a, b) => {
            Formula::or(Formula::not(eliminate_implications(a)), eliminate_implications(b))
        }
        Formula::Until(i, a, b) => Formula::until(*i, eliminate_implications(a), eliminate_implications(b)),
        Formula::Always(i, a) => Formula::always(*i, eliminate_implications(a)),
        Formula::Eventually(i, a) => Formula::eventually(*i, eliminate_implications(a)),
        Formula::Next(a) => Formula::next(eliminate_implications(a)),
    }
}

/// Collapses `~~x` to `x` everywhere.
pub fn remove_double_negation(f: &Formula) -> Formula {
    match f {
        Formula::Atom(e) => Formula::Atom(e.clone()),
        Formula::Not(a) => match a.as_ref() {
            Formula::Not(inner) => remove_double_negation(inner),
            other => Formula::not(remove_double_negation(other)),
        },
        Formula::And(a, b) => Formula::and(remove_double_negation(a), remove_double_negation(b)),
        Formula::Or(a, b) => Formula::or(remove_double_negation(a), remove_double_negation(b)),
        Formula::Implies(a, b) => Formula::implies(remove_double_negation(a), remove_double_negation(b)),
        Formula::Until(i, a, b) => Formula::until(*i, remove_double_negation(a), remove_double_negation(b)),
        Formula::Always(i, a) => Formula::always(*i, remove_double_negation(a)),
        Formula::Eventually(i, a) => Formula::eventually(*i, remove_double_negation(a)),
        Formula::Next(a) => Formula::next(remove_double_negation(a)),
    }
}

/// Core form of `f`.
pub fn normalize(f: &Formula) -> Formula {
    // Implications must go first: `~(a -> b)` only exposes `~~a` after rewriting.
    remove_double_negation(&eliminate_implications(f))
}

/// AST identity after normalization. No commutativity or associativity.
pub fn structural_equal(a: &Formula, b: &Formula) -> bool {
    normalize(a) == normalize(b)
}

pub(crate) fn fmt_num(n: f64) -> String {
    if n == 0.0 {
        // Avoid rendering "-0".
        "0".to_string()
    } else {
        format!("{n}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a() -> Formula {
        Formula::var("a")
    }
    fn b() -> Formula {
        Formula::var("b")
    }
    fn c() -> Formula {
        Formula::var("c")
    }

    #[test]
    fn implication_under_always() {
        let f = Formula::always(Interval::UNBOUNDED, Formula::implies(Formula::or(a(), b()), c()));
        let expected = Formula::always(
            Interval::UNBOUNDED,
            Formula::or(Formula::not(Formula::or(a(), b())), c()),
        );
        assert_eq!(eliminate_implications(&f), expected);
    }

    #[test]
    fn no_implication_is_identity() {
        let f = Formula::and(a(), b());
        assert_eq!(eliminate_implications(&f), f);
    }

    #[test]
    fn nested_implication() {
        let f = Formula::implies(Formula::implies(a(), b()), c());
        let expected = Formula::or(Formula::not(Formula::or(Formula::not(a()), b())), c());
        assert_eq!(eliminate_implications(&f), expected);
    }

    #[test]
    fn structural_equality_cases() {
        assert!(structural_equal(&Formula::not(Formula::not(a())), &a()));
        assert!(!structural_equal(&Formula::and(a(), b()), &Formula::and(b(), a())));
        assert!(structural_equal(&Formula::implies(a(), b()), &Formula::or(Formula::not(a()), b())));
    }

    #[test]
    fn negated_implication_normalizes_to_core() {
        let f = Formula::not(Formula::implies(Formula::not(a()), b()));
        let n = normalize(&f);
        assert!(n.is_core());
        assert_eq!(n, Formula::not(Formula::or(a(), b())));
    }

    #[test]
    fn interval_window_clipping() {
        let i = Interval::bounded(1, 3);
        assert_eq!(i.window(0, 10), Some((1, 3)));
        assert_eq!(i.window(9, 10), Some((10, 10)));
        assert_eq!(i.window(10, 10), None);
        assert_eq!(Interval::UNBOUNDED.window(4, 10), Some((4, 10)));
        assert!(Interval::new(3, Some(2)).is_none());
    }

    #[test]
    fn signal_keys_are_resolved() {
        let f = Formula::and(
            Formula::Atom(BoolExpr::Var(SignalRef::with_num("stoplineAhead", 2.0))),
            Formula::Atom(BoolExpr::num_cmp("speed", CmpOp::Gt, 0.5)),
        );
        assert_eq!(f.signal_keys(), vec!["speed".to_string(), "stoplineAhead(2)".to_string()]);
        assert_eq!(SignalRef::with_num("stoplineAhead", 3.5).key(), "stoplineAhead(3.5)");
    }
}
