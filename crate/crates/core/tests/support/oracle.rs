//! Reference evaluators used as test oracles.
//!
//! Both work straight from the textbook definitions, one formula node and
//! one time step at a time, with no sharing with the library's monitor.

#![allow(dead_code)]

use lawbreaker_core::ast::{BoolExpr, CmpOp, Formula, Interval, Operand};
use lawbreaker_core::trace::{Scene, Trace, Value};
use rand::Rng;

fn operand(o: &Operand, s: &Scene) -> Value {
    match o {
        Operand::Signal(r) => s.get(&r.key()).cloned().unwrap_or_else(|| panic!("oracle: no signal {}", r.key())),
        Operand::Num(n) => Value::Num(*n),
        Operand::Enum(e) => Value::Enum(e.clone()),
    }
}

fn atom_holds(e: &BoolExpr, s: &Scene) -> bool {
    match e {
        BoolExpr::Var(r) => match s.get(&r.key()) {
            Some(Value::Bool(b)) => *b,
            other => panic!("oracle: {} is {other:?}", r.key()),
        },
        BoolExpr::Cmp { lhs, op, rhs } => match (operand(lhs, s), operand(rhs, s)) {
            (Value::Num(a), Value::Num(b)) => match op {
                CmpOp::Gt => a > b,
                CmpOp::Ge => a >= b,
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
                CmpOp::Eq => a == b,
                CmpOp::Ne => a != b,
            },
            (Value::Enum(a), Value::Enum(b)) => match op {
                CmpOp::Eq => a == b,
                CmpOp::Ne => a != b,
                _ => panic!("oracle: ordered enum comparison"),
            },
            other => panic!("oracle: mixed kinds {other:?}"),
        },
    }
}

/// Steps `t' in t + I` that exist in a trace whose last index is `last`.
fn steps(i: &Interval, t: usize, last: usize) -> Vec<usize> {
    let lo = t + i.lo() as usize;
    let hi = match i.hi() {
        Some(h) => t + h as usize,
        None => last,
    };
    (lo..=hi.min(last)).collect()
}

/// Boolean satisfaction `pi, t |= f`.
pub fn holds(f: &Formula, pi: &Trace, t: usize) -> bool {
    let last = pi.len() - 1;
    match f {
        Formula::Atom(e) => atom_holds(e, pi.scene(t)),
        Formula::Not(a) => !holds(a, pi, t),
        Formula::And(a, b) => holds(a, pi, t) && holds(b, pi, t),
        Formula::Or(a, b) => holds(a, pi, t) || holds(b, pi, t),
        Formula::Implies(a, b) => !holds(a, pi, t) || holds(b, pi, t),
        Formula::Always(i, a) => steps(i, t, last).into_iter().all(|u| holds(a, pi, u)),
        Formula::Eventually(i, a) => steps(i, t, last).into_iter().any(|u| holds(a, pi, u)),
        Formula::Until(i, a, b) => steps(i, t, last)
            .into_iter()
            .any(|u| holds(b, pi, u) && (t..=u).all(|w| holds(a, pi, w))),
        Formula::Next(a) => t < last && holds(a, pi, t + 1),
    }
}

/// Brute-force robustness straight from the sup/inf definition.
pub fn rho(f: &Formula, pi: &Trace, t: usize, big_b: f64) -> f64 {
    let last = pi.len() - 1;
    let sup = |xs: Vec<f64>| xs.into_iter().fold(f64::NEG_INFINITY, f64::max);
    let inf = |xs: Vec<f64>| xs.into_iter().fold(f64::INFINITY, f64::min);
    match f {
        Formula::Atom(e) => match e {
            BoolExpr::Var(_) => {
                if atom_holds(e, pi.scene(t)) {
                    big_b
                } else {
                    -big_b
                }
            }
            BoolExpr::Cmp { lhs, op, rhs } => {
                let s = pi.scene(t);
                match (operand(lhs, s), operand(rhs, s)) {
                    (Value::Num(a), Value::Num(b)) => match op {
                        CmpOp::Gt | CmpOp::Ge => a - b,
                        CmpOp::Lt | CmpOp::Le => b - a,
                        CmpOp::Eq => -(a - b).abs(),
                        CmpOp::Ne => (a - b).abs(),
                    },
                    _ => {
                        if atom_holds(e, s) {
                            big_b
                        } else {
                            -big_b
                        }
                    }
                }
            }
        },
        Formula::Not(a) => -rho(a, pi, t, big_b),
        Formula::And(a, b) => rho(a, pi, t, big_b).min(rho(b, pi, t, big_b)),
        Formula::Or(a, b) => rho(a, pi, t, big_b).max(rho(b, pi, t, big_b)),
        Formula::Implies(a, b) => (-rho(a, pi, t, big_b)).max(rho(b, pi, t, big_b)),
        Formula::Always(i, a) => inf(steps(i, t, last).into_iter().map(|u| rho(a, pi, u, big_b)).collect()),
        Formula::Eventually(i, a) => sup(steps(i, t, last).into_iter().map(|u| rho(a, pi, u, big_b)).collect()),
        Formula::Until(i, a, b) => sup(steps(i, t, last)
            .into_iter()
            .map(|u| {
                let guard = inf((t..=u).map(|w| rho(a, pi, w, big_b)).collect());
                rho(b, pi, u, big_b).min(guard)
            })
            .collect()),
        Formula::Next(a) => {
            if t < last {
                rho(a, pi, t + 1, big_b)
            } else {
                f64::NEG_INFINITY
            }
        }
    }
}

// ------------------------------------------------------------ generators

pub const PROPS: [&str; 3] = ["a", "b", "c"];

/// Bool-only trace over `a`, `b`, `c`; `bits[t]` packs the three values.
pub fn bool_trace(bits: &[u8]) -> Trace {
    Trace::new(
        bits.iter()
            .map(|v| {
                PROPS
                    .iter()
                    .enumerate()
                    .map(|(k, p)| (p.to_string(), Value::Bool(v >> k & 1 == 1)))
                    .collect()
            })
            .collect(),
    )
    .unwrap()
}

pub fn random_interval(rng: &mut impl Rng) -> Interval {
    match rng.random_range(0..4) {
        0 => Interval::UNBOUNDED,
        1 => Interval::new(rng.random_range(0..3), None).unwrap(),
        _ => {
            let lo = rng.random_range(0..3);
            Interval::bounded(lo, lo + rng.random_range(0..3))
        }
    }
}

/// Random formula over `atoms`; temporal nesting at most `temporal` deep,
/// overall nesting at most `depth`.
pub fn random_formula(rng: &mut impl Rng, depth: u32, temporal: u32, atoms: &[Formula]) -> Formula {
    if depth == 0 || rng.random_bool(0.2) {
        return atoms[rng.random_range(0..atoms.len())].clone();
    }
    let kinds = if temporal > 0 { 9 } else { 4 };
    let sub = |rng: &mut _, t| random_formula(rng, depth - 1, t, atoms);
    match rng.random_range(0..kinds) {
        0 => Formula::not(sub(rng, temporal)),
        1 => Formula::and(sub(rng, temporal), sub(rng, temporal)),
        2 => Formula::or(sub(rng, temporal), sub(rng, temporal)),
        3 => Formula::implies(sub(rng, temporal), sub(rng, temporal)),
        4 => Formula::always(random_interval(rng), sub(rng, temporal - 1)),
        5 => Formula::eventually(random_interval(rng), sub(rng, temporal - 1)),
        6 | 7 => Formula::until(random_interval(rng), sub(rng, temporal - 1), sub(rng, temporal - 1)),
        _ => Formula::next(sub(rng, temporal - 1)),
    }
}

pub fn prop_atoms() -> Vec<Formula> {
    PROPS.iter().map(|p| Formula::var(*p)).collect()
}

/// Every formula over `a, b, c` built from `~ & |` with nesting depth at most `depth`.
pub fn all_propositional(depth: u32) -> Vec<Formula> {
    let mut level = prop_atoms();
    for _ in 0..depth {
        let mut next = prop_atoms();
        next.extend(level.iter().map(|f| Formula::not(f.clone())));
        for x in &level {
            for y in &level {
                next.push(Formula::and(x.clone(), y.clone()));
                next.push(Formula::or(x.clone(), y.clone()));
            }
        }
        level = next;
    }
    level
}
