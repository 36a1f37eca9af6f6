//! Quantitative semantics over finite traces.
//!
//! The monitor works bottom-up: every subformula gets a vector holding its
//! robustness at each step, computed from its children's vectors.

use crate::ast::{BoolExpr, CmpOp, Formula, Interval, Operand};
use crate::trace::{Scene, Trace, Value};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RobustnessError {
    #[error("time step {t} outside a trace of length {len}")]
    OutOfRange { t: usize, len: usize },
    #[error("formula is not in core form (contains `->`)")]
    NotCore,
    #[error("signal `{0}` missing from scene")]
    MissingSignal(String),
    #[error("kind mismatch: {0}")]
    Kind(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessConfig {
    /// Magnitude assigned to Boolean and enum atoms.
    pub saturation: f64,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        RobustnessConfig { saturation: 1.0 }
    }
}

fn operand_value(o: &Operand, scene: &Scene) -> Result<Value, RobustnessError> {
    match o {
        Operand::Signal(r) => {
            let key = r.key();
            scene.get(&key).cloned().ok_or(RobustnessError::MissingSignal(key))
        }
        Operand::Num(n) => Ok(Value::Num(*n)),
        Operand::Enum(e) => Ok(Value::Enum(e.clone())),
    }
}

pub fn atom_robustness(mu: &BoolExpr, scene: &Scene) -> Result<f64, RobustnessError> {
    atom_robustness_with(mu, scene, &RobustnessConfig::default())
}

pub fn atom_robustness_with(mu: &BoolExpr, scene: &Scene, cfg: &RobustnessConfig) -> Result<f64, RobustnessError> {
    let b = cfg.saturation;
    let sat = |holds: bool| if holds { b } else { -b };
    match mu {
        BoolExpr::Var(r) => {
            let key = r.key();
            match scene.get(&key) {
                Some(Value::Bool(v)) => Ok(sat(*v)),
                Some(other) => Err(RobustnessError::Kind(format!("`{key}` is {other:?}, expected a Boolean"))),
                None => Err(RobustnessError::MissingSignal(key)),
            }
        }
        BoolExpr::Cmp { lhs, op, rhs } => match (operand_value(lhs, scene)?, operand_value(rhs, scene)?) {
            (Value::Num(x), Value::Num(y)) => Ok(match op {
                CmpOp::Gt | CmpOp::Ge => x - y,
                CmpOp::Lt | CmpOp::Le => y - x,
                CmpOp::Eq => -(x - y).abs(),
                CmpOp::Ne => (x - y).abs(),
            }),
            (Value::Enum(x), Value::Enum(y)) => match op {
                CmpOp::Eq => Ok(sat(x == y)),
                CmpOp::Ne => Ok(sat(x != y)),
                _ => Err(RobustnessError::Kind(format!("enum comparison with `{}`", op.symbol()))),
            },
            (x, y) => Err(RobustnessError::Kind(format!("cannot compare {x:?} with {y:?}"))),
        },
    }
}

/// Robustness of `f` at every step of `pi`.
pub fn robustness_signal(f: &Formula, pi: &Trace, cfg: &RobustnessConfig) -> Result<Vec<f64>, RobustnessError> {
    let n = pi.len();
    Ok(match f {
        Formula::Atom(mu) => pi.scenes().iter().map(|s| atom_robustness_with(mu, s, cfg)).collect::<Result<_, _>>()?,
        Formula::Implies(..) => return Err(RobustnessError::NotCore),
        Formula::Not(a) => robustness_signal(a, pi, cfg)?.into_iter().map(|v| -v).collect(),
        Formula::And(a, b) => zip_with(robustness_signal(a, pi, cfg)?, robustness_signal(b, pi, cfg)?, f64::min),
        Formula::Or(a, b) => zip_with(robustness_signal(a, pi, cfg)?, robustness_signal(b, pi, cfg)?, f64::max),
        Formula::Always(i, a) => window_fold(&robustness_signal(a, pi, cfg)?, i, f64::INFINITY, f64::min),
        Formula::Eventually(i, a) => window_fold(&robustness_signal(a, pi, cfg)?, i, f64::NEG_INFINITY, f64::max),
        Formula::Until(i, a, b) => until(&robustness_signal(a, pi, cfg)?, &robustness_signal(b, pi, cfg)?, i),
        Formula::Next(a) => {
            let mut v = robustness_signal(a, pi, cfg)?;
            v.remove(0);
            v.push(f64::NEG_INFINITY);
            debug_assert_eq!(v.len(), n);
            v
        }
    })
}

fn zip_with(a: Vec<f64>, b: Vec<f64>, op: fn(f64, f64) -> f64) -> Vec<f64> {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}

/// Folds `op` over `t + I` for every `t`. Unbounded windows use a suffix
/// scan; bounded ones are short and folded directly.
fn window_fold(v: &[f64], i: &Interval, empty: f64, op: fn(f64, f64) -> f64) -> Vec<f64> {
    let last = v.len() - 1;
    if i.hi().is_none() {
        let mut suffix = v.to_vec();
        for t in (0..last).rev() {
            suffix[t] = op(suffix[t], suffix[t + 1]);
        }
        return (0..v.len())
            .map(|t| i.window(t, last).map_or(empty, |(s, _)| suffix[s]))
            .collect();
    }
    (0..v.len())
        .map(|t| i.window(t, last).map_or(empty, |(s, e)| v[s..=e].iter().copied().fold(empty, op)))
        .collect()
}

fn until(r1: &[f64], r2: &[f64], i: &Interval) -> Vec<f64> {
    let n = r1.len();
    let last = n - 1;
    if i.is_unbounded_default() {
        // U(t) = min(r1(t), max(r2(t), U(t+1))), with U(last) = min(r1, r2)
        let mut out = vec![0.0; n];
        out[last] = r1[last].min(r2[last]);
        for t in (0..last).rev() {
            out[t] = r1[t].min(r2[t].max(out[t + 1]));
        }
        return out;
    }
    (0..n)
        .map(|t| {
            let Some((s, e)) = i.window(t, last) else {
                return f64::NEG_INFINITY;
            };
            let mut guard = r1[t..s].iter().copied().fold(f64::INFINITY, f64::min);
            let mut best = f64::NEG_INFINITY;
            for u in s..=e {
                guard = guard.min(r1[u]);
                best = best.max(r2[u].min(guard));
            }
            best
        })
        .collect()
}

/// `rho(f, pi, t)` with the default saturation constant.
pub fn rho(f: &Formula, pi: &Trace, t: usize) -> Result<f64, RobustnessError> {
    rho_with(f, pi, t, &RobustnessConfig::default())
}

pub fn rho_with(f: &Formula, pi: &Trace, t: usize, cfg: &RobustnessConfig) -> Result<f64, RobustnessError> {
    if t >= pi.len() {
        return Err(RobustnessError::OutOfRange { t, len: pi.len() });
    }
    Ok(robustness_signal(f, pi, cfg)?[t])
}

/// `rho(f, pi, 0) >= 0`.
pub fn satisfies(f: &Formula, pi: &Trace) -> Result<bool, RobustnessError> {
    Ok(rho(f, pi, 0)? >= 0.0)
}
