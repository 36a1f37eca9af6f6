//! Ways to violate (`theta`) and ways to satisfy (`n_set`) a law, plus
//! violation-coverage bookkeeping.
//!
//! Both sets are built by structural recursion. Elements keep recursion
//! order (left to right, unions before cross products) and duplicates are
//! dropped on first sight, so indices are stable across runs.

use std::collections::{BTreeSet, HashSet};

use serde::Serialize;

use crate::ast::{Formula, Interval};
use crate::parser::render_formula;
use crate::robustness::{rho, RobustnessError};
use crate::trace::Trace;

pub const DEFAULT_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ThetaError {
    #[error("formula is not in core form (contains `->`)")]
    NotCore,
    #[error("set for `{subformula}` would hold {size} elements, over the limit of {cap}")]
    SizeLimit { subformula: String, size: usize, cap: usize },
}

/// `Theta(law)`: every element, when satisfied, falsifies the law.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationSet {
    elements: Vec<Formula>,
    origin: Formula,
}

#[derive(Serialize)]
pub struct IndexedFormula {
    pub index: usize,
    pub formula: String,
}

impl ViolationSet {
    pub fn elements(&self) -> &[Formula] {
        &self.elements
    }

    pub fn origin(&self) -> &Formula {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&Formula> {
        self.elements.get(i)
    }

    pub fn indexed(&self) -> Vec<IndexedFormula> {
        self.elements
            .iter()
            .enumerate()
            .map(|(index, f)| IndexedFormula { index, formula: render_formula(f) })
            .collect()
    }
}

pub fn theta(f: &Formula) -> Result<ViolationSet, ThetaError> {
    theta_with_cap(f, DEFAULT_CAP)
}

pub fn theta_with_cap(f: &Formula, cap: usize) -> Result<ViolationSet, ThetaError> {
    if !f.is_implication_free() {
        return Err(ThetaError::NotCore);
    }
    Ok(ViolationSet { elements: Builder { cap }.theta(f)?, origin: f.clone() })
}

pub fn n_set(f: &Formula) -> Result<Vec<Formula>, ThetaError> {
    n_set_with_cap(f, DEFAULT_CAP)
}

pub fn n_set_with_cap(f: &Formula, cap: usize) -> Result<Vec<Formula>, ThetaError> {
    if !f.is_implication_free() {
        return Err(ThetaError::NotCore);
    }
    Builder { cap }.n(f)
}

/// `~f`, collapsing a double negation so fresh formulas stay in core form.
fn negate(f: &Formula) -> Formula {
    match f {
        Formula::Not(inner) => (**inner).clone(),
        other => Formula::not(other.clone()),
    }
}

struct Builder {
    cap: usize,
}

impl Builder {
    fn check(&self, f: &Formula, size: usize) -> Result<(), ThetaError> {
        if size > self.cap {
            let mut text = render_formula(f);
            if text.len() > 200 {
                let cut = (0..=200).rev().find(|&i| text.is_char_boundary(i)).unwrap_or(0);
                text.truncate(cut);
                text.push_str("...");
            }
            return Err(ThetaError::SizeLimit { subformula: text, size, cap: self.cap });
        }
        Ok(())
    }

    fn union(&self, f: &Formula, a: Vec<Formula>, b: Vec<Formula>) -> Result<Vec<Formula>, ThetaError> {
        self.check(f, a.len() + b.len())?;
        Ok(dedup(a.into_iter().chain(b)))
    }

    fn cross(
        &self,
        f: &Formula,
        a: &[Formula],
        b: &[Formula],
        join: impl Fn(Formula, Formula) -> Formula,
    ) -> Result<Vec<Formula>, ThetaError> {
        self.check(f, a.len().saturating_mul(b.len()))?;
        Ok(dedup(a.iter().flat_map(|x| b.iter().map(|y| join(x.clone(), y.clone())))))
    }

    fn theta(&self, f: &Formula) -> Result<Vec<Formula>, ThetaError> {
        match f {
            Formula::Atom(_) => Ok(vec![Formula::not(f.clone())]),
            Formula::And(a, b) => self.union(f, self.theta(a)?, self.theta(b)?),
            Formula::Or(a, b) => self.cross(f, &self.theta(a)?, &self.theta(b)?, Formula::and),
            Formula::Not(a) => self.n(a),
            Formula::Always(i, a) => Ok(wrap(self.theta(a)?, |x| Formula::eventually(*i, x))),
            Formula::Eventually(i, a) => Ok(wrap(self.theta(a)?, |x| Formula::always(*i, x))),
            Formula::Until(i, a, b) => {
                let i: Interval = *i;
                let not_a_or_b = Formula::or(negate(a), (**b).clone());
                let a_or_b = Formula::or((**a).clone(), (**b).clone());
                let left = self.cross(f, &self.theta(&not_a_or_b)?, &self.theta(&a_or_b)?, |x, y| {
                    Formula::until(i, x, y)
                })?;
                let right = self.cross(f, &self.theta(a)?, &self.theta(b)?, Formula::and)?;
                self.union(f, left, right)
            }
            Formula::Next(a) => Ok(wrap(self.theta(a)?, Formula::next)),
            Formula::Implies(..) => Err(ThetaError::NotCore),
        }
    }

    fn n(&self, f: &Formula) -> Result<Vec<Formula>, ThetaError> {
        match f {
            Formula::Atom(_) => Ok(vec![f.clone()]),
            Formula::And(a, b) => self.cross(f, &self.n(a)?, &self.n(b)?, Formula::and),
            Formula::Or(a, b) => self.union(f, self.n(a)?, self.n(b)?),
            Formula::Not(a) => self.theta(a),
            Formula::Always(i, a) => Ok(wrap(self.n(a)?, |x| Formula::always(*i, x))),
            Formula::Eventually(i, a) => Ok(wrap(self.n(a)?, |x| Formula::eventually(*i, x))),
            Formula::Until(i, a, b) => self.cross(f, &self.n(a)?, &self.n(b)?, |x, y| Formula::until(*i, x, y)),
            Formula::Next(a) => Ok(wrap(self.n(a)?, Formula::next)),
            Formula::Implies(..) => Err(ThetaError::NotCore),
        }
    }
}

fn wrap(xs: Vec<Formula>, op: impl Fn(Formula) -> Formula) -> Vec<Formula> {
    // wrapping is injective, so no new duplicates appear
    xs.into_iter().map(op).collect()
}

/// Keeps the first occurrence of each formula. Elements are already in core
/// form, so rendered text identifies them up to structural equality.
fn dedup(xs: impl Iterator<Item = Formula>) -> Vec<Formula> {
    let mut seen = HashSet::new();
    xs.filter(|x| seen.insert(render_formula(x))).collect()
}

/// Which elements of a violation set have been realized so far.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CoverageState {
    pub covered: BTreeSet<usize>,
    pub total: usize,
}

impl CoverageState {
    pub fn new(total: usize) -> Self {
        CoverageState { covered: BTreeSet::new(), total }
    }

    pub fn for_set(set: &ViolationSet) -> Self {
        Self::new(set.len())
    }

    pub fn is_complete(&self) -> bool {
        self.covered.len() >= self.total
    }
}

/// Marks every uncovered element that `pi` satisfies (`rho >= 0`).
pub fn mark_covered(
    state: &CoverageState,
    theta_set: &ViolationSet,
    pi: &Trace,
) -> Result<(CoverageState, BTreeSet<usize>), RobustnessError> {
    let mut next = state.clone();
    let mut fresh = BTreeSet::new();
    for (i, xi) in theta_set.elements().iter().enumerate() {
        if state.covered.contains(&i) {
            continue;
        }
        if rho(xi, pi, 0)? >= 0.0 {
            next.covered.insert(i);
            fresh.insert(i);
        }
    }
    Ok((next, fresh))
}

/// `|covered| / |Theta|`; an empty violation set counts as fully covered.
pub fn coverage(state: &CoverageState) -> f64 {
    if state.total == 0 {
        log::warn!("coverage of an empty violation set taken as 1.0");
        return 1.0;
    }
    state.covered.len() as f64 / state.total as f64
}
