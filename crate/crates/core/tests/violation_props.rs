//! Every violation-set element that a trace strictly satisfies must falsify
//! the law on that trace, and dually for the satisfaction set.

#[path = "support/oracle.rs"]
mod oracle;

use lawbreaker_core::ast::{normalize, Formula};
use lawbreaker_core::parser::{parse_formula, render_formula, ParseOptions};
use lawbreaker_core::robustness::rho;
use lawbreaker_core::trace::Trace;
use lawbreaker_core::violation::{n_set, theta, theta_with_cap, ThetaError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_trace(rng: &mut impl Rng, max_len: usize) -> Trace {
    let len = rng.random_range(1..=max_len);
    let bits: Vec<u8> = (0..len).map(|_| rng.random_range(0..8)).collect();
    oracle::bool_trace(&bits)
}

/// Returns a counterexample description, if any.
fn check(law: &Formula, pi: &Trace) -> Option<String> {
    let law = normalize(law);
    let Ok(set) = theta(&law) else { return None };
    let verdict = oracle::holds(&law, pi, 0);
    for xi in set.elements() {
        if rho(xi, pi, 0).unwrap() > 0.0 && verdict {
            return Some(format!("theta element {} strictly holds but {} holds", render_formula(xi), render_formula(&law)));
        }
    }
    for eta in n_set(&law).unwrap() {
        if rho(&eta, pi, 0).unwrap() > 0.0 && !verdict {
            return Some(format!("N element {} strictly holds but {} fails", render_formula(&eta), render_formula(&law)));
        }
    }
    None
}

#[test]
fn random_temporal_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let atoms = oracle::prop_atoms();
    for _ in 0..10_000 {
        let f = oracle::random_formula(&mut rng, 4, 3, &atoms);
        let pi = random_trace(&mut rng, 5);
        if let Some(c) = check(&f, &pi) {
            panic!("{c}");
        }
    }
}

#[test]
fn all_small_propositional_formulas() {
    let single_steps: Vec<Trace> = (0..8u8).map(|v| oracle::bool_trace(&[v])).collect();
    for f in oracle::all_propositional(2) {
        for pi in &single_steps {
            if let Some(c) = check(&f, pi) {
                panic!("{c}");
            }
        }
    }
}

#[test]
fn worked_example() {
    let f = parse_formula("G((a | b) -> c)", ParseOptions { permissive: true }).unwrap();
    let got: Vec<String> = theta(&normalize(&f)).unwrap().elements().iter().map(render_formula).collect();
    let want: Vec<String> = ["F (a & ~c)", "F (b & ~c)"]
        .iter()
        .map(|s| render_formula(&normalize(&parse_formula(s, ParseOptions { permissive: true }).unwrap())))
        .collect();
    assert_eq!(got, want);
}

#[test]
fn single_atom_has_one_element() {
    let f = Formula::var("a");
    assert_eq!(theta(&f).unwrap().len(), 1);
}

#[test]
fn disjunction_tower_hits_the_cap() {
    let atoms = oracle::prop_atoms();
    let mut f = Formula::and(atoms[0].clone(), atoms[1].clone());
    for k in 0..14 {
        let g = Formula::and(Formula::var(format!("p{k}")), Formula::var(format!("q{k}")));
        f = Formula::or(f, g);
    }
    assert!(matches!(theta_with_cap(&f, 4096), Err(ThetaError::SizeLimit { .. })));
}
