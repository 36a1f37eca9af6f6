#[path = "support/oracle.rs"]
mod oracle;

use lawbreaker_core::ast::{normalize, BoolExpr, CmpOp, Formula, Interval};
use lawbreaker_core::robustness::{rho, rho_with, RobustnessConfig};
use lawbreaker_core::trace::{Trace, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SIGNALS: [&str; 3] = ["x", "y", "z"];

fn numeric_atoms() -> Vec<Formula> {
    vec![
        Formula::atom(BoolExpr::num_cmp("x", CmpOp::Gt, 0.25)),
        Formula::atom(BoolExpr::num_cmp("y", CmpOp::Le, 0.5)),
        Formula::atom(BoolExpr::num_cmp("z", CmpOp::Ne, 0.75)),
    ]
}

fn random_trace(rng: &mut impl Rng) -> Trace {
    let len = rng.random_range(1..=5);
    let scenes = (0..len)
        .map(|_| SIGNALS.iter().map(|s| (s.to_string(), Value::Num(rng.random_range(0..8) as f64 / 8.0))).collect())
        .collect();
    Trace::new(scenes).unwrap()
}

#[test]
fn sign_agrees_with_boolean_semantics() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let atoms = numeric_atoms();
    let mut checked = 0;
    while checked < 10_000 {
        let f = normalize(&oracle::random_formula(&mut rng, 4, 3, &atoms));
        let pi = random_trace(&mut rng);
        let r = rho(&f, &pi, 0).unwrap();
        if r.abs() <= 1e-9 {
            continue;
        }
        assert_eq!(r > 0.0, oracle::holds(&f, &pi, 0), "rho {r} for {f:?}");
        checked += 1;
    }
}

#[test]
fn matches_brute_force_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let atoms: Vec<Formula> = numeric_atoms().into_iter().chain(oracle::prop_atoms()).collect();
    for _ in 0..5_000 {
        let f = normalize(&oracle::random_formula(&mut rng, 4, 3, &atoms));
        let len = rng.random_range(1..=5);
        let scenes = (0..len)
            .map(|_| {
                let mut s: lawbreaker_core::trace::Scene = SIGNALS
                    .iter()
                    .map(|k| (k.to_string(), Value::Num(rng.random_range(0..8) as f64 / 8.0)))
                    .collect();
                for p in oracle::PROPS {
                    s.set(p, Value::Bool(rng.random_bool(0.5)));
                }
                s
            })
            .collect();
        let pi = Trace::new(scenes).unwrap();
        let b = if rng.random_bool(0.5) { 1.0 } else { 100.0 };
        for t in 0..pi.len() {
            let got = rho_with(&f, &pi, t, &RobustnessConfig { saturation: b }).unwrap();
            assert_eq!(got, oracle::rho(&f, &pi, t, b), "{f:?} at {t}");
        }
    }
}

#[test]
fn speed_peak_example() {
    let phi = Formula::eventually(Interval::UNBOUNDED, Formula::atom(BoolExpr::num_cmp("speed", CmpOp::Gt, 80.0)));
    let pi = Trace::from_numbers("speed", &[60.0, 72.0, 85.0, 78.0, 40.0]).unwrap();
    assert_eq!(rho(&phi, &pi, 0).unwrap(), 5.0);
}

#[test]
fn empty_windows_and_last_step() {
    let pi = Trace::from_numbers("speed", &[10.0, 20.0]).unwrap();
    let a = Formula::atom(BoolExpr::num_cmp("speed", CmpOp::Gt, 0.0));
    assert_eq!(rho(&Formula::next(a.clone()), &pi, 1).unwrap(), f64::NEG_INFINITY);
    let late = Interval::bounded(5, 6);
    assert_eq!(rho(&Formula::eventually(late, a.clone()), &pi, 0).unwrap(), f64::NEG_INFINITY);
    assert_eq!(rho(&Formula::always(late, a), &pi, 0).unwrap(), f64::INFINITY);
}
