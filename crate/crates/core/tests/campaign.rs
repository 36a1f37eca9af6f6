use lawbreaker_core::ast::normalize;
use lawbreaker_core::corpus::corpus_entry;
use lawbreaker_core::fuzz::{fuzz, Campaign, Engine, FuzzConfig, FuzzError, Objective};
use lawbreaker_core::parser::{parse_formula, ParseOptions};
use lawbreaker_core::robustness::rho;
use lawbreaker_core::sim::{builtin_map, driver_by_name, SimConfig, Simulator};

fn small(seed: u64) -> FuzzConfig {
    FuzzConfig { population_size: 6, max_generations: 4, rng_seed: seed, ..Default::default() }
}

#[test]
fn trivially_violated_law_stops_at_once() {
    let e = corpus_entry("law38").unwrap().unwrap();
    let law = normalize(&parse_formula("G(speed > 1000000)", ParseOptions::default()).unwrap());
    let sim = Simulator::new(&SimConfig { steps: 20, ..Default::default() }).unwrap();
    let d = driver_by_name("lawful").unwrap();
    let (out, set) = fuzz(&law, d.as_ref(), &small(1), &sim, &e.template, Engine::Ga).unwrap();
    assert_eq!(set.len(), 1);
    assert_eq!(out.curve.len(), 1);
    assert_eq!(out.state.gamma.len(), 1);
    assert!(out.state.theta_remaining.is_empty());
}

#[test]
fn aggressive_campaign_is_sound_and_reproducible() {
    let e = corpus_entry("law38").unwrap().unwrap();
    let law = e.law();
    let sim = Simulator::new(&SimConfig::default()).unwrap();
    let d = driver_by_name("aggressive").unwrap();
    let (a, set) = fuzz(&law, d.as_ref(), &small(2), &sim, &e.template, Engine::Ga).unwrap();
    assert!(!a.state.gamma.is_empty());
    for w in a.curve.windows(2) {
        assert!(w[0].covered <= w[1].covered);
    }
    for entry in &a.state.gamma {
        entry.genome.validate(&builtin_map()).unwrap();
        e.template.conforms(&entry.genome).unwrap();
        for (i, r) in &entry.covered {
            // the monitor's default saturation gives the same verdict
            assert!(*r >= 0.0);
            assert!(rho(set.get(*i).unwrap(), &entry.trace, 0).unwrap() >= 0.0);
            assert!(!a.state.theta_remaining.contains(i));
        }
    }
    for i in a.state.seeds.keys() {
        assert!(a.state.theta_remaining.contains(i));
    }
    let (b, _) = fuzz(&law, d.as_ref(), &small(2), &sim, &e.template, Engine::Ga).unwrap();
    assert_eq!(serde_json::to_string(&a.curve).unwrap(), serde_json::to_string(&b.curve).unwrap());
    let genomes = |o: &lawbreaker_core::fuzz::FuzzOutcome| {
        o.state.gamma.iter().map(|g| (g.genome.clone(), g.sim_seed, g.trace.to_jsonl_string())).collect::<Vec<_>>()
    };
    assert_eq!(genomes(&a), genomes(&b));
}

#[test]
fn lawful_campaign_finds_nothing() {
    let e = corpus_entry("law38").unwrap().unwrap();
    let sim = Simulator::new(&SimConfig::default()).unwrap();
    let d = driver_by_name("lawful").unwrap();
    for engine in [Engine::Ga, Engine::Random] {
        let (out, _) = fuzz(&e.law(), d.as_ref(), &small(3), &sim, &e.template, engine).unwrap();
        assert!(out.state.gamma.is_empty());
        assert_eq!(out.simulations, 24);
    }
}

#[test]
fn falsification_mode() {
    let e = corpus_entry("law38").unwrap().unwrap();
    let law = e.law();
    let sim = Simulator::new(&SimConfig::default()).unwrap();
    let d = driver_by_name("aggressive").unwrap();
    let cfg = small(4);
    let campaign = Campaign { objective: Objective::falsify(&law), template: &e.template, sim: &sim, driver: d.as_ref(), cfg: &cfg };
    let out = campaign.run(Engine::Ga).unwrap();
    let hit = out.state.gamma.first().expect("the aggressive driver breaks the law");
    assert!(rho(&law, &hit.trace, 0).unwrap() < 0.0);
}

#[test]
fn zero_budget_times_out() {
    let e = corpus_entry("law38").unwrap().unwrap();
    let sim = Simulator::new(&SimConfig::default()).unwrap();
    let d = driver_by_name("aggressive").unwrap();
    let cfg = FuzzConfig { time_budget_secs: Some(0.0), ..small(5) };
    let (out, _) = fuzz(&e.law(), d.as_ref(), &cfg, &sim, &e.template, Engine::Ga).unwrap();
    assert!(out.timed_out);
    assert_eq!(out.simulations, 0);
}

#[test]
fn config_is_checked() {
    let e = corpus_entry("law38").unwrap().unwrap();
    let sim = Simulator::new(&SimConfig::default()).unwrap();
    let d = driver_by_name("aggressive").unwrap();
    for cfg in [
        FuzzConfig { population_size: 5, ..Default::default() },
        FuzzConfig { max_generations: 0, ..Default::default() },
        FuzzConfig { crossover_prob: 1.5, ..Default::default() },
    ] {
        let r = fuzz(&e.law(), d.as_ref(), &cfg, &sim, &e.template, Engine::Ga);
        assert!(matches!(r, Err(FuzzError::Config(_))));
    }
}
