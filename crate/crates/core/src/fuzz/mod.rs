//! Coverage-guided genetic search for law violations.
//!
//! Every uncovered element of the violation set keeps its own best seed
//! (the genome whose trace came closest to satisfying it). Each generation
//! is bred from those seeds, simulated, and scored against every element
//! still uncovered; a trace that satisfies an element covers it for good.

mod ops;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ast::Formula;
use crate::robustness::{robustness_signal, RobustnessConfig, RobustnessError};
use crate::sim::{
    detect_accidents, red_light_crossings, Accident, DriverStub, GenomeError, ScenarioGenome, ScenarioTemplate,
    SimError, Simulator,
};
use crate::trace::{trace_from_states_with, Trace, TraceError};
use crate::violation::{theta, ThetaError, ViolationSet};

pub use ops::{crossover, mutate, random_genome, select_parents, Category};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuzzConfig {
    pub population_size: usize,
    pub max_generations: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    /// Gaussian sigma as a fraction of each parameter's range.
    pub gaussian_sigma_frac: f64,
    pub rng_seed: u64,
    /// Magnitude of Boolean atoms while scoring. Large enough that a false
    /// condition always ranks below any speed or distance margin, so seeds
    /// are ordered by how close they came once the conditions held.
    pub saturation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_budget_secs: Option<f64>,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            population_size: 20,
            max_generations: 20,
            crossover_prob: 0.6,
            mutation_prob: 0.2,
            gaussian_sigma_frac: 0.1,
            rng_seed: 0,
            saturation: 100.0,
            time_budget_secs: None,
        }
    }
}

impl FuzzConfig {
    pub fn validate(&self) -> Result<(), FuzzError> {
        let bad = |m: &str| Err(FuzzError::Config(m.to_string()));
        if self.population_size < 2 || self.population_size % 2 != 0 {
            return bad("population_size must be even and at least 2");
        }
        if self.max_generations < 1 {
            return bad("max_generations must be at least 1");
        }
        for p in [self.crossover_prob, self.mutation_prob] {
            if !(0.0..=1.0).contains(&p) {
                return bad("probabilities must lie in [0, 1]");
            }
        }
        if !(self.gaussian_sigma_frac >= 0.0 && self.gaussian_sigma_frac.is_finite()) {
            return bad("gaussian_sigma_frac must be a non-negative number");
        }
        if !(self.saturation > 0.0 && self.saturation.is_finite()) {
            return bad("saturation must be a positive number");
        }
        if self.time_budget_secs.is_some_and(|t| !(t >= 0.0)) {
            return bad("time_budget_secs must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FuzzError {
    #[error("invalid fuzzing config: {0}")]
    Config(String),
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error("the violation set is empty; nothing to search for")]
    EmptyTheta,
    #[error(transparent)]
    Template(#[from] GenomeError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Robustness(#[from] RobustnessError),
}

/// A generated test that covered at least one element.
#[derive(Debug, Clone)]
pub struct GammaEntry {
    pub genome: ScenarioGenome,
    /// Seed handed to the simulator for this run.
    pub sim_seed: u64,
    pub generation: usize,
    pub member: usize,
    pub trace: Trace,
    /// Newly covered element indices with their robustness on `trace`.
    pub covered: Vec<(usize, f64)>,
    pub accidents: Vec<Accident>,
    pub red_light_crossings: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct FuzzState {
    pub theta_remaining: BTreeSet<usize>,
    pub seeds: BTreeMap<usize, ScenarioGenome>,
    /// Best robustness seen per uncovered element; absent means -inf.
    pub robust: BTreeMap<usize, f64>,
    pub gamma: Vec<GammaEntry>,
}

impl FuzzState {
    pub fn new(elements: usize) -> Self {
        FuzzState { theta_remaining: (0..elements).collect(), ..Default::default() }
    }

    /// `(element, robustness, genome)` by robustness, best first; ties keep
    /// element order.
    pub fn ranked_seeds(&self) -> Vec<(usize, f64, &ScenarioGenome)> {
        let mut v: Vec<_> = self
            .seeds
            .iter()
            .map(|(i, g)| (*i, self.robust.get(i).copied().unwrap_or(f64::NEG_INFINITY), g))
            .collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v
    }

    pub fn covered(&self) -> BTreeSet<usize> {
        self.gamma.iter().flat_map(|e| e.covered.iter().map(|(i, _)| *i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// seeds, selection, crossover, mutation
    Ga,
    /// fresh random genomes every generation
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub generation: usize,
    pub simulations: usize,
    pub covered: usize,
}

#[derive(Debug, Clone)]
pub struct FuzzOutcome {
    pub state: FuzzState,
    pub curve: Vec<CurvePoint>,
    pub simulations: usize,
    /// Simulated traces (covering or not) in which the ego ran a red light.
    pub red_light_runs: usize,
    pub failed_simulations: usize,
    pub timed_out: bool,
}

/// What one campaign searches for.
pub struct Objective {
    pub elements: Vec<Formula>,
    /// Signal keys the traces must carry.
    pub keys: Vec<String>,
    /// Covered on `rho > 0` instead of `rho >= 0`.
    pub strict: bool,
}

impl Objective {
    /// The violation set of `law`.
    pub fn coverage(law: &Formula) -> Result<(Self, ViolationSet), FuzzError> {
        let set = theta(law)?;
        if set.is_empty() {
            return Err(FuzzError::EmptyTheta);
        }
        Ok((Objective { elements: set.elements().to_vec(), keys: law.signal_keys(), strict: false }, set))
    }

    /// A single target: any trace on which `law` has negative robustness.
    pub fn falsify(law: &Formula) -> Self {
        let target = match law {
            Formula::Not(inner) => (**inner).clone(),
            other => Formula::not(other.clone()),
        };
        Objective { elements: vec![target], keys: law.signal_keys(), strict: true }
    }

    fn hit(&self, rho: f64) -> bool {
        if self.strict {
            rho > 0.0
        } else {
            rho >= 0.0
        }
    }
}

/// Everything a campaign needs besides its RNG.
pub struct Campaign<'a> {
    pub objective: Objective,
    pub template: &'a ScenarioTemplate,
    pub sim: &'a Simulator,
    pub driver: &'a dyn DriverStub,
    pub cfg: &'a FuzzConfig,
}

struct Scored {
    trace: Trace,
    rho: Vec<f64>,
    accidents: Vec<Accident>,
    red: Vec<usize>,
}

impl Campaign<'_> {
    fn score(&self, g: &ScenarioGenome, seed: u64, open: &[usize]) -> Result<Scored, FuzzError> {
        let states = self.sim.run(g, self.driver, seed)?;
        let signals = &self.sim.config().signals;
        let trace = trace_from_states_with(&states, &self.objective.keys, signals).map_err(|e| match e {
            TraceError::World(w) => FuzzError::Sim(SimError::Map(w.to_string())),
            other => FuzzError::Config(other.to_string()),
        })?;
        let rho = open
            .iter()
            .map(|&i| Ok(robustness_signal(&self.objective.elements[i], &trace, &RobustnessConfig { saturation: self.cfg.saturation })?[0]))
            .collect::<Result<Vec<_>, RobustnessError>>()?;
        Ok(Scored { trace, rho, accidents: detect_accidents(&states), red: red_light_crossings(&states, signals) })
    }

    fn score_all(&self, members: &[(ScenarioGenome, u64)], open: &[usize]) -> Vec<Result<Scored, FuzzError>> {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            members.par_iter().map(|(g, s)| self.score(g, *s, open)).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            members.iter().map(|(g, s)| self.score(g, *s, open)).collect()
        }
    }

    /// Runs the search to completion, budget exhaustion or full coverage.
    pub fn run(&self, engine: Engine) -> Result<FuzzOutcome, FuzzError> {
        self.cfg.validate()?;
        self.template.validate(self.sim.map())?;
        if self.objective.elements.is_empty() {
            return Err(FuzzError::EmptyTheta);
        }
        let started = Instant::now();
        let budget = self.cfg.time_budget_secs.map(Duration::from_secs_f64);
        let n = self.cfg.population_size;
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.rng_seed);
        let mut state = FuzzState::new(self.objective.elements.len());
        let mut out = FuzzOutcome {
            state: FuzzState::default(),
            curve: Vec::new(),
            simulations: 0,
            red_light_runs: 0,
            failed_simulations: 0,
            timed_out: false,
        };
        let mut population: Vec<ScenarioGenome> = (0..n).map(|_| random_genome(self.template, &mut rng)).collect();

        for generation in 0..self.cfg.max_generations {
            if state.theta_remaining.is_empty() {
                break;
            }
            if budget.is_some_and(|b| started.elapsed() >= b) {
                out.timed_out = true;
                break;
            }
            let open: Vec<usize> = state.theta_remaining.iter().copied().collect();
            let members: Vec<(ScenarioGenome, u64)> = population.drain(..).map(|g| (g, rng.next_u64())).collect();
            let mut results = self.score_all(&members, &open);
            for (member, ((genome, seed), result)) in members.into_iter().zip(results.iter_mut()).enumerate() {
                let (mut genome, mut seed) = (genome, seed);
                let mut attempts = 0;
                // a member the simulator rejects is replaced by a fresh random one
                while let Err(e) = result {
                    out.failed_simulations += 1;
                    log::warn!("generation {generation}, member {member}: {e}");
                    attempts += 1;
                    if attempts > 3 {
                        break;
                    }
                    genome = random_genome(self.template, &mut rng);
                    seed = rng.next_u64();
                    *result = self.score(&genome, seed, &open);
                }
                let Ok(scored) = result else { continue };
                out.simulations += 1;
                if !scored.red.is_empty() {
                    out.red_light_runs += 1;
                }
                let mut covered = Vec::new();
                for (k, &i) in open.iter().enumerate() {
                    if !state.theta_remaining.contains(&i) {
                        continue;
                    }
                    let rho = scored.rho[k];
                    if self.objective.hit(rho) {
                        state.theta_remaining.remove(&i);
                        state.seeds.remove(&i);
                        state.robust.remove(&i);
                        covered.push((i, rho));
                    } else if rho > state.robust.get(&i).copied().unwrap_or(f64::NEG_INFINITY) {
                        state.seeds.insert(i, genome.clone());
                        state.robust.insert(i, rho);
                    }
                }
                if !covered.is_empty() {
                    log::info!("generation {generation}, member {member}: covered {covered:?}");
                    state.gamma.push(GammaEntry {
                        genome,
                        sim_seed: seed,
                        generation,
                        member,
                        trace: scored.trace.clone(),
                        covered,
                        accidents: std::mem::take(&mut scored.accidents),
                        red_light_crossings: std::mem::take(&mut scored.red),
                    });
                }
            }
            out.curve.push(CurvePoint {
                generation,
                simulations: out.simulations,
                covered: self.objective.elements.len() - state.theta_remaining.len(),
            });
            population = match engine {
                Engine::Ga => self.breed(&state, &mut rng),
                Engine::Random => (0..n).map(|_| random_genome(self.template, &mut rng)).collect(),
            };
        }
        out.state = state;
        Ok(out)
    }

    fn breed(&self, state: &FuzzState, rng: &mut ChaCha8Rng) -> Vec<ScenarioGenome> {
        let n = self.cfg.population_size;
        let mut next = select_parents(state, n.min(state.seeds.len()), rng);
        while next.len() < n {
            next.push(random_genome(self.template, rng));
        }
        for k in (0..n.saturating_sub(1)).step_by(2) {
            if rand::Rng::random_bool(rng, self.cfg.crossover_prob) {
                let (a, b) = crossover(&next[k], &next[k + 1], rng).expect("genomes share the template");
                next[k] = a;
                next[k + 1] = b;
            }
        }
        next.iter().map(|g| mutate(g, self.template, self.cfg, rng)).collect()
    }
}

/// Coverage campaign for `law`.
pub fn fuzz(
    law: &Formula,
    driver: &dyn DriverStub,
    cfg: &FuzzConfig,
    sim: &Simulator,
    template: &ScenarioTemplate,
    engine: Engine,
) -> Result<(FuzzOutcome, ViolationSet), FuzzError> {
    let (objective, set) = Objective::coverage(law)?;
    let campaign = Campaign { objective, template, sim, driver, cfg };
    Ok((campaign.run(engine)?, set))
}
