//! `lawbreaker`: check traces against traffic-law specs, list the ways a law
//! can be broken, fuzz a driver for them, and replay what was found.
//!
//! Exit codes: 0 law kept / nothing found, 1 law broken / violations found,
//! 2 bad input.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use lawbreaker_core::ast::normalize;
use lawbreaker_core::fuzz::{fuzz, Engine, FuzzConfig, FuzzOutcome};
use lawbreaker_core::parser::{parse_spec_with, render_formula, ParseOptions, SpecFile};
use lawbreaker_core::robustness::rho;
use lawbreaker_core::sim::{
    driver_by_name, ScenarioGenome, ScenarioTemplate, SimConfig, Simulator, MAP_DIR_ENV,
};
use lawbreaker_core::trace::{trace_from_states_with, MapContext, Trace};
use lawbreaker_core::violation::{theta, ViolationSet};
use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "lawbreaker", version, about = "Traffic-law violation finder")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the robustness of a spec's law on a JSONL trace.
    Check {
        spec: PathBuf,
        trace: PathBuf,
        /// Accept names that are not known signals as free propositions.
        #[arg(long)]
        permissive: bool,
    },
    /// Print the indexed violation set of a spec's law as JSON. Unknown
    /// names are taken as free propositions.
    Theta { spec: PathBuf },
    /// Run a fuzzing campaign described by a JSON config.
    Fuzz {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "lawbreaker-out")]
        out: PathBuf,
        #[arg(long)]
        time_budget_secs: Option<f64>,
        #[arg(long)]
        driver: Option<String>,
        #[arg(long, value_enum, default_value_t = Baseline::Ga)]
        baseline: Baseline,
        /// Directory searched for map names that are not paths.
        #[arg(long, env = MAP_DIR_ENV)]
        map_dir: Option<PathBuf>,
    },
    /// Re-run a saved genome and write its trace.
    Replay {
        genome: PathBuf,
        #[arg(long)]
        driver: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Simulator config to replay under; must match the recorded one.
        #[arg(long)]
        sim_config: Option<PathBuf>,
        #[arg(long, env = MAP_DIR_ENV)]
        map_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    Ga,
    Random,
}

/// Campaign description. Relative paths resolve against the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CampaignConfig {
    spec: PathBuf,
    template: PathBuf,
    driver: String,
    #[serde(default)]
    fuzz: FuzzConfig,
    #[serde(default)]
    sim: SimConfig,
}

/// What a violation's genome file records, enough to replay it exactly.
#[derive(Debug, Serialize, Deserialize)]
struct GenomeFile {
    law: String,
    driver: String,
    sim_seed: u64,
    sim: SimConfig,
    map_sha256: String,
    signal_keys: Vec<String>,
    trace_sha256: String,
    covered: Vec<usize>,
    genome: ScenarioGenome,
}

#[derive(Serialize)]
struct Report {
    tool: &'static str,
    version: &'static str,
    law: String,
    theta_size: usize,
    theta: Vec<String>,
    covered: Vec<CoveredEntry>,
    coverage_curve: Vec<lawbreaker_core::fuzz::CurvePoint>,
    accidents: Vec<AccidentEntry>,
    simulations: usize,
    red_light_runs: usize,
    failed_simulations: usize,
    timed_out: bool,
    engine: Engine,
    driver: String,
    rng_seed: u64,
    config: CampaignConfig,
    wall_clock_secs: f64,
}

#[derive(Serialize)]
struct CoveredEntry {
    index: usize,
    formula: String,
    genome_file: String,
    trace_file: String,
    #[serde(serialize_with = "finite_or_text")]
    robustness: f64,
    generation: usize,
    member: usize,
    red_light_crossing: bool,
}

#[derive(Serialize)]
struct AccidentEntry {
    genome_file: String,
    step: usize,
    with: String,
}

/// JSON has no infinities; write them as strings.
fn finite_or_text<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn map_digest(map: &MapContext) -> Result<String> {
    Ok(sha256_hex(&serde_json::to_vec(map)?))
}

fn read_spec(path: &Path, permissive: bool) -> Result<SpecFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_spec_with(&text, ParseOptions { permissive }).with_context(|| format!("{}", path.display()))
}

fn set_map_dir(dir: Option<PathBuf>) {
    if let Some(d) = dir {
        // single-threaded at this point; the core reads the variable when loading maps
        unsafe { std::env::set_var(MAP_DIR_ENV, d) };
    }
}

fn cmd_check(spec: &Path, trace: &Path, permissive: bool) -> Result<u8> {
    let spec = read_spec(spec, permissive)?;
    let file = fs::File::open(trace).with_context(|| format!("reading {}", trace.display()))?;
    let pi = Trace::read_jsonl(BufReader::new(file)).with_context(|| format!("{}", trace.display()))?;
    let law = normalize(spec.law_formula());
    let r = rho(&law, &pi, 0).with_context(|| format!("scoring {}", spec.law))?;
    println!("{}: {r}", spec.law);
    Ok(if r < 0.0 { 1 } else { 0 })
}

fn cmd_theta(spec: &Path) -> Result<u8> {
    let spec = read_spec(spec, true)?;
    let set = theta(&normalize(spec.law_formula())).with_context(|| format!("violation set of {}", spec.law))?;
    println!("{}", serde_json::to_string_pretty(&set.indexed())?);
    Ok(0)
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

struct FuzzArgs {
    seed: Option<u64>,
    out: PathBuf,
    time_budget_secs: Option<f64>,
    driver: Option<String>,
    baseline: Baseline,
}

fn cmd_fuzz(config: &Path, args: FuzzArgs) -> Result<u8> {
    let started = Instant::now();
    let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let mut cfg: CampaignConfig = serde_json::from_str(&text).with_context(|| format!("{}", config.display()))?;
    if let Some(s) = args.seed {
        cfg.fuzz.rng_seed = s;
    }
    if args.time_budget_secs.is_some() {
        cfg.fuzz.time_budget_secs = args.time_budget_secs;
    }
    if let Some(d) = args.driver {
        cfg.driver = d;
    }
    let base = config.parent().unwrap_or(Path::new("."));
    let spec = read_spec(&resolve(base, &cfg.spec), false)?;
    let template_path = resolve(base, &cfg.template);
    let template_text =
        fs::read_to_string(&template_path).with_context(|| format!("reading {}", template_path.display()))?;
    let template =
        ScenarioTemplate::from_json(&template_text).with_context(|| format!("{}", template_path.display()))?;
    if let Some(m) = &cfg.sim.map {
        let local = base.join(m);
        if local.is_file() {
            cfg.sim.map = Some(local.to_string_lossy().into_owned());
        }
    }
    let driver = driver_by_name(&cfg.driver).with_context(|| format!("unknown driver `{}`", cfg.driver))?;
    let sim = Simulator::new(&cfg.sim)?;
    let engine = match args.baseline {
        Baseline::Ga => Engine::Ga,
        Baseline::Random => Engine::Random,
    };
    let law = normalize(spec.law_formula());
    let (outcome, set) = fuzz(&law, driver.as_ref(), &cfg.fuzz, &sim, &template, engine)?;
    let report = write_campaign(&args.out, &spec.law, &set, &outcome, &sim, engine, cfg, started)?;
    println!(
        "{}: covered {}/{} violation kinds in {} simulations ({} with a red-light crossing)",
        report.law,
        report.covered.len(),
        report.theta_size,
        report.simulations,
        report.red_light_runs
    );
    for c in &report.covered {
        println!("  [{}] {}  ->  {}", c.index, c.formula, c.genome_file);
    }
    Ok(if report.covered.is_empty() { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn write_campaign(
    out: &Path,
    law: &str,
    set: &ViolationSet,
    outcome: &FuzzOutcome,
    sim: &Simulator,
    engine: Engine,
    cfg: CampaignConfig,
    started: Instant,
) -> Result<Report> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let keys = set.origin().signal_keys();
    let map_sha256 = map_digest(sim.map())?;
    let mut covered = Vec::new();
    let mut accidents = Vec::new();
    for (k, entry) in outcome.state.gamma.iter().enumerate() {
        let genome_file = format!("violation_{k:03}.genome.json");
        let trace_file = format!("violation_{k:03}.trace.jsonl");
        let trace_text = entry.trace.to_jsonl_string();
        fs::write(out.join(&trace_file), &trace_text)?;
        let record = GenomeFile {
            law: law.to_string(),
            driver: cfg.driver.clone(),
            sim_seed: entry.sim_seed,
            sim: sim.config().clone(),
            map_sha256: map_sha256.clone(),
            signal_keys: keys.clone(),
            trace_sha256: sha256_hex(trace_text.as_bytes()),
            covered: entry.covered.iter().map(|c| c.0).collect(),
            genome: entry.genome.clone(),
        };
        fs::write(out.join(&genome_file), serde_json::to_string_pretty(&record)? + "\n")?;
        for &(index, robustness) in &entry.covered {
            covered.push(CoveredEntry {
                index,
                formula: render_formula(&set.elements()[index]),
                genome_file: genome_file.clone(),
                trace_file: trace_file.clone(),
                robustness,
                generation: entry.generation,
                member: entry.member,
                red_light_crossing: !entry.red_light_crossings.is_empty(),
            });
        }
        for a in &entry.accidents {
            accidents.push(AccidentEntry { genome_file: genome_file.clone(), step: a.step, with: a.with.clone() });
        }
    }
    covered.sort_by_key(|c| c.index);

    let mut csv = csv::Writer::from_path(out.join("coverage.csv"))?;
    for p in &outcome.curve {
        csv.serialize(p)?;
    }
    csv.flush()?;

    let report = Report {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        law: law.to_string(),
        theta_size: set.len(),
        theta: set.elements().iter().map(render_formula).collect(),
        covered,
        coverage_curve: outcome.curve.clone(),
        accidents,
        simulations: outcome.simulations,
        red_light_runs: outcome.red_light_runs,
        failed_simulations: outcome.failed_simulations,
        timed_out: outcome.timed_out,
        engine,
        driver: cfg.driver.clone(),
        rng_seed: cfg.fuzz.rng_seed,
        config: cfg,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    Ok(report)
}

fn cmd_replay(genome: &Path, driver: Option<String>, out: Option<PathBuf>, sim_config: Option<PathBuf>) -> Result<u8> {
    let text = fs::read_to_string(genome).with_context(|| format!("reading {}", genome.display()))?;
    let record: GenomeFile = serde_json::from_str(&text).with_context(|| format!("{}", genome.display()))?;
    if let Some(p) = sim_config {
        let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        let given: SimConfig = serde_json::from_str(&text).with_context(|| format!("{}", p.display()))?;
        if given != record.sim {
            bail!("config mismatch: {} was recorded under a different simulator config", genome.display());
        }
    }
    let sim = Simulator::new(&record.sim)?;
    if map_digest(sim.map())? != record.map_sha256 {
        bail!("config mismatch: the map differs from the one {} was recorded on", genome.display());
    }
    let name = driver.unwrap_or_else(|| record.driver.clone());
    let d = driver_by_name(&name).with_context(|| format!("unknown driver `{name}`"))?;
    let states = sim.run(&record.genome, d.as_ref(), record.sim_seed)?;
    let trace = trace_from_states_with(&states, &record.signal_keys, &sim.config().signals)?;
    let text = trace.to_jsonl_string();
    let digest = sha256_hex(text.as_bytes());
    match out {
        Some(p) => fs::write(&p, &text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    let verdict = if digest == record.trace_sha256 { "matches the recorded trace" } else { "differs from the recorded trace" };
    eprintln!("replayed with {name}: sha256 {digest} ({verdict})");
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Check { spec, trace, permissive } => cmd_check(&spec, &trace, permissive),
        Cmd::Theta { spec } => cmd_theta(&spec),
        Cmd::Fuzz { config, seed, out, time_budget_secs, driver, baseline, map_dir } => {
            set_map_dir(map_dir);
            cmd_fuzz(&config, FuzzArgs { seed, out, time_budget_secs, driver, baseline })
        }
        Cmd::Replay { genome, driver, out, sim_config, map_dir } => {
            set_map_dir(map_dir);
            cmd_replay(&genome, driver, out, sim_config)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
