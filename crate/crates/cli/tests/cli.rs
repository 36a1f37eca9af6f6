use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lawbreaker"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn campaigns() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("campaigns")
}

fn speeds(values: &[f64]) -> String {
    values
        .iter()
        .enumerate()
        .map(|(k, v)| format!("{{\"t\": {k}, \"signals\": {{\"speed\": {v}}}}}\n"))
        .collect()
}

#[test]
fn check_reports_robustness_and_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "limit.lb", "limit = G(speed < 80);\n");
    let peak = write(dir.path(), "peak.jsonl", &speeds(&[60.0, 85.0, 70.0]));
    let o = run(&["check", &spec, &peak]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout(&o).trim(), "limit: -5");
    let still = write(dir.path(), "still.jsonl", &speeds(&[0.0, 0.0]));
    let o = run(&["check", &spec, &still]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "limit: 80");
    let bad = write(dir.path(), "bad.jsonl", "{\"t\": 0, \"signals\": {\"speed\": 1}}\n{speed\n");
    assert_eq!(code(&run(&["check", &spec, &bad])), 2);
    assert_eq!(code(&run(&["check", &spec, "/no/such/trace.jsonl"])), 2);
}

#[test]
fn theta_lists_the_violation_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "ex.lb", "law = G((a | b) -> c);\n");
    let o = run(&["theta", &spec]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
    assert_eq!(v[0]["index"], 0);

    let single = write(dir.path(), "one.lb", "law = engineOn;\n");
    let v: serde_json::Value = serde_json::from_str(&stdout(&run(&["theta", &single]))).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 1);

    // 2^14 conjunctions once the disjunction tower is crossed out
    let tower = (0..14).map(|k| format!("(p{k} & q{k})")).collect::<Vec<_>>().join(" | ");
    let big = write(dir.path(), "big.lb", &format!("law = {tower};\n"));
    let o = run(&["theta", &big]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("over the limit of 4096"), "{}", String::from_utf8_lossy(&o.stderr));
}

fn small_campaign(dir: &Path, driver: &str) -> String {
    let spec = campaigns().join("../../core/corpus/law38/spec.lb");
    let template = campaigns().join("../../core/corpus/law38/template.json");
    let cfg = serde_json::json!({
        "spec": spec, "template": template, "driver": driver,
        "fuzz": { "population_size": 6, "max_generations": 3 },
    });
    write(dir, &format!("{driver}.json"), &cfg.to_string())
}

fn without_wall_clock(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("wall_clock_secs");
    v
}

#[test]
fn fuzz_writes_reproducible_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_campaign(dir.path(), "aggressive");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["fuzz", &cfg, "--seed", "3", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let report = without_wall_clock(&a.join("report.json"));
    assert_eq!(report, without_wall_clock(&b.join("report.json")));
    let covered = report["covered"].as_array().unwrap();
    assert!(!covered.is_empty());
    assert_eq!(report["theta_size"], 9);
    assert_eq!(report["rng_seed"], 3);
    for c in covered {
        let g = c["genome_file"].as_str().unwrap();
        let t = c["trace_file"].as_str().unwrap();
        assert!(a.join(g).is_file());
        assert_eq!(fs::read(a.join(t)).unwrap(), fs::read(b.join(t)).unwrap());
    }
    let csv = fs::read_to_string(a.join("coverage.csv")).unwrap();
    assert!(csv.starts_with("generation,simulations,covered\n"));
    // keys come out in declaration order
    let text = fs::read_to_string(a.join("report.json")).unwrap();
    let order: Vec<usize> = ["\"tool\"", "\"law\"", "\"covered\"", "\"config\"", "\"wall_clock_secs\""]
        .iter()
        .map(|k| text.find(k).unwrap())
        .collect();
    assert!(order.windows(2).all(|w| w[0] < w[1]));

    let genome = a.join(covered[0]["genome_file"].as_str().unwrap());
    let trace = a.join(covered[0]["trace_file"].as_str().unwrap());
    let replayed = dir.path().join("replayed.jsonl");
    let o = run(&["replay", genome.to_str().unwrap(), "--out", replayed.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read(&replayed).unwrap(), fs::read(&trace).unwrap());

    let other = dir.path().join("other.jsonl");
    let o = run(&["replay", genome.to_str().unwrap(), "--driver", "lawful", "--out", other.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_ne!(fs::read(&other).unwrap(), fs::read(&trace).unwrap());

    let sim = write(dir.path(), "sim.json", "{\"dt\": 0.05}");
    let o = run(&["replay", genome.to_str().unwrap(), "--sim-config", &sim]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("mismatch"));
    assert_eq!(code(&run(&["replay", "/no/such/genome.json"])), 2);
}

#[test]
fn lawful_campaign_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_campaign(dir.path(), "lawful");
    let out = dir.path().join("out");
    let o = run(&["fuzz", &cfg, "--out", out.to_str().unwrap(), "--baseline", "random"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = without_wall_clock(&out.join("report.json"));
    assert!(report["covered"].as_array().unwrap().is_empty());
    assert_eq!(report["engine"], "random");
}

#[test]
fn bad_campaign_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_campaign(dir.path(), "nobody");
    assert_eq!(code(&run(&["fuzz", &cfg, "--out", dir.path().join("o").to_str().unwrap()])), 2);
    let odd = write(
        dir.path(),
        "odd.json",
        &fs::read_to_string(small_campaign(dir.path(), "aggressive")).unwrap().replace("\"population_size\":6", "\"population_size\":5"),
    );
    assert_eq!(code(&run(&["fuzz", &odd, "--out", dir.path().join("o").to_str().unwrap()])), 2);
    let unknown = write(dir.path(), "unknown.json", "{\"spec\": \"x\", \"template\": \"y\", \"driver\": \"lawful\", \"extra\": 1}");
    assert_eq!(code(&run(&["fuzz", &unknown])), 2);
}

#[test]
fn shipped_campaign_configs_parse() {
    for name in ["law38", "law42", "law52"] {
        let text = fs::read_to_string(campaigns().join(format!("{name}.json"))).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(campaigns().join(v["spec"].as_str().unwrap()).is_file());
        assert!(campaigns().join(v["template"].as_str().unwrap()).is_file());
    }
}
