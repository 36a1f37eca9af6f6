//! World snapshots, scenes, traces and the signal evaluators between them.

mod eval;
pub mod geometry;
pub mod registry;
pub mod world;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

pub use eval::{priority_npc_ahead, priority_peds_ahead, ForwardPath, SignalConfig, SignalEval};
pub use geometry::Vec2;
pub use registry::{ArgKind, Lookup, SignalRegistry, SignalSpec, ValueKind};
pub use world::*;

/// A signal value. Booleans, numbers and enum tags are kept apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Num(f64),
    Enum(String),
}

impl Value {
    pub fn enumeration(tag: &str) -> Self {
        Value::Enum(tag.to_string())
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_enum(&self) -> Option<&str> {
        match self {
            Value::Enum(s) => Some(s),
            _ => None,
        }
    }
}

/// Valuation of signals at one time step.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Scene {
    pub valuation: BTreeMap<String, Value>,
}

impl Scene {
    pub fn get(&self, key: &str) -> Option<&Value> {
        self.valuation.get(key)
    }

    pub fn set(&mut self, key: impl Into<String>, v: Value) {
        self.valuation.insert(key.into(), v);
    }

    pub fn with(mut self, key: impl Into<String>, v: Value) -> Self {
        self.set(key, v);
        self
    }
}

impl FromIterator<(String, Value)> for Scene {
    fn from_iter<I: IntoIterator<Item = (String, Value)>>(iter: I) -> Self {
        Scene { valuation: iter.into_iter().collect() }
    }
}

/// A non-empty sequence of scenes at uniform spacing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    scenes: Vec<Scene>,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("a trace needs at least one scene")]
    Empty,
    #[error("unknown signal `{0}`")]
    UnknownSignal(String),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Trace {
    pub fn new(scenes: Vec<Scene>) -> Result<Self, TraceError> {
        if scenes.is_empty() {
            return Err(TraceError::Empty);
        }
        Ok(Trace { scenes })
    }

    pub fn len(&self) -> usize {
        self.scenes.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.scenes.is_empty()
    }

    pub fn scenes(&self) -> &[Scene] {
        &self.scenes
    }

    pub fn scene(&self, t: usize) -> &Scene {
        &self.scenes[t]
    }

    /// Builds a trace with a single numeric signal.
    pub fn from_numbers(key: &str, values: &[f64]) -> Result<Self, TraceError> {
        Trace::new(values.iter().map(|v| Scene::default().with(key, Value::Num(*v))).collect())
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> Result<(), TraceError> {
        #[derive(Serialize)]
        struct Line<'a> {
            t: usize,
            signals: &'a Scene,
        }
        for (t, scene) in self.scenes.iter().enumerate() {
            serde_json::to_writer(&mut w, &Line { t, signals: scene }).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    /// Reads one `{"t": .., "signals": {..}}` object per line; `t` must count
    /// up from 0.
    pub fn read_jsonl(r: impl BufRead) -> Result<Self, TraceError> {
        #[derive(Deserialize)]
        struct Line {
            t: usize,
            signals: Scene,
        }
        let mut scenes = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line =
                serde_json::from_str(&line).map_err(|e| TraceError::Format { line: i + 1, msg: e.to_string() })?;
            if parsed.t != scenes.len() {
                return Err(TraceError::Format {
                    line: i + 1,
                    msg: format!("expected t = {}, found {}", scenes.len(), parsed.t),
                });
            }
            scenes.push(parsed.signals);
        }
        Trace::new(scenes)
    }
}

/// Computes exactly the `needed` signal keys for one world snapshot.
pub fn evaluate_signals(w: &WorldState, needed: &[String]) -> Result<Scene, TraceError> {
    evaluate_signals_with(w, needed, &SignalConfig::default())
}

pub fn evaluate_signals_with(w: &WorldState, needed: &[String], cfg: &SignalConfig) -> Result<Scene, TraceError> {
    let reg = SignalRegistry::global();
    let refs = needed
        .iter()
        .map(|k| reg.lookup_key(k).map(|(r, _)| r).ok_or_else(|| TraceError::UnknownSignal(k.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    w.validate()?;
    let ev = SignalEval::new(w, cfg);
    refs.iter().zip(needed).map(|(r, k)| Ok((k.clone(), ev.value(r)?))).collect()
}

pub fn trace_from_states(states: &[WorldState], needed: &[String]) -> Result<Trace, TraceError> {
    trace_from_states_with(states, needed, &SignalConfig::default())
}

pub fn trace_from_states_with(
    states: &[WorldState],
    needed: &[String],
    cfg: &SignalConfig,
) -> Result<Trace, TraceError> {
    let scenes = states.iter().map(|w| evaluate_signals_with(w, needed, cfg)).collect::<Result<_, _>>()?;
    Trace::new(scenes)
}
