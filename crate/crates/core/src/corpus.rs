//! Bundled law specifications with matching scenario templates.

use crate::ast::{normalize, Formula};
use crate::parser::{parse_spec, ParseError, SpecFile};
use crate::sim::ScenarioTemplate;
use crate::violation::{theta, ThetaError};

pub struct CorpusEntry {
    /// Directory name, e.g. `law38`.
    pub name: &'static str,
    pub article: u32,
    pub source: &'static str,
    pub spec: SpecFile,
    /// Frozen size of the violation set.
    pub expected_theta: usize,
    pub template: ScenarioTemplate,
}

impl CorpusEntry {
    /// The law in core form, ready for `theta` and the monitor.
    pub fn law(&self) -> Formula {
        normalize(self.spec.law_formula())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{name}/spec.lb: {source}")]
    Parse { name: &'static str, source: ParseError },
    #[error("{name}/template.json: {source}")]
    Template { name: &'static str, source: serde_json::Error },
    #[error("{name}: {source}")]
    Theta { name: &'static str, source: ThetaError },
    #[error("{name}: violation set has {found} elements, expected {expected}")]
    ThetaSize { name: &'static str, found: usize, expected: usize },
}

struct Raw {
    name: &'static str,
    article: u32,
    spec: &'static str,
    template: &'static str,
    expected_theta: usize,
}

const RAW: &[Raw] = &[
    Raw {
        name: "law38",
        article: 38,
        spec: include_str!("../corpus/law38/spec.lb"),
        template: include_str!("../corpus/law38/template.json"),
        expected_theta: 9,
    },
    Raw {
        name: "law42",
        article: 42,
        spec: include_str!("../corpus/law42/spec.lb"),
        template: include_str!("../corpus/law42/template.json"),
        expected_theta: 4,
    },
    Raw {
        name: "law52",
        article: 52,
        spec: include_str!("../corpus/law52/spec.lb"),
        template: include_str!("../corpus/law52/template.json"),
        expected_theta: 2,
    },
];

/// Parses every entry and checks its violation-set size against the anchor.
pub fn load_corpus() -> Result<Vec<CorpusEntry>, CorpusError> {
    RAW.iter().map(load_one).collect()
}

fn load_one(r: &Raw) -> Result<CorpusEntry, CorpusError> {
    let spec = parse_spec(r.spec).map_err(|source| CorpusError::Parse { name: r.name, source })?;
    let template =
        ScenarioTemplate::from_json(r.template).map_err(|source| CorpusError::Template { name: r.name, source })?;
    let entry = CorpusEntry {
        name: r.name,
        article: r.article,
        source: r.spec,
        spec,
        expected_theta: r.expected_theta,
        template,
    };
    let found = theta(&entry.law()).map_err(|source| CorpusError::Theta { name: r.name, source })?.len();
    if found != r.expected_theta {
        return Err(CorpusError::ThetaSize { name: r.name, found, expected: r.expected_theta });
    }
    Ok(entry)
}

pub fn corpus_entry(name: &str) -> Result<Option<CorpusEntry>, CorpusError> {
    RAW.iter().find(|r| r.name == name).map(load_one).transpose()
}
