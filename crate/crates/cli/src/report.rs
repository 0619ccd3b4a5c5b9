//! Serializable reports.

use std::collections::BTreeMap;

use conc_ai_core::analyses::{AnalysisResult, Precision};
use conc_ai_core::lang::Cfg;
use conc_ai_core::lattice::{AbsVal, MinAntichain, ValueD};
use conc_ai_core::solver::SolverStats;
use conc_ai_core::traces::CVal;
use serde::Serialize;
use serde_json::{json, Value};

/// `{"top":true}` or `{"set":[...]}` with thread ids as `{"tid":n}`.
pub fn value_json(v: &ValueD) -> Value {
    match v {
        ValueD::Top => json!({ "top": true }),
        ValueD::Set(s) => {
            let items: Vec<Value> = s
                .iter()
                .map(|a| match a {
                    AbsVal::Int(i) => json!(i),
                    AbsVal::Tid(t) => json!({ "tid": t }),
                })
                .collect();
            json!({ "set": items })
        }
    }
}

/// Sorted list of sorted mutex-name lists.
pub fn antichain_json(cfg: &Cfg, f: &MinAntichain) -> Value {
    let mut sets: Vec<Vec<String>> = f
        .iter()
        .map(|s| {
            let mut names: Vec<String> = s.iter().map(|m| cfg.mutex_name(m).to_string()).collect();
            names.sort();
            names
        })
        .collect();
    sets.sort();
    json!(sets)
}

pub fn concrete_json(v: &CVal) -> Value {
    match v {
        CVal::Int(i) => json!(i),
        CVal::Tid(t) => json!({ "tid": t.to_string() }),
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Stats {
    pub rhs_evals: u64,
    pub unknowns: usize,
    pub restarts: usize,
}

impl From<SolverStats> for Stats {
    fn from(s: SolverStats) -> Self {
        Stats { rhs_evals: s.rhs_evals, unknowns: s.unknowns, restarts: s.restarts }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SiteRecord {
    pub id: String,
    pub location: String,
    pub local: String,
    pub global: String,
    pub reachable: bool,
    /// `null` for unreachable sites.
    pub value: Value,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct StateRecord {
    pub unknown: String,
    pub fields: BTreeMap<String, String>,
    pub sigma: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Report {
    pub program: String,
    pub analysis: String,
    pub sites: Vec<SiteRecord>,
    pub stats: Stats,
    pub violations: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<StateRecord>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub globals: Option<BTreeMap<String, Value>>,
}

impl Report {
    pub fn new(program: &str, cfg: &Cfg, r: &AnalysisResult) -> Report {
        let sites = cfg
            .read_sites()
            .into_iter()
            .map(|s| {
                let v = r.reads.get(&s.id).cloned().flatten();
                SiteRecord {
                    location: s.pos.to_string(),
                    local: cfg.local_name(s.x).to_string(),
                    global: cfg.global_name(s.g).to_string(),
                    reachable: v.is_some(),
                    value: v.as_ref().map(value_json).unwrap_or(Value::Null),
                    id: s.id,
                }
            })
            .collect();
        Report {
            program: program.to_string(),
            analysis: r.analysis.name().to_string(),
            sites,
            stats: r.stats.into(),
            violations: r.violations.iter().map(|v| format!("{} -> {}", v.constraint, v.unknown)).collect(),
            wall_ms: None,
            states: None,
            globals: None,
        }
    }

    /// Adds the solved states and global unknowns.
    pub fn with_states(mut self, cfg: &Cfg, r: &AnalysisResult) -> Report {
        let states = r
            .states
            .iter()
            .map(|s| StateRecord {
                unknown: format!("[{},{}]", s.node.0, conc_ai_core::analyses::lockset_text(cfg, s.lockset)),
                fields: s.fields.iter().cloned().collect(),
                sigma: s.sigma.iter().map(|(k, v)| (k.clone(), value_json(v))).collect(),
            })
            .collect();
        self.states = Some(states);
        self.globals = Some(r.globals.iter().map(|(k, v)| (k.clone(), value_json(v))).collect());
        self
    }
}

/// Listing of `unknown := value` lines, states in unknown order first.
pub fn state_listing(cfg: &Cfg, r: &AnalysisResult) -> Vec<String> {
    let mut lines = Vec::new();
    for s in &r.states {
        let mut parts: Vec<String> = s.fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
        parts.extend(s.sigma.iter().map(|(k, v)| format!("{k}↦{v}")));
        lines.push(format!(
            "[{},{}] := {}",
            s.node.0,
            conc_ai_core::analyses::lockset_text(cfg, s.lockset),
            parts.join(" ")
        ));
    }
    for (k, v) in &r.globals {
        lines.push(format!("{k} := {v}"));
    }
    lines
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CompareSite {
    pub id: String,
    pub values: BTreeMap<String, Value>,
    /// `matrix[i][j]` relates analysis `i` to analysis `j`.
    pub matrix: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct Standing {
    /// Sites where this analysis is strictly more precise than all others.
    pub strictly_best: usize,
    /// Sites where it is among several equally precise best results.
    pub tied_best: usize,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Comparison {
    pub program: String,
    pub analyses: Vec<String>,
    pub sites: Vec<CompareSite>,
    pub summary: BTreeMap<String, Standing>,
    /// Sites where no analysis is below all others.
    pub no_best: usize,
    #[serde(skip)]
    pub relation: BTreeMap<String, Vec<Vec<Precision>>>,
}

impl Comparison {
    /// Relation of analysis `a` to `b` at `site`.
    pub fn between(&self, site: &str, a: &str, b: &str) -> Option<Precision> {
        let i = self.analyses.iter().position(|x| x == a)?;
        let j = self.analyses.iter().position(|x| x == b)?;
        Some(self.relation.get(site)?[i][j])
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq, Copy)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Counterexample {
    pub analysis: String,
    pub site: String,
    pub value: Value,
    pub abstract_value: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct OracleReport {
    pub program: String,
    pub verdict: Verdict,
    pub bound: usize,
    pub traces: usize,
    /// Some run was cut off by the bound.
    pub truncated: bool,
    pub analyses: Vec<String>,
    pub concrete: BTreeMap<String, Vec<Value>>,
    pub counterexamples: Vec<Counterexample>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}
