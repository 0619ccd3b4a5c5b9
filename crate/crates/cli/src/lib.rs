//! Command implementations behind the `conc-ai` binary.
//!
//! Every command returns its report as a value; the binary only prints and
//! maps errors to exit codes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use conc_ai_core::analyses::{self, compare_values, unknown_text, Analysis, AnalysisResult, Precision, ReadTable, RunOptions};
use conc_ai_core::lang::{compile, Cfg};
use conc_ai_core::lattice::DEFAULT_VALUE_BOUND;
use conc_ai_core::solver::{SolveError, SolverConfig, DEFAULT_BUDGET};
use conc_ai_core::traces::{
    self, check_written, covers, enumerate_global, reads_of, trace_to_dot, ConcreteReads, TraceConfig, TraceError,
};

pub mod report;

pub use report::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_FAIL: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

pub const BUDGET_ENV: &str = "CONC_AI_BUDGET";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable, malformed or rejected input.
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Budget(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Budget(_) => EXIT_BUDGET,
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        CliError::Budget(e.to_string())
    }
}

/// A compiled program and its display name.
pub struct Program {
    pub name: String,
    pub cfg: Cfg,
}

pub fn load(path: &Path) -> Result<Program, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let cfg = compile(&text).map_err(|e| CliError::Input(format!("{}:{}: {}", path.display(), e.pos, e.message)))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(Program { name, cfg })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Settings {
    pub value_bound: usize,
    pub budget: u64,
    pub trace: TraceConfig,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { value_bound: DEFAULT_VALUE_BOUND, budget: DEFAULT_BUDGET, trace: TraceConfig::default() }
    }
}

impl Settings {
    /// Defaults with the solver budget taken from the environment if set.
    pub fn from_env() -> Result<Settings, CliError> {
        let mut s = Settings::default();
        if let Ok(v) = std::env::var(BUDGET_ENV) {
            s.budget = v.trim().parse().map_err(|_| CliError::Input(format!("{BUDGET_ENV}: not a number: {v}")))?;
        }
        Ok(s)
    }

    fn run_options(&self) -> RunOptions {
        RunOptions { k: self.value_bound, solver: SolverConfig { budget: self.budget, ..SolverConfig::default() } }
    }
}

/// Parses a comma-separated list of integers such as `0,1`.
pub fn parse_input_set(s: &str) -> Result<Vec<i64>, String> {
    let mut out: Vec<i64> = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        out.push(part.parse().map_err(|_| format!("not an integer: {part}"))?);
    }
    if out.is_empty() {
        return Err(String::from("input set is empty"));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Runs one analysis. With `trace`, every solver step is written to it as
/// `unknown deps changed`.
pub fn analyze(
    cfg: &Cfg,
    analysis: Analysis,
    settings: &Settings,
    trace: Option<&mut dyn std::io::Write>,
) -> Result<AnalysisResult, CliError> {
    let opts = settings.run_options();
    Ok(match trace {
        None => analyses::run(cfg, analysis, opts, &mut |_| {})?,
        Some(w) => analyses::run(cfg, analysis, opts, &mut |ev| {
            let _ = writeln!(w, "{}\t{}\t{}", unknown_text(cfg, ev.key), ev.deps, ev.changed);
        })?,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunFlags {
    pub dump_states: bool,
    pub timing: bool,
}

pub fn cmd_run(
    p: &Program,
    analysis: Analysis,
    settings: &Settings,
    flags: RunFlags,
    trace: Option<&mut dyn std::io::Write>,
) -> Result<(Report, AnalysisResult), CliError> {
    let start = Instant::now();
    let r = analyze(&p.cfg, analysis, settings, trace)?;
    let elapsed = start.elapsed();
    let mut rep = Report::new(&p.name, &p.cfg, &r);
    if flags.dump_states {
        rep = rep.with_states(&p.cfg, &r);
    }
    if flags.timing {
        rep.wall_ms = Some(elapsed.as_secs_f64() * 1e3);
    }
    Ok((rep, r))
}

pub fn report_table(rep: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "program {}  analysis {}", rep.program, rep.analysis);
    let w = rep.sites.iter().map(|x| x.id.len()).max().unwrap_or(4).max(4);
    let _ = writeln!(s, "{:w$}  {:>8}  value", "site", "location");
    for site in &rep.sites {
        let v = if site.reachable { value_text(&site.value) } else { String::from("unreachable") };
        let _ = writeln!(s, "{:w$}  {:>8}  {v}", site.id, site.location);
    }
    let _ = writeln!(
        s,
        "rhs evaluations {}  unknowns {}  restarts {}",
        rep.stats.rhs_evals, rep.stats.unknowns, rep.stats.restarts
    );
    if let Some(ms) = rep.wall_ms {
        let _ = writeln!(s, "wall time {ms:.3} ms");
    }
    for v in &rep.violations {
        let _ = writeln!(s, "violation: {v}");
    }
    s
}

/// Compact text for a value in JSON encoding.
pub fn value_text(v: &serde_json::Value) -> String {
    if v.get("top").is_some() {
        return String::from("⊤");
    }
    let items: Vec<String> = v
        .get("set")
        .and_then(|s| s.as_array())
        .map(|a| {
            a.iter()
                .map(|x| match x.get("tid") {
                    Some(t) => format!("tid {t}"),
                    None => x.to_string(),
                })
                .collect()
        })
        .unwrap_or_default();
    format!("{{{}}}", items.join(","))
}

/// Runs `analyses` concurrently and compares them site by site.
pub fn cmd_compare(p: &Program, analyses: &[Analysis], settings: &Settings) -> Result<Comparison, CliError> {
    let results: Vec<Result<AnalysisResult, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> =
            analyses.iter().map(|a| s.spawn(move || analyze(&p.cfg, *a, settings, None))).collect();
        handles.into_iter().map(|h| h.join().expect("analysis thread panicked")).collect()
    });
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(compare_results(&p.name, &results))
}

pub fn compare_results(program: &str, results: &[AnalysisResult]) -> Comparison {
    let names: Vec<String> = results.iter().map(|r| r.analysis.name().to_string()).collect();
    let mut summary: BTreeMap<String, Standing> = names.iter().map(|n| (n.clone(), Standing::default())).collect();
    let mut sites = Vec::new();
    let mut relation = BTreeMap::new();
    let mut no_best = 0;
    let ids: Vec<String> = results.first().map(|r| r.reads.keys().cloned().collect()).unwrap_or_default();
    for id in ids {
        let vals: Vec<Option<_>> = results.iter().map(|r| r.reads.get(&id).cloned().flatten()).collect();
        let m: Vec<Vec<Precision>> =
            vals.iter().map(|a| vals.iter().map(|b| compare_values(a, b)).collect()).collect();
        let best: Vec<usize> = (0..vals.len())
            .filter(|i| m[*i].iter().all(|p| matches!(p, Precision::Less | Precision::Equal)))
            .collect();
        let strict = best.len() == 1
            && (0..vals.len()).all(|j| j == best[0] || m[best[0]][j] == Precision::Less);
        if best.is_empty() {
            no_best += 1;
        }
        for i in &best {
            let st = summary.get_mut(&names[*i]).expect("named");
            if strict {
                st.strictly_best += 1;
            } else {
                st.tied_best += 1;
            }
        }
        sites.push(CompareSite {
            id: id.clone(),
            values: names
                .iter()
                .zip(&vals)
                .map(|(n, v)| (n.clone(), v.as_ref().map(value_json).unwrap_or(serde_json::Value::Null)))
                .collect(),
            matrix: m.iter().map(|row| row.iter().map(|p| p.symbol().to_string()).collect()).collect(),
        });
        relation.insert(id, m);
    }
    Comparison { program: program.to_string(), analyses: names, sites, summary, no_best, relation }
}

pub fn comparison_table(c: &Comparison) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "program {}", c.program);
    let _ = writeln!(s, "columns in row order: {}", c.analyses.join(" "));
    for site in &c.sites {
        let _ = writeln!(s, "{}", site.id);
        for (n, row) in c.analyses.iter().zip(&site.matrix) {
            let v = match &site.values[n] {
                serde_json::Value::Null => String::from("unreachable"),
                v => value_text(v),
            };
            let _ = writeln!(s, "  {n:>14}  {}  {v}", row.join(" "));
        }
    }
    let _ = writeln!(s, "summary");
    for (n, st) in &c.summary {
        let _ = writeln!(s, "  {n:>14}  strictly best {}  tied best {}", st.strictly_best, st.tied_best);
    }
    let _ = writeln!(s, "  sites without a best analysis {}", c.no_best);
    s
}

/// Concrete values at each site not covered by `reads`.
pub fn soundness_violations(name: &str, concrete: &ConcreteReads, reads: &ReadTable) -> Vec<Counterexample> {
    let mut out = Vec::new();
    for (site, vals) in concrete {
        let abs = reads.get(site).cloned().flatten();
        for v in vals {
            if !abs.as_ref().is_some_and(|a| covers(a, v)) {
                out.push(Counterexample {
                    analysis: name.to_string(),
                    site: site.clone(),
                    value: concrete_json(v),
                    abstract_value: abs.as_ref().map(value_json).unwrap_or(serde_json::Value::Null),
                    trace: None,
                });
            }
        }
    }
    out
}

fn trace_error(e: TraceError) -> CliError {
    match e {
        TraceError::Solver(e) => e.into(),
        e => CliError::Input(e.to_string()),
    }
}

/// Checks every analysis against the enumerated concrete reads. With
/// `dump`, one DOT file per trace is written there and counterexamples
/// name the file of a witnessing trace.
pub fn cmd_oracle(
    p: &Program,
    analyses: &[Analysis],
    settings: &Settings,
    dump: Option<&Path>,
) -> Result<OracleReport, CliError> {
    let cfg = &p.cfg;
    check_written(cfg).map_err(trace_error)?;
    let mut rep = OracleReport {
        program: p.name.clone(),
        verdict: Verdict::Pass,
        bound: settings.trace.bound,
        traces: 0,
        truncated: false,
        analyses: analyses.iter().map(|a| a.name().to_string()).collect(),
        concrete: BTreeMap::new(),
        counterexamples: Vec::new(),
        reason: None,
    };
    let all = match enumerate_global(cfg, settings.trace.clone()) {
        Ok(all) => all,
        Err(TraceError::Cap { cap }) => {
            rep.verdict = Verdict::Inconclusive;
            rep.reason = Some(format!("more than {cap} traces"));
            return Ok(rep);
        }
        Err(e) => return Err(trace_error(e)),
    };
    rep.traces = all.len();
    rep.truncated = all.truncated(cfg, settings.trace.bound);
    let concrete = reads_of(cfg, all.traces.iter());
    rep.concrete = concrete.iter().map(|(k, v)| (k.clone(), v.iter().map(concrete_json).collect())).collect();
    let ordered: Vec<&traces::LocalTrace> = all.traces.iter().collect();
    if let Some(dir) = dump {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
        for (i, t) in ordered.iter().enumerate() {
            let path = dir.join(format!("trace-{i:05}.dot"));
            std::fs::write(&path, trace_to_dot(cfg, t, &format!("trace {i}")))
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        }
    }
    for a in analyses {
        let r = analyze(cfg, *a, settings, None)?;
        for v in &r.violations {
            rep.counterexamples.push(Counterexample {
                analysis: a.name().to_string(),
                site: format!("constraint {} -> {}", v.constraint, v.unknown),
                value: serde_json::Value::Null,
                abstract_value: serde_json::Value::Null,
                trace: None,
            });
        }
        let mut found = soundness_violations(a.name(), &concrete, &r.reads);
        if let Some(dir) = dump {
            let sites: BTreeMap<String, _> = cfg.read_sites().into_iter().map(|s| (s.id.clone(), s)).collect();
            for c in &mut found {
                let s = &sites[&c.site];
                let idx = ordered.iter().position(|t| {
                    t.last() == Some(s.edge) && concrete_json(&t.sink().state[s.x.0 as usize]) == c.value
                });
                c.trace = idx.map(|i| dir.join(format!("trace-{i:05}.dot")).display().to_string());
            }
        }
        rep.counterexamples.extend(found);
    }
    if !rep.counterexamples.is_empty() {
        rep.verdict = Verdict::Fail;
    }
    Ok(rep)
}

pub fn oracle_table(r: &OracleReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "program {}  bound {}  traces {}", r.program, r.bound, r.traces);
    if r.truncated {
        let _ = writeln!(s, "some runs were cut off by the bound");
    }
    for (site, vals) in &r.concrete {
        let vs: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "  {site}  {{{}}}", vs.join(","));
    }
    for c in &r.counterexamples {
        let _ = writeln!(
            s,
            "counterexample: {} at {}: {} not in {}{}",
            c.analysis,
            c.site,
            c.value,
            c.abstract_value,
            c.trace.as_ref().map(|t| format!(" ({t})")).unwrap_or_default()
        );
    }
    if let Some(reason) = &r.reason {
        let _ = writeln!(s, "{reason}");
    }
    let verdict = match r.verdict {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::Inconclusive => "INCONCLUSIVE",
    };
    let _ = writeln!(s, "{verdict}");
    s
}

pub fn verdict_exit(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => EXIT_OK,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

/// All traces as DOT graphs, one per trace.
pub fn traces_dot(p: &Program, settings: &Settings) -> Result<String, CliError> {
    let all = enumerate_global(&p.cfg, settings.trace.clone()).map_err(trace_error)?;
    let mut s = String::new();
    for (i, t) in all.traces.iter().enumerate() {
        s.push_str(&trace_to_dot(&p.cfg, t, &format!("trace {i}")));
    }
    Ok(s)
}

pub fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}
