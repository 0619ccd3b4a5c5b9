use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use conc_ai::*;
use conc_ai_core::analyses::{
    read_table, solve_domain, Analysis, Ctx, Domain, Effect, ProtState, Protection, Reads,
};
use conc_ai_core::ids::{GlobalId, Lockset, MutexId};
use conc_ai_core::lang::reachable_locksets;
use conc_ai_core::lattice::{AbstractEnv, ValueD};
use conc_ai_core::solver::SolverConfig;
use conc_ai_core::traces::{concrete_read_table, enumerate_global, reads_of, TraceConfig};
use serde_json::{json, Value};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(format!("{name}.toy"))
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("conc-ai-test-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_conc-ai"));
    c.env_remove(BUDGET_ENV);
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn json_of(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn site_value(report: &Value, site: &str) -> Value {
    report["sites"].as_array().unwrap().iter().find(|s| s["id"] == site).unwrap()["value"].clone()
}

#[test]
fn run_reports_read_values() {
    let late = corpus("late-read");
    let p = run(&["run", late.to_str().unwrap(), "--analysis", "protection"]);
    assert_eq!(p.status.code(), Some(EXIT_OK));
    assert_eq!(site_value(&json_of(&p), "main:x=g"), json!({"set": [0, 17]}));
    let m = run(&["run", late.to_str().unwrap(), "--analysis", "mine"]);
    assert_eq!(site_value(&json_of(&m), "main:x=g"), json!({"set": [0, 17, 42]}));
}

#[test]
fn json_output_is_deterministic() {
    let f = corpus("write-beats-lock");
    for cmd in ["run", "compare", "oracle"] {
        let a = run(&[cmd, f.to_str().unwrap()]);
        let b = run(&[cmd, f.to_str().unwrap()]);
        assert_eq!(a.status.code(), Some(EXIT_OK), "{cmd}");
        assert_eq!(a.stdout, b.stdout, "{cmd}");
    }
}

#[test]
fn malformed_input_reports_location() {
    let d = scratch("bad");
    let f = d.join("bad.toy");
    std::fs::write(&f, "global g;\nthread main {\n  x = ;\n}\n").unwrap();
    let o = run(&["run", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_INPUT));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.toy:3:"), "{err}");
}

#[test]
fn missing_file_and_unknown_analysis_are_input_errors() {
    assert_eq!(run(&["run", "/nonexistent/p.toy"]).status.code(), Some(EXIT_INPUT));
    let unknown = run(&["oracle", corpus("late-read").to_str().unwrap(), "--analysis", "nope"]);
    assert_eq!(unknown.status.code(), Some(EXIT_INPUT));
    assert_eq!(run(&["--help"]).status.code(), Some(EXIT_OK));
}

#[test]
fn budget_exhaustion_exits_with_two() {
    let o = bin().env(BUDGET_ENV, "1").args(["run", corpus("late-read").to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(EXIT_BUDGET), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn compare_of_identical_analyses_ties_everywhere() {
    let o = run(&["compare", corpus("two-globals").to_str().unwrap(), "--analysis", "lock,lock"]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let c = json_of(&o);
    for site in c["sites"].as_array().unwrap() {
        for row in site["matrix"].as_array().unwrap() {
            assert!(row.as_array().unwrap().iter().all(|x| x == "="));
        }
    }
    assert_eq!(c["summary"]["lock"]["strictly_best"], 0);
}

#[test]
fn compare_table_relates_every_pair() {
    let p = load(&corpus("write-beats-lock")).unwrap();
    let c = cmd_compare(&p, &Analysis::ALL, &Settings::default()).unwrap();
    for a in &c.analyses {
        for b in &c.analyses {
            let ab = c.between("main:x=g", a, b).unwrap();
            assert_eq!(ab.flip(), c.between("main:x=g", b, a).unwrap());
        }
    }
    assert!(comparison_table(&c).contains("main:x=g"));
}

#[test]
fn oracle_with_small_bound_passes_truncated() {
    let o = run(&["oracle", corpus("loop").to_str().unwrap(), "--bound", "1"]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let r = json_of(&o);
    assert_eq!(r["verdict"], "PASS");
    assert_eq!(r["truncated"], true);
}

#[test]
fn oracle_dumps_one_file_per_trace() {
    let d = scratch("dump");
    let o = run(&["oracle", corpus("create-then-write").to_str().unwrap(), "--dump-traces", d.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let n = json_of(&o)["traces"].as_u64().unwrap() as usize;
    let files: Vec<_> = std::fs::read_dir(&d).unwrap().collect();
    assert_eq!(files.len(), n);
    let first = std::fs::read_to_string(d.join("trace-00000.dot")).unwrap();
    assert!(first.starts_with("digraph"));
}

#[test]
fn oracle_rejects_reads_of_unwritten_globals() {
    let d = scratch("unwritten");
    let f = d.join("p.toy");
    std::fs::write(&f, "global g;\nglobal h;\nthread main { g = 1; x = h; }\n").unwrap();
    assert_eq!(run(&["oracle", f.to_str().unwrap()]).status.code(), Some(EXIT_INPUT));
}

#[test]
fn dot_formats() {
    let f = corpus("create-then-write");
    let cfg = run(&["run", f.to_str().unwrap(), "--format", "dot"]);
    assert!(String::from_utf8_lossy(&cfg.stdout).starts_with("digraph"));
    let traces = run(&["oracle", f.to_str().unwrap(), "--format", "dot"]);
    assert!(String::from_utf8_lossy(&traces.stdout).matches("digraph").count() > 1);
}

#[test]
fn solver_trace_goes_to_stderr() {
    let o = run(&["run", corpus("late-read").to_str().unwrap(), "--trace-solver"]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.lines().count() > 1);
    assert!(err.lines().all(|l| l.split('\t').count() == 3), "{err}");
}

#[test]
fn input_set_changes_concrete_values() {
    let f = corpus("input");
    let concrete = |set: &str| {
        let o = run(&["oracle", f.to_str().unwrap(), "--input-set", set]);
        assert_eq!(o.status.code(), Some(EXIT_OK));
        json_of(&o)["concrete"]["main:x=g"].clone()
    };
    assert_eq!(concrete("0"), json!([0, 20]));
    assert_eq!(concrete("5"), json!([0, 10]));
    assert_eq!(concrete("0,1"), json!([0, 10, 20]));
    assert_eq!(run(&["oracle", f.to_str().unwrap(), "--input-set", "a"]).status.code(), Some(EXIT_INPUT));
}

/// Protection with the publishing side-effects of `unlock` dropped.
struct SilentUnlock(Protection);

impl Domain for SilentUnlock {
    type State = ProtState;

    fn name(&self) -> &'static str {
        "silent-unlock"
    }
    fn init(&self, cx: &Ctx<'_>) -> ProtState {
        self.0.init(cx)
    }
    fn join_into(&self, cx: &Ctx<'_>, acc: &mut ProtState, v: &ProtState) -> bool {
        self.0.join_into(cx, acc, v)
    }
    fn leq(&self, a: &ProtState, b: &ProtState) -> bool {
        self.0.leq(a, b)
    }
    fn sigma<'s>(&self, s: &'s ProtState) -> &'s AbstractEnv {
        self.0.sigma(s)
    }
    fn sigma_mut<'s>(&self, s: &'s mut ProtState) -> &'s mut AbstractEnv {
        self.0.sigma_mut(s)
    }
    fn thread_start(&self, cx: &Ctx<'_>, sigma: AbstractEnv) -> ProtState {
        self.0.thread_start(cx, sigma)
    }
    fn lock(&self, cx: &Ctx<'_>, s: &mut ProtState, held: Lockset, a: MutexId, r: &mut dyn Reads) -> Vec<Effect> {
        self.0.lock(cx, s, held, a, r)
    }
    fn unlock(&self, cx: &Ctx<'_>, s: &mut ProtState, held: Lockset, a: MutexId, r: &mut dyn Reads) -> Vec<Effect> {
        self.0.unlock(cx, s, held, a, r);
        Vec::new()
    }
    fn write(
        &self,
        cx: &Ctx<'_>,
        s: &mut ProtState,
        held: Lockset,
        g: GlobalId,
        v: &ValueD,
        r: &mut dyn Reads,
    ) -> Vec<Effect> {
        self.0.write(cx, s, held, g, v, r)
    }
    fn read(&self, cx: &Ctx<'_>, s: &ProtState, held: Lockset, g: GlobalId, r: &mut dyn Reads) -> ValueD {
        self.0.read(cx, s, held, g, r)
    }
    fn fields(&self, cx: &Ctx<'_>, s: &ProtState) -> Vec<(String, String)> {
        self.0.fields(cx, s)
    }
}

#[test]
fn broken_analysis_is_caught_with_a_witness() {
    let p = load(&corpus("late-read")).unwrap();
    let cfg = &p.cfg;
    let d = SilentUnlock(Protection::default());
    let cx = Ctx { cfg, k: 64 };
    let solved = solve_domain(&d, cx, &reachable_locksets(cfg), SolverConfig::default(), &mut |_| {}).unwrap();
    let reads = read_table(cfg, &solved.states, |s| d.sigma(s), cx.k);
    let concrete = concrete_read_table(cfg, TraceConfig::default()).unwrap();
    let found = soundness_violations(d.name(), &concrete, &reads);
    assert!(!found.is_empty(), "mutant went unnoticed");
    // every counterexample is backed by an enumerated trace
    let all = enumerate_global(cfg, TraceConfig::default()).unwrap();
    for c in &found {
        let witness = all.traces.iter().find(|t| {
            let r = reads_of(cfg, std::iter::once(*t));
            r.get(&c.site).is_some_and(|vs| vs.iter().any(|v| concrete_json(v) == c.value))
        });
        assert!(witness.is_some(), "no trace reads {} at {}", c.value, c.site);
    }
    // the unmutated analysis is clean on the same program
    let ok = analyze(cfg, Analysis::Protection, &Settings::default(), None).unwrap();
    assert!(soundness_violations("protection", &concrete, &ok.reads).is_empty());
}
