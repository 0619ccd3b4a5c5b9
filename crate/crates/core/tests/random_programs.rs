//! Invariants on small generated programs: every analysis covers the values
//! the bounded concrete semantics reads, the solutions pass the audit, and
//! the precision orderings between analyses hold.

use conc_ai_core::analyses::{run, Analysis, ReadTable, RunOptions};
use conc_ai_core::lang::compile;
use conc_ai_core::lattice::ValueD;
use conc_ai_core::traces::{concrete_read_table, covers, TraceConfig, TraceError};
use proptest::prelude::*;

#[derive(Clone, Debug)]
enum Stmt {
    Write(usize, i64),
    Read(usize),
    Copy(usize),
    Locked(usize, Vec<Stmt>),
    Branch(Vec<Stmt>, Vec<Stmt>),
}

const GLOBALS: [&str; 2] = ["g", "h"];
const MUTEXES: [&str; 2] = ["a", "b"];

fn stmt() -> impl Strategy<Value = Stmt> {
    let leaf = prop_oneof![
        ((0..2usize), (0..4i64)).prop_map(|(g, v)| Stmt::Write(g, v)),
        (0..2usize).prop_map(Stmt::Read),
        (0..2usize).prop_map(Stmt::Copy),
    ];
    leaf.prop_recursive(2, 6, 3, |inner| {
        prop_oneof![
            ((0..2usize), prop::collection::vec(inner.clone(), 1..3)).prop_map(|(m, b)| Stmt::Locked(m, b)),
            (prop::collection::vec(inner.clone(), 1..2), prop::collection::vec(inner, 0..2))
                .prop_map(|(t, e)| Stmt::Branch(t, e)),
        ]
    })
}

fn emit(s: &Stmt, out: &mut String, fresh: &mut usize) {
    match s {
        Stmt::Write(g, v) => out.push_str(&format!("{} = {v};\n", GLOBALS[*g])),
        Stmt::Read(g) => {
            *fresh += 1;
            out.push_str(&format!("r{fresh} = {};\n", GLOBALS[*g]));
        }
        Stmt::Copy(g) => {
            *fresh += 1;
            out.push_str(&format!("r{fresh} = {};\n{} = r{fresh} + 1;\n", GLOBALS[*g], GLOBALS[1 - *g]));
        }
        Stmt::Locked(m, body) => {
            out.push_str(&format!("lock({});\n", MUTEXES[*m]));
            for b in body {
                emit(b, out, fresh);
            }
            out.push_str(&format!("unlock({});\n", MUTEXES[*m]));
        }
        Stmt::Branch(t, e) => {
            *fresh += 1;
            out.push_str(&format!("c{fresh} = input();\nif (c{fresh}) {{\n"));
            for b in t {
                emit(b, out, fresh);
            }
            out.push_str("} else {\n");
            for b in e {
                emit(b, out, fresh);
            }
            out.push_str("}\n");
        }
    }
}

fn program(before: &[Stmt], after: &[Stmt], worker: &[Stmt]) -> String {
    let mut fresh = 0;
    let mut s = String::from("global g;\nglobal h;\nthread main {\ng = 0;\nh = 0;\n");
    for b in before {
        emit(b, &mut s, &mut fresh);
    }
    s.push_str("t = create(w);\n");
    for b in after {
        emit(b, &mut s, &mut fresh);
    }
    s.push_str("}\nthread w {\n");
    for b in worker {
        emit(b, &mut s, &mut fresh);
    }
    s.push_str("}\n");
    s
}

fn below(a: &Option<ValueD>, b: &Option<ValueD>) -> bool {
    let bot = ValueD::bottom();
    a.as_ref().unwrap_or(&bot).leq(b.as_ref().unwrap_or(&bot))
}

fn reads(r: &[(Analysis, ReadTable)], a: Analysis) -> &ReadTable {
    &r.iter().find(|(x, _)| *x == a).unwrap().1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn analyses_are_sound_and_ordered(
        before in prop::collection::vec(stmt(), 0..2),
        after in prop::collection::vec(stmt(), 1..3),
        worker in prop::collection::vec(stmt(), 1..3),
    ) {
        let src = program(&before, &after, &worker);
        let cfg = compile(&src).unwrap();
        let conf = TraceConfig { cap: 20_000, ..TraceConfig::default() };
        let concrete = match concrete_read_table(&cfg, conf) {
            Ok(c) => c,
            Err(TraceError::Cap { .. }) => return Ok(()),
            Err(e) => panic!("{e}\n{src}"),
        };
        let mut results = Vec::new();
        for a in Analysis::ALL {
            let r = run(&cfg, a, RunOptions::default(), &mut |_| {}).unwrap();
            prop_assert!(r.violations.is_empty(), "{a} audit failed\n{src}");
            for (site, vals) in &concrete {
                let abs = r.reads[site].as_ref();
                for v in vals {
                    prop_assert!(abs.is_some_and(|x| covers(x, v)), "{a} misses {v} at {site}\n{src}");
                }
            }
            results.push((a, r.reads));
        }
        let pairs = [
            (Analysis::Write, Analysis::Protection),
            (Analysis::Combined, Analysis::Lock),
            (Analysis::Combined, Analysis::Write),
        ];
        for (lo, hi) in pairs {
            for (site, v) in reads(&results, lo) {
                prop_assert!(below(v, &reads(&results, hi)[site]), "{lo} above {hi} at {site}\n{src}");
            }
        }
        prop_assert_eq!(reads(&results, Analysis::Protection), reads(&results, Analysis::ProtectionOtf), "{}", src);
    }
}
