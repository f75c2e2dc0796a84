//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero if
//! any criterion fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use recset::analyzer::{
    check_closed_recurrence_set, check_recurrence_set, check_refinement, decide, Decision,
    Position, SuccessorSetView, Verdict,
};
use recset::engine::{
    compile, Automaton, BoolOp, Budget, Limits, TrackAssignment, TreeAutomaton, WordAutomaton,
};
use recset::logic::{parse_formula, parse_rule, pretty_print, Logic, Node, Rule, Var};
use recset::oracle::{eval_bounded, simulate_with, TraceEnd};
use recset_cli::Report;
use support::{
    all_trees, all_words, exact_bounds, subsets, tree_positions, valuations, word_positions,
    FormulaGen,
};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn examples_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../rules/examples")
}

fn load(name: &str) -> Rule {
    parse_rule(&std::fs::read_to_string(examples_dir().join(format!("{name}.rule"))).unwrap())
        .unwrap()
}

fn set(r: &Rule, lit: &str) -> BTreeSet<Position> {
    Position::parse_set(lit, r.logic).unwrap()
}

fn run_decide(name: &str, extra: &[&str]) -> (Option<i32>, Report, Duration) {
    let path = examples_dir().join(format!("{name}.rule"));
    let started = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_recset"))
        .arg("decide")
        .arg("--json")
        .args(extra)
        .arg(&path)
        .output()
        .unwrap();
    let elapsed = started.elapsed();
    let text = String::from_utf8_lossy(&o.stdout);
    let report = serde_json::from_str(text.trim()).unwrap_or_else(|e| {
        panic!(
            "{name}: bad report `{text}`: {e}; stderr {}",
            String::from_utf8_lossy(&o.stderr)
        )
    });
    (o.status.code(), report, elapsed)
}

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn golden_examples() -> Outcome {
    let expected: [(&str, &str, Option<&str>); 9] = [
        ("ex1", "terminates", None),
        ("ex2", "loops", Some("3,4")),
        ("ex3", "unknown", None),
        ("ex4", "unknown", None),
        ("ex5", "loops", Some("0")),
        ("ex6", "loops", Some("e,1")),
        ("ex7", "loops", None),
        ("ex8", "unknown", None),
        ("ex9", "loops", Some("e")),
    ];
    let mut timings = vec![];
    for (name, verdict, witness) in expected {
        let r = load(name);
        let (code, report, took) = run_decide(name, &[]);
        let limit = if matches!(name, "ex5" | "ex9") {
            60
        } else {
            10
        };
        ensure(took < Duration::from_secs(limit), || {
            format!("{name} took {took:?}")
        })?;
        ensure(report.verdict == verdict, || format!("{name}: {report:?}"))?;
        ensure(code == Some(recset_cli::verdict_code(verdict)), || {
            format!("{name}: exit {code:?}")
        })?;
        if verdict == "unknown" {
            ensure(
                report.reason.as_deref() == Some("InfiniteStartSetNoFiniteRecurrence"),
                || format!("{name}: reason {:?}", report.reason),
            )?;
        }
        if let Some(w) = &report.witness {
            let got = set(&r, &w.join(","));
            ensure(
                check_recurrence_set(&r, &got, Limits::default()).unwrap(),
                || format!("{name}: {w:?} fails"),
            )?;
            if let Some(lit) = witness {
                ensure(got == set(&r, lit), || {
                    format!("{name}: witness {w:?}, expected {{{lit}}}")
                })?;
            }
        }
        timings.push(format!("{name} {}ms", took.as_millis()));
    }
    let (r6, r6b, r7) = (load("ex6"), load("ex6_refined"), load("ex7"));
    let x6 = set(&r6, "e,1");
    ensure(
        check_recurrence_set(&r6, &x6, Limits::default()).unwrap(),
        || "ex6 {e,1} not open".into(),
    )?;
    ensure(
        !check_closed_recurrence_set(&r6, &x6, Limits::default()).unwrap(),
        || "ex6 {e,1} closed".into(),
    )?;
    ensure(
        check_closed_recurrence_set(&r6b, &x6, Limits::default()).unwrap(),
        || "ex6' {e,1} not closed".into(),
    )?;
    let x7 = set(&r7, "11,000,001,011");
    ensure(
        check_recurrence_set(&r7, &x7, Limits::default()).unwrap(),
        || "ex7 set not open".into(),
    )?;
    ensure(
        check_closed_recurrence_set(&r7, &x7, Limits::default()).unwrap(),
        || "ex7 set not closed".into(),
    )?;
    Ok(timings.join(", "))
}

fn oracle_disagreements(logic: Logic, seeds: u64, depth: usize) -> Result<usize, String> {
    let tracks = TrackAssignment::new([Var::first("x"), Var::first("y"), Var::second("X")]);
    let budget = Budget::default();
    let bounds = exact_bounds(logic);
    let mut checked = 0;
    for seed in 0..seeds {
        let f = FormulaGen::new(logic, seed).formula(depth);
        let text = pretty_print(&f);
        match logic {
            Logic::Ws1s => {
                let a: WordAutomaton =
                    compile(&f, &tracks, &budget).map_err(|e| format!("{text}: {e}"))?;
                for v in valuations(&f, &word_positions()) {
                    ensure(a.accepts(&v) == eval_bounded(&f, &v, bounds), || {
                        format!("{text} under {v:?}")
                    })?;
                    checked += 1;
                }
            }
            Logic::Ws2s => {
                let a: TreeAutomaton =
                    compile(&f, &tracks, &budget).map_err(|e| format!("{text}: {e}"))?;
                for v in valuations(&f, &tree_positions()) {
                    ensure(a.accepts(&v) == eval_bounded(&f, &v, bounds), || {
                        format!("{text} under {v:?}")
                    })?;
                    checked += 1;
                }
            }
        }
    }
    Ok(checked)
}

fn engine_oracle_equivalence() -> Outcome {
    let words = oracle_disagreements(Logic::Ws1s, 500, 5)?;
    let trees = oracle_disagreements(Logic::Ws2s, 200, 4)?;
    Ok(format!("500 WS1S formulas / {words} valuations, 200 WS2S formulas / {trees} valuations, 0 disagreements"))
}

fn word_formula(text: &str) -> WordAutomaton {
    let tracks = TrackAssignment::new([Var::first("x"), Var::first("y"), Var::second("X")]);
    compile(
        &parse_formula(text, Logic::Ws1s).unwrap(),
        &tracks,
        &Budget::default(),
    )
    .unwrap()
}

fn tree_formula(text: &str) -> TreeAutomaton {
    let tracks = TrackAssignment::new([Var::first("x"), Var::second("X")]);
    compile(
        &parse_formula(text, Logic::Ws2s).unwrap(),
        &tracks,
        &Budget::default(),
    )
    .unwrap()
}

fn automata_algebra() -> Outcome {
    let budget = Budget::default();
    let tracks = TrackAssignment::new([Var::first("x"), Var::first("y"), Var::second("X")]);
    let autos: Vec<WordAutomaton> = (0..40)
        .map(|seed| {
            compile(
                &FormulaGen::new(Logic::Ws1s, seed).formula(4),
                &tracks,
                &budget,
            )
            .unwrap()
        })
        .collect();
    let words = all_words(3, 6);
    let mut checks = 0usize;
    for (i, a) in autos.iter().enumerate() {
        let c = a.complement(&budget).unwrap();
        ensure(c.complement(&budget).unwrap() == *a, || {
            format!("complement involution, seed {i}")
        })?;
        ensure(a.minimize() == *a, || {
            format!("minimize not idempotent, seed {i}")
        })?;
        ensure(a.is_padding_saturated(), || format!("padding, seed {i}"))?;
        checks += 3;
    }
    for pair in autos[..10].chunks(2) {
        let and = pair[0].product(&pair[1], BoolOp::And, &budget).unwrap();
        let or = pair[0].product(&pair[1], BoolOp::Or, &budget).unwrap();
        for w in &words {
            let (p, q) = (pair[0].accepts_word(w), pair[1].accepts_word(w));
            ensure(
                and.accepts_word(w) == (p && q) && or.accepts_word(w) == (p || q),
                || format!("word product on {w:?}"),
            )?;
            let mut padded = w.clone();
            padded.push(0);
            ensure(pair[0].accepts_word(&padded) == p, || {
                format!("padding on {w:?}")
            })?;
            checks += 3;
        }
    }
    let trees = all_trees(2, 3);
    let ta = tree_formula("x < 01 | x in X");
    let tb = tree_formula("ex1 z: z = x.1 & ~(z in X)");
    let (tand, tor) = (
        ta.product(&tb, BoolOp::And, &budget).unwrap(),
        ta.product(&tb, BoolOp::Or, &budget).unwrap(),
    );
    ensure(
        ta.complement(&budget).unwrap().complement(&budget).unwrap() == ta,
        || "tree complement".into(),
    )?;
    ensure(
        ta.is_padding_saturated() && tb.is_padding_saturated(),
        || "tree padding".into(),
    )?;
    for t in &trees {
        let (p, q) = (ta.accepts_tree(t), tb.accepts_tree(t));
        ensure(
            tand.accepts_tree(t) == (p && q) && tor.accepts_tree(t) == (p || q),
            || format!("tree product on {t:?}"),
        )?;
        checks += 2;
    }
    let variants = [
        ("x < y & y < 2 => x < 2", "true"),
        ("~(x < y)", "y < x | x = y"),
        ("x <= y", "x < y | x = y"),
        ("all1 z: z in X", "false"),
        ("y = x + 2", "ex1 z: z = x + 1 & y = z + 1"),
        ("ex2 Y: x in Y & ~(y in Y)", "~(x = y)"),
    ];
    for (a, b) in variants {
        ensure(word_formula(a) == word_formula(b), || {
            format!("`{a}` and `{b}` minimize differently")
        })?;
        checks += 1;
    }
    ensure(
        tree_formula("x <= 0 | x = 1") == tree_formula("x = epsilon | x = 0 | x = 1"),
        || "tree variants".into(),
    )?;
    Ok(format!(
        "{checks} checks over {} words and {} trees",
        words.len(),
        trees.len()
    ))
}

fn generated_rules(logic: Logic, count: u64, depth: usize) -> Vec<Rule> {
    (0..count)
        .map(|seed| {
            Rule::new(
                "generated",
                logic,
                FormulaGen::new(logic, seed).rule_bodies().formula(depth),
            )
            .unwrap()
        })
        .collect()
}

fn corpus() -> Vec<Rule> {
    let mut rules: Vec<Rule> = [
        "ex1",
        "ex2",
        "ex3",
        "ex4",
        "ex5",
        "ex6",
        "ex6_refined",
        "ex7",
        "ex8",
        "ex9",
    ]
    .iter()
    .map(|n| load(n))
    .collect();
    rules.extend(generated_rules(Logic::Ws1s, 300, 4));
    rules.extend(generated_rules(Logic::Ws2s, 120, 3));
    rules
}

fn witness_simulation(rules: &[Rule]) -> Outcome {
    let mut loops = 0;
    for r in rules {
        let d =
            decide(r, Limits::default()).map_err(|e| format!("{}: {e}", pretty_print(&r.body)))?;
        let Verdict::Loops { witness } = d.verdict else {
            continue;
        };
        loops += 1;
        let view = SuccessorSetView::new(r, Limits::default()).unwrap();
        let start = *witness.iter().next().unwrap();
        let t = simulate_with(&view, start, 100, Some(&witness)).unwrap();
        ensure(t.end == TraceEnd::Truncated && t.steps() == 100, || {
            format!("{}: trace {t:?}", r.name)
        })?;
        ensure(t.edges_hold(&view), || {
            format!("{}: broken edge", pretty_print(&r.body))
        })?;
        ensure(t.positions.iter().all(|p| witness.contains(p)), || {
            format!("{}: left witness", r.name)
        })?;
    }
    Ok(format!(
        "{loops} LOOPS verdicts, each with a 100-step trace inside its witness"
    ))
}

fn candidate_sets(r: &Rule) -> Vec<BTreeSet<Position>> {
    let positions: Vec<Position> = match r.logic {
        Logic::Ws1s => (0..6).map(Position::Nat).collect(),
        Logic::Ws2s => Node::all_below(2)
            .into_iter()
            .chain([Node::parse_literal("11").unwrap()])
            .map(Position::Node)
            .collect(),
    };
    subsets(&positions)
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect()
}

fn definition_consistency(rules: &[Rule]) -> Outcome {
    let mut pairs = 0;
    let mut closed = 0;
    for r in rules {
        let mut sets = candidate_sets(r);
        if let Ok(Decision {
            verdict: Verdict::Loops { witness },
            ..
        }) = decide(r, Limits::default())
        {
            sets.push(witness);
        }
        for s in sets {
            let c = check_closed_recurrence_set(r, &s, Limits::default()).unwrap();
            let o = check_recurrence_set(r, &s, Limits::default()).unwrap();
            ensure(!c || o, || {
                format!(
                    "{}: {s:?} closed but not a recurrence set",
                    pretty_print(&r.body)
                )
            })?;
            pairs += 1;
            closed += c as usize;
        }
    }
    let (r6, r6b) = (load("ex6"), load("ex6_refined"));
    let x = set(&r6, "e,1");
    ensure(
        check_refinement(&r6, &r6b, &x, &x, Limits::default()).unwrap(),
        || "ex6 refinement rejected".into(),
    )?;
    Ok(format!(
        "{pairs} (rule, set) pairs, {closed} closed, 0 counterexamples; ex6 refinement valid"
    ))
}

fn resource_honesty() -> Outcome {
    let (code, report, _) = run_decide("ex5", &["--max-states", "100"]);
    let observed = format!(
        "exit {code:?}, verdict {}{}, peak states {}",
        report.verdict,
        report
            .witness
            .as_ref()
            .map(|w| format!(" {{{}}}", w.join(",")))
            .unwrap_or_default(),
        report.stats.peak_states
    );
    let wrong =
        report.verdict != "unknown" && report.witness.as_deref() != Some(&["0".to_string()][..]);
    ensure(!wrong, || {
        format!("wrong verdict under the cap: {observed}")
    })?;
    ensure(
        code == Some(2) && report.reason.as_deref() == Some("ResourceExceeded"),
        || {
            format!("expected exit 2 ResourceExceeded, got {observed}; no intermediate automaton exceeds 100 states")
        },
    )?;
    Ok(observed)
}

fn main() -> ExitCode {
    let rules = corpus();
    let criteria: Vec<Criterion> = vec![
        ("golden examples", Box::new(golden_examples)),
        (
            "engine-oracle equivalence",
            Box::new(engine_oracle_equivalence),
        ),
        ("automata algebra", Box::new(automata_algebra)),
        (
            "witness simulation",
            Box::new(|| witness_simulation(&rules)),
        ),
        (
            "definition consistency",
            Box::new(|| definition_consistency(&rules)),
        ),
        ("resource limits", Box::new(resource_honesty)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome =
            std::panic::catch_unwind(std::panic::AssertUnwindSafe(check)).unwrap_or_else(|p| {
                Err(p
                    .downcast_ref::<String>()
                    .cloned()
                    .unwrap_or_else(|| "panicked".into()))
            });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}) [{secs:.1}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why}) [{secs:.1}s]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
