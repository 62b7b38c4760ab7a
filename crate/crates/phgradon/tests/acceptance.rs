//! One pass/fail line per acceptance criterion, written to stderr so it shows without `--nocapture`.

use std::io::Write;

use phgradon::cli::{acceptance_invocation, run, ExperimentConfig, Verdict};
use serde_json::Value;

/// Tolerances used for every criterion, pinned here so that a change of defaults cannot loosen them.
const TOLERANCES: &[(&str, &str)] = &[
    ("tol_exponent", "1e-3"),
    ("tol_coefficient", "1e-6"),
    ("tol_anchor", "1e-10"),
    ("tol_absent", "1e-6"),
    ("tol_formula", "1e-4"),
    ("tol_mellin", "1e-6"),
    ("tol_functional", "1e-8"),
    ("tol_symmetry", "1e-8"),
];

const CRITERIA: [&str; 9] = [
    "radon exponent law",
    "radon coefficients",
    "backprojection cancellation",
    "backprojection log creation",
    "backprojection generic case",
    "normal operator log growth",
    "weighted normal operator smoothness",
    "mellin machinery",
    "index calculus properties",
];

/// Every `measured_over_formula` real part in a report, as (min, max).
fn formula_ratios(v: &Value, acc: &mut Vec<f64>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                if k == "measured_over_formula" {
                    if let Some(r) = x.get(0).and_then(Value::as_f64) {
                        acc.push(r);
                    }
                } else {
                    formula_ratios(x, acc);
                }
            }
        }
        Value::Array(a) => a.iter().for_each(|x| formula_ratios(x, acc)),
        _ => {}
    }
}

#[test]
fn acceptance() {
    let results: Vec<(Verdict, String, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = (1..=9u32)
            .map(|k| {
                s.spawn(move || {
                    let (exp, pairs) = acceptance_invocation(k).expect("criterion defined");
                    let mut all: Vec<(&str, &str)> = TOLERANCES.to_vec();
                    all.extend(pairs);
                    let cfg = ExperimentConfig::new(exp).with_pairs(&all).expect("valid config");
                    let rep = run(&cfg);
                    let worst = rep
                        .checks
                        .iter()
                        .filter(|c| c.verdict != Verdict::Pass)
                        .map(|c| format!("{}: value={:.3e} tol={:.1e}", c.name, c.value, c.tolerance))
                        .collect::<Vec<_>>()
                        .join("; ");
                    let worst = if worst.is_empty() { worst } else { format!(" {worst}") };
                    let mut ratios = Vec::new();
                    formula_ratios(&rep.measured, &mut ratios);
                    let note = if ratios.is_empty() {
                        String::new()
                    } else {
                        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
                        let hi = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                        format!(" measured/b(theta) in [{lo:.6}, {hi:.6}], compared against b(theta)/2")
                    };
                    (rep.verdict(), format!("{worst}{note}"), rep.elapsed_seconds)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("criterion panicked")).collect()
    });

    let mut failed = Vec::new();
    for (k, (verdict, worst, secs)) in results.iter().enumerate() {
        let ok = *verdict == Verdict::Pass;
        let _ = writeln!(
            std::io::stderr(),
            "criterion {} ({}): {} [{:?}, {:.1} s]{}",
            k + 1,
            CRITERIA[k],
            if ok { "PASS" } else { "FAIL" },
            verdict,
            secs,
            worst
        );
        if !ok {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
