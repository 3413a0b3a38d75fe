//! Acceptance criteria, one line per criterion. Run with
//! `cargo test -p wittforge-cli --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use wittforge::coeff_analysis::congruent_normal_form;
use wittforge::fontaine::{build_scenario_with, theta_of_a, Precision};
use wittforge::tower_rings::ScenarioTag;
use wittforge::witt_core::cache;
use wittforge::Result;
use wittforge_cli::report::Check;
use wittforge_cli::suites::{self, SuiteParams};

struct Outcome {
    pass: bool,
    details: String,
}

fn params(prime: Option<u64>, level: Option<u32>) -> SuiteParams {
    SuiteParams {
        prime,
        level,
        ..SuiteParams::default()
    }
}

/// Passes when every check whose name starts with one of `prefixes` passes,
/// and at least one such check ran.
fn select(checks: &[Check], prefixes: &[&str]) -> Outcome {
    let chosen: Vec<&Check> = checks
        .iter()
        .filter(|c| prefixes.iter().any(|p| c.name.starts_with(p)))
        .collect();
    let failed: Vec<String> = chosen
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{} ({})", c.name, c.details))
        .collect();
    let pass = !chosen.is_empty() && failed.is_empty();
    let details = if chosen.is_empty() {
        format!("no checks matched {prefixes:?}")
    } else if failed.is_empty() {
        format!("{} checks", chosen.len())
    } else {
        format!(
            "{} of {} checks failed: {}",
            failed.len(),
            chosen.len(),
            failed.join("; ")
        )
    };
    Outcome { pass, details }
}

fn detail_of(checks: &[Check], name: &str) -> String {
    checks
        .iter()
        .find(|c| c.name == name)
        .map(|c| {
            format!(
                "{} [{}]: {}",
                c.name,
                if c.pass { "pass" } else { "fail" },
                c.details
            )
        })
        .unwrap_or_else(|| format!("{name}: missing"))
}

fn within(o: Outcome, spent: Duration, limit: Duration) -> Outcome {
    if spent > limit {
        Outcome {
            pass: false,
            details: format!("{} but took {:.1?} (limit {:?})", o.details, spent, limit),
        }
    } else {
        o
    }
}

fn witt_oracle() -> Outcome {
    let mut checks = suites::witt_oracle(&params(Some(2), None));
    checks.extend(suites::witt_oracle(&params(Some(3), None)));
    select(&checks, &["witt-oracle/"])
}

fn ring_axioms() -> Outcome {
    select(
        &suites::ring_axioms(&params(Some(2), None)),
        &["ring-axioms/"],
    )
}

fn theta_hom() -> Outcome {
    select(&suites::theta_hom(&params(Some(2), None)), &["theta-hom/"])
}

fn division() -> Outcome {
    let mut checks = suites::division(&params(Some(2), Some(3)));
    checks.extend(suites::division(&params(Some(3), Some(2))));
    select(&checks, &["division/p=2/n=3/", "division/p=3/n=2/"])
}

fn level_one(checks: &[Check]) -> Outcome {
    select(
        checks,
        &[
            "examples/level-one/p=2",
            "examples/level-one/p=3",
            "examples/level-one/p=5",
        ],
    )
}

fn level_two(checks: &[Check]) -> Outcome {
    let mut o = select(
        checks,
        &[
            "examples/level-two/p=2",
            "examples/level-two/p=3",
            "examples/level-two-mod4/p=2",
        ],
    );
    o.details = format!(
        "{}; {}",
        o.details,
        detail_of(checks, "examples/level-two-negated-sum/p=3")
    );
    o
}

fn goodness() -> Outcome {
    let mut checks = suites::goodness(&params(Some(2), Some(3)));
    checks.extend(suites::goodness(&params(Some(3), Some(2))));
    select(&checks, &["goodness/p=2/n=", "goodness/p=3/n="])
}

fn types() -> Outcome {
    select(&suites::types(&params(Some(2), None)), &["types/"])
}

fn homogeneity() -> Outcome {
    select(
        &suites::goodness(&SuiteParams::default()),
        &["goodness/homogeneity/", "goodness/multinomial-bound/"],
    )
}

fn omega() -> Outcome {
    select(&suites::omega(&SuiteParams::default()), &["omega/"])
}

fn cyclotomic(checks: &[Check]) -> Outcome {
    let mut o = select(
        checks,
        &[
            "examples/cyclotomic/p=2",
            "examples/cyclotomic/p=3",
            "examples/cyclotomic/p=5",
        ],
    );
    o.details = format!(
        "{}; {}; {}",
        o.details,
        detail_of(checks, "examples/cyclotomic-root-difference/p=3"),
        detail_of(checks, "examples/cyclotomic-root-difference/p=5")
    );
    o
}

/// The coefficient at one guard step above the policy, pulled back to the
/// finer tower, against the policy coefficient.
fn same_after_bump(p: u64, n: u32) -> Result<bool> {
    let base = Precision::policy(n);
    let a = theta_of_a(&build_scenario_with(p, n, &ScenarioTag::SPlusT, base)?)?;
    let b = theta_of_a(&build_scenario_with(
        p,
        n,
        &ScenarioTag::SPlusT,
        base.bumped(),
    )?)?;
    let a = a.reindex(b.spec())?;
    Ok(congruent_normal_form(&a, &b, n))
}

fn guard_insensitivity(base_examples: &[Check]) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for (p, n) in [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (5, 1)] {
        match same_after_bump(p, n) {
            Ok(true) => {}
            Ok(false) => {
                pass = false;
                notes.push(format!("p={p} n={n} coefficient changed"));
            }
            Err(e) => {
                pass = false;
                notes.push(format!("p={p} n={n} error: {e}"));
            }
        }
    }
    // Criteria 5 to 7 again with every precision parameter raised by one:
    // each check must reach the same verdict as before.
    let bumped = SuiteParams {
        guard: 1,
        ..SuiteParams::default()
    };
    let again = suites::examples(&bumped);
    let mut good = suites::goodness(&SuiteParams {
        prime: Some(2),
        level: Some(3),
        guard: 1,
        ..SuiteParams::default()
    });
    good.extend(suites::goodness(&SuiteParams {
        prime: Some(3),
        level: Some(2),
        guard: 1,
        ..SuiteParams::default()
    }));
    let mut good_base = suites::goodness(&params(Some(2), Some(3)));
    good_base.extend(suites::goodness(&params(Some(3), Some(2))));
    for (before, after) in [(base_examples.to_vec(), again), (good_base, good)] {
        for c in &before {
            let Some(d) = after.iter().find(|d| d.name == c.name) else {
                pass = false;
                notes.push(format!("{} missing after bump", c.name));
                continue;
            };
            if d.pass != c.pass {
                pass = false;
                notes.push(format!("{} changed verdict after bump", c.name));
            }
        }
    }
    let details = if notes.is_empty() {
        "6 coefficients and all example/goodness verdicts unchanged".to_string()
    } else {
        notes.join("; ")
    };
    Outcome { pass, details }
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary cache directory");
    cache().set_dir(Some(dir.path().to_path_buf()));

    let mut results: Vec<(usize, &str, Outcome, Duration)> = Vec::new();
    let mut run =
        |k: usize, title: &'static str, limit: Option<u64>, f: &mut dyn FnMut() -> Outcome| {
            let start = Instant::now();
            let o = f();
            let spent = start.elapsed();
            let o = match limit {
                Some(s) => within(o, spent, Duration::from_secs(s)),
                None => o,
            };
            let tag = if o.pass { "PASS" } else { "FAIL" };
            println!(
                "[{tag}] criterion {k:>2}: {title} ({:.2}s): {}",
                spent.as_secs_f64(),
                o.details
            );
            results.push((k, title, o, spent));
        };

    let examples = suites::examples(&SuiteParams::default());
    run(1, "Witt oracle", Some(60), &mut witt_oracle);
    run(2, "ring axioms", Some(120), &mut ring_axioms);
    run(3, "theta homomorphism", Some(120), &mut theta_hom);
    run(4, "kernel division", Some(300), &mut division);
    run(5, "level-one coefficient", None, &mut || {
        level_one(&examples)
    });
    run(6, "level-two coefficient", None, &mut || {
        level_two(&examples)
    });
    run(7, "goodness", Some(600), &mut goodness);
    run(8, "types", None, &mut types);
    run(
        9,
        "homogeneity and multinomial bound",
        None,
        &mut homogeneity,
    );
    run(10, "differential layer", None, &mut omega);
    run(11, "cyclotomic coefficients", None, &mut || {
        cyclotomic(&examples)
    });
    run(12, "guard insensitivity", None, &mut || {
        guard_insensitivity(&examples)
    });

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "{} criteria, {} failed {:?}",
        results.len(),
        failed.len(),
        failed
    );
    cache().set_dir(None);
    drop(dir);
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
