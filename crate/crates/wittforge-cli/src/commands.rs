use std::time::Instant;

use serde_json::{json, Value};
use wittforge::coeff_analysis::{cyclotomic_order, goodness_check};
use wittforge::fontaine::{build_scenario_with, multiply_back, scenario_quotient, theta};
use wittforge::witt_core::{cache, CacheStatus};
use wittforge::{Error, Result};

use crate::config::{Command, RunConfig};
use crate::exit;
use crate::report::{coefficient_json, goodness_json, write_atomic, Check, Report};
use crate::suites::{run_suite, SuiteParams};

pub fn config_json(cfg: &RunConfig) -> Value {
    let path = |p: &Option<std::path::PathBuf>| p.as_ref().map(|p| p.display().to_string());
    let mut v = json!({
        "command": cfg.command,
        "prime": cfg.prime,
        "level": cfg.level,
        "scenario": cfg.scenario.name(),
        "depth": cfg.depth,
        "height": cfg.height,
        "guard": cfg.guard,
        "suite": cfg.suite.map(|s| s.name()),
    });
    if cfg.command == Command::CacheBuild {
        v["max_index"] = json!(cfg.max_index);
    }
    if matches!(
        cfg.command,
        Command::CacheBuild | Command::CacheList | Command::CacheValidate
    ) {
        v["cache"] = json!(path(&cfg.cache));
    }
    v
}

/// Runs one validated configuration. Returns the report and the exit code.
pub fn run(cfg: &RunConfig) -> Result<(Report, i32)> {
    cache().set_dir(cfg.cache.clone());
    let start = Instant::now();
    let out = match cfg.command {
        Command::Coeff => cmd_coeff(cfg),
        Command::Verify => Ok(cmd_verify(cfg)),
        _ => cmd_cache(cfg),
    }?;
    eprintln!("elapsed: {:.2} s", start.elapsed().as_secs_f64());
    if let Some(path) = &cfg.json {
        write_atomic(path, out.0.to_json().as_bytes())?;
    }
    Ok(out)
}

pub fn cmd_coeff(cfg: &RunConfig) -> Result<(Report, i32)> {
    let (p, n) = (cfg.coeff_prime(), cfg.coeff_level());
    let prec = cfg.precision(n)?;
    let sc = build_scenario_with(p, n, &cfg.scenario, prec)?;
    let a = scenario_quotient(&sc)?;
    let th = theta(&a, n)?.from_x_adic()?;
    let good = goodness_check(&th, n)?;
    let mb = multiply_back(&a, &sc.b, &sc.pflat)?;

    let mut r = Report::new(config_json(cfg));
    r.push(Check::new(
        "multiply-back",
        mb.all_within(),
        format!(
            "([p♭]-p) A = B at {} reliable coordinates",
            mb.entries.len()
        ),
    ));
    r.push(Check::new(
        "goodness",
        good.verdict,
        good.lattice_desc.clone(),
    ));
    r.coefficient = Some(coefficient_json(&th, n));
    r.goodness = Some(goodness_json(&good));
    r.text.push(format!(
        "prime {p}, level {n}, scenario {}",
        cfg.scenario.name()
    ));
    r.text.push(format!(
        "precision: depth {}, height {}, modulus exponent {}",
        prec.depth, prec.height, prec.modulus
    ));
    r.text.push(format!(
        "coefficient a_{n} mod {p}^{n} ({} terms):",
        th.len()
    ));
    r.text
        .extend(th.to_rational_lines().into_iter().map(|l| format!("  {l}")));
    if sc.spec.is_cyclotomic() {
        let order = cyclotomic_order(&th)?;
        r.text.push(format!(
            "order mod p: {}",
            order.map_or("undefined".into(), |q| q.to_string())
        ));
        if let Some(c) = r.coefficient.as_mut() {
            c["order"] = json!(order.map(|q| q.to_string()));
        }
    }
    match (&good.witness, good.lattice_form()) {
        (None, Some(form)) => {
            r.text.push(format!(
                "goodness: good, a_{n} lies in {}",
                good.lattice_desc
            ));
            let gens = good.lattice_generators();
            for (e, c) in form {
                let mut parts = vec![c.to_string()];
                for (g, k) in gens.iter().zip(e) {
                    match k {
                        0 => {}
                        1 => parts.push(g.clone()),
                        _ => parts.push(format!("({g})^{k}")),
                    }
                }
                r.text.push(format!("  {}", parts.join(" * ")));
            }
        }
        (Some(m), _) => r
            .text
            .push(format!("goodness: not good, witness {}", th.mono_string(m))),
        _ => {}
    }
    let code = if r.passed { exit::OK } else { exit::VERIFY };
    Ok((r, code))
}

pub fn cmd_verify(cfg: &RunConfig) -> (Report, i32) {
    let suite = cfg.suite.expect("validated");
    let params = SuiteParams {
        prime: cfg.prime,
        level: cfg.level,
        depth: cfg.depth,
        height: cfg.height,
        guard: cfg.guard,
    };
    let mut r = Report::new(config_json(cfg));
    r.text.push(format!("suite {}", suite.name()));
    for c in run_suite(suite, &params) {
        r.push(c);
    }
    let corrupt = r
        .checks
        .iter()
        .any(|c| matches!(c.error, Some(Error::CacheCorrupt(_))));
    let code = if corrupt {
        exit::CACHE
    } else if r.passed {
        exit::OK
    } else {
        exit::VERIFY
    };
    (r, code)
}

pub fn cmd_cache(cfg: &RunConfig) -> Result<(Report, i32)> {
    let dir = cfg.cache.clone().expect("validated");
    let mut r = Report::new(config_json(cfg));
    let mut code = exit::OK;
    let name = |p: &std::path::Path| {
        p.file_name()
            .map_or(String::new(), |n| n.to_string_lossy().into_owned())
    };
    match cfg.command {
        Command::CacheBuild => {
            let p = cfg.prime.expect("validated");
            for f in cache().build(p, cfg.max_index)? {
                r.text.push(format!("built {}", name(&f)));
            }
        }
        Command::CacheList => {
            if !dir.is_dir() {
                return Err(Error::Config(format!(
                    "cache directory {} does not exist",
                    dir.display()
                )));
            }
            for f in cache().list()? {
                r.text.push(name(&f));
            }
        }
        _ => {
            if !dir.is_dir() {
                return Err(Error::Config(format!(
                    "cache directory {} does not exist",
                    dir.display()
                )));
            }
            for (path, status) in cache().validate()? {
                let ok = status == CacheStatus::Ok;
                let detail = match status {
                    CacheStatus::Ok => "matches recomputation".to_string(),
                    CacheStatus::Corrupt(why) => {
                        format!("corrupt cache file {}: {why}", path.display())
                    }
                };
                r.push(Check::new(name(&path), ok, detail));
            }
            if !r.passed {
                code = exit::CACHE;
            }
        }
    }
    Ok((r, code))
}
