use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use wittforge::coeff_analysis::GoodnessReport;
use wittforge::tower_rings::{Mono, RingElement};
use wittforge::{Error, Result, Q};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub details: String,
    /// The error that stopped the check, if any.
    #[serde(skip)]
    pub error: Option<Error>,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, details: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass,
            details: details.into(),
            error: None,
        }
    }

    /// A failed check carrying the error that prevented it from running.
    pub fn errored(name: impl Into<String>, e: &Error) -> Self {
        Check {
            name: name.into(),
            pass: false,
            details: format!("error: {e}"),
            error: Some(e.clone()),
        }
    }

    /// Runs `f`, turning an error into a failed check.
    pub fn run(name: impl Into<String>, f: impl FnOnce() -> Result<(bool, String)>) -> Self {
        let name = name.into();
        match f() {
            Ok((pass, details)) => Check {
                name,
                pass,
                details,
                error: None,
            },
            Err(e) => Check::errored(name, &e),
        }
    }
}

/// Everything printed or written by one run. Wall-clock timing is kept out
/// so that reports are byte-identical across runs.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub tool: String,
    pub version: String,
    pub config: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub goodness: Option<Value>,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(skip)]
    pub text: Vec<String>,
}

impl Report {
    pub fn new(config: Value) -> Self {
        Report {
            schema: SCHEMA,
            tool: "wittforge".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            coefficient: None,
            goodness: None,
            checks: Vec::new(),
            passed: true,
            text: Vec::new(),
        }
    }

    pub fn push(&mut self, c: Check) {
        self.passed &= c.pass;
        self.checks.push(c);
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("{} {}\n", self.tool, self.version);
        for l in &self.text {
            out.push_str(l);
            out.push('\n');
        }
        if !self.checks.is_empty() {
            out.push_str("checks:\n");
            for c in &self.checks {
                let tag = if c.pass { "pass" } else { "FAIL" };
                out.push_str(&format!("  [{tag}] {}: {}\n", c.name, c.details));
            }
            let failed = self.checks.iter().filter(|c| !c.pass).count();
            out.push_str(&format!(
                "{} checks, {} failed\n",
                self.checks.len(),
                failed
            ));
        }
        out
    }
}

fn rational(e: i64, d: i64) -> String {
    let r = Q::new(e, d);
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Exponents of a monomial as rationals in `p`, `T`, `S` (or `p`, `pi`).
pub fn mono_json(c: &RingElement, m: &Mono, coeff: &num_bigint::BigInt) -> Value {
    let spec = c.spec();
    let q = spec.q();
    if spec.is_cyclotomic() {
        json!({ "coeff": coeff.to_string(), "p": rational(m.x, q), "pi": m.a })
    } else {
        json!({
            "coeff": coeff.to_string(),
            "p": rational(m.x, q),
            "T": rational(m.a as i64, q),
            "S": rational(m.b as i64, q),
        })
    }
}

pub fn coefficient_json(c: &RingElement, level: u32) -> Value {
    let monomials: Vec<Value> = c.terms().iter().map(|(m, v)| mono_json(c, m, v)).collect();
    json!({
        "modulus": format!("p^{level}"),
        "terms": monomials.len(),
        "monomials": monomials,
        "text": c.to_rational_lines(),
    })
}

pub fn goodness_json(g: &GoodnessReport) -> Value {
    let lattice_form = g.lattice_form().map(|terms| {
        terms
            .into_iter()
            .map(|(e, c)| json!({ "coeff": c.to_string(), "exponents": e }))
            .collect::<Vec<_>>()
    });
    json!({
        "level": g.level,
        "verdict": g.verdict,
        "lattice": g.lattice_desc,
        "generators": g.lattice_generators(),
        "witness": g.witness.map(|m| g.coefficient.mono_string(&m)),
        "lattice_form": lattice_form,
    })
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |e: std::io::Error| Error::Config(format!("cannot write {}: {e}", path.display()));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}
