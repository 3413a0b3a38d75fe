use std::path::PathBuf;

use serde::Serialize;
use wittforge::fontaine::Precision;
use wittforge::tower_rings::ScenarioTag;
use wittforge::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Coeff,
    Verify,
    CacheBuild,
    CacheList,
    CacheValidate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suite {
    WittOracle,
    RingAxioms,
    ThetaHom,
    Division,
    Examples,
    Goodness,
    Types,
    Omega,
    All,
}

impl Suite {
    pub const EACH: [Suite; 8] = [
        Suite::WittOracle,
        Suite::RingAxioms,
        Suite::ThetaHom,
        Suite::Division,
        Suite::Examples,
        Suite::Goodness,
        Suite::Types,
        Suite::Omega,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::WittOracle => "witt-oracle",
            Suite::RingAxioms => "ring-axioms",
            Suite::ThetaHom => "theta-hom",
            Suite::Division => "division",
            Suite::Examples => "examples",
            Suite::Goodness => "goodness",
            Suite::Types => "types",
            Suite::Omega => "omega",
            Suite::All => "all",
        }
    }

    pub fn parse(s: &str) -> Result<Suite> {
        Suite::EACH
            .iter()
            .copied()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Suite::EACH.iter().map(|x| x.name()).collect();
                Error::Config(format!(
                    "unknown suite '{s}' (expected one of {}, all)",
                    names.join(", ")
                ))
            })
    }
}

/// Raw option values as given on the command line.
#[derive(Clone, Debug, Default)]
pub struct RawOptions {
    pub prime: Option<u64>,
    pub level: Option<u32>,
    pub scenario: Option<String>,
    pub affine_s: Option<i64>,
    pub affine_t: Option<i64>,
    pub json: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub depth: Option<u32>,
    pub height: Option<u32>,
    pub guard: Option<u32>,
    pub suite: Option<String>,
    pub max_index: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub prime: Option<u64>,
    pub level: Option<u32>,
    pub scenario: ScenarioTag,
    pub json: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub depth: Option<u32>,
    pub height: Option<u32>,
    pub guard: u32,
    pub suite: Option<Suite>,
    pub max_index: usize,
}

fn is_prime(p: u64) -> bool {
    p >= 2
        && (2..)
            .take_while(|d| d * d <= p)
            .all(|d| !p.is_multiple_of(d))
}

impl RunConfig {
    /// Validates option combinations for `command`. `env_cache` is the value
    /// of `WITTFORGE_CACHE`, used when `--cache` is absent.
    pub fn from_raw(
        command: Command,
        raw: RawOptions,
        env_cache: Option<PathBuf>,
    ) -> Result<RunConfig> {
        let cfg_err = |m: &str| Err(Error::Config(m.to_string()));
        if let Some(p) = raw.prime {
            if !is_prime(p) {
                return Err(Error::Config(format!("--prime {p} is not prime")));
            }
        }
        if raw.level == Some(0) {
            return cfg_err("--level must be at least 1");
        }
        let scenario = match raw.scenario.as_deref().unwrap_or("s-plus-t") {
            "s-plus-t" => ScenarioTag::SPlusT,
            "cyclotomic" => ScenarioTag::Cyclotomic,
            "affine" => match (raw.affine_s, raw.affine_t) {
                (Some(s), Some(t)) => ScenarioTag::Affine { s, t },
                _ => return cfg_err("--scenario affine needs both --affine-s and --affine-t"),
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown scenario '{other}' (expected s-plus-t, affine or cyclotomic)"
                )))
            }
        };
        if !matches!(scenario, ScenarioTag::Affine { .. })
            && (raw.affine_s.is_some() || raw.affine_t.is_some())
        {
            return cfg_err("--affine-s/--affine-t only apply to --scenario affine");
        }
        let is_cache = matches!(
            command,
            Command::CacheBuild | Command::CacheList | Command::CacheValidate
        );
        let precision_given = raw.depth.is_some() || raw.height.is_some() || raw.guard.is_some();
        match command {
            Command::Coeff => {
                if raw.suite.is_some() {
                    return cfg_err("--suite only applies to verify");
                }
            }
            Command::Verify => {
                if raw.suite.is_none() {
                    return cfg_err("verify needs --suite");
                }
                if raw.scenario.is_some() {
                    return cfg_err("--scenario only applies to coeff");
                }
            }
            _ => {
                if raw.suite.is_some()
                    || raw.scenario.is_some()
                    || raw.level.is_some()
                    || precision_given
                {
                    return cfg_err("cache commands accept only --prime, --max-index and --cache");
                }
            }
        }
        if raw.max_index.is_some() && command != Command::CacheBuild {
            return cfg_err("--max-index only applies to cache build");
        }
        if command == Command::CacheBuild && raw.prime.is_none() {
            return cfg_err("cache build needs --prime");
        }
        if is_cache && command != Command::CacheBuild && raw.prime.is_some() {
            return cfg_err("--prime does not apply to cache list/validate");
        }
        let cache = raw.cache.or(env_cache);
        if is_cache && cache.is_none() {
            return cfg_err("no cache directory: pass --cache or set WITTFORGE_CACHE");
        }
        let suite = raw.suite.as_deref().map(Suite::parse).transpose()?;
        let cfg = RunConfig {
            command,
            prime: raw.prime,
            level: raw.level,
            scenario,
            json: raw.json,
            cache,
            depth: raw.depth,
            height: raw.height,
            guard: raw.guard.unwrap_or(0),
            suite,
            max_index: raw.max_index.unwrap_or(3),
        };
        if command == Command::Coeff {
            cfg.precision(cfg.coeff_level())?;
        }
        Ok(cfg)
    }

    pub fn coeff_prime(&self) -> u64 {
        self.prime.unwrap_or(2)
    }

    pub fn coeff_level(&self) -> u32 {
        self.level.unwrap_or(1)
    }

    /// Working precision at level `n` with the configured overrides.
    pub fn precision(&self, n: u32) -> Result<Precision> {
        Precision::with_overrides(n, self.depth, self.height, self.guard)
    }

    pub fn has_precision_overrides(&self) -> bool {
        self.depth.is_some() || self.height.is_some() || self.guard > 0
    }
}
