//! Experiment configuration.
//!
//! The file is TOML restricted to flat dotted keys:
//!
//! ```text
//! problem.kind = "least_squares"
//! problem.n = 20
//! problem.d = 50
//! problem.seed = 1
//! sgd.m = 4
//! sgd.eta_rule = "quadratic_opt"
//! sgd.steps = 200
//! sgd.runs = 200
//! sgd.seed = 7
//! output.path = "curve.csv"
//! ```

use std::path::{Path, PathBuf};

use plsgd_core::problems::{ProblemKind, STANDARD_PROBE_COUNT};
use plsgd_core::sgd::EtaRule;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: RawProblem,
    sgd: RawSgd,
    output: RawOutput,
    #[serde(default)]
    probes: RawProbes,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    kind: String,
    n: usize,
    d: usize,
    seed: u64,
    k: Option<usize>,
    rank: Option<usize>,
    c: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSgd {
    m: usize,
    eta_rule: String,
    eta: Option<f64>,
    steps: usize,
    runs: usize,
    seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProbes {
    count: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    LeastSquares,
    ComposedLinear { k: usize, rank: usize },
    ComposedNonlinear { c: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub spec: ProblemSpec,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
}

impl ProblemConfig {
    pub fn kind(&self) -> ProblemKind {
        match self.spec {
            ProblemSpec::LeastSquares => ProblemKind::LeastSquares,
            ProblemSpec::ComposedLinear { .. } => ProblemKind::ComposedLinear,
            ProblemSpec::ComposedNonlinear { .. } => ProblemKind::ComposedNonlinear,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdSettings {
    pub m: usize,
    pub eta_rule: EtaRule,
    pub eta: Option<f64>,
    pub steps: usize,
    pub runs: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSettings {
    pub count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub problem: ProblemConfig,
    pub sgd: SgdSettings,
    pub probes: ProbeSettings,
    pub output: PathBuf,
}

fn field(name: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{name}: {msg}"))
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if cfg.output.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.output = dir.join(&cfg.output);
            }
        }
        Ok(cfg)
    }

    /// Parses and validates; relative output paths are kept as written.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(describe_toml_error(text, &e)))?;
        let p = raw.problem;
        let kind: ProblemKind = p.kind.parse().map_err(|e| field("problem.kind", e))?;
        if p.n == 0 {
            return Err(field("problem.n", "must be at least 1"));
        }
        if p.d == 0 {
            return Err(field("problem.d", "must be at least 1"));
        }
        let forbid = |present: bool, key: &str| {
            if present {
                Err(field(key, format!("not used by problem.kind = {kind}")))
            } else {
                Ok(())
            }
        };
        let spec = match kind {
            ProblemKind::LeastSquares => {
                forbid(p.k.is_some(), "problem.k")?;
                forbid(p.rank.is_some(), "problem.rank")?;
                forbid(p.c.is_some(), "problem.c")?;
                ProblemSpec::LeastSquares
            }
            ProblemKind::ComposedLinear => {
                forbid(p.c.is_some(), "problem.c")?;
                let k = p.k.ok_or_else(|| field("problem.k", "required for composed_linear"))?;
                let rank = p
                    .rank
                    .ok_or_else(|| field("problem.rank", "required for composed_linear"))?;
                ProblemSpec::ComposedLinear { k, rank }
            }
            ProblemKind::ComposedNonlinear => {
                forbid(p.k.is_some(), "problem.k")?;
                forbid(p.rank.is_some(), "problem.rank")?;
                let c =
                    p.c.ok_or_else(|| field("problem.c", "required for composed_nonlinear"))?;
                if !(c > 0.0 && c < 1.0) {
                    return Err(field("problem.c", format!("must lie in (0, 1), got {c}")));
                }
                ProblemSpec::ComposedNonlinear { c }
            }
        };

        let s = raw.sgd;
        let eta_rule: EtaRule = s.eta_rule.parse().map_err(|e| field("sgd.eta_rule", e))?;
        if s.m == 0 {
            return Err(field("sgd.m", "must be at least 1"));
        }
        if s.runs == 0 {
            return Err(field("sgd.runs", "must be at least 1"));
        }
        match (eta_rule, s.eta) {
            (EtaRule::Explicit, None) => return Err(field("sgd.eta", "required when sgd.eta_rule = explicit")),
            (EtaRule::Explicit, Some(eta)) if !(eta > 0.0 && eta.is_finite()) => {
                return Err(field("sgd.eta", format!("must be finite and positive, got {eta}")))
            }
            (EtaRule::Explicit, _) => {}
            (rule, Some(_)) => return Err(field("sgd.eta", format!("only allowed with explicit, not {rule}"))),
            (_, None) => {}
        }
        match (eta_rule, kind) {
            (EtaRule::Theorem2, k) if k != ProblemKind::ComposedLinear => {
                return Err(field("sgd.eta_rule", "theorem2 needs problem.kind = composed_linear"))
            }
            (EtaRule::Corollary, k) if k != ProblemKind::ComposedNonlinear => {
                return Err(field(
                    "sgd.eta_rule",
                    "corollary needs problem.kind = composed_nonlinear",
                ))
            }
            _ => {}
        }

        let count = match raw.probes.count {
            None | Some(0) => STANDARD_PROBE_COUNT,
            Some(c) => c,
        };
        Ok(Config {
            problem: ProblemConfig {
                spec,
                n: p.n,
                d: p.d,
                seed: p.seed,
            },
            sgd: SgdSettings {
                m: s.m,
                eta_rule,
                eta: s.eta,
                steps: s.steps,
                runs: s.runs,
                seed: s.seed,
            },
            probes: ProbeSettings {
                count,
                seed: raw.probes.seed.unwrap_or(p.seed),
            },
            output: raw.output.path,
        })
    }
}

fn describe_toml_error(text: &str, e: &toml::de::Error) -> String {
    let msg = e.message();
    match e.span() {
        Some(span) => {
            let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
            format!("line {line}: {msg}")
        }
        None => msg.to_string(),
    }
}

/// Path next to `output` with its extension replaced by `suffix`.
pub fn sibling(output: &Path, suffix: &str) -> PathBuf {
    output.with_extension(suffix)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
# baseline
problem.kind = "least_squares"
problem.n = 20
problem.d = 50
problem.seed = 1
sgd.m = 4
sgd.eta_rule = "quadratic_opt"
sgd.steps = 10
sgd.runs = 3
sgd.seed = 7
output.path = "out.csv"
"#;

    fn err(text: &str) -> String {
        match Config::parse(text) {
            Err(CliError::Config(m)) => m,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn parses_baseline() {
        let c = Config::parse(BASE).unwrap();
        assert_eq!(c.problem.spec, ProblemSpec::LeastSquares);
        assert_eq!((c.problem.n, c.problem.d, c.problem.seed), (20, 50, 1));
        assert_eq!(c.sgd.eta_rule, EtaRule::QuadraticOpt);
        assert_eq!(
            c.probes,
            ProbeSettings {
                count: STANDARD_PROBE_COUNT,
                seed: 1
            }
        );
        assert_eq!(c.output, PathBuf::from("out.csv"));
    }

    #[test]
    fn unknown_keys_name_the_line() {
        let m = err(&format!("{BASE}sgd.momentum = 0.9\n"));
        assert!(m.contains("line 13") && m.contains("momentum"), "{m}");
        let m = err(&format!("{BASE}extra.key = 1\n"));
        assert!(m.contains("extra"), "{m}");
    }

    #[test]
    fn missing_required_key() {
        let m = err(&BASE.replace("sgd.steps = 10\n", ""));
        assert!(m.contains("steps"), "{m}");
    }

    #[test]
    fn syntax_error_has_line() {
        let m = err(&BASE.replace("problem.n = 20", "problem.n = = 20"));
        assert!(m.starts_with("line 4"), "{m}");
    }

    #[test]
    fn explicit_rule_requires_eta() {
        let text = BASE.replace("\"quadratic_opt\"", "\"explicit\"");
        assert!(err(&text).starts_with("sgd.eta"));
        let c = Config::parse(&format!("{text}sgd.eta = 0.01\n")).unwrap();
        assert_eq!(c.sgd.eta, Some(0.01));
        assert!(err(&format!("{text}sgd.eta = -1.0\n")).starts_with("sgd.eta"));
        assert!(err(&format!("{BASE}sgd.eta = 0.01\n")).starts_with("sgd.eta"));
    }

    #[test]
    fn kind_specific_keys() {
        let lin = BASE.replace("\"least_squares\"", "\"composed_linear\"");
        assert!(err(&lin).starts_with("problem.k"));
        let c = Config::parse(&format!("{lin}problem.k = 10\nproblem.rank = 8\n")).unwrap();
        assert_eq!(c.problem.spec, ProblemSpec::ComposedLinear { k: 10, rank: 8 });
        assert!(err(&format!("{BASE}problem.c = 0.5\n")).starts_with("problem.c"));
        let non = BASE.replace("\"least_squares\"", "\"composed_nonlinear\"");
        assert!(err(&format!("{non}problem.c = 1.5\n")).starts_with("problem.c"));
        let rule = BASE.replace("\"quadratic_opt\"", "\"theorem2\"");
        assert!(err(&rule).starts_with("sgd.eta_rule"));
        assert!(err(&BASE.replace("\"quadratic_opt\"", "\"adam\"")).starts_with("sgd.eta_rule"));
        assert!(err(&BASE.replace("\"least_squares\"", "\"ridge\"")).starts_with("problem.kind"));
    }

    #[test]
    fn empty_probe_override_uses_default() {
        let c = Config::parse(&format!("{BASE}probes.count = 0\nprobes.seed = 5\n")).unwrap();
        assert_eq!(
            c.probes,
            ProbeSettings {
                count: STANDARD_PROBE_COUNT,
                seed: 5
            }
        );
    }

    #[test]
    fn zero_sizes_are_rejected() {
        assert!(err(&BASE.replace("sgd.m = 4", "sgd.m = 0")).starts_with("sgd.m"));
        assert!(err(&BASE.replace("sgd.runs = 3", "sgd.runs = 0")).starts_with("sgd.runs"));
        assert!(err(&BASE.replace("problem.n = 20", "problem.n = 0")).starts_with("problem.n"));
    }
}
