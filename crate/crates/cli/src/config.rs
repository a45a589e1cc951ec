//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown or repeated
//! keys are errors, and every value is range-checked when parsed.

use std::collections::BTreeSet;
use std::str::FromStr;

use contilearn_core::EngineConfig;

use crate::error::{CliError, CliResult};

pub const KEYS: [&str; 11] = [
    "iterations",
    "replicates",
    "seed",
    "rel_threshold",
    "k_max",
    "prior_grid",
    "grad_tol",
    "max_iters",
    "algebra_check",
    "closure_tol",
    "has_header",
];

/// Engine settings plus the ingestion options read from a config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub engine: EngineConfig,
    /// `None` lets the loader sniff for a header row.
    pub has_header: Option<bool>,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> CliResult<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(CliError::Config(format!(
            "{key}: expected true or false, found {value:?}"
        ))),
    }
}

fn parse_list(key: &str, value: &str) -> CliResult<Vec<f64>> {
    value
        .split(',')
        .map(|v| parse_value::<f64>(key, v.trim()))
        .collect()
}

impl RunConfig {
    /// Parses `key = value` pairs, one per line, starting from the defaults.
    pub fn parse(text: &str) -> CliResult<Self> {
        Self::parse_pairs(text.lines().map(str::to_owned))
    }

    fn parse_pairs(lines: impl Iterator<Item = String>) -> CliResult<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeSet::new();
        for (n, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(CliError::Config(format!("unknown key {key:?}")));
            }
            if !seen.insert(key.to_owned()) {
                return Err(CliError::Config(format!("duplicate key {key:?}")));
            }
            cfg.set(key, value)?;
        }
        cfg.engine.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let e = &mut self.engine;
        match key {
            "iterations" => e.iterations = parse_value(key, value)?,
            "replicates" => e.bootstrap.replicates = parse_value(key, value)?,
            "seed" => e.bootstrap.seed = parse_value(key, value)?,
            "rel_threshold" => e.rel_threshold = parse_value(key, value)?,
            "k_max" => e.k_max = parse_value(key, value)?,
            "prior_grid" => e.prior_grid = parse_list(key, value)?,
            "grad_tol" => e.solver.grad_tol = parse_value(key, value)?,
            "max_iters" => e.solver.max_iters = parse_value(key, value)?,
            "algebra_check" => e.algebra_check = parse_bool(key, value)?,
            "closure_tol" => e.closure_tol = parse_value(key, value)?,
            "has_header" => self.has_header = Some(parse_bool(key, value)?),
            _ => unreachable!("key list checked by caller"),
        }
        Ok(())
    }

    /// Canonical `key=value` pairs in [`KEYS`] order.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let e = &self.engine;
        let grid: Vec<String> = e.prior_grid.iter().map(f64::to_string).collect();
        let mut out = vec![
            ("iterations", e.iterations.to_string()),
            ("replicates", e.bootstrap.replicates.to_string()),
            ("seed", e.bootstrap.seed.to_string()),
            ("rel_threshold", e.rel_threshold.to_string()),
            ("k_max", e.k_max.to_string()),
            ("prior_grid", grid.join(",")),
            ("grad_tol", e.solver.grad_tol.to_string()),
            ("max_iters", e.solver.max_iters.to_string()),
            ("algebra_check", e.algebra_check.to_string()),
            ("closure_tol", e.closure_tol.to_string()),
        ];
        if let Some(h) = self.has_header {
            out.push(("has_header", h.to_string()));
        }
        out.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
    }

    /// Single-line echo used inside model files.
    pub fn echo(&self) -> String {
        self.pairs()
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn from_echo(line: &str) -> CliResult<Self> {
        Self::parse_pairs(line.split_whitespace().map(str::to_owned))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let text = "# demo\niterations = 2\nreplicates=16\nseed = 7\nrel_threshold = 0.1\nk_max = 4\n\
                    prior_grid = 0.1, 1, 10\ngrad_tol = 1e-9\nmax_iters = 50\nalgebra_check = true\n\
                    closure_tol = 0.001\nhas_header = false\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.engine.iterations, 2);
        assert_eq!(cfg.engine.bootstrap.replicates, 16);
        assert_eq!(cfg.engine.bootstrap.seed, 7);
        assert_eq!(cfg.engine.prior_grid, vec![0.1, 1.0, 10.0]);
        assert_eq!(cfg.engine.solver.grad_tol, 1e-9);
        assert!(cfg.engine.algebra_check);
        assert_eq!(cfg.has_header, Some(false));
        assert_eq!(RunConfig::from_echo(&cfg.echo()).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_duplicate_and_out_of_range() {
        assert!(RunConfig::parse("iteratons = 2").is_err());
        assert!(RunConfig::parse("seed = 1\nseed = 2").is_err());
        assert!(RunConfig::parse("k_max = 0").is_err());
        assert!(RunConfig::parse("prior_grid = 1, -2").is_err());
        assert!(RunConfig::parse("rel_threshold = 2").is_err());
        assert!(RunConfig::parse("replicates = 1").is_err());
        assert!(RunConfig::parse("algebra_check = yes").is_err());
        assert!(RunConfig::parse("just words").is_err());
        for text in ["k_max = 0", "iteratons = 1"] {
            assert_eq!(RunConfig::parse(text).unwrap_err().exit_code(), 1);
        }
    }

    #[test]
    fn empty_config_is_default() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }
}
