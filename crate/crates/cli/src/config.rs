//! Flat `key = value` run configuration.
//!
//! Recognized keys: `problem`, `h`, `g0`, `beta_rule`, `armijo.s`,
//! `armijo.rho`, `armijo.mu`, `stop_J`, `max_iters`,
//! `project_nonnegative`, `out_dir`. Unknown keys are rejected. Lines
//! starting with `#` and blank lines are ignored.
//!
//! The defaults suit the benchmark problems: Fletcher-Reeves
//! conjugate directions with initial Armijo step 4. (The library-level
//! optimizer default is Polak-Ribiere with a unit step; on the generated
//! meshes that variant needs far more iterations, so the command-line
//! front end defaults to the discrete-algorithm form instead.)

use std::path::PathBuf;

use ma_core::optimizer::{ArmijoParams, BetaRule, OptimizerConfig};
use ma_core::problems::BuiltinProblem;

use crate::CliError;

/// Initial iterate: a constant field or a field file (csv-points).
#[derive(Debug, Clone, PartialEq)]
pub enum InitialShift {
    Constant(f64),
    FieldFile(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: BuiltinProblem,
    pub h: f64,
    pub g0: InitialShift,
    pub beta_rule: BetaRule,
    pub armijo: ArmijoParams,
    pub stop_j: f64,
    pub max_iters: usize,
    pub project_nonnegative: bool,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn optimizer_config(&self) -> OptimizerConfig {
        OptimizerConfig {
            beta_rule: self.beta_rule,
            armijo: self.armijo,
            stop_j: self.stop_j,
            max_iters: self.max_iters,
            project_nonnegative: self.project_nonnegative,
            ..OptimizerConfig::default()
        }
    }
}

fn bad(key: &str, detail: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("key `{key}`: {detail}"))
}

/// Accepts plain decimals and `p/q` fractions (the mesh sizes are
/// naturally written `1/32`).
fn parse_real(key: &str, raw: &str) -> Result<f64, CliError> {
    if let Some((num, den)) = raw.split_once('/') {
        let num: f64 = num
            .trim()
            .parse()
            .map_err(|_| bad(key, format!("bad number `{raw}`")))?;
        let den: f64 = den
            .trim()
            .parse()
            .map_err(|_| bad(key, format!("bad number `{raw}`")))?;
        if den == 0.0 {
            return Err(bad(key, "division by zero"));
        }
        return Ok(num / den);
    }
    raw.parse()
        .map_err(|_| bad(key, format!("bad number `{raw}`")))
}

fn parse_bool(key: &str, raw: &str) -> Result<bool, CliError> {
    match raw {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(bad(key, format!("expected true/false, got `{raw}`"))),
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let mut problem = None;
    let mut h = None;
    let mut g0 = InitialShift::Constant(0.0);
    let mut beta_rule = BetaRule::FletcherReeves;
    let mut armijo = ArmijoParams {
        s: 4.0,
        ..ArmijoParams::default()
    };
    let mut stop_j = 1e-6;
    let mut max_iters = 500usize;
    let mut project_nonnegative = false;
    let mut out_dir = PathBuf::from(".");

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!(
                "line {}: expected `key = value`, got `{line}`",
                lineno + 1
            ))
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "problem" => {
                problem = Some(BuiltinProblem::parse(value).ok_or_else(|| {
                    bad(
                        key,
                        format!("unknown problem `{value}` (test1|test2|test3)"),
                    )
                })?);
            }
            "h" => h = Some(parse_real(key, value)?),
            "g0" => {
                g0 = if let Some(path) = value.strip_prefix('@') {
                    InitialShift::FieldFile(PathBuf::from(path))
                } else {
                    InitialShift::Constant(parse_real(key, value)?)
                };
            }
            "beta_rule" => {
                beta_rule = match value.to_ascii_lowercase().as_str() {
                    "prp" | "polak-ribiere" => BetaRule::PolakRibiere,
                    "fr" | "fletcher-reeves" => BetaRule::FletcherReeves,
                    _ => return Err(bad(key, format!("expected prp or fr, got `{value}`"))),
                };
            }
            "armijo.s" => armijo.s = parse_real(key, value)?,
            "armijo.rho" => armijo.rho = parse_real(key, value)?,
            "armijo.mu" => armijo.mu = parse_real(key, value)?,
            "stop_J" => stop_j = parse_real(key, value)?,
            "max_iters" => {
                max_iters = value
                    .parse()
                    .map_err(|_| bad(key, format!("bad integer `{value}`")))?;
            }
            "project_nonnegative" => project_nonnegative = parse_bool(key, value)?,
            "out_dir" => out_dir = PathBuf::from(value),
            _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
        }
    }

    let problem =
        problem.ok_or_else(|| CliError::Config("missing required key `problem`".into()))?;
    let h = h.ok_or_else(|| CliError::Config("missing required key `h`".into()))?;
    if !(h > 0.0 && h < 1.0) {
        return Err(bad("h", format!("{h} is outside (0, 1)")));
    }
    if let InitialShift::Constant(c) = g0 {
        if project_nonnegative && c < 0.0 {
            return Err(bad("g0", "must be >= 0 when project_nonnegative is on"));
        }
    }
    let config = RunConfig {
        problem,
        h,
        g0,
        beta_rule,
        armijo,
        stop_j,
        max_iters,
        project_nonnegative,
        out_dir,
    };
    config
        .optimizer_config()
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let text = "\
# benchmark row
problem = test1
h = 1/32
g0 = 0.3
beta_rule = fr
armijo.s = 4
armijo.rho = 0.5
armijo.mu = 1e-4
stop_J = 1e-6
max_iters = 500
project_nonnegative = false
out_dir = out/row1
";
        let config = parse_config(text).unwrap();
        assert_eq!(config.problem, BuiltinProblem::Test1);
        assert!((config.h - 1.0 / 32.0).abs() < 1e-18);
        assert_eq!(config.g0, InitialShift::Constant(0.3));
        assert_eq!(config.beta_rule, BetaRule::FletcherReeves);
        assert_eq!(config.max_iters, 500);
        assert_eq!(config.out_dir, PathBuf::from("out/row1"));
    }

    #[test]
    fn unknown_key_is_rejected_by_name() {
        let err = parse_config("problem = test1\nh = 0.1\nfoo = 1\n").unwrap_err();
        assert!(err.to_string().contains("unknown key `foo`"), "{err}");
    }

    #[test]
    fn out_of_range_h_is_rejected_by_name() {
        let err = parse_config("problem = test1\nh = 2\n").unwrap_err();
        assert!(err.to_string().contains("`h`"), "{err}");
    }

    #[test]
    fn missing_required_keys_are_reported() {
        let err = parse_config("h = 0.25\n").unwrap_err();
        assert!(err.to_string().contains("problem"), "{err}");
        let err = parse_config("problem = test3\n").unwrap_err();
        assert!(err.to_string().contains("`h`"), "{err}");
    }

    #[test]
    fn g0_field_file_reference() {
        let config = parse_config("problem = test2\nh = 0.2\ng0 = @fields/start.csv\n").unwrap();
        assert_eq!(
            config.g0,
            InitialShift::FieldFile(PathBuf::from("fields/start.csv"))
        );
    }

    #[test]
    fn negative_constant_g0_with_projection_rejected() {
        let err = parse_config("problem = test1\nh = 0.2\ng0 = -0.1\nproject_nonnegative = true\n")
            .unwrap_err();
        assert!(err.to_string().contains("`g0`"), "{err}");
        // without projection a negative start is allowed
        assert!(parse_config("problem = test1\nh = 0.2\ng0 = -0.1\n").is_ok());
    }

    #[test]
    fn bad_armijo_values_are_rejected() {
        let err = parse_config("problem = test1\nh = 0.2\narmijo.rho = 1.5\n").unwrap_err();
        assert!(err.to_string().contains("rho"), "{err}");
    }
}
