//! `geophase`: runs the library's scenarios from the command line.

mod output;
mod scenarios;

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::scenarios::{Outcome, Params, Scenario};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Core(#[from] geophase::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Core(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "geophase",
    version,
    about = "Projective geometric phases: reproducible scenario runs",
    after_help = scenarios::help_text()
)]
struct Cli {
    /// Scenario to run (alternatively the first positional argument).
    #[arg(long)]
    scenario: Option<String>,
    /// JSON file with {"scenario", "parameters", "out", "format", "seed"}; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trace output path; the result envelope goes next to it as <stem>.result.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trace format.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Shorthand for the scenario key `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Scenario name and/or key=value pairs.
    args: Vec<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    scenario: Option<String>,
    #[serde(default)]
    parameters: BTreeMap<String, Value>,
    out: Option<PathBuf>,
    format: Option<Format>,
    seed: Option<u64>,
}

const VALUE_FLAGS: &[&str] = &["scenario", "config", "out", "format", "seed"];

/// Rewrites `--key value` and `--key=value` for scenario keys into
/// `key=value`, leaving the fixed flags for clap.
fn normalize_args(raw: Vec<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(raw.len());
    let mut it = raw.into_iter();
    if let Some(program) = it.next() {
        out.push(program);
    }
    while let Some(arg) = it.next() {
        let Some(name) = arg.strip_prefix("--") else {
            out.push(arg);
            continue;
        };
        let (key, inline) = match name.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (name.to_string(), None),
        };
        if key.is_empty()
            || VALUE_FLAGS.contains(&key.as_str())
            || key == "help"
            || key == "version"
        {
            out.push(arg);
            continue;
        }
        match inline.or_else(|| it.next()) {
            Some(v) => out.push(format!("{key}={v}")),
            None => out.push(arg),
        }
    }
    out
}

fn json_to_string(key: &str, v: &Value) -> Result<String, CliError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => Err(CliError::Usage(format!(
            "config parameter `{key}` must be a string, number or boolean"
        ))),
    }
}

struct Request {
    scenario: String,
    overrides: BTreeMap<String, String>,
    out: Option<PathBuf>,
    format: Format,
}

fn build_request(cli: Cli) -> Result<Request, CliError> {
    let config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            serde_json::from_str::<ConfigFile>(&text)
                .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };

    let mut positional_scenario = None;
    let mut flag_pairs = BTreeMap::new();
    for arg in &cli.args {
        match arg.split_once('=') {
            Some((k, v)) if !k.is_empty() => {
                flag_pairs.insert(k.to_string(), v.to_string());
            }
            Some(_) => return Err(CliError::Usage(format!("malformed argument `{arg}`"))),
            None if positional_scenario.is_none() && cli.scenario.is_none() => {
                positional_scenario = Some(arg.clone());
            }
            None => return Err(CliError::Usage(format!("unexpected argument `{arg}`"))),
        }
    }

    let scenario = cli
        .scenario
        .or(positional_scenario)
        .or(config.scenario)
        .ok_or_else(|| CliError::Usage("no scenario given (see --help)".into()))?;

    let mut overrides = BTreeMap::new();
    for (k, v) in &config.parameters {
        overrides.insert(k.clone(), json_to_string(k, v)?);
    }
    if let Some(seed) = config.seed {
        overrides.insert("seed".into(), seed.to_string());
    }
    overrides.extend(flag_pairs);
    if let Some(seed) = cli.seed {
        overrides.insert("seed".into(), seed.to_string());
    }

    Ok(Request {
        scenario,
        overrides,
        out: cli.out.or(config.out),
        format: cli.format.or(config.format).unwrap_or(Format::Csv),
    })
}

fn parameter_json(params: &Params) -> Value {
    params
        .values()
        .iter()
        .map(|(k, v)| {
            let value = v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .and_then(serde_json::Number::from_f64)
                .map_or_else(|| Value::String(v.clone()), Value::Number);
            (k.clone(), value)
        })
        .collect::<serde_json::Map<_, _>>()
        .into()
}

fn run_one(scenario: &Scenario, req: &Request) -> Result<Outcome, CliError> {
    let params = Params::resolve(scenario, &req.overrides)?;
    let outcome = (scenario.run)(&params)?;
    if let Some(out) = &req.out {
        output::write_trace(out, req.format, scenario.columns, &outcome.rows)?;
        let envelope =
            output::envelope(scenario.name, parameter_json(&params), &outcome, Some(out));
        output::write_envelope(&output::envelope_path(out), &envelope)?;
    }
    Ok(outcome)
}

fn verify_all(req: &Request) -> Result<ExitCode, CliError> {
    if !req.overrides.is_empty() || req.out.is_some() {
        return Err(CliError::Usage(
            "verify-all takes no keys or output path".into(),
        ));
    }
    println!(
        "{:<14} {:>6} {:>10}  summary",
        "scenario", "result", "tolerance"
    );
    let mut all = true;
    for s in scenarios::SCENARIOS {
        let defaults = Request {
            scenario: s.name.into(),
            overrides: BTreeMap::new(),
            out: None,
            format: req.format,
        };
        match run_one(s, &defaults) {
            Ok(o) => {
                all &= o.pass;
                let tag = if o.pass { "PASS" } else { "FAIL" };
                println!(
                    "{:<14} {:>6} {:>10.1e}  {}",
                    s.name, tag, o.tolerance, o.summary
                );
            }
            Err(e) => {
                all = false;
                println!("{:<14} {:>6} {:>10}  {e}", s.name, "ERROR", "-");
            }
        }
    }
    Ok(ExitCode::from(if all { 0 } else { 1 }))
}

fn execute(req: Request) -> Result<ExitCode, CliError> {
    if req.scenario == "verify-all" {
        return verify_all(&req);
    }
    let scenario = scenarios::find(&req.scenario).ok_or_else(|| {
        let names: Vec<_> = scenarios::SCENARIOS.iter().map(|s| s.name).collect();
        CliError::Usage(format!(
            "unknown scenario `{}` (available: {}, verify-all)",
            req.scenario,
            names.join(", ")
        ))
    })?;
    let outcome = run_one(scenario, &req)?;
    let tag = if outcome.pass { "PASS" } else { "FAIL" };
    println!("{tag} {}: {}", scenario.name, outcome.summary);
    if let Some(out) = &req.out {
        println!("trace: {}", out.display());
        println!("result: {}", output::envelope_path(out).display());
    }
    Ok(ExitCode::from(if outcome.pass { 0 } else { 1 }))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse_from(normalize_args(std::env::args().collect())) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match build_request(cli).and_then(execute) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn scenario_keys_become_pairs() {
        let got = normalize_args(argv(&[
            "geophase",
            "--scenario",
            "spin-loop",
            "--m",
            "2",
            "--delta=1e-3",
            "--out",
            "x.csv",
            "samples=10",
        ]));
        assert_eq!(
            got,
            argv(&[
                "geophase",
                "--scenario",
                "spin-loop",
                "m=2",
                "delta=1e-3",
                "--out",
                "x.csv",
                "samples=10"
            ])
        );
    }

    #[test]
    fn negative_values_survive() {
        let got = normalize_args(argv(&["geophase", "tangency", "--span", "-0.5"]));
        assert_eq!(got, argv(&["geophase", "tangency", "span=-0.5"]));
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(
            &path,
            r#"{"scenario": "offdiag", "parameters": {"dim": 3, "trials": 5}, "seed": 4}"#,
        )
        .unwrap();
        let cli = Cli::try_parse_from(normalize_args(argv(&[
            "geophase",
            "--config",
            path.to_str().unwrap(),
            "--trials",
            "9",
        ])))
        .unwrap();
        let req = build_request(cli).unwrap();
        assert_eq!(req.scenario, "offdiag");
        assert_eq!(req.overrides["dim"], "3");
        assert_eq!(req.overrides["trials"], "9");
        assert_eq!(req.overrides["seed"], "4");
    }

    #[test]
    fn config_rejects_unknown_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"scenario": "offdiag", "colour": "red"}"#).unwrap();
        let cli =
            Cli::try_parse_from(argv(&["geophase", "--config", path.to_str().unwrap()])).unwrap();
        assert!(matches!(build_request(cli), Err(CliError::Usage(_))));
    }

    #[test]
    fn unknown_key_is_usage_error() {
        let s = scenarios::find("wuyang").unwrap();
        let overrides = BTreeMap::from([("phi".to_string(), "1".to_string())]);
        match Params::resolve(s, &overrides) {
            Err(CliError::Usage(msg)) => assert!(msg.contains("`phi`")),
            _ => panic!("expected usage error"),
        }
    }

    #[test]
    fn every_scenario_passes_at_defaults() {
        for s in scenarios::SCENARIOS {
            let params = Params::resolve(s, &BTreeMap::new()).unwrap();
            let o = (s.run)(&params).unwrap();
            assert!(o.pass, "{}: {}", s.name, o.summary);
            assert!(
                o.rows.iter().all(|r| r.len() == s.columns.len()),
                "{}",
                s.name
            );
        }
    }
}
