mod args;
mod parse;
mod run;

use std::ffi::OsString;
use std::fs;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{ArgMatches, Command as ClapCommand, CommandFactory, FromArgMatches};
use serde_json::{json, Map, Value};

use args::{Cli, Format};
use run::Output;

const VERSION: &str = env!("CARGO_PKG_VERSION");

struct Failure {
    kind: String,
    message: String,
}

impl From<cfdim::Error> for Failure {
    fn from(e: cfdim::Error) -> Self {
        Self { kind: e.kind().into(), message: e.to_string() }
    }
}

fn failure(kind: &str, message: impl ToString) -> Failure {
    Failure { kind: kind.into(), message: message.to_string() }
}

fn allow_overrides(cmd: ClapCommand) -> ClapCommand {
    cmd.args_override_self(true).mut_subcommands(allow_overrides)
}

/// Value of `--config` as given on the command line, if any.
fn config_path(argv: &[OsString]) -> Option<String> {
    let args: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    args.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            args.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    })
}

/// Flags from a config object, appended after the command line so they win.
fn config_flags(map: &Map<String, Value>) -> Result<Vec<OsString>, Failure> {
    let mut out = Vec::new();
    for (key, value) in map {
        if key == "command" || key == "config" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        let text = match value {
            Value::Null | Value::Bool(false) => continue,
            Value::Bool(true) => {
                out.push(flag.into());
                continue;
            }
            Value::String(s) if s == "true" || s == "false" => {
                if s == "true" {
                    out.push(flag.into());
                }
                continue;
            }
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect::<Vec<_>>()
                .join(","),
            Value::Object(_) => value.to_string(),
        };
        out.push(flag.into());
        out.push(text.into());
    }
    Ok(out)
}

fn full_argv(argv: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).map_err(|e| failure("ConfigError", format!("{path}: {e}")))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| failure("ConfigError", format!("{path}: {e}")))?;
    let Value::Object(map) = value else {
        return Err(failure("ConfigError", "config must be a JSON object"));
    };
    let mut args = argv;
    if let Some(Value::String(command)) = map.get("command") {
        let names: Vec<String> = Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect();
        let has_command = args.iter().skip(1).any(|a| names.iter().any(|n| a.to_str() == Some(n)));
        if !has_command {
            let tail = args.split_off(1);
            args.extend(command.split_whitespace().map(OsString::from));
            args.extend(tail);
        }
    }
    args.extend(config_flags(&map)?);
    Ok(args)
}

/// The leaf subcommand path and its matches.
fn leaf(matches: &ArgMatches) -> (Vec<String>, &ArgMatches) {
    let mut path = Vec::new();
    let mut m = matches;
    while let Some((name, sub)) = m.subcommand() {
        path.push(name.to_string());
        m = sub;
    }
    (path, m)
}

/// Every flag value that produced this run, in a form `--config` accepts.
fn effective_config(matches: &ArgMatches, seed: u64) -> Value {
    let (path, m) = leaf(matches);
    let root = Cli::command();
    let mut cmd = &root;
    for name in &path {
        cmd = cmd.find_subcommand(name).expect("known subcommand");
    }
    let known: Vec<String> =
        root.get_arguments().chain(cmd.get_arguments()).map(|a| a.get_id().to_string()).collect();
    let mut map = Map::new();
    map.insert("command".into(), path.join(" ").into());
    for id in m.ids() {
        let id = id.as_str();
        if id == "config" || !known.iter().any(|k| k == id) {
            continue;
        }
        if let Ok(Some(raw)) = m.try_get_raw(id) {
            let parts: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
            map.insert(id.into(), parts.join(",").into());
        }
    }
    map.insert("seed".into(), seed.to_string().into());
    Value::Object(map)
}

fn header(seed: u64, workers: usize, timestamp: Option<u64>) -> Value {
    let mut meta = json!({ "tool": "cfdim", "version": VERSION, "seed": seed, "workers": workers });
    if let Some(t) = timestamp {
        meta["timestamp"] = t.into();
    }
    meta
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn render(out: &Output, meta: &Value, config: &Value, format: Format) -> Result<String, Failure> {
    match format {
        Format::Json => {
            let doc = json!({ "meta": meta, "config": config, "result": out.result });
            Ok(serde_json::to_string_pretty(&doc).expect("json") + "\n")
        }
        Format::Csv => {
            let mut text = String::new();
            for (k, v) in meta.as_object().expect("object") {
                text.push_str(&format!("# {k}: {}\n", cell(v)));
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| failure("IoError", e);
            w.write_record(&out.columns).map_err(io)?;
            for row in &out.rows {
                w.write_record(row.iter().map(cell)).map_err(io)?;
            }
            let body = w.into_inner().map_err(|e| failure("IoError", e))?;
            text.push_str(&String::from_utf8(body).expect("utf-8"));
            Ok(text)
        }
    }
}

fn real_main() -> Result<bool, Failure> {
    let argv = full_argv(std::env::args_os().collect())?;
    let matches = allow_overrides(Cli::command()).get_matches_from(argv);
    let cli = Cli::from_arg_matches(&matches).map_err(|e| failure("UsageError", e))?;
    let g = &cli.global;
    if g.workers == 0 {
        return Err(failure("DomainError", "workers must be >= 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(g.workers)
        .build_global()
        .map_err(|e| failure("PoolError", e))?;
    let now = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
    let seed = g.seed.unwrap_or(now.as_nanos() as u64);
    let timestamp = (!g.no_timestamp).then_some(now.as_secs());
    let out = run::execute(&cli.command, seed, !g.no_timestamp)?;
    let text = render(&out, &header(seed, g.workers, timestamp), &effective_config(&matches, seed), g.format)?;
    match &g.output {
        Some(path) => fs::write(path, text).map_err(|e| failure("IoError", format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(!out.failed)
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(f) => {
            eprintln!("{}", json!({ "kind": f.kind, "message": f.message }));
            ExitCode::FAILURE
        }
    }
}
