//! Front end for slag-core: argument handling, command dispatch and report
//! output. `run` is the whole program; `main` only forwards the exit code.

// `!(x <= tol)` is deliberate: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;

use serde_json::Value;
use std::ffi::OsString;
use std::io::Write;

use commands::{CmdError, Outcome, EXIT_CONFIG, EXIT_FAILED};
use config::{parse_config, CommandConfig, Format, RunConfig};

/// Caps rayon's global pool at SLAG_THREADS when set.
fn init_threads() {
    if let Some(n) = std::env::var("SLAG_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if n > 0 {
            // fails only if a pool already exists, which is fine
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Flattens a JSON value into `key,value` lines with dotted keys.
pub fn flatten_csv(v: &Value) -> String {
    fn walk(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
        let key = |k: &str| {
            if prefix.is_empty() {
                k.to_string()
            } else {
                format!("{prefix}.{k}")
            }
        };
        match v {
            Value::Object(m) => m.iter().for_each(|(k, x)| walk(&key(k), x, out)),
            Value::Array(a) => a
                .iter()
                .enumerate()
                .for_each(|(i, x)| walk(&key(&i.to_string()), x, out)),
            Value::String(s) => out.push((prefix.to_string(), s.clone())),
            other => out.push((prefix.to_string(), other.to_string())),
        }
    }
    let mut rows = Vec::new();
    walk("", v, &mut rows);
    let mut s = String::from("key,value\n");
    for (k, v) in rows {
        let quote = |x: &str| {
            if x.contains([',', '"', '\n']) {
                format!("\"{}\"", x.replace('"', "\"\""))
            } else {
                x.to_string()
            }
        };
        s.push_str(&format!("{},{}\n", quote(&k), quote(&v)));
    }
    s
}

fn render(report: &Value, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(report).expect("json value serializes") + "\n",
        Format::Csv => flatten_csv(report),
    }
}

fn emit(o: &Outcome, format: Format) -> Result<(), String> {
    let text = render(&o.report, format);
    match &o.report_path {
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
        Some(p) => {
            let p = if format == Format::Csv && p.extension().is_some_and(|e| e == "json") {
                p.with_extension("csv")
            } else {
                p.clone()
            };
            std::fs::write(&p, text).map_err(|e| format!("{}: {e}", p.display()))
        }
    }
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CmdError> {
    match &cfg.command {
        CommandConfig::Verify(c) => commands::cmd_verify(c, cfg.out.clone()),
        CommandConfig::Solve(c) => commands::cmd_solve(c, cfg.out.clone()),
        CommandConfig::Reconstruct(c) => commands::cmd_reconstruct(c, cfg.out.clone()),
    }
}

/// Runs the program on `args` (program name first) and returns the exit
/// status: 0 success, 1 failed check, 2 configuration or input error.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    // --help and --version are not errors
    if let Err(e) = <config::Cli as clap::Parser>::try_parse_from(&args) {
        if !e.use_stderr() {
            let _ = e.print();
            return 0;
        }
    }
    let cfg = match parse_config(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    init_threads();
    match execute(&cfg) {
        Ok(o) => {
            eprintln!("{}", o.summary);
            if let Err(e) = emit(&o, cfg.format) {
                eprintln!("error: {e}");
                return EXIT_FAILED;
            }
            o.code
        }
        Err(CmdError::Config(e)) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
        Err(CmdError::Io(e)) => {
            eprintln!("error: {e}");
            EXIT_FAILED
        }
    }
}
