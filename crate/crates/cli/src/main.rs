//! doobgen: forced spectral diffusion experiments from the command line.
//!
//! Usage: doobgen <simulate|train|generate|evaluate|sweep>
//!                [--config=FILE] [--key=value ...]
//!
//! Exit codes: 0 success, 2 usage error, 1 runtime error.

mod commands;
mod config;
mod rundir;

use config::RunConfig;

fn usage() -> String {
    let mut text = String::from(
        "doobgen <simulate|train|generate|evaluate|sweep> [--config=FILE] [--key=value ...]\n\nKeys:\n",
    );
    for (key, default, help) in config::KEYS {
        text.push_str(&format!("  {key:<24} {help} (default: {default:?})\n"));
    }
    text
}

fn parse_args(args: &[String]) -> Result<(String, RunConfig), String> {
    if args.is_empty() {
        return Err("missing command".into());
    }
    let command = args[0].clone();
    let mut cfg = RunConfig::defaults();
    // First pass: config file, so command line overrides win.
    for arg in &args[1..] {
        if let Some(path) = arg.strip_prefix("--config=") {
            cfg.load_file(std::path::Path::new(path))
                .map_err(|e| e.to_string())?;
        }
    }
    for arg in &args[1..] {
        if arg.starts_with("--config=") {
            continue;
        }
        let body = arg
            .strip_prefix("--")
            .ok_or_else(|| format!("expected --key=value, got {arg:?}"))?;
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| format!("expected --key=value, got {arg:?}"))?;
        cfg.set(key, value).map_err(|e| e.to_string())?;
    }
    Ok((command, cfg))
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.first().map(String::as_str) == Some("help") {
        println!("{}", usage());
        std::process::exit(0);
    }
    let (command, cfg) = match parse_args(&args) {
        Ok(parsed) => parsed,
        Err(message) => {
            eprintln!("usage error: {message}\n\n{}", usage());
            std::process::exit(2);
        }
    };
    let result = match command.as_str() {
        "simulate" => commands::cmd_simulate(&cfg),
        "train" => commands::cmd_train(&cfg),
        "generate" => commands::cmd_generate(&cfg),
        "evaluate" => commands::cmd_evaluate(&cfg),
        "sweep" => commands::cmd_sweep(&cfg),
        other => {
            eprintln!("usage error: unknown command {other:?}\n\n{}", usage());
            std::process::exit(2);
        }
    };
    match result {
        Ok(()) => {}
        Err(e @ doobgen_core::Error::Config(_)) | Err(e @ doobgen_core::Error::Input(_)) => {
            eprintln!("usage error: {e}");
            std::process::exit(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
