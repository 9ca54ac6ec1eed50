use conformal_lab::cli::{self, RunError};
use conformal_lab::conformal::IdentityId;
use conformal_lab::geometry::ZooModel;
use std::process::ExitCode;

const USAGE: &str = "\
conformal-lab: numerical verification of conformal curvature identities

USAGE:
    conformal-lab run <scenario.toml> [--threads N]
    conformal-lab zoo list
    conformal-lab identity-sweep --eq <id,...> --model <name> --dims <n,...> \
--grid <k> [--out <path>] [--threads N]

Exit codes: 0 all checks pass (predicted gaps count as passes),
            1 a check failed, 2 configuration or parse error.
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match dispatch(&args) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn dispatch(args: &[String]) -> Result<ExitCode, RunError> {
    let mut args = args.to_vec();
    if let Some(threads) = take_flag_value(&mut args, "--threads")? {
        let n: usize = threads
            .parse()
            .map_err(|_| config("--threads", "expects a positive integer"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| RunError::Execution(format!("thread pool: {e}")))?;
    }
    match args.first().map(String::as_str) {
        Some("run") => {
            let [_, path] = args.as_slice() else {
                return Err(config("run", "expects exactly one scenario path"));
            };
            let outcome = cli::run_scenario_file(path)?;
            print!("{}", outcome.table);
            if let Some(output) = &outcome.output {
                let payload = if output.format == "jsonl" {
                    &outcome.jsonl
                } else {
                    &outcome.csv
                };
                std::fs::write(&output.path, payload)
                    .map_err(|e| RunError::Execution(format!("writing `{}`: {e}", output.path)))?;
                println!("report written to {}", output.path);
            }
            Ok(ExitCode::from(outcome.exit_code as u8))
        }
        Some("zoo") => {
            if args.get(1).map(String::as_str) != Some("list") {
                return Err(config("zoo", "the only subcommand is `zoo list`"));
            }
            print!("{}", cli::zoo_list());
            Ok(ExitCode::SUCCESS)
        }
        Some("identity-sweep") => {
            let mut rest = args[1..].to_vec();
            let eq = require_flag(&mut rest, "--eq")?;
            let model = require_flag(&mut rest, "--model")?;
            let dims = require_flag(&mut rest, "--dims")?;
            let grid = require_flag(&mut rest, "--grid")?;
            let out = take_flag_value(&mut rest, "--out")?;
            if !rest.is_empty() {
                return Err(config(
                    "identity-sweep",
                    format!("unexpected arguments {rest:?}"),
                ));
            }
            let ids = eq
                .split(',')
                .map(|s| s.trim().parse::<IdentityId>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| config("--eq", e))?;
            let model: ZooModel = model
                .parse()
                .map_err(|e| config("--model", format!("{e}")))?;
            let dims = dims
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| config("--dims", "expects comma-separated integers"))?;
            let grid: usize = grid
                .parse()
                .map_err(|_| config("--grid", "expects an integer"))?;
            let csv = cli::identity_sweep(&ids, model, &dims, grid)?;
            match out {
                Some(path) => {
                    std::fs::write(&path, &csv)
                        .map_err(|e| RunError::Execution(format!("writing `{path}`: {e}")))?;
                    println!("sweep written to {path}");
                }
                None => print!("{csv}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        _ => {
            eprint!("{USAGE}");
            Ok(ExitCode::from(2))
        }
    }
}

fn config(key: &str, message: impl Into<String>) -> RunError {
    RunError::Config(cli::ScenarioError::Invalid {
        key: key.into(),
        message: message.into(),
    })
}

fn take_flag_value(args: &mut Vec<String>, flag: &str) -> Result<Option<String>, RunError> {
    if let Some(pos) = args.iter().position(|a| a == flag) {
        if pos + 1 >= args.len() {
            return Err(config(flag, "expects a value"));
        }
        let value = args.remove(pos + 1);
        args.remove(pos);
        return Ok(Some(value));
    }
    Ok(None)
}

fn require_flag(args: &mut Vec<String>, flag: &str) -> Result<String, RunError> {
    take_flag_value(args, flag)?.ok_or_else(|| config(flag, "is required"))
}
