use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use twistgc::catalog::{
    catalog_scenario, catalog_source, list_catalog, load_scenario, reduce_point, run_checks,
    selftest, LoadError, Scenario,
};

/// Exact verification of twisted generalized complex and Kähler structures on chart models.
#[derive(Parser)]
#[command(name = "twistgc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks declared by a scenario.
    Check {
        /// Scenario file, or the name of a built-in scenario.
        #[arg(long)]
        scenario: String,
        #[arg(long, value_enum, default_value = "json")]
        report: Format,
    },
    /// Reduce the structure(s) of a scenario at a named sample point.
    Reduce {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        point: String,
    },
    /// List the built-in scenarios.
    Catalog {
        /// Print the source of one built-in scenario instead.
        #[arg(long)]
        show: Option<String>,
    },
    /// Run every built-in scenario twice and compare against its expected verdicts.
    Selftest {
        /// Directory to write the JSON reports into.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const EXIT_FAIL: u8 = 1;
const EXIT_LOAD: u8 = 2;

fn load(arg: &str) -> Result<Scenario, LoadError> {
    let path = Path::new(arg);
    if !path.exists() && catalog_source(arg).is_some() {
        return catalog_scenario(arg);
    }
    load_scenario(path)
}

fn emit(text: &str) {
    let mut stdout = std::io::stdout().lock();
    let _ = stdout
        .write_all(text.as_bytes())
        .and_then(|()| stdout.flush());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Check { scenario, report } => {
            let s = match load(&scenario) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_LOAD);
                }
            };
            let r = run_checks(&s);
            match report {
                Format::Json => emit(&r.to_json()),
                Format::Text => emit(&r.to_text()),
            }
            if r.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAIL)
            }
        }
        Command::Reduce { scenario, point } => {
            let s = match load(&scenario) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_LOAD);
                }
            };
            match reduce_point(&s, &point) {
                Ok(v) => {
                    let doc = serde_json::to_string_pretty(&v).expect("document serializes");
                    emit(&format!("{doc}\n"));
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_FAIL)
                }
            }
        }
        Command::Catalog { show } => match show {
            None => {
                emit(&list_catalog());
                ExitCode::SUCCESS
            }
            Some(name) => match catalog_source(&name) {
                Some(src) => {
                    emit(src);
                    ExitCode::SUCCESS
                }
                None => {
                    eprintln!("error: {}", LoadError::UnknownScenario(name));
                    ExitCode::from(EXIT_LOAD)
                }
            },
        },
        Command::Selftest { out } => {
            let t = selftest();
            if let Some(dir) = out {
                if let Err(e) = std::fs::create_dir_all(&dir) {
                    eprintln!("error: {}: {e}", dir.display());
                    return ExitCode::from(EXIT_LOAD);
                }
                for (name, json) in &t.reports {
                    if let Err(e) = std::fs::write(dir.join(format!("{name}.json")), json) {
                        eprintln!("error: {e}");
                        return ExitCode::from(EXIT_LOAD);
                    }
                }
            }
            for (name, _) in &t.reports {
                let bad = t
                    .unexpected
                    .iter()
                    .any(|u| u.starts_with(&format!("{name}:")));
                emit(&format!("{name:<24} {}\n", if bad { "FAIL" } else { "ok" }));
            }
            for u in &t.unexpected {
                emit(&format!("unexpected verdict: {u}\n"));
            }
            emit(&format!("deterministic: {}\n", t.deterministic));
            if t.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAIL)
            }
        }
    }
}
