//! `jspec`: run joint-spectrum scenarios from the command line.
//!
//! Exit codes: 0 success, 2 usage, 3 parse/validation, 4 verdict failure
//! under --strict, 5 budget exhausted.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use jointspec_cli::emit::sig12;
use jointspec_cli::error::CliError;
use jointspec_cli::input::parse_input;
use jointspec_cli::scenario::{run_scenario, Flags, OutputFormat, CUSTOM, SCENARIOS};
use jointspec::words::DEFAULT_BUDGET;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Svg,
    Both,
}

#[derive(Debug, Parser)]
#[command(
    name = "jspec",
    about = "Desk-scale joint spectrum runs: enumerate, simulate, plot, certify",
    after_help = "Scenarios: fig3, fig4, fig5, fig6, fig7, prop1_11, realize, prescribe.\n\
                  Pass --input DOC.json (scenario \"custom\" or a catalog name inside the document)."
)]
struct Cli {
    /// Scenario name; may be omitted when --input carries one.
    scenario: Option<String>,
    /// JSON document describing a generating family.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Word length / step count; default picked per scenario within budget.
    #[arg(long)]
    level: Option<u32>,
    /// Multiplication budget for the whole run.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for CSV/SVG files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Both)]
    format: FormatArg,
    /// Primary tolerance override; default depends on the scenario.
    #[arg(long)]
    tol: Option<f64>,
    /// Exit nonzero when any verdict fails.
    #[arg(long)]
    strict: bool,
    /// Worker threads for parallel enumeration (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Directory for cached level clouds.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Recompute one randomly chosen cached record and compare bytes.
    #[arg(long)]
    verify_cache: bool,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads {k}: {e}")))?;
    }

    let doc = match &cli.input {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            Some(parse_input(&text)?)
        }
        None => None,
    };
    let name = cli
        .scenario
        .clone()
        .or_else(|| doc.as_ref().and_then(|d| d.scenario.clone()))
        .or_else(|| doc.as_ref().map(|_| CUSTOM.to_string()))
        .ok_or_else(|| {
            CliError::Usage(format!("pick a scenario ({}) or pass --input", SCENARIOS.join(", ")))
        })?;

    let flags = Flags {
        level: cli.level,
        budget: cli.budget,
        seed: cli.seed,
        out: cli.out.clone(),
        format: match cli.format {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Svg => OutputFormat::Svg,
            FormatArg::Both => OutputFormat::Both,
        },
        tol: cli.tol,
        strict: cli.strict,
        cache: cli.cache.clone(),
        verify_cache: cli.verify_cache,
    };

    let res = run_scenario(&name, doc.as_ref(), &flags)?;
    println!(
        "scenario {}: level {}, seed {}, runtime {:.2}s",
        res.scenario, res.level, res.seed, res.runtime_secs
    );
    for f in &res.files {
        println!("wrote {}", f.display());
    }
    for (k, v) in &res.key_numbers {
        println!("{k} = {}", sig12(*v));
    }
    for (k, ok) in &res.verdicts {
        println!("verdict {k}: {}", if *ok { "PASS" } else { "FAIL" });
    }
    if flags.strict && !res.all_verdicts_pass() {
        return Err(CliError::Verdict(res.failing_verdicts().join(", ")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("jspec: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
