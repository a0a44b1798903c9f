use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use twist_core::frontend::{parse_problem, parse_task, run_problem, run_tasks, VERBS};

/// Twisted prolongations, gauge checks and order reduction driven by
/// problem files.
#[derive(Debug, Parser)]
#[command(name = "twist", version)]
struct Cli {
    /// `run` for the whole [tasks] block, or a single task verb.
    #[arg(value_parser = verb_parser())]
    verb: String,

    /// Task arguments, e.g. field names and `key=value` options.
    args: Vec<String>,

    /// Problem file.
    #[arg(long)]
    problem: PathBuf,

    /// Oracle seed, overriding the [oracle] block.
    #[arg(long)]
    seed: Option<u64>,

    /// Sample points per equality check.
    #[arg(long)]
    samples: Option<usize>,

    /// Relative tolerance of the equality oracle.
    #[arg(long)]
    rtol: Option<f64>,

    /// Write the text report here as well as to stdout.
    #[arg(long)]
    report: Option<PathBuf>,

    /// Write the JSON result document here.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn verb_parser() -> clap::builder::PossibleValuesParser {
    let mut names = vec!["run"];
    names.extend(VERBS);
    clap::builder::PossibleValuesParser::new(names)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(run(cli) as u8)
}

fn run(cli: Cli) -> i32 {
    let path = cli.problem.display().to_string();
    let src = match fs::read_to_string(&cli.problem) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}: {}", path, e);
            return 2;
        }
    };
    let mut problem = match parse_problem(&src) {
        Ok(p) => p,
        Err(d) => {
            eprintln!("{}:{}", path, d);
            return 2;
        }
    };
    if let Some(s) = cli.seed {
        problem.oracle.seed = s;
    }
    if let Some(s) = cli.samples {
        problem.oracle.samples = s;
    }
    if let Some(r) = cli.rtol {
        problem.oracle.rtol = r;
    }
    if let Err(e) = problem.oracle.validate() {
        eprintln!("{}", e);
        return 2;
    }
    let report = if cli.verb == "run" {
        if !cli.args.is_empty() {
            eprintln!("`run` takes no task arguments");
            return 2;
        }
        run_problem(&problem)
    } else {
        let mut line = cli.verb.clone();
        for a in &cli.args {
            line.push(' ');
            line.push_str(a);
        }
        match parse_task(&line, &problem) {
            Ok(t) => run_tasks(&problem, &[t]),
            Err(d) => {
                eprintln!("task: {}", d);
                return 2;
            }
        }
    };
    let text = report.to_text();
    print!("{}", text);
    for (target, body) in [(&cli.report, &text), (&cli.json, &report.to_json())] {
        if let Some(p) = target {
            if let Err(e) = fs::write(p, body) {
                eprintln!("{}: {}", p.display(), e);
                return 2;
            }
        }
    }
    report.exit_code
}
