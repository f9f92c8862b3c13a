//! pinchlab command-line front end: each verification suite lives behind the
//! [`suites::Suite`] trait and is registered by name; the subcommand picks
//! the suite at runtime. Exit status: 0 all certifications pass, 1 a
//! certification failed (reports are still written), 2 configuration error,
//! 3 numerical failure.

mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, Command};

use suites::{registry, RunContext};

fn cli() -> Command {
    let mut root = Command::new("pinchlab")
        .about("numerical laboratory for pinched negatively curved model manifolds")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for suite in registry() {
        let mut sub = Command::new(suite.name())
            .about(suite.about())
            .arg(
                Arg::new("model")
                    .long("model")
                    .required(true)
                    .value_parser(clap::value_parser!(PathBuf))
                    .help("model JSON document"),
            )
            .arg(
                Arg::new("out")
                    .long("out")
                    .required(true)
                    .value_parser(clap::value_parser!(PathBuf))
                    .help("primary JSON report path; sample CSV lands next to it"),
            )
            .arg(
                Arg::new("seed")
                    .long("seed")
                    .value_parser(clap::value_parser!(u64))
                    .default_value("42"),
            )
            .arg(
                Arg::new("samples")
                    .long("samples")
                    .value_parser(clap::value_parser!(usize))
                    .default_value(suite.default_samples()),
            )
            .arg(
                Arg::new("grid")
                    .long("grid")
                    .value_parser(clap::value_parser!(usize))
                    .default_value("10000"),
            )
            .arg(
                Arg::new("r-target")
                    .long("r-target")
                    .value_parser(clap::value_parser!(f64))
                    .help("horizon radius for boundary-map style operations"),
            )
            .arg(Arg::new("quiet").long("quiet").action(ArgAction::SetTrue));
        sub = sub.arg(
            Arg::new("subset")
                .long("subset")
                .required(suite.needs_subset())
                .value_parser(clap::value_parser!(PathBuf))
                .help("second-subset boundary JSON document"),
        );
        root = root.subcommand(sub);
    }
    root
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("PINCHLAB_THREADS") {
        if let Ok(n) = threads.trim().parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }

    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let suite = registry()
        .iter()
        .find(|s| s.name() == name)
        .expect("registered subcommand");

    let ctx = match RunContext::build(sub) {
        Ok(ctx) => ctx,
        Err(e) => {
            eprintln!("pinchlab: {e}");
            return ExitCode::from(2);
        }
    };

    match suite.run(&ctx) {
        Ok(outcome) => {
            if !ctx.quiet {
                println!(
                    "{name}: {} ({})",
                    if outcome.passed { "PASS" } else { "FAIL" },
                    outcome.headline
                );
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("pinchlab {name}: {e}");
            match e {
                pinchlab::Error::ConfigParse(_) | pinchlab::Error::Io(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
