use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use er_core::pipeline::{run, Mode, RunConfig, SimStrategy};
use er_core::{Exec, LevelsScope, NullInequality};

/// Collective entity resolution with hard and soft merge rules and denial
/// constraints.
#[derive(Parser, Debug)]
#[command(name = "er", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one pipeline mode over a specification and a data directory
    Run(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Specification file
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Directory holding one `<Relation>.tsv` or `.csv` per relation
    #[arg(long)]
    data: Option<PathBuf>,
    /// all | cs | opt | table:FILE
    #[arg(long, default_value = "opt", value_parser = parse_sim)]
    sim: SimStrategy,
    /// validate | sim | lb | ub | loose-ub | solve-one | enumerate[:n] |
    /// maximal[:n] | pm | cm | levels | explain:A,B | eval
    #[arg(long, value_parser = parse_mode)]
    mode: Mode,
    /// Directory for result files
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ground truth: a pair file, or clusters:FILE
    #[arg(long)]
    truth: Option<String>,
    /// Merge file to score in eval mode
    #[arg(long)]
    merges: Option<PathBuf>,
    /// Cell text read as null, besides the empty cell
    #[arg(long, default_value = "")]
    null_token: String,
    /// solution | ub
    #[arg(long, default_value = "solution", value_parser = parse_scope)]
    levels_scope: LevelsScope,
    /// distinct | fail
    #[arg(long, default_value = "distinct", value_parser = parse_null_ineq)]
    null_inequality: NullInequality,
    /// Run on one thread
    #[arg(long)]
    sequential: bool,
}

fn parse_sim(s: &str) -> Result<SimStrategy, String> {
    SimStrategy::parse(s).ok_or_else(|| format!("unknown similarity strategy `{s}`"))
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::parse(s).ok_or_else(|| format!("unknown mode `{s}`"))
}

fn parse_scope(s: &str) -> Result<LevelsScope, String> {
    LevelsScope::parse(s).ok_or_else(|| format!("levels scope must be solution or ub, not `{s}`"))
}

fn parse_null_ineq(s: &str) -> Result<NullInequality, String> {
    match s {
        "distinct" => Ok(NullInequality::Distinct),
        "fail" => Ok(NullInequality::Fail),
        _ => Err(format!("null inequality must be distinct or fail, not `{s}`")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(Cli { command: Command::Run(c) }) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let mut cfg = RunConfig::new(cli.mode);
    cfg.spec = cli.spec;
    cfg.data = cli.data;
    cfg.sim = cli.sim;
    cfg.out = cli.out;
    cfg.truth = cli.truth;
    cfg.merges = cli.merges;
    cfg.null_token = cli.null_token;
    cfg.levels_scope = cli.levels_scope;
    cfg.null_inequality = cli.null_inequality;
    if cli.sequential {
        cfg.exec = Exec::Sequential;
    }
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    match run(cfg, &mut stdout.lock(), &mut stderr.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
