use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lowregret::dataset::PolyaMode;
use lowregret_cli::battery;
use lowregret_cli::commands::{self, DatasetRequest, TvMethodArg, TvRequest, IMPOSSIBILITY_FLOOR};
use lowregret_cli::config::ExperimentConfig;
use lowregret_cli::error::{CliError, ParseError, Result};
use lowregret_cli::spec::ModelSpec;

#[derive(Parser)]
#[command(name = "lowregret", version, about = "Regret and distance experiments for robustified next-token models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play a model's softmax policy against an adversary for several trials.
    Simulate(RunArgs),
    /// Total-variation distance between two models' sequence distributions.
    Tv(TvArgs),
    /// Generate a masked training corpus as JSON lines.
    Dataset(DatasetArgs),
    /// Distance/regret tradeoff of bounded-context candidates against the de Bruijn pair.
    Impossibility(ImpossibilityArgs),
    /// Checks for the utility-agnostic switching model.
    VswitchEval(VswitchArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    adversary: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exact,
    Mc,
}

#[derive(Args)]
struct TvArgs {
    #[arg(long)]
    p: String,
    #[arg(long)]
    q: String,
    #[arg(long, default_value_t = 10)]
    horizon: usize,
    #[arg(long, value_enum, default_value_t = Method::Exact)]
    method: Method,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct DatasetArgs {
    #[arg(long, default_value = "bernoulli")]
    model: String,
    #[arg(long, default_value_t = 1.5)]
    alpha_mask: f64,
    #[arg(long, default_value_t = 1000)]
    n_base: usize,
    /// Urn records to keep (quota mode).
    #[arg(long, default_value_t = 1000)]
    n_polya: usize,
    /// Draw budget in quota mode.
    #[arg(long, default_value_t = 100_000)]
    max_draws: usize,
    /// Draw exactly this many urn sequences and keep whichever qualify.
    #[arg(long)]
    pool: Option<usize>,
    #[arg(long, default_value_t = 1024)]
    horizon: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct ImpossibilityArgs {
    #[arg(short = 'L', long = "window", default_value_t = 8)]
    window: usize,
    /// Candidate model spec; repeat for several. Defaults to the built-in suite.
    #[arg(long = "candidate")]
    candidates: Vec<String>,
    #[arg(long, default_value_t = 4000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct VswitchArgs {
    #[arg(long, default_value_t = 2048)]
    horizon: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<String>,
}

fn flag_error(flag: &str) -> impl Fn(ParseError) -> CliError + '_ {
    move |e| CliError::Parse(e.at(flag, 1, 1))
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::parse(&fs::read_to_string(path)?, path)?,
        None => ExperimentConfig::default(),
    };
    let flags = [
        ("model", &args.model),
        ("adversary", &args.adversary),
        ("horizon", &args.horizon),
        ("trials", &args.trials),
        ("eta", &args.eta),
        ("alpha", &args.alpha),
        ("seed", &args.seed),
        ("out", &args.out),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v).map_err(flag_error(&format!("--{key}")))?;
        }
    }
    Ok(cfg)
}

fn emit(out: Option<&str>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn parse_model(flag: &str, src: &str) -> Result<ModelSpec> {
    ModelSpec::parse(src).map_err(flag_error(flag))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = load_config(&args)?;
            let out = commands::simulate(&cfg)?;
            emit(cfg.out.as_deref(), &out.csv)
        }
        Command::Tv(args) => {
            let (p, q) = (parse_model("--p", &args.p)?, parse_model("--q", &args.q)?);
            let req = TvRequest {
                p: &p,
                q: &q,
                horizon: args.horizon,
                method: match args.method {
                    Method::Exact => TvMethodArg::Exact,
                    Method::Mc => TvMethodArg::MonteCarlo,
                },
                samples: args.samples,
                alpha: args.alpha,
                seed: args.seed,
            };
            emit(args.out.as_deref(), &commands::tv(&req)?.0)
        }
        Command::Dataset(args) => {
            let base = parse_model("--model", &args.model)?;
            let mode = match args.pool {
                Some(pool) => PolyaMode::FixedPool { pool },
                None => PolyaMode::Quota { target: args.n_polya, max_draws: args.max_draws },
            };
            let req = DatasetRequest {
                base: &base,
                alpha_mask: args.alpha_mask,
                n_base: args.n_base,
                mode,
                horizon: args.horizon,
                seed: args.seed,
            };
            let (jsonl, stats, s) = commands::dataset(&req)?;
            match &args.out {
                Some(path) => {
                    fs::write(path, jsonl)?;
                    println!("{stats}");
                }
                None => {
                    print!("{jsonl}");
                    eprintln!("{stats}");
                }
            }
            if s.shortfall > 0 {
                eprintln!("warning: draw budget exhausted, {} urn records short of the quota", s.shortfall);
            }
            Ok(())
        }
        Command::Impossibility(args) => {
            let builtin = args.candidates.is_empty();
            let candidates = if builtin {
                commands::impossibility_suite(args.window)
            } else {
                args.candidates.iter().map(|c| parse_model("--candidate", c)).collect::<Result<_>>()?
            };
            let (csv, rows) = commands::impossibility(args.window, &candidates, args.trials, args.seed)?;
            emit(args.out.as_deref(), &csv)?;
            if builtin {
                if let Some(bad) = rows.iter().find(|r| r.sum < IMPOSSIBILITY_FLOOR) {
                    return Err(CliError::Check(format!("{}: sum {} below 1/12", bad.candidate, bad.sum)));
                }
            }
            Ok(())
        }
        Command::VswitchEval(args) => {
            let checks = battery::run(args.horizon, args.trials, args.seed)?;
            emit(args.out.as_deref(), &battery::to_csv(&checks))?;
            match checks.iter().filter(|c| !c.pass).count() {
                0 => Ok(()),
                n => Err(CliError::Check(format!("{n} vswitch checks failed"))),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
