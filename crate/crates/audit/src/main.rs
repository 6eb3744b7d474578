use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use recaudit::config::PipelineConfig;
use recaudit::manifest::StepStatus;
use recaudit::pipeline::Context;
use recaudit::{AppError, Result};
use recaudit_core::Day;

/// Audit of watch-next recommendations for conspiratorial content.
#[derive(Debug, Parser)]
#[command(name = "recaudit", version)]
struct Cli {
    /// key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for the simulator, the ensemble and NMF.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Conspiracy likelihood threshold.
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Extra configuration, `key=value`; may repeat.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Replace outputs that were not produced by an identical run.
    #[arg(long, global = true)]
    overwrite: bool,
    /// Print failures as JSON on stderr.
    #[arg(long, global = true)]
    json_errors: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the simulated platform and labeled sets.
    Simulate,
    /// Snowball crawl and seed-cluster selection.
    Snowball,
    /// Harvest one day, or `--days` days starting at `--date`.
    Harvest {
        #[arg(long)]
        date: Option<Day>,
        #[arg(long, default_value_t = 1)]
        days: u32,
    },
    /// Train the classifier ensemble.
    Train,
    /// Score harvested videos.
    Score {
        #[arg(long)]
        date: Option<Day>,
    },
    /// Daily frequency trends.
    Trends,
    /// Calibration curve on the calibration sample.
    Calibrate,
    /// Filter-bubble matrix.
    Bubble,
    /// Topic and discriminating-word reports.
    Topics,
    /// Check the corpus invariants.
    Validate,
    /// Every step in order over `--days` simulated days.
    Run {
        #[arg(long)]
        date: Option<Day>,
        #[arg(long, default_value_t = 7)]
        days: u32,
    },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = PipelineConfig::load(cli.config.as_deref(), |k| std::env::var(k).ok())?;
    for s in &cli.sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| AppError::Usage(format!("--set expects key=value, got {s:?}")))?;
        config.set(k.trim(), v.trim())?;
    }
    if let Some(seed) = cli.seed {
        config.set_seed(seed);
    }
    if let Some(t) = cli.threshold {
        config.set("threshold", &t.to_string())?;
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    Ok(config)
}

fn report(step: &str, status: &StepStatus) {
    let state = match status {
        StepStatus::Ran(_) => "done",
        StepStatus::UpToDate(_) => "up to date",
    };
    println!("{step}: {state} ({} outputs)", status.manifest().outputs.len());
}

fn days_from(start: Day, days: u32) -> impl Iterator<Item = Day> {
    (0..days as i32).map(move |i| start.offset(i))
}

fn execute(cli: &Cli) -> Result<()> {
    let config = load_config(cli)?;
    let start = config.sim.start;
    let ctx = Context::new(config, cli.overwrite);
    match &cli.command {
        Command::Simulate => report("simulate", &ctx.simulate()?),
        Command::Snowball => report("snowball", &ctx.snowball()?),
        Command::Harvest { date, days } => {
            for d in days_from(date.unwrap_or(start), *days) {
                report(&format!("harvest {d}"), &ctx.harvest(d)?);
            }
        }
        Command::Train => report("train", &ctx.train()?),
        Command::Score { date } => {
            for s in ctx.score(*date)? {
                report("score", &s);
            }
        }
        Command::Trends => report("trends", &ctx.trends()?),
        Command::Calibrate => report("calibrate", &ctx.calibrate()?),
        Command::Bubble => report("bubble", &ctx.bubble()?),
        Command::Topics => report("topics", &ctx.topics()?),
        Command::Validate => validate(&ctx)?,
        Command::Run { date, days } => {
            report("simulate", &ctx.simulate()?);
            report("snowball", &ctx.snowball()?);
            for d in days_from(date.unwrap_or(start), *days) {
                report(&format!("harvest {d}"), &ctx.harvest(d)?);
            }
            report("train", &ctx.train()?);
            for s in ctx.score(None)? {
                report("score", &s);
            }
            report("calibrate", &ctx.calibrate()?);
            report("trends", &ctx.trends()?);
            report("bubble", &ctx.bubble()?);
            report("topics", &ctx.topics()?);
            validate(&ctx)?;
        }
    }
    Ok(())
}

fn validate(ctx: &Context) -> Result<()> {
    let violations = ctx.validate()?;
    for v in &violations {
        println!("{v}");
    }
    if violations.is_empty() {
        println!("validate: no violations");
        Ok(())
    } else {
        Err(AppError::data(format!("{} invariant violations", violations.len())))
    }
}

fn fail(err: &AppError, json: bool) -> ExitCode {
    if json {
        eprintln!("{}", err.to_json());
    } else {
        eprintln!("error: {err}");
    }
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let json_errors = std::env::args().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            if json_errors {
                return fail(&AppError::Usage(e.to_string().trim().to_string()), true);
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e, cli.json_errors),
    }
}
