use std::path::{Path, PathBuf};
use std::process::ExitCode;

use avexplain_cli::batch::{run_batch, write_csv, BatchSpec};
use avexplain_cli::config::Config;
use avexplain_cli::run::{plan_run, Run};
use avexplain_cli::CliError;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "avexplain", version, about = "Plan driving scenarios and explain the plans with counterfactuals")]
struct Cli {
    /// TOML config file; defaults to $AVEXPLAIN_CONFIG when set.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Plan a scenario and persist the run directory.
    Plan(PlanArgs),
    /// Answer a counterfactual query against a saved run.
    Explain(ExplainArgs),
    /// Plan a scenario over consecutive seeds and tabulate query answers.
    Batch(BatchArgs),
}

#[derive(Debug, Args)]
struct Planning {
    #[arg(long)]
    scenario: PathBuf,
    /// MCTS iterations K.
    #[arg(long)]
    iterations: Option<usize>,
    /// Maximum macro actions per simulation.
    #[arg(long)]
    max_depth: Option<usize>,
}

#[derive(Debug, Args)]
struct Answering {
    #[arg(long, default_value_t = 1)]
    n_causes: usize,
    #[arg(long, default_value_t = 1)]
    n_effects: usize,
    /// Phrase table preset: literal or narrative.
    #[arg(long)]
    phrasing: Option<String>,
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[command(flatten)]
    planning: Planning,
    /// RNG seed; defaults to the config's planner seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Queries answered now and stored in run.json (repeatable).
    #[arg(long = "query")]
    queries: Vec<String>,
    #[command(flatten)]
    answering: Answering,
}

#[derive(Debug, Args)]
struct ExplainArgs {
    #[arg(long)]
    run: PathBuf,
    /// Counterfactual actions, e.g. "omega1=Continue" or "omega1=Continue,omega2=Exit-right".
    #[arg(long)]
    query: String,
    #[command(flatten)]
    answering: Answering,
    /// Print the sentence before post-processing.
    #[arg(long, conflicts_with = "json")]
    raw: bool,
    /// Print the causal summary as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct BatchArgs {
    #[command(flatten)]
    planning: Planning,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    first_seed: u64,
    /// Queries separated by ';'.
    #[arg(long)]
    queries: String,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    answering: Answering,
}

fn planning_setup(config: &Config, p: &Planning) -> avexplain::planner::PlanningSetup {
    let mut setup = config.setup();
    if let Some(k) = p.iterations {
        setup.planner.iterations = k;
    }
    if let Some(d) = p.max_depth {
        setup.planner.max_depth = d;
    }
    setup
}

fn cmd_plan(config: &Config, args: &PlanArgs) -> Result<(), CliError> {
    let mut setup = planning_setup(config, &args.planning);
    if let Some(seed) = args.seed {
        setup.planner.seed = seed;
    }
    let mut run = plan_run(&args.planning.scenario, &setup)?;
    let table = config.table(args.answering.phrasing.as_deref())?;
    for q in &args.queries {
        let x = run.explain(q, args.answering.n_causes, args.answering.n_effects, &config.causal, &table)?;
        run.artifacts.explanations.push(x);
    }
    run.save(&args.out)?;
    let names: Vec<&str> = run.artifacts.plan.iter().map(|a| a.name()).collect();
    println!("[{}]", names.join(", "));
    for x in &run.artifacts.explanations {
        println!("{}: {}", x.query, x.text);
    }
    Ok(())
}

fn cmd_explain(config: &Config, args: &ExplainArgs) -> Result<(), CliError> {
    let run = Run::load(&args.run)?;
    let table = config.table(args.answering.phrasing.as_deref())?;
    let x = run.explain(&args.query, args.answering.n_causes, args.answering.n_effects, &config.causal, &table)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&x.summary).expect("summary serialises"));
    } else if args.raw {
        println!("{}", x.raw);
    } else {
        println!("{}", x.text);
    }
    Ok(())
}

fn cmd_batch(config: &Config, args: &BatchArgs) -> Result<(), CliError> {
    let spec = BatchSpec {
        first_seed: args.first_seed,
        runs: args.runs,
        queries: args.queries.split(';').map(str::trim).filter(|q| !q.is_empty()).map(String::from).collect(),
        setup: planning_setup(config, &args.planning),
        n_causes: args.answering.n_causes,
        n_effects: args.answering.n_effects,
        causal: config.causal,
        table: config.table(args.answering.phrasing.as_deref())?,
    };
    // reject malformed queries before spending time on planning
    for q in &spec.queries {
        q.parse::<avexplain::causal::CounterfactualQuery>()?;
    }
    let rows = run_batch(&args.planning.scenario, &spec);
    write_csv(&rows, &args.out)?;
    let failed: Vec<_> = rows.iter().filter(|r| r.exit_code != 0).collect();
    println!("{} rows written to {}, {} failed", rows.len(), args.out.display(), failed.len());
    match failed.first() {
        Some(r) => Err(CliError::Batch { seed: r.seed, query: r.query.clone(), message: r.error.clone(), code: r.exit_code }),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Config::resolve(cli.config.as_deref().map(Path::new)).and_then(|config| match &cli.command {
        Command::Plan(a) => cmd_plan(&config, a),
        Command::Explain(a) => cmd_explain(&config, a),
        Command::Batch(a) => cmd_batch(&config, a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
