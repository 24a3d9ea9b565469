//! Command-line interface: `train`, `eval`, `baseline`, and
//! `validate-config` subcommands.
//!
//! Exit codes: 0 on success, 1 on configuration errors (bad flags, bad
//! config file, unknown names), 2 on runtime errors.

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::agents::LearnerKind;
use crate::domain::{parse_config, validate_config, ConfigError, SimConfig};
use crate::harness::{run_scenario, AgentMode, HarnessError, RunOutcome, Scenario, SCENARIO_NAMES};
use crate::metrics::fmt_sig;

#[derive(Debug, Parser)]
#[command(
    name = "vanet-qos",
    about = "VANET QoS simulator: RSU agents learn per-vehicle transmission waiting times",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a learner on a scenario and write metrics plus model files.
    Train(RunArgs),
    /// Evaluate a saved model with exploration and learning disabled.
    Eval(RunArgs),
    /// Run a non-learning baseline policy.
    Baseline(BaselineArgs),
    /// Parse and validate a configuration file.
    ValidateConfig {
        /// Config file path, or `default` for the built-in defaults.
        #[arg(long, default_value = "default")]
        config: String,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Config file path, or `default` for the built-in defaults.
    #[arg(long, default_value = "default")]
    config: String,
    /// Scenario name: single-rsu, multi-rsu, or config.
    #[arg(long, default_value = "single-rsu")]
    scenario: String,
    /// Learner: q, dqn, or ac. For `eval` it defaults to the model file's kind.
    #[arg(long)]
    learner: Option<String>,
    /// Share one learner across all RSUs instead of one per RSU.
    #[arg(long)]
    single_agent: bool,
    /// Use one independent learner per RSU (requires >= 2 RSUs).
    #[arg(long, conflicts_with = "single_agent")]
    multi_agent: bool,
    /// Episode count; overrides the configured default. 0 evaluates only.
    #[arg(long)]
    episodes: Option<u32>,
    /// Master seed; overrides the configured default.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for metrics CSVs, model files, and the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Model file: pretrained initialization for `train`, required for `eval`.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Use the uniform 900-byte packet schedule.
    #[arg(long)]
    uniform_900b: bool,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    /// Config file path, or `default` for the built-in defaults.
    #[arg(long, default_value = "default")]
    config: String,
    /// Scenario name: single-rsu, multi-rsu, or config.
    #[arg(long, default_value = "single-rsu")]
    scenario: String,
    /// Baseline policy: no-wait, static-priority, or fixed-wait.
    #[arg(long, default_value = "no-wait")]
    kind: String,
    /// Episode count (baselines are stateless; one is usually enough).
    #[arg(long, default_value_t = 1)]
    episodes: u32,
    /// Master seed; overrides the configured default.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for metrics CSVs and the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the uniform 900-byte packet schedule.
    #[arg(long)]
    uniform_900b: bool,
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Scenario(_) | HarnessError::Config(_) => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

/// Entry point behind `main`; returns the process exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            eprint!("{e}");
            return 1;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(args) => run(args, false),
        Command::Eval(args) => run(args, true),
        Command::Baseline(args) => baseline(args),
        Command::ValidateConfig { config } => {
            let cfg = load_config(&config)?;
            validate_config(cfg)?;
            println!("configuration ok");
            Ok(())
        }
    }
}

fn load_config(spec: &str) -> Result<SimConfig, CliError> {
    if spec == "default" {
        return Ok(SimConfig::default());
    }
    let text = std::fs::read_to_string(spec).map_err(|source| {
        CliError::Config(
            ConfigError::Io {
                path: spec.to_string(),
                source,
            }
            .to_string(),
        )
    })?;
    Ok(parse_config(&text)?)
}

fn parse_learner(name: &str) -> Result<LearnerKind, CliError> {
    LearnerKind::parse(name).ok_or_else(|| {
        CliError::Config(format!(
            "unknown learner `{name}`; available learners: q, dqn, ac"
        ))
    })
}

fn parse_scenario(name: &str, cfg: &SimConfig) -> Result<Scenario, CliError> {
    Scenario::with_geometry(name, cfg).ok_or_else(|| {
        CliError::Config(format!(
            "unknown scenario `{name}`; available scenarios: {}",
            SCENARIO_NAMES.join(", ")
        ))
    })
}

fn run(args: RunArgs, evaluate: bool) -> Result<(), CliError> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }

    let mut scenario = parse_scenario(&args.scenario, &cfg)?;
    scenario.episodes = args.episodes;
    scenario.pretrained = args.model.clone();
    if args.uniform_900b {
        scenario.profile_set = crate::domain::ProfileSetKind::Uniform900B;
    }
    scenario.agent_mode = if args.multi_agent {
        AgentMode::MultiAgent
    } else {
        AgentMode::SingleAgent
    };

    if evaluate && args.model.is_none() {
        return Err(CliError::Config(
            "eval requires --model pointing at a saved model file".into(),
        ));
    }

    scenario.learner = match (&args.learner, &args.model) {
        (Some(name), _) => parse_learner(name)?,
        (None, Some(path)) => kind_of_model(path)?,
        (None, None) => LearnerKind::TabularQ,
    };

    let outcome = run_scenario(&cfg, &scenario, args.out.as_deref(), evaluate)?;
    print_outcome(&scenario, &outcome, args.out.as_deref());
    Ok(())
}

fn baseline(args: BaselineArgs) -> Result<(), CliError> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let mut scenario = parse_scenario(&args.scenario, &cfg)?;
    scenario.agent_mode = match args.kind.as_str() {
        "no-wait" => AgentMode::BaselineNoWait,
        "static-priority" => AgentMode::BaselineStaticPriority,
        "fixed-wait" => AgentMode::FixedWait,
        other => {
            return Err(CliError::Config(format!(
            "unknown baseline `{other}`; available baselines: no-wait, static-priority, fixed-wait"
        )))
        }
    };
    scenario.episodes = Some(args.episodes);
    if args.uniform_900b {
        scenario.profile_set = crate::domain::ProfileSetKind::Uniform900B;
    }

    let outcome = run_scenario(&cfg, &scenario, args.out.as_deref(), false)?;
    print_outcome(&scenario, &outcome, args.out.as_deref());
    Ok(())
}

fn kind_of_model(path: &Path) -> Result<LearnerKind, CliError> {
    let saved = crate::agents::load_model(path).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(match saved {
        crate::agents::SavedModel::QTable { .. } => LearnerKind::TabularQ,
        crate::agents::SavedModel::Dqn { .. } => LearnerKind::Dqn,
        crate::agents::SavedModel::ActorCritic { .. } => LearnerKind::ActorCritic,
    })
}

fn print_outcome(scenario: &Scenario, outcome: &RunOutcome, out_dir: Option<&Path>) {
    for (summary, reward) in outcome.summaries.iter().zip(&outcome.episode_rewards) {
        println!(
            "episode {:>3}  reward {:>14.6}  transitions {:>6}",
            summary.episode, reward, summary.transitions
        );
    }
    if let Some(last) = outcome.summaries.last() {
        println!();
        println!(
            "{} ({} mode), final episode {}:",
            scenario.name,
            scenario.agent_mode.name(),
            last.episode
        );
        println!("rsu  category  mean_latency_s  throughput_bps  jain");
        for row in &last.rows {
            println!(
                "{:>3}  {:<8}  {:>14}  {:>14}  {}",
                row.rsu,
                row.category.label(),
                fmt_sig(row.mean_latency_s),
                fmt_sig(row.throughput_bps),
                row.jain.map(fmt_sig).unwrap_or_else(|| "-".into()),
            );
        }
    }
    println!();
    println!(
        "waits assigned {} (violations {}), learner updates {}",
        outcome.wait_assignments, outcome.wait_violations, outcome.learner_updates
    );
    if let Some(dir) = out_dir {
        println!("outputs written to {}", dir.display());
    }
}
