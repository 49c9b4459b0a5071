//! Command-line surface for the traffic-steering simulator.
//!
//! Subcommands: `simulate` (one episode, telemetry + report artifacts),
//! `compare` (controller grid over paired seeds), `solve` (one-shot
//! equilibrium on a static snapshot) and `verify` (numerical property
//! suite). Exit codes: 0 ok, 1 verification failure, 2 configuration error,
//! 3 runtime error.

mod artifacts;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use artifacts::{
    summary_table, write_heatmap_csv, write_json, write_telemetry_csv, write_text,
    ComparisonDocument, ControllerSummary, ReportDocument,
};
use steergame::metrics::aggregate_report;
use steergame::sim::run_episode;
use steergame::solver::{bri, verify_equilibrium, SolverConfig};
use steergame::verify::{self, Level};

#[derive(Debug)]
pub enum CliError {
    /// Invalid scenario or parameters (exit 2).
    Config(String),
    /// Failure while running or writing artifacts (exit 3).
    Runtime(String),
    /// A verification property failed (exit 1).
    VerifyFailed,
}

impl From<steergame::Error> for CliError {
    fn from(e: steergame::Error) -> Self {
        match e {
            steergame::Error::Config(_)
            | steergame::Error::Domain(_)
            | steergame::Error::Contract(_) => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("io: {e}"))
    }
}

const SEED_ENV: &str = "STEERGAME_SEED";

#[derive(Parser)]
#[command(
    name = "steergame",
    about = "SLA-aware two-path traffic steering: potential-game controller, baselines, simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file path, or a bundled name: "congestion" (default), "symmetric".
    #[arg(long)]
    scenario: Option<String>,
    /// Master seed; overrides the scenario (fallback: STEERGAME_SEED).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and write telemetry.csv, report.json and summary.txt.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output directory (created if missing).
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Controller override: potential_game | equal_split | weighted_rr |
        /// random | sla_heuristic.
        #[arg(long)]
        controller: Option<String>,
    },
    /// Run controllers x seeds on one scenario; write comparison.json,
    /// heatmap.csv and summary.txt.
    Compare {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Comma-separated controllers (default: all five).
        #[arg(long, value_delimiter = ',')]
        controllers: Option<Vec<String>>,
        /// Comma-separated seeds (default: 1..=10).
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// Solve the static game snapshot of a scenario and print the
    /// equilibrium as JSON.
    Solve {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Coupling coefficient override for the snapshot.
        #[arg(long)]
        coupling_coeff: Option<f64>,
    },
    /// Run the numerical property suite.
    Verify {
        /// fast: identity, gradient, concavity; full: adds the grid oracle.
        #[arg(long, default_value = "fast")]
        level: String,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn env_seed() -> Option<u64> {
    std::env::var(SEED_ENV).ok().and_then(|s| s.parse().ok())
}

fn effective_seed(args: &ScenarioArgs) -> Option<u64> {
    args.seed.or_else(env_seed)
}

fn cmd_simulate(
    scenario_args: &ScenarioArgs,
    out: &PathBuf,
    controller: Option<&str>,
) -> Result<(), CliError> {
    let scenario = scenario::load(scenario_args.scenario.as_deref())?;
    let cfg = scenario.episode_config(effective_seed(scenario_args), controller)?;
    let output = run_episode(&cfg)?;
    let report = aggregate_report(
        &output.samples,
        &output.slices,
        cfg.decision_interval_ticks,
        cfg.ntn.capacity_mbps,
        cfg.fib.capacity_mbps,
    )?;

    std::fs::create_dir_all(out)?;
    write_telemetry_csv(&out.join("telemetry.csv"), &output.samples)?;
    let document = ReportDocument {
        schema_version: 1,
        controller: cfg.controller.name().to_string(),
        seed: cfg.seed,
        duration_s: cfg.duration_s,
        report,
    };
    write_json(&out.join("report.json"), &document)?;
    let table = summary_table(&[(document.controller.clone(), &document.report)]);
    write_text(&out.join("summary.txt"), &table)?;
    print!("{table}");
    Ok(())
}

const ALL_CONTROLLERS: [&str; 5] = [
    "potential_game",
    "equal_split",
    "weighted_rr",
    "random",
    "sla_heuristic",
];

fn cmd_compare(
    scenario_args: &ScenarioArgs,
    out: &PathBuf,
    controllers: Option<Vec<String>>,
    seeds: Option<Vec<u64>>,
) -> Result<(), CliError> {
    let scenario_name = scenario_args
        .scenario
        .clone()
        .unwrap_or_else(|| "congestion".to_string());
    let scenario = scenario::load(scenario_args.scenario.as_deref())?;
    let controllers =
        controllers.unwrap_or_else(|| ALL_CONTROLLERS.iter().map(|s| s.to_string()).collect());
    if controllers.is_empty() {
        return Err(CliError::Config("compare needs at least one controller".to_string()));
    }
    let seeds = seeds.unwrap_or_else(|| (1..=10).collect());
    if seeds.is_empty() {
        return Err(CliError::Config("compare needs at least one seed".to_string()));
    }

    let mut summaries = std::collections::BTreeMap::new();
    for controller in &controllers {
        let mut reports = Vec::new();
        for &seed in &seeds {
            let cfg = scenario.episode_config(Some(seed), Some(controller))?;
            let output = run_episode(&cfg)?;
            let report = aggregate_report(
                &output.samples,
                &output.slices,
                cfg.decision_interval_ticks,
                cfg.ntn.capacity_mbps,
                cfg.fib.capacity_mbps,
            )?;
            reports.push(ReportDocument {
                schema_version: 1,
                controller: controller.clone(),
                seed,
                duration_s: cfg.duration_s,
                report,
            });
        }
        summaries.insert(controller.clone(), ControllerSummary::from_reports(reports));
    }

    let comparison = ComparisonDocument {
        schema_version: 1,
        scenario: scenario_name,
        seeds,
        controllers: summaries,
    };

    std::fs::create_dir_all(out)?;
    write_json(&out.join("comparison.json"), &comparison)?;
    write_heatmap_csv(&out.join("heatmap.csv"), &comparison)?;

    let mean_reports: Vec<(String, steergame::metrics::EpisodeReport)> = comparison
        .controllers
        .iter()
        .map(|(name, s)| {
            (
                name.clone(),
                steergame::metrics::EpisodeReport {
                    effective_rtt_ms: s.mean_effective_rtt_ms,
                    loss_pct: s.mean_loss_pct,
                    throughput_mbps: s.mean_throughput_mbps,
                    fairness: s.mean_fairness,
                    per_slice_violation_rates_pct: s.mean_violation_rates_pct.clone(),
                    potential: steergame::metrics::PotentialStats {
                        mean: 0.0,
                        min: 0.0,
                        drop_count: 0,
                    },
                },
            )
        })
        .collect();
    let rows: Vec<(String, &steergame::metrics::EpisodeReport)> = mean_reports
        .iter()
        .map(|(n, r)| (n.clone(), r))
        .collect();
    let table = summary_table(&rows);
    write_text(&out.join("summary.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn cmd_solve(scenario_args: &ScenarioArgs, coupling_coeff: Option<f64>) -> Result<(), CliError> {
    let scenario = scenario::load(scenario_args.scenario.as_deref())?;
    let state = scenario.game_snapshot(coupling_coeff)?;
    let cfg = SolverConfig::default();
    let (equilibrium, trace) = bri(&state, &cfg)?;
    let seed = effective_seed(scenario_args).unwrap_or(0);
    let equilibrium_report = verify_equilibrium(&equilibrium, &cfg, 200, seed)?;

    let mut payoffs = std::collections::BTreeMap::new();
    for agent in [steergame::Agent::Dl, steergame::Agent::Ul] {
        payoffs.insert(
            agent.to_string(),
            steergame::game::payoff(agent, &equilibrium)?,
        );
    }
    let output = serde_json::json!({
        "schema_version": 1,
        "dl_allocation": equilibrium.dl_alloc.as_slice(),
        "ul_allocation": equilibrium.ul_alloc.as_slice(),
        "payoffs": payoffs,
        "potential": steergame::game::potential(&equilibrium)?,
        "sweeps": trace.sweeps,
        "converged": trace.converged,
        "final_gradient_norm": trace.final_gradient_norm,
        "equilibrium": equilibrium_report,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&output).map_err(|e| CliError::Runtime(e.to_string()))?
    );
    Ok(())
}

fn cmd_verify(level: &str, seed: Option<u64>) -> Result<(), CliError> {
    let level = match level {
        "fast" => Level::Fast,
        "full" => Level::Full,
        other => {
            return Err(CliError::Config(format!(
                "unknown verify level {other:?} (expected fast or full)"
            )))
        }
    };
    let seed = seed.or_else(env_seed).unwrap_or(42);
    let results = verify::run(level, seed);
    let mut all_passed = true;
    for r in &results {
        println!(
            "[{}] {} — {} (seed {})",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail,
            r.seed
        );
        all_passed &= r.passed;
    }
    if all_passed {
        Ok(())
    } else {
        Err(CliError::VerifyFailed)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate {
            scenario,
            out,
            controller,
        } => cmd_simulate(scenario, out, controller.as_deref()),
        Command::Compare {
            scenario,
            out,
            controllers,
            seeds,
        } => cmd_compare(scenario, out, controllers.clone(), seeds.clone()),
        Command::Solve {
            scenario,
            coupling_coeff,
        } => cmd_solve(scenario, *coupling_coeff),
        Command::Verify { level, seed } => cmd_verify(level, *seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::VerifyFailed) => ExitCode::from(1),
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
