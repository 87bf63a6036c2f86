//! The `kickmind` binary: argument parsing, subcommand dispatch and
//! exit-code mapping (0 success, 2 bad input, 3 solver non-convergence).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use kickmind_core::{select_k, serialize_belief, solve_value_function, Particle, ParticleSet, Pose};

use crate::config::{load_field, load_noise, load_planner};
use crate::localize::{
    parse_log, parse_truth_csv, run_localization, truth_at, InitPrior, LocalizeParams,
};
use crate::loggen::{
    generate_move_scan_log, generate_side_entry_log, records_to_jsonl, truth_to_csv, GeneratedLog,
    LogGenConfig,
};
use crate::scenario::load_scenario;
use crate::sim::{run_episodes, EpisodeLog, EventRecord, PolicyKind, SimSetup};
use crate::svg::value_heatmap_svg;
use crate::valuefile::{read_value_function, write_value_csv, write_value_function};
use crate::CliError;

#[derive(Parser)]
#[command(
    name = "kickmind",
    version,
    about = "Kick planning and Monte-Carlo localization toolkit for 2D robot soccer"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the offline time-to-score value function for a field.
    Solve(SolveArgs),
    /// Simulate scenario episodes under a policy and log the events.
    Play(PlayArgs),
    /// Replay a sensor log through the particle-filter localizer.
    Localize(LocalizeArgs),
    /// Cluster a particle snapshot into a compact belief summary.
    Cluster(ClusterArgs),
    /// Export a solved value function as CSV or an SVG heatmap.
    Export(ExportArgs),
    /// Generate a synthetic localization sensor log.
    GenLog(GenLogArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Field geometry JSON; defaults to the standard 9x6 m pitch.
    #[arg(long)]
    field: Option<PathBuf>,
    /// Kick catalog and planner parameters JSON; defaults to the
    /// built-in three-kick catalog.
    #[arg(long)]
    kicks: Option<PathBuf>,
    /// Output path for the binary value file.
    #[arg(long)]
    out: PathBuf,
    /// Target sup-norm residual.
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    /// Iteration cap; exceeding it exits with code 3.
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    /// Also export the values as col,row,value CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    /// Depth-one shaped search against the value function.
    Online,
    /// Depth-one search without game context.
    Greedy,
    /// Longest kick straight at the opponent goal.
    Straight,
}

impl From<PolicyArg> for PolicyKind {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Online => PolicyKind::Online,
            PolicyArg::Greedy => PolicyKind::OfflineGreedy,
            PolicyArg::Straight => PolicyKind::ForcedStraight,
        }
    }
}

#[derive(Args)]
struct PlayArgs {
    /// Scenario JSON file.
    scenario: PathBuf,
    /// Binary value file solved for the scenario's field.
    #[arg(long)]
    value: PathBuf,
    /// Kick catalog and planner parameters JSON.
    #[arg(long)]
    kicks: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PolicyArg::Online)]
    policy: PolicyArg,
    /// Number of episodes; seeds count up from the scenario seed.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// Write event lines here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LocalizeArgs {
    /// Sensor log (line-delimited JSON).
    log: PathBuf,
    #[arg(long)]
    field: Option<PathBuf>,
    /// Noise model JSON; defaults to the library noise model.
    #[arg(long)]
    noise: Option<PathBuf>,
    #[arg(long, default_value_t = kickmind_core::DEFAULT_PARTICLE_COUNT)]
    particles: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Variance ratio required to accept a larger cluster count.
    #[arg(long, default_value_t = 0.5)]
    ratio: f64,
    /// Start from a pose prior "x,y,theta" instead of uniform.
    #[arg(long)]
    init: Option<String>,
    #[arg(long, default_value_t = 0.3)]
    init_sigma_pos: f64,
    #[arg(long, default_value_t = 0.2)]
    init_sigma_theta: f64,
    /// Split the prior between the given pose and its half-turn twin
    /// (-x, -y, theta + pi); use when only the entry side is unknown.
    #[arg(long, requires = "init")]
    init_twin: bool,
    /// Ground-truth trace CSV for error columns.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Write the per-step CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write one hex belief line per observation batch.
    #[arg(long)]
    beliefs: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterArgs {
    /// Particle snapshot JSON: {"particles": [{"x", "y", "theta", "weight"}]}.
    snapshot: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    ratio: f64,
}

#[derive(Args)]
struct ExportArgs {
    /// Binary value file.
    #[arg(long)]
    value: PathBuf,
    /// Field geometry JSON; must match the value file's grid.
    #[arg(long)]
    field: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScriptArg {
    /// Random walk alternating with full-turn scans.
    MoveScan,
    /// Re-entry from the side line with an ambiguous view.
    SideEntry,
}

#[derive(Args)]
struct GenLogArgs {
    #[arg(long, value_enum)]
    script: ScriptArg,
    #[arg(long)]
    field: Option<PathBuf>,
    #[arg(long)]
    noise: Option<PathBuf>,
    #[arg(long, default_value_t = 120.0)]
    duration: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Field-of-view angle; defaults to 1.4 (move-scan) or 0.8
    /// (side-entry) radians.
    #[arg(long)]
    fov: Option<f64>,
    /// Output path for the sensor log.
    #[arg(long)]
    out: PathBuf,
    /// Output path for the ground-truth trace CSV.
    #[arg(long)]
    truth: Option<PathBuf>,
}

/// Entry point shared by the binary and the integration tests.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_thread_pool();
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Play(args) => cmd_play(args),
        Command::Localize(args) => cmd_localize(args),
        Command::Cluster(args) => cmd_cluster(args),
        Command::Export(args) => cmd_export(args),
        Command::GenLog(args) => cmd_gen_log(args),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

/// Caps rayon's worker count when KICKMIND_THREADS is set.
fn init_thread_pool() {
    if let Ok(spec) = std::env::var("KICKMIND_THREADS") {
        if let Ok(n) = spec.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::config(&format!("cannot write {}", path.display()), e))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::config(&format!("cannot read {}", path.display()), e))
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let field = load_field(args.field.as_deref())?;
    let planner = load_planner(args.kicks.as_deref())?;
    let outcome = solve_value_function(
        &field,
        &planner.action_set(),
        &planner.approach,
        &planner.reward,
        args.epsilon,
        args.max_iters,
        planner.quadrature_points,
    )?;
    write_value_function(&args.out, &outcome.value)?;
    if let Some(csv_path) = &args.csv {
        let mut buf = Vec::new();
        write_value_csv(&mut buf, &outcome.value)
            .map_err(|e| CliError::config("cannot render CSV", e))?;
        write_text(csv_path, &String::from_utf8(buf).expect("CSV is UTF-8"))?;
    }
    println!(
        "cells={} iterations={} residual={:e}",
        outcome.value.values().len(),
        outcome.iterations,
        outcome.residual
    );
    Ok(())
}

/// One event line in a multi-episode log.
#[derive(Serialize)]
struct SeededEvent<'a> {
    seed: u64,
    #[serde(flatten)]
    record: &'a EventRecord,
}

fn render_episode_lines(logs: &[EpisodeLog]) -> String {
    let mut out = String::new();
    for log in logs {
        for record in &log.events {
            let line = serde_json::to_string(&SeededEvent {
                seed: log.seed,
                record,
            })
            .expect("event lines serialize infallibly");
            out.push_str(&line);
            out.push('\n');
        }
        let summary = serde_json::json!({
            "seed": log.seed,
            "summary": {
                "total_time_s": log.total_time_s,
                "goals_for": log.goals_for,
                "goals_against": log.goals_against,
                "kicks": log.kicks,
                "terminal": log.terminal,
            }
        });
        out.push_str(&summary.to_string());
        out.push('\n');
    }
    out
}

fn cmd_play(args: PlayArgs) -> Result<(), CliError> {
    let scenario = load_scenario(&args.scenario)?;
    let field = scenario.validate()?;
    let planner = load_planner(args.kicks.as_deref())?;
    let value = read_value_function(&args.value)?;
    crate::valuefile::check_grid(&value, &field)?;
    let actions = planner.action_set();
    let setup = SimSetup {
        field: &field,
        actions: &actions,
        approach: &planner.approach,
        reward: &planner.reward,
        value: &value,
        quadrature_points: planner.quadrature_points,
    };
    if args.seeds == 0 {
        return Err(CliError::Config("--seeds must be at least 1".into()));
    }
    let logs = run_episodes(&scenario, &setup, args.policy.into(), args.seeds)?;
    let lines = render_episode_lines(&logs);
    match &args.out {
        Some(path) => write_text(path, &lines)?,
        None => print!("{lines}"),
    }
    let scored = logs.iter().filter(|l| l.goals_for > 0).count();
    let conceded = logs.iter().filter(|l| l.goals_against > 0).count();
    let (mean, stddev) = crate::sim::time_to_goal_stats(&logs, scenario.max_sim_time_s);
    println!(
        "episodes={} scored={} conceded={} mean_time_to_goal_s={} stddev_time_to_goal_s={}",
        logs.len(),
        scored,
        conceded,
        mean,
        stddev
    );
    Ok(())
}

fn parse_init(spec: &str) -> Result<Pose, CliError> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::Config(format!(
            "--init expects \"x,y,theta\", got \"{spec}\""
        )));
    }
    let mut vals = [0.0f64; 3];
    for (slot, part) in vals.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|e| CliError::config("--init", e))?;
    }
    Ok(Pose::new(vals[0], vals[1], vals[2]))
}

fn cmd_localize(args: LocalizeArgs) -> Result<(), CliError> {
    let field = load_field(args.field.as_deref())?;
    let noise = load_noise(args.noise.as_deref())?;
    let records = parse_log(&read_text(&args.log)?)?;
    let truth = match &args.truth {
        Some(path) => Some(parse_truth_csv(&read_text(path)?)?),
        None => None,
    };
    let init = match &args.init {
        Some(spec) => Some(InitPrior {
            pose: parse_init(spec)?,
            sigma_pos_m: args.init_sigma_pos,
            sigma_theta_rad: args.init_sigma_theta,
            with_twin: args.init_twin,
        }),
        None => None,
    };
    let params = LocalizeParams {
        particle_count: args.particles,
        seed: args.seed,
        ratio: args.ratio,
        init,
    };
    let estimates = run_localization(&field, &noise, &records, &params)?;

    let mut csv = String::new();
    csv.push_str("t,k,best_x,best_y,best_theta,best_mass,var_pos,var_theta,recovered");
    if truth.is_some() {
        csv.push_str(",err_pos_m,err_theta_rad");
    }
    csv.push('\n');
    for e in &estimates {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}",
            e.t,
            e.k,
            e.best_x,
            e.best_y,
            e.best_theta,
            e.best_mass,
            e.position_variance,
            e.orientation_variance,
            u8::from(e.recovered)
        ));
        if let Some(rows) = &truth {
            let truth_row = truth_at(rows, e.t);
            let err_pos =
                ((e.best_x - truth_row.x).powi(2) + (e.best_y - truth_row.y).powi(2)).sqrt();
            let mut dth = (e.best_theta - truth_row.theta) % core::f64::consts::TAU;
            if dth > core::f64::consts::PI {
                dth -= core::f64::consts::TAU;
            } else if dth <= -core::f64::consts::PI {
                dth += core::f64::consts::TAU;
            }
            csv.push_str(&format!(",{},{}", err_pos, dth.abs()));
        }
        csv.push('\n');
    }
    match &args.out {
        Some(path) => write_text(path, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(path) = &args.beliefs {
        let mut text = String::new();
        for e in &estimates {
            text.push_str(&hex::encode(&e.belief));
            text.push('\n');
        }
        write_text(path, &text)?;
    }
    if let Some(last) = estimates.last() {
        println!(
            "steps={} final_k={} final_best=({},{},{})",
            estimates.len(),
            last.k,
            last.best_x,
            last.best_y,
            last.best_theta
        );
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotRow {
    x: f64,
    y: f64,
    theta: f64,
    #[serde(default = "default_weight")]
    weight: f64,
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotFile {
    particles: Vec<SnapshotRow>,
}

fn cmd_cluster(args: ClusterArgs) -> Result<(), CliError> {
    let snapshot: SnapshotFile = crate::config::read_json(&args.snapshot)?;
    let particles: Vec<Particle> = snapshot
        .particles
        .iter()
        .map(|r| Particle {
            x: r.x,
            y: r.y,
            theta: r.theta,
            weight: r.weight,
        })
        .collect();
    let set = ParticleSet::from_particles(particles)
        .map_err(|e| CliError::config("invalid snapshot", e))?;
    let result = select_k(&set, args.seed, args.ratio)?;
    let bytes = serialize_belief(&result);
    println!(
        "{}",
        serde_json::to_string(&result).expect("clustering results serialize infallibly")
    );
    println!("belief_hex={}", hex::encode(&bytes));
    Ok(())
}

fn cmd_export(args: ExportArgs) -> Result<(), CliError> {
    if args.csv.is_none() && args.svg.is_none() {
        return Err(CliError::Config(
            "export needs at least one of --csv or --svg".into(),
        ));
    }
    let value = read_value_function(&args.value)?;
    if let Some(path) = &args.csv {
        let mut buf = Vec::new();
        write_value_csv(&mut buf, &value).map_err(|e| CliError::config("cannot render CSV", e))?;
        write_text(path, &String::from_utf8(buf).expect("CSV is UTF-8"))?;
    }
    if let Some(path) = &args.svg {
        let field = load_field(args.field.as_deref())?;
        crate::valuefile::check_grid(&value, &field)?;
        write_text(path, &value_heatmap_svg(&value, &field))?;
    }
    Ok(())
}

fn cmd_gen_log(args: GenLogArgs) -> Result<(), CliError> {
    let field = load_field(args.field.as_deref())?;
    let noise = load_noise(args.noise.as_deref())?;
    if !(args.duration > 0.0) {
        return Err(CliError::Config("--duration must be positive".into()));
    }
    let log: GeneratedLog = match args.script {
        ScriptArg::MoveScan => {
            let cfg = LogGenConfig {
                duration_s: args.duration,
                fov_rad: args.fov.unwrap_or(1.4),
                ..LogGenConfig::default()
            };
            generate_move_scan_log(&field, &noise, cfg, args.seed)
        }
        ScriptArg::SideEntry => {
            generate_side_entry_log(&field, &noise, args.seed, args.fov.unwrap_or(0.8))
        }
    };
    write_text(&args.out, &records_to_jsonl(&log.records))?;
    if let Some(path) = &args.truth {
        write_text(path, &truth_to_csv(&log.truth))?;
    }
    let obs_lines = log
        .records
        .iter()
        .filter(|r| matches!(r, crate::loggen::LogRecord::Obs(_)))
        .count();
    println!(
        "records={} odom_lines={} obs_lines={}",
        log.records.len(),
        log.records.len() - obs_lines,
        obs_lines
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_error_exits_2() {
        assert_eq!(run(["kickmind", "frobnicate"]), 2);
        assert_eq!(run(["kickmind", "solve"]), 2);
    }

    #[test]
    fn help_exits_0() {
        assert_eq!(run(["kickmind", "--help"]), 0);
    }

    #[test]
    fn missing_input_exits_2() {
        assert_eq!(
            run(["kickmind", "export", "--value", "/nonexistent.bin", "--csv", "/tmp/x.csv"]),
            2
        );
    }

    #[test]
    fn init_parser_accepts_triplets() {
        let pose = parse_init("1.5, -2.0, 0.7").unwrap();
        assert_eq!((pose.x, pose.y), (1.5, -2.0));
        assert!(parse_init("1,2").is_err());
        assert!(parse_init("a,b,c").is_err());
    }
}
