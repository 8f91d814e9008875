//! `stacksat` — solve, sweep, simulate, and validate from the shell.
//!
//! Machine-readable output (JSON, or CSV for file artifacts) goes to
//! standard output or the requested file; human diagnostics go to standard
//! error. Action indices are 1-based everywhere in the interface. Exit
//! codes: 0 success, 1 malformed input or flags, 2 solver anomaly,
//! 3 I/O failure.

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use stacksat::experiments::{export_csv, run_sweep, SweepConfig, SweepError, SweepMode};
use stacksat::game::{BimatrixGame, SatisfactionThreshold};
use stacksat::lp::LpStatus;
use stacksat::regret::{
    run_rm, write_trace_csv, CeConstant, PostConvergence, RegretError, RmConfig, RmMode,
};
use stacksat::stackelberg::{
    pure_commit_sat, pure_commit_standard, solve_multi_lp_sat, solve_multi_lp_standard,
    solve_single_lp_standard, SolveError, StackelbergSolution,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "stacksat",
    version,
    about = "Stackelberg commitment solvers for standard and satisfaction followers"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Method {
    /// One LP per follower action; best feasible objective wins.
    MultiLp,
    /// One LP over joint distributions (standard follower only).
    SingleLp,
    /// Enumerate pure commitments.
    Pure,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the optimal-commitment problem for a game file.
    Solve {
        game_file: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::MultiLp)]
        method: Method,
        /// Solve for a satisfaction-seeking follower with this threshold.
        #[arg(long)]
        satisfaction: Option<f64>,
    },
    /// Average solved random games over a satisfaction-threshold grid.
    Sweep {
        /// Leader action count.
        #[arg(long)]
        nl: usize,
        /// Follower action count.
        #[arg(long)]
        nf: usize,
        #[arg(long, default_value_t = 40)]
        thresholds: usize,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// mixed (LP solvers) or pure (commitment enumeration).
        #[arg(long, default_value = "mixed", value_parser = SweepMode::from_str)]
        mode: SweepMode,
        /// Destination CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run regret-matching dynamics on a game file.
    Rm {
        game_file: PathBuf,
        #[arg(long, value_parser = RmMode::from_str)]
        mode: RmMode,
        #[arg(long, default_value_t = 100_000)]
        stages: u64,
        /// Convergence tolerance on the sum of positive regrets.
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Play after convergence: uniform or freeze-empirical.
        #[arg(long, default_value = "uniform", value_parser = PostConvergence::from_str)]
        post: PostConvergence,
        /// Fixed conditional-regret-matching constant (default: derived
        /// from the utility range).
        #[arg(long)]
        ce_c: Option<f64>,
        /// Write the per-stage trace as CSV to this file.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Enumerate the pure Nash equilibria of a game file.
    Ne { game_file: PathBuf },
    /// Check that a game file parses and satisfies all invariants.
    Validate { game_file: PathBuf },
}

struct CliError {
    code: u8,
    msg: String,
}

impl CliError {
    fn new(code: u8, msg: impl Into<String>) -> Self {
        Self {
            code,
            msg: msg.into(),
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Game(g) => CliError::new(1, g.to_string()),
            SolveError::NoFeasibleLp { .. } | SolveError::Lp(_) => CliError::new(2, e.to_string()),
        }
    }
}

impl From<RegretError> for CliError {
    fn from(e: RegretError) -> Self {
        match e {
            RegretError::Export(_) | RegretError::Io(_) => CliError::new(3, e.to_string()),
            other => CliError::new(1, other.to_string()),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Solve(s) => s.into(),
            SweepError::Csv(_) | SweepError::Io(_) => CliError::new(3, e.to_string()),
            other => CliError::new(1, other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match configure_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}

/// Applies the STACKSAT_THREADS cap (0 or unset = automatic).
fn configure_threads() -> Result<(), CliError> {
    let v = match std::env::var("STACKSAT_THREADS") {
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(e) => return Err(CliError::new(1, format!("STACKSAT_THREADS: {e}"))),
        Ok(v) => v,
    };
    let n: usize = v.trim().parse().map_err(|_| {
        CliError::new(
            1,
            format!("STACKSAT_THREADS must be a non-negative integer, got '{v}'"),
        )
    })?;
    if n > 0 {
        // Failure here means a pool already exists, which is fine.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Command::Solve {
            game_file,
            method,
            satisfaction,
        } => cmd_solve(&game_file, method, satisfaction),
        Command::Sweep {
            nl,
            nf,
            thresholds,
            trials,
            seed,
            mode,
            out,
        } => cmd_sweep(
            SweepConfig {
                n_leader: nl,
                n_follower: nf,
                n_thresholds: thresholds,
                n_trials: trials,
                rng_seed: seed,
                mode,
            },
            &out,
        ),
        Command::Rm {
            game_file,
            mode,
            stages,
            tol,
            seed,
            post,
            ce_c,
            trace_out,
        } => {
            let cfg = RmConfig {
                mode,
                max_stages: stages,
                spr_tolerance: tol,
                ce_constant_c: match ce_c {
                    None => CeConstant::Auto,
                    Some(c) => CeConstant::Fixed(c),
                },
                rng_seed: seed,
                post_convergence: post,
            };
            cmd_rm(&game_file, cfg, trace_out.as_deref())
        }
        Command::Ne { game_file } => cmd_ne(&game_file),
        Command::Validate { game_file } => cmd_validate(&game_file),
    }
}

fn read_game(path: &Path) -> Result<BimatrixGame, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new(3, format!("cannot read {}: {e}", path.display())))?;
    BimatrixGame::from_json(&text)
        .map_err(|e| CliError::new(1, format!("{} is not a valid game: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::new(3, format!("cannot serialise report: {e}")))?;
    println!("{text}");
    Ok(())
}

fn status_name(status: LpStatus) -> &'static str {
    match status {
        LpStatus::Optimal => "optimal",
        LpStatus::Infeasible => "infeasible",
        LpStatus::Unbounded => "unbounded",
    }
}

#[derive(Serialize)]
struct PerLpReport {
    follower_action: usize,
    status: &'static str,
    objective: Option<f64>,
    pruned: bool,
}

#[derive(Serialize)]
struct SolveReport {
    method: &'static str,
    satisfaction_threshold: Option<f64>,
    leader_strategy: Vec<f64>,
    support: Vec<usize>,
    follower_action: usize,
    leader_utility: f64,
    follower_utility: f64,
    follower_sat_prob: Option<f64>,
    per_lp: Vec<PerLpReport>,
}

impl SolveReport {
    fn new(method: &'static str, th: Option<f64>, sol: &StackelbergSolution) -> Self {
        Self {
            method,
            satisfaction_threshold: th,
            leader_strategy: sol.leader_strategy.probs().to_vec(),
            support: sol
                .leader_strategy
                .support()
                .iter()
                .map(|&s| s + 1)
                .collect(),
            follower_action: sol.follower_action + 1,
            leader_utility: sol.leader_utility,
            follower_utility: sol.follower_utility,
            follower_sat_prob: sol.follower_sat_prob,
            per_lp: sol
                .per_lp
                .iter()
                .map(|d| PerLpReport {
                    follower_action: d.follower_action + 1,
                    status: status_name(d.status),
                    objective: d.objective,
                    pruned: d.pruned,
                })
                .collect(),
        }
    }
}

fn cmd_solve(path: &Path, method: Method, satisfaction: Option<f64>) -> Result<(), CliError> {
    let g = read_game(path)?;
    let th = satisfaction
        .map(SatisfactionThreshold::new)
        .transpose()
        .map_err(|e| CliError::new(1, e.to_string()))?;
    let (name, sol) = match (method, th) {
        (Method::MultiLp, None) => ("multi-lp", solve_multi_lp_standard(&g)?),
        (Method::MultiLp, Some(th)) => ("multi-lp", solve_multi_lp_sat(&g, th)?),
        (Method::SingleLp, None) => ("single-lp", solve_single_lp_standard(&g)?),
        (Method::SingleLp, Some(_)) => {
            return Err(CliError::new(
                1,
                "--method single-lp has no satisfaction variant; use multi-lp or pure",
            ));
        }
        (Method::Pure, None) => ("pure", pure_commit_standard(&g)),
        (Method::Pure, Some(th)) => ("pure", pure_commit_sat(&g, th)),
    };
    print_json(&SolveReport::new(name, satisfaction, &sol))?;
    eprintln!(
        "{name}: leader utility {:.4}, follower action {}",
        sol.leader_utility,
        sol.follower_action + 1
    );
    Ok(())
}

#[derive(Serialize)]
struct SweepReport {
    out: String,
    mode: String,
    n_trials: u64,
    n_thresholds: usize,
    avg_std_leader_utility: f64,
    avg_max_utility: f64,
    dominance_violations: usize,
}

fn cmd_sweep(cfg: SweepConfig, out: &Path) -> Result<(), CliError> {
    let result = run_sweep(&cfg)?;
    let file = std::fs::File::create(out)
        .map_err(|e| CliError::new(3, format!("cannot create {}: {e}", out.display())))?;
    export_csv(&result, file)?;
    if !result.dominance_violations.is_empty() {
        let artifact = out.with_extension("violations.json");
        let cases: Vec<serde_json::Value> = result
            .dominance_violations
            .iter()
            .map(|v| {
                serde_json::json!({
                    "trial": v.trial,
                    "threshold": v.threshold,
                    "sat_leader_utility": v.sat_leader_utility,
                    "std_leader_utility": v.std_leader_utility,
                    "game": serde_json::from_str::<serde_json::Value>(&v.game_json)
                        .unwrap_or(serde_json::Value::Null),
                })
            })
            .collect();
        std::fs::write(
            &artifact,
            serde_json::to_string_pretty(&cases).expect("violation report serialises"),
        )
        .map_err(|e| CliError::new(3, format!("cannot write {}: {e}", artifact.display())))?;
        eprintln!(
            "warning: {} dominance violation(s) recorded in {}",
            cases.len(),
            artifact.display()
        );
    }
    print_json(&SweepReport {
        out: out.display().to_string(),
        mode: cfg.mode.to_string(),
        n_trials: result.n_trials_used,
        n_thresholds: result.thresholds.len(),
        avg_std_leader_utility: result.avg_std_leader_utility,
        avg_max_utility: result.avg_max_utility,
        dominance_violations: result.dominance_violations.len(),
    })?;
    eprintln!(
        "wrote {}-row sweep to {} ({} trials, mode {})",
        result.thresholds.len(),
        out.display(),
        result.n_trials_used,
        cfg.mode
    );
    Ok(())
}

#[derive(Serialize)]
struct RmReport {
    mode: String,
    stages: u64,
    converged_at: Option<u64>,
    modal_joint_action: (usize, usize),
    final_spr_leader: f64,
    final_spr_follower: f64,
    leader_marginal: Vec<f64>,
    follower_marginal: Vec<f64>,
    attained_leader_utility: f64,
    attained_follower_utility: f64,
}

fn cmd_rm(path: &Path, cfg: RmConfig, trace_out: Option<&Path>) -> Result<(), CliError> {
    let g = read_game(path)?;
    let trace = run_rm(&g, &cfg)?;
    if let Some(out) = trace_out {
        let file = std::fs::File::create(out)
            .map_err(|e| CliError::new(3, format!("cannot create {}: {e}", out.display())))?;
        write_trace_csv(&trace, file)?;
        eprintln!("wrote {}-stage trace to {}", trace.stages(), out.display());
    }
    let (ul, uf) = trace.attained_utilities(&g);
    let report = RmReport {
        mode: cfg.mode.to_string(),
        stages: trace.stages(),
        converged_at: trace.converged_at,
        modal_joint_action: (
            trace.modal_joint_action.0 + 1,
            trace.modal_joint_action.1 + 1,
        ),
        final_spr_leader: *trace.spr_leader.last().expect("at least one stage"),
        final_spr_follower: *trace.spr_follower.last().expect("at least one stage"),
        leader_marginal: trace.leader_marginal(),
        follower_marginal: trace.follower_marginal(),
        attained_leader_utility: ul,
        attained_follower_utility: uf,
    };
    print_json(&report)?;
    match trace.converged_at {
        Some(stage) => eprintln!(
            "converged at stage {stage}; modal joint action ({}, {})",
            report.modal_joint_action.0, report.modal_joint_action.1
        ),
        None => eprintln!(
            "no convergence within {} stages (final leader SPR {:.2e})",
            report.stages, report.final_spr_leader
        ),
    }
    Ok(())
}

#[derive(Serialize)]
struct NeReport {
    pure_ne: Vec<(usize, usize)>,
    count: usize,
}

fn cmd_ne(path: &Path) -> Result<(), CliError> {
    let g = read_game(path)?;
    let ne: Vec<(usize, usize)> = g
        .find_pure_ne()
        .into_iter()
        .map(|(s, t)| (s + 1, t + 1))
        .collect();
    eprintln!(
        "{} pure Nash equilibri{}",
        ne.len(),
        if ne.len() == 1 { "um" } else { "a" }
    );
    print_json(&NeReport {
        count: ne.len(),
        pure_ne: ne,
    })
}

#[derive(Serialize)]
struct ValidateReport {
    valid: bool,
    n_leader: usize,
    n_follower: usize,
}

fn cmd_validate(path: &Path) -> Result<(), CliError> {
    let g = read_game(path)?;
    eprintln!(
        "{}: valid {}x{} game",
        path.display(),
        g.n_leader(),
        g.n_follower()
    );
    print_json(&ValidateReport {
        valid: true,
        n_leader: g.n_leader(),
        n_follower: g.n_follower(),
    })
}
