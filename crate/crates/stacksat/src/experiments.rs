//! Monte Carlo threshold sweeps over random games, plus the bundled 10×7
//! reference game used throughout the test suite.
//!
//! A sweep samples fresh uniform(0,1) games, solves the standard commitment
//! problem once per trial, solves the satisfaction commitment problem on a
//! uniform threshold grid over [0,1], and averages leader utilities and
//! follower satisfaction probabilities across trials. Results export to CSV.

use crate::game::{BimatrixGame, GameError, SatisfactionThreshold};
use crate::stackelberg::{
    pure_commit_sat, pure_commit_standard, solve_multi_lp_sat, solve_multi_lp_standard, SolveError,
    StackelbergSolution,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep config: {0}")]
    InvalidConfig(String),
    #[error("bundled game fixture is corrupt: {0}")]
    FixtureCorrupt(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed sweep csv: {0}")]
    Malformed(String),
}

/// Which solver family a sweep uses: mixed commitments via the per-action
/// LPs, or pure commitments via direct enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Mixed,
    Pure,
}

impl fmt::Display for SweepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepMode::Mixed => "mixed",
            SweepMode::Pure => "pure",
        })
    }
}

impl FromStr for SweepMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mixed" => Ok(SweepMode::Mixed),
            "pure" => Ok(SweepMode::Pure),
            other => Err(format!(
                "unknown sweep mode '{other}' (expected mixed or pure)"
            )),
        }
    }
}

/// Configuration of a threshold sweep.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub n_leader: usize,
    pub n_follower: usize,
    /// Number of grid points on [0,1], endpoints included.
    pub n_thresholds: usize,
    pub n_trials: u64,
    pub rng_seed: u64,
    pub mode: SweepMode,
}

impl SweepConfig {
    fn validate(&self) -> Result<(), SweepError> {
        if self.n_leader < 1 || self.n_follower < 1 {
            return Err(SweepError::InvalidConfig(
                "both players need at least one action".into(),
            ));
        }
        if self.n_thresholds < 2 {
            return Err(SweepError::InvalidConfig(
                "n_thresholds must be >= 2 (the grid includes both endpoints)".into(),
            ));
        }
        if self.n_trials < 1 {
            return Err(SweepError::InvalidConfig("n_trials must be >= 1".into()));
        }
        Ok(())
    }
}

/// A trial where the satisfaction solution fell measurably short of the
/// standard solution. Dominance of the satisfaction value is conjectured,
/// not proven, for mixed commitments, so these are collected as
/// counterexample candidates rather than asserted away.
#[derive(Debug, Clone)]
pub struct DominanceViolation {
    pub trial: u64,
    pub threshold: f64,
    pub sat_leader_utility: f64,
    pub std_leader_utility: f64,
    /// Full game serialised as JSON so the case can be replayed.
    pub game_json: String,
}

/// Averages over the trials of a sweep. The standard-solution utility and
/// the max-entry utility do not depend on the threshold, so they are
/// scalars; the satisfaction columns are per-threshold vectors.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub thresholds: Vec<f64>,
    pub avg_sat_leader_utility: Vec<f64>,
    pub avg_std_leader_utility: f64,
    pub avg_max_utility: f64,
    pub avg_sat_probability: Vec<f64>,
    pub n_trials_used: u64,
    pub dominance_violations: Vec<DominanceViolation>,
}

/// Draws a game with all entries i.i.d. uniform(0,1): leader matrix first,
/// follower matrix second, each in row-major order.
pub fn sample_game<R: Rng>(
    n_leader: usize,
    n_follower: usize,
    rng: &mut R,
) -> Result<BimatrixGame, GameError> {
    let mut draw = |n: usize, m: usize| -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..m).map(|_| rng.random::<f64>()).collect())
            .collect()
    };
    let u_leader = draw(n_leader, n_follower);
    let u_follower = draw(n_leader, n_follower);
    BimatrixGame::new(u_leader, u_follower)
}

/// Mean of the maximum of `n_pairs` i.i.d. uniform(0,1) variables, i.e. the
/// mean of the distribution with CDF y^n on (0,1): n/(n+1).
pub fn expected_max_utility(n_pairs: usize) -> f64 {
    assert!(n_pairs >= 1, "need at least one entry");
    n_pairs as f64 / (n_pairs + 1) as f64
}

const FIXTURE_JSON: &str = include_str!("../data/reference_game_10x7.json");
const FIXTURE_LEADER_SUM: f64 = 37.959700000000005;
const FIXTURE_FOLLOWER_SUM: f64 = 33.759499999999996;

/// Loads the bundled 10×7 reference game, verifying entry checksums.
pub fn load_reference_game() -> Result<BimatrixGame, SweepError> {
    let g = BimatrixGame::from_json(FIXTURE_JSON)?;
    if g.n_leader() != 10 || g.n_follower() != 7 {
        return Err(SweepError::FixtureCorrupt(format!(
            "expected 10x7, got {}x{}",
            g.n_leader(),
            g.n_follower()
        )));
    }
    let sum = |m: &[Vec<f64>]| -> f64 { m.iter().flatten().sum() };
    let ls = sum(g.leader_matrix());
    let fs = sum(g.follower_matrix());
    if (ls - FIXTURE_LEADER_SUM).abs() > 1e-12 || (fs - FIXTURE_FOLLOWER_SUM).abs() > 1e-12 {
        return Err(SweepError::FixtureCorrupt(format!(
            "entry sums {ls}/{fs} do not match {FIXTURE_LEADER_SUM}/{FIXTURE_FOLLOWER_SUM}"
        )));
    }
    Ok(g)
}

/// [`load_reference_game`] with the checksum failure treated as unreachable
/// (the fixture is compiled into the binary).
pub fn reference_game() -> BimatrixGame {
    load_reference_game().expect("bundled fixture is valid")
}

fn linspace01(k: usize) -> Vec<f64> {
    let last = (k - 1) as f64;
    (0..k).map(|i| i as f64 / last).collect()
}

struct TrialOutcome {
    max_utility: f64,
    std_utility: f64,
    sat_utilities: Vec<f64>,
    sat_probabilities: Vec<f64>,
    violations: Vec<DominanceViolation>,
}

fn run_trial(
    cfg: &SweepConfig,
    thresholds: &[f64],
    trial: u64,
) -> Result<TrialOutcome, SweepError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(trial);
    let g = sample_game(cfg.n_leader, cfg.n_follower, &mut rng)?;
    let max_utility = g.max_leader_payoff();
    let standard: StackelbergSolution = match cfg.mode {
        SweepMode::Mixed => solve_multi_lp_standard(&g)?,
        SweepMode::Pure => pure_commit_standard(&g),
    };
    let std_utility = standard.leader_utility;

    let mut sat_utilities = Vec::with_capacity(thresholds.len());
    let mut sat_probabilities = Vec::with_capacity(thresholds.len());
    let mut violations = Vec::new();
    for &th in thresholds {
        let th = SatisfactionThreshold::new(th).expect("grid values are finite");
        let sol = match cfg.mode {
            SweepMode::Mixed => solve_multi_lp_sat(&g, th)?,
            SweepMode::Pure => pure_commit_sat(&g, th),
        };
        let sat_prob = sol
            .follower_sat_prob
            .expect("satisfaction solvers report the satisfaction probability");
        match cfg.mode {
            // Dominance of the satisfaction value over the standard value is
            // a theorem for pure commitments; a violation means a solver bug.
            SweepMode::Pure => assert!(
                sol.leader_utility >= std_utility,
                "pure satisfaction solution ({}) fell below the standard solution ({}) \
                 at threshold {} in trial {trial}",
                sol.leader_utility,
                std_utility,
                th.value(),
            ),
            SweepMode::Mixed => {
                if sol.leader_utility < std_utility - 1e-7 {
                    violations.push(DominanceViolation {
                        trial,
                        threshold: th.value(),
                        sat_leader_utility: sol.leader_utility,
                        std_leader_utility: std_utility,
                        game_json: g.to_json(),
                    });
                }
            }
        }
        sat_utilities.push(sol.leader_utility);
        sat_probabilities.push(sat_prob);
    }

    // At threshold 0 every entry satisfies the follower and at threshold 1
    // none does (entries are strictly inside (0,1)); in both cases the
    // constraint matrices vanish and the leader simply takes the game's
    // best entry. This holds exactly, not approximately.
    assert!(
        sat_utilities[0] == max_utility && sat_utilities[thresholds.len() - 1] == max_utility,
        "degenerate-threshold utilities ({}, {}) differ from the max entry {max_utility} \
         in trial {trial}",
        sat_utilities[0],
        sat_utilities[thresholds.len() - 1],
    );

    Ok(TrialOutcome {
        max_utility,
        std_utility,
        sat_utilities,
        sat_probabilities,
        violations,
    })
}

/// Runs `cfg.n_trials` independent trials and averages them.
///
/// Each trial draws its game from an RNG substream indexed by the trial
/// number, so results are bitwise reproducible regardless of how many
/// threads participate. Trials run in parallel; aggregation folds the
/// per-trial outcomes in trial order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult, SweepError> {
    cfg.validate()?;
    let thresholds = linspace01(cfg.n_thresholds);
    let outcomes: Vec<TrialOutcome> = (0..cfg.n_trials)
        .into_par_iter()
        .map(|trial| run_trial(cfg, &thresholds, trial))
        .collect::<Result<_, _>>()?;

    let k = cfg.n_thresholds;
    let mut sat_sum = vec![0.0; k];
    let mut prob_sum = vec![0.0; k];
    let mut std_sum = 0.0;
    let mut max_sum = 0.0;
    let mut dominance_violations = Vec::new();
    for o in outcomes {
        for i in 0..k {
            sat_sum[i] += o.sat_utilities[i];
            prob_sum[i] += o.sat_probabilities[i];
        }
        std_sum += o.std_utility;
        max_sum += o.max_utility;
        dominance_violations.extend(o.violations);
    }
    let t = cfg.n_trials as f64;
    Ok(SweepResult {
        thresholds,
        avg_sat_leader_utility: sat_sum.into_iter().map(|s| s / t).collect(),
        avg_std_leader_utility: std_sum / t,
        avg_max_utility: max_sum / t,
        avg_sat_probability: prob_sum.into_iter().map(|s| s / t).collect(),
        n_trials_used: cfg.n_trials,
        dominance_violations,
    })
}

const CSV_HEADER: [&str; 5] = [
    "threshold",
    "avg_sat_leader_utility",
    "avg_std_leader_utility",
    "avg_max_utility",
    "avg_sat_probability",
];

/// Writes one row per threshold; the threshold-independent standard and max
/// columns are repeated on every row for plotting convenience. Numbers use
/// the shortest representation that parses back to the same value, so a
/// re-import reproduces the vectors bitwise.
pub fn export_csv<W: std::io::Write>(result: &SweepResult, w: W) -> Result<(), SweepError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CSV_HEADER)?;
    for i in 0..result.thresholds.len() {
        wtr.write_record(&[
            format!("{}", result.thresholds[i]),
            format!("{}", result.avg_sat_leader_utility[i]),
            format!("{}", result.avg_std_leader_utility),
            format!("{}", result.avg_max_utility),
            format!("{}", result.avg_sat_probability[i]),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a file produced by [`export_csv`]. Trial counts and violation
/// diagnostics are not stored in the CSV, so those fields come back empty.
pub fn import_csv<R: std::io::Read>(r: R) -> Result<SweepResult, SweepError> {
    let mut rdr = csv::Reader::from_reader(r);
    {
        let headers = rdr.headers()?;
        if headers != &csv::StringRecord::from(CSV_HEADER.as_slice()) {
            return Err(SweepError::Malformed(format!(
                "unexpected header {headers:?}"
            )));
        }
    }
    let mut thresholds = Vec::new();
    let mut sat = Vec::new();
    let mut prob = Vec::new();
    let mut std_util = None;
    let mut max_util = None;
    for record in rdr.records() {
        let record = record?;
        if record.len() != 5 {
            return Err(SweepError::Malformed(format!(
                "expected 5 columns, got {}",
                record.len()
            )));
        }
        let field = |i: usize| -> Result<f64, SweepError> {
            record[i]
                .parse::<f64>()
                .map_err(|e| SweepError::Malformed(format!("bad number '{}': {e}", &record[i])))
        };
        thresholds.push(field(0)?);
        sat.push(field(1)?);
        std_util.get_or_insert(field(2)?);
        max_util.get_or_insert(field(3)?);
        prob.push(field(4)?);
    }
    if thresholds.len() < 2 {
        return Err(SweepError::Malformed("need at least two rows".into()));
    }
    Ok(SweepResult {
        thresholds,
        avg_sat_leader_utility: sat,
        avg_std_leader_utility: std_util.expect("at least one row"),
        avg_max_utility: max_util.expect("at least one row"),
        avg_sat_probability: prob,
        n_trials_used: 0,
        dominance_violations: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_loads_and_matches_known_entries() {
        let g = reference_game();
        assert_eq!(g.n_leader(), 10);
        assert_eq!(g.n_follower(), 7);
        assert_eq!(g.leader_payoff(1, 1), 0.9706);
        assert_eq!(g.follower_payoff(8, 3), 0.6892);
        assert_eq!(g.find_pure_ne(), vec![(3, 4), (8, 3)]);
    }

    #[test]
    fn sample_game_shape_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let a = sample_game(10, 5, &mut rng).unwrap();
        assert_eq!(a.n_leader(), 10);
        assert_eq!(a.n_follower(), 5);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let b = sample_game(10, 5, &mut rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sample_game_mean_near_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let g = sample_game(50, 100, &mut rng).unwrap();
        let entries: Vec<f64> = g
            .leader_matrix()
            .iter()
            .chain(g.follower_matrix())
            .flatten()
            .copied()
            .collect();
        assert_eq!(entries.len(), 10_000);
        let mean = entries.iter().sum::<f64>() / entries.len() as f64;
        assert!((0.49..=0.51).contains(&mean), "mean {mean}");
    }

    #[test]
    fn expected_max_utility_values() {
        assert_eq!(expected_max_utility(1), 0.5);
        assert!((expected_max_utility(50) - 50.0 / 51.0).abs() < 1e-15);
        assert!((expected_max_utility(50) - 0.98039).abs() < 1e-5);
        assert!((expected_max_utility(100) - 0.99010).abs() < 1e-5);
    }

    #[test]
    fn grid_includes_endpoints() {
        let g = linspace01(5);
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    fn small_cfg(mode: SweepMode) -> SweepConfig {
        SweepConfig {
            n_leader: 3,
            n_follower: 3,
            n_thresholds: 5,
            n_trials: 8,
            rng_seed: 2024,
            mode,
        }
    }

    #[test]
    fn mixed_sweep_endpoint_identity_and_shape() {
        let r = run_sweep(&small_cfg(SweepMode::Mixed)).unwrap();
        assert_eq!(r.thresholds.len(), 5);
        assert_eq!(r.avg_sat_leader_utility.len(), 5);
        assert_eq!(r.avg_sat_probability.len(), 5);
        assert_eq!(r.n_trials_used, 8);
        // Per-trial equality is exact, so the averages agree bitwise.
        assert_eq!(r.avg_sat_leader_utility[0], r.avg_max_utility);
        assert_eq!(r.avg_sat_leader_utility[4], r.avg_max_utility);
        assert_eq!(r.avg_sat_probability[0], 1.0);
        assert_eq!(r.avg_sat_probability[4], 0.0);
        assert!(r.avg_max_utility > 0.0 && r.avg_max_utility < 1.0);
    }

    #[test]
    fn pure_sweep_dominates_standard_everywhere() {
        let r = run_sweep(&small_cfg(SweepMode::Pure)).unwrap();
        for (i, &sat) in r.avg_sat_leader_utility.iter().enumerate() {
            assert!(
                sat >= r.avg_std_leader_utility,
                "threshold {}: {} < {}",
                r.thresholds[i],
                sat,
                r.avg_std_leader_utility
            );
        }
        assert_eq!(r.avg_sat_leader_utility[0], r.avg_max_utility);
    }

    #[test]
    fn sweeps_are_bitwise_reproducible() {
        let cfg = small_cfg(SweepMode::Mixed);
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a.avg_sat_leader_utility, b.avg_sat_leader_utility);
        assert_eq!(a.avg_std_leader_utility, b.avg_std_leader_utility);
        assert_eq!(a.avg_max_utility, b.avg_max_utility);
        assert_eq!(a.avg_sat_probability, b.avg_sat_probability);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = small_cfg(SweepMode::Mixed);
        cfg.n_trials = 0;
        assert!(matches!(run_sweep(&cfg), Err(SweepError::InvalidConfig(_))));
        cfg.n_trials = 1;
        cfg.n_thresholds = 1;
        assert!(matches!(run_sweep(&cfg), Err(SweepError::InvalidConfig(_))));
        cfg.n_thresholds = 2;
        cfg.n_leader = 0;
        assert!(matches!(run_sweep(&cfg), Err(SweepError::InvalidConfig(_))));
    }

    #[test]
    fn csv_round_trips_bitwise() {
        let r = run_sweep(&small_cfg(SweepMode::Mixed)).unwrap();
        let mut buf = Vec::new();
        export_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "threshold,avg_sat_leader_utility,avg_std_leader_utility,avg_max_utility,avg_sat_probability\n"
        ));
        assert_eq!(text.lines().count(), 6);
        let back = import_csv(buf.as_slice()).unwrap();
        assert_eq!(back.thresholds, r.thresholds);
        assert_eq!(back.avg_sat_leader_utility, r.avg_sat_leader_utility);
        assert_eq!(back.avg_std_leader_utility, r.avg_std_leader_utility);
        assert_eq!(back.avg_max_utility, r.avg_max_utility);
        assert_eq!(back.avg_sat_probability, r.avg_sat_probability);
    }

    #[test]
    fn csv_import_rejects_garbage() {
        assert!(import_csv("not,a,sweep\n1,2,3\n".as_bytes()).is_err());
        let bad = "threshold,avg_sat_leader_utility,avg_std_leader_utility,avg_max_utility,avg_sat_probability\n0,x,0,0,0\n1,0,0,0,0\n";
        assert!(matches!(
            import_csv(bad.as_bytes()),
            Err(SweepError::Malformed(_))
        ));
    }
}
