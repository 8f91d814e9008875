//! Acceptance gate: one test per shipping criterion. Each test prints a
//! single `criterion NN: PASS — ...` line with the measured evidence (run
//! with `-- --nocapture` to see them) and enforces its own runtime budget,
//! so a red test is always a criterion failure, never a flaky timer.
//!
//! All indices inside the asserts are 0-based; printed actions are 1-based
//! to match the CLI and the conventional game tables.

mod common;

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::solve_lp_by_enumeration;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stacksat::experiments::{
    expected_max_utility, reference_game, run_sweep, sample_game, SweepConfig, SweepMode,
    SweepResult,
};
use stacksat::game::{BimatrixGame, SatisfactionThreshold};
use stacksat::lp::{solve_lp, LpProblem, LpStatus};
use stacksat::regret::{
    auto_ce_constant, ce_play_probs, he_play_probs, run_rm, CondRegretState, PostConvergence,
    RmConfig, RmMode, Role, UncondRegretState,
};
use stacksat::stackelberg::{
    build_sat_constraints, prune_or_seed, sat_commit_lp, solve_multi_lp_sat,
    solve_multi_lp_standard, solve_single_lp_standard, PruneOutcome,
};

fn within_budget(name: &str, started: Instant, budget: Duration) {
    let took = started.elapsed();
    assert!(
        took <= budget,
        "{name} blew its runtime budget: {took:.2?} > {budget:.2?}"
    );
}

fn draws(r: &mut ChaCha8Rng, k: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..k).map(|_| lo + (hi - lo) * r.random::<f64>()).collect()
}

fn random_lp(r: &mut ChaCha8Rng, n: usize, m_le: usize, m_eq: usize) -> LpProblem {
    LpProblem {
        objective: draws(r, n, -1.0, 1.0),
        ineq_matrix: (0..m_le).map(|_| draws(r, n, -1.0, 1.0)).collect(),
        ineq_rhs: draws(r, m_le, -0.5, 1.5),
        eq_matrix: (0..m_eq).map(|_| draws(r, n, -1.0, 1.0)).collect(),
        eq_rhs: draws(r, m_eq, -0.5, 1.0),
    }
}

/// The 10x5 mixed sweep shared by criteria 06 and 07. Computed once; both
/// tests read the same result, so their checks describe the same run.
fn shared_mixed_sweep() -> &'static SweepResult {
    static SWEEP: OnceLock<SweepResult> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let cfg = SweepConfig {
            n_leader: 10,
            n_follower: 5,
            n_thresholds: 40,
            n_trials: 100,
            rng_seed: 99,
            mode: SweepMode::Mixed,
        };
        run_sweep(&cfg).expect("mixed sweep runs")
    })
}

#[test]
fn criterion_01_reference_commitment_regression() {
    let started = Instant::now();
    let g = reference_game();
    let sol = solve_multi_lp_standard(&g).expect("reference solve");

    let mut want = vec![0.0; g.n_leader()];
    want[1] = 0.8158;
    want[2] = 0.1842;
    for (k, (&got, &target)) in sol.leader_strategy.probs().iter().zip(&want).enumerate() {
        assert!(
            (got - target).abs() <= 1e-3,
            "pi({}) = {got:.6}, want {target:.4}",
            k + 1
        );
    }
    assert_eq!(sol.follower_action, 1, "follower must pick action 2");
    assert!(
        (sol.leader_utility - 0.9681).abs() <= 1e-3,
        "leader utility {:.6}",
        sol.leader_utility
    );
    assert!(
        (sol.follower_utility - 0.7856).abs() <= 1e-3,
        "follower utility {:.6}",
        sol.follower_utility
    );

    within_budget("criterion 01", started, Duration::from_secs(1));
    println!(
        "criterion 01: PASS — commitment puts ({:.4}, {:.4}) on actions 2/3, follower plays 2, utilities ({:.4}, {:.4})",
        sol.leader_strategy.probs()[1],
        sol.leader_strategy.probs()[2],
        sol.leader_utility,
        sol.follower_utility
    );
}

#[test]
fn criterion_02_pure_ne_enumeration() {
    let started = Instant::now();
    let ne = reference_game().find_pure_ne();
    assert_eq!(ne, vec![(3, 4), (8, 3)], "pure NE set mismatch (0-based)");
    within_budget("criterion 02", started, Duration::from_millis(100));
    println!("criterion 02: PASS — exactly the pure equilibria (4,5) and (9,4) (1-based)");
}

#[test]
fn criterion_03_single_and_multi_lp_agree() {
    let started = Instant::now();
    let mut worst = 0.0_f64;
    for case in 0..200_u64 {
        let mut r = ChaCha8Rng::seed_from_u64(0x0003_0000 + case);
        let nl = 2 + (case % 7) as usize;
        let nf = 2 + ((case / 7) % 7) as usize;
        let g = sample_game(nl, nf, &mut r).unwrap();
        let multi = solve_multi_lp_standard(&g).unwrap();
        let single = solve_single_lp_standard(&g).unwrap();
        let gap = (multi.leader_utility - single.leader_utility).abs();
        worst = worst.max(gap);
        assert!(
            gap <= 1e-6,
            "case {case} ({nl}x{nf}): |single - multi| = {gap:e}"
        );
    }
    within_budget("criterion 03", started, Duration::from_secs(30));
    println!(
        "criterion 03: PASS — 200 random games up to 8x8, worst |single - multi| = {worst:.2e}"
    );
}

#[test]
fn criterion_04_column_prune_matches_simplex_feasibility() {
    let started = Instant::now();
    let (mut pruned, mut seeded) = (0_usize, 0_usize);
    for case in 0..100_u64 {
        let mut r = ChaCha8Rng::seed_from_u64(0x0004_0000 + case);
        let nl = 3 + (case % 4) as usize;
        let nf = 3 + ((case / 4) % 4) as usize;
        let g = sample_game(nl, nf, &mut r).unwrap();
        for k in 0..=10 {
            let th = SatisfactionThreshold::new(f64::from(k) / 10.0).unwrap();
            for f in 0..g.n_follower() {
                let a = build_sat_constraints(&g, th, f).unwrap();
                let p = sat_commit_lp(&g, &a);
                let got = solve_lp(&p).unwrap();
                match prune_or_seed(&a) {
                    PruneOutcome::Pruned => {
                        pruned += 1;
                        assert_eq!(
                            got.status,
                            LpStatus::Infeasible,
                            "case {case}, th {:.1}, column {f}: pruned but solvable",
                            th.value()
                        );
                    }
                    PruneOutcome::Seed(_) => {
                        seeded += 1;
                        assert_eq!(
                            got.status,
                            LpStatus::Optimal,
                            "case {case}, th {:.1}, column {f}: seeded but not optimal",
                            th.value()
                        );
                    }
                }
            }
        }
    }
    assert!(
        pruned > 0 && seeded > 0,
        "vacuous run: pruned {pruned}, seeded {seeded}"
    );
    within_budget("criterion 04", started, Duration::from_secs(60));
    println!(
        "criterion 04: PASS — {pruned} pruned and {seeded} seeded feasibility verdicts all match the simplex"
    );
}

#[test]
fn criterion_05_pure_mode_dominance() {
    let started = Instant::now();
    for (nl, nf, seed) in [(5, 5, 21_u64), (10, 5, 22)] {
        let cfg = SweepConfig {
            n_leader: nl,
            n_follower: nf,
            n_thresholds: 40,
            n_trials: 100,
            rng_seed: seed,
            mode: SweepMode::Pure,
        };
        // Pure mode asserts the per-trial, per-threshold dominance inside
        // every trial, so any violation panics this test.
        let result = run_sweep(&cfg).unwrap();
        assert!(result.dominance_violations.is_empty());
        assert_eq!(result.n_trials_used, 100);
        for (k, &sat) in result.avg_sat_leader_utility.iter().enumerate() {
            assert!(
                sat >= result.avg_std_leader_utility - 1e-7,
                "{nl}x{nf}: averaged dominance broke at threshold index {k}"
            );
        }
    }
    within_budget("criterion 05", started, Duration::from_secs(60));
    println!(
        "criterion 05: PASS — pure sweeps at 5x5 and 10x5 (100 trials x 40 thresholds) with zero dominance violations"
    );
}

#[test]
fn criterion_06_max_utility_calibration() {
    let started = Instant::now();
    let result = shared_mixed_sweep();

    let n_entries = 50.0_f64;
    let want = expected_max_utility(50);
    // Var(max of n uniforms) = n / ((n+1)^2 (n+2)); 100 trials in the mean.
    let band = 3.0 * (n_entries / ((n_entries + 1.0).powi(2) * (n_entries + 2.0)) / 100.0).sqrt();
    let gap = (result.avg_max_utility - want).abs();
    assert!(
        gap <= band,
        "avg max utility {:.6} is {gap:.2e} from {want:.6}, band {band:.2e}",
        result.avg_max_utility
    );

    assert_eq!(result.thresholds.first(), Some(&0.0));
    assert_eq!(result.thresholds.last(), Some(&1.0));
    let first = result.avg_sat_leader_utility[0];
    let last = *result.avg_sat_leader_utility.last().unwrap();
    assert!(
        (first - result.avg_max_utility).abs() <= 1e-9,
        "threshold-0 average {first} != avg max {}",
        result.avg_max_utility
    );
    assert!(
        (last - result.avg_max_utility).abs() <= 1e-9,
        "threshold-1 average {last} != avg max {}",
        result.avg_max_utility
    );

    within_budget("criterion 06", started, Duration::from_secs(600));
    println!(
        "criterion 06: PASS — avg max utility {:.6} within {band:.1e} of {want:.6} (gap {gap:.1e}); both endpoint averages equal it",
        result.avg_max_utility
    );
}

#[test]
fn criterion_07_mixed_dominance_checked_and_logged() {
    let started = Instant::now();
    let result = shared_mixed_sweep();
    let cells = result.thresholds.len() as u64 * result.n_trials_used;

    // The averaged satisfaction curve dominates the averaged standard value
    // at every threshold, as in the published figures.
    for (k, &sat) in result.avg_sat_leader_utility.iter().enumerate() {
        assert!(
            sat >= result.avg_std_leader_utility - 1e-7,
            "averaged dominance broke at threshold index {k}"
        );
    }

    // Per-trial dominance is a conjecture and this sweep refutes it; the
    // contract is that every shortfall is logged with a replayable game.
    // Re-verify each logged case from its own serialisation.
    for v in &result.dominance_violations {
        let g = BimatrixGame::from_json(&v.game_json).unwrap();
        let th = SatisfactionThreshold::new(v.threshold).unwrap();
        let sat = solve_multi_lp_sat(&g, th).unwrap();
        let std = solve_multi_lp_standard(&g).unwrap();
        assert!(
            (sat.leader_utility - v.sat_leader_utility).abs() <= 1e-9,
            "trial {}: replay sat {} vs logged {}",
            v.trial,
            sat.leader_utility,
            v.sat_leader_utility
        );
        assert!(
            (std.leader_utility - v.std_leader_utility).abs() <= 1e-9,
            "trial {}: replay std {} vs logged {}",
            v.trial,
            std.leader_utility,
            v.std_leader_utility
        );
        assert!(
            sat.leader_utility < std.leader_utility - 1e-7,
            "trial {}: logged case is not actually a violation",
            v.trial
        );
    }

    let artifact = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../target/dominance_counterexamples.json");
    let cases: Vec<serde_json::Value> = result
        .dominance_violations
        .iter()
        .map(|v| {
            serde_json::json!({
                "trial": v.trial,
                "threshold": v.threshold,
                "sat_leader_utility": v.sat_leader_utility,
                "std_leader_utility": v.std_leader_utility,
                "game": serde_json::from_str::<serde_json::Value>(&v.game_json).unwrap(),
            })
        })
        .collect();
    std::fs::write(&artifact, serde_json::to_string_pretty(&cases).unwrap()).unwrap();

    within_budget("criterion 07", started, Duration::from_secs(600));
    println!(
        "criterion 07: PASS — per-trial dominance failed in {} of {cells} cells; every counterexample re-verified by replay and written to {}; averaged curve dominates at all {} thresholds",
        result.dominance_violations.len(),
        artifact.display(),
        result.thresholds.len()
    );
}

#[test]
fn criterion_08_incremental_regrets_match_batch() {
    let started = Instant::now();
    let mut r = ChaCha8Rng::seed_from_u64(0x0008_0000);
    let g = sample_game(6, 5, &mut r).unwrap();

    for role in [Role::Leader, Role::Follower] {
        let (n_own, n_opp) = match role {
            Role::Leader => (g.n_leader(), g.n_follower()),
            Role::Follower => (g.n_follower(), g.n_leader()),
        };
        let payoff = |own: usize, opp: usize| match role {
            Role::Leader => g.leader_payoff(own, opp),
            Role::Follower => g.follower_payoff(opp, own),
        };
        let c = auto_ce_constant(&g, n_own);
        let mut uncond = UncondRegretState::new(n_own);
        let mut cond = CondRegretState::new(n_own);
        let mut history: Vec<(usize, usize)> = Vec::new();

        for step in 0..1000 {
            let own = r.random_range(0..n_own);
            let opp = r.random_range(0..n_opp);
            uncond.update(&g, role, own, opp).unwrap();
            cond.update(&g, role, own, opp).unwrap();
            history.push((own, opp));
            let t = history.len() as f64;

            let got_u = uncond.regrets();
            for k in 0..n_own {
                let batch = history
                    .iter()
                    .map(|&(o, q)| payoff(k, q) - payoff(o, q))
                    .sum::<f64>()
                    / t;
                assert!(
                    (got_u[k] - batch).abs() <= 1e-12,
                    "{role:?} step {step}: unconditional regret {k} drifted"
                );
            }

            let got_c = cond.regrets();
            for j in 0..n_own {
                for k in 0..n_own {
                    let batch = if j == k {
                        0.0
                    } else {
                        history
                            .iter()
                            .filter(|&&(o, _)| o == j)
                            .map(|&(_, q)| payoff(k, q) - payoff(j, q))
                            .sum::<f64>()
                            / t
                    };
                    assert!(
                        (got_c[j][k] - batch).abs() <= 1e-12,
                        "{role:?} step {step}: conditional regret ({j},{k}) drifted"
                    );
                }
            }

            let he = he_play_probs(&uncond, own);
            assert!((he.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            assert!(he.probs().iter().all(|&p| p >= 0.0));
            let ce = ce_play_probs(&cond, own, c).unwrap();
            assert!((ce.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            assert!(ce.probs().iter().all(|&p| p >= 0.0));
            assert!(
                ce.probs()[own] > 0.0,
                "{role:?} step {step}: stay probability vanished under the auto constant"
            );
        }
    }

    within_budget("criterion 08", started, Duration::from_secs(10));
    println!(
        "criterion 08: PASS — 1000 incremental steps per role match the batch averages to 1e-12; every emitted pmf valid; stay mass positive throughout"
    );
}

#[test]
fn criterion_09_rm_long_run_behaviour() {
    let started = Instant::now();
    let g = reference_game();
    let pure_ne = [(3_usize, 4_usize), (8, 3)];

    let mut converged = 0_u32;
    for seed in 0..100_u64 {
        let mut cfg = RmConfig::new(RmMode::LeaderCondFollowerBr, seed);
        cfg.max_stages = 1_500_000;
        cfg.post_convergence = PostConvergence::FreezeEmpirical;
        let trace = run_rm(&g, &cfg).unwrap();
        if trace.converged_at.is_some() {
            converged += 1;
            assert!(
                pure_ne.contains(&trace.modal_joint_action),
                "seed {seed}: converged on modal action {:?}, not a pure NE",
                trace.modal_joint_action
            );
        }
    }

    // Pinned regression fixture: this exact run reproduced leader utility
    // 0.9460 when it was recorded; it must keep doing so bit-for-bit.
    let mut cfg = RmConfig::new(RmMode::BothCond, 1);
    cfg.max_stages = 200_000;
    cfg.post_convergence = PostConvergence::FreezeEmpirical;
    let trace = run_rm(&g, &cfg).unwrap();
    let (leader_u, _) = trace.attained_utilities(&g);
    assert!(
        (leader_u - 0.9460).abs() <= 1e-4,
        "pinned both-conditional run drifted: leader utility {leader_u:.7}"
    );

    within_budget("criterion 09", started, Duration::from_secs(120));
    println!(
        "criterion 09: PASS — {converged}/100 conditional-RM runs converged, each onto a pure NE; pinned both-conditional run attains leader utility {leader_u:.4}"
    );
}

#[test]
fn criterion_10_simplex_vs_exhaustive_enumeration() {
    let started = Instant::now();
    let mut r = ChaCha8Rng::seed_from_u64(0x0010_0000);
    let mut seen = [0_usize; 3];
    for case in 0..500_usize {
        let n = 2 + (case % 3);
        let m_le = 1 + (case % 3);
        let m_eq = case % 2;
        let p = random_lp(&mut r, n, m_le, m_eq);
        let (oracle_status, oracle_obj) = solve_lp_by_enumeration(&p);
        // Any Err here is the iteration cap, i.e. cycling: instant failure.
        let got = solve_lp(&p).unwrap();
        assert_eq!(got.status, oracle_status, "case {case}: {p:?}");
        if let (Some(a), Some(b)) = (got.objective_value, oracle_obj) {
            assert!((a - b).abs() <= 1e-8, "case {case}: {a} vs {b}");
        }
        seen[match oracle_status {
            LpStatus::Optimal => 0,
            LpStatus::Infeasible => 1,
            LpStatus::Unbounded => 2,
        }] += 1;
    }
    assert!(
        seen.iter().all(|&c| c > 10),
        "status mix too skewed to be convincing: {seen:?}"
    );
    within_budget("criterion 10", started, Duration::from_secs(30));
    println!(
        "criterion 10: PASS — 500 LPs agree with exhaustive basis enumeration ({} optimal / {} infeasible / {} unbounded), iteration cap never hit",
        seen[0], seen[1], seen[2]
    );
}
