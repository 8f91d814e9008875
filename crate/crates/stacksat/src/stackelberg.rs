//! Optimal-commitment solvers for the leader.
//!
//! Three families are provided, each for a follower that best-responds
//! either to expected utility (standard) or to satisfaction probability:
//!
//! * pure commitment: exhaustive scan over `(leader action, best response)`
//!   pairs;
//! * multiple LPs: one LP per follower action, constraining that action to
//!   be a best response while maximising leader utility;
//! * single LP (standard only): one LP over joint distributions whose
//!   optimum matches the multiple-LP value.
//!
//! Satisfaction LPs have constraint matrices with entries in `{-1, 0, +1}`.
//! A follower action whose matrix carries a `+1` in every column yields an
//! infeasible LP and is pruned without solving; otherwise the lowest
//! all-non-positive column provides a basic feasible seed that lets the
//! solver skip phase 1.

use crate::game::{BimatrixGame, GameError, MixedStrategy, SatisfactionThreshold};
use crate::lp::{self, BasicFeasibleSeed, LpError, LpProblem, LpStatus};
use thiserror::Error;

/// Errors from the commitment solvers.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error(
        "no feasible LP in {method} solve; at least one follower action \
         must admit a feasible program, so this signals a solver bug"
    )]
    NoFeasibleLp { method: &'static str },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Outcome of one follower action's LP inside a multiple-LP solve.
#[derive(Debug, Clone)]
pub struct LpDiagnostic {
    pub follower_action: usize,
    pub status: LpStatus,
    pub objective: Option<f64>,
    /// True when the LP was proven infeasible by column inspection and
    /// never sent to the solver.
    pub pruned: bool,
}

/// An optimal commitment: the leader strategy, the follower action the
/// solution commits the follower to, and the utilities they induce.
#[derive(Debug, Clone)]
pub struct StackelbergSolution {
    pub leader_strategy: MixedStrategy,
    pub follower_action: usize,
    pub leader_utility: f64,
    pub follower_utility: f64,
    /// Satisfaction probability of `follower_action` at the solution;
    /// populated by the satisfaction solvers only.
    pub follower_sat_prob: Option<f64>,
    pub per_lp: Vec<LpDiagnostic>,
}

/// Constraint matrix of one satisfaction LP: entry `(t, s)` is
/// `1{U_f(s,t) >= th} - 1{U_f(s, s_f) >= th}`, so the `s_f` row is zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatConstraintMatrix {
    entries: Vec<Vec<i8>>,
    follower_action: usize,
}

impl SatConstraintMatrix {
    pub fn entries(&self) -> &[Vec<i8>] {
        &self.entries
    }

    pub fn follower_action(&self) -> usize {
        self.follower_action
    }

    /// Entry for constraint row `t` and leader action `s`.
    pub fn entry(&self, t: usize, s: usize) -> i8 {
        self.entries[t][s]
    }
}

/// Verdict of the feasibility pre-check on a satisfaction LP.
#[derive(Debug, Clone)]
pub enum PruneOutcome {
    /// Every column holds a `+1`: the LP is infeasible, skip it.
    Pruned,
    /// A starting basic feasible solution for the LP.
    Seed(BasicFeasibleSeed),
}

fn pure_solution(
    g: &BimatrixGame,
    s: usize,
    t: usize,
    sat_prob: Option<f64>,
) -> StackelbergSolution {
    StackelbergSolution {
        leader_strategy: MixedStrategy::point_mass(s, g.n_leader()),
        follower_action: t,
        leader_utility: g.leader_payoff(s, t),
        follower_utility: g.follower_payoff(s, t),
        follower_sat_prob: sat_prob,
        per_lp: Vec::new(),
    }
}

/// Best pure commitment against an expected-utility follower: scans every
/// `(s, t)` with `t` a best response to `s` and keeps the pair with maximal
/// leader utility. Ties go to the lexicographically first pair.
pub fn pure_commit_standard(g: &BimatrixGame) -> StackelbergSolution {
    let mut best: Option<(usize, usize, f64)> = None;
    for s in 0..g.n_leader() {
        let br = g.follower_br_pure(s).expect("leader action in range");
        for t in br.iter() {
            let u = g.leader_payoff(s, t);
            if best.map_or(true, |(_, _, bu)| u > bu) {
                best = Some((s, t, u));
            }
        }
    }
    let (s, t, _) = best.expect("game has at least one action per player");
    pure_solution(g, s, t, None)
}

/// Best pure commitment against a satisfaction follower. Same scan and tie
/// rule as [`pure_commit_standard`], over satisfaction best responses.
pub fn pure_commit_sat(g: &BimatrixGame, th: SatisfactionThreshold) -> StackelbergSolution {
    let mut best: Option<(usize, usize, f64)> = None;
    for s in 0..g.n_leader() {
        let br = g
            .follower_br_sat_pure(th, s)
            .expect("leader action in range");
        for t in br.iter() {
            let u = g.leader_payoff(s, t);
            if best.map_or(true, |(_, _, bu)| u > bu) {
                best = Some((s, t, u));
            }
        }
    }
    let (s, t, _) = best.expect("game has at least one action per player");
    let sat = if g.follower_payoff(s, t) >= th.value() {
        1.0
    } else {
        0.0
    };
    pure_solution(g, s, t, Some(sat))
}

/// Builds the satisfaction constraint matrix for follower action `s_f`.
pub fn build_sat_constraints(
    g: &BimatrixGame,
    th: SatisfactionThreshold,
    s_f: usize,
) -> Result<SatConstraintMatrix, GameError> {
    if s_f >= g.n_follower() {
        return Err(GameError::ActionOutOfRange {
            player: "follower",
            index: s_f + 1,
            limit: g.n_follower(),
        });
    }
    let sat = |s: usize, t: usize| i8::from(g.follower_payoff(s, t) >= th.value());
    let entries = (0..g.n_follower())
        .map(|t| (0..g.n_leader()).map(|s| sat(s, t) - sat(s, s_f)).collect())
        .collect();
    Ok(SatConstraintMatrix {
        entries,
        follower_action: s_f,
    })
}

/// Classifies a satisfaction LP by column inspection: infeasible when every
/// column holds a `+1`; otherwise the lowest column `k` without one gives
/// the basic feasible solution `pi = e_k`, slacks `y = -a_k`.
pub fn prune_or_seed(a: &SatConstraintMatrix) -> PruneOutcome {
    let nf = a.entries.len();
    let nl = a.entries[0].len();
    let k = (0..nl).find(|&s| (0..nf).all(|t| a.entries[t][s] <= 0));
    match k {
        None => PruneOutcome::Pruned,
        Some(k) => {
            let mut values = vec![0.0; nl + nf];
            values[k] = 1.0;
            let mut basis = Vec::with_capacity(nf + 1);
            basis.push(k);
            for t in 0..nf {
                values[nl + t] = -f64::from(a.entries[t][k]);
                basis.push(nl + t);
            }
            PruneOutcome::Seed(BasicFeasibleSeed { basis, values })
        }
    }
}

/// LP for committing the standard follower to action `s_f`: maximise the
/// leader's expected utility in column `s_f` subject to `s_f` being an
/// expected-utility best response.
pub fn standard_commit_lp(g: &BimatrixGame, s_f: usize) -> LpProblem {
    let nl = g.n_leader();
    let nf = g.n_follower();
    LpProblem {
        objective: (0..nl).map(|s| g.leader_payoff(s, s_f)).collect(),
        ineq_matrix: (0..nf)
            .map(|t| {
                (0..nl)
                    .map(|s| g.follower_payoff(s, t) - g.follower_payoff(s, s_f))
                    .collect()
            })
            .collect(),
        ineq_rhs: vec![0.0; nf],
        eq_matrix: vec![vec![1.0; nl]],
        eq_rhs: vec![1.0],
    }
}

/// LP for committing the satisfaction follower to the matrix's action:
/// same objective, constraints `A pi <= 0` from the indicator differences.
pub fn sat_commit_lp(g: &BimatrixGame, a: &SatConstraintMatrix) -> LpProblem {
    let nl = g.n_leader();
    let nf = g.n_follower();
    LpProblem {
        objective: (0..nl)
            .map(|s| g.leader_payoff(s, a.follower_action))
            .collect(),
        ineq_matrix: a
            .entries
            .iter()
            .map(|row| row.iter().map(|&v| f64::from(v)).collect())
            .collect(),
        ineq_rhs: vec![0.0; nf],
        eq_matrix: vec![vec![1.0; nl]],
        eq_rhs: vec![1.0],
    }
}

fn pick_best(
    best: &mut Option<(usize, f64, Vec<f64>)>,
    f: usize,
    objective: f64,
    solution: Vec<f64>,
) {
    if best.as_ref().map_or(true, |(_, b, _)| objective > *b) {
        *best = Some((f, objective, solution));
    }
}

/// Optimal mixed commitment against an expected-utility follower via one LP
/// per follower action; the feasible LP with the highest objective wins,
/// ties by lowest follower index.
pub fn solve_multi_lp_standard(g: &BimatrixGame) -> Result<StackelbergSolution, SolveError> {
    let mut per_lp = Vec::with_capacity(g.n_follower());
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    for f in 0..g.n_follower() {
        let out = lp::solve_lp(&standard_commit_lp(g, f))?;
        per_lp.push(LpDiagnostic {
            follower_action: f,
            status: out.status,
            objective: out.objective_value,
            pruned: false,
        });
        if out.status == LpStatus::Optimal {
            pick_best(
                &mut best,
                f,
                out.objective_value.expect("optimal outcome has objective"),
                out.solution.expect("optimal outcome has solution"),
            );
        }
    }
    let Some((f, _, x)) = best else {
        return Err(SolveError::NoFeasibleLp {
            method: "standard multiple-LP",
        });
    };
    let pi = MixedStrategy::from_lp_solution(x)?;
    let (leader_utility, follower_utility) = g.expected_utilities(&pi, f)?;
    Ok(StackelbergSolution {
        leader_strategy: pi,
        follower_action: f,
        leader_utility,
        follower_utility,
        follower_sat_prob: None,
        per_lp,
    })
}

/// Optimal mixed commitment against a satisfaction follower. Each follower
/// action's LP is first classified by [`prune_or_seed`]; pruned LPs are
/// recorded as infeasible without solving, the rest are solved from their
/// seed. Best feasible objective wins, ties by lowest follower index.
pub fn solve_multi_lp_sat(
    g: &BimatrixGame,
    th: SatisfactionThreshold,
) -> Result<StackelbergSolution, SolveError> {
    let mut per_lp = Vec::with_capacity(g.n_follower());
    let mut best: Option<(usize, f64, Vec<f64>)> = None;
    for f in 0..g.n_follower() {
        let a = build_sat_constraints(g, th, f)?;
        match prune_or_seed(&a) {
            PruneOutcome::Pruned => per_lp.push(LpDiagnostic {
                follower_action: f,
                status: LpStatus::Infeasible,
                objective: None,
                pruned: true,
            }),
            PruneOutcome::Seed(seed) => {
                let out = lp::solve_lp_seeded(&sat_commit_lp(g, &a), &seed)?;
                per_lp.push(LpDiagnostic {
                    follower_action: f,
                    status: out.status,
                    objective: out.objective_value,
                    pruned: false,
                });
                if out.status == LpStatus::Optimal {
                    pick_best(
                        &mut best,
                        f,
                        out.objective_value.expect("optimal outcome has objective"),
                        out.solution.expect("optimal outcome has solution"),
                    );
                }
            }
        }
    }
    let Some((f, _, x)) = best else {
        return Err(SolveError::NoFeasibleLp {
            method: "satisfaction multiple-LP",
        });
    };
    let pi = MixedStrategy::from_lp_solution(x)?;
    let (leader_utility, follower_utility) = g.expected_utilities(&pi, f)?;
    let sat_prob = g.satisfaction_probability(th, &pi, f)?;
    Ok(StackelbergSolution {
        leader_strategy: pi,
        follower_action: f,
        leader_utility,
        follower_utility,
        follower_sat_prob: Some(sat_prob),
        per_lp,
    })
}

/// Optimal mixed commitment against an expected-utility follower via one LP
/// over joint distributions. The leader strategy is read off the optimal
/// joint pmf by restricting to its highest-mass follower column (ties to
/// the lowest index) and renormalising.
pub fn solve_single_lp_standard(g: &BimatrixGame) -> Result<StackelbergSolution, SolveError> {
    let nl = g.n_leader();
    let nf = g.n_follower();
    let n = nl * nf;
    let mut objective = vec![0.0; n];
    for s in 0..nl {
        for t in 0..nf {
            objective[s * nf + t] = g.leader_payoff(s, t);
        }
    }
    let mut ineq_matrix = Vec::with_capacity(nf * nf.saturating_sub(1));
    for f in 0..nf {
        for fp in 0..nf {
            if fp == f {
                continue;
            }
            let mut row = vec![0.0; n];
            for s in 0..nl {
                row[s * nf + f] = g.follower_payoff(s, fp) - g.follower_payoff(s, f);
            }
            ineq_matrix.push(row);
        }
    }
    let ineq_rows = ineq_matrix.len();
    let p = LpProblem {
        objective,
        ineq_matrix,
        ineq_rhs: vec![0.0; ineq_rows],
        eq_matrix: vec![vec![1.0; n]],
        eq_rhs: vec![1.0],
    };
    let out = lp::solve_lp(&p)?;
    if out.status != LpStatus::Optimal {
        return Err(SolveError::NoFeasibleLp {
            method: "standard single-LP",
        });
    }
    let x = out.solution.expect("optimal outcome has solution");

    let mut f_best = 0;
    let mut mass_best = f64::NEG_INFINITY;
    for t in 0..nf {
        let mass: f64 = (0..nl).map(|s| x[s * nf + t]).sum();
        if mass > mass_best {
            mass_best = mass;
            f_best = t;
        }
    }
    let mut probs: Vec<f64> = (0..nl).map(|s| x[s * nf + f_best].max(0.0)).collect();
    let mass: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p /= mass;
    }
    let pi = MixedStrategy::new(probs)?;
    let (leader_utility, follower_utility) = g.expected_utilities(&pi, f_best)?;
    Ok(StackelbergSolution {
        leader_strategy: pi,
        follower_action: f_best,
        leader_utility,
        follower_utility,
        follower_sat_prob: None,
        per_lp: vec![LpDiagnostic {
            follower_action: f_best,
            status: out.status,
            objective: out.objective_value,
            pruned: false,
        }],
    })
}
