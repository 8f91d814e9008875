//! Regret-matching dynamics over a bimatrix game.
//!
//! Two regret notions are supported. Unconditional regrets compare each
//! action against the realised play averaged over all stages; matching on
//! their positive parts targets the set of Hannan-consistent (coarse
//! correlated) equilibria. Conditional regrets compare switching to `k` only
//! over the stages where `j` was played; matching on them targets correlated
//! equilibria. Runs pair a regret-matching leader with either a
//! best-responding follower or a regret-matching follower, track the sum of
//! positive regrets (SPR) per stage for both players, and record the full
//! action trace.

use crate::game::{BimatrixGame, GameError, MixedStrategy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Errors from regret-state updates and run configuration.
#[derive(Debug, Error)]
pub enum RegretError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid regret-matching constant: {0}")]
    InvalidC(String),
    #[error("{role} action {index} out of range 1..={limit}")]
    ActionOutOfRange {
        role: &'static str,
        index: usize,
        limit: usize,
    },
    #[error("empty trace")]
    EmptyTrace,
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("trace export failed: {0}")]
    Export(#[from] csv::Error),
    #[error("trace export failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Which side of the game an agent plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Leader,
    Follower,
}

impl Role {
    fn name(self) -> &'static str {
        match self {
            Role::Leader => "leader",
            Role::Follower => "follower",
        }
    }

    fn n_actions(self, g: &BimatrixGame) -> usize {
        match self {
            Role::Leader => g.n_leader(),
            Role::Follower => g.n_follower(),
        }
    }

    /// Utility of playing `own` while the opponent plays `opp`.
    fn payoff(self, g: &BimatrixGame, own: usize, opp: usize) -> f64 {
        match self {
            Role::Leader => g.leader_payoff(own, opp),
            Role::Follower => g.follower_payoff(opp, own),
        }
    }
}

fn check_actions(g: &BimatrixGame, role: Role, own: usize, opp: usize) -> Result<(), RegretError> {
    let n_own = role.n_actions(g);
    if own >= n_own {
        return Err(RegretError::ActionOutOfRange {
            role: role.name(),
            index: own + 1,
            limit: n_own,
        });
    }
    let opp_role = match role {
        Role::Leader => Role::Follower,
        Role::Follower => Role::Leader,
    };
    let n_opp = opp_role.n_actions(g);
    if opp >= n_opp {
        return Err(RegretError::ActionOutOfRange {
            role: opp_role.name(),
            index: opp + 1,
            limit: n_opp,
        });
    }
    Ok(())
}

/// Average unconditional regrets of one agent: entry `k` estimates how much
/// better always playing `k` would have done against the realised opponent
/// play. Sums are stored and divided by the stage count on read, so the
/// state matches the batch average exactly.
#[derive(Debug, Clone)]
pub struct UncondRegretState {
    sums: Vec<f64>,
    stage: u64,
}

impl UncondRegretState {
    pub fn new(n_actions: usize) -> Self {
        assert!(n_actions > 0, "agent needs at least one action");
        Self {
            sums: vec![0.0; n_actions],
            stage: 0,
        }
    }

    pub fn stage(&self) -> u64 {
        self.stage
    }

    pub fn n_actions(&self) -> usize {
        self.sums.len()
    }

    /// Averaged regret vector; zeros before the first update.
    pub fn regrets(&self) -> Vec<f64> {
        if self.stage == 0 {
            return self.sums.clone();
        }
        let t = self.stage as f64;
        self.sums.iter().map(|&s| s / t).collect()
    }

    /// Folds one realised stage into the average.
    pub fn update(
        &mut self,
        g: &BimatrixGame,
        role: Role,
        own: usize,
        opp: usize,
    ) -> Result<(), RegretError> {
        check_actions(g, role, own, opp)?;
        let base = role.payoff(g, own, opp);
        for (k, s) in self.sums.iter_mut().enumerate() {
            *s += role.payoff(g, k, opp) - base;
        }
        self.stage += 1;
        Ok(())
    }

    /// Sum of positive regrets.
    pub fn spr(&self) -> f64 {
        if self.stage == 0 {
            return 0.0;
        }
        let t = self.stage as f64;
        self.sums.iter().map(|&s| (s / t).max(0.0)).sum()
    }
}

/// Average conditional regrets of one agent: entry `(j, k)` estimates the
/// gain from having played `k` at the stages where `j` was played. The
/// diagonal is identically zero.
#[derive(Debug, Clone)]
pub struct CondRegretState {
    sums: Vec<Vec<f64>>,
    stage: u64,
}

impl CondRegretState {
    pub fn new(n_actions: usize) -> Self {
        assert!(n_actions > 0, "agent needs at least one action");
        Self {
            sums: vec![vec![0.0; n_actions]; n_actions],
            stage: 0,
        }
    }

    pub fn stage(&self) -> u64 {
        self.stage
    }

    pub fn n_actions(&self) -> usize {
        self.sums.len()
    }

    /// Averaged regret matrix; zeros before the first update.
    pub fn regrets(&self) -> Vec<Vec<f64>> {
        if self.stage == 0 {
            return self.sums.clone();
        }
        let t = self.stage as f64;
        self.sums
            .iter()
            .map(|row| row.iter().map(|&s| s / t).collect())
            .collect()
    }

    /// Folds one realised stage into the average; only row `own` changes.
    pub fn update(
        &mut self,
        g: &BimatrixGame,
        role: Role,
        own: usize,
        opp: usize,
    ) -> Result<(), RegretError> {
        check_actions(g, role, own, opp)?;
        let base = role.payoff(g, own, opp);
        for k in 0..self.sums.len() {
            if k != own {
                self.sums[own][k] += role.payoff(g, k, opp) - base;
            }
        }
        self.stage += 1;
        Ok(())
    }

    /// Sum of positive regrets over the whole matrix.
    pub fn spr(&self) -> f64 {
        if self.stage == 0 {
            return 0.0;
        }
        let t = self.stage as f64;
        self.sums.iter().flatten().map(|&s| (s / t).max(0.0)).sum()
    }
}

/// Play probabilities from unconditional regrets: positive parts normalised
/// over all actions for every action but the last one played, remainder on
/// the last; uniform when no regret is positive.
pub fn he_play_probs(state: &UncondRegretState, last_action: usize) -> MixedStrategy {
    let n = state.n_actions();
    assert!(last_action < n, "last action out of range");
    let r = state.regrets();
    let total: f64 = r.iter().map(|&v| v.max(0.0)).sum();
    if total <= 0.0 {
        return MixedStrategy::uniform(n);
    }
    let mut probs: Vec<f64> = r.iter().map(|&v| v.max(0.0) / total).collect();
    let off: f64 = probs
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != last_action)
        .map(|(_, &p)| p)
        .sum();
    probs[last_action] = (1.0 - off).max(0.0);
    MixedStrategy::new(probs).expect("normalised positive parts form a pmf")
}

/// Play probabilities from conditional regrets: `c` times the positive-part
/// regret of switching away from the last action, remainder (always
/// positive) on the last action.
pub fn ce_play_probs(
    state: &CondRegretState,
    last_action: usize,
    c: f64,
) -> Result<MixedStrategy, RegretError> {
    let n = state.n_actions();
    assert!(last_action < n, "last action out of range");
    if !c.is_finite() || c <= 0.0 {
        return Err(RegretError::InvalidC(format!("c = {c}, need c > 0")));
    }
    let r = state.regrets();
    let mut probs = vec![0.0; n];
    let mut off = 0.0;
    for k in 0..n {
        if k != last_action {
            probs[k] = c * r[last_action][k].max(0.0);
            off += probs[k];
        }
    }
    if off >= 1.0 {
        return Err(RegretError::InvalidC(format!(
            "c = {c} puts mass {off} on switching, leaving none for the last action"
        )));
    }
    probs[last_action] = 1.0 - off;
    Ok(MixedStrategy::new(probs).expect("remainder construction forms a pmf"))
}

/// The `c` that keeps the switching mass of [`ce_play_probs`] below 1/2 for
/// an agent with `n_actions` actions: regret magnitudes never exceed the
/// game's utility range, so `c = 1 / (2 (n-1) max(range, 1))` suffices.
pub fn auto_ce_constant(g: &BimatrixGame, n_actions: usize) -> f64 {
    if n_actions <= 1 {
        return 1.0;
    }
    1.0 / (2.0 * (n_actions - 1) as f64 * g.utility_range().max(1.0))
}

/// Pairing of learning rules for the two players.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmMode {
    LeaderUncondFollowerBr,
    LeaderCondFollowerBr,
    BothUncond,
    BothCond,
}

impl RmMode {
    pub fn follower_uses_rm(self) -> bool {
        matches!(self, RmMode::BothUncond | RmMode::BothCond)
    }

    pub fn conditional(self) -> bool {
        matches!(self, RmMode::LeaderCondFollowerBr | RmMode::BothCond)
    }
}

impl fmt::Display for RmMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RmMode::LeaderUncondFollowerBr => "leader-uncond-rm+follower-br",
            RmMode::LeaderCondFollowerBr => "leader-cond-rm+follower-br",
            RmMode::BothUncond => "both-uncond-rm",
            RmMode::BothCond => "both-cond-rm",
        })
    }
}

impl FromStr for RmMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "leader-uncond-rm+follower-br" => Ok(RmMode::LeaderUncondFollowerBr),
            "leader-cond-rm+follower-br" => Ok(RmMode::LeaderCondFollowerBr),
            "both-uncond-rm" => Ok(RmMode::BothUncond),
            "both-cond-rm" => Ok(RmMode::BothCond),
            other => Err(format!(
                "unknown mode '{other}' (expected leader-uncond-rm+follower-br, \
                 leader-cond-rm+follower-br, both-uncond-rm, or both-cond-rm)"
            )),
        }
    }
}

/// What regret-matching players do after the run has converged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PostConvergence {
    /// Switch to uniform play.
    #[default]
    Uniform,
    /// Keep playing the empirical marginal observed up to convergence.
    FreezeEmpirical,
}

impl fmt::Display for PostConvergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PostConvergence::Uniform => "uniform",
            PostConvergence::FreezeEmpirical => "freeze-empirical",
        })
    }
}

impl FromStr for PostConvergence {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uniform" => Ok(PostConvergence::Uniform),
            "freeze-empirical" => Ok(PostConvergence::FreezeEmpirical),
            other => Err(format!(
                "unknown post-convergence policy '{other}' (expected uniform or freeze-empirical)"
            )),
        }
    }
}

/// Constant for conditional regret matching: a fixed value or the
/// [`auto_ce_constant`] rule.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum CeConstant {
    #[default]
    Auto,
    Fixed(f64),
}

/// Configuration of a regret-matching run.
#[derive(Debug, Clone)]
pub struct RmConfig {
    pub mode: RmMode,
    pub max_stages: u64,
    pub spr_tolerance: f64,
    pub ce_constant_c: CeConstant,
    pub rng_seed: u64,
    pub post_convergence: PostConvergence,
}

impl RmConfig {
    pub fn new(mode: RmMode, rng_seed: u64) -> Self {
        Self {
            mode,
            max_stages: 100_000,
            spr_tolerance: 1e-5,
            ce_constant_c: CeConstant::Auto,
            rng_seed,
            post_convergence: PostConvergence::Uniform,
        }
    }

    fn validate(&self) -> Result<(), RegretError> {
        if self.max_stages < 1 {
            return Err(RegretError::InvalidConfig("max_stages must be >= 1".into()));
        }
        if !(self.spr_tolerance > 0.0) || !self.spr_tolerance.is_finite() {
            return Err(RegretError::InvalidConfig(format!(
                "spr_tolerance must be a positive real, got {}",
                self.spr_tolerance
            )));
        }
        if let CeConstant::Fixed(c) = self.ce_constant_c {
            if !c.is_finite() || c <= 0.0 {
                return Err(RegretError::InvalidConfig(format!(
                    "ce constant must be a positive real, got {c}"
                )));
            }
        }
        Ok(())
    }
}

/// Record of a full run: per-stage actions and SPR values, the empirical
/// joint distribution, and convergence analytics.
#[derive(Debug, Clone)]
pub struct RmTrace {
    pub actions: Vec<(usize, usize)>,
    pub spr_leader: Vec<f64>,
    pub spr_follower: Vec<f64>,
    pub empirical_joint: Vec<Vec<f64>>,
    pub converged_at: Option<u64>,
    pub modal_joint_action: (usize, usize),
}

impl RmTrace {
    pub fn stages(&self) -> u64 {
        self.actions.len() as u64
    }

    pub fn leader_marginal(&self) -> Vec<f64> {
        self.empirical_joint
            .iter()
            .map(|row| row.iter().sum())
            .collect()
    }

    pub fn follower_marginal(&self) -> Vec<f64> {
        let nf = self.empirical_joint[0].len();
        (0..nf)
            .map(|t| self.empirical_joint.iter().map(|row| row[t]).sum())
            .collect()
    }

    /// Expected `(leader, follower)` utilities under the empirical joint
    /// distribution, i.e. the average realised utilities of the run.
    pub fn attained_utilities(&self, g: &BimatrixGame) -> (f64, f64) {
        let mut ul = 0.0;
        let mut uf = 0.0;
        for (s, row) in self.empirical_joint.iter().enumerate() {
            for (t, &p) in row.iter().enumerate() {
                ul += p * g.leader_payoff(s, t);
                uf += p * g.follower_payoff(s, t);
            }
        }
        (ul, uf)
    }
}

/// Normalised joint-action counts of an action list.
pub fn empirical_joint(
    actions: &[(usize, usize)],
    n_leader: usize,
    n_follower: usize,
) -> Result<Vec<Vec<f64>>, RegretError> {
    if actions.is_empty() {
        return Err(RegretError::EmptyTrace);
    }
    let mut joint = vec![vec![0.0; n_follower]; n_leader];
    for &(s, t) in actions {
        joint[s][t] += 1.0;
    }
    let total = actions.len() as f64;
    for row in joint.iter_mut() {
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    Ok(joint)
}

enum Tracker {
    Uncond(UncondRegretState),
    Cond(CondRegretState),
}

impl Tracker {
    fn new(conditional: bool, n_actions: usize) -> Self {
        if conditional {
            Tracker::Cond(CondRegretState::new(n_actions))
        } else {
            Tracker::Uncond(UncondRegretState::new(n_actions))
        }
    }

    fn update(
        &mut self,
        g: &BimatrixGame,
        role: Role,
        own: usize,
        opp: usize,
    ) -> Result<(), RegretError> {
        match self {
            Tracker::Uncond(s) => s.update(g, role, own, opp),
            Tracker::Cond(s) => s.update(g, role, own, opp),
        }
    }

    fn spr(&self) -> f64 {
        match self {
            Tracker::Uncond(s) => s.spr(),
            Tracker::Cond(s) => s.spr(),
        }
    }

    fn play_probs(&self, last: usize, c: f64) -> Result<MixedStrategy, RegretError> {
        match self {
            Tracker::Uncond(s) => Ok(he_play_probs(s, last)),
            Tracker::Cond(s) => ce_play_probs(s, last, c),
        }
    }
}

/// Inverse-CDF sample from a pmf; one uniform draw per call.
fn sample<R: Rng>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

fn marginal_from_counts(counts: &[Vec<u64>], leader_side: bool) -> MixedStrategy {
    let total: u64 = counts.iter().flatten().sum();
    let probs: Vec<f64> = if leader_side {
        counts
            .iter()
            .map(|row| row.iter().sum::<u64>() as f64 / total as f64)
            .collect()
    } else {
        (0..counts[0].len())
            .map(|t| counts.iter().map(|row| row[t]).sum::<u64>() as f64 / total as f64)
            .collect()
    };
    MixedStrategy::new(probs).expect("count marginals form a pmf")
}

/// Simulates `cfg.max_stages` stages of regret matching on `g`.
///
/// Stage 1 is a uniform draw for every regret-matching player. From stage 2
/// on they sample from their regret state given their own previous action; a
/// best-responding follower always plays the lowest-index best response to
/// the realised current leader action. Both players' SPR series are tracked
/// whatever the mode. Convergence is declared at the first stage where every
/// regret-matching player's SPR falls below `cfg.spr_tolerance`; from the
/// next stage on those players follow the post-convergence policy (regret
/// tracking continues either way). Non-convergence within `max_stages` is a
/// valid outcome, recorded as `converged_at = None`. The trace is fully
/// determined by `cfg.rng_seed`.
pub fn run_rm(g: &BimatrixGame, cfg: &RmConfig) -> Result<RmTrace, RegretError> {
    cfg.validate()?;
    let nl = g.n_leader();
    let nf = g.n_follower();
    let conditional = cfg.mode.conditional();
    let follower_rm = cfg.mode.follower_uses_rm();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut leader = Tracker::new(conditional, nl);
    let mut follower = Tracker::new(conditional, nf);
    let c_leader = match cfg.ce_constant_c {
        CeConstant::Auto => auto_ce_constant(g, nl),
        CeConstant::Fixed(c) => c,
    };
    let c_follower = match cfg.ce_constant_c {
        CeConstant::Auto => auto_ce_constant(g, nf),
        CeConstant::Fixed(c) => c,
    };
    let br_table: Option<Vec<usize>> = if follower_rm {
        None
    } else {
        Some(
            (0..nl)
                .map(|s| {
                    g.follower_br_pure(s)
                        .expect("leader action in range")
                        .first()
                        .expect("best-response set is non-empty")
                })
                .collect(),
        )
    };

    let uniform_l = MixedStrategy::uniform(nl);
    let uniform_f = MixedStrategy::uniform(nf);
    let n_stages = usize::try_from(cfg.max_stages)
        .map_err(|_| RegretError::InvalidConfig("max_stages does not fit in memory".into()))?;
    let mut actions: Vec<(usize, usize)> = Vec::with_capacity(n_stages);
    let mut spr_leader = Vec::with_capacity(n_stages);
    let mut spr_follower = Vec::with_capacity(n_stages);
    let mut counts = vec![vec![0u64; nf]; nl];
    let mut converged_at: Option<u64> = None;
    let mut frozen_leader: Option<MixedStrategy> = None;
    let mut frozen_follower: Option<MixedStrategy> = None;
    let mut last: Option<(usize, usize)> = None;

    for stage in 1..=cfg.max_stages {
        let s_l = if converged_at.is_some() {
            match cfg.post_convergence {
                PostConvergence::Uniform => sample(&mut rng, uniform_l.probs()),
                PostConvergence::FreezeEmpirical => sample(
                    &mut rng,
                    frozen_leader
                        .as_ref()
                        .expect("frozen at convergence")
                        .probs(),
                ),
            }
        } else {
            match last {
                None => sample(&mut rng, uniform_l.probs()),
                Some((l, _)) => sample(&mut rng, leader.play_probs(l, c_leader)?.probs()),
            }
        };
        let s_f = if follower_rm {
            if converged_at.is_some() {
                match cfg.post_convergence {
                    PostConvergence::Uniform => sample(&mut rng, uniform_f.probs()),
                    PostConvergence::FreezeEmpirical => sample(
                        &mut rng,
                        frozen_follower
                            .as_ref()
                            .expect("frozen at convergence")
                            .probs(),
                    ),
                }
            } else {
                match last {
                    None => sample(&mut rng, uniform_f.probs()),
                    Some((_, f)) => sample(&mut rng, follower.play_probs(f, c_follower)?.probs()),
                }
            }
        } else {
            br_table.as_ref().expect("built for BR modes")[s_l]
        };

        leader.update(g, Role::Leader, s_l, s_f)?;
        follower.update(g, Role::Follower, s_f, s_l)?;
        spr_leader.push(leader.spr());
        spr_follower.push(follower.spr());
        counts[s_l][s_f] += 1;
        actions.push((s_l, s_f));

        if converged_at.is_none() {
            let leader_done = *spr_leader.last().expect("pushed above") < cfg.spr_tolerance;
            let follower_done =
                !follower_rm || *spr_follower.last().expect("pushed above") < cfg.spr_tolerance;
            if leader_done && follower_done {
                converged_at = Some(stage);
                if cfg.post_convergence == PostConvergence::FreezeEmpirical {
                    frozen_leader = Some(marginal_from_counts(&counts, true));
                    frozen_follower = Some(marginal_from_counts(&counts, false));
                }
            }
        }
        last = Some((s_l, s_f));
    }

    let joint = empirical_joint(&actions, nl, nf)?;
    let mut modal = (0, 0);
    let mut modal_count = 0u64;
    for (s, row) in counts.iter().enumerate() {
        for (t, &c) in row.iter().enumerate() {
            if c > modal_count {
                modal_count = c;
                modal = (s, t);
            }
        }
    }
    Ok(RmTrace {
        actions,
        spr_leader,
        spr_follower,
        empirical_joint: joint,
        converged_at,
        modal_joint_action: modal,
    })
}

/// Writes a trace as CSV with columns
/// `stage, leader_action, follower_action, spr_leader, spr_follower`.
/// Action indices are 1-based in the file.
pub fn write_trace_csv<W: std::io::Write>(trace: &RmTrace, w: W) -> Result<(), RegretError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "stage",
        "leader_action",
        "follower_action",
        "spr_leader",
        "spr_follower",
    ])?;
    for (i, &(s, t)) in trace.actions.iter().enumerate() {
        wtr.write_record(&[
            (i + 1).to_string(),
            (s + 1).to_string(),
            (t + 1).to_string(),
            format!("{}", trace.spr_leader[i]),
            format!("{}", trace.spr_follower[i]),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
