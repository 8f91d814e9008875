//! Bimatrix game representation, validation, and best-response analysis.
//!
//! A game holds one utility matrix per player, both of shape `n_leader` by
//! `n_follower`; rows are leader actions, columns are follower actions.
//! Action indices are 0-based everywhere inside the library. The 1-based
//! numbering that appears in JSON reports, CSV traces, and error messages is
//! produced only at the output boundary.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for accepting a probability vector as a distribution.
pub const PMF_TOL: f64 = 1e-9;

/// Largest accepted action count per player.
pub const MAX_ACTIONS: usize = 10_000;

/// Errors raised while constructing or querying a game.
///
/// Row and column positions in messages are 1-based.
#[derive(Debug, Error)]
pub enum GameError {
    #[error("dimension mismatch in {matrix}: {detail}")]
    DimensionMismatch {
        matrix: &'static str,
        detail: String,
    },
    #[error("non-finite entry in {matrix} at row {row}, column {col}")]
    NonFiniteEntry {
        matrix: &'static str,
        row: usize,
        col: usize,
    },
    #[error("{player} action {index} out of range 1..={limit}")]
    ActionOutOfRange {
        player: &'static str,
        index: usize,
        limit: usize,
    },
    #[error("invalid mixed strategy: {0}")]
    InvalidStrategy(String),
    #[error("satisfaction threshold must be finite, got {0}")]
    NonFiniteThreshold(f64),
    #[error("malformed game JSON: {0}")]
    Json(String),
}

/// Follower satisfaction threshold; finite by construction.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SatisfactionThreshold(f64);

impl SatisfactionThreshold {
    pub fn new(value: f64) -> Result<Self, GameError> {
        if value.is_finite() {
            Ok(Self(value))
        } else {
            Err(GameError::NonFiniteThreshold(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Probability distribution over one player's pure actions.
///
/// Entries are non-negative and sum to one within [`PMF_TOL`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct MixedStrategy {
    probs: Vec<f64>,
}

impl MixedStrategy {
    /// Validates and wraps a probability vector.
    pub fn new(probs: Vec<f64>) -> Result<Self, GameError> {
        if probs.is_empty() {
            return Err(GameError::InvalidStrategy(
                "empty probability vector".into(),
            ));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(GameError::InvalidStrategy(format!(
                    "entry {} is {p}",
                    i + 1
                )));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PMF_TOL {
            return Err(GameError::InvalidStrategy(format!(
                "entries sum to {sum}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Uniform distribution over `n` actions.
    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform strategy needs at least one action");
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    /// Point mass on `action` among `n` actions.
    pub fn point_mass(action: usize, n: usize) -> Self {
        assert!(action < n, "point mass action out of range");
        let mut probs = vec![0.0; n];
        probs[action] = 1.0;
        Self { probs }
    }

    /// Wraps an LP solution vector: entries within `-PMF_TOL` of zero are
    /// clamped to zero and the vector is renormalised, provided its sum is
    /// within the solver feasibility tolerance of one.
    pub fn from_lp_solution(mut probs: Vec<f64>) -> Result<Self, GameError> {
        for p in probs.iter_mut() {
            if *p < 0.0 {
                if *p < -PMF_TOL {
                    return Err(GameError::InvalidStrategy(format!(
                        "LP solution entry {p} below zero"
                    )));
                }
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if !(sum - 1.0).abs().is_finite() || (sum - 1.0).abs() > 1e-7 {
            return Err(GameError::InvalidStrategy(format!(
                "LP solution sums to {sum}, expected 1"
            )));
        }
        for p in probs.iter_mut() {
            *p /= sum;
        }
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Support of the distribution: actions with strictly positive mass.
    pub fn support(&self) -> Vec<usize> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Ordered set of pure-action indices, ascending and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSet(Vec<usize>);

impl ActionSet {
    fn from_sorted(actions: Vec<usize>) -> Self {
        debug_assert!(actions.windows(2).all(|w| w[0] < w[1]));
        Self(actions)
    }

    pub fn contains(&self, action: usize) -> bool {
        self.0.binary_search(&action).is_ok()
    }

    /// Lowest-index member, if any.
    pub fn first(&self) -> Option<usize> {
        self.0.first().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

#[derive(Deserialize)]
struct RawGame {
    n_leader: usize,
    n_follower: usize,
    u_leader: Vec<Vec<f64>>,
    u_follower: Vec<Vec<f64>>,
}

/// Two-player game in normal form with a designated leader and follower.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGame")]
pub struct BimatrixGame {
    n_leader: usize,
    n_follower: usize,
    u_leader: Vec<Vec<f64>>,
    u_follower: Vec<Vec<f64>>,
}

impl TryFrom<RawGame> for BimatrixGame {
    type Error = GameError;

    fn try_from(raw: RawGame) -> Result<Self, GameError> {
        let g = BimatrixGame::new(raw.u_leader, raw.u_follower)?;
        if g.n_leader != raw.n_leader || g.n_follower != raw.n_follower {
            return Err(GameError::DimensionMismatch {
                matrix: "game",
                detail: format!(
                    "declared {}x{}, matrices are {}x{}",
                    raw.n_leader, raw.n_follower, g.n_leader, g.n_follower
                ),
            });
        }
        Ok(g)
    }
}

fn check_matrix(
    name: &'static str,
    m: &[Vec<f64>],
    rows: usize,
    cols: usize,
) -> Result<(), GameError> {
    if m.len() != rows {
        return Err(GameError::DimensionMismatch {
            matrix: name,
            detail: format!("expected {rows} rows, found {}", m.len()),
        });
    }
    for (r, row) in m.iter().enumerate() {
        if row.len() != cols {
            return Err(GameError::DimensionMismatch {
                matrix: name,
                detail: format!("row {} has {} entries, expected {cols}", r + 1, row.len()),
            });
        }
        for (c, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(GameError::NonFiniteEntry {
                    matrix: name,
                    row: r + 1,
                    col: c + 1,
                });
            }
        }
    }
    Ok(())
}

impl BimatrixGame {
    /// Builds a game from the two utility matrices, validating shape and
    /// finiteness. Dimensions are taken from the leader matrix.
    pub fn new(u_leader: Vec<Vec<f64>>, u_follower: Vec<Vec<f64>>) -> Result<Self, GameError> {
        let n_leader = u_leader.len();
        if n_leader == 0 || n_leader > MAX_ACTIONS {
            return Err(GameError::DimensionMismatch {
                matrix: "u_leader",
                detail: format!("leader action count {n_leader} outside 1..={MAX_ACTIONS}"),
            });
        }
        let n_follower = u_leader[0].len();
        if n_follower == 0 || n_follower > MAX_ACTIONS {
            return Err(GameError::DimensionMismatch {
                matrix: "u_leader",
                detail: format!("follower action count {n_follower} outside 1..={MAX_ACTIONS}"),
            });
        }
        check_matrix("u_leader", &u_leader, n_leader, n_follower)?;
        check_matrix("u_follower", &u_follower, n_leader, n_follower)?;
        Ok(Self {
            n_leader,
            n_follower,
            u_leader,
            u_follower,
        })
    }

    /// Parses and validates a game from its JSON form:
    /// `{"n_leader": .., "n_follower": .., "u_leader": [[..]], "u_follower": [[..]]}`.
    pub fn from_json(s: &str) -> Result<Self, GameError> {
        serde_json::from_str(s).map_err(|e| match e.classify() {
            serde_json::error::Category::Data => GameError::Json(e.to_string()),
            _ => GameError::Json(e.to_string()),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("game serialises")
    }

    pub fn n_leader(&self) -> usize {
        self.n_leader
    }

    pub fn n_follower(&self) -> usize {
        self.n_follower
    }

    /// Leader utility for the pure action pair `(s_leader, s_follower)`.
    pub fn leader_payoff(&self, s_leader: usize, s_follower: usize) -> f64 {
        self.u_leader[s_leader][s_follower]
    }

    /// Follower utility for the pure action pair `(s_leader, s_follower)`.
    pub fn follower_payoff(&self, s_leader: usize, s_follower: usize) -> f64 {
        self.u_follower[s_leader][s_follower]
    }

    pub fn leader_matrix(&self) -> &[Vec<f64>] {
        &self.u_leader
    }

    pub fn follower_matrix(&self) -> &[Vec<f64>] {
        &self.u_follower
    }

    /// Largest leader utility entry.
    pub fn max_leader_payoff(&self) -> f64 {
        self.u_leader
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Spread between the largest and smallest utility across both matrices.
    pub fn utility_range(&self) -> f64 {
        let all = self.u_leader.iter().chain(self.u_follower.iter()).flatten();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in all {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi - lo
    }

    fn check_leader_action(&self, s: usize) -> Result<(), GameError> {
        if s >= self.n_leader {
            return Err(GameError::ActionOutOfRange {
                player: "leader",
                index: s + 1,
                limit: self.n_leader,
            });
        }
        Ok(())
    }

    fn check_follower_action(&self, t: usize) -> Result<(), GameError> {
        if t >= self.n_follower {
            return Err(GameError::ActionOutOfRange {
                player: "follower",
                index: t + 1,
                limit: self.n_follower,
            });
        }
        Ok(())
    }

    fn check_strategy(&self, pi: &MixedStrategy) -> Result<(), GameError> {
        if pi.len() != self.n_leader {
            return Err(GameError::InvalidStrategy(format!(
                "strategy has {} entries, game has {} leader actions",
                pi.len(),
                self.n_leader
            )));
        }
        Ok(())
    }

    /// Follower actions maximising follower utility against the pure leader
    /// action `s_leader`. Exact ties are all included.
    pub fn follower_br_pure(&self, s_leader: usize) -> Result<ActionSet, GameError> {
        self.check_leader_action(s_leader)?;
        let row = &self.u_follower[s_leader];
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let set = row
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == best)
            .map(|(t, _)| t)
            .collect();
        Ok(ActionSet::from_sorted(set))
    }

    /// Follower actions whose utility against `s_leader` meets the
    /// threshold; when none does, every action is equally unsatisfying and
    /// the full action set is returned.
    pub fn follower_br_sat_pure(
        &self,
        th: SatisfactionThreshold,
        s_leader: usize,
    ) -> Result<ActionSet, GameError> {
        self.check_leader_action(s_leader)?;
        let row = &self.u_follower[s_leader];
        let satisfied: Vec<usize> = row
            .iter()
            .enumerate()
            .filter(|(_, &v)| v >= th.value())
            .map(|(t, _)| t)
            .collect();
        if satisfied.is_empty() {
            Ok(ActionSet::from_sorted((0..self.n_follower).collect()))
        } else {
            Ok(ActionSet::from_sorted(satisfied))
        }
    }

    /// Probability that follower action `t` is satisfying when the leader
    /// plays the mixed strategy `pi`.
    pub fn satisfaction_probability(
        &self,
        th: SatisfactionThreshold,
        pi: &MixedStrategy,
        t: usize,
    ) -> Result<f64, GameError> {
        self.check_follower_action(t)?;
        self.check_strategy(pi)?;
        let mut p = 0.0;
        for (s, &w) in pi.probs().iter().enumerate() {
            if self.u_follower[s][t] >= th.value() {
                p += w;
            }
        }
        Ok(p)
    }

    /// Follower actions maximising the satisfaction probability against the
    /// mixed leader strategy `pi`. Exact ties are all included; when every
    /// probability is zero the full action set ties.
    pub fn follower_br_sat_mixed(
        &self,
        th: SatisfactionThreshold,
        pi: &MixedStrategy,
    ) -> Result<ActionSet, GameError> {
        self.check_strategy(pi)?;
        let probs: Vec<f64> = (0..self.n_follower)
            .map(|t| self.satisfaction_probability(th, pi, t))
            .collect::<Result<_, _>>()?;
        let best = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let set = probs
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == best)
            .map(|(t, _)| t)
            .collect();
        Ok(ActionSet::from_sorted(set))
    }

    /// Expected `(leader, follower)` utilities when the leader plays `pi`
    /// and the follower plays the pure action `t`.
    pub fn expected_utilities(
        &self,
        pi: &MixedStrategy,
        t: usize,
    ) -> Result<(f64, f64), GameError> {
        self.check_follower_action(t)?;
        self.check_strategy(pi)?;
        let mut ul = 0.0;
        let mut uf = 0.0;
        for (s, &w) in pi.probs().iter().enumerate() {
            ul += w * self.u_leader[s][t];
            uf += w * self.u_follower[s][t];
        }
        Ok((ul, uf))
    }

    /// All pure Nash equilibria under weak best-response inequalities,
    /// in lexicographic `(leader, follower)` order.
    pub fn find_pure_ne(&self) -> Vec<(usize, usize)> {
        let mut col_max = vec![f64::NEG_INFINITY; self.n_follower];
        for row in &self.u_leader {
            for (t, &v) in row.iter().enumerate() {
                col_max[t] = col_max[t].max(v);
            }
        }
        let mut ne = Vec::new();
        for s in 0..self.n_leader {
            let row_max = self.u_follower[s]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            for t in 0..self.n_follower {
                if self.u_leader[s][t] >= col_max[t] && self.u_follower[s][t] >= row_max {
                    ne.push((s, t));
                }
            }
        }
        ne
    }
}
