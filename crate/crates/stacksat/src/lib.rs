//! Solvers and learning dynamics for two-player Stackelberg games in which
//! the follower either maximises expected utility (the standard model) or
//! maximises the probability that its utility clears a satisfaction
//! threshold.
//!
//! The crate is organised as:
//!
//! * [`game`] — bimatrix games, validation, best responses, pure equilibria;
//! * [`lp`] — a self-contained dense two-phase simplex solver;
//! * [`stackelberg`] — optimal-commitment solvers (pure, multi-LP, single-LP)
//!   for both follower models;
//! * [`regret`] — regret-matching dynamics with unconditional and
//!   conditional regrets;
//! * [`experiments`] — Monte Carlo threshold sweeps, the bundled reference
//!   game, and CSV export.

pub mod experiments;
pub mod game;
pub mod lp;
pub mod regret;
pub mod stackelberg;

pub use experiments::{DominanceViolation, SweepConfig, SweepError, SweepMode, SweepResult};
pub use game::{ActionSet, BimatrixGame, GameError, MixedStrategy, SatisfactionThreshold};
pub use lp::{BasicFeasibleSeed, LpError, LpOutcome, LpProblem, LpStatus};
pub use regret::{CeConstant, PostConvergence, RegretError, RmConfig, RmMode, RmTrace};
pub use stackelberg::{SolveError, StackelbergSolution};
