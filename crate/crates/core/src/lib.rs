//! Reinforcement learning for mixed systems.
//!
//! A mixed system is an MDP whose state splits into a *stochastic* part,
//! driven by an action-dependent transition kernel, and a *pseudo-stochastic*
//! part (queue lengths, inventory levels, ...) that evolves deterministically
//! given the stochastic transition: `x' = g(s, x, a, s')`. Knowing `g` and the
//! cost function lets us expand every observed transition into many virtual
//! ones by resampling the pseudo-stochastic state, which is what the
//! [`asg`] module implements. The [`learners`] module builds batch FQI and
//! tabular Q-learning on top of that generator, [`baselines`] provides exact
//! value iteration and classic scheduling policies, and [`eval`] measures
//! policies and optimality gaps.
//!
//! Concrete environments (wireless downlink, criss-cross queueing networks)
//! live in [`envs`]. All randomness flows through caller-provided
//! [`rand_chacha::ChaCha8Rng`] generators; identical seeds give bit-identical
//! runs.

pub mod asg;
pub mod baselines;
pub mod dataset;
pub mod envs;
pub mod error;
pub mod eval;
pub mod grid;
pub mod learners;
pub mod mdp;
pub mod seed;
pub mod tabular;

pub use asg::{asg, BetaSampler, PseudoSampler};
pub use baselines::{max_weight, PriorityPolicy, RandomPolicy, TruncatedMdp, WirelessMaxWeight};
pub use dataset::Dataset;
pub use error::{Error, Result};
pub use eval::{avg_queue_length, gap_sweep, mc_policy_value, mixture_check, EvalReport};
pub use grid::BoxBounds;
pub use learners::{batch_fqi_asg, fqi_fit, q_learning, FqiConfig, QLearnConfig};
pub use mdp::{
    collect_dataset, env_step, rollout, Action, BehaviorRecipe, MixedEnvironment, Policy,
    PseudoState, StochasticState, Transition,
};
pub use tabular::{PolicyTable, TabularQ};
