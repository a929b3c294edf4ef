//! Mixed-system MDP abstraction and sampling primitives.
//!
//! The state of a mixed system is a pair `(s, x)`: `s` is the stochastic
//! state, drawn from an action-dependent kernel that never looks at `x`, and
//! `x` is the pseudo-stochastic state, updated by the pure function
//! `x' = g(s, x, a, s')`. Costs are deterministic and known. Environments
//! implement [`MixedEnvironment`]; everything else in the crate is generic
//! over that trait.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Stochastic state: a dense code plus the event content it decodes to.
///
/// The payload (arrival counts, event kind, ...) is what `g` and `R` read, so
/// replayed transitions stay exact even when serialized and reloaded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StochasticState {
    pub code: usize,
    pub payload: Vec<i64>,
}

/// Pseudo-stochastic state: an integer vector (queue lengths, remaining work).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PseudoState {
    pub q: Vec<i64>,
}

impl PseudoState {
    pub fn new(q: Vec<i64>) -> Self {
        Self { q }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { q: vec![0; dim] }
    }
}

/// Action index into the environment's finite action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub index: usize,
}

impl Action {
    pub fn new(index: usize) -> Self {
        Self { index }
    }
}

/// One sample `(s, x, a, r, s', x')`, the unit of both real and virtual data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Transition {
    pub s: StochasticState,
    pub x: PseudoState,
    pub a: Action,
    pub r: f64,
    pub s_next: StochasticState,
    pub x_next: PseudoState,
    pub virtual_flag: bool,
    /// Index of the real parent sample, for virtual samples only. Diagnostic;
    /// not part of the wire format.
    #[serde(skip)]
    pub parent: Option<usize>,
}

impl PartialEq for Transition {
    fn eq(&self, other: &Self) -> bool {
        // parent is diagnostic metadata and excluded from equality
        self.s == other.s
            && self.x == other.x
            && self.a == other.a
            && self.r == other.r
            && self.s_next == other.s_next
            && self.x_next == other.x_next
            && self.virtual_flag == other.virtual_flag
    }
}

/// Behavioral interface of a mixed system.
///
/// `kernel_pmf` takes no pseudo-state argument: the signature itself enforces
/// that the stochastic transition is independent of `x`. Stochastic states are
/// enumerable with exact probabilities so that value iteration and the
/// augmented-data mixture test can work from the true kernel.
pub trait MixedEnvironment {
    /// Canonical short name ("wireless", "crisscross", ...).
    fn name(&self) -> &str;

    /// Canonical parameter string; datasets record it and refuse to mix.
    fn signature(&self) -> String;

    fn num_codes(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn pseudo_dim(&self) -> usize;

    /// Rebuild the full stochastic state (with payload) from its code.
    fn decode(&self, code: usize) -> StochasticState;

    /// Exact next-code distribution given the current state and action.
    fn kernel_pmf(&self, s: &StochasticState, a: Action) -> Vec<f64>;

    /// Deterministic pseudo-state update. Pure: same inputs, same output.
    fn g(
        &self,
        s: &StochasticState,
        x: &PseudoState,
        a: Action,
        s_next: &StochasticState,
    ) -> PseudoState;

    /// Deterministic one-step cost.
    fn cost(&self, s: &StochasticState, x: &PseudoState, a: Action) -> f64;

    /// Initial distribution eta_0 as (pmf over codes, fixed initial x).
    fn initial_pmf(&self) -> (Vec<f64>, PseudoState);

    /// Draw the next stochastic state. The default inverse-CDF walk matches
    /// `kernel_pmf` exactly; environments may override with an equivalent
    /// specialized sampler.
    fn kernel_sample(&self, s: &StochasticState, a: Action, rng: &mut ChaCha8Rng) -> StochasticState {
        let pmf = self.kernel_pmf(s, a);
        let code = sample_index(&pmf, rng);
        self.decode(code)
    }

    /// Draw `(s_0, x_0)` from eta_0.
    fn sample_initial(&self, rng: &mut ChaCha8Rng) -> (StochasticState, PseudoState) {
        let (pmf, x0) = self.initial_pmf();
        let code = sample_index(&pmf, rng);
        (self.decode(code), x0)
    }

    /// Largest one-step cost over the truncated grid; used for V_max.
    fn max_cost_in(&self, bounds: &crate::grid::BoxBounds) -> f64 {
        let mut r_max: f64 = 0.0;
        for code in 0..self.num_codes() {
            let s = self.decode(code);
            for xi in 0..bounds.n_points() {
                let x = bounds.point(xi);
                for a in 0..self.num_actions() {
                    r_max = r_max.max(self.cost(&s, &x, Action::new(a)));
                }
            }
        }
        r_max
    }

    /// Total job count of `x`; environments whose pseudo-state carries
    /// non-queue components (remaining work) override this.
    fn queue_total(&self, x: &PseudoState) -> i64 {
        x.q.iter().sum()
    }
}

/// Inverse-CDF draw from a pmf slice.
pub(crate) fn sample_index(pmf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in pmf.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    pmf.len() - 1
}

/// A (possibly randomized) stationary policy over mixed states.
pub trait Policy {
    fn act(&self, s: &StochasticState, x: &PseudoState, rng: &mut ChaCha8Rng) -> Action;
}

/// Take one environment step from `(s, x)` under `a`.
pub fn env_step(
    env: &dyn MixedEnvironment,
    s: &StochasticState,
    x: &PseudoState,
    a: Action,
    rng: &mut ChaCha8Rng,
) -> Result<Transition> {
    if a.index >= env.num_actions() {
        return Err(Error::InvalidAction {
            index: a.index,
            n_actions: env.num_actions(),
        });
    }
    let r = env.cost(s, x, a);
    let s_next = env.kernel_sample(s, a, rng);
    let x_next = env.g(s, x, a, &s_next);
    Ok(Transition {
        s: s.clone(),
        x: x.clone(),
        a,
        r,
        s_next,
        x_next,
        virtual_flag: false,
        parent: None,
    })
}

/// Roll a policy out from eta_0 for `horizon` steps.
///
/// Returns the trajectory and the discounted cost
/// `sum_{h<horizon} gamma^h R(s_h, x_h, a_h)`.
pub fn rollout(
    env: &dyn MixedEnvironment,
    policy: &dyn Policy,
    horizon: usize,
    gamma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Transition>, f64)> {
    if horizon < 1 {
        return Err(Error::InvalidConfig("rollout horizon must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidConfig(format!("gamma must be in [0,1), got {gamma}")));
    }
    let (mut s, mut x) = env.sample_initial(rng);
    let mut trajectory = Vec::with_capacity(horizon);
    let mut total = 0.0;
    let mut discount = 1.0;
    for _ in 0..horizon {
        let a = policy.act(&s, &x, rng);
        let tr = env_step(env, &s, &x, a, rng)?;
        total += discount * tr.r;
        discount *= gamma;
        s = tr.s_next.clone();
        x = tr.x_next.clone();
        trajectory.push(tr);
    }
    Ok((trajectory, total))
}

/// Sampling recipe for the data distribution mu over `(s, x, a)`.
pub enum BehaviorRecipe<'a> {
    /// Explicit product distribution: code, pseudo-state and action drawn
    /// independently.
    Product {
        code_weights: Vec<f64>,
        x_sampler: &'a dyn crate::asg::PseudoSampler,
        action_weights: Vec<f64>,
    },
    /// Discounted occupancy of an epsilon-greedy wrapping of `policy`: each
    /// sample restarts from eta_0, walks a Geometric(1-gamma) number of steps,
    /// and records the state reached. Samples are i.i.d. by construction.
    OnPolicy {
        policy: &'a dyn Policy,
        gamma: f64,
        epsilon: f64,
    },
}

fn normalized(weights: &[f64], what: &str) -> Result<Vec<f64>> {
    if weights.is_empty() || weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidConfig(format!("{what} weights must be non-negative and finite")));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidConfig(format!("{what} weights must not all be zero")));
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// Draw `n` i.i.d. transitions with `(s, x, a) ~ mu` given by `recipe`.
pub fn collect_dataset(
    env: &dyn MixedEnvironment,
    recipe: &BehaviorRecipe,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidConfig("dataset size n must be >= 1".into()));
    }
    let mut transitions = Vec::with_capacity(n);
    match recipe {
        BehaviorRecipe::Product {
            code_weights,
            x_sampler,
            action_weights,
        } => {
            let code_pmf = normalized(code_weights, "code")?;
            if code_pmf.len() != env.num_codes() {
                return Err(Error::InvalidConfig(format!(
                    "code weights have length {}, |S| is {}",
                    code_pmf.len(),
                    env.num_codes()
                )));
            }
            let action_pmf = normalized(action_weights, "action")?;
            if action_pmf.len() != env.num_actions() {
                return Err(Error::InvalidConfig(format!(
                    "action weights have length {}, |A| is {}",
                    action_pmf.len(),
                    env.num_actions()
                )));
            }
            for _ in 0..n {
                let s = env.decode(sample_index(&code_pmf, rng));
                let x = x_sampler.sample(rng);
                let a = Action::new(sample_index(&action_pmf, rng));
                transitions.push(env_step(env, &s, &x, a, rng)?);
            }
        }
        BehaviorRecipe::OnPolicy { policy, gamma, epsilon } => {
            if !(0.0..1.0).contains(gamma) {
                return Err(Error::InvalidConfig(format!("gamma must be in [0,1), got {gamma}")));
            }
            if !(0.0..=1.0).contains(epsilon) {
                return Err(Error::InvalidConfig(format!("epsilon must be in [0,1], got {epsilon}")));
            }
            for _ in 0..n {
                // T ~ Geometric(1-gamma) on {0,1,...}
                let t = if *gamma == 0.0 {
                    0
                } else {
                    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                    (u.ln() / gamma.ln()).floor() as u64
                };
                let (mut s, mut x) = env.sample_initial(rng);
                for _ in 0..t {
                    let a = eps_greedy_act(*policy, *epsilon, env.num_actions(), &s, &x, rng);
                    let tr = env_step(env, &s, &x, a, rng)?;
                    s = tr.s_next;
                    x = tr.x_next;
                }
                let a = eps_greedy_act(*policy, *epsilon, env.num_actions(), &s, &x, rng);
                transitions.push(env_step(env, &s, &x, a, rng)?);
            }
        }
    }
    Ok(Dataset::new(env.signature(), transitions))
}

fn eps_greedy_act(
    policy: &dyn Policy,
    epsilon: f64,
    n_actions: usize,
    s: &StochasticState,
    x: &PseudoState,
    rng: &mut ChaCha8Rng,
) -> Action {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        Action::new(rng.gen_range(0..n_actions))
    } else {
        policy.act(s, x, rng)
    }
}
