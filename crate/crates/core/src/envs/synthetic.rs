//! Small fully-tabular environments.
//!
//! These give tests and oracles complete control: explicit kernel tables,
//! a handful of pseudo-state update rules, and either formulaic or tabulated
//! costs. The pseudo-state is one-dimensional.

use crate::error::{Error, Result};
use crate::grid::BoxBounds;
use crate::mdp::{Action, MixedEnvironment, PseudoState, StochasticState};

/// Pseudo-state update rule.
#[derive(Debug, Clone)]
pub enum GRule {
    /// `x' = x`.
    Identity,
    /// `x' = clamp(x + delta[s][a][s'], 0, x_max)`.
    Drift { deltas: Vec<i64>, x_max: i64 },
    /// `x' = (x + s'.code + a) mod modulus`.
    ModMix { modulus: i64 },
}

/// Cost rule.
#[derive(Debug, Clone)]
pub enum CostRule {
    Constant(f64),
    /// Sum of pseudo-state components.
    QueueSum,
    /// Dense table over `(s, clamp(x, 0, x_max), a)`.
    Table { x_max: i64, values: Vec<f64> },
}

/// Fully-tabular mixed system with a 1-dimensional pseudo-state.
#[derive(Debug, Clone)]
pub struct SyntheticEnv {
    label: String,
    n_codes: usize,
    n_actions: usize,
    /// kernel[(s * n_actions + a) * n_codes + s']
    kernel: Vec<f64>,
    g_rule: GRule,
    cost_rule: CostRule,
    eta0: Vec<f64>,
    x0: PseudoState,
}

impl SyntheticEnv {
    pub fn new(
        label: impl Into<String>,
        n_codes: usize,
        n_actions: usize,
        kernel: Vec<f64>,
        g_rule: GRule,
        cost_rule: CostRule,
        eta0: Vec<f64>,
        x0: i64,
    ) -> Result<Self> {
        if n_codes == 0 || n_actions == 0 {
            return Err(Error::InvalidConfig("need at least one code and one action".into()));
        }
        if kernel.len() != n_codes * n_actions * n_codes {
            return Err(Error::InvalidConfig(format!(
                "kernel table has {} entries, expected {}",
                kernel.len(),
                n_codes * n_actions * n_codes
            )));
        }
        for s in 0..n_codes {
            for a in 0..n_actions {
                let row = &kernel[(s * n_actions + a) * n_codes..][..n_codes];
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > 1e-12 || row.iter().any(|&p| p < 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "kernel row (s={s}, a={a}) sums to {total}, expected 1"
                    )));
                }
            }
        }
        if eta0.len() != n_codes || (eta0.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig("eta0 must be a pmf over codes".into()));
        }
        if let GRule::Drift { deltas, .. } = &g_rule {
            if deltas.len() != n_codes * n_actions * n_codes {
                return Err(Error::InvalidConfig("drift table size mismatch".into()));
            }
        }
        Ok(Self {
            label: label.into(),
            n_codes,
            n_actions,
            kernel,
            g_rule,
            cost_rule,
            eta0,
            x0: PseudoState::new(vec![x0]),
        })
    }

    /// Single stochastic state, constant cost; handy for discounting checks.
    pub fn constant_cost(c: f64) -> Self {
        Self::new("const", 1, 1, vec![1.0], GRule::Identity, CostRule::Constant(c), vec![1.0], 0)
            .expect("valid")
    }
}

impl MixedEnvironment for SyntheticEnv {
    fn name(&self) -> &str {
        "synthetic"
    }

    fn signature(&self) -> String {
        format!("synthetic({},|S|={},|A|={})", self.label, self.n_codes, self.n_actions)
    }

    fn num_codes(&self) -> usize {
        self.n_codes
    }

    fn num_actions(&self) -> usize {
        self.n_actions
    }

    fn pseudo_dim(&self) -> usize {
        1
    }

    fn decode(&self, code: usize) -> StochasticState {
        StochasticState { code, payload: vec![code as i64] }
    }

    fn kernel_pmf(&self, s: &StochasticState, a: Action) -> Vec<f64> {
        let base = (s.code * self.n_actions + a.index) * self.n_codes;
        self.kernel[base..base + self.n_codes].to_vec()
    }

    fn g(
        &self,
        s: &StochasticState,
        x: &PseudoState,
        a: Action,
        s_next: &StochasticState,
    ) -> PseudoState {
        match &self.g_rule {
            GRule::Identity => x.clone(),
            GRule::Drift { deltas, x_max } => {
                let d = deltas[(s.code * self.n_actions + a.index) * self.n_codes + s_next.code];
                PseudoState::new(vec![(x.q[0] + d).clamp(0, *x_max)])
            }
            GRule::ModMix { modulus } => {
                PseudoState::new(vec![(x.q[0] + s_next.code as i64 + a.index as i64).rem_euclid(*modulus)])
            }
        }
    }

    fn cost(&self, s: &StochasticState, x: &PseudoState, a: Action) -> f64 {
        match &self.cost_rule {
            CostRule::Constant(c) => *c,
            CostRule::QueueSum => x.q.iter().sum::<i64>() as f64,
            CostRule::Table { x_max, values } => {
                let xi = x.q[0].clamp(0, *x_max) as usize;
                values[(s.code * (*x_max as usize + 1) + xi) * self.n_actions + a.index]
            }
        }
    }

    fn initial_pmf(&self) -> (Vec<f64>, PseudoState) {
        (self.eta0.clone(), self.x0.clone())
    }

    fn max_cost_in(&self, bounds: &BoxBounds) -> f64 {
        match &self.cost_rule {
            CostRule::Constant(c) => *c,
            CostRule::QueueSum => bounds.upper().iter().sum::<i64>() as f64,
            CostRule::Table { values, .. } => values.iter().cloned().fold(0.0, f64::max),
        }
    }
}
