//! Dense tables over the truncated state grid.
//!
//! Both the Q-table and the policy table index cells in a fixed documented
//! order: stochastic code major, then pseudo-state in lexicographic order
//! (first coordinate most significant), then action. Serialized forms carry
//! the values as one flat array in exactly that order.
//!
//! Lookups clamp the pseudo-state componentwise into the box; the dynamics
//! themselves are never clamped.

use crate::error::{Error, Result};
use crate::grid::BoxBounds;
use crate::mdp::{Action, Policy, PseudoState, StochasticState};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Dense Q-function over `(s, x, a)` cells, values in `[0, v_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularQ {
    n_codes: usize,
    n_actions: usize,
    bounds: BoxBounds,
    v_max: f64,
    values: Vec<f64>,
}

impl TabularQ {
    pub fn zeros(n_codes: usize, n_actions: usize, bounds: BoxBounds, v_max: f64) -> Self {
        let cells = n_codes * bounds.n_points() * n_actions;
        Self { n_codes, n_actions, bounds, v_max, values: vec![0.0; cells] }
    }

    pub fn constant(n_codes: usize, n_actions: usize, bounds: BoxBounds, v_max: f64, value: f64) -> Self {
        let mut t = Self::zeros(n_codes, n_actions, bounds, v_max);
        t.values.fill(value.clamp(0.0, v_max));
        t
    }

    pub fn random(
        n_codes: usize,
        n_actions: usize,
        bounds: BoxBounds,
        v_max: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        use rand::Rng;
        let mut t = Self::zeros(n_codes, n_actions, bounds, v_max);
        for v in &mut t.values {
            *v = rng.gen::<f64>() * v_max;
        }
        t
    }

    pub fn n_codes(&self) -> usize {
        self.n_codes
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn bounds(&self) -> &BoxBounds {
        &self.bounds
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn n_cells(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Flat cell index; `xi` is a box lattice index.
    #[inline]
    pub fn cell(&self, code: usize, xi: usize, a: usize) -> usize {
        (code * self.bounds.n_points() + xi) * self.n_actions + a
    }

    #[inline]
    pub fn cell_of(&self, s: &StochasticState, x: &PseudoState, a: Action) -> usize {
        self.cell(s.code, self.bounds.index_of(x), a.index)
    }

    pub fn get(&self, s: &StochasticState, x: &PseudoState, a: Action) -> f64 {
        self.values[self.cell_of(s, x, a)]
    }

    /// `min_a Q(s, x, a)` with the clamped lookup.
    pub fn min_value(&self, code: usize, xi: usize) -> f64 {
        let base = self.cell(code, xi, 0);
        self.values[base..base + self.n_actions]
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// `argmin_a Q(s, x, a)`; ties resolve to the lowest action index.
    pub fn argmin(&self, code: usize, xi: usize) -> Action {
        let base = self.cell(code, xi, 0);
        let mut best = 0usize;
        let mut best_v = self.values[base];
        for a in 1..self.n_actions {
            let v = self.values[base + a];
            if v < best_v {
                best_v = v;
                best = a;
            }
        }
        Action::new(best)
    }

    pub fn value_at(&self, s: &StochasticState, x: &PseudoState) -> f64 {
        self.min_value(s.code, self.bounds.index_of(x))
    }

    /// Sup-norm distance to another table of the same shape.
    pub fn sup_dist(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}

/// Deterministic action map over the truncated grid, code-major then
/// x-lexicographic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTable {
    n_codes: usize,
    n_actions: usize,
    bounds: BoxBounds,
    actions: Vec<u16>,
}

impl PolicyTable {
    pub fn uniform_action(n_codes: usize, n_actions: usize, bounds: BoxBounds, a: Action) -> Self {
        let cells = n_codes * bounds.n_points();
        Self { n_codes, n_actions, bounds, actions: vec![a.index as u16; cells] }
    }

    /// Greedy (lowest-index tie break) policy of a Q-table.
    pub fn greedy_from_q(q: &TabularQ) -> Self {
        let nx = q.bounds().n_points();
        let mut actions = Vec::with_capacity(q.n_codes() * nx);
        for code in 0..q.n_codes() {
            for xi in 0..nx {
                actions.push(q.argmin(code, xi).index as u16);
            }
        }
        Self {
            n_codes: q.n_codes(),
            n_actions: q.n_actions(),
            bounds: q.bounds().clone(),
            actions,
        }
    }

    pub fn n_codes(&self) -> usize {
        self.n_codes
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn bounds(&self) -> &BoxBounds {
        &self.bounds
    }

    pub fn actions(&self) -> &[u16] {
        &self.actions
    }

    pub fn action_at(&self, code: usize, xi: usize) -> Action {
        Action::new(self.actions[code * self.bounds.n_points() + xi] as usize)
    }

    /// Lookup with componentwise clamping of off-grid pseudo-states.
    pub fn lookup(&self, s: &StochasticState, x: &PseudoState) -> Action {
        self.action_at(s.code, self.bounds.index_of(x))
    }

    pub fn check_grid(&self, n_codes: usize, n_actions: usize, pseudo_dim: usize) -> Result<()> {
        if self.n_codes != n_codes || self.n_actions != n_actions || self.bounds.dim() != pseudo_dim
        {
            return Err(Error::GridMismatch(format!(
                "policy grid (|S|={}, |A|={}, dim={}) vs environment (|S|={}, |A|={}, dim={})",
                self.n_codes,
                self.n_actions,
                self.bounds.dim(),
                n_codes,
                n_actions,
                pseudo_dim
            )));
        }
        Ok(())
    }
}

impl Policy for PolicyTable {
    fn act(&self, s: &StochasticState, x: &PseudoState, _rng: &mut ChaCha8Rng) -> Action {
        self.lookup(s, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::derive_rng;

    fn small_q() -> TabularQ {
        let bounds = BoxBounds::new(vec![1, 1]).unwrap();
        let mut q = TabularQ::zeros(2, 2, bounds, 10.0);
        for (i, v) in q.values_mut().iter_mut().enumerate() {
            *v = i as f64;
        }
        q
    }

    #[test]
    fn index_order_is_code_then_x_then_action() {
        let q = small_q();
        let s0 = StochasticState { code: 0, payload: vec![] };
        let s1 = StochasticState { code: 1, payload: vec![] };
        let x00 = PseudoState::new(vec![0, 0]);
        let x01 = PseudoState::new(vec![0, 1]);
        assert_eq!(q.get(&s0, &x00, Action::new(0)), 0.0);
        assert_eq!(q.get(&s0, &x00, Action::new(1)), 1.0);
        assert_eq!(q.get(&s0, &x01, Action::new(0)), 2.0);
        assert_eq!(q.get(&s1, &x00, Action::new(0)), 8.0);
    }

    #[test]
    fn lookup_clamps_off_grid() {
        let q = small_q();
        let s = StochasticState { code: 0, payload: vec![] };
        let far = PseudoState::new(vec![50, -3]);
        let corner = PseudoState::new(vec![1, 0]);
        assert_eq!(q.get(&s, &far, Action::new(0)), q.get(&s, &corner, Action::new(0)));
    }

    #[test]
    fn argmin_breaks_ties_low() {
        let bounds = BoxBounds::new(vec![0]).unwrap();
        let q = TabularQ::zeros(1, 3, bounds, 1.0);
        assert_eq!(q.argmin(0, 0), Action::new(0));
    }

    #[test]
    fn identical_tables_give_identical_policies() {
        let mut rng = derive_rng(13, "tabular-ties");
        let bounds = BoxBounds::new(vec![2, 2]).unwrap();
        let a = TabularQ::random(3, 2, bounds.clone(), 5.0, &mut rng);
        let b = a.clone();
        assert_eq!(PolicyTable::greedy_from_q(&a), PolicyTable::greedy_from_q(&b));
    }

    #[test]
    fn table_roundtrips_through_json() {
        let q = small_q();
        let text = serde_json::to_string(&q).unwrap();
        let back: TabularQ = serde_json::from_str(&text).unwrap();
        assert_eq!(back, q);
    }
}
