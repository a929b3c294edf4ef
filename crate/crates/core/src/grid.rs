//! Truncation boxes over pseudo-stochastic states.
//!
//! A box is a per-dimension inclusive upper bound with implicit lower bound 0.
//! Tables (Q-functions, policies, the truncated MDP) index box points in
//! lexicographic order: the first coordinate is most significant, the last
//! varies fastest.

use crate::error::{Error, Result};
use crate::mdp::PseudoState;
use serde::{Deserialize, Serialize};

/// Integer box `[0, upper_0] x ... x [0, upper_{d-1}]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxBounds {
    upper: Vec<i64>,
}

impl BoxBounds {
    pub fn new(upper: Vec<i64>) -> Result<Self> {
        if upper.is_empty() {
            return Err(Error::InvalidConfig("box must have at least one dimension".into()));
        }
        if upper.iter().any(|&u| u < 0) {
            return Err(Error::InvalidConfig(format!("box upper bounds must be >= 0, got {upper:?}")));
        }
        Ok(Self { upper })
    }

    /// Cubic box `[0, bound]^dim`.
    pub fn cube(dim: usize, bound: i64) -> Result<Self> {
        Self::new(vec![bound; dim])
    }

    pub fn dim(&self) -> usize {
        self.upper.len()
    }

    pub fn upper(&self) -> &[i64] {
        &self.upper
    }

    /// Number of lattice points in the box.
    pub fn n_points(&self) -> usize {
        self.upper.iter().map(|&u| u as usize + 1).product()
    }

    pub fn contains(&self, x: &PseudoState) -> bool {
        x.q.len() == self.dim() && x.q.iter().zip(&self.upper).all(|(&v, &u)| v >= 0 && v <= u)
    }

    /// Componentwise clamp into the box.
    pub fn clamp(&self, x: &PseudoState) -> PseudoState {
        debug_assert_eq!(x.q.len(), self.dim());
        PseudoState {
            q: x.q
                .iter()
                .zip(&self.upper)
                .map(|(&v, &u)| v.clamp(0, u))
                .collect(),
        }
    }

    /// Lexicographic index of `x` after clamping into the box.
    pub fn index_of(&self, x: &PseudoState) -> usize {
        debug_assert_eq!(x.q.len(), self.dim());
        let mut idx = 0usize;
        for (&v, &u) in x.q.iter().zip(&self.upper) {
            let c = v.clamp(0, u) as usize;
            idx = idx * (u as usize + 1) + c;
        }
        idx
    }

    /// Inverse of [`index_of`](Self::index_of) for in-box points.
    pub fn point(&self, mut idx: usize) -> PseudoState {
        let mut q = vec![0i64; self.dim()];
        for (slot, &u) in q.iter_mut().zip(&self.upper).rev() {
            let base = u as usize + 1;
            *slot = (idx % base) as i64;
            idx /= base;
        }
        PseudoState { q }
    }
}
