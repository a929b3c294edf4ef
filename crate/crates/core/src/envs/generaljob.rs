//! Criss-cross network with variable job sizes.
//!
//! Class 1 and class 3 jobs need between 1 and `job_size_range` service
//! completions at server 1, the requirement drawn uniformly. The
//! pseudo-stochastic state is `(q1, q2, q3, w1, w3)`: per-class job counts
//! plus the remaining work of the job at the head of each server-1 queue.
//! Sizes ride inside the stochastic state so the queue update stays pure:
//! arrival events carry the size of the arriving job (used when it enters
//! service immediately) and server-1 completion events carry the size of the
//! job that next enters service, if any. For FIFO queues with i.i.d. sizes
//! this is distributionally identical to fixing sizes at arrival, and it keeps
//! the state finite.
//!
//! `job_size_range = 1` reproduces the plain criss-cross dynamics exactly.

use super::crisscross::{EventKind, SERVE_CLASS_1, SERVE_CLASS_3};
use crate::error::{Error, Result};
use crate::grid::BoxBounds;
use crate::mdp::{Action, MixedEnvironment, PseudoState, StochasticState};

/// Criss-cross with uniform job sizes in `1..=range` for classes 1 and 3.
#[derive(Debug, Clone)]
pub struct GeneralJobCrissCross {
    lambda1: f64,
    lambda3: f64,
    mu1: f64,
    mu2: f64,
    mu3: f64,
    range: i64,
    total_rate: f64,
}

impl GeneralJobCrissCross {
    pub fn new(lambda: (f64, f64), mu: (f64, f64, f64), job_size_range: i64) -> Result<Self> {
        let (lambda1, lambda3) = lambda;
        let (mu1, mu2, mu3) = mu;
        for (name, v) in [
            ("lambda1", lambda1),
            ("lambda3", lambda3),
            ("mu1", mu1),
            ("mu2", mu2),
            ("mu3", mu3),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        if job_size_range < 1 {
            return Err(Error::InvalidConfig(format!(
                "job_size_range must be >= 1, got {job_size_range}"
            )));
        }
        if lambda1 / mu1 + lambda3 / mu3 >= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "unsupportable base load: lambda1/mu1 + lambda3/mu3 = {} >= 1",
                lambda1 / mu1 + lambda3 / mu3
            )));
        }
        if lambda1 / mu2 >= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "unsupportable base load: lambda1/mu2 = {} >= 1",
                lambda1 / mu2
            )));
        }
        let total_rate = lambda1 + lambda3 + mu1 + mu2 + mu3;
        Ok(Self { lambda1, lambda3, mu1, mu2, mu3, range: job_size_range, total_rate })
    }

    pub fn job_size_range(&self) -> i64 {
        self.range
    }

    fn r(&self) -> usize {
        self.range as usize
    }

    /// Code layout: sized arrival-1 block, sized arrival-3 block, sized
    /// server-1 completion block, server-2 completion, null.
    fn encode(&self, kind: EventKind, size: i64) -> usize {
        let r = self.r();
        match kind {
            EventKind::Arrival1 => size as usize - 1,
            EventKind::Arrival3 => r + size as usize - 1,
            EventKind::ServiceServer1 => 2 * r + size as usize - 1,
            EventKind::ServiceServer2 => 3 * r,
            EventKind::Null => 3 * r + 1,
        }
    }

    fn kind_and_size(&self, code: usize) -> (EventKind, i64) {
        let r = self.r();
        if code < r {
            (EventKind::Arrival1, code as i64 + 1)
        } else if code < 2 * r {
            (EventKind::Arrival3, (code - r) as i64 + 1)
        } else if code < 3 * r {
            (EventKind::ServiceServer1, (code - 2 * r) as i64 + 1)
        } else if code == 3 * r {
            (EventKind::ServiceServer2, 0)
        } else {
            (EventKind::Null, 0)
        }
    }
}

const Q1: usize = 0;
const Q2: usize = 1;
const Q3: usize = 2;
const W1: usize = 3;
const W3: usize = 4;

impl MixedEnvironment for GeneralJobCrissCross {
    fn name(&self) -> &str {
        "crisscross-gen"
    }

    fn signature(&self) -> String {
        format!(
            "crisscross-gen(lambda=({:?},{:?}),mu=({:?},{:?},{:?}),range={})",
            self.lambda1, self.lambda3, self.mu1, self.mu2, self.mu3, self.range
        )
    }

    fn num_codes(&self) -> usize {
        3 * self.r() + 2
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn pseudo_dim(&self) -> usize {
        5
    }

    fn decode(&self, code: usize) -> StochasticState {
        let (kind, size) = self.kind_and_size(code);
        StochasticState { code, payload: vec![kind as i64, size] }
    }

    fn kernel_pmf(&self, _s: &StochasticState, a: Action) -> Vec<f64> {
        let mu_served = if a == SERVE_CLASS_1 { self.mu1 } else { self.mu3 };
        let r = self.r() as f64;
        let mut pmf = vec![0.0; self.num_codes()];
        for size in 1..=self.range {
            pmf[self.encode(EventKind::Arrival1, size)] = self.lambda1 / (self.total_rate * r);
            pmf[self.encode(EventKind::Arrival3, size)] = self.lambda3 / (self.total_rate * r);
            pmf[self.encode(EventKind::ServiceServer1, size)] = mu_served / (self.total_rate * r);
        }
        pmf[self.encode(EventKind::ServiceServer2, 0)] = self.mu2 / self.total_rate;
        let assigned: f64 = pmf.iter().sum();
        pmf[self.encode(EventKind::Null, 0)] = 1.0 - assigned;
        pmf
    }

    fn g(
        &self,
        _s: &StochasticState,
        x: &PseudoState,
        a: Action,
        s_next: &StochasticState,
    ) -> PseudoState {
        let kind = EventKind::from_i64(s_next.payload[0]).expect("valid event kind");
        let size = s_next.payload[1];
        let mut q = x.q.clone();
        match kind {
            EventKind::Arrival1 => {
                q[Q1] += 1;
                if q[Q1] == 1 {
                    q[W1] = size; // straight into service
                }
            }
            EventKind::Arrival3 => {
                q[Q3] += 1;
                if q[Q3] == 1 {
                    q[W3] = size;
                }
            }
            EventKind::ServiceServer1 => {
                let (qc, wc, to_class2) = if a == SERVE_CLASS_1 {
                    (Q1, W1, false)
                } else {
                    (Q3, W3, true)
                };
                if q[qc] > 0 {
                    q[wc] -= 1;
                    if q[wc] == 0 {
                        q[qc] -= 1; // job done
                        if to_class2 {
                            q[Q2] += 1;
                        }
                        if q[qc] > 0 {
                            q[wc] = size; // next job enters service
                        }
                    }
                }
            }
            EventKind::ServiceServer2 => {
                if q[Q2] > 0 {
                    q[Q2] -= 1;
                }
            }
            EventKind::Null => {}
        }
        PseudoState { q }
    }

    fn cost(&self, _s: &StochasticState, x: &PseudoState, _a: Action) -> f64 {
        (x.q[Q1] + x.q[Q2] + x.q[Q3]) as f64
    }

    fn initial_pmf(&self) -> (Vec<f64>, PseudoState) {
        let mut pmf = vec![0.0; self.num_codes()];
        pmf[self.encode(EventKind::Null, 0)] = 1.0;
        (pmf, PseudoState::zeros(5))
    }

    fn max_cost_in(&self, bounds: &BoxBounds) -> f64 {
        (bounds.upper()[Q1] + bounds.upper()[Q2] + bounds.upper()[Q3]) as f64
    }

    fn queue_total(&self, x: &PseudoState) -> i64 {
        x.q[Q1] + x.q[Q2] + x.q[Q3]
    }
}
