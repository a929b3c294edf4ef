//! Criss-cross queueing network, uniformized to discrete time.
//!
//! Two servers, three job classes. Server 1 works on class 1 or class 3
//! (that choice is the action); server 2 works on class 2. Class 1 jobs leave
//! after service, class 3 jobs turn into class 2 jobs, class 2 jobs leave.
//! Arrivals are Poisson (`lambda1`, `lambda3`), services exponential
//! (`mu1`, `mu2`, `mu3`).
//!
//! The continuous-time chain is sampled at total rate
//! `lambda1 + lambda3 + mu1 + mu2 + mu3`; each tick carries one *potential*
//! event. A potential service completion drawn for an empty queue is
//! fictitious and changes nothing, which keeps the event distribution
//! independent of the queue state: the event alphabet is the stochastic state
//! and the queue vector is the pseudo-stochastic state. The event a tick
//! applies is the one carried by the *next* stochastic state, so its
//! probability was drawn with the service rate of the class the action
//! actually served.
//!
//! In the two-phase variant class 3 jobs need a second pass at server 1:
//! a completed phase-1 job leaves the system with probability `p` and
//! otherwise re-queues in phase 2 (served ahead of phase 1, preserving FIFO
//! order within the class); completed phase-2 jobs turn into class 2 jobs.
//! The phase-routing coin is drawn as part of every event so the queue update
//! stays a pure function.

use crate::error::{Error, Result};
use crate::grid::BoxBounds;
use crate::mdp::{Action, MixedEnvironment, PseudoState, StochasticState};

/// Potential event carried by the stochastic state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Arrival1 = 0,
    Arrival3 = 1,
    /// Potential completion at server 1 (class picked by the action).
    ServiceServer1 = 2,
    /// Potential completion at server 2.
    ServiceServer2 = 3,
    Null = 4,
}

impl EventKind {
    pub const ALL: [EventKind; 5] = [
        EventKind::Arrival1,
        EventKind::Arrival3,
        EventKind::ServiceServer1,
        EventKind::ServiceServer2,
        EventKind::Null,
    ];

    pub fn from_i64(v: i64) -> Option<Self> {
        Self::ALL.get(v as usize).copied()
    }
}

pub const SERVE_CLASS_1: Action = Action { index: 0 };
pub const SERVE_CLASS_3: Action = Action { index: 1 };

/// One- or two-phase criss-cross network.
#[derive(Debug, Clone)]
pub struct CrissCross {
    lambda1: f64,
    lambda3: f64,
    mu1: f64,
    mu2: f64,
    mu3: f64,
    /// Phase-1 leave probability; `None` selects the one-phase network.
    leave_prob: Option<f64>,
    total_rate: f64,
}

impl CrissCross {
    pub fn new(lambda1: f64, lambda3: f64, mu1: f64, mu2: f64, mu3: f64) -> Result<Self> {
        Self::build(lambda1, lambda3, mu1, mu2, mu3, None)
    }

    /// Two-phase variant: completed phase-1 class-3 jobs leave with
    /// probability `p`, otherwise continue to phase 2.
    pub fn two_phase(
        lambda1: f64,
        lambda3: f64,
        mu1: f64,
        mu2: f64,
        mu3: f64,
        p: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidConfig(format!("leave probability must be in [0,1], got {p}")));
        }
        Self::build(lambda1, lambda3, mu1, mu2, mu3, Some(p))
    }

    /// The benchmark regime: mu = (2, 1.5, 2), lambda = (0.6, 0.6).
    pub fn imbalanced_medium() -> Self {
        Self::new(0.6, 0.6, 2.0, 1.5, 2.0).expect("benchmark rates are valid")
    }

    fn build(
        lambda1: f64,
        lambda3: f64,
        mu1: f64,
        mu2: f64,
        mu3: f64,
        leave_prob: Option<f64>,
    ) -> Result<Self> {
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
        // load must be supportable
        if lambda1 / mu1 + lambda3 / mu3 >= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "unsupportable load: lambda1/mu1 + lambda3/mu3 = {} >= 1",
                lambda1 / mu1 + lambda3 / mu3
            )));
        }
        if lambda1 / mu2 >= 1.0 {
            return Err(Error::InvalidConfig(format!(
                "unsupportable load: lambda1/mu2 = {} >= 1",
                lambda1 / mu2
            )));
        }
        let total_rate = lambda1 + lambda3 + mu1 + mu2 + mu3;
        Ok(Self { lambda1, lambda3, mu1, mu2, mu3, leave_prob, total_rate })
    }

    pub fn is_two_phase(&self) -> bool {
        self.leave_prob.is_some()
    }

    /// Total event rate used for the discrete-time conversion.
    pub fn uniformization_rate(&self) -> f64 {
        self.total_rate
    }

    /// Distribution over potential event kinds given the action.
    pub fn event_pmf(&self, a: Action) -> [f64; 5] {
        let mu_served = if a == SERVE_CLASS_1 { self.mu1 } else { self.mu3 };
        let p1 = self.lambda1 / self.total_rate;
        let p3 = self.lambda3 / self.total_rate;
        let ps1 = mu_served / self.total_rate;
        let ps2 = self.mu2 / self.total_rate;
        [p1, p3, ps1, ps2, 1.0 - p1 - p3 - ps1 - ps2]
    }

    fn coin_states(&self) -> usize {
        if self.is_two_phase() {
            2
        } else {
            1
        }
    }
}

impl MixedEnvironment for CrissCross {
    fn name(&self) -> &str {
        if self.is_two_phase() {
            "crisscross2p"
        } else {
            "crisscross"
        }
    }

    fn signature(&self) -> String {
        match self.leave_prob {
            None => format!(
                "crisscross(lambda=({:?},{:?}),mu=({:?},{:?},{:?}))",
                self.lambda1, self.lambda3, self.mu1, self.mu2, self.mu3
            ),
            Some(p) => format!(
                "crisscross2p(lambda=({:?},{:?}),mu=({:?},{:?},{:?}),p={:?})",
                self.lambda1, self.lambda3, self.mu1, self.mu2, self.mu3, p
            ),
        }
    }

    fn num_codes(&self) -> usize {
        5 * self.coin_states()
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn pseudo_dim(&self) -> usize {
        // (q1, q2, q3) or (q1, q2, q3 phase 1, q3 phase 2)
        if self.is_two_phase() {
            4
        } else {
            3
        }
    }

    fn decode(&self, code: usize) -> StochasticState {
        if self.is_two_phase() {
            let kind = (code / 2) as i64;
            let coin = (code % 2) as i64;
            StochasticState { code, payload: vec![kind, coin] }
        } else {
            StochasticState { code, payload: vec![code as i64] }
        }
    }

    fn kernel_pmf(&self, _s: &StochasticState, a: Action) -> Vec<f64> {
        let kinds = self.event_pmf(a);
        match self.leave_prob {
            None => kinds.to_vec(),
            Some(p) => {
                // coin = 1 means "leave the system", drawn per event
                let mut pmf = Vec::with_capacity(10);
                for k in kinds {
                    pmf.push(k * (1.0 - p));
                    pmf.push(k * p);
                }
                pmf
            }
        }
    }

    fn g(
        &self,
        _s: &StochasticState,
        x: &PseudoState,
        a: Action,
        s_next: &StochasticState,
    ) -> PseudoState {
        let kind = EventKind::from_i64(s_next.payload[0]).expect("valid event kind");
        let mut q = x.q.clone();
        match self.leave_prob {
            None => match kind {
                EventKind::Arrival1 => q[0] += 1,
                EventKind::Arrival3 => q[2] += 1,
                EventKind::ServiceServer1 => {
                    if a == SERVE_CLASS_1 && q[0] > 0 {
                        q[0] -= 1;
                    } else if a == SERVE_CLASS_3 && q[2] > 0 {
                        q[2] -= 1;
                        q[1] += 1; // class 3 becomes class 2
                    }
                }
                EventKind::ServiceServer2 => {
                    if q[1] > 0 {
                        q[1] -= 1;
                    }
                }
                EventKind::Null => {}
            },
            Some(_) => {
                let leaves = s_next.payload[1] == 1;
                match kind {
                    EventKind::Arrival1 => q[0] += 1,
                    EventKind::Arrival3 => q[2] += 1, // arrivals enter phase 1
                    EventKind::ServiceServer1 => {
                        if a == SERVE_CLASS_1 && q[0] > 0 {
                            q[0] -= 1;
                        } else if a == SERVE_CLASS_3 {
                            // phase 2 ahead of phase 1: FIFO within the class
                            if q[3] > 0 {
                                q[3] -= 1;
                                q[1] += 1;
                            } else if q[2] > 0 {
                                q[2] -= 1;
                                if !leaves {
                                    q[3] += 1;
                                }
                            }
                        }
                    }
                    EventKind::ServiceServer2 => {
                        if q[1] > 0 {
                            q[1] -= 1;
                        }
                    }
                    EventKind::Null => {}
                }
            }
        }
        PseudoState { q }
    }

    fn cost(&self, _s: &StochasticState, x: &PseudoState, _a: Action) -> f64 {
        x.q.iter().sum::<i64>() as f64
    }

    fn initial_pmf(&self) -> (Vec<f64>, PseudoState) {
        // empty system: no jobs, null event pending
        let mut pmf = vec![0.0; self.num_codes()];
        let null_code = EventKind::Null as usize * self.coin_states();
        pmf[null_code] = 1.0;
        (pmf, PseudoState::zeros(self.pseudo_dim()))
    }

    fn max_cost_in(&self, bounds: &BoxBounds) -> f64 {
        bounds.upper().iter().sum::<i64>() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::env_step;
    use crate::seed::derive_rng;

    fn x3(q: [i64; 3]) -> PseudoState {
        PseudoState::new(q.to_vec())
    }

    #[test]
    fn benchmark_regime_pmf_normalizes() {
        let env = CrissCross::imbalanced_medium();
        assert!((env.uniformization_rate() - 6.7).abs() < 1e-12);
        for a in [SERVE_CLASS_1, SERVE_CLASS_3] {
            let pmf = env.event_pmf(a);
            assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(pmf.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn mu2_zero_means_no_server2_completions() {
        // mu2 -> 0 is outside the validated range, so check the limit shape
        // through a tiny but positive rate.
        let env = CrissCross::new(0.1, 0.1, 2.0, 1e-12, 2.0).unwrap();
        let pmf = env.event_pmf(SERVE_CLASS_1);
        assert!(pmf[EventKind::ServiceServer2 as usize] < 1e-12);
    }

    #[test]
    fn event_frequencies_match_pmf() {
        let env = CrissCross::imbalanced_medium();
        let s = env.decode(EventKind::Null as usize);
        let pmf = env.kernel_pmf(&s, SERVE_CLASS_3);
        let mut rng = derive_rng(5, "crisscross-kernel");
        let n = 100_000usize;
        let mut counts = vec![0usize; pmf.len()];
        for _ in 0..n {
            counts[env.kernel_sample(&s, SERVE_CLASS_3, &mut rng).code] += 1;
        }
        let tv: f64 = pmf
            .iter()
            .zip(&counts)
            .map(|(&p, &c)| (p - c as f64 / n as f64).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.01, "tv = {tv}");
    }

    #[test]
    fn gated_decrement_examples() {
        let env = CrissCross::imbalanced_medium();
        let any = env.decode(EventKind::Null as usize);
        let service = env.decode(EventKind::ServiceServer1 as usize);

        let out = env.g(&any, &x3([2, 1, 3]), SERVE_CLASS_1, &service);
        assert_eq!(out.q, vec![1, 1, 3]);

        // fictitious service on an empty queue
        let out = env.g(&any, &x3([0, 1, 3]), SERVE_CLASS_1, &service);
        assert_eq!(out.q, vec![0, 1, 3]);

        // class 3 completion routes to class 2
        let out = env.g(&any, &x3([1, 0, 2]), SERVE_CLASS_3, &service);
        assert_eq!(out.q, vec![1, 1, 1]);
    }

    #[test]
    fn arrivals_and_null_events() {
        let env = CrissCross::imbalanced_medium();
        let any = env.decode(EventKind::Null as usize);
        let arr1 = env.decode(EventKind::Arrival1 as usize);
        let arr3 = env.decode(EventKind::Arrival3 as usize);
        let null = env.decode(EventKind::Null as usize);
        assert_eq!(env.g(&any, &x3([0, 0, 0]), SERVE_CLASS_1, &arr1).q, vec![1, 0, 0]);
        assert_eq!(env.g(&any, &x3([0, 0, 0]), SERVE_CLASS_1, &arr3).q, vec![0, 0, 1]);
        assert_eq!(env.g(&any, &x3([4, 5, 6]), SERVE_CLASS_3, &null).q, vec![4, 5, 6]);
    }

    #[test]
    fn queues_stay_nonnegative() {
        let env = CrissCross::imbalanced_medium();
        let mut rng = derive_rng(17, "crisscross-nonneg");
        let (mut s, mut x) = env.sample_initial(&mut rng);
        for t in 0..20_000 {
            let a = Action::new(t % 2);
            let tr = env_step(&env, &s, &x, a, &mut rng).unwrap();
            assert!(tr.x_next.q.iter().all(|&v| v >= 0));
            s = tr.s_next;
            x = tr.x_next;
        }
    }

    #[test]
    fn class3_completion_feeds_class2_exactly() {
        // work conservation: q2 gains one job exactly when a class-3
        // completion is realized
        let env = CrissCross::imbalanced_medium();
        let mut rng = derive_rng(23, "crisscross-conserve");
        let (mut s, mut x) = env.sample_initial(&mut rng);
        for t in 0..20_000 {
            let a = Action::new((t / 3) % 2);
            let tr = env_step(&env, &s, &x, a, &mut rng).unwrap();
            let kind = EventKind::from_i64(tr.s_next.payload[0]).unwrap();
            let realized_class3 =
                kind == EventKind::ServiceServer1 && a == SERVE_CLASS_3 && x.q[2] > 0;
            let dq2 = tr.x_next.q[1] - x.q[1];
            let server2 = kind == EventKind::ServiceServer2;
            if realized_class3 {
                assert_eq!(dq2, 1);
            } else if !server2 {
                assert_eq!(dq2, 0);
            }
            s = tr.s_next;
            x = tr.x_next;
        }
    }

    #[test]
    fn two_phase_routing_per_coin() {
        let env = CrissCross::two_phase(0.6, 0.6, 2.0, 1.5, 2.0, 0.8).unwrap();
        assert_eq!(env.pseudo_dim(), 4);
        assert_eq!(env.num_codes(), 10);
        let any = env.decode(EventKind::Null as usize * 2);
        let stay = env.decode(EventKind::ServiceServer1 as usize * 2); // coin 0
        let leave = env.decode(EventKind::ServiceServer1 as usize * 2 + 1); // coin 1

        // phase-1 completion continues to phase 2 on coin 0
        let out = env.g(&any, &PseudoState::new(vec![0, 0, 2, 0]), SERVE_CLASS_3, &stay);
        assert_eq!(out.q, vec![0, 0, 1, 1]);
        // ... and leaves on coin 1
        let out = env.g(&any, &PseudoState::new(vec![0, 0, 2, 0]), SERVE_CLASS_3, &leave);
        assert_eq!(out.q, vec![0, 0, 1, 0]);
        // phase 2 is served before phase 1 and feeds class 2 regardless of coin
        let out = env.g(&any, &PseudoState::new(vec![0, 0, 2, 1]), SERVE_CLASS_3, &leave);
        assert_eq!(out.q, vec![0, 1, 2, 0]);
        // class-1 service untouched by the coin
        let out = env.g(&any, &PseudoState::new(vec![3, 0, 0, 0]), SERVE_CLASS_1, &leave);
        assert_eq!(out.q, vec![2, 0, 0, 0]);
    }

    #[test]
    fn two_phase_coin_marginal() {
        let env = CrissCross::two_phase(0.6, 0.6, 2.0, 1.5, 2.0, 0.8).unwrap();
        let s = env.decode(0);
        let pmf = env.kernel_pmf(&s, SERVE_CLASS_1);
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let leave_mass: f64 = pmf.iter().skip(1).step_by(2).sum();
        assert!((leave_mass - 0.8).abs() < 1e-12);
    }

    #[test]
    fn rejects_unsupportable_load() {
        assert!(CrissCross::new(2.0, 0.6, 2.0, 1.5, 2.0).is_err());
        assert!(CrissCross::new(0.6, 1.9, 2.0, 1.5, 2.0).is_err());
        assert!(CrissCross::new(0.6, 0.6, 2.0, 0.5, 2.0).is_err());
    }
}
