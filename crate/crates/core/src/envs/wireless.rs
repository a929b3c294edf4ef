//! Wireless downlink scheduling environment.
//!
//! Each slot, queue `i` receives a Poisson number of packets (truncated at
//! `arrival_cap`) and the scheduled queue drains up to its channel rate:
//!
//! `q'(i) = max(q(i) + arrivals(i) - channel(i) * 1{a = i}, 0)`
//!
//! The stochastic state is the (arrivals, channel) pair the scheduler sees
//! before acting; queue lengths are the pseudo-stochastic state, and the cost
//! is the total queue length. The channel is fixed by default; an i.i.d.
//! finite-choice channel model is available for richer setups.

use crate::error::{Error, Result};
use crate::grid::BoxBounds;
use crate::mdp::{sample_index, Action, MixedEnvironment, PseudoState, StochasticState};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Queue update rule: arrivals in, scheduled channel out, floored at zero.
pub fn wireless_g(arrivals: &[i64], channel: &[i64], q: &[i64], a: Action) -> PseudoState {
    PseudoState {
        q: q.iter()
            .enumerate()
            .map(|(i, &qi)| {
                let served = if a.index == i { channel[i] } else { 0 };
                (qi + arrivals[i] - served).max(0)
            })
            .collect(),
    }
}

/// Downlink network with one queue per mobile.
#[derive(Debug, Clone)]
pub struct WirelessDownlink {
    lambda: Vec<f64>,
    channel_options: Vec<Vec<i64>>,
    channel_weights: Vec<f64>,
    arrival_cap: i64,
    arrival_pmfs: Vec<Vec<f64>>,
    dim: usize,
}

impl WirelessDownlink {
    /// Fixed channel rates; `arrival_cap = None` picks the smallest cap whose
    /// truncated Poisson tail is below 1e-9.
    pub fn new(lambda: Vec<f64>, channel: Vec<i64>, arrival_cap: Option<i64>) -> Result<Self> {
        Self::with_channel_options(lambda, vec![channel], vec![1.0], arrival_cap)
    }

    /// Channel drawn i.i.d. each slot from a finite set of rate vectors.
    pub fn with_channel_options(
        lambda: Vec<f64>,
        channel_options: Vec<Vec<i64>>,
        channel_weights: Vec<f64>,
        arrival_cap: Option<i64>,
    ) -> Result<Self> {
        let dim = lambda.len();
        if dim == 0 {
            return Err(Error::InvalidConfig("wireless: need at least one queue".into()));
        }
        if lambda.iter().any(|&l| l <= 0.0 || !l.is_finite()) {
            return Err(Error::InvalidConfig(format!("wireless: arrival rates must be > 0, got {lambda:?}")));
        }
        if channel_options.is_empty()
            || channel_options.iter().any(|o| o.len() != dim || o.iter().any(|&c| c < 0))
        {
            return Err(Error::InvalidConfig("wireless: channel options must be non-negative vectors of queue dimension".into()));
        }
        if channel_weights.len() != channel_options.len()
            || channel_weights.iter().any(|&w| w < 0.0 || !w.is_finite())
            || channel_weights.iter().sum::<f64>() <= 0.0
        {
            return Err(Error::InvalidConfig("wireless: channel weights must be non-negative with positive sum".into()));
        }
        let total: f64 = channel_weights.iter().sum();
        let channel_weights: Vec<f64> = channel_weights.iter().map(|w| w / total).collect();
        let lambda_max = lambda.iter().cloned().fold(0.0, f64::max);
        let cap = match arrival_cap {
            Some(c) if c >= 1 => c,
            Some(c) => {
                return Err(Error::InvalidConfig(format!("wireless: arrival_cap must be >= 1, got {c}")));
            }
            None => default_cap(lambda_max),
        };
        let arrival_pmfs = lambda.iter().map(|&l| truncated_poisson_pmf(l, cap)).collect();
        Ok(Self {
            lambda,
            channel_options,
            channel_weights,
            arrival_cap: cap,
            arrival_pmfs,
            dim,
        })
    }

    pub fn arrival_cap(&self) -> i64 {
        self.arrival_cap
    }

    pub fn queues(&self) -> usize {
        self.dim
    }

    fn arrivals_per_dim(&self) -> usize {
        self.arrival_cap as usize + 1
    }

    fn encode(&self, arrivals: &[i64], option: usize) -> usize {
        let mut idx = 0usize;
        for &a in arrivals {
            idx = idx * self.arrivals_per_dim() + a as usize;
        }
        idx * self.channel_options.len() + option
    }
}

/// Smallest cap with `P(Poisson(lambda) > cap) < 1e-9`.
fn default_cap(lambda: f64) -> i64 {
    let mut pmf = (-lambda).exp();
    let mut cdf = pmf;
    let mut k = 0i64;
    while 1.0 - cdf >= 1e-9 && k < 10_000 {
        k += 1;
        pmf *= lambda / k as f64;
        cdf += pmf;
    }
    k.max(1)
}

/// Poisson pmf restricted to `0..=cap` and renormalized.
fn truncated_poisson_pmf(lambda: f64, cap: i64) -> Vec<f64> {
    let mut pmf = Vec::with_capacity(cap as usize + 1);
    let mut p = (-lambda).exp();
    pmf.push(p);
    for k in 1..=cap {
        p *= lambda / k as f64;
        pmf.push(p);
    }
    let total: f64 = pmf.iter().sum();
    for p in &mut pmf {
        *p /= total;
    }
    pmf
}

impl MixedEnvironment for WirelessDownlink {
    fn name(&self) -> &str {
        "wireless"
    }

    fn signature(&self) -> String {
        format!(
            "wireless(lambda={:?},channel={:?},weights={:?},cap={})",
            self.lambda, self.channel_options, self.channel_weights, self.arrival_cap
        )
    }

    fn num_codes(&self) -> usize {
        self.arrivals_per_dim().pow(self.dim as u32) * self.channel_options.len()
    }

    fn num_actions(&self) -> usize {
        self.dim
    }

    fn pseudo_dim(&self) -> usize {
        self.dim
    }

    fn decode(&self, code: usize) -> StochasticState {
        let option = code % self.channel_options.len();
        let mut rest = code / self.channel_options.len();
        let mut arrivals = vec![0i64; self.dim];
        for slot in arrivals.iter_mut().rev() {
            *slot = (rest % self.arrivals_per_dim()) as i64;
            rest /= self.arrivals_per_dim();
        }
        let mut payload = arrivals;
        payload.extend_from_slice(&self.channel_options[option]);
        StochasticState { code, payload }
    }

    fn kernel_pmf(&self, _s: &StochasticState, _a: Action) -> Vec<f64> {
        // Arrivals and channel are i.i.d. across slots.
        let mut pmf = vec![0.0; self.num_codes()];
        for code in 0..self.num_codes() {
            let st = self.decode(code);
            let mut p = self.channel_weights[code % self.channel_options.len()];
            for d in 0..self.dim {
                p *= self.arrival_pmfs[d][st.payload[d] as usize];
            }
            pmf[code] = p;
        }
        pmf
    }

    fn kernel_sample(&self, _s: &StochasticState, _a: Action, rng: &mut ChaCha8Rng) -> StochasticState {
        let mut arrivals = vec![0i64; self.dim];
        for d in 0..self.dim {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let pmf = &self.arrival_pmfs[d];
            let mut k = pmf.len() - 1;
            for (i, &p) in pmf.iter().enumerate() {
                acc += p;
                if u < acc {
                    k = i;
                    break;
                }
            }
            arrivals[d] = k as i64;
        }
        let option = sample_index(&self.channel_weights, rng);
        self.decode(self.encode(&arrivals, option))
    }

    fn g(
        &self,
        s: &StochasticState,
        x: &PseudoState,
        a: Action,
        _s_next: &StochasticState,
    ) -> PseudoState {
        // The scheduler sees this slot's arrivals and channel in s itself.
        let arrivals = &s.payload[..self.dim];
        let channel = &s.payload[self.dim..];
        wireless_g(arrivals, channel, &x.q, a)
    }

    fn cost(&self, _s: &StochasticState, x: &PseudoState, _a: Action) -> f64 {
        x.q.iter().sum::<i64>() as f64
    }

    fn initial_pmf(&self) -> (Vec<f64>, PseudoState) {
        // Empty queues; the first (arrivals, channel) draw follows the slot law.
        let dummy = self.decode(0);
        (self.kernel_pmf(&dummy, Action::new(0)), PseudoState::zeros(self.dim))
    }

    fn max_cost_in(&self, bounds: &BoxBounds) -> f64 {
        bounds.upper().iter().sum::<i64>() as f64
    }
}
