//! Augmented sample generator.
//!
//! Every real transition `(s, x, a, r, s', x')` pins down the stochastic part
//! of one step of the system. Because the cost function and the pseudo-state
//! update `g` are known, the same step can be replayed from *any*
//! pseudo-state: draw `x_hat ~ beta`, set `r_hat = R(s, x_hat, a)` and
//! `x_hat' = g(s, x_hat, a, s')`, and the result is a true transition of the
//! system that happens to start from `x_hat`. [`asg`] expands each real
//! sample into `m` such virtual samples, multiplying the effective coverage
//! of the pseudo-state space without touching the kernel.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::grid::BoxBounds;
use crate::mdp::{MixedEnvironment, PseudoState, Transition};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Source of virtual pseudo-states (the distribution beta).
pub trait PseudoSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> PseudoState;
}

/// Built-in beta distributions. All variants produce integer vectors inside
/// their bounding box, so every point of the box has positive probability
/// under `UniformBox` (exactly `1 / |B|`).
#[derive(Debug, Clone)]
pub enum BetaSampler {
    /// Uniform over the lattice points of the box.
    UniformBox { bounds: BoxBounds },
    /// Independent per-dimension truncated geometric: `P(k) ~ rate^k` on
    /// `0..=upper_d`. Smaller values more likely for `rate < 1`.
    TruncatedGeometric { rate: f64, bounds: BoxBounds },
    /// Diagonal normal fitted to observed pseudo-states, rounded to integers;
    /// out-of-box draws are rejected and redrawn (clamped after 64 tries).
    GaussianFit {
        mean: Vec<f64>,
        std: Vec<f64>,
        bounds: BoxBounds,
    },
}

impl BetaSampler {
    pub fn uniform(bounds: BoxBounds) -> Self {
        Self::UniformBox { bounds }
    }

    pub fn truncated_geometric(rate: f64, bounds: BoxBounds) -> Result<Self> {
        if !(0.0 < rate && rate < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "truncated-geometric rate must be in (0,1), got {rate}"
            )));
        }
        Ok(Self::TruncatedGeometric { rate, bounds })
    }

    /// Fit a diagonal Gaussian to the real pseudo-states of `data`.
    pub fn gaussian_fit(data: &Dataset, bounds: BoxBounds) -> Result<Self> {
        let xs: Vec<&PseudoState> = data
            .transitions()
            .iter()
            .filter(|t| !t.virtual_flag)
            .map(|t| &t.x)
            .collect();
        if xs.is_empty() {
            return Err(Error::InvalidConfig("gaussian-fit needs at least one real sample".into()));
        }
        let dim = bounds.dim();
        if xs.iter().any(|x| x.q.len() != dim) {
            return Err(Error::InvalidConfig("gaussian-fit: dataset dimension differs from bounds".into()));
        }
        let n = xs.len() as f64;
        let mut mean = vec![0.0; dim];
        for x in &xs {
            for (m, &v) in mean.iter_mut().zip(&x.q) {
                *m += v as f64 / n;
            }
        }
        let mut std = vec![0.0; dim];
        for x in &xs {
            for (s, (&v, m)) in std.iter_mut().zip(x.q.iter().zip(&mean)) {
                *s += (v as f64 - m).powi(2) / n;
            }
        }
        for s in &mut std {
            *s = s.sqrt();
        }
        Ok(Self::GaussianFit { mean, std, bounds })
    }

    pub fn bounds(&self) -> &BoxBounds {
        match self {
            Self::UniformBox { bounds }
            | Self::TruncatedGeometric { bounds, .. }
            | Self::GaussianFit { bounds, .. } => bounds,
        }
    }

    /// Exact pmf over the box lattice (indexed like [`BoxBounds::index_of`]),
    /// available for the closed-form variants.
    pub fn pmf(&self) -> Option<Vec<f64>> {
        match self {
            Self::UniformBox { bounds } => {
                let n = bounds.n_points();
                Some(vec![1.0 / n as f64; n])
            }
            Self::TruncatedGeometric { rate, bounds } => {
                let per_dim: Vec<Vec<f64>> = bounds
                    .upper()
                    .iter()
                    .map(|&u| {
                        let mut w: Vec<f64> = (0..=u).map(|k| rate.powi(k as i32)).collect();
                        let total: f64 = w.iter().sum();
                        w.iter_mut().for_each(|v| *v /= total);
                        w
                    })
                    .collect();
                let mut pmf = vec![0.0; bounds.n_points()];
                for (i, p) in pmf.iter_mut().enumerate() {
                    let point = bounds.point(i);
                    *p = point
                        .q
                        .iter()
                        .zip(&per_dim)
                        .map(|(&k, w)| w[k as usize])
                        .product();
                }
                Some(pmf)
            }
            Self::GaussianFit { .. } => None,
        }
    }
}

impl PseudoSampler for BetaSampler {
    fn sample(&self, rng: &mut ChaCha8Rng) -> PseudoState {
        match self {
            Self::UniformBox { bounds } => PseudoState::new(
                bounds.upper().iter().map(|&u| rng.gen_range(0..=u)).collect(),
            ),
            Self::TruncatedGeometric { rate, bounds } => PseudoState::new(
                bounds
                    .upper()
                    .iter()
                    .map(|&u| {
                        // inverse CDF of the renormalized geometric on 0..=u
                        let z = 1.0 - rate.powi(u as i32 + 1);
                        let t: f64 = rng.gen::<f64>() * z;
                        let k = (1.0 - t).ln() / rate.ln();
                        (k.floor() as i64).clamp(0, u)
                    })
                    .collect(),
            ),
            Self::GaussianFit { mean, std, bounds } => {
                for _ in 0..64 {
                    let draw = PseudoState::new(
                        mean.iter()
                            .zip(std)
                            .map(|(&m, &s)| {
                                let z = rand_distr::StandardNormal;
                                let n: f64 = rng.sample(z);
                                (m + s * n).round() as i64
                            })
                            .collect(),
                    );
                    if bounds.contains(&draw) {
                        return draw;
                    }
                }
                let fallback = PseudoState::new(mean.iter().map(|&m| m.round() as i64).collect());
                bounds.clamp(&fallback)
            }
        }
    }
}

/// Draw one virtual pseudo-state from beta.
pub fn beta_sample(beta: &dyn PseudoSampler, rng: &mut ChaCha8Rng) -> PseudoState {
    beta.sample(rng)
}

/// Check that a transition replays exactly under the environment's R and g.
fn check_consistent(env: &dyn MixedEnvironment, t: &Transition, index: usize) -> Result<()> {
    let r = env.cost(&t.s, &t.x, t.a);
    if r != t.r {
        return Err(Error::InconsistentTransition {
            index,
            detail: format!("stored cost {} but R(s,x,a) = {r}", t.r),
        });
    }
    let x_next = env.g(&t.s, &t.x, t.a, &t.s_next);
    if x_next != t.x_next {
        return Err(Error::InconsistentTransition {
            index,
            detail: format!("stored x' {:?} but g(s,x,a,s') = {:?}", t.x_next.q, x_next.q),
        });
    }
    Ok(())
}

/// Expand `data` with `m` virtual samples per real sample.
///
/// Output layout: each real sample is followed immediately by its `m`
/// children, so `|output| = |data| * (m + 1)`. Virtual samples keep the
/// parent's `(s, a, s')` triple, carry recomputed cost and next pseudo-state,
/// and are flagged. Inputs are validated against the environment first; an
/// inconsistent transition fails with its line index.
pub fn asg(
    data: &Dataset,
    m: usize,
    beta: &dyn PseudoSampler,
    env: &dyn MixedEnvironment,
    rng: &mut ChaCha8Rng,
) -> Result<Dataset> {
    let expected = env.signature();
    if data.env_signature() != expected {
        return Err(Error::SignatureMismatch {
            expected,
            got: data.env_signature().to_string(),
        });
    }
    for (i, t) in data.transitions().iter().enumerate() {
        check_consistent(env, t, i)?;
    }
    let mut out = Vec::with_capacity(data.len() * (m + 1));
    for (i, t) in data.transitions().iter().enumerate() {
        out.push(t.clone());
        for _ in 0..m {
            let x_hat = beta.sample(rng);
            let r_hat = env.cost(&t.s, &x_hat, t.a);
            let x_hat_next = env.g(&t.s, &x_hat, t.a, &t.s_next);
            out.push(Transition {
                s: t.s.clone(),
                x: x_hat,
                a: t.a,
                r: r_hat,
                s_next: t.s_next.clone(),
                x_next: x_hat_next,
                virtual_flag: true,
                parent: Some(i),
            });
        }
    }
    Ok(Dataset::new(data.env_signature().to_string(), out))
}
